#include "aishare/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

#include "aishare/csv.hpp"
#include "aishare/errors.hpp"

namespace aishare::ingest {

namespace {

std::optional<std::int64_t> parse_count(std::string_view text) {
  std::int64_t value = 0;
  auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || p != text.data() + text.size() || value < 0) {
    return std::nullopt;
  }
  return value;
}

std::optional<double> parse_real(std::string_view text) {
  double value = 0.0;
  auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || p != text.data() + text.size()) {
    return std::nullopt;
  }
  return value;
}

std::optional<int> parse_year(std::string_view text) {
  if (text.size() != 4) {
    return std::nullopt;
  }
  int year = 0;
  auto [p, ec] = std::from_chars(text.data(), text.data() + 4, year);
  if (ec != std::errc{} || p != text.data() + 4) {
    return std::nullopt;
  }
  return year;
}

std::string cell_key_token(const Cell& cell) {
  if (auto* id = std::get_if<EconomyId>(&cell)) {
    return id->str();
  }
  if (auto* period = std::get_if<Period>(&cell)) {
    return period->str();
  }
  if (auto* text = std::get_if<std::string>(&cell)) {
    return *text;
  }
  if (auto* count = std::get_if<std::int64_t>(&cell)) {
    return std::to_string(*count);
  }
  if (auto* real = std::get_if<double>(&cell)) {
    return csv::format_real(*real, 17);
  }
  return "";
}

std::string row_key(const Row& row, const std::vector<std::size_t>& key_columns) {
  std::string key;
  for (std::size_t column : key_columns) {
    key += cell_key_token(row.cells[column]);
    key.push_back('\x1f');
  }
  return key;
}

}  // namespace

void TableSchema::validate() const {
  std::set<std::string> seen;
  for (const auto& column : columns) {
    if (!seen.insert(column.name).second) {
      throw ConfigError("schema '" + name + "': duplicate column '" + column.name + "'");
    }
  }
  for (const auto& key_name : key) {
    auto idx = column_index(key_name);
    if (!idx) {
      throw ConfigError("schema '" + name + "': key column '" + key_name + "' not defined");
    }
    if (!columns[*idx].required) {
      throw ConfigError("schema '" + name + "': key column '" + key_name + "' must be required");
    }
  }
}

std::optional<std::size_t> TableSchema::column_index(std::string_view name) const {
  for (std::size_t i = 0; i < columns.size(); ++i) {
    if (columns[i].name == name) {
      return i;
    }
  }
  return std::nullopt;
}

std::int64_t IngestReport::rejected_row_count() const {
  std::set<std::pair<std::string, std::size_t>> seen;
  for (const auto& error : errors) {
    seen.insert({error.file, error.line});
  }
  return static_cast<std::int64_t>(seen.size());
}

std::pair<Table, IngestReport> load_table(const std::filesystem::path& path,
                                          const TableSchema& schema) {
  schema.validate();

  std::ifstream in(path);
  if (!in) {
    throw InputError("cannot open " + path.string());
  }
  const std::string file_label = path.filename().string();

  Table table;
  table.schema = schema;
  IngestReport report;

  std::string line;
  std::size_t line_no = 0;

  // Header.
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') {
      continue;
    }
    header = csv::split_line(line);
    break;
  }
  if (header.empty()) {
    throw InputError(file_label + ": missing header row");
  }

  // Map schema columns onto header positions; extra columns are noted.
  std::vector<std::optional<std::size_t>> positions(schema.columns.size());
  for (std::size_t i = 0; i < schema.columns.size(); ++i) {
    auto it = std::find(header.begin(), header.end(), schema.columns[i].name);
    if (it != header.end()) {
      positions[i] = static_cast<std::size_t>(it - header.begin());
    } else if (schema.columns[i].required) {
      throw InputError(file_label + ": malformed header, missing required column '" +
                       schema.columns[i].name + "'");
    }
  }
  for (const auto& name : header) {
    if (!schema.column_index(name)) {
      report.notes.push_back(file_label + ": extra column '" + name + "' ignored");
    }
  }

  std::vector<std::size_t> key_columns;
  for (const auto& key_name : schema.key) {
    key_columns.push_back(*schema.column_index(key_name));
  }

  std::set<std::string> seen_keys;
  std::int64_t annual_fills = 0;

  auto economy_column = schema.column_index("economy");
  auto period_column_name =
      schema.name == "regions" ? std::optional<std::size_t>{} : schema.column_index("period");

  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') {
      continue;
    }
    ++report.rows_read;
    auto fields = csv::split_line(line);
    if (fields.size() != header.size()) {
      std::ostringstream msg;
      msg << "expected " << header.size() << " fields, found " << fields.size();
      report.errors.push_back({file_label, line_no, msg.str()});
      continue;
    }

    Row row;
    row.line = line_no;
    row.cells.resize(schema.columns.size());
    bool row_ok = true;
    std::vector<Period> annual_expansion;  // non-empty for "YYYY" period rows

    for (std::size_t i = 0; i < schema.columns.size() && row_ok; ++i) {
      const auto& column = schema.columns[i];
      if (!positions[i]) {
        row.cells[i] = std::monostate{};
        continue;
      }
      const std::string& raw = fields[*positions[i]];
      if (raw.empty()) {
        if (column.required) {
          report.errors.push_back(
              {file_label, line_no, "missing value for required column '" + column.name + "'"});
          row_ok = false;
        } else {
          row.cells[i] = std::monostate{};
        }
        continue;
      }
      switch (column.type) {
        case ColumnType::economy: {
          auto id = EconomyId::parse(raw);
          if (!id) {
            report.errors.push_back(
                {file_label, line_no, column.name + " is not a valid economy code: '" + raw + "'"});
            row_ok = false;
          } else {
            row.cells[i] = *id;
          }
          break;
        }
        case ColumnType::period: {
          auto period = Period::parse(raw);
          if (period) {
            row.cells[i] = *period;
            break;
          }
          if (schema.allow_annual_periods) {
            if (auto year = parse_year(raw)) {
              for (int month = 1; month <= 12; ++month) {
                annual_expansion.push_back(Period{*year, month});
              }
              row.cells[i] = Period{*year, 1};  // placeholder, replaced per expansion
              break;
            }
          }
          report.errors.push_back(
              {file_label, line_no, column.name + " is not a valid period: '" + raw + "'"});
          row_ok = false;
          break;
        }
        case ColumnType::count: {
          auto value = parse_count(raw);
          if (!value) {
            report.errors.push_back(
                {file_label, line_no, column.name + " is not a nonnegative integer: '" + raw + "'"});
            row_ok = false;
          } else {
            row.cells[i] = *value;
          }
          break;
        }
        case ColumnType::fraction: {
          auto value = parse_real(raw);
          if (!value || *value < 0.0 || *value > 1.0) {
            report.errors.push_back(
                {file_label, line_no, column.name + " out of [0,1]: '" + raw + "'"});
            row_ok = false;
          } else {
            row.cells[i] = *value;
          }
          break;
        }
        case ColumnType::nonneg_real: {
          auto value = parse_real(raw);
          if (!value || *value < 0.0) {
            report.errors.push_back(
                {file_label, line_no, column.name + " is not a nonnegative number: '" + raw + "'"});
            row_ok = false;
          } else {
            row.cells[i] = *value;
          }
          break;
        }
        case ColumnType::boolean: {
          if (raw == "0" || raw == "false") {
            row.cells[i] = std::int64_t{0};
          } else if (raw == "1" || raw == "true") {
            row.cells[i] = std::int64_t{1};
          } else {
            report.errors.push_back(
                {file_label, line_no, column.name + " is not a boolean: '" + raw + "'"});
            row_ok = false;
          }
          break;
        }
        case ColumnType::text: {
          row.cells[i] = raw;
          break;
        }
      }
    }

    if (!row_ok) {
      continue;
    }

    auto emit = [&](Row&& expanded) {
      std::string key = row_key(expanded, key_columns);
      if (!seen_keys.insert(key).second) {
        return false;
      }
      if (economy_column && period_column_name) {
        // Coverage is tracked per period.
        if (auto* period = std::get_if<Period>(&expanded.cells[*period_column_name])) {
          report.coverage[*period] += 1;
        }
      }
      table.rows.push_back(std::move(expanded));
      return true;
    };

    bool accepted = false;
    if (annual_expansion.empty()) {
      accepted = emit(std::move(row));
      if (!accepted) {
        report.errors.push_back({file_label, line_no, "duplicate key"});
      }
    } else {
      auto period_col = *period_column_name;
      std::vector<std::string> skipped_months;
      for (const Period& month : annual_expansion) {
        Row copy = row;
        copy.cells[period_col] = month;
        if (emit(std::move(copy))) {
          accepted = true;
        } else {
          skipped_months.push_back(month.str());
        }
      }
      if (!accepted) {
        report.errors.push_back({file_label, line_no, "duplicate key"});
      } else {
        ++annual_fills;
        if (!skipped_months.empty()) {
          std::string joined;
          for (const auto& month : skipped_months) {
            joined += joined.empty() ? month : ", " + month;
          }
          report.notes.push_back(file_label + " line " + std::to_string(line_no) +
                                 ": annual fill skipped months already present (" + joined + ")");
        }
      }
    }
    if (accepted) {
      ++report.rows_accepted;
    }
  }

  if (annual_fills > 0) {
    report.notes.push_back(file_label + ": " + std::to_string(annual_fills) +
                           " annual row(s) forward-filled to monthly periods");
  }
  return {std::move(table), std::move(report)};
}

const TableSchema& telemetry_schema() {
  static const TableSchema schema{
      "telemetry",
      {{"economy", ColumnType::economy},
       {"period", ColumnType::period},
       {"active_users", ColumnType::count},
       {"ai_users", ColumnType::count},
       {"opt_in_rate", ColumnType::fraction},
       {"mad", ColumnType::count}},
      {"economy", "period"},
      false};
  return schema;
}

const TableSchema& market_schema() {
  static const TableSchema schema{
      "market",
      {{"economy", ColumnType::economy},
       {"period", ColumnType::period},
       {"windows_market_share", ColumnType::fraction},
       {"mobile_desktop_ratio", ColumnType::nonneg_real}},
      {"economy", "period"},
      true};
  return schema;
}

const TableSchema& population_schema() {
  static const TableSchema schema{
      "population",
      {{"economy", ColumnType::economy},
       {"period", ColumnType::period},
       {"working_age_pop", ColumnType::count},
       {"total_pop", ColumnType::count}},
      {"economy", "period"},
      true};
  return schema;
}

const TableSchema& context_schema() {
  static const TableSchema schema{
      "context",
      {{"economy", ColumnType::economy},
       {"period", ColumnType::period},
       {"internet_penetration", ColumnType::fraction, false},
       {"gdp_per_capita", ColumnType::nonneg_real, false}},
      {"economy", "period"},
      true};
  return schema;
}

const TableSchema& regions_schema() {
  static const TableSchema schema{
      "regions",
      {{"region", ColumnType::economy},
       {"name", ColumnType::text},
       {"member", ColumnType::economy}},
      {"region", "member"},
      false};
  return schema;
}

namespace {

struct ReferenceIndex {
  std::map<std::pair<EconomyId, Period>, const Row*> rows;

  static ReferenceIndex build(const Table& table) {
    ReferenceIndex index;
    auto economy_col = *table.schema.column_index("economy");
    auto period_col = *table.schema.column_index("period");
    for (const auto& row : table.rows) {
      auto economy = std::get<EconomyId>(row.cells[economy_col]);
      auto period = std::get<Period>(row.cells[period_col]);
      index.rows.emplace(std::make_pair(economy, period), &row);
    }
    return index;
  }

  const Row* find(const EconomyId& economy, const Period& period) const {
    auto it = rows.find({economy, period});
    return it == rows.end() ? nullptr : it->second;
  }
};

double real_cell(const Table& table, const Row& row, std::string_view column) {
  return std::get<double>(row.cells[*table.schema.column_index(column)]);
}

std::int64_t count_cell(const Table& table, const Row& row, std::string_view column) {
  return std::get<std::int64_t>(row.cells[*table.schema.column_index(column)]);
}

std::optional<double> optional_real_cell(const Table& table, const Row& row,
                                         std::string_view column) {
  const Cell& cell = row.cells[*table.schema.column_index(column)];
  if (auto* value = std::get_if<double>(&cell)) {
    return *value;
  }
  return std::nullopt;
}

}  // namespace

JoinResult join_snapshots(const Table& telemetry, const Table& market,
                          const Table& population, const Table* context) {
  JoinResult result;
  auto& report = result.report;

  auto market_index = ReferenceIndex::build(market);
  auto population_index = ReferenceIndex::build(population);
  ReferenceIndex context_index;
  if (context != nullptr) {
    context_index = ReferenceIndex::build(*context);
  }

  auto economy_col = *telemetry.schema.column_index("economy");
  auto period_col = *telemetry.schema.column_index("period");

  // Deterministic order: sort telemetry rows by (economy, period).
  std::vector<const Row*> rows;
  rows.reserve(telemetry.rows.size());
  for (const auto& row : telemetry.rows) {
    rows.push_back(&row);
  }
  std::sort(rows.begin(), rows.end(), [&](const Row* a, const Row* b) {
    auto ka = std::make_pair(std::get<EconomyId>(a->cells[economy_col]),
                             std::get<Period>(a->cells[period_col]));
    auto kb = std::make_pair(std::get<EconomyId>(b->cells[economy_col]),
                             std::get<Period>(b->cells[period_col]));
    return ka < kb;
  });

  for (const Row* row : rows) {
    ++report.rows_read;
    auto economy = std::get<EconomyId>(row->cells[economy_col]);
    auto period = std::get<Period>(row->cells[period_col]);
    const std::string where = economy.str() + " " + period.str();

    const Row* market_row = market_index.find(economy, period);
    const Row* population_row = population_index.find(economy, period);
    if (market_row == nullptr || population_row == nullptr) {
      std::string missing;
      if (market_row == nullptr) {
        missing += "market";
      }
      if (population_row == nullptr) {
        missing += missing.empty() ? "population" : ", population";
      }
      report.errors.push_back(
          {"telemetry", row->line, "missing reference (" + missing + ") for " + where});
      continue;
    }

    EconomySnapshot snapshot;
    snapshot.telemetry = TelemetryAggregate{
        economy,
        period,
        count_cell(telemetry, *row, "active_users"),
        count_cell(telemetry, *row, "ai_users"),
        real_cell(telemetry, *row, "opt_in_rate"),
        count_cell(telemetry, *row, "mad")};
    snapshot.reference = ReferenceRecord{
        economy,
        period,
        real_cell(market, *market_row, "windows_market_share"),
        real_cell(market, *market_row, "mobile_desktop_ratio"),
        count_cell(population, *population_row, "working_age_pop"),
        std::nullopt,
        std::nullopt,
        count_cell(population, *population_row, "total_pop")};
    if (context != nullptr) {
      if (const Row* context_row = context_index.find(economy, period)) {
        snapshot.reference.internet_penetration =
            optional_real_cell(*context, *context_row, "internet_penetration");
        snapshot.reference.gdp_per_capita =
            optional_real_cell(*context, *context_row, "gdp_per_capita");
      }
    }

    auto violations = validate_snapshot(snapshot);
    if (!violations.empty()) {
      for (const auto& violation : violations) {
        report.errors.push_back({"telemetry", row->line,
                                 "invariant '" + violation.rule + "' violated for " + where +
                                     " (observed " + violation.observed + ")"});
      }
      continue;
    }

    result.snapshots[period].push_back(std::move(snapshot));
    ++report.rows_accepted;
  }

  for (auto& [period, snapshots] : result.snapshots) {
    std::sort(snapshots.begin(), snapshots.end(),
              [](const EconomySnapshot& a, const EconomySnapshot& b) {
                return a.telemetry.economy < b.telemetry.economy;
              });
    report.coverage[period] = static_cast<int>(snapshots.size());
  }
  return result;
}

std::pair<std::vector<RegionDef>, IngestReport> assemble_regions(const Table& regions) {
  IngestReport report;
  auto region_col = *regions.schema.column_index("region");
  auto name_col = *regions.schema.column_index("name");
  auto member_col = *regions.schema.column_index("member");

  std::map<EconomyId, RegionDef> by_region;
  std::map<EconomyId, EconomyId> member_owner;

  for (const auto& row : regions.rows) {
    ++report.rows_read;
    auto region = std::get<EconomyId>(row.cells[region_col]);
    auto member = std::get<EconomyId>(row.cells[member_col]);
    auto name = std::get<std::string>(row.cells[name_col]);

    if (!region.is_region()) {
      report.errors.push_back(
          {"regions", row.line, "region id must carry the R- prefix: '" + region.str() + "'"});
      continue;
    }
    if (member.is_region()) {
      report.errors.push_back(
          {"regions", row.line, "region member cannot itself be a region: '" + member.str() + "'"});
      continue;
    }
    auto owner = member_owner.find(member);
    if (owner != member_owner.end() && owner->second != region) {
      report.errors.push_back({"regions", row.line,
                               "member " + member.str() + " already assigned to " +
                                   owner->second.str()});
      continue;
    }

    auto& def = by_region[region];
    if (def.members.empty()) {
      def.region = region;
      def.name = name;
    } else if (def.name != name) {
      report.notes.push_back("regions: inconsistent name for " + region.str() +
                             " ('" + name + "' vs '" + def.name + "'), keeping first");
    }
    def.members.push_back(member);
    member_owner.emplace(member, region);
    ++report.rows_accepted;
  }

  std::vector<RegionDef> out;
  for (auto& [region, def] : by_region) {
    if (def.members.size() < 2) {
      report.errors.push_back(
          {"regions", 0, "region " + region.str() + " has fewer than 2 members, dropped"});
      continue;
    }
    std::sort(def.members.begin(), def.members.end());
    out.push_back(std::move(def));
  }
  return {std::move(out), std::move(report)};
}

}  // namespace aishare::ingest
