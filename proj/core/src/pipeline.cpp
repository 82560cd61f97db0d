#include "aishare/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <set>

#include <nlohmann/json.hpp>

#include "aishare/analytics.hpp"
#include "aishare/csv.hpp"
#include "aishare/errors.hpp"
#include "aishare/synth.hpp"
#include "aishare/version.hpp"

namespace aishare::pipeline {

namespace {

using nlohmann::json;

constexpr int kOutputDigits = 6;  // significant digits in machine tables

std::string format_real(double v) { return csv::format_real(v, kOutputDigits); }

std::string format_optional(const std::optional<double>& v) {
  return v ? format_real(*v) : std::string{};
}

std::string format_flag(bool v) { return v ? "1" : "0"; }

std::uint64_t fnv1a(std::string_view text) {
  std::uint64_t hash = 1469598103934665603ull;
  for (unsigned char c : text) {
    hash ^= c;
    hash *= 1099511628211ull;
  }
  return hash;
}

Period parse_period_or_throw(const std::string& text, const char* what) {
  auto period = Period::parse(text);
  if (!period) {
    throw ConfigError(std::string(what) + " is not a valid YYYY-MM period: '" + text + "'");
  }
  return *period;
}

json context_to_json(const GlobalContext& context) {
  json out;
  out["alpha_bar"] = context.alpha_bar;
  out["gamma_bar"] = context.gamma_bar;
  out["ratio_min"] = context.ratio_min;
  out["ratio_p90"] = context.ratio_p90;
  json regional = json::object();
  for (const auto& [region, avg] : context.regional_mobile_avg) {
    regional[region.str()] = avg;
  }
  out["regional_mobile_avg"] = regional;
  out["mobile_avg_global"] = context.mobile_avg_global;
  return out;
}

json report_to_json(const ingest::IngestReport& report) {
  json out;
  out["rows_read"] = report.rows_read;
  out["rows_accepted"] = report.rows_accepted;
  json errors = json::array();
  for (const auto& error : report.errors) {
    errors.push_back({{"file", error.file}, {"line", error.line}, {"message", error.message}});
  }
  out["errors"] = errors;
  out["notes"] = report.notes;
  json coverage = json::object();
  for (const auto& [period, count] : report.coverage) {
    coverage[period.str()] = count;
  }
  out["coverage"] = coverage;
  return out;
}

void write_json_file(const std::filesystem::path& path, const json& doc) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw InputError("cannot open for writing: " + path.string());
  }
  out << doc.dump(2) << '\n';
}

json meta_json(const RunConfig& config) {
  return json{{"tool", "aishare"},
              {"version", std::string(kVersion)},
              {"config_hash", config.config_hash()}};
}

/// Directly estimated rows only: eligible economies and regional
/// aggregates, never imputed members (they would double count).
std::vector<ShareEstimate> direct_rows(std::span<const ShareEstimate> rows) {
  std::vector<ShareEstimate> out;
  for (const auto& row : rows) {
    if (row.imputation == Imputation::direct) {
      out.push_back(row);
    }
  }
  return out;
}

}  // namespace

void RunConfig::validate() const {
  if (input_dir.empty()) {
    throw ConfigError("input_dir is required");
  }
  if (period_from && period_to && *period_to < *period_from) {
    throw ConfigError("period range is empty: " + period_from->str() + ".." +
                      period_to->str());
  }
  eligibility.validate();
  estimator.validate();
}

RunConfig RunConfig::from_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw ConfigError("cannot open config: " + path.string());
  }
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError("config is not valid JSON: " + std::string(e.what()));
  }

  static const std::set<std::string> known = {
      "input_dir", "output_dir", "period", "mode", "format", "eligibility", "estimator"};
  for (const auto& [key, value] : doc.items()) {
    if (!known.contains(key)) {
      throw ConfigError("config: unknown key '" + key + "'");
    }
  }

  RunConfig config;
  if (doc.contains("input_dir")) {
    config.input_dir = doc.at("input_dir").get<std::string>();
  }
  if (doc.contains("output_dir")) {
    config.output_dir = doc.at("output_dir").get<std::string>();
  }
  if (doc.contains("period")) {
    const auto& period = doc.at("period");
    if (period.contains("from")) {
      config.period_from = parse_period_or_throw(period.at("from").get<std::string>(),
                                                 "period.from");
    }
    if (period.contains("to")) {
      config.period_to = parse_period_or_throw(period.at("to").get<std::string>(),
                                               "period.to");
    }
  }
  if (doc.contains("mode")) {
    auto mode = doc.at("mode").get<std::string>();
    if (mode == "pooled") {
      config.mode = Mode::pooled;
    } else if (mode == "latest") {
      config.mode = Mode::latest;
    } else {
      throw ConfigError("config: mode must be 'pooled' or 'latest', got '" + mode + "'");
    }
  }
  if (doc.contains("format")) {
    auto format = doc.at("format").get<std::string>();
    if (format == "csv") {
      config.format = OutputFormat::csv;
    } else if (format == "json") {
      config.format = OutputFormat::json;
    } else {
      throw ConfigError("config: format must be 'csv' or 'json', got '" + format + "'");
    }
  }
  if (doc.contains("eligibility")) {
    const auto& e = doc.at("eligibility");
    for (const auto& [key, value] : e.items()) {
      if (key == "min_total_pop") {
        config.eligibility.min_total_pop = value.get<std::int64_t>();
      } else if (key == "min_active_users") {
        config.eligibility.min_active_users = value.get<std::int64_t>();
      } else {
        throw ConfigError("config: unknown eligibility key '" + key + "'");
      }
    }
  }
  if (doc.contains("estimator")) {
    const auto& e = doc.at("estimator");
    for (const auto& [key, value] : e.items()) {
      if (key == "scaling_floor") {
        config.estimator.scaling_floor = value.get<double>();
      } else if (key == "scaling_span") {
        config.estimator.scaling_span = value.get<double>();
      } else if (key == "percentile_cap") {
        config.estimator.percentile_cap = value.get<double>();
      } else if (key == "mobile_cap_multiplier") {
        config.estimator.mobile_cap_multiplier = value.get<double>();
      } else if (key == "clamp_shares") {
        config.estimator.clamp_shares = value.get<bool>();
      } else if (key == "context_mode") {
        auto mode = value.get<std::string>();
        if (mode == "pooled") {
          config.estimator.context_mode = estimator::ContextMode::pooled;
        } else if (mode == "unweighted_mean") {
          config.estimator.context_mode = estimator::ContextMode::unweighted_mean;
        } else {
          throw ConfigError("config: context_mode must be 'pooled' or 'unweighted_mean'");
        }
      } else {
        throw ConfigError("config: unknown estimator key '" + key + "'");
      }
    }
  }
  return config;
}

std::string RunConfig::canonical_json() const {
  json doc;
  doc["input_dir"] = input_dir.string();
  doc["output_dir"] = output_dir.string();
  doc["period"] = {{"from", period_from ? period_from->str() : ""},
                   {"to", period_to ? period_to->str() : ""}};
  doc["mode"] = mode == Mode::pooled ? "pooled" : "latest";
  doc["format"] = format == OutputFormat::csv ? "csv" : "json";
  doc["eligibility"] = {{"min_total_pop", eligibility.min_total_pop},
                        {"min_active_users", eligibility.min_active_users}};
  doc["estimator"] = {
      {"scaling_floor", estimator.scaling_floor},
      {"scaling_span", estimator.scaling_span},
      {"percentile_cap", estimator.percentile_cap},
      {"mobile_cap_multiplier", estimator.mobile_cap_multiplier},
      {"clamp_shares", estimator.clamp_shares},
      {"context_mode",
       estimator.context_mode == estimator::ContextMode::pooled ? "pooled"
                                                                : "unweighted_mean"}};
  return doc.dump();
}

std::string RunConfig::config_hash() const {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(fnv1a(canonical_json())));
  return buf;
}

LoadedInputs load_inputs(const RunConfig& config) {
  config.validate();
  LoadedInputs inputs;

  auto telemetry_path = config.input_dir / "telemetry.csv";
  if (!std::filesystem::exists(telemetry_path)) {
    throw InputError("no telemetry rows: cannot open " + telemetry_path.string());
  }
  auto [telemetry, telemetry_report] =
      ingest::load_table(telemetry_path, ingest::telemetry_schema());
  auto [market, market_report] =
      ingest::load_table(config.input_dir / "market.csv", ingest::market_schema());
  auto [population, population_report] =
      ingest::load_table(config.input_dir / "population.csv", ingest::population_schema());
  inputs.reports["telemetry"] = std::move(telemetry_report);
  inputs.reports["market"] = std::move(market_report);
  inputs.reports["population"] = std::move(population_report);

  std::optional<ingest::Table> context;
  auto context_path = config.input_dir / "context.csv";
  if (std::filesystem::exists(context_path)) {
    auto [table, report] = ingest::load_table(context_path, ingest::context_schema());
    context = std::move(table);
    inputs.reports["context"] = std::move(report);
  } else {
    ingest::IngestReport report;
    report.notes.push_back("context.csv absent; internet penetration and gdp unavailable");
    inputs.reports["context"] = std::move(report);
  }

  auto regions_path = config.input_dir / "regions.csv";
  if (std::filesystem::exists(regions_path)) {
    auto [table, load_report] = ingest::load_table(regions_path, ingest::regions_schema());
    auto [regions, assemble_report] = ingest::assemble_regions(table);
    inputs.regions = std::move(regions);
    load_report.errors.insert(load_report.errors.end(), assemble_report.errors.begin(),
                              assemble_report.errors.end());
    load_report.notes.insert(load_report.notes.end(), assemble_report.notes.begin(),
                             assemble_report.notes.end());
    inputs.reports["regions"] = std::move(load_report);
  }

  auto joined = ingest::join_snapshots(telemetry, market, population,
                                       context ? &*context : nullptr);
  inputs.snapshots = std::move(joined.snapshots);
  inputs.reports["join"] = std::move(joined.report);

  // Clip to the requested period range.
  for (auto it = inputs.snapshots.begin(); it != inputs.snapshots.end();) {
    bool below = config.period_from && it->first < *config.period_from;
    bool above = config.period_to && *config.period_to < it->first;
    it = (below || above) ? inputs.snapshots.erase(it) : std::next(it);
  }
  if (inputs.snapshots.empty()) {
    throw InputError("no telemetry rows in the requested period range");
  }
  return inputs;
}

PeriodEstimates estimate_period(const std::vector<EconomySnapshot>& snapshots,
                                std::span<const RegionDef> regions,
                                const RunConfig& config, Period label) {
  PeriodEstimates out;
  out.period = label;

  std::vector<const EconomySnapshot*> eligible;
  std::map<EconomyId, std::vector<EconomySnapshot>> grouped;  // region -> members

  for (const auto& snapshot : snapshots) {
    auto decision = aggregate::classify(snapshot, regions, config.eligibility);
    if (decision.verdict == aggregate::Verdict::eligible) {
      eligible.push_back(&snapshot);
    } else if (decision.verdict == aggregate::Verdict::group_to_region) {
      for (const auto& region : regions) {
        if (region.contains(snapshot.telemetry.economy)) {
          grouped[region.region].push_back(snapshot);
          break;
        }
      }
    }
    out.decisions.push_back(std::move(decision));
  }

  // Estimation units: eligible economies plus viable regional aggregates.
  std::vector<EconomySnapshot> units;
  units.reserve(eligible.size() + grouped.size());
  for (const auto* snapshot : eligible) {
    units.push_back(*snapshot);
  }
  std::map<EconomyId, std::vector<EconomySnapshot>> viable_regions;
  for (const auto& [region_id, members] : grouped) {
    auto region_it = std::find_if(regions.begin(), regions.end(),
                                  [&](const RegionDef& r) { return r.region == region_id; });
    auto regional = aggregate::aggregate_region(members, *region_it);
    // The population floor exists to rule out tiny single economies; a
    // grouped aggregate only needs enough traffic to be robust.
    if (regional.telemetry.active_users < config.eligibility.min_active_users) {
      out.decisions.push_back({region_id, aggregate::Verdict::excluded,
                               "regional aggregate below the traffic threshold (" +
                                   std::to_string(regional.telemetry.active_users) +
                                   " active users)"});
      continue;
    }
    out.decisions.push_back({region_id, aggregate::Verdict::eligible,
                             "regional aggregate of " + std::to_string(members.size()) +
                                 " grouped economies"});
    units.push_back(std::move(regional));
    viable_regions.emplace(region_id, members);
  }

  if (units.empty()) {
    throw AnalysisError("no estimable units for " + label.str() +
                        " after eligibility filtering");
  }

  out.context = estimator::build_context(units, snapshots, regions, config.estimator);

  std::set<EconomyId> estimated;
  std::map<EconomyId, ShareEstimate> regional_estimates;
  for (const auto& unit : units) {
    auto estimate = estimator::estimate(unit, out.context, config.estimator);
    estimated.insert(estimate.economy);
    if (estimate.economy.is_region()) {
      regional_estimates.emplace(estimate.economy, estimate);
    }
    out.rows.push_back(std::move(estimate));
  }

  for (const auto& [region_id, members] : viable_regions) {
    auto imputed = aggregate::impute_members(regional_estimates.at(region_id), members,
                                             estimated);
    for (auto& row : imputed) {
      row.period = label;
      out.rows.push_back(std::move(row));
    }
  }

  std::sort(out.rows.begin(), out.rows.end(),
            [](const ShareEstimate& a, const ShareEstimate& b) {
              return a.economy < b.economy;
            });
  std::sort(out.decisions.begin(), out.decisions.end(),
            [](const aggregate::EligibilityDecision& a,
               const aggregate::EligibilityDecision& b) { return a.economy < b.economy; });
  return out;
}

EconomySnapshot pool_economy_window(std::span<const EconomySnapshot> months) {
  if (months.empty()) {
    throw AnalysisError("cannot pool an empty window");
  }
  const auto count = static_cast<double>(months.size());

  std::vector<const EconomySnapshot*> ordered;
  for (const auto& month : months) {
    ordered.push_back(&month);
  }
  std::sort(ordered.begin(), ordered.end(),
            [](const EconomySnapshot* a, const EconomySnapshot* b) {
              return a->telemetry.period < b->telemetry.period;
            });
  const auto& economy = ordered.front()->telemetry.economy;
  for (const auto* month : ordered) {
    if (month->telemetry.economy != economy) {
      throw AnalysisError("pooling window mixes economies " + economy.str() + " and " +
                          month->telemetry.economy.str());
    }
  }

  double active = 0.0;
  double ai = 0.0;
  double mad = 0.0;
  double devices = 0.0;
  double opt_in_weighted = 0.0;
  double mobile_sum = 0.0;
  double working_age = 0.0;
  double total = 0.0;
  double penetration_sum = 0.0;
  int penetration_count = 0;
  double gdp_sum = 0.0;
  int gdp_count = 0;

  for (const auto* month : ordered) {
    const auto& t = month->telemetry;
    const auto& r = month->reference;
    active += static_cast<double>(t.active_users);
    ai += static_cast<double>(t.ai_users);
    mad += static_cast<double>(t.mad);
    devices += static_cast<double>(t.mad) / r.windows_market_share;
    opt_in_weighted += t.opt_in_rate * static_cast<double>(t.active_users);
    mobile_sum += r.mobile_desktop_ratio;
    working_age += static_cast<double>(r.working_age_pop);
    total += static_cast<double>(r.total_pop);
    if (r.internet_penetration) {
      penetration_sum += *r.internet_penetration;
      ++penetration_count;
    }
    if (r.gdp_per_capita) {
      gdp_sum += *r.gdp_per_capita;
      ++gdp_count;
    }
  }

  EconomySnapshot out;
  out.telemetry.economy = economy;
  out.telemetry.period = ordered.back()->telemetry.period;
  out.telemetry.active_users = std::llround(active / count);
  out.telemetry.ai_users = std::llround(ai / count);
  out.telemetry.mad = std::llround(mad / count);
  out.telemetry.opt_in_rate = active > 0.0 ? opt_in_weighted / active : 0.0;

  out.reference.economy = economy;
  out.reference.period = out.telemetry.period;
  out.reference.windows_market_share = devices > 0.0 ? mad / devices : 1.0;
  out.reference.mobile_desktop_ratio = mobile_sum / count;
  out.reference.working_age_pop = std::llround(working_age / count);
  out.reference.total_pop = std::llround(total / count);
  if (penetration_count > 0) {
    out.reference.internet_penetration = penetration_sum / penetration_count;
  }
  if (gdp_count > 0) {
    out.reference.gdp_per_capita = gdp_sum / gdp_count;
  }
  return out;
}

std::vector<PeriodEstimates> compute(const LoadedInputs& inputs, const RunConfig& config) {
  if (config.mode == Mode::latest) {
    const auto& [period, snapshots] = *inputs.snapshots.rbegin();
    return {estimate_period(snapshots, inputs.regions, config, period)};
  }

  // Pooled: collapse each economy's window into one average month.
  std::map<EconomyId, std::vector<EconomySnapshot>> by_economy;
  Period label = inputs.snapshots.rbegin()->first;
  for (const auto& [period, snapshots] : inputs.snapshots) {
    for (const auto& snapshot : snapshots) {
      by_economy[snapshot.telemetry.economy].push_back(snapshot);
    }
  }
  std::vector<EconomySnapshot> pooled;
  pooled.reserve(by_economy.size());
  for (const auto& [economy, months] : by_economy) {
    auto snapshot = pool_economy_window(months);
    snapshot.telemetry.period = label;
    snapshot.reference.period = label;
    pooled.push_back(std::move(snapshot));
  }
  return {estimate_period(pooled, inputs.regions, config, label)};
}

std::vector<PeriodEstimates> compute_monthly(const LoadedInputs& inputs,
                                             const RunConfig& config) {
  std::vector<PeriodEstimates> out;
  for (const auto& [period, snapshots] : inputs.snapshots) {
    out.push_back(estimate_period(snapshots, inputs.regions, config, period));
  }
  return out;
}

namespace {

const std::vector<std::string>& estimate_columns() {
  static const std::vector<std::string> columns = {
      "economy",         "period",          "imputation",
      "gamma_raw",       "gamma_adjusted",  "device_ratio",
      "device_scaling",  "scaling_clamped", "desktop_share",
      "mobile_factor",   "mobile_capped",   "mobile_share",
      "naive_product",   "ai_user_share",   "working_age_pop",
      "ai_users_abs",    "internet_penetration", "connected_share",
      "connected_clamped", "gdp_per_capita"};
  return columns;
}

std::vector<std::string> estimate_fields(const ShareEstimate& row) {
  return {row.economy.str(),
          row.period.str(),
          std::string(to_string(row.imputation)),
          format_real(row.gamma_raw),
          format_real(row.gamma_adjusted),
          format_real(row.device_ratio),
          format_real(row.device_scaling),
          format_flag(row.scaling_clamped),
          format_real(row.desktop_share),
          format_real(row.mobile_factor),
          format_flag(row.mobile_capped),
          format_real(row.mobile_share),
          format_real(row.naive_product),
          format_real(row.ai_user_share),
          csv::format_count(row.working_age_pop),
          csv::format_count(row.ai_users_abs),
          format_optional(row.internet_penetration),
          format_optional(row.connected_share),
          format_flag(row.connected_clamped),
          format_optional(row.gdp_per_capita)};
}

json estimate_to_json(const ShareEstimate& row) {
  json out;
  out["economy"] = row.economy.str();
  out["period"] = row.period.str();
  out["imputation"] = std::string(to_string(row.imputation));
  out["gamma_raw"] = row.gamma_raw;
  out["gamma_adjusted"] = row.gamma_adjusted;
  out["device_ratio"] = row.device_ratio;
  out["device_scaling"] = row.device_scaling;
  out["scaling_clamped"] = row.scaling_clamped;
  out["desktop_share"] = row.desktop_share;
  out["mobile_factor"] = row.mobile_factor;
  out["mobile_capped"] = row.mobile_capped;
  out["mobile_share"] = row.mobile_share;
  out["naive_product"] = row.naive_product;
  out["ai_user_share"] = row.ai_user_share;
  out["working_age_pop"] = row.working_age_pop;
  out["ai_users_abs"] = row.ai_users_abs;
  if (row.internet_penetration) {
    out["internet_penetration"] = *row.internet_penetration;
  }
  if (row.connected_share) {
    out["connected_share"] = *row.connected_share;
    out["connected_clamped"] = row.connected_clamped;
  }
  if (row.gdp_per_capita) {
    out["gdp_per_capita"] = *row.gdp_per_capita;
  }
  return out;
}

void write_estimates(const RunConfig& config, std::span<const PeriodEstimates> periods) {
  if (config.format == OutputFormat::csv) {
    csv::Writer writer(config.output_dir / "estimates.csv");
    writer.comment("aishare " + std::string(kVersion) + " config=" + config.config_hash());
    writer.row(std::span<const std::string>(estimate_columns()));
    for (const auto& period : periods) {
      for (const auto& row : period.rows) {
        writer.row(estimate_fields(row));
      }
    }
    return;
  }
  json rows = json::array();
  for (const auto& period : periods) {
    for (const auto& row : period.rows) {
      rows.push_back(estimate_to_json(row));
    }
  }
  write_json_file(config.output_dir / "estimates.json",
                  json{{"meta", meta_json(config)}, {"rows", rows}});
}

void write_report(const RunConfig& config, const LoadedInputs& inputs,
                  std::span<const PeriodEstimates> periods) {
  json doc;
  doc["meta"] = meta_json(config);
  doc["config"] = json::parse(config.canonical_json());

  json ingest_reports = json::object();
  for (const auto& [table, report] : inputs.reports) {
    ingest_reports[table] = report_to_json(report);
  }
  doc["ingest"] = ingest_reports;

  json period_docs = json::object();
  for (const auto& period : periods) {
    json entry;
    entry["context"] = context_to_json(period.context);
    json decisions = json::array();
    for (const auto& decision : period.decisions) {
      decisions.push_back({{"economy", decision.economy.str()},
                           {"verdict", std::string(aggregate::to_string(decision.verdict))},
                           {"reason", decision.reason}});
    }
    entry["eligibility"] = decisions;
    auto direct = direct_rows(period.rows);
    if (!direct.empty()) {
      auto summary = aggregate::global_summary(direct);
      entry["summary"] = {{"global_share", summary.global_share},
                          {"total_users", summary.total_users},
                          {"total_working_age_pop", summary.total_pop}};
    }
    auto connected = aggregate::connected_population_view(period.rows);
    json connected_rows = json::array();
    for (const auto& row : connected.rows) {
      connected_rows.push_back({{"economy", row.economy.str()},
                                {"ai_user_share", row.ai_user_share},
                                {"connected_share", row.connected_share},
                                {"internet_penetration", row.internet_penetration},
                                {"clamped", row.clamped}});
    }
    entry["connected_lowest_penetration"] = connected_rows;
    period_docs[period.period.str()] = entry;
  }
  doc["periods"] = period_docs;

  write_json_file(config.output_dir / "report.json", doc);
}

}  // namespace

std::vector<ShareEstimate> read_estimates_csv(const std::filesystem::path& path) {
  // Read-back schema: ranges are not re-validated (clamp-off runs may leave
  // [0,1]), only shapes are.
  ingest::TableSchema schema;
  schema.name = "estimates";
  schema.key = {"economy", "period"};
  for (const auto& column : estimate_columns()) {
    ingest::ColumnSpec spec;
    spec.name = column;
    if (column == "economy") {
      spec.type = ingest::ColumnType::economy;
    } else if (column == "period") {
      spec.type = ingest::ColumnType::period;
    } else if (column == "imputation") {
      spec.type = ingest::ColumnType::text;
    } else if (column == "working_age_pop" || column == "ai_users_abs") {
      spec.type = ingest::ColumnType::count;
    } else if (column == "scaling_clamped" || column == "mobile_capped" ||
               column == "connected_clamped") {
      spec.type = ingest::ColumnType::boolean;
    } else {
      spec.type = ingest::ColumnType::nonneg_real;
      spec.required = column != "internet_penetration" && column != "connected_share" &&
                      column != "gdp_per_capita";
    }
    schema.columns.push_back(std::move(spec));
  }

  auto [table, report] = ingest::load_table(path, schema);
  if (!report.errors.empty()) {
    const auto& first = report.errors.front();
    throw InputError("estimates file " + path.string() + " line " +
                     std::to_string(first.line) + ": " + first.message);
  }

  auto idx = [&](const char* name) { return *table.schema.column_index(name); };
  std::vector<ShareEstimate> rows;
  rows.reserve(table.rows.size());
  for (const auto& row : table.rows) {
    ShareEstimate estimate;
    estimate.economy = std::get<EconomyId>(row.cells[idx("economy")]);
    estimate.period = std::get<Period>(row.cells[idx("period")]);
    auto imputation = imputation_from_string(std::get<std::string>(row.cells[idx("imputation")]));
    if (!imputation) {
      throw InputError("estimates file " + path.string() + " line " +
                       std::to_string(row.line) + ": unknown imputation value");
    }
    estimate.imputation = *imputation;
    estimate.gamma_raw = std::get<double>(row.cells[idx("gamma_raw")]);
    estimate.gamma_adjusted = std::get<double>(row.cells[idx("gamma_adjusted")]);
    estimate.device_ratio = std::get<double>(row.cells[idx("device_ratio")]);
    estimate.device_scaling = std::get<double>(row.cells[idx("device_scaling")]);
    estimate.scaling_clamped = std::get<std::int64_t>(row.cells[idx("scaling_clamped")]) != 0;
    estimate.desktop_share = std::get<double>(row.cells[idx("desktop_share")]);
    estimate.mobile_factor = std::get<double>(row.cells[idx("mobile_factor")]);
    estimate.mobile_capped = std::get<std::int64_t>(row.cells[idx("mobile_capped")]) != 0;
    estimate.mobile_share = std::get<double>(row.cells[idx("mobile_share")]);
    estimate.naive_product = std::get<double>(row.cells[idx("naive_product")]);
    estimate.ai_user_share = std::get<double>(row.cells[idx("ai_user_share")]);
    estimate.working_age_pop = std::get<std::int64_t>(row.cells[idx("working_age_pop")]);
    estimate.ai_users_abs = std::get<std::int64_t>(row.cells[idx("ai_users_abs")]);
    if (auto* v = std::get_if<double>(&row.cells[idx("internet_penetration")])) {
      estimate.internet_penetration = *v;
    }
    if (auto* v = std::get_if<double>(&row.cells[idx("connected_share")])) {
      estimate.connected_share = *v;
    }
    estimate.connected_clamped =
        std::get<std::int64_t>(row.cells[idx("connected_clamped")]) != 0;
    if (auto* v = std::get_if<double>(&row.cells[idx("gdp_per_capita")])) {
      estimate.gdp_per_capita = *v;
    }
    rows.push_back(std::move(estimate));
  }
  return rows;
}

namespace {

/// Rows for the analysis commands: a prior estimates.csv when given,
/// otherwise a fresh compute pass. Restricted to the latest period present
/// and to directly estimated units.
std::vector<ShareEstimate> analysis_rows(const RunConfig& config,
                                         const std::optional<std::filesystem::path>& file) {
  std::vector<ShareEstimate> rows;
  if (file) {
    rows = read_estimates_csv(*file);
  } else {
    auto inputs = load_inputs(config);
    auto periods = compute(inputs, config);
    rows = periods.back().rows;
  }
  if (rows.empty()) {
    throw AnalysisError("no estimate rows available");
  }
  Period latest = rows.front().period;
  for (const auto& row : rows) {
    latest = std::max(latest, row.period);
  }
  std::vector<ShareEstimate> out;
  for (auto& row : rows) {
    if (row.period == latest && row.imputation == Imputation::direct) {
      out.push_back(std::move(row));
    }
  }
  return out;
}

}  // namespace

int cmd_compute(const RunConfig& config) {
  config.validate();
  auto inputs = load_inputs(config);
  auto periods = compute(inputs, config);
  std::filesystem::create_directories(config.output_dir);
  write_estimates(config, periods);
  write_report(config, inputs, periods);

  std::size_t rows = 0;
  for (const auto& period : periods) {
    rows += period.rows.size();
  }
  const char* estimates_name =
      config.format == OutputFormat::csv ? "estimates.csv" : "estimates.json";
  std::cout << "wrote " << (config.output_dir / estimates_name).string() << " (" << rows
            << " rows) and " << (config.output_dir / "report.json").string() << "\n";
  return 0;
}

int cmd_rank(const RunConfig& config, const RankOptions& options) {
  auto rows = analysis_rows(config, options.estimates_file);
  auto ranking = analytics::rank_economies(rows, options.top_k);

  std::filesystem::create_directories(config.output_dir);
  csv::Writer writer(config.output_dir / "ranking.csv");
  writer.comment("aishare " + std::string(kVersion) + " config=" + config.config_hash());
  writer.row({"rank", "economy", "ai_user_share", "ai_user_share_pct"});
  char pct[16];
  for (const auto& row : ranking) {
    std::snprintf(pct, sizeof(pct), "%.1f", row.value * 100.0);
    writer.row({std::to_string(row.rank), row.economy.str(), format_real(row.value), pct});
  }
  std::cout << "wrote " << (config.output_dir / "ranking.csv").string() << " ("
            << ranking.size() << " rows)\n";
  return 0;
}

int cmd_correlate(const RunConfig& config, const CorrelateOptions& options) {
  auto rows = analysis_rows(config, options.estimates_file);

  std::vector<const ShareEstimate*> usable;
  std::vector<std::string> skipped;
  for (const auto& row : rows) {
    if (row.gdp_per_capita) {
      usable.push_back(&row);
    } else {
      skipped.push_back(row.economy.str());
    }
  }
  std::sort(usable.begin(), usable.end(),
            [](const ShareEstimate* a, const ShareEstimate* b) {
              return a->economy < b->economy;
            });
  if (usable.size() < 3) {
    throw AnalysisError("correlate needs at least 3 economies with gdp_per_capita, have " +
                        std::to_string(usable.size()));
  }

  std::vector<double> gdp;
  std::vector<double> share;
  for (const auto* row : usable) {
    gdp.push_back(*row->gdp_per_capita);
    share.push_back(row->ai_user_share);
  }

  auto correlation = analytics::spearman(gdp, share);
  auto trend = analytics::loglinear_fit(gdp, share);

  json doc;
  doc["meta"] = meta_json(config);
  doc["n"] = correlation.n;
  doc["spearman_rho"] = correlation.rho;
  doc["p_value"] = correlation.p_value;
  doc["trend"] = {{"slope", trend.fit.slope},
                  {"intercept", trend.fit.intercept},
                  {"r_squared", trend.fit.r_squared},
                  {"n", trend.fit.n}};
  json residuals = json::array();
  for (std::size_t i = 0; i < trend.accepted.size(); ++i) {
    const auto* row = usable[trend.accepted[i]];
    residuals.push_back({{"economy", row->economy.str()},
                         {"residual", trend.residuals[i]},
                         {"below_trendline", trend.residuals[i] < 0.0}});
  }
  doc["residuals"] = residuals;
  json rejected = json::array();
  for (std::size_t index : trend.rejected) {
    rejected.push_back(usable[index]->economy.str());
  }
  doc["rejected_nonpositive_gdp"] = rejected;
  doc["skipped_missing_gdp"] = skipped;

  std::filesystem::create_directories(config.output_dir);
  write_json_file(config.output_dir / "correlation.json", doc);
  std::cout << "wrote " << (config.output_dir / "correlation.json").string()
            << " (rho=" << format_real(correlation.rho) << ")\n";
  return 0;
}

int cmd_timeseries(const RunConfig& config, const TimeseriesOptions& options) {
  if (options.window < 1) {
    throw ConfigError("rolling window must be at least 1 month");
  }
  auto inputs = load_inputs(config);
  auto monthly = compute_monthly(inputs, config);

  // Raw monthly share series per directly estimated unit.
  std::map<EconomyId, std::vector<SeriesPoint>> series;
  for (const auto& period : monthly) {
    for (const auto& row : period.rows) {
      if (row.imputation != Imputation::direct) {
        continue;
      }
      series[row.economy].push_back({row.economy, row.period, row.ai_user_share});
    }
  }

  std::vector<EconomyId> selected = options.economies;
  if (selected.empty()) {
    for (const auto& [economy, points] : series) {
      selected.push_back(economy);
    }
  }

  std::filesystem::create_directories(config.output_dir);
  csv::Writer writer(config.output_dir / "series.csv");
  writer.comment("aishare " + std::string(kVersion) + " config=" + config.config_hash());
  writer.row({"economy", "period", "value"});

  json events = json::object();
  std::size_t rows = 0;
  for (const auto& economy : selected) {
    auto it = series.find(economy);
    if (it == series.end()) {
      throw AnalysisError("no estimates for economy " + economy.str() +
                          " in the requested range");
    }
    auto rolled = aggregate::rolling_average(it->second, options.window);
    for (const auto& point : rolled) {
      writer.row({point.economy.str(), point.period.str(), format_real(point.value)});
      ++rows;
    }
    if (options.event) {
      auto delta = analytics::event_delta(it->second, *options.event, options.pre_months,
                                          options.post_months);
      json entry = {{"pre_mean", delta.pre_mean},
                    {"post_mean", delta.post_mean},
                    {"abs_change", delta.abs_change}};
      if (delta.rel_change) {
        entry["rel_change"] = *delta.rel_change;
      }
      events[economy.str()] = entry;
    }
  }

  if (options.event) {
    json doc;
    doc["meta"] = meta_json(config);
    doc["event"] = options.event->str();
    doc["pre_months"] = options.pre_months;
    doc["post_months"] = options.post_months;
    doc["economies"] = events;
    write_json_file(config.output_dir / "event.json", doc);
  }
  std::cout << "wrote " << (config.output_dir / "series.csv").string() << " (" << rows
            << " rows)\n";
  return 0;
}

int cmd_synthcheck(const std::filesystem::path& spec_path, double tolerance_pp,
                   const std::filesystem::path& output_dir) {
  auto spec = synth::PopulationSpec::from_json_file(spec_path);
  auto report = synth::end_to_end_check(spec, tolerance_pp);

  std::printf("%-8s %12s %12s %12s\n", "economy", "truth", "estimate", "error_pp");
  for (const auto& row : report.rows) {
    std::printf("%-8s %12.6f %12.6f %12.4f\n", row.economy.str().c_str(), row.truth,
                row.estimate, row.error * 100.0);
  }
  std::printf("max |error| = %.4f pp, tolerance = %.4f pp -> %s\n",
              report.max_abs_error_pp, report.tolerance_pp,
              report.pass ? "PASS" : "FAIL");

  json doc;
  doc["tool"] = "aishare";
  doc["version"] = std::string(kVersion);
  doc["tolerance_pp"] = report.tolerance_pp;
  doc["max_abs_error_pp"] = report.max_abs_error_pp;
  doc["pass"] = report.pass;
  doc["context"] = context_to_json(report.context);
  json rows = json::array();
  for (const auto& row : report.rows) {
    rows.push_back({{"economy", row.economy.str()},
                    {"truth", row.truth},
                    {"estimate", row.estimate},
                    {"error", row.error}});
  }
  doc["rows"] = rows;
  std::filesystem::create_directories(output_dir);
  write_json_file(output_dir / "synthcheck.json", doc);

  return report.pass ? 0 : 4;
}

}  // namespace aishare::pipeline
