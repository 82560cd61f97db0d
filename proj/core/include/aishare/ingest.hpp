#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "aishare/model.hpp"

namespace aishare::ingest {

enum class ColumnType {
  economy,      // EconomyId
  period,       // "YYYY-MM" ("YYYY" allowed when the schema permits annual rows)
  count,        // integer >= 0
  fraction,     // real in [0, 1]
  nonneg_real,  // real >= 0
  boolean,      // 0/1/true/false
  text,
};

struct ColumnSpec {
  std::string name;
  ColumnType type = ColumnType::text;
  bool required = true;
};

struct TableSchema {
  std::string name;
  std::vector<ColumnSpec> columns;   // order defines the cell layout
  std::vector<std::string> key;      // column names forming the unique row key
  bool allow_annual_periods = false; // "YYYY" expands to all 12 months

  void validate() const;  // key columns must exist, be required, names unique
  std::optional<std::size_t> column_index(std::string_view name) const;
};

struct IngestError {
  std::string file;
  std::size_t line = 0;
  std::string message;
};

struct IngestReport {
  std::int64_t rows_read = 0;      // data rows encountered in the source
  std::int64_t rows_accepted = 0;  // source rows that passed all checks
  std::vector<IngestError> errors;
  std::vector<std::string> notes;               // non-fatal remarks
  std::map<Period, int> coverage;               // period -> economies present

  /// Distinct (file, line) pairs named in errors; the no-silent-drops
  /// bookkeeping counts rejected rows through this.
  std::int64_t rejected_row_count() const;
};

using Cell = std::variant<std::monostate, std::int64_t, double, std::string,
                          EconomyId, Period>;

struct Row {
  std::size_t line = 0;           // 1-based line number in the source file
  std::vector<Cell> cells;        // one per schema column
};

struct Table {
  TableSchema schema;
  std::vector<Row> rows;

  const Cell& cell(const Row& row, std::size_t column) const {
    return row.cells[column];
  }
};

/// Loads and validates one CSV table. Missing file or malformed header is
/// fatal (throws InputError); malformed data rows are reported and skipped.
/// Duplicate keys keep the first occurrence. Lines starting with '#' are
/// comments.
std::pair<Table, IngestReport> load_table(const std::filesystem::path& path,
                                          const TableSchema& schema);

// Schemas of the five input files.
const TableSchema& telemetry_schema();
const TableSchema& market_schema();
const TableSchema& population_schema();
const TableSchema& context_schema();
const TableSchema& regions_schema();

struct JoinResult {
  // Period -> snapshots sorted by economy.
  std::map<Period, std::vector<EconomySnapshot>> snapshots;
  IngestReport report;
};

/// Joins telemetry rows with their reference data. Telemetry rows lacking a
/// required reference row, or failing snapshot validation, are excluded and
/// reported. `context` may be null (both optional columns absent everywhere).
JoinResult join_snapshots(const Table& telemetry, const Table& market,
                          const Table& population, const Table* context);

/// Groups regions.csv rows into region definitions, enforcing the >=2
/// member and disjointness rules. Offending rows are reported and dropped.
std::pair<std::vector<RegionDef>, IngestReport> assemble_regions(const Table& regions);

}  // namespace aishare::ingest
