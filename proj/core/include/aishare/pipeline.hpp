#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "aishare/aggregate.hpp"
#include "aishare/estimator.hpp"
#include "aishare/ingest.hpp"
#include "aishare/model.hpp"

namespace aishare::pipeline {

enum class Mode { pooled, latest };
enum class OutputFormat { csv, json };

struct RunConfig {
  std::filesystem::path input_dir;
  std::optional<Period> period_from;
  std::optional<Period> period_to;
  Mode mode = Mode::pooled;
  aggregate::EligibilityConfig eligibility;
  estimator::EstimatorConfig estimator;
  std::filesystem::path output_dir = "out";
  OutputFormat format = OutputFormat::csv;

  void validate() const;  // throws ConfigError

  /// Strict JSON config mirroring these fields; unknown keys are errors.
  static RunConfig from_json_file(const std::filesystem::path& path);

  /// Canonical serialization (sorted keys); identical configs hash equal.
  std::string canonical_json() const;
  std::string config_hash() const;  // 16 hex digits, embedded in outputs
};

struct LoadedInputs {
  // Period -> snapshots sorted by economy, clipped to the requested range.
  std::map<Period, std::vector<EconomySnapshot>> snapshots;
  std::vector<RegionDef> regions;
  std::map<std::string, ingest::IngestReport> reports;  // per table plus "join"
};

/// Loads and joins the five input tables. context.csv and regions.csv are
/// optional files; telemetry, market and population are required.
LoadedInputs load_inputs(const RunConfig& config);

struct PeriodEstimates {
  Period period;
  std::vector<ShareEstimate> rows;  // direct + regional + imputed, sorted by economy
  GlobalContext context;
  std::vector<aggregate::EligibilityDecision> decisions;
};

/// One period's full estimation pass: eligibility, regional grouping,
/// context, per-unit estimates, member imputation.
PeriodEstimates estimate_period(const std::vector<EconomySnapshot>& snapshots,
                                std::span<const RegionDef> regions,
                                const RunConfig& config, Period label);

/// Collapses one economy's monthly snapshots over the window into a single
/// average-month snapshot (counts are per-month means, rates their natural
/// weighted means). Labelled with the window's last period.
EconomySnapshot pool_economy_window(std::span<const EconomySnapshot> months);

/// Applies the run mode: pooled collapses the window per economy and
/// estimates once; latest estimates the newest period only.
std::vector<PeriodEstimates> compute(const LoadedInputs& inputs, const RunConfig& config);

/// Per-month estimation across the whole range (time-series backend).
std::vector<PeriodEstimates> compute_monthly(const LoadedInputs& inputs,
                                             const RunConfig& config);

/// Reads back an estimates.csv produced by cmd_compute.
std::vector<ShareEstimate> read_estimates_csv(const std::filesystem::path& path);

int cmd_compute(const RunConfig& config);

struct RankOptions {
  std::optional<int> top_k;
  std::optional<std::filesystem::path> estimates_file;  // rank a prior compute output
};
int cmd_rank(const RunConfig& config, const RankOptions& options);

struct CorrelateOptions {
  std::optional<std::filesystem::path> estimates_file;
};
int cmd_correlate(const RunConfig& config, const CorrelateOptions& options);

struct TimeseriesOptions {
  std::vector<EconomyId> economies;  // empty selects every directly estimated unit
  int window = 3;
  std::optional<Period> event;  // when set, event deltas on the raw series
  int pre_months = 3;
  int post_months = 3;
};
int cmd_timeseries(const RunConfig& config, const TimeseriesOptions& options);

int cmd_synthcheck(const std::filesystem::path& spec_path, double tolerance_pp,
                   const std::filesystem::path& output_dir);

}  // namespace aishare::pipeline
