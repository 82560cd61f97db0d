#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "aishare/model.hpp"

namespace aishare::synth {

/// Controls for the synthetic individual generator. Per-economy knobs hold
/// either one value (applies to every economy) or one value per economy.
struct PopulationSpec {
  int economies = 0;
  int individuals_per_economy = 0;
  std::uint64_t seed = 0;

  std::vector<double> desktop_access_prob;         // P(owns a PC/tablet)
  std::vector<double> microsoft_share_of_desktop;  // P(device runs Windows | desktop)
  std::vector<double> opt_in_prob;                 // P(shares telemetry | Windows user)
  std::vector<double> ai_use_prob_desktop;         // P(uses AI on desktop | desktop)
  std::vector<double> mobile_ratio;                // mobile/desktop traffic ratio knob
  std::vector<double> ai_use_prob_mobile;          // P(uses AI on mobile)
  double cross_platform_correlation = 0.0;         // [-1, 1]; 0 = independent platforms
  double active_time_prob = 1.0;                   // P(monthly minutes >= 90 | desktop)

  void validate() const;  // throws ConfigError
  double knob(const std::vector<double>& values, int economy) const;

  static PopulationSpec from_json_file(const std::filesystem::path& path);
  std::string to_json() const;
};

/// One simulated person. The AI-use flags are the ground truth the pipeline
/// is later asked to recover.
struct Individual {
  EconomyId economy;
  bool has_desktop = false;
  bool is_ms_user = false;
  bool opted_in = false;
  std::int32_t minutes = 0;  // monthly desktop usage minutes
  bool uses_ai_desktop = false;
  bool uses_ai_mobile = false;
};

/// Synthetic economy codes "SAA", "SAB", ... for generator output.
EconomyId synthetic_economy_id(int index);

/// Deterministic generation: the random stream is keyed by
/// (seed, economy index, individual index), so identical specs produce
/// bit-identical populations regardless of scheduling. Cross-platform
/// correlation is induced by a Gaussian-copula threshold construction that
/// preserves the marginal probabilities.
std::vector<Individual> generate(const PopulationSpec& spec);

/// Ground truth: fraction of individuals using AI on either platform.
double true_share(std::span<const Individual> population);
double true_share(std::span<const Individual> population, const EconomyId& economy);

/// Aggregates a population into the exact tables the ingest module reads.
struct SyntheticInputs {
  Period period;
  std::vector<TelemetryAggregate> telemetry;
  std::vector<ReferenceRecord> reference;  // market + population columns
};

SyntheticInputs to_inputs(std::span<const Individual> population,
                          const PopulationSpec& spec);

/// Writes telemetry.csv, market.csv, population.csv and context.csv in the
/// ingest file formats.
void write_inputs(const SyntheticInputs& inputs, const std::filesystem::path& dir);

struct EconomyCheck {
  EconomyId economy;
  double truth = 0.0;
  double estimate = 0.0;
  double error = 0.0;  // estimate - truth, as a fraction
};

struct CheckReport {
  std::vector<EconomyCheck> rows;  // sorted by economy
  double max_abs_error_pp = 0.0;
  double tolerance_pp = 0.0;
  bool pass = false;
  GlobalContext context;
};

/// Full-circle validation: generate -> to_inputs -> CSV -> ingest ->
/// estimator, then compare each economy's estimated share against ground
/// truth. Eligibility filtering is bypassed (sample sizes are not country
/// populations); the check targets the estimation chain itself.
CheckReport end_to_end_check(const PopulationSpec& spec, double tolerance_pp);

/// A spec satisfying the estimator's assumptions (independent platforms,
/// full opt-in, device ratios spanning the normalization anchors, mobile
/// AI use consistent with the traffic ratio). Under it the estimate
/// converges to the truth as the population grows.
PopulationSpec conforming_spec(int economies, int individuals_per_economy,
                               std::uint64_t seed);

}  // namespace aishare::synth
