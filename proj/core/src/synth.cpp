#include "aishare/synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>

#include <nlohmann/json.hpp>

#include "aishare/csv.hpp"
#include "aishare/errors.hpp"
#include "aishare/estimator.hpp"
#include "aishare/ingest.hpp"
#include "aishare/rng.hpp"

namespace aishare::synth {

namespace {

using nlohmann::json;

// Standard normal CDF.
double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

void check_prob_knob(const std::vector<double>& values, const char* name,
                     int economies) {
  if (values.size() != 1 && values.size() != static_cast<std::size_t>(economies)) {
    throw ConfigError(std::string("synth spec: ") + name +
                      " must hold 1 value or one per economy");
  }
  for (double v : values) {
    if (!(v >= 0.0) || !(v <= 1.0)) {
      throw ConfigError(std::string("synth spec: ") + name + " out of [0,1]");
    }
  }
}

std::vector<double> knob_from_json(const json& value, const char* name) {
  std::vector<double> out;
  if (value.is_number()) {
    out.push_back(value.get<double>());
  } else if (value.is_array()) {
    for (const auto& item : value) {
      if (!item.is_number()) {
        throw ConfigError(std::string("synth spec: ") + name +
                          " array must contain numbers");
      }
      out.push_back(item.get<double>());
    }
  } else {
    throw ConfigError(std::string("synth spec: ") + name +
                      " must be a number or an array of numbers");
  }
  return out;
}

json knob_to_json(const std::vector<double>& values) {
  if (values.size() == 1) {
    return values.front();
  }
  return json(values);
}

}  // namespace

void PopulationSpec::validate() const {
  if (economies < 1) {
    throw ConfigError("synth spec: economies must be at least 1");
  }
  if (individuals_per_economy < 1000) {
    throw ConfigError("synth spec: individuals_per_economy must be at least 1000");
  }
  check_prob_knob(desktop_access_prob, "desktop_access_prob", economies);
  check_prob_knob(microsoft_share_of_desktop, "microsoft_share_of_desktop", economies);
  check_prob_knob(opt_in_prob, "opt_in_prob", economies);
  check_prob_knob(ai_use_prob_desktop, "ai_use_prob_desktop", economies);
  check_prob_knob(ai_use_prob_mobile, "ai_use_prob_mobile", economies);
  if (mobile_ratio.size() != 1 &&
      mobile_ratio.size() != static_cast<std::size_t>(economies)) {
    throw ConfigError("synth spec: mobile_ratio must hold 1 value or one per economy");
  }
  for (double v : mobile_ratio) {
    if (!(v >= 0.0)) {
      throw ConfigError("synth spec: mobile_ratio must be nonnegative");
    }
  }
  if (!(cross_platform_correlation >= -1.0) || !(cross_platform_correlation <= 1.0)) {
    throw ConfigError("synth spec: cross_platform_correlation out of [-1,1]");
  }
  if (!(active_time_prob >= 0.0) || !(active_time_prob <= 1.0)) {
    throw ConfigError("synth spec: active_time_prob out of [0,1]");
  }
}

double PopulationSpec::knob(const std::vector<double>& values, int economy) const {
  if (values.size() == 1) {
    return values.front();
  }
  return values[static_cast<std::size_t>(economy)];
}

PopulationSpec PopulationSpec::from_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw InputError("cannot open synth spec: " + path.string());
  }
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError("synth spec is not valid JSON: " + std::string(e.what()));
  }

  static const std::map<std::string, int> known = {
      {"economies", 0},
      {"individuals_per_economy", 0},
      {"seed", 0},
      {"desktop_access_prob", 0},
      {"microsoft_share_of_desktop", 0},
      {"opt_in_prob", 0},
      {"ai_use_prob_desktop", 0},
      {"mobile_ratio", 0},
      {"ai_use_prob_mobile", 0},
      {"cross_platform_correlation", 0},
      {"active_time_prob", 0}};
  for (const auto& [key, value] : doc.items()) {
    if (!known.contains(key)) {
      throw ConfigError("synth spec: unknown key '" + key + "'");
    }
  }
  auto require = [&doc](const char* key) -> const json& {
    if (!doc.contains(key)) {
      throw ConfigError(std::string("synth spec: missing key '") + key + "'");
    }
    return doc.at(key);
  };

  PopulationSpec spec;
  spec.economies = require("economies").get<int>();
  spec.individuals_per_economy = require("individuals_per_economy").get<int>();
  spec.seed = require("seed").get<std::uint64_t>();
  spec.desktop_access_prob = knob_from_json(require("desktop_access_prob"), "desktop_access_prob");
  spec.microsoft_share_of_desktop =
      knob_from_json(require("microsoft_share_of_desktop"), "microsoft_share_of_desktop");
  spec.opt_in_prob = knob_from_json(require("opt_in_prob"), "opt_in_prob");
  spec.ai_use_prob_desktop =
      knob_from_json(require("ai_use_prob_desktop"), "ai_use_prob_desktop");
  spec.mobile_ratio = knob_from_json(require("mobile_ratio"), "mobile_ratio");
  spec.ai_use_prob_mobile =
      knob_from_json(require("ai_use_prob_mobile"), "ai_use_prob_mobile");
  if (doc.contains("cross_platform_correlation")) {
    spec.cross_platform_correlation = doc.at("cross_platform_correlation").get<double>();
  }
  if (doc.contains("active_time_prob")) {
    spec.active_time_prob = doc.at("active_time_prob").get<double>();
  }
  spec.validate();
  return spec;
}

std::string PopulationSpec::to_json() const {
  json doc;
  doc["economies"] = economies;
  doc["individuals_per_economy"] = individuals_per_economy;
  doc["seed"] = seed;
  doc["desktop_access_prob"] = knob_to_json(desktop_access_prob);
  doc["microsoft_share_of_desktop"] = knob_to_json(microsoft_share_of_desktop);
  doc["opt_in_prob"] = knob_to_json(opt_in_prob);
  doc["ai_use_prob_desktop"] = knob_to_json(ai_use_prob_desktop);
  doc["mobile_ratio"] = knob_to_json(mobile_ratio);
  doc["ai_use_prob_mobile"] = knob_to_json(ai_use_prob_mobile);
  doc["cross_platform_correlation"] = cross_platform_correlation;
  doc["active_time_prob"] = active_time_prob;
  return doc.dump(2) + "\n";
}

EconomyId synthetic_economy_id(int index) {
  if (index < 0 || index >= 26 * 26) {
    throw ConfigError("synthetic economy index out of range: " + std::to_string(index));
  }
  std::string code = "S";
  code.push_back(static_cast<char>('A' + index / 26));
  code.push_back(static_cast<char>('A' + index % 26));
  return EconomyId::must(code);
}

std::vector<Individual> generate(const PopulationSpec& spec) {
  spec.validate();

  const double rho = spec.cross_platform_correlation;
  const double rho_tail = std::sqrt(std::max(0.0, 1.0 - rho * rho));

  std::vector<Individual> population;
  population.reserve(static_cast<std::size_t>(spec.economies) *
                     static_cast<std::size_t>(spec.individuals_per_economy));

  for (int economy = 0; economy < spec.economies; ++economy) {
    const EconomyId id = synthetic_economy_id(economy);
    const double p_desktop = spec.knob(spec.desktop_access_prob, economy);
    const double p_ms = spec.knob(spec.microsoft_share_of_desktop, economy);
    const double p_opt = spec.knob(spec.opt_in_prob, economy);
    const double p_ai_desktop = spec.knob(spec.ai_use_prob_desktop, economy);
    const double p_ai_mobile = spec.knob(spec.ai_use_prob_mobile, economy);

    for (int i = 0; i < spec.individuals_per_economy; ++i) {
      const std::uint64_t stream =
          (static_cast<std::uint64_t>(economy) << 32) | static_cast<std::uint32_t>(i);
      CounterRng rng(spec.seed, stream);

      Individual person;
      person.economy = id;
      person.has_desktop = rng.next_unit() < p_desktop;
      person.is_ms_user = person.has_desktop && rng.next_unit() < p_ms;
      person.opted_in = person.is_ms_user && rng.next_unit() < p_opt;

      if (person.has_desktop) {
        bool meets_threshold = rng.next_unit() < spec.active_time_prob;
        double spread = rng.next_unit();
        person.minutes = meets_threshold
                             ? 90 + static_cast<std::int32_t>(spread * 210.0)
                             : static_cast<std::int32_t>(spread * 90.0);
      }

      // Gaussian copula: correlated latent normals, thresholded at the
      // marginal probabilities.
      double z_desktop = rng.next_normal();
      double z_mobile = rho * z_desktop + rho_tail * rng.next_normal();
      person.uses_ai_desktop =
          person.has_desktop && normal_cdf(z_desktop) < p_ai_desktop;
      person.uses_ai_mobile = normal_cdf(z_mobile) < p_ai_mobile;

      population.push_back(std::move(person));
    }
  }
  return population;
}

double true_share(std::span<const Individual> population) {
  if (population.empty()) {
    throw AnalysisError("true_share over an empty population");
  }
  std::int64_t users = 0;
  for (const auto& person : population) {
    if (person.uses_ai_desktop || person.uses_ai_mobile) {
      ++users;
    }
  }
  return static_cast<double>(users) / static_cast<double>(population.size());
}

double true_share(std::span<const Individual> population, const EconomyId& economy) {
  std::int64_t users = 0;
  std::int64_t total = 0;
  for (const auto& person : population) {
    if (person.economy != economy) {
      continue;
    }
    ++total;
    if (person.uses_ai_desktop || person.uses_ai_mobile) {
      ++users;
    }
  }
  if (total == 0) {
    throw AnalysisError("true_share: no individuals for " + economy.str());
  }
  return static_cast<double>(users) / static_cast<double>(total);
}

SyntheticInputs to_inputs(std::span<const Individual> population,
                          const PopulationSpec& spec) {
  if (population.empty()) {
    throw AnalysisError("to_inputs over an empty population");
  }

  struct Tally {
    std::int64_t individuals = 0;
    std::int64_t ms_users = 0;
    std::int64_t opted = 0;
    std::int64_t mad = 0;              // Windows devices with >= 90 minutes
    std::int64_t desktop_active = 0;   // any-platform devices with >= 90 minutes
    std::int64_t active_users = 0;     // opted-in Windows users past the threshold
    std::int64_t ai_users = 0;         // active users flagged for desktop AI use
  };

  std::map<EconomyId, Tally> tallies;
  for (const auto& person : population) {
    auto& tally = tallies[person.economy];
    ++tally.individuals;
    bool active_device = person.has_desktop && person.minutes >= 90;
    if (active_device) {
      ++tally.desktop_active;
    }
    if (person.is_ms_user) {
      ++tally.ms_users;
      if (person.opted_in) {
        ++tally.opted;
      }
      if (active_device) {
        ++tally.mad;
        if (person.opted_in) {
          ++tally.active_users;
          if (person.uses_ai_desktop) {
            ++tally.ai_users;
          }
        }
      }
    }
  }

  SyntheticInputs inputs;
  inputs.period = Period{2025, 1};

  int economy_index = 0;
  for (const auto& [economy, tally] : tallies) {
    TelemetryAggregate telemetry;
    telemetry.economy = economy;
    telemetry.period = inputs.period;
    telemetry.active_users = tally.active_users;
    telemetry.ai_users = tally.ai_users;
    telemetry.opt_in_rate =
        tally.ms_users > 0
            ? static_cast<double>(tally.opted) / static_cast<double>(tally.ms_users)
            : 0.0;
    telemetry.mad = tally.mad;
    inputs.telemetry.push_back(std::move(telemetry));

    ReferenceRecord reference;
    reference.economy = economy;
    reference.period = inputs.period;
    // Derived so that mad / share recovers the economy's active device
    // count exactly; degenerate tallies fall back to 1 to stay schema-valid.
    reference.windows_market_share =
        (tally.mad > 0 && tally.desktop_active > 0)
            ? static_cast<double>(tally.mad) / static_cast<double>(tally.desktop_active)
            : 1.0;
    reference.mobile_desktop_ratio = spec.knob(spec.mobile_ratio, economy_index);
    reference.working_age_pop = tally.individuals;
    reference.total_pop = tally.individuals;
    inputs.reference.push_back(std::move(reference));
    ++economy_index;
  }
  return inputs;
}

void write_inputs(const SyntheticInputs& inputs, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  const int digits = 12;  // oracle inputs keep more precision than report tables

  csv::Writer telemetry(dir / "telemetry.csv");
  telemetry.row({"economy", "period", "active_users", "ai_users", "opt_in_rate", "mad"});
  for (const auto& t : inputs.telemetry) {
    telemetry.row({t.economy.str(), t.period.str(), csv::format_count(t.active_users),
                   csv::format_count(t.ai_users), csv::format_real(t.opt_in_rate, digits),
                   csv::format_count(t.mad)});
  }

  csv::Writer market(dir / "market.csv");
  market.row({"economy", "period", "windows_market_share", "mobile_desktop_ratio"});
  for (const auto& r : inputs.reference) {
    market.row({r.economy.str(), r.period.str(),
                csv::format_real(r.windows_market_share, digits),
                csv::format_real(r.mobile_desktop_ratio, digits)});
  }

  csv::Writer population(dir / "population.csv");
  population.row({"economy", "period", "working_age_pop", "total_pop"});
  for (const auto& r : inputs.reference) {
    population.row({r.economy.str(), r.period.str(),
                    csv::format_count(r.working_age_pop), csv::format_count(r.total_pop)});
  }

  csv::Writer context(dir / "context.csv");
  context.row({"economy", "period", "internet_penetration", "gdp_per_capita"});
  for (const auto& r : inputs.reference) {
    context.row({r.economy.str(), r.period.str(), "", ""});
  }
}

CheckReport end_to_end_check(const PopulationSpec& spec, double tolerance_pp) {
  spec.validate();

  auto population = generate(spec);
  auto inputs = to_inputs(population, spec);

  // Round-trip through the real parser.
  auto dir = std::filesystem::temp_directory_path() /
             ("aishare-synth-" + std::to_string(counter_hash(spec.seed, 0, 0)));
  write_inputs(inputs, dir);

  CheckReport report;
  report.tolerance_pp = tolerance_pp;
  try {
    auto [telemetry, telemetry_report] =
        ingest::load_table(dir / "telemetry.csv", ingest::telemetry_schema());
    auto [market, market_report] =
        ingest::load_table(dir / "market.csv", ingest::market_schema());
    auto [pop_table, pop_report] =
        ingest::load_table(dir / "population.csv", ingest::population_schema());
    auto [context_table, context_report] =
        ingest::load_table(dir / "context.csv", ingest::context_schema());

    auto joined = ingest::join_snapshots(telemetry, market, pop_table, &context_table);
    if (!joined.report.errors.empty()) {
      throw ValidationError("synthetic inputs failed ingest: " +
                            joined.report.errors.front().message);
    }
    auto snapshots_it = joined.snapshots.find(inputs.period);
    if (snapshots_it == joined.snapshots.end()) {
      throw ValidationError("synthetic inputs produced no snapshots");
    }
    const auto& snapshots = snapshots_it->second;

    estimator::EstimatorConfig config;
    report.context = estimator::build_context(snapshots, snapshots, {}, config);

    for (const auto& snapshot : snapshots) {
      auto estimate = estimator::estimate(snapshot, report.context, config);
      EconomyCheck check;
      check.economy = estimate.economy;
      check.truth = true_share(population, estimate.economy);
      check.estimate = estimate.ai_user_share;
      check.error = check.estimate - check.truth;
      report.max_abs_error_pp =
          std::max(report.max_abs_error_pp, std::abs(check.error) * 100.0);
      report.rows.push_back(std::move(check));
    }
  } catch (...) {
    std::filesystem::remove_all(dir);
    throw;
  }
  std::filesystem::remove_all(dir);

  report.pass = report.max_abs_error_pp <= tolerance_pp;
  return report;
}

PopulationSpec conforming_spec(int economies, int individuals_per_economy,
                               std::uint64_t seed) {
  if (economies < 10) {
    throw ConfigError("conforming spec needs at least 10 economies for the "
                      "normalization cross-section");
  }
  PopulationSpec spec;
  spec.economies = economies;
  spec.individuals_per_economy = individuals_per_economy;
  spec.seed = seed;
  spec.microsoft_share_of_desktop = {0.7};
  spec.opt_in_prob = {1.0};
  spec.cross_platform_correlation = 0.0;
  spec.active_time_prob = 1.0;

  // Device access spans the normalization anchors: the lowest economy sits
  // exactly at 0.1 and everything at or above the capped percentile rank is
  // saturated at 1.0, which makes the scaling factor equal the access
  // probability itself.
  const int anchor = static_cast<int>(0.9 * (economies - 1));
  const double denominator = economies > 1 ? static_cast<double>(economies - 1) : 1.0;
  for (int e = 0; e < economies; ++e) {
    double access = e >= anchor ? 1.0 : 0.1 + 0.9 * static_cast<double>(e) / anchor;
    spec.desktop_access_prob.push_back(access);
    double ai_desktop = 0.06 + 0.19 * static_cast<double>((e * 7) % economies) / denominator;
    spec.ai_use_prob_desktop.push_back(ai_desktop);
    double ratio = 0.9 + 0.6 * static_cast<double>((e * 3) % economies) / denominator;
    spec.mobile_ratio.push_back(ratio);
    // The assumption the estimator rests on: mobile AI share mirrors the
    // desktop AI share scaled by the traffic ratio.
    spec.ai_use_prob_mobile.push_back(std::min(1.0, ai_desktop * access * ratio));
  }
  return spec;
}

}  // namespace aishare::synth
