#include "aishare/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "aishare/errors.hpp"

namespace aishare::estimator {

namespace {

double clamp01(double v) { return std::clamp(v, 0.0, 1.0); }

/// Percentile by linear interpolation between closest ranks (the
/// convention used by numpy's default and R type 7).
double percentile_linear(const std::vector<double>& sorted, double q) {
  const std::size_t n = sorted.size();
  if (n == 1) {
    return sorted.front();
  }
  double h = q * static_cast<double>(n - 1);
  auto lo = static_cast<std::size_t>(h);
  if (lo >= n - 1) {
    return sorted.back();
  }
  double frac = h - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

}  // namespace

void EstimatorConfig::validate() const {
  if (!(scaling_floor >= 0.0) || !(scaling_span > 0.0)) {
    throw ConfigError("estimator: scaling_floor must be >= 0 and scaling_span > 0");
  }
  if (scaling_floor + scaling_span > 1.0 + 1e-12) {
    throw ConfigError("estimator: scaling_floor + scaling_span must not exceed 1.0");
  }
  if (!(percentile_cap > 0.5) || !(percentile_cap <= 1.0)) {
    throw ConfigError("estimator: percentile_cap must lie in (0.5, 1.0]");
  }
  if (!(mobile_cap_multiplier > 0.0)) {
    throw ConfigError("estimator: mobile_cap_multiplier must be positive");
  }
}

double raw_usage_share(const TelemetryAggregate& telemetry) {
  if (telemetry.active_users <= 0) {
    throw AnalysisError("no qualifying users for " + telemetry.economy.str() + " " +
                        telemetry.period.str() +
                        "; exclude the economy or group it into a region");
  }
  return static_cast<double>(telemetry.ai_users) /
         static_cast<double>(telemetry.active_users);
}

double adjust_opt_in(double alpha, double gamma, const GlobalContext& context) {
  if (!(context.alpha_bar > 0.0)) {
    throw ConfigError("degenerate context: global opt-in rate is zero");
  }
  if (alpha > context.alpha_bar) {
    return gamma;
  }
  double weight = alpha / context.alpha_bar;  // 1 at the boundary, 0 at alpha = 0
  return context.gamma_bar * (1.0 - weight) + gamma * weight;
}

double device_ratio(const EconomySnapshot& snapshot) {
  const auto& r = snapshot.reference;
  if (!(r.windows_market_share > 0.0)) {
    throw AnalysisError("windows_market_share must be positive for " +
                        r.economy.str() + " " + r.period.str());
  }
  if (r.working_age_pop <= 0) {
    throw AnalysisError("working_age_pop must be positive for " + r.economy.str() +
                        " " + r.period.str());
  }
  double devices = static_cast<double>(snapshot.telemetry.mad) / r.windows_market_share;
  return devices / static_cast<double>(r.working_age_pop);
}

std::pair<double, double> ratio_context(const std::map<EconomyId, double>& ratios,
                                        const EstimatorConfig& config) {
  if (ratios.size() < 10) {
    throw AnalysisError("insufficient cross-section for normalization: " +
                        std::to_string(ratios.size()) + " economies, need at least 10");
  }
  std::vector<double> sorted;
  sorted.reserve(ratios.size());
  for (const auto& [economy, ratio] : ratios) {
    sorted.push_back(ratio);
  }
  std::sort(sorted.begin(), sorted.end());

  double ratio_min = sorted.front();
  double ratio_cap = percentile_linear(sorted, config.percentile_cap);
  if (!(ratio_cap > ratio_min)) {
    throw AnalysisError("degenerate ratio distribution: percentile equals minimum");
  }
  return {ratio_min, ratio_cap};
}

ScalingResult device_scaling_detail(double ratio, const GlobalContext& context,
                                    const EstimatorConfig& config) {
  double span = context.ratio_p90 - context.ratio_min;
  double normalized = (ratio - context.ratio_min) / span;
  double raw = normalized * config.scaling_span + config.scaling_floor;
  double value = std::clamp(raw, config.scaling_floor, 1.0);
  return {value, raw != value};
}

double device_scaling(double ratio, const GlobalContext& context,
                      const EstimatorConfig& config) {
  return device_scaling_detail(ratio, context, config).value;
}

double mobile_factor(double ratio, double region_avg, const EstimatorConfig& config) {
  if (ratio > config.mobile_cap_multiplier * region_avg) {
    return region_avg;
  }
  return ratio;
}

CombinedShares combine_shares(double desktop_share, double mobile_factor,
                              const EstimatorConfig& config) {
  double mobile_share = desktop_share * mobile_factor;
  if (config.clamp_shares) {
    mobile_share = clamp01(mobile_share);
  }
  // Union of independent events; the complement form keeps the result
  // inside [0,1] by construction.
  double union_share = 1.0 - (1.0 - desktop_share) * (1.0 - mobile_share);
  return {mobile_share, union_share};
}

GlobalContext build_context(std::span<const EconomySnapshot> units,
                            std::span<const EconomySnapshot> all_economies,
                            std::span<const RegionDef> regions,
                            const EstimatorConfig& config) {
  config.validate();
  if (units.empty()) {
    throw AnalysisError("cannot build context from an empty cross-section");
  }

  // Reductions run over economies sorted by id so results are reproducible.
  std::vector<const EconomySnapshot*> ordered;
  ordered.reserve(units.size());
  for (const auto& snapshot : units) {
    ordered.push_back(&snapshot);
  }
  std::sort(ordered.begin(), ordered.end(),
            [](const EconomySnapshot* a, const EconomySnapshot* b) {
              return a->telemetry.economy < b->telemetry.economy;
            });

  GlobalContext context;

  if (config.context_mode == ContextMode::pooled) {
    double total_active = 0.0;
    double total_ai = 0.0;
    double weighted_alpha = 0.0;
    for (const auto* s : ordered) {
      auto active = static_cast<double>(s->telemetry.active_users);
      total_active += active;
      total_ai += static_cast<double>(s->telemetry.ai_users);
      weighted_alpha += s->telemetry.opt_in_rate * active;
    }
    if (!(total_active > 0.0)) {
      throw AnalysisError("cannot build context: no active users in the cross-section");
    }
    context.gamma_bar = total_ai / total_active;
    context.alpha_bar = weighted_alpha / total_active;
  } else {
    double sum_gamma = 0.0;
    double sum_alpha = 0.0;
    for (const auto* s : ordered) {
      sum_gamma += raw_usage_share(s->telemetry);
      sum_alpha += s->telemetry.opt_in_rate;
    }
    context.gamma_bar = sum_gamma / static_cast<double>(ordered.size());
    context.alpha_bar = sum_alpha / static_cast<double>(ordered.size());
  }

  std::map<EconomyId, double> ratios;
  for (const auto* s : ordered) {
    ratios.emplace(s->telemetry.economy, device_ratio(*s));
  }
  std::tie(context.ratio_min, context.ratio_p90) = ratio_context(ratios, config);

  // Mobile ratios come from the raw economy rows, not the aggregates.
  std::map<EconomyId, double> mobile_ratio_of;
  for (const auto& s : all_economies) {
    mobile_ratio_of.emplace(s.telemetry.economy, s.reference.mobile_desktop_ratio);
  }
  for (const auto& region : regions) {
    double sum = 0.0;
    int count = 0;
    for (const auto& member : region.members) {
      auto it = mobile_ratio_of.find(member);
      if (it != mobile_ratio_of.end()) {
        sum += it->second;
        ++count;
      }
      context.region_of.emplace(member, region.region);
    }
    if (count > 0) {
      context.regional_mobile_avg.emplace(region.region, sum / count);
    }
  }
  double sum_all = 0.0;
  for (const auto& [economy, ratio] : mobile_ratio_of) {
    sum_all += ratio;
  }
  context.mobile_avg_global =
      mobile_ratio_of.empty() ? 0.0 : sum_all / static_cast<double>(mobile_ratio_of.size());

  return context;
}

ShareEstimate estimate(const EconomySnapshot& snapshot, const GlobalContext& context,
                       const EstimatorConfig& config) {
  const auto& telemetry = snapshot.telemetry;
  const auto& reference = snapshot.reference;

  ShareEstimate out;
  out.economy = telemetry.economy;
  out.period = telemetry.period;
  out.working_age_pop = reference.working_age_pop;
  out.internet_penetration = reference.internet_penetration;
  out.gdp_per_capita = reference.gdp_per_capita;

  try {
    out.gamma_raw = raw_usage_share(telemetry);
    out.gamma_adjusted = adjust_opt_in(telemetry.opt_in_rate, out.gamma_raw, context);
    out.device_ratio = device_ratio(snapshot);
  } catch (const Error& e) {
    throw AnalysisError("estimate failed for " + telemetry.economy.str() + " " +
                        telemetry.period.str() + ": " + e.what());
  }

  auto scaling = device_scaling_detail(out.device_ratio, context, config);
  out.device_scaling = scaling.value;
  out.scaling_clamped = scaling.clamped;
  out.desktop_share = out.gamma_adjusted * out.device_scaling;

  double raw_ratio = reference.mobile_desktop_ratio;
  double region_avg = context.mobile_avg_for(telemetry.economy);
  out.mobile_factor = mobile_factor(raw_ratio, region_avg, config);
  out.mobile_capped = out.mobile_factor != raw_ratio;

  auto combined = combine_shares(out.desktop_share, out.mobile_factor, config);
  out.mobile_share = combined.mobile_share;
  out.ai_user_share = combined.ai_user_share;
  out.naive_product = out.gamma_adjusted * out.device_scaling * out.mobile_factor;

  out.ai_users_abs = std::llround(out.ai_user_share *
                                  static_cast<double>(reference.working_age_pop));

  if (reference.internet_penetration && *reference.internet_penetration > 0.0) {
    double connected = out.ai_user_share / *reference.internet_penetration;
    out.connected_clamped = connected > 1.0;
    out.connected_share = std::min(connected, 1.0);
  }

  out.imputation = Imputation::direct;
  return out;
}

}  // namespace aishare::estimator
