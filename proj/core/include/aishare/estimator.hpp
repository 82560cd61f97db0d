#pragma once

#include <map>
#include <span>
#include <utility>

#include "aishare/model.hpp"

namespace aishare::estimator {

enum class ContextMode {
  pooled,           // gamma_bar = sum(ai) / sum(active); alpha_bar user-weighted
  unweighted_mean,  // plain means of the per-economy rates
};

struct EstimatorConfig {
  double scaling_floor = 0.1;          // additive constant of the device normalization
  double scaling_span = 0.9;           // multiplicative span of the device normalization
  double percentile_cap = 0.90;        // cross-sectional percentile anchoring the upper end
  double mobile_cap_multiplier = 1.8;  // substitute the regional average above this multiple
  bool clamp_shares = true;
  ContextMode context_mode = ContextMode::pooled;

  void validate() const;  // throws ConfigError
};

/// gamma: share of active opted-in users that used an AI tool.
/// Throws AnalysisError when active_users is zero (the economy must be
/// excluded or region-grouped instead).
double raw_usage_share(const TelemetryAggregate& telemetry);

/// Blends the observed usage share toward the global average in markets
/// whose opt-in rate falls below the global rate. Above the global rate the
/// observed value is used as-is; the blend weight on the observed value is
/// alpha / alpha_bar, so the two branches agree at the boundary.
double adjust_opt_in(double alpha, double gamma, const GlobalContext& context);

/// PC/tablet devices per working-age person: (mad / windows_market_share)
/// divided by working-age population. May exceed 1 in high-access economies.
double device_ratio(const EconomySnapshot& snapshot);

/// Cross-sectional anchors for the device normalization: the minimum ratio
/// and the capped upper percentile (linear interpolation between closest
/// ranks). Requires at least 10 economies and a non-degenerate spread.
std::pair<double, double> ratio_context(const std::map<EconomyId, double>& ratios,
                                        const EstimatorConfig& config);

struct ScalingResult {
  double value = 0.0;
  bool clamped = false;  // the un-clamped normalization left [floor, 1]
};

/// Normalizes a device ratio onto [scaling_floor, 1]: floor at the
/// cross-sectional minimum, 1 at the capped percentile, hard-clamped above
/// it so high-access economies saturate instead of overshooting.
ScalingResult device_scaling_detail(double ratio, const GlobalContext& context,
                                    const EstimatorConfig& config);
double device_scaling(double ratio, const GlobalContext& context,
                      const EstimatorConfig& config);

/// The regional capping rule for the mobile/desktop traffic ratio: ratios
/// above cap_multiplier times the regional average are replaced by the
/// regional average.
double mobile_factor(double ratio, double region_avg, const EstimatorConfig& config);

struct CombinedShares {
  double mobile_share = 0.0;
  double ai_user_share = 0.0;
};

/// mobile_share = desktop_share * mobile_factor (clamped to [0,1]);
/// ai_user_share = desktop + mobile - desktop*mobile, the independent-union
/// overlap correction.
CombinedShares combine_shares(double desktop_share, double mobile_factor,
                              const EstimatorConfig& config);

/// Computes the per-period cross-economy context. `units` is the estimation
/// cross-section (eligible economies plus regional aggregates) and feeds the
/// pooled rates and ratio anchors; `all_economies` supplies the raw
/// mobile/desktop ratios behind the regional capping averages.
GlobalContext build_context(std::span<const EconomySnapshot> units,
                            std::span<const EconomySnapshot> all_economies,
                            std::span<const RegionDef> regions,
                            const EstimatorConfig& config);

/// Full per-economy chain: raw share -> opt-in blend -> device scaling ->
/// mobile extrapolation -> overlap-corrected union, plus absolute users and
/// the connected-population share when internet penetration is known.
ShareEstimate estimate(const EconomySnapshot& snapshot, const GlobalContext& context,
                       const EstimatorConfig& config);

}  // namespace aishare::estimator
