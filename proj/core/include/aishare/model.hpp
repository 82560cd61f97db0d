#pragma once

#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace aishare {

/// Identifier for an economy: an ISO 3166-1 alpha-3 code ("ZMB"), or a
/// reserved "R-" prefix plus three letters for aggregation regions ("R-EAF").
/// Regions live in the same identifier space as economies so downstream
/// tables never need a union type.
class EconomyId {
 public:
  EconomyId() = default;

  static std::optional<EconomyId> parse(std::string_view text);
  static bool is_valid(std::string_view text);
  /// Parse or throw std::invalid_argument; for literals in code and tests.
  static EconomyId must(std::string_view text);

  const std::string& str() const noexcept { return code_; }
  bool is_region() const noexcept { return code_.size() == 5; }

  friend bool operator==(const EconomyId&, const EconomyId&) = default;
  friend auto operator<=>(const EconomyId&, const EconomyId&) = default;

 private:
  explicit EconomyId(std::string code) : code_(std::move(code)) {}
  std::string code_;
};

/// Calendar month. Totally ordered; arithmetic crosses year boundaries.
struct Period {
  int year = 0;
  int month = 0;  // 1..12

  static std::optional<Period> parse(std::string_view text);  // "YYYY-MM"
  std::string str() const;

  /// Months since year 0; gives the total order and window arithmetic.
  int index() const noexcept { return year * 12 + (month - 1); }
  static Period from_index(int idx) noexcept {
    return Period{idx / 12, idx % 12 + 1};
  }
  Period next() const noexcept { return from_index(index() + 1); }
  Period prev() const noexcept { return from_index(index() - 1); }

  friend bool operator==(const Period&, const Period&) = default;
  friend auto operator<=>(const Period&, const Period&) = default;
};

/// Pre-aggregated telemetry counts for one economy and month. The activity
/// threshold (90 usage minutes per month) is applied upstream: active_users
/// arrives post-filter.
struct TelemetryAggregate {
  EconomyId economy;
  Period period;
  std::int64_t active_users = 0;  // opted-in users meeting the activity threshold
  std::int64_t ai_users = 0;      // active users that visited at least one AI site/app
  double opt_in_rate = 0.0;       // fraction sharing diagnostic data (alpha); the
                                  // user-vs-device measurement basis is whatever the
                                  // data provider used, we do not reinterpret it
  std::int64_t mad = 0;           // monthly active Windows devices
};

/// Third-party reference data for one economy and month.
struct ReferenceRecord {
  EconomyId economy;
  Period period;
  double windows_market_share = 0.0;  // Windows share of PC/tablet devices, must be > 0
  double mobile_desktop_ratio = 0.0;  // mobile traffic / desktop traffic
  std::int64_t working_age_pop = 0;   // persons aged 15-64
  std::optional<double> internet_penetration;  // fraction of population online
  std::optional<double> gdp_per_capita;
  std::int64_t total_pop = 0;
};

/// Mapping from member economies to an aggregation region.
struct RegionDef {
  EconomyId region;  // R-prefixed
  std::string name;
  std::vector<EconomyId> members;

  bool contains(const EconomyId& economy) const;
};

/// All inputs for one economy and month, joined.
struct EconomySnapshot {
  TelemetryAggregate telemetry;
  ReferenceRecord reference;
};

/// Cross-economy quantities required by the per-economy math, computed once
/// per period over the estimation cross-section.
struct GlobalContext {
  double alpha_bar = 0.0;  // global opt-in rate
  double gamma_bar = 0.0;  // global AI usage share
  double ratio_min = 0.0;  // minimum device ratio across the cross-section
  double ratio_p90 = 0.0;  // upper percentile anchor of the device ratio

  // Unweighted mean of member economies' mobile/desktop ratios, per region.
  std::map<EconomyId, double> regional_mobile_avg;
  // Fallback average for economies that belong to no region.
  double mobile_avg_global = 0.0;
  // Member economy -> region, resolved from the region definitions.
  std::map<EconomyId, EconomyId> region_of;

  /// The capping average applicable to an economy: its region's mean when it
  /// belongs to one, the global mean otherwise.
  double mobile_avg_for(const EconomyId& economy) const;
};

enum class Imputation { direct, region_imputed };

std::string_view to_string(Imputation imputation);
std::optional<Imputation> imputation_from_string(std::string_view text);

/// The computed indicator bundle for one economy and period. Every
/// intermediate value is retained so a published number can be traced back
/// to its inputs.
struct ShareEstimate {
  EconomyId economy;
  Period period;

  double gamma_raw = 0.0;       // ai_users / active_users
  double gamma_adjusted = 0.0;  // after opt-in blending
  double device_ratio = 0.0;    // PC/tablet devices per working-age person
  double device_scaling = 0.0;  // normalized device access, in [scaling_floor, 1]
  bool scaling_clamped = false;
  double desktop_share = 0.0;   // gamma_adjusted * device_scaling
  double mobile_factor = 0.0;   // mobile/desktop ratio after regional capping
  bool mobile_capped = false;
  double mobile_share = 0.0;    // desktop_share * mobile_factor, clamped
  double naive_product = 0.0;   // diagnostic triple product, no overlap correction
  double ai_user_share = 0.0;   // desktop + mobile - desktop*mobile

  std::int64_t working_age_pop = 0;
  std::int64_t ai_users_abs = 0;  // round(ai_user_share * working_age_pop)

  std::optional<double> internet_penetration;
  std::optional<double> connected_share;  // ai_user_share / penetration, clamped to 1
  bool connected_clamped = false;
  std::optional<double> gdp_per_capita;

  Imputation imputation = Imputation::direct;
};

/// One (economy, period, value) observation for time-series analytics.
struct SeriesPoint {
  EconomyId economy;
  Period period;
  double value = 0.0;
};

/// A named invariant breach found by validate_snapshot.
struct Violation {
  std::string field;
  std::string rule;
  std::string observed;
};

/// Checks every snapshot invariant. Total: never throws, every field
/// combination yields either a pass or a named violation.
std::vector<Violation> validate_snapshot(const EconomySnapshot& snapshot);

}  // namespace aishare
