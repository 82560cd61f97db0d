#pragma once

#include <cstdint>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "aishare/model.hpp"

namespace aishare::aggregate {

struct EligibilityConfig {
  std::int64_t min_total_pop = 2'000'000;
  // The minimum monthly traffic behind a robust country-specific estimate;
  // 5,000 active users keeps a one-point share change above sampling noise.
  std::int64_t min_active_users = 5'000;

  void validate() const;  // throws ConfigError
};

enum class Verdict { eligible, group_to_region, excluded };

std::string_view to_string(Verdict verdict);

struct EligibilityDecision {
  EconomyId economy;
  Verdict verdict = Verdict::excluded;
  std::string reason;
};

/// Eligible iff the economy clears both the population and traffic
/// thresholds; otherwise grouped into its region when one contains it,
/// excluded when none does.
EligibilityDecision classify(const EconomySnapshot& snapshot,
                             std::span<const RegionDef> regions,
                             const EligibilityConfig& config);

/// Merges member snapshots into one regional snapshot: counts are summed,
/// rates are combined as weighted means with their natural weights (users
/// for the opt-in rate, devices for the market share, working-age
/// population otherwise). All members must share one period.
EconomySnapshot aggregate_region(std::span<const EconomySnapshot> members,
                                 const RegionDef& region);

/// Assigns the regional share to each member, flagged region_imputed, with
/// the member's own working-age population behind the absolute user count.
/// Throws AnalysisError if a member already has a direct estimate.
std::vector<ShareEstimate> impute_members(const ShareEstimate& regional,
                                          std::span<const EconomySnapshot> member_snapshots,
                                          const std::set<EconomyId>& already_estimated);

struct GlobalSummary {
  double global_share = 0.0;       // population-weighted mean of shares
  std::int64_t total_users = 0;    // sum of absolute user counts
  std::int64_t total_pop = 0;
};

/// Population-weighted summary over one period's estimates. Callers must
/// not mix a region with its own imputed members (double counting).
GlobalSummary global_summary(std::span<const ShareEstimate> estimates);

/// Rolls member estimates up into one row under the region's id: the share
/// is the population-weighted mean, populations and user counts are summed.
ShareEstimate rollup_estimates(std::span<const ShareEstimate> members,
                               const EconomyId& region, Period period);

/// Trailing moving average; a point is emitted only when the full window of
/// consecutive months exists (no partial windows, no lookahead).
std::vector<SeriesPoint> rolling_average(std::span<const SeriesPoint> series,
                                         int window_months);

struct ConnectedRow {
  EconomyId economy;
  double ai_user_share = 0.0;
  double connected_share = 0.0;
  double internet_penetration = 0.0;
  bool clamped = false;
};

struct ConnectedView {
  std::vector<ConnectedRow> rows;  // ascending by internet penetration
  std::vector<std::string> notes;  // rows skipped for missing penetration
};

/// The k lowest-penetration economies with direct (non-imputed,
/// non-regional) estimates, with their connected-population shares.
ConnectedView connected_population_view(std::span<const ShareEstimate> estimates,
                                        int lowest_k = 15);

}  // namespace aishare::aggregate
