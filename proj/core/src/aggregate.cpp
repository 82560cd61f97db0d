#include "aishare/aggregate.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "aishare/errors.hpp"

namespace aishare::aggregate {

void EligibilityConfig::validate() const {
  if (min_total_pop <= 0 || min_active_users <= 0) {
    throw ConfigError("eligibility thresholds must be strictly positive");
  }
}

std::string_view to_string(Verdict verdict) {
  switch (verdict) {
    case Verdict::eligible:
      return "eligible";
    case Verdict::group_to_region:
      return "group_to_region";
    case Verdict::excluded:
      return "excluded";
  }
  return "excluded";
}

EligibilityDecision classify(const EconomySnapshot& snapshot,
                             std::span<const RegionDef> regions,
                             const EligibilityConfig& config) {
  const auto& economy = snapshot.telemetry.economy;

  std::string reason;
  if (snapshot.reference.total_pop < config.min_total_pop) {
    reason = "population below " + std::to_string(config.min_total_pop);
  }
  if (snapshot.telemetry.active_users < config.min_active_users) {
    if (!reason.empty()) {
      reason += "; ";
    }
    reason += "insufficient traffic (" + std::to_string(snapshot.telemetry.active_users) +
              " active users, need " + std::to_string(config.min_active_users) + ")";
  }
  if (reason.empty()) {
    return {economy, Verdict::eligible, "meets population and traffic thresholds"};
  }

  for (const auto& region : regions) {
    if (region.contains(economy)) {
      return {economy, Verdict::group_to_region, reason};
    }
  }
  return {economy, Verdict::excluded, reason};
}

EconomySnapshot aggregate_region(std::span<const EconomySnapshot> members,
                                 const RegionDef& region) {
  if (members.empty()) {
    throw AnalysisError("cannot aggregate region " + region.region.str() +
                        ": no member snapshots");
  }
  const Period period = members.front().telemetry.period;
  for (const auto& member : members) {
    if (member.telemetry.period != period) {
      throw AnalysisError("cannot aggregate region " + region.region.str() +
                          ": mixed periods " + period.str() + " and " +
                          member.telemetry.period.str());
    }
  }

  // Deterministic reduction order.
  std::vector<const EconomySnapshot*> ordered;
  for (const auto& member : members) {
    ordered.push_back(&member);
  }
  std::sort(ordered.begin(), ordered.end(),
            [](const EconomySnapshot* a, const EconomySnapshot* b) {
              return a->telemetry.economy < b->telemetry.economy;
            });

  std::int64_t active_users = 0;
  std::int64_t ai_users = 0;
  std::int64_t mad = 0;
  std::int64_t working_age_pop = 0;
  std::int64_t total_pop = 0;
  double opt_in_weighted = 0.0;    // weight: active users
  double devices_total = 0.0;      // all-platform devices, mad / market share
  double mobile_weighted = 0.0;    // weight: working-age population
  double penetration_weighted = 0.0;
  std::int64_t penetration_weight = 0;
  double gdp_weighted = 0.0;
  std::int64_t gdp_weight = 0;

  for (const auto* member : ordered) {
    const auto& t = member->telemetry;
    const auto& r = member->reference;
    active_users += t.active_users;
    ai_users += t.ai_users;
    mad += t.mad;
    working_age_pop += r.working_age_pop;
    total_pop += r.total_pop;
    opt_in_weighted += t.opt_in_rate * static_cast<double>(t.active_users);
    devices_total += static_cast<double>(t.mad) / r.windows_market_share;
    mobile_weighted += r.mobile_desktop_ratio * static_cast<double>(r.working_age_pop);
    if (r.internet_penetration) {
      penetration_weighted += *r.internet_penetration * static_cast<double>(r.working_age_pop);
      penetration_weight += r.working_age_pop;
    }
    if (r.gdp_per_capita) {
      gdp_weighted += *r.gdp_per_capita * static_cast<double>(r.working_age_pop);
      gdp_weight += r.working_age_pop;
    }
  }

  EconomySnapshot out;
  out.telemetry.economy = region.region;
  out.telemetry.period = period;
  out.telemetry.active_users = active_users;
  out.telemetry.ai_users = ai_users;
  out.telemetry.mad = mad;
  out.telemetry.opt_in_rate =
      active_users > 0 ? opt_in_weighted / static_cast<double>(active_users) : 0.0;

  out.reference.economy = region.region;
  out.reference.period = period;
  // Pooled share of the union of member device bases; this keeps the
  // regional device count (mad / share) equal to the sum of member counts.
  out.reference.windows_market_share =
      devices_total > 0.0 ? static_cast<double>(mad) / devices_total : 1.0;
  out.reference.mobile_desktop_ratio =
      working_age_pop > 0 ? mobile_weighted / static_cast<double>(working_age_pop) : 0.0;
  out.reference.working_age_pop = working_age_pop;
  out.reference.total_pop = total_pop;
  if (penetration_weight > 0) {
    out.reference.internet_penetration =
        penetration_weighted / static_cast<double>(penetration_weight);
  }
  if (gdp_weight > 0) {
    out.reference.gdp_per_capita = gdp_weighted / static_cast<double>(gdp_weight);
  }
  return out;
}

std::vector<ShareEstimate> impute_members(const ShareEstimate& regional,
                                          std::span<const EconomySnapshot> member_snapshots,
                                          const std::set<EconomyId>& already_estimated) {
  std::vector<ShareEstimate> out;
  out.reserve(member_snapshots.size());
  for (const auto& member : member_snapshots) {
    const auto& economy = member.telemetry.economy;
    if (already_estimated.contains(economy)) {
      throw AnalysisError("double assignment: " + economy.str() +
                          " already has a direct estimate and cannot be imputed from " +
                          regional.economy.str());
    }
    ShareEstimate estimate = regional;
    estimate.economy = economy;
    estimate.working_age_pop = member.reference.working_age_pop;
    estimate.ai_users_abs = std::llround(
        regional.ai_user_share * static_cast<double>(member.reference.working_age_pop));
    estimate.internet_penetration = member.reference.internet_penetration;
    estimate.gdp_per_capita = member.reference.gdp_per_capita;
    if (member.reference.internet_penetration &&
        *member.reference.internet_penetration > 0.0) {
      double connected = regional.ai_user_share / *member.reference.internet_penetration;
      estimate.connected_clamped = connected > 1.0;
      estimate.connected_share = std::min(connected, 1.0);
    } else {
      estimate.connected_share.reset();
      estimate.connected_clamped = false;
    }
    estimate.imputation = Imputation::region_imputed;
    out.push_back(std::move(estimate));
  }
  return out;
}

GlobalSummary global_summary(std::span<const ShareEstimate> estimates) {
  if (estimates.empty()) {
    throw AnalysisError("global summary over an empty estimate set");
  }

  std::vector<const ShareEstimate*> ordered;
  ordered.reserve(estimates.size());
  for (const auto& estimate : estimates) {
    ordered.push_back(&estimate);
  }
  std::sort(ordered.begin(), ordered.end(),
            [](const ShareEstimate* a, const ShareEstimate* b) {
              return a->economy < b->economy;
            });

  const Period period = ordered.front()->period;
  GlobalSummary summary;
  double weighted_share = 0.0;
  const ShareEstimate* previous = nullptr;
  for (const auto* estimate : ordered) {
    if (previous != nullptr && previous->economy == estimate->economy) {
      throw AnalysisError("duplicate economy in global summary: " +
                          estimate->economy.str());
    }
    if (estimate->period != period) {
      throw AnalysisError("global summary over mixed periods: " + period.str() +
                          " and " + estimate->period.str());
    }
    weighted_share +=
        estimate->ai_user_share * static_cast<double>(estimate->working_age_pop);
    summary.total_users += estimate->ai_users_abs;
    summary.total_pop += estimate->working_age_pop;
    previous = estimate;
  }
  if (summary.total_pop <= 0) {
    throw AnalysisError("global summary has zero total working-age population");
  }
  summary.global_share = weighted_share / static_cast<double>(summary.total_pop);
  return summary;
}

ShareEstimate rollup_estimates(std::span<const ShareEstimate> members,
                               const EconomyId& region, Period period) {
  GlobalSummary summary = global_summary(members);
  ShareEstimate out;
  out.economy = region;
  out.period = period;
  out.ai_user_share = summary.global_share;
  out.working_age_pop = summary.total_pop;
  out.ai_users_abs = summary.total_users;  // summed, not re-rounded
  out.imputation = Imputation::direct;
  return out;
}

std::vector<SeriesPoint> rolling_average(std::span<const SeriesPoint> series,
                                         int window_months) {
  if (window_months < 1) {
    throw AnalysisError("rolling window must be at least 1 month");
  }
  if (series.empty()) {
    return {};
  }
  const auto& economy = series.front().economy;
  for (std::size_t i = 1; i < series.size(); ++i) {
    if (series[i].economy != economy) {
      throw AnalysisError("rolling average expects a single economy, found " +
                          economy.str() + " and " + series[i].economy.str());
    }
    if (series[i].period <= series[i - 1].period) {
      throw AnalysisError("rolling average expects periods sorted strictly ascending");
    }
  }

  std::map<int, double> by_index;
  for (const auto& point : series) {
    by_index.emplace(point.period.index(), point.value);
  }

  std::vector<SeriesPoint> out;
  for (const auto& point : series) {
    double sum = 0.0;
    bool complete = true;
    for (int back = 0; back < window_months; ++back) {
      auto it = by_index.find(point.period.index() - back);
      if (it == by_index.end()) {
        complete = false;
        break;
      }
      sum += it->second;
    }
    if (complete) {
      out.push_back({economy, point.period, sum / window_months});
    }
  }
  return out;
}

ConnectedView connected_population_view(std::span<const ShareEstimate> estimates,
                                        int lowest_k) {
  ConnectedView view;
  std::vector<const ShareEstimate*> candidates;
  for (const auto& estimate : estimates) {
    if (estimate.imputation != Imputation::direct || estimate.economy.is_region()) {
      continue;  // economy-specific estimates only
    }
    if (!estimate.internet_penetration || !(*estimate.internet_penetration > 0.0)) {
      view.notes.push_back(estimate.economy.str() +
                           ": skipped, internet penetration unavailable");
      continue;
    }
    candidates.push_back(&estimate);
  }
  std::sort(candidates.begin(), candidates.end(),
            [](const ShareEstimate* a, const ShareEstimate* b) {
              if (*a->internet_penetration != *b->internet_penetration) {
                return *a->internet_penetration < *b->internet_penetration;
              }
              return a->economy < b->economy;
            });
  if (lowest_k >= 0 && candidates.size() > static_cast<std::size_t>(lowest_k)) {
    candidates.resize(static_cast<std::size_t>(lowest_k));
  }
  for (const auto* estimate : candidates) {
    double penetration = *estimate->internet_penetration;
    double connected = estimate->ai_user_share / penetration;
    view.rows.push_back({estimate->economy, estimate->ai_user_share,
                         std::min(connected, 1.0), penetration, connected > 1.0});
  }
  return view;
}

}  // namespace aishare::aggregate
