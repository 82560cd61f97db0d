#include "aishare/analytics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>

#include <boost/math/distributions/students_t.hpp>

#include "aishare/errors.hpp"
#include "aishare/rng.hpp"

namespace aishare::analytics {

std::vector<RankingRow> rank_economies(std::span<const ShareEstimate> estimates,
                                       std::optional<int> top_k) {
  std::set<EconomyId> seen;
  for (const auto& estimate : estimates) {
    if (!seen.insert(estimate.economy).second) {
      throw AnalysisError("duplicate economy in ranking input: " +
                          estimate.economy.str());
    }
  }

  std::vector<const ShareEstimate*> ordered;
  ordered.reserve(estimates.size());
  for (const auto& estimate : estimates) {
    ordered.push_back(&estimate);
  }
  std::sort(ordered.begin(), ordered.end(),
            [](const ShareEstimate* a, const ShareEstimate* b) {
              if (a->ai_user_share != b->ai_user_share) {
                return a->ai_user_share > b->ai_user_share;
              }
              return a->economy < b->economy;
            });

  std::vector<RankingRow> rows;
  rows.reserve(ordered.size());
  for (const auto* estimate : ordered) {
    rows.push_back({static_cast<int>(rows.size()) + 1, estimate->economy,
                    estimate->ai_user_share});
    if (top_k && static_cast<int>(rows.size()) >= *top_k) {
      break;
    }
  }
  return rows;
}

std::vector<double> fractional_ranks(std::span<const double> values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });

  std::vector<double> ranks(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && values[order[j + 1]] == values[order[i]]) {
      ++j;
    }
    // Tied block [i, j] shares the mean rank (1-based).
    double rank = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t k = i; k <= j; ++k) {
      ranks[order[k]] = rank;
    }
    i = j + 1;
  }
  return ranks;
}

namespace {

double pearson(std::span<const double> x, std::span<const double> y) {
  const auto n = static_cast<double>(x.size());
  double sum_x = 0.0;
  double sum_y = 0.0;
  double sum_xy = 0.0;
  double sum_xx = 0.0;
  double sum_yy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sum_x += x[i];
    sum_y += y[i];
    sum_xy += x[i] * y[i];
    sum_xx += x[i] * x[i];
    sum_yy += y[i] * y[i];
  }
  double var_x = n * sum_xx - sum_x * sum_x;
  double var_y = n * sum_yy - sum_y * sum_y;
  if (!(var_x > 0.0) || !(var_y > 0.0)) {
    throw AnalysisError("zero rank variance: an input vector is constant");
  }
  return (n * sum_xy - sum_x * sum_y) / std::sqrt(var_x * var_y);
}

double rank_rho(std::span<const double> x, std::span<const double> y) {
  auto rank_x = fractional_ranks(x);
  auto rank_y = fractional_ranks(y);
  return pearson(rank_x, rank_y);
}

}  // namespace

SpearmanResult spearman(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) {
    throw AnalysisError("spearman: input lengths differ");
  }
  if (x.size() < 3) {
    throw AnalysisError("spearman: need at least 3 observations");
  }
  const int n = static_cast<int>(x.size());
  double rho = rank_rho(x, y);

  double p_value;
  if (std::abs(rho) >= 1.0) {
    p_value = 0.0;
  } else {
    double t = std::abs(rho) * std::sqrt((n - 2) / (1.0 - rho * rho));
    boost::math::students_t dist(n - 2);
    p_value = 2.0 * boost::math::cdf(boost::math::complement(dist, t));
  }
  return {rho, p_value, n};
}

double spearman_permutation_pvalue(std::span<const double> x, std::span<const double> y,
                                   int shuffles, std::uint64_t seed) {
  if (x.size() != y.size() || x.size() < 3) {
    throw AnalysisError("spearman permutation: invalid input lengths");
  }
  if (shuffles < 1) {
    throw AnalysisError("spearman permutation: need at least one shuffle");
  }
  const double observed = std::abs(rank_rho(x, y));

  std::vector<double> shuffled(y.begin(), y.end());
  CounterRng rng(seed, 0);
  std::int64_t at_least = 0;
  for (int s = 0; s < shuffles; ++s) {
    // Fisher-Yates with the deterministic counter stream.
    for (std::size_t i = shuffled.size() - 1; i > 0; --i) {
      auto j = static_cast<std::size_t>(rng.next_below(i + 1));
      std::swap(shuffled[i], shuffled[j]);
    }
    if (std::abs(rank_rho(x, shuffled)) >= observed - 1e-12) {
      ++at_least;
    }
  }
  // Add-one estimate keeps the p-value away from an impossible zero.
  return static_cast<double>(at_least + 1) / static_cast<double>(shuffles + 1);
}

LogLinearFit loglinear_fit(std::span<const double> gdp_per_capita,
                           std::span<const double> share) {
  if (gdp_per_capita.size() != share.size()) {
    throw AnalysisError("loglinear fit: input lengths differ");
  }

  LogLinearFit result;
  std::vector<double> log_gdp;
  std::vector<double> used_share;
  for (std::size_t i = 0; i < gdp_per_capita.size(); ++i) {
    if (!(gdp_per_capita[i] > 0.0)) {
      result.rejected.push_back(i);
      continue;
    }
    result.accepted.push_back(i);
    log_gdp.push_back(std::log(gdp_per_capita[i]));
    used_share.push_back(share[i]);
  }
  const std::size_t n = log_gdp.size();
  if (n < 3) {
    throw AnalysisError("loglinear fit: need at least 3 rows with positive gdp, have " +
                        std::to_string(n));
  }

  double mean_x = std::accumulate(log_gdp.begin(), log_gdp.end(), 0.0) / n;
  double mean_y = std::accumulate(used_share.begin(), used_share.end(), 0.0) / n;
  double sxx = 0.0;
  double sxy = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double dx = log_gdp[i] - mean_x;
    double dy = used_share[i] - mean_y;
    sxx += dx * dx;
    sxy += dx * dy;
    syy += dy * dy;
  }
  if (!(sxx > 0.0)) {
    throw AnalysisError("loglinear fit: gdp values are constant");
  }

  result.fit.slope = sxy / sxx;
  result.fit.intercept = mean_y - result.fit.slope * mean_x;
  result.fit.n = static_cast<int>(n);

  double ss_res = 0.0;
  result.residuals.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    double fitted = result.fit.intercept + result.fit.slope * log_gdp[i];
    double residual = used_share[i] - fitted;
    result.residuals.push_back(residual);
    ss_res += residual * residual;
  }
  result.fit.r_squared = syy > 0.0 ? 1.0 - ss_res / syy : 1.0;
  return result;
}

EventDelta event_delta(std::span<const SeriesPoint> series, Period event,
                       int pre_months, int post_months) {
  if (pre_months < 1 || post_months < 1) {
    throw AnalysisError("event windows must be at least 1 month");
  }
  std::map<int, double> by_index;
  for (const auto& point : series) {
    by_index.emplace(point.period.index(), point.value);
  }

  auto window_mean = [&](int first, int count) {
    double sum = 0.0;
    std::string missing;
    for (int offset = 0; offset < count; ++offset) {
      auto it = by_index.find(first + offset);
      if (it == by_index.end()) {
        auto period = Period::from_index(first + offset);
        missing += missing.empty() ? period.str() : ", " + period.str();
      } else {
        sum += it->second;
      }
    }
    if (!missing.empty()) {
      throw AnalysisError("event window incomplete, missing periods: " + missing);
    }
    return sum / count;
  };

  EventDelta delta;
  delta.pre_mean = window_mean(event.index() - pre_months, pre_months);
  delta.post_mean = window_mean(event.index(), post_months);
  delta.abs_change = delta.post_mean - delta.pre_mean;
  if (delta.pre_mean != 0.0) {
    delta.rel_change = delta.post_mean / delta.pre_mean - 1.0;
  }
  return delta;
}

}  // namespace aishare::analytics
