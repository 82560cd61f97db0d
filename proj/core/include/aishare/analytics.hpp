#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "aishare/model.hpp"

namespace aishare::analytics {

struct RankingRow {
  int rank = 0;  // 1-based
  EconomyId economy;
  double value = 0.0;
};

/// Descending by share; exact ties break by ascending economy id. Duplicate
/// economies are an error. `top_k` truncates after sorting.
std::vector<RankingRow> rank_economies(std::span<const ShareEstimate> estimates,
                                       std::optional<int> top_k = std::nullopt);

/// Fractional (average) ranks, ties sharing the mean of their rank block.
std::vector<double> fractional_ranks(std::span<const double> values);

struct SpearmanResult {
  double rho = 0.0;
  double p_value = 1.0;
  int n = 0;
};

/// Spearman rank correlation: Pearson correlation of fractional ranks, with
/// a two-sided p-value from the large-sample t approximation (n-2 degrees
/// of freedom). Constant input is an error (zero rank variance).
SpearmanResult spearman(std::span<const double> x, std::span<const double> y);

/// Permutation p-value for small samples: the fraction of seeded shuffles
/// of y whose |rho| reaches the observed one.
double spearman_permutation_pvalue(std::span<const double> x, std::span<const double> y,
                                   int shuffles = 1'000'000,
                                   std::uint64_t seed = 0x51c0ffee);

struct TrendFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
  int n = 0;
};

struct LogLinearFit {
  TrendFit fit;
  std::vector<std::size_t> accepted;  // input indices used
  std::vector<double> residuals;      // aligned with `accepted`; share - fitted
  std::vector<std::size_t> rejected;  // input indices with nonpositive gdp
};

/// OLS of share on ln(gdp per capita). Rows with nonpositive gdp are
/// rejected with a note; fewer than 3 usable rows is an error.
LogLinearFit loglinear_fit(std::span<const double> gdp_per_capita,
                           std::span<const double> share);

struct EventDelta {
  double pre_mean = 0.0;
  double post_mean = 0.0;
  double abs_change = 0.0;
  std::optional<double> rel_change;  // absent when the pre-event mean is zero
};

/// Mean over [event - pre_months, event - 1] against mean over
/// [event, event + post_months - 1]. Missing months are an error naming the
/// gaps.
EventDelta event_delta(std::span<const SeriesPoint> series, Period event,
                       int pre_months, int post_months);

}  // namespace aishare::analytics
