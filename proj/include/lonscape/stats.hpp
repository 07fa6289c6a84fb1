#pragma once

// Two-sided Mann-Whitney U test and pairwise comparison tables.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "lonscape/error.hpp"

namespace lonscape {

enum class Stars { NotSignificant, One, Two, Three, Four };

constexpr std::string_view to_string(Stars s) {
  switch (s) {
    case Stars::NotSignificant: return "ns";
    case Stars::One: return "*";
    case Stars::Two: return "**";
    case Stars::Three: return "***";
    case Stars::Four: return "****";
  }
  return "?";
}

constexpr Stars stars_for(double p) noexcept {
  if (p < 0.00005) return Stars::Four;
  if (p < 0.0005) return Stars::Three;
  if (p < 0.005) return Stars::Two;
  if (p < 0.05) return Stars::One;
  return Stars::NotSignificant;
}

struct UTestResult {
  double u_statistic = 0.0;  // U of the first sample
  double u_other = 0.0;      // U of the second sample; u_statistic + u_other = |a| * |b|
  double p_value = 1.0;
  Stars stars = Stars::NotSignificant;
  bool exact = false;
  bool degenerate = false;  // every pooled value identical
};

inline constexpr std::size_t kExactLimit = 8;

/// Number of arrangements of n first-sample and m second-sample items giving
/// each U in [0, n*m], via f(n, m, u) = f(n-1, m, u-m) + f(n, m-1, u).
inline std::vector<double> u_distribution_counts(std::size_t n, std::size_t m) {
  // table[i][j] holds the count vector for sizes (i, j).
  std::vector<std::vector<std::vector<double>>> table(n + 1, std::vector<std::vector<double>>(m + 1));
  for (std::size_t i = 0; i <= n; ++i) {
    for (std::size_t j = 0; j <= m; ++j) {
      std::vector<double>& f = table[i][j];
      f.assign(i * j + 1, 0.0);
      if (i == 0 || j == 0) {
        f[0] = 1.0;
        continue;
      }
      const auto& drop_a = table[i - 1][j];  // largest item belongs to the first sample: it beats all j
      const auto& drop_b = table[i][j - 1];
      for (std::size_t u = 0; u < drop_a.size(); ++u) f[u + j] += drop_a[u];
      for (std::size_t u = 0; u < drop_b.size(); ++u) f[u] += drop_b[u];
    }
  }
  return table[n][m];
}

inline double exact_two_sided_p(double u, std::size_t n, std::size_t m) {
  const std::vector<double> counts = u_distribution_counts(n, m);
  const double total = std::accumulate(counts.begin(), counts.end(), 0.0);
  double lower = 0.0;
  double upper = 0.0;
  for (std::size_t k = 0; k < counts.size(); ++k) {
    if (static_cast<double>(k) <= u + 1e-9) lower += counts[k];
    if (static_cast<double>(k) >= u - 1e-9) upper += counts[k];
  }
  return std::min(1.0, 2.0 * std::min(lower, upper) / total);
}

/// Normal approximation with continuity correction; tie_term is the sum of
/// t^3 - t over tie groups.
inline double normal_approx_p(double u, std::size_t n, std::size_t m, double tie_term = 0.0) {
  const double nn = static_cast<double>(n);
  const double mm = static_cast<double>(m);
  const double big_n = nn + mm;
  const double variance = nn * mm / 12.0 * ((big_n + 1.0) - tie_term / (big_n * (big_n - 1.0)));
  const double mean = nn * mm / 2.0;
  const double z = variance > 0.0 ? std::max(0.0, std::abs(u - mean) - 0.5) / std::sqrt(variance) : 0.0;
  return std::min(1.0, std::erfc(z / std::sqrt(2.0)));
}

/// Midranks for ties. Exact p by enumeration when both samples have at most 8
/// values and nothing is tied; otherwise the normal approximation with tie
/// and continuity corrections.
inline UTestResult mann_whitney_u(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) throw Error(ErrorCode::EmptyInput, "Mann-Whitney U needs two non-empty samples");
  const std::size_t n = a.size();
  const std::size_t m = b.size();
  const std::size_t total = n + m;

  std::vector<std::pair<double, bool>> pooled;  // (value, from_a)
  pooled.reserve(total);
  for (double x : a) pooled.emplace_back(x, true);
  for (double x : b) pooled.emplace_back(x, false);
  std::sort(pooled.begin(), pooled.end(), [](const auto& l, const auto& r) { return l.first < r.first; });

  double rank_sum_a = 0.0;
  double tie_term = 0.0;
  bool ties = false;
  for (std::size_t i = 0; i < total;) {
    std::size_t j = i;
    while (j < total && pooled[j].first == pooled[i].first) ++j;
    const double midrank = 0.5 * static_cast<double>(i + 1 + j);
    const auto t = static_cast<double>(j - i);
    if (j - i > 1) {
      ties = true;
      tie_term += t * t * t - t;
    }
    for (std::size_t k = i; k < j; ++k)
      if (pooled[k].second) rank_sum_a += midrank;
    i = j;
  }

  const double nn = static_cast<double>(n);
  const double mm = static_cast<double>(m);
  UTestResult r;
  r.u_statistic = rank_sum_a - nn * (nn + 1.0) / 2.0;
  r.u_other = nn * mm - r.u_statistic;

  if (pooled.front().first == pooled.back().first) {
    r.degenerate = true;
    r.p_value = 1.0;
    r.stars = Stars::NotSignificant;
    return r;
  }

  if (!ties && n <= kExactLimit && m <= kExactLimit) {
    r.exact = true;
    r.p_value = exact_two_sided_p(r.u_statistic, n, m);
  } else {
    r.p_value = normal_approx_p(r.u_statistic, n, m, tie_term);
  }
  r.stars = stars_for(r.p_value);
  return r;
}

struct LabelledSample {
  std::string label;
  std::vector<double> values;
};

struct ComparisonRow {
  std::string first;
  std::string second;
  std::string metric;
  UTestResult result;
};

/// Every unordered pair of samples, in input order.
inline std::vector<ComparisonRow> compare_encodings(std::string_view metric, std::span<const LabelledSample> samples) {
  if (samples.size() < 2) throw Error(ErrorCode::EmptyInput, "comparison needs at least two samples");
  std::vector<ComparisonRow> rows;
  for (std::size_t i = 0; i < samples.size(); ++i)
    for (std::size_t j = i + 1; j < samples.size(); ++j)
      rows.push_back({samples[i].label, samples[j].label, std::string(metric),
                      mann_whitney_u(samples[i].values, samples[j].values)});
  return rows;
}

}  // namespace lonscape
