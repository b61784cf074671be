#include "tempref/stats/tests.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "tempref/stats/ranks.hpp"
#include "tempref/stats/special.hpp"

namespace tempref::stats {

namespace {

struct Pooled {
  std::vector<double> values;
  std::vector<double> ranks;
  std::vector<double> rank_sums;
  std::vector<double> sizes;
  double n = 0.0;
  double tie_correction = 1.0;  // 1 - sum(t^3 - t) / (N^3 - N)
  double h = 0.0;               // tie-corrected
};

Pooled pool(const SampleGroups& groups) {
  if (groups.size() < 2) throw ConfigError("rank test needs at least two groups");
  Pooled p;
  for (const auto& g : groups) {
    if (g.values.empty()) throw ConfigError("group '" + g.name + "' is empty");
    p.values.insert(p.values.end(), g.values.begin(), g.values.end());
  }
  p.n = static_cast<double>(p.values.size());
  if (p.values.size() < 3) throw ConfigError("rank test needs at least three observations");
  if (std::all_of(p.values.begin(), p.values.end(), [&](double v) { return v == p.values[0]; })) {
    throw DegenerateTies("all observations are identical");
  }
  p.ranks = average_ranks(p.values);
  std::size_t offset = 0;
  for (const auto& g : groups) {
    double s = 0.0;
    for (std::size_t i = 0; i < g.values.size(); ++i) s += p.ranks[offset + i];
    p.rank_sums.push_back(s);
    p.sizes.push_back(static_cast<double>(g.values.size()));
    offset += g.values.size();
  }
  const double n = p.n;
  double term = 0.0;
  for (std::size_t i = 0; i < groups.size(); ++i) term += p.rank_sums[i] * p.rank_sums[i] / p.sizes[i];
  const double h_raw = 12.0 / (n * (n + 1.0)) * term - 3.0 * (n + 1.0);
  p.tie_correction = 1.0 - tie_sum(p.values) / (n * n * n - n);
  p.h = std::max(0.0, h_raw / p.tie_correction);
  return p;
}

}  // namespace

TestResult kruskal_wallis(const SampleGroups& groups) {
  const Pooled p = pool(groups);
  const double df = static_cast<double>(groups.size() - 1);
  return {p.h, df, std::clamp(chi2_sf(p.h, df), 0.0, 1.0)};
}

PairwiseResult conover_iman(const SampleGroups& groups) {
  const Pooled p = pool(groups);
  const std::size_t k = groups.size();
  const double n = p.n;
  if (n <= static_cast<double>(k)) throw ConfigError("conover_iman needs more observations than groups");
  double sum_sq = 0.0;
  for (double r : p.ranks) sum_sq += r * r;
  const double s2 = p.tie_correction == 1.0
                        ? n * (n + 1.0) / 12.0
                        : (sum_sq - n * (n + 1.0) * (n + 1.0) / 4.0) / (n - 1.0);
  const double df = n - static_cast<double>(k);
  const double spread = s2 * (n - 1.0 - p.h) / df;

  PairwiseResult out;
  out.df = df;
  for (const auto& g : groups) out.names.push_back(g.name);
  out.statistic.assign(k, std::vector<double>(k, 0.0));
  out.p_raw.assign(k, std::vector<double>(k, 1.0));
  std::vector<double> flat;
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = i + 1; j < k; ++j) {
      const double diff = p.rank_sums[i] / p.sizes[i] - p.rank_sums[j] / p.sizes[j];
      const double denom = std::sqrt(std::max(0.0, spread) * (1.0 / p.sizes[i] + 1.0 / p.sizes[j]));
      double t, pv;
      if (denom > 0.0) {
        t = diff / denom;
        pv = std::clamp(2.0 * student_t_sf(std::abs(t), df), 0.0, 1.0);
      } else {
        t = diff == 0.0 ? 0.0 : std::copysign(INFINITY, diff);
        pv = diff == 0.0 ? 1.0 : 0.0;
      }
      out.statistic[i][j] = t;
      out.statistic[j][i] = -t;
      out.p_raw[i][j] = out.p_raw[j][i] = pv;
      flat.push_back(pv);
    }
  }
  const auto adjusted = holm_bonferroni(flat);
  out.p_adjusted.assign(k, std::vector<double>(k, 1.0));
  std::size_t idx = 0;
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = i + 1; j < k; ++j) {
      out.p_adjusted[i][j] = out.p_adjusted[j][i] = adjusted[idx++];
    }
  }
  return out;
}

std::vector<double> holm_bonferroni(const std::vector<double>& p_values) {
  const std::size_t m = p_values.size();
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return p_values[a] < p_values[b]; });
  std::vector<double> out(m);
  double running = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    const double scaled = static_cast<double>(m - i) * p_values[order[i]];
    running = std::max(running, std::min(1.0, scaled));
    out[order[i]] = running;
  }
  return out;
}

}  // namespace tempref::stats
