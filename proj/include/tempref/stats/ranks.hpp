#pragma once

#include <span>
#include <vector>

namespace tempref::stats {

/// 1-based ranks; tied values share the mean of the ranks they span.
std::vector<double> average_ranks(std::span<const double> values);

/// Sum over tie groups of (t^3 - t), the tie term of rank statistics.
double tie_sum(std::span<const double> values);

double pearson(std::span<const double> a, std::span<const double> b);

/// Pearson correlation of average ranks. Returns 0 when either input is
/// constant.
double spearman(std::span<const double> a, std::span<const double> b);

}  // namespace tempref::stats
