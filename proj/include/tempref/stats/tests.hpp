#pragma once

#include <string>
#include <vector>

#include "tempref/numcore/errors.hpp"

namespace tempref::stats {

/// Every observation is identical, so rank statistics are undefined.
class DegenerateTies : public Error {
 public:
  using Error::Error;
};

struct SampleGroup {
  std::string name;
  std::vector<double> values;
};

using SampleGroups = std::vector<SampleGroup>;

struct TestResult {
  double statistic = 0.0;
  double df = 0.0;
  double p_value = 1.0;
};

struct PairwiseResult {
  std::vector<std::string> names;
  /// k x k, symmetric, unit diagonal.
  std::vector<std::vector<double>> statistic;
  std::vector<std::vector<double>> p_raw;
  std::vector<std::vector<double>> p_adjusted;
  double df = 0.0;
};

/// Tie-corrected H on pooled average ranks; p from chi-square with k - 1 df.
TestResult kruskal_wallis(const SampleGroups& groups);

/// Conover-Iman pairwise t statistics on mean ranks with the pooled rank
/// variance, N - k df, two-sided; Holm adjustment across the k(k-1)/2 pairs.
PairwiseResult conover_iman(const SampleGroups& groups);

/// Holm step-down adjustment, returned in input order.
std::vector<double> holm_bonferroni(const std::vector<double>& p_values);

}  // namespace tempref::stats
