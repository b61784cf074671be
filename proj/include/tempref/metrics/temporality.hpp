#pragma once

#include <cstddef>
#include <map>
#include <vector>

#include "tempref/metrics/exchange.hpp"

namespace tempref::metrics {

/// x_j == x_{j-n} with 1-based episode index j; false when j - n < 1.
bool object_same(const ExchangeHistory& history, std::size_t j, int n);

/// Exact ratio C / T, reported as a percentage.
struct Percentage {
  long count = 0;
  long total = 0;
  double value() const { return total == 0 ? 0.0 : 100.0 * count / total; }
  bool is_full() const { return total > 0 && count == total; }
  bool is_zero() const { return count == 0; }
};

/// M_prev_n(m): share of the uses of `message` that coincide with the object
/// seen n episodes earlier. Throws Error when `message` never occurs.
Percentage m_previous(const ExchangeHistory& history, const std::vector<int>& message, int n);

struct MessageUsage {
  std::vector<int> message;
  long total = 0;                // T_m
  std::vector<long> previous;    // previous[n] = C_m,n for n in [1, h]; [0] unused
  long within_horizon = 0;       // uses whose temporal label is positive
  long correct = 0;

  Percentage at(int n) const { return {previous.at(n), total}; }
  Percentage within() const { return {within_horizon, total}; }
  double correctness() const { return total == 0 ? 0.0 : static_cast<double>(correct) / total; }
};

struct TemporalityReport {
  int horizon = 0;
  /// Sorted by message.
  std::vector<MessageUsage> messages;

  const MessageUsage* find(const std::vector<int>& message) const;
  /// Largest M_prev_n over messages used at least `min_count` times.
  double max_previous(int n, long min_count = 1) const;
  /// Usage-weighted mean of the within-horizon percentage.
  double mean_within_horizon() const;
  /// Per n in [1, h]: does some message with T_m >= min_count reach 100%?
  std::vector<bool> emergence(long min_count) const;
};

TemporalityReport temporality_report(const ExchangeHistory& history, int horizon);

inline constexpr long kDefaultMinCount = 5;

/// True iff some message with T_m >= min_count has M_prev_n = 100% for some
/// n in [1, h].
bool emergence_decision(const TemporalityReport& report, long min_count = kDefaultMinCount);

}  // namespace tempref::metrics
