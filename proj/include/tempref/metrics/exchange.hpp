#pragma once

#include <vector>

#include "tempref/envgen/envgen.hpp"

namespace tempref::metrics {

using envgen::ObjectVector;

/// One played episode as seen by the evaluator.
struct ExchangeRecord {
  int t = 0;
  ObjectVector target;
  std::vector<ObjectVector> distractors;
  int target_index = 0;
  std::vector<int> message;
  int guess = 0;
  bool correct = false;
  int temporal_label = 0;
  /// -1 when the receiver has no temporal head.
  int predicted_label = -1;

  friend bool operator==(const ExchangeRecord&, const ExchangeRecord&) = default;
};

using ExchangeHistory = std::vector<ExchangeRecord>;

}  // namespace tempref::metrics
