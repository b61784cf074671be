#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "tempref/metrics/exchange.hpp"
#include "tempref/numcore/rng.hpp"

namespace tempref::metrics {

struct Score {
  double value = 0.0;
  bool degenerate = false;
};

struct TopsimOptions {
  std::size_t cap = 2000;
  std::uint64_t seed = 0;
};

/// Spearman correlation between pairwise Hamming distances of objects and of
/// messages over all unordered pairs. Inputs longer than `cap` are
/// subsampled (seeded, without replacement). Constant distances give 0 with
/// the degenerate flag.
Score topographic_similarity(std::span<const ObjectVector> objects,
                             std::span<const std::vector<int>> messages, TopsimOptions options = {});

/// Positional disentanglement over message positions.
Score posdis(std::span<const ObjectVector> objects, std::span<const std::vector<int>> messages);
/// Bag-of-symbols disentanglement; `vocab_size` fixes the count vector length.
Score bosdis(std::span<const ObjectVector> objects, std::span<const std::vector<int>> messages,
             int vocab_size);

/// Plug-in (histogram) estimators, natural log.
double entropy(std::span<const int> x);
double mutual_information(std::span<const int> x, std::span<const int> y);

struct CompositionalityReport {
  Score topsim;
  Score posdis;
  Score bosdis;
  std::size_t topsim_episodes = 0;
};

CompositionalityReport compositionality_report(const ExchangeHistory& history, int vocab_size,
                                               TopsimOptions options = {});

}  // namespace tempref::metrics
