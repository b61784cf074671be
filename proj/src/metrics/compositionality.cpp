#include "tempref/metrics/compositionality.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "tempref/numcore/errors.hpp"
#include "tempref/stats/ranks.hpp"

namespace tempref::metrics {

namespace {

int message_hamming(const std::vector<int>& a, const std::vector<int>& b) {
  int d = 0;
  for (std::size_t i = 0; i < a.size(); ++i) d += a[i] != b[i];
  return d;
}

bool constant(const std::vector<double>& v) {
  return std::all_of(v.begin(), v.end(), [&](double x) { return x == v.front(); });
}

// Mean over non-constant representation columns of the normalised gap
// between the two attributes sharing the most information with the column.
Score information_gap(std::span<const ObjectVector> objects,
                      const std::vector<std::vector<int>>& columns) {
  const std::size_t n_att = objects.empty() ? 0 : objects[0].size();
  std::vector<std::vector<int>> attributes(n_att, std::vector<int>(objects.size()));
  for (std::size_t i = 0; i < objects.size(); ++i) {
    for (std::size_t a = 0; a < n_att; ++a) attributes[a][i] = objects[i][a];
  }
  double total = 0.0;
  std::size_t used = 0;
  for (const auto& column : columns) {
    const double h = entropy(column);
    if (!(h > 0.0)) continue;
    std::vector<double> mi;
    mi.reserve(n_att);
    for (const auto& attr : attributes) mi.push_back(mutual_information(attr, column));
    std::sort(mi.begin(), mi.end(), std::greater<>());
    const double second = mi.size() > 1 ? mi[1] : 0.0;
    total += (mi[0] - second) / h;
    ++used;
  }
  if (used == 0) return {0.0, true};
  return {total / static_cast<double>(used), false};
}

void check_inputs(std::span<const ObjectVector> objects, std::span<const std::vector<int>> messages) {
  if (objects.size() != messages.size()) throw DimensionError("objects and messages differ in count");
  if (objects.size() < 2) throw DimensionError("need at least two episodes");
}

}  // namespace

double entropy(std::span<const int> x) {
  std::map<int, long> counts;
  for (int v : x) ++counts[v];
  const double n = static_cast<double>(x.size());
  double h = 0.0;
  for (const auto& [_, c] : counts) {
    const double p = static_cast<double>(c) / n;
    h -= p * std::log(p);
  }
  return h;
}

double mutual_information(std::span<const int> x, std::span<const int> y) {
  if (x.size() != y.size()) throw DimensionError("mutual_information: length mismatch");
  std::map<std::pair<int, int>, long> joint;
  for (std::size_t i = 0; i < x.size(); ++i) ++joint[{x[i], y[i]}];
  const double n = static_cast<double>(x.size());
  double hxy = 0.0;
  for (const auto& [_, c] : joint) {
    const double p = static_cast<double>(c) / n;
    hxy -= p * std::log(p);
  }
  return entropy(x) + entropy(y) - hxy;
}

Score topographic_similarity(std::span<const ObjectVector> objects,
                             std::span<const std::vector<int>> messages, TopsimOptions options) {
  check_inputs(objects, messages);
  std::vector<std::size_t> idx(objects.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  if (options.cap >= 2 && idx.size() > options.cap) {
    numcore::Rng rng(options.seed);
    for (std::size_t i = 0; i < options.cap; ++i) {
      std::swap(idx[i], idx[i + rng.uniform_int(idx.size() - i)]);
    }
    idx.resize(options.cap);
    std::sort(idx.begin(), idx.end());
  }
  const std::size_t n = idx.size();
  std::vector<double> object_d, message_d;
  object_d.reserve(n * (n - 1) / 2);
  message_d.reserve(n * (n - 1) / 2);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      object_d.push_back(envgen::hamming(objects[idx[i]], objects[idx[j]]));
      message_d.push_back(message_hamming(messages[idx[i]], messages[idx[j]]));
    }
  }
  if (constant(object_d) || constant(message_d)) return {0.0, true};
  return {stats::spearman(object_d, message_d), false};
}

Score posdis(std::span<const ObjectVector> objects, std::span<const std::vector<int>> messages) {
  check_inputs(objects, messages);
  const std::size_t len = messages[0].size();
  std::vector<std::vector<int>> columns(len, std::vector<int>(messages.size()));
  for (std::size_t i = 0; i < messages.size(); ++i) {
    for (std::size_t j = 0; j < len; ++j) columns[j][i] = messages[i][j];
  }
  return information_gap(objects, columns);
}

Score bosdis(std::span<const ObjectVector> objects, std::span<const std::vector<int>> messages,
             int vocab_size) {
  check_inputs(objects, messages);
  std::vector<std::vector<int>> columns(vocab_size, std::vector<int>(messages.size(), 0));
  for (std::size_t i = 0; i < messages.size(); ++i) {
    for (int s : messages[i]) {
      if (s < 0 || s >= vocab_size) throw IndexError("bosdis: symbol outside vocabulary");
      ++columns[s][i];
    }
  }
  return information_gap(objects, columns);
}

CompositionalityReport compositionality_report(const ExchangeHistory& history, int vocab_size,
                                               TopsimOptions options) {
  std::vector<ObjectVector> objects;
  std::vector<std::vector<int>> messages;
  objects.reserve(history.size());
  messages.reserve(history.size());
  for (const auto& r : history) {
    objects.push_back(r.target);
    messages.push_back(r.message);
  }
  CompositionalityReport report;
  report.topsim = topographic_similarity(objects, messages, options);
  report.topsim_episodes = std::min(history.size(), std::max<std::size_t>(options.cap, 2));
  report.posdis = posdis(objects, messages);
  report.bosdis = bosdis(objects, messages, vocab_size);
  return report;
}

}  // namespace tempref::metrics
