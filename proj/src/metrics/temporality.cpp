#include "tempref/metrics/temporality.hpp"

#include <algorithm>

#include "tempref/numcore/errors.hpp"

namespace tempref::metrics {

bool object_same(const ExchangeHistory& history, std::size_t j, int n) {
  if (n < 1 || j < 1 || j > history.size() || j <= static_cast<std::size_t>(n)) return false;
  return history[j - 1].target == history[j - 1 - n].target;
}

Percentage m_previous(const ExchangeHistory& history, const std::vector<int>& message, int n) {
  Percentage p;
  for (std::size_t j = 1; j <= history.size(); ++j) {
    if (history[j - 1].message != message) continue;
    ++p.total;
    if (object_same(history, j, n)) ++p.count;
  }
  if (p.total == 0) throw Error("m_previous: message never used");
  return p;
}

TemporalityReport temporality_report(const ExchangeHistory& history, int horizon) {
  if (horizon < 1) throw ConfigError("temporality_report: horizon must be >= 1");
  std::map<std::vector<int>, MessageUsage> usage;
  for (std::size_t j = 1; j <= history.size(); ++j) {
    const ExchangeRecord& r = history[j - 1];
    auto [it, inserted] = usage.try_emplace(r.message);
    MessageUsage& u = it->second;
    if (inserted) {
      u.message = r.message;
      u.previous.assign(horizon + 1, 0);
    }
    ++u.total;
    u.correct += r.correct;
    bool within = false;
    for (int n = 1; n <= horizon; ++n) {
      if (object_same(history, j, n)) {
        ++u.previous[n];
        within = true;
      }
    }
    u.within_horizon += within;
  }
  TemporalityReport report;
  report.horizon = horizon;
  report.messages.reserve(usage.size());
  for (auto& [_, u] : usage) report.messages.push_back(std::move(u));
  return report;
}

const MessageUsage* TemporalityReport::find(const std::vector<int>& message) const {
  auto it = std::lower_bound(messages.begin(), messages.end(), message,
                             [](const MessageUsage& u, const std::vector<int>& m) { return u.message < m; });
  return it != messages.end() && it->message == message ? &*it : nullptr;
}

double TemporalityReport::max_previous(int n, long min_count) const {
  double best = 0.0;
  for (const auto& u : messages) {
    if (u.total >= min_count) best = std::max(best, u.at(n).value());
  }
  return best;
}

double TemporalityReport::mean_within_horizon() const {
  long c = 0, t = 0;
  for (const auto& u : messages) {
    c += u.within_horizon;
    t += u.total;
  }
  return t == 0 ? 0.0 : 100.0 * static_cast<double>(c) / static_cast<double>(t);
}

std::vector<bool> TemporalityReport::emergence(long min_count) const {
  std::vector<bool> out(horizon + 1, false);
  for (const auto& u : messages) {
    if (u.total < min_count) continue;
    for (int n = 1; n <= horizon; ++n) out[n] = out[n] || u.at(n).is_full();
  }
  return out;
}

bool emergence_decision(const TemporalityReport& report, long min_count) {
  const auto flags = report.emergence(min_count);
  return std::find(flags.begin() + 1, flags.end(), true) != flags.end();
}

}  // namespace tempref::metrics
