#include "tempref/envgen/envgen.hpp"

#include <algorithm>
#include <limits>
#include <set>

#include "tempref/numcore/errors.hpp"

namespace tempref::envgen {

void GameConfig::validate() const {
  auto fail = [](const std::string& what) { throw ConfigError("game config: " + what); };
  if (n_att < 1) fail("n_att must be >= 1");
  if (n_val < 2) fail("n_val must be >= 2");
  if (num_distractors < 1) fail("num_distractors must be >= 1");
  if (max_len < 1) fail("max_len must be >= 1");
  if (vocab_size < 1) fail("vocab_size must be >= 1");
  if (horizon < 1) fail("horizon must be >= 1");
  if (!(repetition_chance >= 0.0 && repetition_chance <= 1.0)) {
    fail("repetition_chance must lie in [0, 1]");
  }
  if (dataset_size < 1) fail("dataset_size must be >= 1");
}

std::uint64_t GameConfig::object_space_size() const {
  std::uint64_t n = 1;
  for (int i = 0; i < n_att; ++i) {
    if (n > std::numeric_limits<std::uint64_t>::max() / static_cast<std::uint64_t>(n_val)) {
      return std::numeric_limits<std::uint64_t>::max();
    }
    n *= static_cast<std::uint64_t>(n_val);
  }
  return n;
}

int hamming(const ObjectVector& a, const ObjectVector& b) {
  int d = 0;
  for (std::size_t i = 0; i < a.size(); ++i) d += a.values[i] != b.values[i];
  return d;
}

std::string_view to_string(EnvironmentKind kind) {
  switch (kind) {
    case EnvironmentKind::kRg: return "rg";
    case EnvironmentKind::kRgHard: return "rg_hard";
    case EnvironmentKind::kTrg: return "trg";
    case EnvironmentKind::kTrgHard: return "trg_hard";
    case EnvironmentKind::kAlwaysSame: return "always_same";
    case EnvironmentKind::kNeverSame: return "never_same";
  }
  return "?";
}

EnvironmentKind parse_environment(std::string_view name) {
  for (auto kind : kAllEnvironments) {
    if (to_string(kind) == name) return kind;
  }
  throw ConfigError("unknown environment '" + std::string(name) + "'");
}

bool is_hard(EnvironmentKind kind) {
  return kind == EnvironmentKind::kRgHard || kind == EnvironmentKind::kTrgHard;
}

std::vector<ObjectVector> EpisodeSpec::candidates() const {
  std::vector<ObjectVector> out = distractors;
  out.insert(out.begin() + target_index, target);
  return out;
}

namespace {

ObjectVector object_from_index(std::uint64_t index, const GameConfig& cfg) {
  ObjectVector o;
  o.values.assign(cfg.n_att, 0);
  for (int i = cfg.n_att - 1; i >= 0; --i) {
    o.values[i] = static_cast<int>(index % cfg.n_val);
    index /= cfg.n_val;
  }
  return o;
}

// Spaces at most this large are enumerated instead of rejection-sampled when
// most of them are needed.
constexpr std::uint64_t kEnumerationLimit = 1ULL << 20;

// `count` distinct objects drawn uniformly without replacement.
std::vector<ObjectVector> sample_distinct(const GameConfig& cfg, std::uint64_t count, Rng& rng) {
  const std::uint64_t space = cfg.object_space_size();
  if (count > space) {
    throw ConfigError("object space of size " + std::to_string(space) + " cannot supply " +
                      std::to_string(count) + " distinct objects");
  }
  std::vector<ObjectVector> out;
  out.reserve(count);
  if (space <= kEnumerationLimit && 2 * count > space) {
    std::vector<std::uint64_t> idx(space);
    for (std::uint64_t i = 0; i < space; ++i) idx[i] = i;
    for (std::uint64_t i = 0; i < count; ++i) {
      std::swap(idx[i], idx[i + rng.uniform_int(space - i)]);
      out.push_back(object_from_index(idx[i], cfg));
    }
    return out;
  }
  std::set<ObjectVector> seen;
  while (out.size() < count) {
    ObjectVector o = random_object(cfg, rng);
    if (seen.insert(o).second) out.push_back(std::move(o));
  }
  return out;
}

ObjectVector hard_neighbour(const ObjectVector& target, const GameConfig& cfg, Rng& rng) {
  ObjectVector d = target;
  const auto attr = rng.uniform_int(cfg.n_att);
  int value = static_cast<int>(rng.uniform_int(cfg.n_val - 1));
  if (value >= target.values[attr]) ++value;
  d.values[attr] = value;
  return d;
}

}  // namespace

ObjectVector random_object(const GameConfig& cfg, Rng& rng) {
  ObjectVector o;
  o.values.resize(cfg.n_att);
  for (auto& v : o.values) v = static_cast<int>(rng.uniform_int(cfg.n_val));
  return o;
}

TrgDraw next_target_trg(const std::vector<ObjectVector>& history, const GameConfig& cfg,
                        Rng& rng) {
  TrgDraw draw;
  draw.chance = rng.bernoulli(cfg.repetition_chance);
  draw.lag = 1 + static_cast<int>(rng.uniform_int(cfg.horizon));
  if (draw.chance && history.size() >= static_cast<std::size_t>(draw.lag)) {
    draw.object = history[history.size() - draw.lag];
    draw.repeated = true;
  } else {
    draw.object = random_object(cfg, rng);
  }
  return draw;
}

std::vector<ObjectVector> make_distractors(const ObjectVector& target, EnvironmentKind kind,
                                           const GameConfig& cfg, Rng& rng) {
  const std::uint64_t wanted = static_cast<std::uint64_t>(cfg.num_distractors);
  const bool hard = is_hard(kind);
  const std::uint64_t space = cfg.object_space_size();
  const std::uint64_t capacity =
      hard ? static_cast<std::uint64_t>(cfg.n_att) * (cfg.n_val - 1) : space - 1;
  if (wanted > capacity) {
    throw ConfigError("cannot draw " + std::to_string(wanted) + " distinct " +
                      (hard ? "single-attribute " : "") + "distractors; only " +
                      std::to_string(capacity) + " exist");
  }

  std::vector<ObjectVector> out;
  out.reserve(wanted);
  if (capacity <= 4 * wanted && capacity <= kEnumerationLimit) {
    // Near capacity: enumerate every admissible distractor, then take a
    // uniform prefix of a partial shuffle.
    std::vector<ObjectVector> pool;
    pool.reserve(capacity);
    if (hard) {
      for (int a = 0; a < cfg.n_att; ++a) {
        for (int v = 0; v < cfg.n_val; ++v) {
          if (v == target.values[a]) continue;
          ObjectVector d = target;
          d.values[a] = v;
          pool.push_back(std::move(d));
        }
      }
    } else {
      for (std::uint64_t i = 0; i < space; ++i) {
        ObjectVector d = object_from_index(i, cfg);
        if (d != target) pool.push_back(std::move(d));
      }
    }
    for (std::uint64_t i = 0; i < wanted; ++i) {
      std::swap(pool[i], pool[i + rng.uniform_int(pool.size() - i)]);
      out.push_back(pool[i]);
    }
    return out;
  }

  while (out.size() < wanted) {
    ObjectVector d = hard ? hard_neighbour(target, cfg, rng) : random_object(cfg, rng);
    if (d == target || std::find(out.begin(), out.end(), d) != out.end()) continue;
    out.push_back(std::move(d));
  }
  return out;
}

int temporal_label(const std::vector<ObjectVector>& history, std::size_t t, int horizon) {
  for (int k = 1; k <= horizon && static_cast<std::size_t>(k) <= t; ++k) {
    if (history[t - k] == history[t]) return k;
  }
  return 0;
}

std::uint64_t max_episodes(EnvironmentKind kind, const GameConfig& cfg) {
  const std::uint64_t space = cfg.object_space_size();
  switch (kind) {
    case EnvironmentKind::kNeverSame: return space;
    case EnvironmentKind::kAlwaysSame:
      return space > UINT64_MAX / kAlwaysSameBlock ? UINT64_MAX : space * kAlwaysSameBlock;
    default: return UINT64_MAX;
  }
}

std::vector<ObjectVector> build_targets(EnvironmentKind kind, const GameConfig& cfg, Rng& rng) {
  const auto size = static_cast<std::size_t>(cfg.dataset_size);
  std::vector<ObjectVector> targets;
  targets.reserve(size);
  switch (kind) {
    case EnvironmentKind::kRg:
    case EnvironmentKind::kRgHard:
      for (std::size_t i = 0; i < size; ++i) targets.push_back(random_object(cfg, rng));
      break;
    case EnvironmentKind::kTrg:
    case EnvironmentKind::kTrgHard:
      for (std::size_t i = 0; i < size; ++i) targets.push_back(next_target_trg(targets, cfg, rng).object);
      break;
    case EnvironmentKind::kAlwaysSame: {
      constexpr std::size_t kRepeats = kAlwaysSameBlock;
      const auto blocks = sample_distinct(cfg, (size + kRepeats - 1) / kRepeats, rng);
      for (const auto& o : blocks) {
        for (std::size_t r = 0; r < kRepeats && targets.size() < size; ++r) targets.push_back(o);
      }
      break;
    }
    case EnvironmentKind::kNeverSame: {
      if (size > cfg.object_space_size()) {
        throw ConfigError("never_same needs dataset_size <= |V| (" +
                          std::to_string(cfg.object_space_size()) + "), got " +
                          std::to_string(size));
      }
      targets = sample_distinct(cfg, size, rng);
      std::sort(targets.begin(), targets.end());
      break;
    }
  }
  return targets;
}

std::vector<EpisodeSpec> build_dataset(EnvironmentKind kind, const GameConfig& cfg, Rng& rng) {
  cfg.validate();
  Rng target_rng = rng.fork("targets");
  Rng distractor_rng = rng.fork("distractors");
  Rng position_rng = rng.fork("positions");
  const auto targets = build_targets(kind, cfg, target_rng);

  std::vector<EpisodeSpec> episodes;
  episodes.reserve(targets.size());
  for (std::size_t t = 0; t < targets.size(); ++t) {
    EpisodeSpec ep;
    ep.t = static_cast<int>(t);
    ep.target = targets[t];
    ep.distractors = make_distractors(ep.target, kind, cfg, distractor_rng);
    ep.target_index = static_cast<int>(position_rng.uniform_int(cfg.num_distractors + 1));
    ep.temporal_label = temporal_label(targets, t, cfg.horizon);
    episodes.push_back(std::move(ep));
  }
  return episodes;
}

std::vector<EpisodeSpec> build_dataset(EnvironmentKind kind, const GameConfig& cfg) {
  Rng rng = Rng(cfg.seed).fork(to_string(kind));
  return build_dataset(kind, cfg, rng);
}

double repeat_fraction(const std::vector<EpisodeSpec>& episodes) {
  if (episodes.empty()) return 0.0;
  std::size_t n = 0;
  for (const auto& ep : episodes) n += ep.temporal_label > 0;
  return static_cast<double>(n) / static_cast<double>(episodes.size());
}

}  // namespace tempref::envgen
