#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "tempref/numcore/rng.hpp"

namespace tempref::envgen {

using numcore::Rng;

struct GameConfig {
  int n_att = 8;
  int n_val = 8;
  int num_distractors = 10;
  int max_len = 5;
  int vocab_size = 26;
  double repetition_chance = 0.5;
  int horizon = 8;
  int dataset_size = 20000;
  std::uint64_t seed = 0;

  /// Throws ConfigError when an invariant is violated.
  void validate() const;
  /// |V| = n_val^n_att, saturating at UINT64_MAX.
  std::uint64_t object_space_size() const;
  int candidates() const { return num_distractors + 1; }

  friend bool operator==(const GameConfig&, const GameConfig&) = default;
};

/// Attribute-value object; each entry in [0, n_val).
struct ObjectVector {
  std::vector<int> values;

  std::size_t size() const { return values.size(); }
  int operator[](std::size_t i) const { return values[i]; }
  friend bool operator==(const ObjectVector&, const ObjectVector&) = default;
  friend auto operator<=>(const ObjectVector&, const ObjectVector&) = default;
};

int hamming(const ObjectVector& a, const ObjectVector& b);

enum class EnvironmentKind { kRg, kRgHard, kTrg, kTrgHard, kAlwaysSame, kNeverSame };

inline constexpr EnvironmentKind kAllEnvironments[] = {
    EnvironmentKind::kAlwaysSame, EnvironmentKind::kNeverSame, EnvironmentKind::kRg,
    EnvironmentKind::kRgHard,     EnvironmentKind::kTrg,       EnvironmentKind::kTrgHard};

/// "rg", "rg_hard", "trg", "trg_hard", "always_same", "never_same".
std::string_view to_string(EnvironmentKind kind);
EnvironmentKind parse_environment(std::string_view name);
bool is_hard(EnvironmentKind kind);

struct EpisodeSpec {
  int t = 0;
  ObjectVector target;
  /// Distractors in candidate order with the target removed.
  std::vector<ObjectVector> distractors;
  /// Position of the target among the num_distractors + 1 candidates.
  int target_index = 0;
  int temporal_label = 0;

  /// Candidates in presentation order (target inserted at target_index).
  std::vector<ObjectVector> candidates() const;
  friend bool operator==(const EpisodeSpec&, const EpisodeSpec&) = default;
};

/// Result of one draw of the temporal target process.
struct TrgDraw {
  ObjectVector object;
  bool chance = false;  // c
  int lag = 1;          // h_v
  bool repeated = false;
};

ObjectVector random_object(const GameConfig& cfg, Rng& rng);

/// One temporal-referential-game draw: c ~ Bernoulli(p), h_v ~ U{1..h}; with
/// c = 1 returns the target h_v episodes back, falling back to a fresh
/// uniform object when the history is shorter than h_v.
TrgDraw next_target_trg(const std::vector<ObjectVector>& history, const GameConfig& cfg,
                        Rng& rng);

/// Distractors for one episode, pairwise distinct and distinct from the
/// target. Hard kinds differ from the target in exactly one attribute.
std::vector<ObjectVector> make_distractors(const ObjectVector& target, EnvironmentKind kind,
                                           const GameConfig& cfg, Rng& rng);

/// Smallest k in [1, h] with history[t - k] == history[t], else 0.
int temporal_label(const std::vector<ObjectVector>& history, std::size_t t, int horizon);

/// ALWAYS_SAME shows each block object this many times in a row.
inline constexpr std::size_t kAlwaysSameBlock = 10;

/// Longest stream the environment can produce: |V| for NEVER_SAME, one
/// block per distinct object for ALWAYS_SAME, unbounded otherwise.
std::uint64_t max_episodes(EnvironmentKind kind, const GameConfig& cfg);

/// Target stream for an environment.
std::vector<ObjectVector> build_targets(EnvironmentKind kind, const GameConfig& cfg, Rng& rng);

std::vector<EpisodeSpec> build_dataset(EnvironmentKind kind, const GameConfig& cfg, Rng& rng);
/// Seeds the generator from cfg.seed and the environment name.
std::vector<EpisodeSpec> build_dataset(EnvironmentKind kind, const GameConfig& cfg);

/// Fraction of episodes whose temporal label is positive.
double repeat_fraction(const std::vector<EpisodeSpec>& episodes);

}  // namespace tempref::envgen
