#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "tempref/agents/agents.hpp"
#include "tempref/envgen/envgen.hpp"

namespace tempref::harness {

using agents::AgentConfig;
using agents::Architecture;
using envgen::EnvironmentKind;
using envgen::GameConfig;

struct EvalConfig {
  /// Episodes per evaluation environment; 0 reuses game.dataset_size.
  /// NEVER_SAME is capped at |V|.
  int dataset_size = 0;
  std::size_t topsim_cap = 2000;
  long min_count = 5;
  double alpha = 0.05;
  /// Horizon step shown in the Table-1-shaped summary.
  int report_step = 4;

  friend bool operator==(const EvalConfig&, const EvalConfig&) = default;
};

struct SweepConfig {
  std::vector<Architecture> architectures{Architecture::kBase, Architecture::kTemporal,
                                          Architecture::kTemporalR};
  std::vector<bool> temporal_loss{false, true};
  std::vector<EnvironmentKind> train_envs{EnvironmentKind::kRg, EnvironmentKind::kTrg};
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  std::vector<double> repetition_chances{0.25, 0.5, 0.75};

  friend bool operator==(const SweepConfig&, const SweepConfig&) = default;
};

struct ExperimentConfig {
  GameConfig game;
  AgentConfig agent;
  EnvironmentKind train_env = EnvironmentKind::kTrg;
  int epochs = 600;
  EvalConfig eval;
  SweepConfig sweep;

  void validate() const;
  friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;
};

/// Flat `key = value` lines under `[game]`, `[agent]`, `[train]`, `[eval]`
/// and `[sweep]` headers; `#` starts a comment. Keys not present keep the
/// defaults of `base`. Throws FormatError/ConfigError with the line number.
ExperimentConfig parse_config(std::istream& in, const ExperimentConfig& base = {},
                              std::string_view source = "<config>");
ExperimentConfig load_config(const std::filesystem::path& path,
                             const ExperimentConfig& base = {});
/// Canonical text; parse_config(format_config(c)) == c.
std::string format_config(const ExperimentConfig& config);

/// Large-scale defaults (8x8 objects, 10 distractors, 600 epochs).
ExperimentConfig full_profile();
/// Small defaults that finish on one CPU core.
ExperimentConfig desk_profile();
/// "full" or "desk".
ExperimentConfig profile(std::string_view name);

std::vector<Architecture> parse_architectures(std::string_view list);
std::vector<EnvironmentKind> parse_environments(std::string_view list);

}  // namespace tempref::harness
