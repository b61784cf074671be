#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "tempref/harness/config.hpp"

namespace tempref::harness {

namespace fs = std::filesystem;

struct RunSpec {
  std::string run_id;
  GameConfig game;  // game.seed is the training dataset seed
  AgentConfig agent;
  EnvironmentKind train_env = EnvironmentKind::kTrg;
  int epochs = 0;
  std::uint64_t seed = 0;

  friend bool operator==(const RunSpec&, const RunSpec&) = default;
};

/// One spec for `seed`: the dataset seed is the run seed and run_id is
/// filled in.
RunSpec make_run_spec(const GameConfig& game, const AgentConfig& agent, EnvironmentKind train_env,
                      int epochs, std::uint64_t seed);
/// Fixed-order text of every field except run_id.
std::string canonical_spec(const RunSpec& spec);
/// 16 hex digits of FNV-1a over canonical_spec.
std::string compute_run_id(const RunSpec& spec);

/// Grid of the sweep section crossed with the base config, in the fixed
/// order repetition chance, training env, architecture, loss, seed.
std::vector<RunSpec> expand_grid(const ExperimentConfig& config);

/// Seed of the evaluation datasets of a run; unrelated to the training
/// stream.
std::uint64_t eval_seed(std::uint64_t run_seed);
/// Evaluation game for one environment: eval size and seed applied, NEVER_SAME
/// capped at |V|.
GameConfig eval_game(const RunSpec& spec, const EvalConfig& eval, EnvironmentKind env);

enum class RunStatus { kPending, kTrained, kEvaluated, kAnalyzed, kFailed };
std::string_view to_string(RunStatus status);
RunStatus parse_status(std::string_view text);

struct RunPaths {
  fs::path dir;
  fs::path record() const { return dir / "run.txt"; }
  fs::path checkpoint() const { return dir / "params"; }  // stem for .manifest/.bin
  fs::path train_log() const { return dir / "train_log.tsv"; }
  fs::path eval_log(EnvironmentKind env) const;
  fs::path messages(EnvironmentKind env) const;
  fs::path analysis() const { return dir / "analysis.txt"; }
};

RunPaths run_paths(const fs::path& out_root, const std::string& run_id);

struct RunRecord {
  RunSpec spec;
  RunStatus status = RunStatus::kPending;
  std::string failure;
  /// Canonical text of the evaluation settings used by the eval stage.
  std::string eval_settings;
  std::string created;
  std::string updated;
  RunPaths paths;
};

/// Key=value text; paths are stored relative to the run directory.
void write_record(const RunRecord& record);
RunRecord read_record(const fs::path& record_file);

std::string eval_settings_text(const EvalConfig& eval);

/// UTC time as YYYY-MM-DDTHH:MM:SSZ.
std::string utc_timestamp();

/// Writes `content` to `path` through a temporary file and rename.
void write_file_atomic(const fs::path& path, const std::string& content);
std::string read_file(const fs::path& path);

}  // namespace tempref::harness
