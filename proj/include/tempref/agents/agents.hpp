#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tempref/envgen/envgen.hpp"
#include "tempref/metrics/exchange.hpp"
#include "tempref/numcore/ops.hpp"
#include "tempref/numcore/params.hpp"

namespace tempref::agents {

using envgen::EnvironmentKind;
using envgen::EpisodeSpec;
using envgen::GameConfig;
using numcore::Array;
using numcore::ParameterStore;
using numcore::Rng;
using numcore::Var;

enum class Architecture { kBase, kTemporal, kTemporalR };

inline constexpr Architecture kAllArchitectures[] = {Architecture::kBase, Architecture::kTemporal,
                                                     Architecture::kTemporalR};

/// "base", "temporal", "temporal_r".
std::string_view to_string(Architecture arch);
Architecture parse_architecture(std::string_view name);

struct AgentConfig {
  Architecture architecture = Architecture::kBase;
  bool use_temporal_loss = false;
  int embed_size = 128;
  int hidden_size = 128;
  double gumbel_temperature = 1.0;
  int batch_size = 128;
  double learning_rate = 0.001;
  /// Draw a new episode stream from the same generator every epoch instead
  /// of replaying one fixed stream.
  bool fresh_episodes = false;

  void validate() const;
  /// Temporal receivers always carry the prediction head; Base gets one only
  /// when trained with the temporal loss.
  bool has_temporal_head() const;

  friend bool operator==(const AgentConfig&, const AgentConfig&) = default;
};

/// Objects of one batch laid out either as B sequences of length one
/// ([B, 1, N_att], parallel) or one sequence of length B ([1, B, N_att],
/// sequential). Both layouts share the same row-major data.
struct BatchView {
  enum class Layout { kParallel, kSequential };
  Layout layout;
  Array objects;

  static BatchView parallel(std::span<const EpisodeSpec> batch);
  static BatchView sequential(std::span<const EpisodeSpec> batch);
  BatchView transposed() const;
  std::size_t batch_size() const;
};

/// One-hot encoding of objects, one row per object, N_att * N_val columns.
Array encode_objects(std::span<const envgen::ObjectVector> objects, int n_val);

struct Message {
  std::vector<int> symbols;
  /// [L, N_vocab] relaxed symbols when produced in training mode.
  std::optional<Array> soft;
};

/// Sender output for a batch: one [B, N_vocab] node per message position plus
/// the discrete symbols.
struct MessageBatch {
  std::vector<Var> steps;
  std::vector<std::vector<int>> symbols;
  /// Per-episode encoder output fed to the message generator, [B, H].
  Var encoding;

  std::size_t batch_size() const { return symbols.size(); }
  std::vector<Message> messages() const;
};

struct ReceiverOutput {
  Var scores;           // [B, num_distractors + 1]
  Var temporal_logits;  // [B, h + 1], null without a head
};

enum class Decoding {
  kGumbel,  // relaxed samples, differentiable
  kArgmax,  // hard one-hot symbols
};

/// Sender/receiver pair with its parameters.
class AgentPair {
 public:
  /// Fresh parameters, matrices uniform in +-1/sqrt(fan_in), zero biases.
  AgentPair(AgentConfig agent, GameConfig game, Rng& init_rng);
  /// Restores a pair from stored parameters; throws ConfigError when names or
  /// shapes do not fit the configuration.
  AgentPair(AgentConfig agent, GameConfig game, ParameterStore params);

  const AgentConfig& agent_config() const { return agent_; }
  const GameConfig& game_config() const { return game_; }
  ParameterStore& params() { return params_; }
  const ParameterStore& params() const { return params_; }

  /// `rng` supplies Gumbel noise and is required for kGumbel decoding.
  MessageBatch sender_forward(std::span<const EpisodeSpec> batch, Decoding decoding,
                              Rng* rng) const;
  ReceiverOutput receiver_forward(const MessageBatch& messages,
                                  std::span<const EpisodeSpec> batch) const;
  /// Receiver fed hard symbol sequences.
  ReceiverOutput receiver_forward(std::span<const std::vector<int>> messages,
                                  std::span<const EpisodeSpec> batch) const;

 private:
  void check_params() const;
  numcore::LstmWeights lstm(const std::string& prefix) const;
  ReceiverOutput receive(std::span<const Var> steps, std::span<const EpisodeSpec> batch) const;

  AgentConfig agent_;
  GameConfig game_;
  ParameterStore params_;
};

/// Expected parameter names and shapes for a configuration.
std::vector<std::pair<std::string, std::vector<std::size_t>>> parameter_layout(
    const AgentConfig& agent, const GameConfig& game);

/// L_rg = CE(scores, target_index); adds L_tp = CE(temporal_logits, label)
/// when `use_temporal_loss`. Both terms are batch means.
Var game_loss(const Var& scores, std::span<const std::size_t> target_index,
              const Var& temporal_logits, std::span<const std::size_t> temporal_label,
              bool use_temporal_loss);
Var game_loss(const ReceiverOutput& out, std::span<const EpisodeSpec> batch,
              bool use_temporal_loss);

struct EpochLog {
  int epoch = 0;
  double loss = 0.0;
  double accuracy = 0.0;
  friend bool operator==(const EpochLog&, const EpochLog&) = default;
};

struct TrainResult {
  ParameterStore params;
  std::vector<EpochLog> log;
  bool failed = false;
  std::string failure;
};

/// Trains a fresh pair on `kind` with the dataset built from `game`
/// (`game.seed`). `rng` drives initialisation and Gumbel noise. Batches are
/// consecutive windows of the unshuffled episode stream.
TrainResult train_run(EnvironmentKind kind, const GameConfig& game, const AgentConfig& agent,
                      int epochs, Rng& rng);
/// Same loop on a caller-built dataset starting from `initial` parameters.
TrainResult train_on(const std::vector<EpisodeSpec>& dataset, const GameConfig& game,
                     const AgentConfig& agent, int epochs, ParameterStore initial, Rng& rng);
/// `episodes(epoch)` supplies the stream for each 1-based epoch.
using EpisodeSource = std::function<std::vector<EpisodeSpec>(int epoch)>;
TrainResult train_on(const EpisodeSource& episodes, const GameConfig& game,
                     const AgentConfig& agent, int epochs, ParameterStore initial, Rng& rng);

/// Generator seed for epoch `epoch` when `fresh_episodes` is set.
std::uint64_t epoch_seed(std::uint64_t game_seed, int epoch);

/// Plays every episode with argmax decoding; no parameter updates.
metrics::ExchangeHistory evaluate_run(const AgentPair& pair,
                                      const std::vector<EpisodeSpec>& dataset);
/// Builds the evaluation dataset for `kind` from `game.seed`.
metrics::ExchangeHistory evaluate_run(const AgentPair& pair, EnvironmentKind kind,
                                      const GameConfig& game);

double accuracy(const metrics::ExchangeHistory& history);

}  // namespace tempref::agents
