#include "tempref/agents/agents.hpp"

#include <cmath>

#include "tempref/numcore/errors.hpp"

namespace tempref::agents {

namespace nc = numcore;

std::string_view to_string(Architecture arch) {
  switch (arch) {
    case Architecture::kBase: return "base";
    case Architecture::kTemporal: return "temporal";
    case Architecture::kTemporalR: return "temporal_r";
  }
  return "?";
}

Architecture parse_architecture(std::string_view name) {
  for (auto a : kAllArchitectures) {
    if (to_string(a) == name) return a;
  }
  throw ConfigError("unknown architecture '" + std::string(name) + "'");
}

void AgentConfig::validate() const {
  if (embed_size < 1 || hidden_size < 1) throw ConfigError("agent sizes must be >= 1");
  if (!(gumbel_temperature > 0.0)) throw ConfigError("gumbel_temperature must be positive");
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be positive");
}

bool AgentConfig::has_temporal_head() const {
  return architecture != Architecture::kBase || use_temporal_loss;
}

BatchView BatchView::parallel(std::span<const EpisodeSpec> batch) {
  if (batch.empty()) throw DimensionError("empty batch");
  const std::size_t n_att = batch[0].target.size();
  BatchView v{Layout::kParallel, Array(std::vector<std::size_t>{batch.size(), 1, n_att})};
  for (std::size_t b = 0; b < batch.size(); ++b) {
    for (std::size_t a = 0; a < n_att; ++a) v.objects[b * n_att + a] = batch[b].target[a];
  }
  return v;
}

BatchView BatchView::sequential(std::span<const EpisodeSpec> batch) {
  return parallel(batch).transposed();
}

BatchView BatchView::transposed() const {
  const auto& s = objects.shape();
  // Swapping a unit axis leaves the row-major order unchanged.
  BatchView out{layout == Layout::kParallel ? Layout::kSequential : Layout::kParallel,
                Array(std::vector<std::size_t>{s[1], s[0], s[2]})};
  std::copy(objects.data().begin(), objects.data().end(), out.objects.data().begin());
  return out;
}

std::size_t BatchView::batch_size() const {
  return layout == Layout::kParallel ? objects.shape()[0] : objects.shape()[1];
}

Array encode_objects(std::span<const envgen::ObjectVector> objects, int n_val) {
  if (objects.empty()) throw DimensionError("encode_objects: no objects");
  const std::size_t n_att = objects[0].size();
  Array out(objects.size(), n_att * n_val);
  for (std::size_t r = 0; r < objects.size(); ++r) {
    for (std::size_t a = 0; a < n_att; ++a) {
      const int v = objects[r][a];
      if (v < 0 || v >= n_val) throw IndexError("encode_objects: attribute value out of range");
      out.at(r, a * n_val + v) = 1.0;
    }
  }
  return out;
}

std::vector<Message> MessageBatch::messages() const {
  std::vector<Message> out(symbols.size());
  for (std::size_t b = 0; b < symbols.size(); ++b) {
    out[b].symbols = symbols[b];
    if (steps.empty()) continue;
    const std::size_t vocab = steps[0]->cols();
    Array soft(steps.size(), vocab);
    for (std::size_t k = 0; k < steps.size(); ++k) {
      for (std::size_t j = 0; j < vocab; ++j) soft.at(k, j) = steps[k]->value.at(b, j);
    }
    out[b].soft = std::move(soft);
  }
  return out;
}

std::vector<std::pair<std::string, std::vector<std::size_t>>> parameter_layout(
    const AgentConfig& agent, const GameConfig& game) {
  const std::size_t d = static_cast<std::size_t>(game.n_att) * game.n_val;
  const std::size_t e = agent.embed_size, h = agent.hidden_size, v = game.vocab_size;
  const std::size_t classes = game.horizon + 1;
  std::vector<std::pair<std::string, std::vector<std::size_t>>> out;
  auto lstm = [&](const std::string& prefix, std::size_t in) {
    out.push_back({prefix + ".input", {in, 4 * h}});
    out.push_back({prefix + ".recurrent", {h, 4 * h}});
    out.push_back({prefix + ".bias", {1, 4 * h}});
  };
  const bool parallel = agent.architecture != Architecture::kTemporal;
  const bool sequential = agent.architecture != Architecture::kBase;
  if (parallel) lstm("sender.meaning", d);
  if (sequential) lstm("sender.temporal", d);
  lstm("sender.message", e);
  out.push_back({"sender.sos", {1, e}});
  out.push_back({"sender.symbol_embedding", {v, e}});
  out.push_back({"sender.output.weight", {h, v}});
  out.push_back({"sender.output.bias", {1, v}});
  out.push_back({"receiver.symbol_embedding", {v, e}});
  lstm("receiver.message", e);
  if (sequential) lstm("receiver.temporal", h);
  out.push_back({"receiver.object.weight", {d, h}});
  out.push_back({"receiver.object.bias", {1, h}});
  if (agent.has_temporal_head()) {
    out.push_back({"receiver.head.weight", {(sequential ? 3 : 2) * h, classes}});
    out.push_back({"receiver.head.bias", {1, classes}});
  }
  return out;
}

AgentPair::AgentPair(AgentConfig agent, GameConfig game, Rng& init_rng)
    : agent_(agent), game_(game) {
  agent_.validate();
  game_.validate();
  for (const auto& [name, shape] : parameter_layout(agent_, game_)) {
    if (name.ends_with("bias")) {
      params_.add_zeros(name, shape[0], shape[1]);
    } else {
      params_.add_uniform(name, shape[0], shape[1], 1.0 / std::sqrt(static_cast<double>(shape[0])),
                          init_rng);
    }
  }
}

AgentPair::AgentPair(AgentConfig agent, GameConfig game, ParameterStore params)
    : agent_(agent), game_(game), params_(std::move(params)) {
  agent_.validate();
  game_.validate();
  check_params();
}

void AgentPair::check_params() const {
  const auto layout = parameter_layout(agent_, game_);
  if (layout.size() != params_.size()) {
    throw ConfigError("parameter store has " + std::to_string(params_.size()) +
                      " entries, architecture " + std::string(to_string(agent_.architecture)) +
                      " expects " + std::to_string(layout.size()));
  }
  for (const auto& [name, shape] : layout) {
    if (!params_.contains(name)) throw ConfigError("missing parameter '" + name + "'");
    if (params_.get(name)->value.shape() != shape) {
      throw ConfigError("parameter '" + name + "' has shape " +
                        params_.get(name)->value.shape_string() + ", expected " +
                        nc::shape_string(shape));
    }
  }
}

nc::LstmWeights AgentPair::lstm(const std::string& prefix) const {
  return {params_.get(prefix + ".input"), params_.get(prefix + ".recurrent"),
          params_.get(prefix + ".bias")};
}

MessageBatch AgentPair::sender_forward(std::span<const EpisodeSpec> batch, Decoding decoding,
                                       Rng* rng) const {
  if (batch.empty()) throw DimensionError("sender_forward: empty batch");
  if (decoding == Decoding::kGumbel && rng == nullptr) {
    throw ConfigError("sender_forward: Gumbel decoding needs an rng");
  }
  const std::size_t b = batch.size();
  std::vector<envgen::ObjectVector> targets;
  targets.reserve(b);
  for (const auto& ep : batch) targets.push_back(ep.target);
  const Var objects = nc::constant(encode_objects(targets, game_.n_val));

  Var encoding;
  switch (agent_.architecture) {
    case Architecture::kBase:
      encoding = nc::lstm_cell(objects, nullptr, nullptr, lstm("sender.meaning")).h;
      break;
    case Architecture::kTemporal:
      encoding = nc::lstm_scan(objects, lstm("sender.temporal"));
      break;
    case Architecture::kTemporalR:
      encoding = nc::mul(nc::lstm_cell(objects, nullptr, nullptr, lstm("sender.meaning")).h,
                         nc::lstm_scan(objects, lstm("sender.temporal")));
      break;
  }

  MessageBatch out;
  out.encoding = encoding;
  out.symbols.assign(b, std::vector<int>(game_.max_len));
  const auto weights = lstm("sender.message");
  const Var& embedding = params_.get("sender.symbol_embedding");
  const Var& out_w = params_.get("sender.output.weight");
  const Var& out_b = params_.get("sender.output.bias");

  Var input = nc::matmul(nc::constant(Array(b, 1, 1.0)), params_.get("sender.sos"));
  nc::LstmState state{encoding, nullptr};
  for (int k = 0; k < game_.max_len; ++k) {
    state = nc::lstm_cell(input, state.h, state.c, weights);
    const Var logits = nc::add(nc::matmul(state.h, out_w), out_b);
    Var symbol;
    std::vector<std::size_t> picked;
    if (decoding == Decoding::kGumbel) {
      symbol = nc::gumbel_softmax(logits, agent_.gumbel_temperature, *rng);
      picked = nc::argmax_rows(symbol->value);
    } else {
      picked = nc::argmax_rows(logits->value);
      symbol = nc::constant(nc::one_hot_rows(picked, game_.vocab_size));
    }
    for (std::size_t i = 0; i < b; ++i) out.symbols[i][k] = static_cast<int>(picked[i]);
    out.steps.push_back(symbol);
    if (k + 1 < game_.max_len) input = nc::matmul(symbol, embedding);
  }
  return out;
}

ReceiverOutput AgentPair::receive(std::span<const Var> steps,
                                  std::span<const EpisodeSpec> batch) const {
  if (steps.size() != static_cast<std::size_t>(game_.max_len)) {
    throw DimensionError("receiver_forward: message length " + std::to_string(steps.size()) +
                         " != L = " + std::to_string(game_.max_len));
  }
  const std::size_t b = batch.size();
  if (b == 0 || steps[0]->rows() != b) throw DimensionError("receiver_forward: batch size mismatch");
  const std::size_t per_row = game_.candidates();

  const auto weights = lstm("receiver.message");
  const Var& embedding = params_.get("receiver.symbol_embedding");
  nc::LstmState state;
  for (const Var& step : steps) {
    state = nc::lstm_cell(nc::matmul(step, embedding), state.h, state.c, weights);
  }
  const Var message_encoding = state.h;
  const bool sequential = agent_.architecture != Architecture::kBase;
  const Var temporal_encoding =
      sequential ? nc::lstm_scan(message_encoding, lstm("receiver.temporal")) : nullptr;
  const Var query = sequential ? temporal_encoding : message_encoding;

  std::vector<envgen::ObjectVector> candidates;
  candidates.reserve(b * per_row);
  for (const auto& ep : batch) {
    if (ep.distractors.size() + 1 != per_row) {
      throw DimensionError("receiver_forward: episode has " +
                           std::to_string(ep.distractors.size()) + " distractors, expected " +
                           std::to_string(per_row - 1));
    }
    for (auto& c : ep.candidates()) candidates.push_back(std::move(c));
  }
  const Var candidate_embedding =
      nc::add(nc::matmul(nc::constant(encode_objects(candidates, game_.n_val)),
                         params_.get("receiver.object.weight")),
              params_.get("receiver.object.bias"));

  ReceiverOutput out;
  out.scores = nc::grouped_dot(query, candidate_embedding, per_row);
  if (agent_.has_temporal_head()) {
    const Var chosen = nc::grouped_mix(nc::softmax(out.scores), candidate_embedding);
    std::vector<Var> parts{message_encoding};
    if (sequential) parts.push_back(temporal_encoding);
    parts.push_back(chosen);
    out.temporal_logits = nc::add(nc::matmul(nc::concat_cols(parts), params_.get("receiver.head.weight")),
                                  params_.get("receiver.head.bias"));
  }
  return out;
}

ReceiverOutput AgentPair::receiver_forward(const MessageBatch& messages,
                                           std::span<const EpisodeSpec> batch) const {
  return receive(messages.steps, batch);
}

ReceiverOutput AgentPair::receiver_forward(std::span<const std::vector<int>> messages,
                                           std::span<const EpisodeSpec> batch) const {
  std::vector<Var> steps;
  for (const auto& m : messages) {
    if (m.size() != static_cast<std::size_t>(game_.max_len)) {
      throw DimensionError("receiver_forward: message length " + std::to_string(m.size()) +
                           " != L = " + std::to_string(game_.max_len));
    }
  }
  for (int k = 0; k < game_.max_len; ++k) {
    std::vector<std::size_t> column;
    column.reserve(messages.size());
    for (const auto& m : messages) column.push_back(static_cast<std::size_t>(m[k]));
    steps.push_back(nc::constant(nc::one_hot_rows(column, game_.vocab_size)));
  }
  return receive(steps, batch);
}

Var game_loss(const Var& scores, std::span<const std::size_t> target_index,
              const Var& temporal_logits, std::span<const std::size_t> temporal_label,
              bool use_temporal_loss) {
  Var loss = nc::cross_entropy(scores, target_index);
  if (use_temporal_loss) {
    if (!temporal_logits) throw ConfigError("temporal loss requested but receiver has no head");
    loss = nc::add(loss, nc::cross_entropy(temporal_logits, temporal_label));
  }
  return loss;
}

Var game_loss(const ReceiverOutput& out, std::span<const EpisodeSpec> batch,
              bool use_temporal_loss) {
  std::vector<std::size_t> targets, labels;
  targets.reserve(batch.size());
  labels.reserve(batch.size());
  for (const auto& ep : batch) {
    targets.push_back(static_cast<std::size_t>(ep.target_index));
    labels.push_back(static_cast<std::size_t>(ep.temporal_label));
  }
  return game_loss(out.scores, targets, out.temporal_logits, labels, use_temporal_loss);
}

namespace {

std::size_t correct_count(const Var& scores, std::span<const EpisodeSpec> batch) {
  const auto guesses = nc::argmax_rows(scores->value);
  std::size_t n = 0;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    n += guesses[i] == static_cast<std::size_t>(batch[i].target_index);
  }
  return n;
}

}  // namespace

TrainResult train_on(const std::vector<EpisodeSpec>& dataset, const GameConfig& game,
                     const AgentConfig& agent, int epochs, ParameterStore initial, Rng& rng) {
  if (dataset.empty()) throw ConfigError("train_on: empty dataset");
  return train_on([&](int) { return dataset; }, game, agent, epochs, std::move(initial), rng);
}

std::uint64_t epoch_seed(std::uint64_t game_seed, int epoch) {
  return Rng(game_seed).fork("epoch").fork(static_cast<std::uint64_t>(epoch)).next_u64();
}

TrainResult train_on(const EpisodeSource& episodes, const GameConfig& game,
                     const AgentConfig& agent, int epochs, ParameterStore initial, Rng& rng) {
  AgentPair pair(agent, game, std::move(initial));
  TrainResult result;
  ParameterStore last_good = pair.params().clone();
  nc::AdamMoments moments;
  const nc::AdamOptions options{agent.learning_rate, 0.9, 0.999, 1e-8};
  std::uint64_t step = 0;
  const std::size_t batch_size = agent.batch_size;

  for (int epoch = 1; epoch <= epochs && !result.failed; ++epoch) {
    const std::vector<EpisodeSpec> dataset = episodes(epoch);
    if (dataset.empty()) throw ConfigError("train_on: empty dataset");
    const std::span<const EpisodeSpec> all(dataset);
    double loss_sum = 0.0;
    std::size_t correct = 0;
    for (std::size_t start = 0; start < dataset.size(); start += batch_size) {
      const auto batch = all.subspan(start, std::min(batch_size, dataset.size() - start));
      const MessageBatch messages = pair.sender_forward(batch, Decoding::kGumbel, &rng);
      const ReceiverOutput out = pair.receiver_forward(messages, batch);
      const Var loss = game_loss(out, batch, agent.use_temporal_loss);
      const double value = loss->value[0];
      if (!std::isfinite(value)) {
        result.failed = true;
        result.failure = "non-finite loss at epoch " + std::to_string(epoch);
        break;
      }
      nc::backward(loss);
      try {
        nc::adam_step(pair.params(), moments, options, ++step);
      } catch (const nc::NonFiniteGradient&) {
        result.failed = true;
        result.failure = "non-finite gradient at epoch " + std::to_string(epoch);
        break;
      }
      loss_sum += value * static_cast<double>(batch.size());
      correct += correct_count(out.scores, batch);
    }
    if (result.failed) break;
    const double n = static_cast<double>(dataset.size());
    result.log.push_back({epoch, loss_sum / n, static_cast<double>(correct) / n});
    last_good = pair.params().clone();
  }
  result.params = std::move(last_good);
  return result;
}

TrainResult train_run(EnvironmentKind kind, const GameConfig& game, const AgentConfig& agent,
                      int epochs, Rng& rng) {
  Rng init_rng = rng.fork("init");
  Rng noise_rng = rng.fork("gumbel");
  AgentPair fresh(agent, game, init_rng);
  if (!agent.fresh_episodes) {
    const auto dataset = envgen::build_dataset(kind, game);
    return train_on(dataset, game, agent, epochs, std::move(fresh.params()), noise_rng);
  }
  const EpisodeSource source = [&](int epoch) {
    GameConfig g = game;
    g.seed = epoch_seed(game.seed, epoch);
    return envgen::build_dataset(kind, g);
  };
  return train_on(source, game, agent, epochs, std::move(fresh.params()), noise_rng);
}

metrics::ExchangeHistory evaluate_run(const AgentPair& pair,
                                      const std::vector<EpisodeSpec>& dataset) {
  metrics::ExchangeHistory history;
  history.reserve(dataset.size());
  const std::size_t batch_size = pair.agent_config().batch_size;
  const std::span<const EpisodeSpec> all(dataset);
  for (std::size_t start = 0; start < dataset.size(); start += batch_size) {
    const auto batch = all.subspan(start, std::min(batch_size, dataset.size() - start));
    const MessageBatch messages = pair.sender_forward(batch, Decoding::kArgmax, nullptr);
    const ReceiverOutput out = pair.receiver_forward(messages, batch);
    const auto guesses = nc::argmax_rows(out.scores->value);
    std::vector<std::size_t> predicted;
    if (out.temporal_logits) predicted = nc::argmax_rows(out.temporal_logits->value);
    for (std::size_t i = 0; i < batch.size(); ++i) {
      const EpisodeSpec& ep = batch[i];
      metrics::ExchangeRecord r;
      r.t = ep.t;
      r.target = ep.target;
      r.distractors = ep.distractors;
      r.target_index = ep.target_index;
      r.message = messages.symbols[i];
      r.guess = static_cast<int>(guesses[i]);
      r.correct = r.guess == ep.target_index;
      r.temporal_label = ep.temporal_label;
      r.predicted_label = predicted.empty() ? -1 : static_cast<int>(predicted[i]);
      history.push_back(std::move(r));
    }
  }
  return history;
}

metrics::ExchangeHistory evaluate_run(const AgentPair& pair, EnvironmentKind kind,
                                      const GameConfig& game) {
  return evaluate_run(pair, envgen::build_dataset(kind, game));
}

double accuracy(const metrics::ExchangeHistory& history) {
  if (history.empty()) return 0.0;
  std::size_t n = 0;
  for (const auto& r : history) n += r.correct;
  return static_cast<double>(n) / static_cast<double>(history.size());
}

}  // namespace tempref::agents
