#include "tempref/harness/config.hpp"

#include <algorithm>
#include <fstream>
#include <functional>
#include <istream>
#include <map>
#include <sstream>

#include "tempref/text.hpp"

namespace tempref::harness {

namespace {

std::string join_list(const std::vector<std::string>& parts) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += ',';
    out += parts[i];
  }
  return out;
}

std::vector<std::string_view> list_items(std::string_view list) {
  std::vector<std::string_view> out;
  for (auto part : text::split(list, ',')) {
    part = text::trim(part);
    if (!part.empty()) out.push_back(part);
  }
  return out;
}

// All LSTM and receiver widths are one shared size; the per-module keys are
// aliases and must agree.
constexpr const char* kHiddenKeys[] = {"sender_meaning_hidden", "sender_temporal_hidden",
                                       "sender_message_hidden", "receiver_hidden"};

}  // namespace

std::vector<Architecture> parse_architectures(std::string_view list) {
  std::vector<Architecture> out;
  for (auto item : list_items(list)) out.push_back(agents::parse_architecture(item));
  return out;
}

std::vector<EnvironmentKind> parse_environments(std::string_view list) {
  std::vector<EnvironmentKind> out;
  for (auto item : list_items(list)) out.push_back(envgen::parse_environment(item));
  return out;
}

void ExperimentConfig::validate() const {
  game.validate();
  agent.validate();
  if (epochs < 0) throw ConfigError("epochs must be >= 0");
  if (eval.dataset_size < 0) throw ConfigError("eval dataset_size must be >= 0");
  if (eval.topsim_cap < 2) throw ConfigError("topsim_cap must be >= 2");
  if (eval.min_count < 1) throw ConfigError("min_count must be >= 1");
  if (!(eval.alpha > 0.0 && eval.alpha < 1.0)) throw ConfigError("alpha must lie in (0, 1)");
  if (eval.report_step < 1 || eval.report_step > game.horizon) {
    throw ConfigError("report_step must lie in [1, horizon]");
  }
  for (double p : sweep.repetition_chances) {
    if (!(p >= 0.0 && p <= 1.0)) throw ConfigError("repetition chances must lie in [0, 1]");
  }
}

ExperimentConfig parse_config(std::istream& in, const ExperimentConfig& base,
                              std::string_view source) {
  ExperimentConfig c = base;
  std::map<std::string, int> hidden_seen;
  std::string section;
  std::string raw;
  int line_no = 0;
  // Errors raised here already carry source:line; anything else thrown while
  // reading a value gets the location added below.
  struct Located : FormatError {
    using FormatError::FormatError;
  };
  auto fail = [&](const std::string& what) -> void {
    throw Located(std::string(source) + ":" + std::to_string(line_no) + ": " + what);
  };
  while (std::getline(in, raw)) {
    ++line_no;
    std::string_view line = raw;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = text::trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') fail("unterminated section header");
      section = std::string(text::trim(line.substr(1, line.size() - 2)));
      if (section != "game" && section != "agent" && section != "train" && section != "eval" &&
          section != "sweep") {
        fail("unknown section [" + section + "]");
      }
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) fail("expected key = value");
    if (section.empty()) fail("key outside of a section");
    const std::string key(text::trim(line.substr(0, eq)));
    const std::string_view value = text::trim(line.substr(eq + 1));
    try {
      if (section == "game") {
        auto& g = c.game;
        if (key == "n_att") g.n_att = text::parse_int<int>(value);
        else if (key == "n_val") g.n_val = text::parse_int<int>(value);
        else if (key == "num_distractors") g.num_distractors = text::parse_int<int>(value);
        else if (key == "max_len") g.max_len = text::parse_int<int>(value);
        else if (key == "vocab_size") g.vocab_size = text::parse_int<int>(value);
        else if (key == "repetition_chance") g.repetition_chance = text::parse_double(value);
        else if (key == "horizon") g.horizon = text::parse_int<int>(value);
        else if (key == "dataset_size") g.dataset_size = text::parse_int<int>(value);
        else fail("unknown key '" + key + "' in [game]");
      } else if (section == "agent") {
        auto& a = c.agent;
        if (key == "architecture") a.architecture = agents::parse_architecture(value);
        else if (key == "temporal_loss") a.use_temporal_loss = text::parse_bool(value);
        else if (key == "sender_embedding_size") a.embed_size = text::parse_int<int>(value);
        else if (key == "gumbel_temperature") a.gumbel_temperature = text::parse_double(value);
        else if (key == "hidden_size" ||
                 std::find(std::begin(kHiddenKeys), std::end(kHiddenKeys), key) !=
                     std::end(kHiddenKeys)) {
          hidden_seen[key] = text::parse_int<int>(value);
        } else {
          fail("unknown key '" + key + "' in [agent]");
        }
      } else if (section == "train") {
        if (key == "env") c.train_env = envgen::parse_environment(value);
        else if (key == "epochs") c.epochs = text::parse_int<int>(value);
        else if (key == "batch_size") c.agent.batch_size = text::parse_int<int>(value);
        else if (key == "learning_rate") c.agent.learning_rate = text::parse_double(value);
        else if (key == "fresh_episodes") c.agent.fresh_episodes = text::parse_bool(value);
        else if (key == "optimizer") {
          if (value != "adam") fail("only optimizer = adam is supported");
        } else if (key == "length_penalty") {
          if (text::parse_double(value) != 0.0) fail("only length_penalty = 0 is supported");
        } else {
          fail("unknown key '" + key + "' in [train]");
        }
      } else if (section == "eval") {
        if (key == "dataset_size") c.eval.dataset_size = text::parse_int<int>(value);
        else if (key == "topsim_cap") c.eval.topsim_cap = text::parse_int<std::size_t>(value);
        else if (key == "min_count") c.eval.min_count = text::parse_int<long>(value);
        else if (key == "alpha") c.eval.alpha = text::parse_double(value);
        else if (key == "report_step") c.eval.report_step = text::parse_int<int>(value);
        else fail("unknown key '" + key + "' in [eval]");
      } else {
        auto& s = c.sweep;
        if (key == "architectures") s.architectures = parse_architectures(value);
        else if (key == "temporal_loss") {
          s.temporal_loss.clear();
          for (auto item : list_items(value)) s.temporal_loss.push_back(text::parse_bool(item));
        } else if (key == "train_envs") s.train_envs = parse_environments(value);
        else if (key == "seeds") {
          s.seeds.clear();
          for (auto item : list_items(value)) s.seeds.push_back(text::parse_int<std::uint64_t>(item));
        } else if (key == "repetition_chances") {
          s.repetition_chances.clear();
          for (auto item : list_items(value)) s.repetition_chances.push_back(text::parse_double(item));
        } else {
          fail("unknown key '" + key + "' in [sweep]");
        }
      }
    } catch (const Located&) {
      throw;
    } catch (const Error& e) {
      fail(e.what());
    }
  }
  if (!hidden_seen.empty()) {
    const int width = hidden_seen.begin()->second;
    for (const auto& [key, value] : hidden_seen) {
      if (value != width) {
        throw ConfigError(std::string(source) + ": hidden sizes disagree (" + key + " = " +
                          std::to_string(value) + ", expected " + std::to_string(width) + ")");
      }
    }
    c.agent.hidden_size = width;
  }
  c.validate();
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path, const ExperimentConfig& base) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  return parse_config(in, base, path.string());
}

std::string format_config(const ExperimentConfig& c) {
  std::ostringstream o;
  const auto& g = c.game;
  const auto& a = c.agent;
  o << "[game]\n"
    << "n_att = " << g.n_att << "\n"
    << "n_val = " << g.n_val << "\n"
    << "num_distractors = " << g.num_distractors << "\n"
    << "max_len = " << g.max_len << "\n"
    << "vocab_size = " << g.vocab_size << "\n"
    << "repetition_chance = " << text::format_double(g.repetition_chance) << "\n"
    << "horizon = " << g.horizon << "\n"
    << "dataset_size = " << g.dataset_size << "\n\n";
  o << "[agent]\n"
    << "architecture = " << agents::to_string(a.architecture) << "\n"
    << "temporal_loss = " << (a.use_temporal_loss ? "true" : "false") << "\n"
    << "sender_embedding_size = " << a.embed_size << "\n"
    << "hidden_size = " << a.hidden_size << "\n";
  for (const char* key : kHiddenKeys) o << key << " = " << a.hidden_size << "\n";
  o << "gumbel_temperature = " << text::format_double(a.gumbel_temperature) << "\n\n";
  o << "[train]\n"
    << "env = " << envgen::to_string(c.train_env) << "\n"
    << "epochs = " << c.epochs << "\n"
    << "optimizer = adam\n"
    << "learning_rate = " << text::format_double(a.learning_rate) << "\n"
    << "batch_size = " << a.batch_size << "\n"
    << "length_penalty = 0\n"
    << "fresh_episodes = " << (a.fresh_episodes ? "true" : "false") << "\n\n";
  o << "[eval]\n"
    << "dataset_size = " << c.eval.dataset_size << "\n"
    << "topsim_cap = " << c.eval.topsim_cap << "\n"
    << "min_count = " << c.eval.min_count << "\n"
    << "alpha = " << text::format_double(c.eval.alpha) << "\n"
    << "report_step = " << c.eval.report_step << "\n\n";
  std::vector<std::string> archs, losses, envs, seeds, chances;
  for (auto x : c.sweep.architectures) archs.emplace_back(agents::to_string(x));
  for (bool x : c.sweep.temporal_loss) losses.emplace_back(x ? "true" : "false");
  for (auto x : c.sweep.train_envs) envs.emplace_back(envgen::to_string(x));
  for (auto x : c.sweep.seeds) seeds.push_back(std::to_string(x));
  for (auto x : c.sweep.repetition_chances) chances.push_back(text::format_double(x));
  o << "[sweep]\n"
    << "architectures = " << join_list(archs) << "\n"
    << "temporal_loss = " << join_list(losses) << "\n"
    << "train_envs = " << join_list(envs) << "\n"
    << "seeds = " << join_list(seeds) << "\n"
    << "repetition_chances = " << join_list(chances) << "\n";
  return o.str();
}

ExperimentConfig full_profile() {
  ExperimentConfig c;
  c.game = GameConfig{};
  c.agent = AgentConfig{};
  c.epochs = 600;
  return c;
}

ExperimentConfig desk_profile() {
  ExperimentConfig c;
  c.game.n_att = 4;
  c.game.n_val = 4;
  c.game.num_distractors = 3;
  c.game.max_len = 3;
  c.game.vocab_size = 10;
  c.game.repetition_chance = 0.5;
  c.game.horizon = 8;
  c.game.dataset_size = 1280;
  c.agent.embed_size = 64;
  c.agent.hidden_size = 64;
  c.agent.fresh_episodes = true;
  c.epochs = 200;
  c.eval.dataset_size = 20000;
  c.sweep.train_envs = {EnvironmentKind::kTrg};
  c.sweep.seeds = {1, 2, 3, 4, 5};
  c.sweep.repetition_chances = {0.5};
  return c;
}

ExperimentConfig profile(std::string_view name) {
  if (name == "full") return full_profile();
  if (name == "desk") return desk_profile();
  throw ConfigError("unknown profile '" + std::string(name) + "' (expected desk or full)");
}

}  // namespace tempref::harness
