#include "tempref/harness/run.hpp"

#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <map>
#include <sstream>

#include "tempref/envgen/dataset_io.hpp"
#include "tempref/text.hpp"

namespace tempref::harness {

RunSpec make_run_spec(const GameConfig& game, const AgentConfig& agent, EnvironmentKind train_env,
                      int epochs, std::uint64_t seed) {
  RunSpec spec;
  spec.game = game;
  spec.game.seed = seed;
  spec.agent = agent;
  spec.train_env = train_env;
  spec.epochs = epochs;
  spec.seed = seed;
  spec.run_id = compute_run_id(spec);
  return spec;
}

std::string canonical_spec(const RunSpec& s) {
  const auto& a = s.agent;
  std::ostringstream o;
  o << "game " << envgen::format_game_config(s.game) << "\n"
    << "agent architecture=" << agents::to_string(a.architecture)
    << " temporal_loss=" << (a.use_temporal_loss ? 1 : 0) << " embed_size=" << a.embed_size
    << " hidden_size=" << a.hidden_size
    << " gumbel_temperature=" << text::format_double(a.gumbel_temperature)
    << " batch_size=" << a.batch_size << " learning_rate=" << text::format_double(a.learning_rate)
    << " fresh_episodes=" << (a.fresh_episodes ? 1 : 0) << "\n"
    << "train_env " << envgen::to_string(s.train_env) << "\n"
    << "epochs " << s.epochs << "\n"
    << "seed " << s.seed << "\n";
  return o.str();
}

std::string compute_run_id(const RunSpec& spec) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(numcore::fnv1a64(canonical_spec(spec))));
  return buf;
}

std::vector<RunSpec> expand_grid(const ExperimentConfig& c) {
  const auto& s = c.sweep;
  if (s.architectures.empty() || s.temporal_loss.empty() || s.train_envs.empty() ||
      s.seeds.empty() || s.repetition_chances.empty()) {
    throw ConfigError("sweep grid is empty");
  }
  std::vector<RunSpec> out;
  for (double p : s.repetition_chances) {
    for (auto env : s.train_envs) {
      for (auto arch : s.architectures) {
        for (bool loss : s.temporal_loss) {
          for (auto seed : s.seeds) {
            GameConfig g = c.game;
            g.repetition_chance = p;
            AgentConfig a = c.agent;
            a.architecture = arch;
            a.use_temporal_loss = loss;
            out.push_back(make_run_spec(g, a, env, c.epochs, seed));
          }
        }
      }
    }
  }
  return out;
}

std::uint64_t eval_seed(std::uint64_t run_seed) {
  return numcore::Rng(run_seed).fork("evaluation").next_u64();
}

GameConfig eval_game(const RunSpec& spec, const EvalConfig& eval, EnvironmentKind env) {
  GameConfig g = spec.game;
  g.seed = eval_seed(spec.seed);
  if (eval.dataset_size > 0) g.dataset_size = eval.dataset_size;
  const std::uint64_t cap = envgen::max_episodes(env, g);
  if (static_cast<std::uint64_t>(g.dataset_size) > cap) g.dataset_size = static_cast<int>(cap);
  return g;
}

std::string_view to_string(RunStatus s) {
  switch (s) {
    case RunStatus::kPending: return "pending";
    case RunStatus::kTrained: return "trained";
    case RunStatus::kEvaluated: return "evaluated";
    case RunStatus::kAnalyzed: return "analyzed";
    case RunStatus::kFailed: return "failed";
  }
  return "pending";
}

RunStatus parse_status(std::string_view t) {
  for (auto s : {RunStatus::kPending, RunStatus::kTrained, RunStatus::kEvaluated,
                 RunStatus::kAnalyzed, RunStatus::kFailed}) {
    if (to_string(s) == t) return s;
  }
  throw FormatError("unknown run status '" + std::string(t) + "'");
}

fs::path RunPaths::eval_log(EnvironmentKind env) const {
  return dir / ("eval_" + std::string(envgen::to_string(env)) + ".tsv");
}

fs::path RunPaths::messages(EnvironmentKind env) const {
  return dir / ("messages_" + std::string(envgen::to_string(env)) + ".tsv");
}

RunPaths run_paths(const fs::path& out_root, const std::string& run_id) {
  return RunPaths{out_root / "runs" / run_id};
}

std::string eval_settings_text(const EvalConfig& e) {
  return "dataset_size=" + std::to_string(e.dataset_size) +
         " topsim_cap=" + std::to_string(e.topsim_cap) + " min_count=" + std::to_string(e.min_count);
}

void write_record(const RunRecord& r) {
  const auto& s = r.spec;
  const auto& a = s.agent;
  std::ostringstream o;
  o << "# tempref run record v1\n"
    << "run_id=" << s.run_id << "\n"
    << "status=" << to_string(r.status) << "\n"
    << "failure=" << r.failure << "\n"
    << "game=" << envgen::format_game_config(s.game) << "\n"
    << "architecture=" << agents::to_string(a.architecture) << "\n"
    << "temporal_loss=" << (a.use_temporal_loss ? 1 : 0) << "\n"
    << "embed_size=" << a.embed_size << "\n"
    << "hidden_size=" << a.hidden_size << "\n"
    << "gumbel_temperature=" << text::format_double(a.gumbel_temperature) << "\n"
    << "batch_size=" << a.batch_size << "\n"
    << "learning_rate=" << text::format_double(a.learning_rate) << "\n"
    << "fresh_episodes=" << (a.fresh_episodes ? 1 : 0) << "\n"
    << "train_env=" << envgen::to_string(s.train_env) << "\n"
    << "epochs=" << s.epochs << "\n"
    << "seed=" << s.seed << "\n"
    << "eval_settings=" << r.eval_settings << "\n"
    << "checkpoint=" << r.paths.checkpoint().filename().string() << "\n"
    << "train_log=" << r.paths.train_log().filename().string() << "\n";
  for (auto env : envgen::kAllEnvironments) {
    o << "eval_log." << envgen::to_string(env) << "=" << r.paths.eval_log(env).filename().string()
      << "\n";
  }
  o << "analysis=" << r.paths.analysis().filename().string() << "\n"
    << "created=" << r.created << "\n"
    << "updated=" << r.updated << "\n";
  fs::create_directories(r.paths.dir);
  write_file_atomic(r.paths.record(), o.str());
}

RunRecord read_record(const fs::path& file) {
  std::ifstream in(file);
  if (!in) throw FormatError("cannot open run record " + file.string());
  std::map<std::string, std::string> kv;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw FormatError("bad record line '" + line + "' in " + file.string());
    kv[line.substr(0, eq)] = line.substr(eq + 1);
  }
  auto get = [&](const char* key) -> const std::string& {
    auto it = kv.find(key);
    if (it == kv.end()) throw FormatError(std::string("run record lacks '") + key + "': " + file.string());
    return it->second;
  };
  RunRecord r;
  r.spec.run_id = get("run_id");
  r.status = parse_status(get("status"));
  r.failure = get("failure");
  r.spec.game = envgen::parse_game_config(get("game"));
  auto& a = r.spec.agent;
  a.architecture = agents::parse_architecture(get("architecture"));
  a.use_temporal_loss = text::parse_bool(get("temporal_loss"));
  a.embed_size = text::parse_int<int>(get("embed_size"));
  a.hidden_size = text::parse_int<int>(get("hidden_size"));
  a.gumbel_temperature = text::parse_double(get("gumbel_temperature"));
  a.batch_size = text::parse_int<int>(get("batch_size"));
  a.learning_rate = text::parse_double(get("learning_rate"));
  a.fresh_episodes = text::parse_bool(get("fresh_episodes"));
  r.spec.train_env = envgen::parse_environment(get("train_env"));
  r.spec.epochs = text::parse_int<int>(get("epochs"));
  r.spec.seed = text::parse_int<std::uint64_t>(get("seed"));
  r.eval_settings = get("eval_settings");
  r.created = get("created");
  r.updated = get("updated");
  r.paths = RunPaths{file.parent_path()};
  if (compute_run_id(r.spec) != r.spec.run_id) {
    throw FormatError("run record " + file.string() + ": run_id does not match its spec");
  }
  return r;
}

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void write_file_atomic(const fs::path& path, const std::string& content) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + tmp.string());
    out << content;
    if (!out) throw Error("write failed: " + tmp.string());
  }
  fs::rename(tmp, path);
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path.string());
  std::ostringstream o;
  o << in.rdbuf();
  return o.str();
}

}  // namespace tempref::harness
