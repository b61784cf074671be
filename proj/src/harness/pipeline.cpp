#include "tempref/harness/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#if defined(__GLIBC__)
#include <malloc.h>
#endif

#include "tempref/envgen/envgen.hpp"
#include "tempref/metrics/temporality.hpp"
#include "tempref/numcore/params.hpp"
#include "tempref/text.hpp"

namespace tempref::harness {

namespace {

std::string join_doubles(const std::vector<double>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ',';
    out += text::format_double(v[i]);
  }
  return out;
}

std::string join_bools(const std::vector<bool>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ',';
    out += v[i] ? '1' : '0';
  }
  return out;
}

std::vector<double> split_doubles(std::string_view s) {
  std::vector<double> out;
  if (text::trim(s).empty()) return out;
  for (auto part : text::split(s, ',')) out.push_back(text::parse_double(part));
  return out;
}

std::vector<bool> split_bools(std::string_view s) {
  std::vector<bool> out;
  if (text::trim(s).empty()) return out;
  for (auto part : text::split(s, ',')) out.push_back(text::parse_bool(part));
  return out;
}

std::string format_score(const metrics::Score& s) {
  return text::format_double(s.value) + (s.degenerate ? " degenerate" : "");
}

metrics::Score parse_score(std::string_view s) {
  metrics::Score out;
  const auto parts = text::split(text::trim(s), ' ');
  out.value = text::parse_double(parts.at(0));
  out.degenerate = parts.size() > 1 && parts[1] == "degenerate";
  return out;
}

void save_text(const fs::path& path, const std::function<void(std::ostream&)>& fill) {
  std::ostringstream o;
  fill(o);
  write_file_atomic(path, o.str());
}

}  // namespace

bool EnvAnalysis::emerged() const {
  return std::find(emergence.begin(), emergence.end(), true) != emergence.end();
}

const EnvAnalysis& RunAnalysis::at(EnvironmentKind env) const {
  for (const auto& e : envs) {
    if (e.env == env) return e;
  }
  throw IndexError("analysis of run " + run_id + " lacks environment " +
                   std::string(envgen::to_string(env)));
}

bool RunAnalysis::emerged() const {
  return std::any_of(envs.begin(), envs.end(), [](const EnvAnalysis& e) { return e.emerged(); });
}

EnvAnalysis analyze_log(const ExchangeLog& log, const RunSpec& spec, const EvalConfig& eval) {
  EnvAnalysis a;
  a.env = log.env;
  a.episodes = log.history.size();
  a.accuracy = agents::accuracy(log.history);
  const int h = spec.game.horizon;
  const auto report = metrics::temporality_report(log.history, h);
  a.distinct_messages = report.messages.size();
  for (int n = 1; n <= h; ++n) a.max_previous.push_back(report.max_previous(n, eval.min_count));
  a.emergence = report.emergence(eval.min_count);
  a.mean_within_horizon = report.mean_within_horizon();
  std::size_t repeats = 0;
  for (const auto& r : log.history) repeats += r.temporal_label > 0;
  a.repeat_fraction = log.history.empty() ? 0.0 : static_cast<double>(repeats) / log.history.size();
  metrics::TopsimOptions options;
  options.cap = eval.topsim_cap;
  options.seed = numcore::fnv1a64(log.run_id + "/" + std::string(envgen::to_string(log.env)));
  a.compositionality = metrics::compositionality_report(log.history, spec.game.vocab_size, options);
  return a;
}

void write_analysis(std::ostream& out, const RunAnalysis& r) {
  out << "# tempref analysis v1\n"
      << "run_id=" << r.run_id << "\n"
      << "min_count=" << r.min_count << "\n";
  for (const auto& e : r.envs) {
    const std::string p = std::string(envgen::to_string(e.env)) + ".";
    const auto& c = e.compositionality;
    out << p << "episodes=" << e.episodes << "\n"
        << p << "accuracy=" << text::format_double(e.accuracy) << "\n"
        << p << "distinct_messages=" << e.distinct_messages << "\n"
        << p << "max_previous=" << join_doubles(e.max_previous) << "\n"
        << p << "emergence=" << join_bools(e.emergence) << "\n"
        << p << "mean_within_horizon=" << text::format_double(e.mean_within_horizon) << "\n"
        << p << "repeat_fraction=" << text::format_double(e.repeat_fraction) << "\n"
        << p << "topsim=" << format_score(c.topsim) << "\n"
        << p << "topsim_episodes=" << c.topsim_episodes << "\n"
        << p << "posdis=" << format_score(c.posdis) << "\n"
        << p << "bosdis=" << format_score(c.bosdis) << "\n";
  }
}

RunAnalysis read_analysis(std::istream& in) {
  std::map<std::string, std::string> kv;
  std::string line;
  if (!std::getline(in, line) || line != "# tempref analysis v1") {
    throw FormatError("analysis: missing header");
  }
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw FormatError("analysis: bad line '" + line + "'");
    kv[line.substr(0, eq)] = line.substr(eq + 1);
  }
  auto get = [&](const std::string& key) -> const std::string& {
    auto it = kv.find(key);
    if (it == kv.end()) throw FormatError("analysis lacks '" + key + "'");
    return it->second;
  };
  RunAnalysis r;
  r.run_id = get("run_id");
  r.min_count = text::parse_int<long>(get("min_count"));
  for (auto env : envgen::kAllEnvironments) {
    const std::string p = std::string(envgen::to_string(env)) + ".";
    if (!kv.count(p + "episodes")) continue;
    EnvAnalysis e;
    e.env = env;
    e.episodes = text::parse_int<std::size_t>(get(p + "episodes"));
    e.accuracy = text::parse_double(get(p + "accuracy"));
    e.distinct_messages = text::parse_int<std::size_t>(get(p + "distinct_messages"));
    e.max_previous = split_doubles(get(p + "max_previous"));
    e.emergence = split_bools(get(p + "emergence"));
    e.mean_within_horizon = text::parse_double(get(p + "mean_within_horizon"));
    e.repeat_fraction = text::parse_double(get(p + "repeat_fraction"));
    e.compositionality.topsim = parse_score(get(p + "topsim"));
    e.compositionality.topsim_episodes = text::parse_int<std::size_t>(get(p + "topsim_episodes"));
    e.compositionality.posdis = parse_score(get(p + "posdis"));
    e.compositionality.bosdis = parse_score(get(p + "bosdis"));
    r.envs.push_back(std::move(e));
  }
  return r;
}

RunRecord open_record(const RunSpec& spec, const fs::path& out_root) {
  const RunPaths paths = run_paths(out_root, spec.run_id);
  if (fs::exists(paths.record())) {
    RunRecord r = read_record(paths.record());
    if (!(r.spec == spec)) {
      throw Error("run directory " + paths.dir.string() + " holds a different spec");
    }
    return r;
  }
  RunRecord r;
  r.spec = spec;
  r.paths = paths;
  r.created = r.updated = utc_timestamp();
  write_record(r);
  return r;
}

RunRecord train_stage(RunRecord r) {
  if (r.status != RunStatus::kPending) throw Error("train_stage: run " + r.spec.run_id + " is " + std::string(to_string(r.status)));
  numcore::Rng rng = numcore::Rng(r.spec.seed).fork("agent");
  auto result = agents::train_run(r.spec.train_env, r.spec.game, r.spec.agent, r.spec.epochs, rng);
  numcore::save_checkpoint(result.params, r.paths.checkpoint());
  save_text(r.paths.train_log(), [&](std::ostream& o) { write_train_log(o, result.log); });
  r.status = result.failed ? RunStatus::kFailed : RunStatus::kTrained;
  r.failure = result.failure;
  r.updated = utc_timestamp();
  write_record(r);
  return r;
}

RunRecord eval_stage(RunRecord r, const EvalConfig& eval) {
  if (r.status != RunStatus::kTrained) throw Error("eval_stage: run " + r.spec.run_id + " is " + std::string(to_string(r.status)));
  agents::AgentPair pair(r.spec.agent, r.spec.game, numcore::load_checkpoint(r.paths.checkpoint()));
  for (auto env : envgen::kAllEnvironments) {
    const auto dataset = envgen::build_dataset(env, eval_game(r.spec, eval, env));
    ExchangeLog log{r.spec.run_id, env, agents::evaluate_run(pair, dataset)};
    save_text(r.paths.eval_log(env), [&](std::ostream& o) { write_exchange_log(o, log); });
  }
  r.status = RunStatus::kEvaluated;
  r.eval_settings = eval_settings_text(eval);
  r.updated = utc_timestamp();
  write_record(r);
  return r;
}

RunRecord analyze_stage(RunRecord r, const EvalConfig& eval) {
  if (r.status != RunStatus::kEvaluated) throw Error("analyze_stage: run " + r.spec.run_id + " is " + std::string(to_string(r.status)));
  RunAnalysis analysis;
  analysis.run_id = r.spec.run_id;
  analysis.min_count = eval.min_count;
  for (auto env : envgen::kAllEnvironments) {
    std::ifstream in(r.paths.eval_log(env));
    if (!in) throw Error("missing evaluation log " + r.paths.eval_log(env).string());
    const ExchangeLog log = read_exchange_log(in);
    const auto report = metrics::temporality_report(log.history, r.spec.game.horizon);
    save_text(r.paths.messages(env), [&](std::ostream& o) { write_message_table(o, report); });
    analysis.envs.push_back(analyze_log(log, r.spec, eval));
  }
  save_text(r.paths.analysis(), [&](std::ostream& o) { write_analysis(o, analysis); });
  r.status = RunStatus::kAnalyzed;
  r.updated = utc_timestamp();
  write_record(r);
  return r;
}

RunRecord execute_run(const RunSpec& spec, const EvalConfig& eval, const fs::path& out_root) {
  RunRecord r = open_record(spec, out_root);
  if (r.status == RunStatus::kFailed) return r;
  const std::string settings = eval_settings_text(eval);
  if ((r.status == RunStatus::kEvaluated || r.status == RunStatus::kAnalyzed) &&
      r.eval_settings != settings) {
    r.status = RunStatus::kTrained;
  }
  if (r.status == RunStatus::kPending) r = train_stage(std::move(r));
  if (r.status == RunStatus::kTrained) r = eval_stage(std::move(r), eval);
  if (r.status == RunStatus::kEvaluated) r = analyze_stage(std::move(r), eval);
  return r;
}

std::vector<RunRecord> sweep(const std::vector<RunSpec>& specs, const EvalConfig& eval,
                             const fs::path& out_root, int jobs, const ProgressFn& progress) {
  if (specs.empty()) throw ConfigError("sweep: no runs");
  if (jobs < 1) throw ConfigError("sweep: jobs must be >= 1");
  std::vector<RunRecord> records(specs.size());
  std::atomic<std::size_t> next{0};
  std::size_t done = 0;
  std::mutex mutex;
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= specs.size()) return;
      RunRecord r;
      try {
        r = execute_run(specs[i], eval, out_root);
      } catch (const std::exception& e) {
        r.spec = specs[i];
        r.paths = run_paths(out_root, specs[i].run_id);
        r.status = RunStatus::kFailed;
        r.failure = e.what();
        r.created = r.updated = utc_timestamp();
        try {
          write_record(r);
        } catch (const std::exception&) {
        }
      }
      std::lock_guard lock(mutex);
      records[i] = r;
      ++done;
      if (progress) progress(r, done, specs.size());
    }
  };
  const std::size_t threads = std::min<std::size_t>(static_cast<std::size_t>(jobs), specs.size());
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
  }
  return records;
}

std::vector<RunRecord> list_records(const fs::path& out_root) {
  std::vector<RunRecord> out;
  const fs::path runs = out_root / "runs";
  if (!fs::exists(runs)) return out;
  for (const auto& entry : fs::directory_iterator(runs)) {
    const fs::path file = entry.path() / "run.txt";
    if (entry.is_directory() && fs::exists(file)) out.push_back(read_record(file));
  }
  std::sort(out.begin(), out.end(),
            [](const RunRecord& a, const RunRecord& b) { return a.spec.run_id < b.spec.run_id; });
  return out;
}

void tune_allocator() {
#if defined(__GLIBC__)
  mallopt(M_MMAP_THRESHOLD, 32 * 1024 * 1024);
  mallopt(M_TRIM_THRESHOLD, 256 * 1024 * 1024);
#endif
}

}  // namespace tempref::harness
