#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "tempref/harness/config.hpp"
#include "tempref/harness/logs.hpp"
#include "tempref/harness/pipeline.hpp"
#include "tempref/harness/report.hpp"
#include "tempref/harness/run.hpp"
#include "tempref/numcore/errors.hpp"

using namespace tempref::harness;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

ExperimentConfig tiny_config() {
  ExperimentConfig c = desk_profile();
  c.game.dataset_size = 96;
  c.agent.hidden_size = 8;
  c.agent.embed_size = 8;
  c.agent.batch_size = 32;
  c.epochs = 2;
  c.eval.dataset_size = 60;
  c.sweep.architectures = {Architecture::kBase, Architecture::kTemporal};
  c.sweep.temporal_loss = {true};
  c.sweep.seeds = {1, 2};
  return c;
}

// Every file under root/runs, path -> content.
std::map<std::string, std::string> snapshot(const fs::path& root) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(root / "runs")) {
    if (e.is_regular_file()) out[fs::relative(e.path(), root).string()] = read_file(e.path());
  }
  return out;
}

// run.txt carries wall-clock timestamps; everything else must match bytewise.
std::map<std::string, std::string> without_records(std::map<std::string, std::string> files) {
  std::erase_if(files, [](const auto& kv) { return kv.first.ends_with("run.txt"); });
  return files;
}

}  // namespace

TEST_CASE("config round trip") {
  for (const auto& c : {desk_profile(), full_profile(), tiny_config()}) {
    std::istringstream in(format_config(c));
    CHECK(parse_config(in) == c);
  }
  std::istringstream partial("[game]\nn_att = 3 # comment\n[train]\nenv = rg_hard\n");
  const auto p = parse_config(partial, desk_profile());
  CHECK(p.game.n_att == 3);
  CHECK(p.train_env == EnvironmentKind::kRgHard);
  CHECK(p.game.n_val == desk_profile().game.n_val);
}

TEST_CASE("shipped configs match the profiles") {
  const fs::path dir = fs::path(TEMPREF_SOURCE_DIR) / "configs";
  CHECK(load_config(dir / "desk.cfg") == desk_profile());
  CHECK(load_config(dir / "full.cfg") == full_profile());
  // the files are complete: loading over other defaults changes nothing
  CHECK(load_config(dir / "desk.cfg", full_profile()) == desk_profile());
}

TEST_CASE("config errors name the line") {
  auto fails_with = [](const std::string& text, const std::string& needle) {
    std::istringstream in(text);
    try {
      parse_config(in, desk_profile(), "x.cfg");
    } catch (const tempref::Error& e) {
      CHECK_MESSAGE(std::string(e.what()).find(needle) != std::string::npos, std::string(e.what()));
      return;
    }
    FAIL("no error for: " << text);
  };
  fails_with("[game]\nn_att = four\n", "x.cfg:2");
  fails_with("[game]\nbogus = 1\n", "x.cfg:2");
  fails_with("key = 1\n", "x.cfg:1");
  fails_with("[train]\noptimizer = sgd\n", "x.cfg:2");
  fails_with("[agent]\nsender_meaning_hidden = 32\nreceiver_hidden = 64\n", "hidden");
  fails_with("[game]\nhorizon = 0\n", "horizon");
}

TEST_CASE("run ids") {
  const auto c = tiny_config();
  const auto a = make_run_spec(c.game, c.agent, c.train_env, c.epochs, 3);
  const auto b = make_run_spec(c.game, c.agent, c.train_env, c.epochs, 3);
  CHECK(a.run_id == b.run_id);
  CHECK(a.run_id.size() == 16);
  CHECK(a.run_id == compute_run_id(a));
  auto other = c.agent;
  other.hidden_size += 1;
  CHECK(make_run_spec(c.game, other, c.train_env, c.epochs, 3).run_id != a.run_id);
  CHECK(make_run_spec(c.game, c.agent, c.train_env, c.epochs, 4).run_id != a.run_id);
  CHECK(a.game.seed == 3);
}

TEST_CASE("grid expansion") {
  const auto c = tiny_config();
  const auto specs = expand_grid(c);
  CHECK(specs.size() == 2 * 1 * 2);
  std::set<std::string> ids;
  for (const auto& s : specs) ids.insert(s.run_id);
  CHECK(ids.size() == specs.size());
  CHECK(specs[0].agent.architecture == Architecture::kBase);
  CHECK(specs[0].seed == 1);
  CHECK(specs[1].seed == 2);
  CHECK(specs[2].agent.architecture == Architecture::kTemporal);
  auto empty = c;
  empty.sweep.seeds.clear();
  CHECK_THROWS_AS(expand_grid(empty), tempref::ConfigError);
}

TEST_CASE("evaluation game") {
  auto c = tiny_config();
  c.eval.dataset_size = 1000;
  const auto s = make_run_spec(c.game, c.agent, c.train_env, c.epochs, 1);
  CHECK(eval_game(s, c.eval, EnvironmentKind::kNeverSame).dataset_size == 256);
  CHECK(eval_game(s, c.eval, EnvironmentKind::kAlwaysSame).dataset_size == 1000);
  c.eval.dataset_size = 20000;
  CHECK(eval_game(s, c.eval, EnvironmentKind::kAlwaysSame).dataset_size == 2560);
  CHECK(eval_game(s, c.eval, EnvironmentKind::kTrg).dataset_size == 20000);
  c.eval.dataset_size = 1000;
  CHECK(eval_game(s, c.eval, EnvironmentKind::kRg).dataset_size == 1000);
  CHECK(eval_game(s, c.eval, EnvironmentKind::kRg).seed == eval_seed(1));
  CHECK(eval_seed(1) != 1);
}

TEST_CASE("exchange log round trip") {
  tempref::metrics::ExchangeHistory h;
  for (int t = 0; t < 5; ++t) {
    tempref::metrics::ExchangeRecord r;
    r.t = t;
    r.target = {{t % 4, 1, 2, 3}};
    r.distractors = {{{0, 0, 0, 0}}, {{1, 1, 1, 1}}, {{3, 2, 1, 0}}};
    r.target_index = t % 4;
    r.message = {t, 9, 0};
    r.guess = (t + 1) % 4;
    r.correct = r.guess == r.target_index;
    r.temporal_label = t % 3;
    r.predicted_label = t == 2 ? -1 : t;
    h.push_back(r);
  }
  const ExchangeLog log{"0123456789abcdef", EnvironmentKind::kTrgHard, h};
  std::stringstream s;
  write_exchange_log(s, log);
  const auto back = read_exchange_log(s);
  CHECK(back.run_id == log.run_id);
  CHECK(back.env == log.env);
  CHECK(back.history == h);

  std::stringstream bad("run_id\teval_env\n");
  CHECK_THROWS_AS(read_exchange_log(bad), tempref::FormatError);

  const std::vector<tempref::agents::EpochLog> train{{1, 0.5, 0.25}, {2, 0.1, 0.75}};
  std::stringstream t;
  write_train_log(t, train);
  CHECK(read_train_log(t) == train);
}

TEST_CASE("sweep is resumable and idempotent") {
  TempDir dir("tempref_harness_sweep");
  const auto c = tiny_config();
  const auto specs = expand_grid(c);
  const auto first = sweep(specs, c.eval, dir.path, 1);
  for (const auto& r : first) CHECK(r.status == RunStatus::kAnalyzed);
  const auto files = snapshot(dir.path);

  // a second pass finds everything done and rewrites nothing
  const auto again = sweep(specs, c.eval, dir.path, 2);
  CHECK(snapshot(dir.path) == files);

  // drop the later stages of one run and resume it
  const auto paths = first[1].paths;
  RunRecord rec = read_record(paths.record());
  rec.status = RunStatus::kTrained;
  write_record(rec);
  for (auto env : tempref::envgen::kAllEnvironments) fs::remove(paths.eval_log(env));
  fs::remove(paths.analysis());
  sweep(specs, c.eval, dir.path, 1);
  CHECK(without_records(snapshot(dir.path)) == without_records(files));

  // changed evaluation settings re-run evaluation but keep the checkpoint
  auto eval = c.eval;
  eval.dataset_size = 40;
  const auto ckpt = read_file(paths.checkpoint().string() + ".bin");
  const auto redone = execute_run(specs[1], eval, dir.path);
  CHECK(redone.status == RunStatus::kAnalyzed);
  CHECK(read_file(paths.checkpoint().string() + ".bin") == ckpt);
  std::ifstream analysis(paths.analysis());
  CHECK(read_analysis(analysis).at(EnvironmentKind::kRg).episodes == 40);

  const auto listed = list_records(dir.path);
  CHECK(listed.size() == specs.size());
}

TEST_CASE("reports from a sweep") {
  TempDir dir("tempref_harness_report");
  const auto c = tiny_config();
  sweep(expand_grid(c), c.eval, dir.path, 1);
  const auto summaries = load_summaries(list_records(dir.path));
  CHECK(summaries.size() == 4);
  const auto agg = aggregate(summaries);
  CHECK(agg.groups.size() == 2);
  for (const auto& g : agg.groups) CHECK(g.run_ids.size() == 2);
  write_report(agg, {}, dir.path / "report");
  for (const char* f : {"table1.tsv", "table2.tsv", "accuracy.tsv", "compositionality.tsv",
                        "stats.txt", "m_previous.svg", "accuracy.svg"}) {
    CHECK(fs::exists(dir.path / "report" / f));
  }
  CHECK_THROWS_AS(aggregate({}), tempref::Error);
}
