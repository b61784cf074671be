#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "tempref/envgen/dataset_io.hpp"
#include "tempref/harness/config.hpp"
#include "tempref/harness/pipeline.hpp"
#include "tempref/harness/report.hpp"
#include "tempref/harness/run.hpp"
#include "tempref/text.hpp"

namespace th = tempref::harness;
namespace fs = std::filesystem;

namespace {

struct Globals {
  std::string config_path;
  std::string profile = "desk";
  std::optional<std::uint64_t> seed;
  std::string out;
  int jobs = 1;
};

struct SpecFlags {
  std::string arch;
  std::optional<bool> loss;
  std::string env;
  std::optional<int> epochs;
  std::string run_id;
};

th::ExperimentConfig load(const Globals& g) {
  th::ExperimentConfig base = th::profile(g.profile);
  return g.config_path.empty() ? base : th::load_config(g.config_path, base);
}

fs::path out_root(const Globals& g) {
  if (!g.out.empty()) return g.out;
  if (const char* env = std::getenv("TEMPREF_OUT"); env && *env) return env;
  return "tempref_out";
}

std::uint64_t seed_of(const Globals& g, const th::ExperimentConfig& c) {
  if (g.seed) return *g.seed;
  return c.sweep.seeds.empty() ? 1 : c.sweep.seeds.front();
}

void add_spec_flags(CLI::App* cmd, SpecFlags& f, bool allow_run_id) {
  cmd->add_option("--arch", f.arch, "base, temporal or temporal_r");
  cmd->add_option("--loss", f.loss, "train with the temporal prediction loss (true/false)");
  cmd->add_option("--env", f.env, "training environment");
  cmd->add_option("--epochs", f.epochs, "training epochs");
  if (allow_run_id) cmd->add_option("--run", f.run_id, "existing run id under the output root");
}

th::RunSpec spec_from(const Globals& g, const SpecFlags& f) {
  const th::ExperimentConfig c = load(g);
  auto agent = c.agent;
  if (!f.arch.empty()) agent.architecture = tempref::agents::parse_architecture(f.arch);
  if (f.loss) agent.use_temporal_loss = *f.loss;
  const auto env = f.env.empty() ? c.train_env : tempref::envgen::parse_environment(f.env);
  return th::make_run_spec(c.game, agent, env, f.epochs.value_or(c.epochs), seed_of(g, c));
}

th::RunRecord record_from(const Globals& g, const SpecFlags& f) {
  const fs::path root = out_root(g);
  if (!f.run_id.empty()) {
    const auto paths = th::run_paths(root, f.run_id);
    if (!fs::exists(paths.record())) throw tempref::Error("no run " + f.run_id + " under " + root.string());
    return th::read_record(paths.record());
  }
  return th::open_record(spec_from(g, f), root);
}

void print_record(const th::RunRecord& r) {
  std::cout << r.spec.run_id << '\t' << th::to_string(r.status) << '\t' << r.paths.dir.string();
  if (!r.failure.empty()) std::cout << '\t' << r.failure;
  std::cout << '\n';
}

void print_analysis(const th::RunRecord& r) {
  std::ifstream in(r.paths.analysis());
  const auto a = th::read_analysis(in);
  std::cout << "eval_env\taccuracy\tmessages\tmax_prev(1.." << r.spec.game.horizon
            << ")\temergence\n";
  for (const auto& e : a.envs) {
    std::cout << tempref::envgen::to_string(e.env) << '\t' << tempref::text::format_fixed(e.accuracy, 4)
              << '\t' << e.distinct_messages << '\t';
    for (std::size_t n = 0; n < e.max_previous.size(); ++n) {
      std::cout << (n ? "," : "") << tempref::text::format_fixed(e.max_previous[n], 2);
    }
    std::cout << '\t' << (e.emerged() ? "yes" : "no") << '\n';
  }
  std::cout << "emergence_decision\t" << (a.emerged() ? "yes" : "no") << '\n';
}

int report(const Globals& g, const std::string& dir_flag, bool stats_only) {
  const th::ExperimentConfig c = load(g);
  const fs::path root = out_root(g);
  const auto summaries = th::load_summaries(th::list_records(root));
  const auto agg = th::aggregate(summaries);
  if (stats_only) {
    const std::string text = th::stats_text(th::significance(agg), c.eval.alpha);
    fs::create_directories(root / "report");
    th::write_file_atomic(root / "report" / "stats.txt", text);
    std::cout << text;
    return 0;
  }
  const fs::path dir = dir_flag.empty() ? root / "report" : fs::path(dir_flag);
  const auto files = th::write_report(agg, {c.eval.report_step, c.eval.alpha}, dir);
  std::cout << th::table1_text(agg, c.eval.report_step) << '\n' << th::table2_text(agg);
  for (const auto& f : files) std::cerr << "wrote " << f.string() << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  th::tune_allocator();
  CLI::App app{"Temporal referential game experiments"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--config", g.config_path, "experiment config file")->check(CLI::ExistingFile);
  app.add_option("--profile", g.profile, "defaults below the config file: desk or full")
      ->check(CLI::IsMember({"desk", "full"}));
  app.add_option("--seed", g.seed, "run / dataset seed");
  app.add_option("--out", g.out, "output root (default $TEMPREF_OUT or ./tempref_out)");
  app.add_option("--jobs", g.jobs, "concurrent runs for sweep")->check(CLI::PositiveNumber);

  auto* gen = app.add_subcommand("gen", "export a dataset");
  std::string gen_env = "trg";
  std::optional<int> gen_size;
  gen->add_option("--env", gen_env, "environment")->capture_default_str();
  gen->add_option("--size", gen_size, "episodes (default: game dataset_size)");

  SpecFlags train_f, eval_f, metrics_f;
  auto* train = app.add_subcommand("train", "train one run");
  add_spec_flags(train, train_f, false);
  auto* eval = app.add_subcommand("eval", "evaluate a trained run on all six environments");
  add_spec_flags(eval, eval_f, true);
  auto* metrics = app.add_subcommand("metrics", "analyse the evaluation logs of a run");
  add_spec_flags(metrics, metrics_f, true);
  auto* stats = app.add_subcommand("stats", "rank tests over all analysed runs");
  std::string report_dir;
  auto* rep = app.add_subcommand("report", "tables and plots over all analysed runs");
  rep->add_option("--dir", report_dir, "report directory (default <out>/report)");
  auto* sweep = app.add_subcommand("sweep", "run the configured grid, then report");
  auto* show = app.add_subcommand("config", "print the effective configuration");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*show) {
      std::cout << th::format_config(load(g));
      return 0;
    }
    if (*gen) {
      const auto c = load(g);
      auto game = c.game;
      game.seed = seed_of(g, c);
      if (gen_size) game.dataset_size = *gen_size;
      const auto kind = tempref::envgen::parse_environment(gen_env);
      tempref::envgen::Dataset d{kind, game, tempref::envgen::build_dataset(kind, game)};
      const fs::path dir = out_root(g) / "datasets";
      fs::create_directories(dir);
      const fs::path file =
          dir / (std::string(tempref::envgen::to_string(kind)) + "_seed" + std::to_string(game.seed) + ".tsv");
      std::ostringstream o;
      tempref::envgen::write_dataset(o, d);
      th::write_file_atomic(file, o.str());
      std::cout << file.string() << '\n';
      return 0;
    }
    if (*train) {
      auto r = th::open_record(spec_from(g, train_f), out_root(g));
      if (r.status == th::RunStatus::kPending) r = th::train_stage(std::move(r));
      print_record(r);
      return r.status == th::RunStatus::kFailed ? 2 : 0;
    }
    if (*eval) {
      const auto c = load(g);
      auto r = record_from(g, eval_f);
      if (r.status == th::RunStatus::kPending) throw tempref::Error("run " + r.spec.run_id + " is not trained");
      if (r.status == th::RunStatus::kFailed) throw tempref::Error("run " + r.spec.run_id + " failed: " + r.failure);
      if (r.status != th::RunStatus::kTrained && r.eval_settings != th::eval_settings_text(c.eval)) {
        r.status = th::RunStatus::kTrained;
      }
      if (r.status == th::RunStatus::kTrained) r = th::eval_stage(std::move(r), c.eval);
      print_record(r);
      return 0;
    }
    if (*metrics) {
      const auto c = load(g);
      auto r = record_from(g, metrics_f);
      if (r.status == th::RunStatus::kEvaluated) r = th::analyze_stage(std::move(r), c.eval);
      if (r.status != th::RunStatus::kAnalyzed) {
        throw tempref::Error("run " + r.spec.run_id + " is " + std::string(th::to_string(r.status)) +
                             "; evaluate it first");
      }
      print_record(r);
      print_analysis(r);
      return 0;
    }
    if (*stats) return report(g, "", true);
    if (*rep) return report(g, report_dir, false);
    if (*sweep) {
      auto c = load(g);
      if (g.seed) c.sweep.seeds = {*g.seed};
      const auto specs = th::expand_grid(c);
      const fs::path root = out_root(g);
      const auto records = th::sweep(specs, c.eval, root, g.jobs,
                                     [](const th::RunRecord& r, std::size_t done, std::size_t total) {
                                       std::cerr << "[" << done << "/" << total << "] ";
                                       print_record(r);
                                     });
      std::size_t failed = 0;
      for (const auto& r : records) failed += r.status == th::RunStatus::kFailed;
      const int rc = report(g, "", false);
      if (failed) std::cerr << failed << " run(s) failed\n";
      return rc;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
