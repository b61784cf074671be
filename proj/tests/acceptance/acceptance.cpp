// Acceptance checks 1-10. Prints one PASS/FAIL line per criterion and exits
// non-zero when any selected criterion fails.

#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "../unit/gradcheck.hpp"
#include "../unit/stats_oracle.hpp"
#include "tempref/agents/agents.hpp"
#include "tempref/envgen/envgen.hpp"
#include "tempref/harness/config.hpp"
#include "tempref/harness/pipeline.hpp"
#include "tempref/harness/report.hpp"
#include "tempref/harness/run.hpp"
#include "tempref/metrics/temporality.hpp"
#include "tempref/stats/tests.hpp"
#include "tempref/text.hpp"

namespace fs = std::filesystem;
namespace nc = tempref::numcore;
namespace eg = tempref::envgen;
namespace ag = tempref::agents;
namespace mt = tempref::metrics;
namespace st = tempref::stats;
namespace hs = tempref::harness;
using eg::EnvironmentKind;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Context {
  fs::path out;
  int jobs = 1;
  bool verbose = false;
};

std::string fixed(double v, int digits = 3) { return tempref::text::format_fixed(v, digits); }

mt::ExchangeHistory history_of(const std::vector<eg::ObjectVector>& objects,
                               const std::vector<std::vector<int>>& messages, int horizon) {
  mt::ExchangeHistory h;
  std::vector<eg::ObjectVector> stream;
  for (std::size_t i = 0; i < objects.size(); ++i) {
    stream.push_back(objects[i]);
    mt::ExchangeRecord r;
    r.t = static_cast<int>(i);
    r.target = objects[i];
    r.message = messages[i];
    r.temporal_label = eg::temporal_label(stream, i, horizon);
    h.push_back(r);
  }
  return h;
}

// 1 -------------------------------------------------------------------------

Outcome worked_examples(const Context&) {
  const std::vector<eg::ObjectVector> objs{{{0}}, {{1}}, {{2}}, {{1}}, {{1}}, {{1}}, {{0}}};
  struct Case {
    std::vector<std::vector<int>> messages;
    std::vector<int> message;
    long count, total;
  };
  const std::vector<Case> cases{{{{1}, {2}, {3}, {2}, {4}, {4}, {1}}, {4}, 2, 2},
                                {{{1}, {2}, {3}, {4}, {4}, {4}, {1}}, {4}, 2, 3},
                                {{{1}, {2}, {3}, {2}, {2}, {2}, {1}}, {2}, 2, 4}};
  Outcome o{true, ""};
  for (const auto& c : cases) {
    const auto m = mt::m_previous(history_of(objs, c.messages, 8), c.message, 1);
    o.pass &= m.count * c.total == c.count * m.total;
    o.detail += std::to_string(m.count) + "/" + std::to_string(m.total) + " ";
  }
  o.detail += "(100%, 66.67%, 50%)";
  return o;
}

// 2 -------------------------------------------------------------------------

Outcome temporal_labels(const Context&) {
  const eg::ObjectVector x{{1, 2}}, y{{0, 0}}, z{{3, 3}}, w{{2, 1}};
  const std::vector<eg::ObjectVector> h{x, y, z, w, y, x};  // x again 5 episodes later
  const int at8 = eg::temporal_label(h, 5, 8);
  const int at4 = eg::temporal_label(h, 5, 4);
  return {at8 == 5 && at4 == 0, "h=8 -> " + std::to_string(at8) + ", h=4 -> " + std::to_string(at4)};
}

// 3 -------------------------------------------------------------------------

Outcome dataset_statistics(const Context&) {
  eg::GameConfig g = hs::full_profile().game;
  g.dataset_size = 20000;
  g.seed = 2024;
  Outcome o{true, ""};
  for (double p : {0.25, 0.5, 0.75}) {
    g.repetition_chance = p;
    const double f = eg::repeat_fraction(eg::build_dataset(EnvironmentKind::kTrg, g));
    o.pass &= std::abs(f - p) <= 0.02;
    o.detail += "trg p=" + fixed(p, 2) + ": " + fixed(f, 4) + "; ";
  }
  const double rg = eg::repeat_fraction(eg::build_dataset(EnvironmentKind::kRg, g));
  o.pass &= rg < 0.01;
  o.detail += "rg: " + fixed(rg, 4);
  return o;
}

// 4 -------------------------------------------------------------------------

Outcome sanity_zeros(const Context&) {
  // Full attribute space, so chance repeats of fresh targets stay negligible.
  eg::GameConfig g = hs::full_profile().game;
  g.dataset_size = 1280;
  g.seed = 4;
  Outcome o{true, ""};
  for (auto arch : ag::kAllArchitectures) {
    ag::AgentConfig a;
    a.architecture = arch;
    a.embed_size = 32;
    a.hidden_size = 32;
    nc::Rng rng(40);
    const auto trained = ag::train_run(EnvironmentKind::kRg, g, a, 2, rng);
    const ag::AgentPair pair(a, g, trained.params.clone());
    double worst = 0;
    for (auto env : {EnvironmentKind::kNeverSame, EnvironmentKind::kRg, EnvironmentKind::kRgHard}) {
      eg::GameConfig eval = g;
      eval.dataset_size = 20000;
      eval.seed = 41;
      const auto report = mt::temporality_report(ag::evaluate_run(pair, env, eval), g.horizon);
      for (int n = 1; n <= g.horizon; ++n) worst = std::max(worst, report.max_previous(n, 1));
    }
    o.pass &= worst == 0.0;
    o.detail += std::string(ag::to_string(arch)) + " max " + fixed(worst, 2) + "; ";
  }
  return o;
}

// 5 -------------------------------------------------------------------------

Outcome oracle_speakers(const Context&) {
  eg::GameConfig g = hs::desk_profile().game;
  g.dataset_size = 20000;
  g.seed = 5;
  constexpr int kReserved = 100;  // outside the vocabulary
  Outcome o{true, ""};
  for (double p : {0.25, 0.5, 0.75}) {
    g.repetition_chance = p;
    const auto eps = eg::build_dataset(EnvironmentKind::kTrg, g);
    std::vector<eg::ObjectVector> objs;
    std::vector<std::vector<int>> per_lag, shared, descriptive;
    for (const auto& e : eps) {
      objs.push_back(e.target);
      const bool repeat = e.temporal_label > 0;
      per_lag.push_back(repeat ? std::vector<int>{kReserved + e.temporal_label} : e.target.values);
      shared.push_back(repeat ? std::vector<int>{kReserved} : e.target.values);
      descriptive.push_back(e.target.values);
    }
    // one reserved token per lag: M at that lag is 100%
    const auto s = mt::temporality_report(history_of(objs, per_lag, g.horizon), g.horizon);
    bool all_full = true;
    for (int n = 1; n <= g.horizon; ++n) {
      const auto* token = s.find({kReserved + n});
      all_full &= token == nullptr || token->at(n).is_full();
    }
    // a single token for every within-horizon repeat
    const auto u = mt::temporality_report(history_of(objs, shared, g.horizon), g.horizon);
    const bool within_full = u.find({kReserved})->within().is_full();
    const auto d = mt::temporality_report(history_of(objs, descriptive, g.horizon), g.horizon);
    const double mean = d.mean_within_horizon();
    const bool ok = all_full && within_full && mt::emergence_decision(s) &&
                    !mt::emergence_decision(d) && std::abs(mean - 100 * p) <= 5.0;
    o.pass &= ok;
    o.detail += "p=" + fixed(p, 2) + ": scripted " + (all_full && within_full ? "100%" : "<100%") +
                (mt::emergence_decision(s) ? " emerges" : " no emergence") + ", descriptive mean " +
                fixed(mean, 1) + (mt::emergence_decision(d) ? " emerges" : "") + "; ";
  }
  return o;
}

// 6 -------------------------------------------------------------------------

Outcome numerics(const Context&) {
  using gradcheck::max_error;
  using gradcheck::random_array;
  using nc::Var;
  double op_worst = 0, e2e_worst = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    nc::Rng r(seed * 7919 + 1);
    auto leaf = [&](std::size_t m, std::size_t n, double lo = -1, double hi = 1) {
      return nc::leaf(random_array(m, n, r, lo, hi));
    };
    const Var a = leaf(3, 4), b = leaf(4, 2), c = leaf(3, 4), row = leaf(1, 4), pos = leaf(3, 4, 0.2, 3);
    std::vector<double> errs;
    errs.push_back(max_error([](auto& v) { return nc::matmul(v[0], v[1]); }, {a, b}, seed));
    for (auto op : {nc::Elementwise::kAdd, nc::Elementwise::kSub, nc::Elementwise::kMul}) {
      errs.push_back(max_error([op](auto& v) { return nc::elementwise(op, v[0], v[1]); }, {a, c}, seed));
      errs.push_back(max_error([op](auto& v) { return nc::elementwise(op, v[0], v[1]); }, {a, row}, seed));
    }
    for (auto op : {nc::Elementwise::kSigmoid, nc::Elementwise::kTanh, nc::Elementwise::kExp,
                    nc::Elementwise::kSoftmax}) {
      errs.push_back(max_error([op](auto& v) { return nc::elementwise(op, v[0]); }, {a}, seed));
    }
    errs.push_back(max_error([](auto& v) { return nc::log(v[0]); }, {pos}, seed));
    errs.push_back(max_error([](auto& v) { return nc::scale(v[0], 1.7); }, {a}, seed));
    errs.push_back(max_error([](auto& v) { return nc::mean(v[0]); }, {a}, seed));
    errs.push_back(max_error([](auto& v) { return nc::rows(v[0], 1, 2); }, {a}, seed));
    errs.push_back(max_error([](auto& v) { return nc::concat_cols(std::vector<Var>{v[0], v[1]}); }, {a, c}, seed));
    errs.push_back(max_error([](auto& v) { return nc::concat_rows(std::vector<Var>{v[0], v[1]}); }, {a, c}, seed));
    const Var q = leaf(2, 4), keys = leaf(6, 4), w = leaf(2, 3);
    errs.push_back(max_error([](auto& v) { return nc::grouped_dot(v[0], v[1], 3); }, {q, keys}, seed));
    errs.push_back(max_error([](auto& v) { return nc::grouped_mix(v[0], v[1]); }, {w, keys}, seed));
    const Var wi = leaf(3, 8), wr = leaf(2, 8), wb = leaf(1, 8), x = leaf(5, 3), h0 = leaf(1, 2), c0 = leaf(1, 2);
    const Var hb = leaf(5, 2), cb = leaf(5, 2);
    errs.push_back(max_error([](auto& v) { return nc::lstm_cell(v[3], v[4], v[5], {v[0], v[1], v[2]}).h; },
                             {wi, wr, wb, x, hb, cb}, seed));
    errs.push_back(max_error([](auto& v) { return nc::lstm_cell(v[3], v[4], v[5], {v[0], v[1], v[2]}).c; },
                             {wi, wr, wb, x, hb, cb}, seed));
    errs.push_back(max_error([](auto& v) { return nc::lstm_scan(v[3], {v[0], v[1], v[2]}, {v[4], v[5]}); },
                             {wi, wr, wb, x, h0, c0}, seed));
    const nc::Array noise = nc::gumbel_noise(3, 4, r);
    errs.push_back(max_error([&noise](auto& v) { return nc::gumbel_softmax(v[0], noise, 1.0); }, {c}, seed));
    std::vector<std::size_t> labels{1, 3, 0};
    errs.push_back(max_error([&labels](auto& v) { return nc::cross_entropy(v[0], labels); }, {a}, seed));
    for (double e : errs) op_worst = std::max(op_worst, e);

    // end-to-end: the game loss for each architecture, 20 sampled parameters
    eg::GameConfig g = hs::desk_profile().game;
    g.dataset_size = 12;
    g.seed = seed;
    const auto eps = eg::build_dataset(EnvironmentKind::kTrg, g);
    for (auto arch : ag::kAllArchitectures) {
      ag::AgentConfig cfg;
      cfg.architecture = arch;
      cfg.use_temporal_loss = true;
      cfg.embed_size = 6;
      cfg.hidden_size = 5;
      nc::Rng init(seed);
      ag::AgentPair pair(cfg, g, init);
      const nc::Rng noise_start(seed + 100);
      auto loss = [&]() {
        nc::Rng n = noise_start;
        return ag::game_loss(pair.receiver_forward(pair.sender_forward(eps, ag::Decoding::kGumbel, &n), eps),
                             eps, true);
      };
      pair.params().zero_grad();
      nc::backward(loss());
      std::vector<Var> all;
      for (const auto& [_, v] : pair.params().entries()) all.push_back(v);
      nc::Rng pick(seed + 200);
      for (int i = 0; i < 20; ++i) {
        const Var& v = all[pick.uniform_int(all.size())];
        const std::size_t k = pick.uniform_int(v->value.size());
        const double saved = v->value[k];
        v->value[k] = saved + 1e-5;
        const double up = loss()->value[0];
        v->value[k] = saved - 1e-5;
        const double down = loss()->value[0];
        v->value[k] = saved;
        e2e_worst = std::max(e2e_worst, gradcheck::relative_error(v->grad[k], (up - down) / 2e-5));
      }
    }
  }
  return {op_worst < 1e-4 && e2e_worst < 1e-3,
          "op-level max rel err " + tempref::text::format_double(op_worst) + ", end-to-end " +
              tempref::text::format_double(e2e_worst) + " over 10 seeds"};
}

// 7 -------------------------------------------------------------------------

st::SampleGroups as_groups(const std::vector<std::vector<double>>& v) {
  st::SampleGroups g;
  for (std::size_t i = 0; i < v.size(); ++i) g.push_back({std::to_string(i), v[i]});
  return g;
}

Outcome statistics(const Context&) {
  nc::Rng rng(77);
  int fixtures = 0, mismatches = 0;
  while (fixtures < 100) {
    const std::size_t k = 2 + rng.uniform_int(3);
    std::vector<std::vector<double>> values(k);
    std::set<double> distinct;
    for (auto& g : values) {
      const std::size_t n = 2 + rng.uniform_int(5);
      for (std::size_t i = 0; i < n; ++i) {
        g.push_back(static_cast<double>(rng.uniform_int(6)));
        distinct.insert(g.back());
      }
    }
    if (distinct.size() < 2) continue;
    ++fixtures;
    const auto want = oracle::rank_tests(values);
    const auto kw = st::kruskal_wallis(as_groups(values));
    const auto ci = st::conover_iman(as_groups(values));
    auto close = [](double a, double b) { return std::abs(a - b) <= 1e-9 * std::max(1.0, std::abs(b)); };
    bool ok = close(kw.statistic, want.h);
    std::size_t idx = 0;
    for (std::size_t i = 0; i < k; ++i) {
      for (std::size_t j = i + 1; j < k; ++j, ++idx) {
        ok &= close(ci.p_raw[i][j], want.raw[idx]) && close(ci.p_adjusted[i][j], want.adjusted[idx]);
      }
    }
    std::vector<double> ps(want.raw);
    const auto holm = st::holm_bonferroni(ps);
    for (std::size_t i = 0; i < ps.size(); ++i) ok &= close(holm[i], want.adjusted[i]);
    mismatches += !ok;
  }

  // null calibration: three groups of ten draws from one distribution
  int kw_rejections = 0, pairwise_rejections = 0;
  constexpr int kTrials = 1000;
  for (int t = 0; t < kTrials; ++t) {
    std::vector<std::vector<double>> values(3);
    for (auto& g : values)
      for (int i = 0; i < 10; ++i) g.push_back(rng.normal());
    kw_rejections += st::kruskal_wallis(as_groups(values)).p_value < 0.05;
    const auto ci = st::conover_iman(as_groups(values));
    bool any = false;
    for (std::size_t i = 0; i < 3; ++i)
      for (std::size_t j = i + 1; j < 3; ++j) any |= ci.p_adjusted[i][j] < 0.05;
    pairwise_rejections += any;
  }
  const double kw_rate = static_cast<double>(kw_rejections) / kTrials;
  const double pair_rate = static_cast<double>(pairwise_rejections) / kTrials;
  return {mismatches == 0 && kw_rate >= 0.03 && kw_rate <= 0.07,
          std::to_string(fixtures - mismatches) + "/" + std::to_string(fixtures) +
              " fixtures match; null rejection rate at alpha 0.05: kruskal-wallis " + fixed(kw_rate) +
              " (conover-iman+holm family-wise " + fixed(pair_rate) + ")"};
}

// 8, 9 ----------------------------------------------------------------------

std::vector<hs::RunRecord> run_grid(const Context& ctx, const hs::ExperimentConfig& config,
                                    const fs::path& root) {
  const auto specs = hs::expand_grid(config);
  return hs::sweep(specs, config.eval, root, ctx.jobs,
                   [&](const hs::RunRecord& r, std::size_t done, std::size_t total) {
                     if (ctx.verbose) {
                       std::cerr << "  [" << done << "/" << total << "] " << r.spec.run_id << " "
                                 << ag::to_string(r.spec.agent.architecture)
                                 << (r.spec.agent.use_temporal_loss ? "+L" : "") << " seed "
                                 << r.spec.seed << " " << hs::to_string(r.status) << "\n";
                     }
                   });
}

Outcome emergence_at_desk_scale(const Context& ctx) {
  const hs::ExperimentConfig config = hs::desk_profile();
  const fs::path root = ctx.out / "desk_trg";
  const auto records = run_grid(ctx, config, root);
  const auto summaries = hs::load_summaries(records);
  const auto agg = hs::aggregate(summaries);
  hs::write_report(agg, {config.eval.report_step, config.eval.alpha}, root / "report");

  Outcome o{summaries.size() == records.size(), ""};
  for (const auto& group : agg.groups) {
    const std::size_t runs = group.run_ids.size();
    const bool base = group.key.architecture == ag::Architecture::kBase;
    const bool ok = runs == 5 && (base ? group.emerged_runs == 0 : group.emerged_runs >= 3);
    o.pass &= ok;
    o.detail += std::string(ag::to_string(group.key.architecture)) +
                (group.key.temporal_loss ? "+L" : "") + " " + std::to_string(group.emerged_runs) +
                "/" + std::to_string(runs) + "; ";
  }
  if (agg.groups.size() != 6) o.pass = false;
  return o;
}

Outcome accuracy_ordering(const Context& ctx) {
  hs::ExperimentConfig config = hs::desk_profile();
  config.sweep.train_envs = {EnvironmentKind::kRg};
  config.sweep.temporal_loss = {false};
  const fs::path root = ctx.out / "desk_rg";
  const auto records = run_grid(ctx, config, root);
  const auto summaries = hs::load_summaries(records);
  Outcome o{summaries.size() == records.size() && summaries.size() == 15, ""};
  std::map<ag::Architecture, std::vector<std::pair<double, double>>> per_arch;
  for (const auto& s : summaries) {
    const double rg = s.analysis.at(EnvironmentKind::kRg).accuracy;
    const double hard = s.analysis.at(EnvironmentKind::kRgHard).accuracy;
    o.pass &= rg > 0.8 && hard < rg;
    per_arch[s.record.spec.agent.architecture].emplace_back(rg, hard);
  }
  for (const auto& [arch, values] : per_arch) {
    double lo = 1, hi = 0, worst_gap = 1;
    for (auto [rg, hard] : values) {
      lo = std::min(lo, rg);
      hi = std::max(hi, rg);
      worst_gap = std::min(worst_gap, rg - hard);
    }
    o.detail += std::string(ag::to_string(arch)) + " rg " + fixed(lo) + ".." + fixed(hi) +
                ", min rg-rg_hard " + fixed(worst_gap) + "; ";
  }
  return o;
}

// 10 ------------------------------------------------------------------------

std::map<std::string, std::string> tree(const fs::path& root) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (!e.is_regular_file()) continue;
    const auto rel = fs::relative(e.path(), root).generic_string();
    if (rel.ends_with("run.txt")) continue;  // wall-clock timestamps
    files[rel] = hs::read_file(e.path());
  }
  return files;
}

Outcome determinism(const Context& ctx) {
  hs::ExperimentConfig config = hs::desk_profile();
  config.epochs = 40;
  config.agent.architecture = ag::Architecture::kTemporalR;
  config.agent.use_temporal_loss = true;
  const auto spec = hs::make_run_spec(config.game, config.agent, config.train_env, config.epochs, 11);
  std::vector<std::map<std::string, std::string>> trees;
  for (const char* name : {"determinism_a", "determinism_b"}) {
    const fs::path root = ctx.out / name;
    fs::remove_all(root);
    const auto record = hs::execute_run(spec, config.eval, root);
    if (record.status != hs::RunStatus::kAnalyzed) return {false, "run ended " + std::string(hs::to_string(record.status))};
    hs::write_report(hs::aggregate(hs::load_summaries({record})), {}, root / "report");
    trees.push_back(tree(root));
  }
  std::size_t differing = 0;
  for (const auto& [path, content] : trees[0]) {
    const auto it = trees[1].find(path);
    differing += it == trees[1].end() || it->second != content;
  }
  differing += trees[1].size() - std::min(trees[1].size(), trees[0].size());
  const bool has_ckpt = trees[0].contains("runs/" + spec.run_id + "/params.bin");
  return {differing == 0 && has_ckpt && trees[0].size() == trees[1].size(),
          std::to_string(trees[0].size()) + " files compared (checkpoint, logs, analysis, report), " +
              std::to_string(differing) + " differ"};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance criteria"};
  Context ctx;
  std::string out = "acceptance_out";
  std::vector<int> only;
  bool resume = false;
  app.add_option("--out", out, "work directory");
  app.add_option("--only", only, "criteria to run (default: all)")->delimiter(',');
  app.add_option("--jobs", ctx.jobs, "concurrent training runs")->check(CLI::PositiveNumber);
  app.add_flag("--resume", resume, "keep finished runs from an earlier invocation");
  app.add_flag("-v,--verbose", ctx.verbose, "per-run progress on stderr");
  CLI11_PARSE(app, argc, argv);

  ctx.out = out;
  if (!resume) fs::remove_all(ctx.out);
  fs::create_directories(ctx.out);
  hs::tune_allocator();

  const std::vector<std::pair<std::string, std::function<Outcome(const Context&)>>> criteria{
      {"metric ground truth", worked_examples},
      {"temporal-label ground truth", temporal_labels},
      {"dataset statistics", dataset_statistics},
      {"sanity zeros", sanity_zeros},
      {"oracle speakers", oracle_speakers},
      {"numerics", numerics},
      {"statistics", statistics},
      {"emergence at desk scale", emergence_at_desk_scale},
      {"accuracy ordering", accuracy_ordering},
      {"determinism", determinism},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!only.empty() && std::find(only.begin(), only.end(), id) == only.end()) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second(ctx);
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    failed += !o.pass;
    std::cout << "criterion " << id << " " << (o.pass ? "PASS" : "FAIL") << "  " << criteria[i].first
              << "  [" << fixed(secs, 1) << "s]  " << o.detail << std::endl;
  }
  return failed == 0 ? 0 : 1;
}
