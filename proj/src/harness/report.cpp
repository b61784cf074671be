#include "tempref/harness/report.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include "tempref/text.hpp"

namespace tempref::harness {

namespace {

std::string pct(double v) { return text::format_fixed(v, 2); }

double mean_of(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double sd_of(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

double quantile(std::vector<double> v, double q) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

std::string arch_label(Architecture a, bool loss) {
  return std::string(agents::to_string(a)) + (loss ? "+L" : "");
}

std::string fmt_p(double p) { return text::format_fixed(p, 6); }

// Minimal SVG canvas.
class Svg {
 public:
  Svg(int w, int h) : w_(w), h_(h) {}
  void rect(double x, double y, double w, double h, const std::string& fill) {
    body_ << "<rect x=\"" << f(x) << "\" y=\"" << f(y) << "\" width=\"" << f(w) << "\" height=\""
          << f(h) << "\" fill=\"" << fill << "\"/>\n";
  }
  void line(double x1, double y1, double x2, double y2, const std::string& stroke) {
    body_ << "<line x1=\"" << f(x1) << "\" y1=\"" << f(y1) << "\" x2=\"" << f(x2) << "\" y2=\""
          << f(y2) << "\" stroke=\"" << stroke << "\"/>\n";
  }
  void text_at(double x, double y, const std::string& s, const char* anchor = "middle",
               int size = 11) {
    body_ << "<text x=\"" << f(x) << "\" y=\"" << f(y) << "\" font-size=\"" << size
          << "\" font-family=\"sans-serif\" text-anchor=\"" << anchor << "\">" << escape(s)
          << "</text>\n";
  }
  std::string str() const {
    std::ostringstream o;
    o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w_ << "\" height=\"" << h_
      << "\" viewBox=\"0 0 " << w_ << ' ' << h_ << "\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      << body_.str() << "</svg>\n";
    return o.str();
  }

 private:
  static std::string f(double v) { return text::format_fixed(v, 1); }
  static std::string escape(const std::string& s) {
    std::string out;
    for (char c : s) {
      if (c == '<') out += "&lt;";
      else if (c == '>') out += "&gt;";
      else if (c == '&') out += "&amp;";
      else out += c;
    }
    return out;
  }
  int w_, h_;
  std::ostringstream body_;
};

const char* kPalette[] = {"#4e79a7", "#f28e2b", "#e15759", "#76b7b2", "#59a14f",
                          "#edc948", "#b07aa1", "#ff9da7", "#9c755f", "#bab0ac"};

std::string emergence_svg(const Aggregate& agg) {
  const int h = agg.horizon;
  const std::size_t g = agg.groups.size();
  const double left = 60, top = 30, plot_w = std::max(400.0, 60.0 * h), plot_h = 220;
  Svg svg(static_cast<int>(left + plot_w + 220), static_cast<int>(top + plot_h + 60));
  svg.text_at(left + plot_w / 2, 18, "Runs with a message at 100% for step n (%)");
  svg.line(left, top + plot_h, left + plot_w, top + plot_h, "black");
  svg.line(left, top, left, top + plot_h, "black");
  for (int tick = 0; tick <= 100; tick += 25) {
    const double y = top + plot_h * (1.0 - tick / 100.0);
    svg.line(left - 4, y, left, y, "black");
    svg.text_at(left - 6, y + 4, std::to_string(tick), "end", 10);
  }
  const double slot = plot_w / h;
  const double bar = g ? slot * 0.8 / static_cast<double>(g) : 0.0;
  for (int n = 1; n <= h; ++n) {
    const double x0 = left + slot * (n - 1) + slot * 0.1;
    for (std::size_t i = 0; i < g; ++i) {
      const auto& grp = agg.groups[i];
      const double v = grp.run_ids.empty()
                           ? 0.0
                           : 100.0 * grp.emerged_by_step[n - 1] / static_cast<double>(grp.run_ids.size());
      const double bh = plot_h * v / 100.0;
      svg.rect(x0 + bar * i, top + plot_h - bh, bar, bh, kPalette[i % 10]);
    }
    svg.text_at(left + slot * (n - 0.5), top + plot_h + 16, std::to_string(n));
  }
  svg.text_at(left + plot_w / 2, top + plot_h + 36, "n");
  for (std::size_t i = 0; i < g; ++i) {
    const double y = top + 14.0 * i;
    svg.rect(left + plot_w + 20, y, 10, 10, kPalette[i % 10]);
    svg.text_at(left + plot_w + 36, y + 9, group_label(agg.groups[i].key, agg.several_chances), "start", 10);
  }
  return svg.str();
}

std::string accuracy_svg(const Aggregate& agg) {
  const std::size_t g = agg.groups.size();
  const std::size_t envs = std::size(envgen::kAllEnvironments);
  const double left = 60, top = 30, slot = std::max(80.0, 24.0 * g), plot_h = 240;
  const double plot_w = slot * envs;
  Svg svg(static_cast<int>(left + plot_w + 220), static_cast<int>(top + plot_h + 60));
  svg.text_at(left + plot_w / 2, 18, "Evaluation accuracy per environment");
  svg.line(left, top + plot_h, left + plot_w, top + plot_h, "black");
  svg.line(left, top, left, top + plot_h, "black");
  auto ypos = [&](double acc) { return top + plot_h * (1.0 - acc); };
  for (int tick = 0; tick <= 4; ++tick) {
    const double v = tick / 4.0;
    svg.line(left - 4, ypos(v), left, ypos(v), "black");
    svg.text_at(left - 6, ypos(v) + 4, text::format_fixed(v, 2), "end", 10);
  }
  const double box = slot * 0.8 / std::max<std::size_t>(g, 1);
  for (std::size_t e = 0; e < envs; ++e) {
    const auto env = envgen::kAllEnvironments[e];
    const double x0 = left + slot * e + slot * 0.1;
    for (std::size_t i = 0; i < g; ++i) {
      const auto it = agg.groups[i].envs.find(env);
      if (it == agg.groups[i].envs.end() || it->second.accuracy.empty()) continue;
      const auto& acc = it->second.accuracy;
      const double lo = quantile(acc, 0.0), q1 = quantile(acc, 0.25), med = quantile(acc, 0.5),
                   q3 = quantile(acc, 0.75), hi = quantile(acc, 1.0);
      const double x = x0 + box * i, cx = x + box / 2;
      svg.line(cx, ypos(hi), cx, ypos(lo), "black");
      svg.rect(x + box * 0.1, ypos(q3), box * 0.8, std::max(1.0, ypos(q1) - ypos(q3)), kPalette[i % 10]);
      svg.line(x + box * 0.1, ypos(med), x + box * 0.9, ypos(med), "black");
    }
    svg.text_at(left + slot * (e + 0.5), top + plot_h + 16, std::string(envgen::to_string(env)), "middle", 10);
  }
  for (std::size_t i = 0; i < g; ++i) {
    const double y = top + 14.0 * i;
    svg.rect(left + plot_w + 20, y, 10, 10, kPalette[i % 10]);
    svg.text_at(left + plot_w + 36, y + 9, group_label(agg.groups[i].key, agg.several_chances), "start", 10);
  }
  return svg.str();
}

}  // namespace

std::vector<RunSummary> load_summaries(const std::vector<RunRecord>& records) {
  std::vector<RunSummary> out;
  for (const auto& r : records) {
    if (r.status != RunStatus::kAnalyzed) continue;
    std::ifstream in(r.paths.analysis());
    if (!in) throw Error("missing analysis for run " + r.spec.run_id);
    out.push_back({r, read_analysis(in)});
  }
  return out;
}

std::string group_label(const GroupKey& k, bool with_chance) {
  std::string s = arch_label(k.architecture, k.temporal_loss) + " " +
                  std::string(envgen::to_string(k.train_env));
  if (with_chance) s += " p=" + text::format_double(k.repetition_chance);
  return s;
}

double GroupAggregate::emergence_percent() const {
  return run_ids.empty() ? 0.0 : 100.0 * emerged_runs / static_cast<double>(run_ids.size());
}

Aggregate aggregate(const std::vector<RunSummary>& summaries) {
  if (summaries.empty()) throw Error("aggregate: no analysed runs");
  Aggregate agg;
  std::map<GroupKey, GroupAggregate> groups;
  std::set<double> chances;
  for (const auto& s : summaries) {
    const auto& spec = s.record.spec;
    if (agg.horizon == 0) agg.horizon = spec.game.horizon;
    if (spec.game.horizon != agg.horizon) throw Error("aggregate: runs disagree on the horizon");
    GroupKey key{spec.agent.architecture, spec.agent.use_temporal_loss, spec.train_env,
                 spec.game.repetition_chance};
    chances.insert(spec.game.repetition_chance);
    auto& g = groups[key];
    g.key = key;
    g.run_ids.push_back(spec.run_id);
    g.emerged_by_step.resize(agg.horizon, 0);
    if (s.analysis.emerged()) ++g.emerged_runs;
    for (int n = 1; n <= agg.horizon; ++n) {
      const bool any = std::any_of(s.analysis.envs.begin(), s.analysis.envs.end(),
                                   [&](const EnvAnalysis& e) { return e.emergence.at(n - 1); });
      g.emerged_by_step[n - 1] += any;
    }
    for (const auto& e : s.analysis.envs) {
      auto& ea = g.envs[e.env];
      ea.max_previous.resize(agg.horizon, 0.0);
      for (int n = 0; n < agg.horizon; ++n) {
        ea.max_previous[n] = std::max(ea.max_previous[n], e.max_previous.at(n));
      }
      ea.emerged_runs += e.emerged();
      ea.accuracy.push_back(e.accuracy);
      const auto& c = e.compositionality;
      ea.topsim.push_back(c.topsim.value);
      ea.posdis.push_back(c.posdis.value);
      ea.bosdis.push_back(c.bosdis.value);
      ea.degenerate_compositionality += c.topsim.degenerate || c.posdis.degenerate || c.bosdis.degenerate;
    }
  }
  agg.several_chances = chances.size() > 1;
  for (auto& [k, g] : groups) {
    std::sort(g.run_ids.begin(), g.run_ids.end());
    agg.groups.push_back(std::move(g));
  }
  return agg;
}

std::vector<StatsBlock> significance(const Aggregate& agg) {
  std::vector<StatsBlock> out;
  auto run_block = [&](StatsBlock b) {
    std::erase_if(b.groups, [](const stats::SampleGroup& g) { return g.values.empty(); });
    if (b.groups.size() < 2) {
      b.skipped = "fewer than two groups";
    } else {
      try {
        b.kruskal = stats::kruskal_wallis(b.groups);
        b.conover = stats::conover_iman(b.groups);
        b.ok = true;
      } catch (const Error& e) {
        b.skipped = e.what();
      }
    }
    out.push_back(std::move(b));
  };
  using Getter = const std::vector<double>& (*)(const EnvAggregate&);
  const std::pair<const char*, Getter> metrics[] = {
      {"accuracy", [](const EnvAggregate& e) -> const std::vector<double>& { return e.accuracy; }},
      {"topsim", [](const EnvAggregate& e) -> const std::vector<double>& { return e.topsim; }},
      {"posdis", [](const EnvAggregate& e) -> const std::vector<double>& { return e.posdis; }},
      {"bosdis", [](const EnvAggregate& e) -> const std::vector<double>& { return e.bosdis; }}};
  for (const auto& [metric, get] : metrics) {
    for (auto env : envgen::kAllEnvironments) {
      StatsBlock b;
      b.metric = metric;
      b.eval_env = envgen::to_string(env);
      b.comparison = "across architectures";
      std::map<Architecture, std::vector<double>> pooled;
      for (const auto& g : agg.groups) {
        if (auto it = g.envs.find(env); it != g.envs.end()) {
          const auto& v = get(it->second);
          auto& dst = pooled[g.key.architecture];
          dst.insert(dst.end(), v.begin(), v.end());
        }
      }
      for (auto& [arch, values] : pooled) b.groups.push_back({std::string(agents::to_string(arch)), values});
      run_block(std::move(b));
    }
  }
  std::set<Architecture> archs;
  for (const auto& g : agg.groups) archs.insert(g.key.architecture);
  for (auto arch : archs) {
    for (auto env : envgen::kAllEnvironments) {
      StatsBlock b;
      b.metric = "accuracy";
      b.eval_env = envgen::to_string(env);
      b.comparison = "within " + std::string(agents::to_string(arch));
      for (const auto& g : agg.groups) {
        if (g.key.architecture != arch) continue;
        if (auto it = g.envs.find(env); it != g.envs.end()) {
          b.groups.push_back({group_label(g.key, agg.several_chances), it->second.accuracy});
        }
      }
      run_block(std::move(b));
    }
  }
  return out;
}

std::string table1_text(const Aggregate& agg, int step) {
  if (step < 1 || step > agg.horizon) throw ConfigError("report step outside [1, horizon]");
  std::ostringstream o;
  o << "network\tloss\ttrain_env";
  if (agg.several_chances) o << "\trepetition_chance";
  for (auto env : envgen::kAllEnvironments) o << '\t' << envgen::to_string(env);
  o << '\n';
  for (const auto& g : agg.groups) {
    o << agents::to_string(g.key.architecture) << '\t' << (g.key.temporal_loss ? "reg+t" : "reg")
      << '\t' << envgen::to_string(g.key.train_env);
    if (agg.several_chances) o << '\t' << text::format_double(g.key.repetition_chance);
    for (auto env : envgen::kAllEnvironments) {
      auto it = g.envs.find(env);
      o << '\t' << (it == g.envs.end() ? std::string("-") : pct(it->second.max_previous.at(step - 1)));
    }
    o << '\n';
  }
  return o.str();
}

std::string table2_text(const Aggregate& agg) {
  std::map<std::pair<Architecture, bool>, std::pair<std::size_t, std::size_t>> counts;
  for (const auto& g : agg.groups) {
    auto& c = counts[{g.key.architecture, g.key.temporal_loss}];
    c.first += g.emerged_runs;
    c.second += g.run_ids.size();
  }
  std::ostringstream o;
  o << "network\tloss\truns\temerged\tpercentage\n";
  for (const auto& [k, c] : counts) {
    o << agents::to_string(k.first) << '\t' << (k.second ? "reg+t" : "reg") << '\t' << c.second << '\t'
      << c.first << '\t' << pct(c.second ? 100.0 * c.first / c.second : 0.0) << '\n';
  }
  return o.str();
}

std::string stats_text(const std::vector<StatsBlock>& blocks, double alpha) {
  std::ostringstream o;
  o << "# rank tests; alpha = " << text::format_double(alpha) << "\n";
  for (const auto& b : blocks) {
    o << "\n## " << b.metric << " | " << b.eval_env << " | " << b.comparison << "\n";
    if (!b.ok) {
      o << "skipped: " << b.skipped << "\n";
      continue;
    }
    o << "kruskal_wallis\tH=" << text::format_fixed(b.kruskal.statistic, 6)
      << "\tdf=" << text::format_double(b.kruskal.df) << "\tp=" << fmt_p(b.kruskal.p_value)
      << (b.kruskal.p_value < alpha ? "\tsignificant" : "\tnot significant") << "\n";
    o << "conover_iman_holm";
    for (const auto& n : b.conover.names) o << '\t' << n;
    o << '\n';
    for (std::size_t i = 0; i < b.conover.names.size(); ++i) {
      o << b.conover.names[i];
      for (std::size_t j = 0; j < b.conover.names.size(); ++j) o << '\t' << fmt_p(b.conover.p_adjusted[i][j]);
      o << '\n';
    }
  }
  return o.str();
}

std::vector<fs::path> write_report(const Aggregate& agg, const ReportOptions& options,
                                   const fs::path& dir) {
  fs::create_directories(dir);
  std::vector<fs::path> written;
  auto emit = [&](const char* name, const std::string& content) {
    write_file_atomic(dir / name, content);
    written.push_back(dir / name);
  };
  emit("table1.tsv", table1_text(agg, options.report_step));

  std::ostringstream t1;
  t1 << "group\teval_env";
  for (int n = 1; n <= agg.horizon; ++n) t1 << "\tmax_prev_" << n;
  t1 << "\temerged_runs\truns\n";
  for (const auto& g : agg.groups) {
    for (const auto& [env, e] : g.envs) {
      t1 << group_label(g.key, agg.several_chances) << '\t' << envgen::to_string(env);
      for (double v : e.max_previous) t1 << '\t' << pct(v);
      t1 << '\t' << e.emerged_runs << '\t' << g.run_ids.size() << '\n';
    }
  }
  emit("table1_by_step.tsv", t1.str());

  emit("table2.tsv", table2_text(agg));

  std::ostringstream t2;
  t2 << "group";
  for (int n = 1; n <= agg.horizon; ++n) t2 << "\tstep_" << n;
  t2 << "\tany\n";
  for (const auto& g : agg.groups) {
    const double runs = static_cast<double>(g.run_ids.size());
    t2 << group_label(g.key, agg.several_chances);
    for (auto c : g.emerged_by_step) t2 << '\t' << pct(100.0 * c / runs);
    t2 << '\t' << pct(g.emergence_percent()) << '\n';
  }
  emit("table2_by_step.tsv", t2.str());

  std::ostringstream acc;
  acc << "group\teval_env\truns\tmean\tsd\tmin\tmax\n";
  for (const auto& g : agg.groups) {
    for (const auto& [env, e] : g.envs) {
      const auto [mn, mx] = std::minmax_element(e.accuracy.begin(), e.accuracy.end());
      acc << group_label(g.key, agg.several_chances) << '\t' << envgen::to_string(env) << '\t'
          << e.accuracy.size() << '\t' << text::format_fixed(mean_of(e.accuracy), 4) << '\t'
          << text::format_fixed(sd_of(e.accuracy), 4) << '\t' << text::format_fixed(*mn, 4) << '\t'
          << text::format_fixed(*mx, 4) << '\n';
    }
  }
  emit("accuracy.tsv", acc.str());

  std::ostringstream comp;
  comp << "group\teval_env\tmetric\truns\tmean\tsd\tdegenerate_runs\n";
  for (const auto& g : agg.groups) {
    for (const auto& [env, e] : g.envs) {
      const std::pair<const char*, const std::vector<double>*> rows[] = {
          {"topsim", &e.topsim}, {"posdis", &e.posdis}, {"bosdis", &e.bosdis}};
      for (const auto& [name, v] : rows) {
        comp << group_label(g.key, agg.several_chances) << '\t' << envgen::to_string(env) << '\t'
             << name << '\t' << v->size() << '\t' << text::format_fixed(mean_of(*v), 4) << '\t'
             << text::format_fixed(sd_of(*v), 4) << '\t' << e.degenerate_compositionality << '\n';
      }
    }
  }
  emit("compositionality.tsv", comp.str());

  emit("stats.txt", stats_text(significance(agg), options.alpha));
  emit("m_previous.svg", emergence_svg(agg));
  emit("accuracy.svg", accuracy_svg(agg));
  return written;
}

}  // namespace tempref::harness
