#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "tempref/harness/pipeline.hpp"
#include "tempref/stats/tests.hpp"

namespace tempref::harness {

struct RunSummary {
  RunRecord record;
  RunAnalysis analysis;
};

/// Analysed records only; others are skipped.
std::vector<RunSummary> load_summaries(const std::vector<RunRecord>& records);

/// One training configuration: everything but the seed.
struct GroupKey {
  Architecture architecture = Architecture::kBase;
  bool temporal_loss = false;
  EnvironmentKind train_env = EnvironmentKind::kTrg;
  double repetition_chance = 0.5;

  friend auto operator<=>(const GroupKey&, const GroupKey&) = default;
  friend bool operator==(const GroupKey&, const GroupKey&) = default;
};

/// "temporal_r+L trg p=0.5"; the p suffix only when `with_chance`.
std::string group_label(const GroupKey& key, bool with_chance);

struct EnvAggregate {
  /// Largest max_previous over the group's runs, per n.
  std::vector<double> max_previous;
  std::size_t emerged_runs = 0;
  std::vector<double> accuracy;
  std::vector<double> topsim, posdis, bosdis;
  std::size_t degenerate_compositionality = 0;
};

struct GroupAggregate {
  GroupKey key;
  std::vector<std::string> run_ids;
  /// Runs with emergence in any evaluation environment.
  std::size_t emerged_runs = 0;
  /// emerged_by_step[n - 1]: runs with emergence at n in any environment.
  std::vector<std::size_t> emerged_by_step;
  std::map<EnvironmentKind, EnvAggregate> envs;

  double emergence_percent() const;
};

struct Aggregate {
  int horizon = 0;
  bool several_chances = false;
  std::vector<GroupAggregate> groups;  // sorted by key
};

/// Throws Error on empty input.
Aggregate aggregate(const std::vector<RunSummary>& summaries);

/// One rank-test block: Kruskal-Wallis over the groups plus Conover-Iman
/// pairwise p-values (raw and Holm-adjusted).
struct StatsBlock {
  std::string metric;
  std::string eval_env;
  std::string comparison;
  stats::SampleGroups groups;
  bool ok = false;
  std::string skipped;  // reason when !ok
  stats::TestResult kruskal;
  stats::PairwiseResult conover;
};

/// Across architectures (runs pooled by architecture) and, for accuracy,
/// within each architecture across its training configurations.
std::vector<StatsBlock> significance(const Aggregate& agg);

struct ReportOptions {
  int report_step = 4;
  double alpha = 0.05;
};

/// Writes table1.tsv, table1_by_step.tsv, table2.tsv, table2_by_step.tsv,
/// accuracy.tsv, compositionality.tsv, stats.txt, m_previous.svg and
/// accuracy.svg into `dir`. Returns the written paths.
std::vector<fs::path> write_report(const Aggregate& agg, const ReportOptions& options,
                                   const fs::path& dir);

std::string table1_text(const Aggregate& agg, int step);
std::string table2_text(const Aggregate& agg);
std::string stats_text(const std::vector<StatsBlock>& blocks, double alpha);

}  // namespace tempref::harness
