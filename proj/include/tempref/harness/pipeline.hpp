#pragma once

#include <array>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "tempref/harness/config.hpp"
#include "tempref/harness/logs.hpp"
#include "tempref/harness/run.hpp"
#include "tempref/metrics/compositionality.hpp"

namespace tempref::harness {

/// Summary of one evaluation log.
struct EnvAnalysis {
  EnvironmentKind env = EnvironmentKind::kRg;
  std::size_t episodes = 0;
  double accuracy = 0.0;
  std::size_t distinct_messages = 0;
  /// max_previous[n - 1] for n in [1, h], over messages with T >= min_count.
  std::vector<double> max_previous;
  /// emergence[n - 1]: some message with T >= min_count reaches 100% at n.
  std::vector<bool> emergence;
  double mean_within_horizon = 0.0;
  double repeat_fraction = 0.0;
  metrics::CompositionalityReport compositionality;

  bool emerged() const;
};

struct RunAnalysis {
  std::string run_id;
  long min_count = 0;
  std::vector<EnvAnalysis> envs;  // kAllEnvironments order

  const EnvAnalysis& at(EnvironmentKind env) const;
  /// Emergence in any evaluation environment.
  bool emerged() const;
};

EnvAnalysis analyze_log(const ExchangeLog& log, const RunSpec& spec, const EvalConfig& eval);

void write_analysis(std::ostream& out, const RunAnalysis& analysis);
RunAnalysis read_analysis(std::istream& in);

/// Runs the stages a record is still missing. Each stage persists its
/// outputs before the status advances, so an interrupted run resumes at the
/// first incomplete stage. Training failures are recorded, not thrown.
RunRecord execute_run(const RunSpec& spec, const EvalConfig& eval, const fs::path& out_root);

/// Individual stages; each requires the previous one.
RunRecord train_stage(RunRecord record);
RunRecord eval_stage(RunRecord record, const EvalConfig& eval);
RunRecord analyze_stage(RunRecord record, const EvalConfig& eval);

/// Existing record for `spec` under `out_root`, or a fresh pending one.
RunRecord open_record(const RunSpec& spec, const fs::path& out_root);

using ProgressFn = std::function<void(const RunRecord&, std::size_t done, std::size_t total)>;

/// Executes every spec with at most `jobs` runs in flight. Completed runs are
/// skipped. Returns records in spec order.
std::vector<RunRecord> sweep(const std::vector<RunSpec>& specs, const EvalConfig& eval,
                             const fs::path& out_root, int jobs, const ProgressFn& progress = {});

/// All run records below out_root/runs, sorted by run_id.
std::vector<RunRecord> list_records(const fs::path& out_root);

/// Adjusts glibc malloc so short-lived large arrays reuse heap memory instead
/// of mapping fresh pages.
void tune_allocator();

}  // namespace tempref::harness
