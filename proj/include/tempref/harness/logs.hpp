#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "tempref/agents/agents.hpp"
#include "tempref/envgen/envgen.hpp"
#include "tempref/metrics/exchange.hpp"
#include "tempref/metrics/temporality.hpp"

namespace tempref::harness {

struct ExchangeLog {
  std::string run_id;
  envgen::EnvironmentKind env = envgen::EnvironmentKind::kRg;
  metrics::ExchangeHistory history;
};

/// One tab-separated line per episode: run_id, eval_env, t, target,
/// distractors, target_index, message_symbols, guess_index, correct,
/// temporal_label, predicted_label.
void write_exchange_log(std::ostream& out, const ExchangeLog& log);
ExchangeLog read_exchange_log(std::istream& in);

void write_train_log(std::ostream& out, const std::vector<agents::EpochLog>& log);
std::vector<agents::EpochLog> read_train_log(std::istream& in);

/// Per-message usage table: message, T, C_1..C_h, within-horizon count,
/// correct count.
void write_message_table(std::ostream& out, const metrics::TemporalityReport& report);

}  // namespace tempref::harness
