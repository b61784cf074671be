#include "tempref/harness/logs.hpp"

#include <istream>
#include <ostream>

#include "tempref/envgen/dataset_io.hpp"
#include "tempref/text.hpp"

namespace tempref::harness {

namespace {

constexpr std::string_view kExchangeColumns =
    "run_id\teval_env\tt\ttarget\tdistractors\ttarget_index\tmessage_symbols\tguess_index\t"
    "correct\ttemporal_label\tpredicted_label";
constexpr std::string_view kTrainColumns = "epoch\tloss\taccuracy";

}  // namespace

void write_exchange_log(std::ostream& out, const ExchangeLog& log) {
  out << kExchangeColumns << '\n';
  const auto env = envgen::to_string(log.env);
  for (const auto& r : log.history) {
    out << log.run_id << '\t' << env << '\t' << r.t << '\t' << envgen::format_object(r.target) << '\t'
        << envgen::format_objects(r.distractors) << '\t' << r.target_index << '\t'
        << text::join_ints(r.message) << '\t' << r.guess << '\t' << (r.correct ? 1 : 0) << '\t'
        << r.temporal_label << '\t' << r.predicted_label << '\n';
  }
}

ExchangeLog read_exchange_log(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kExchangeColumns) {
    throw FormatError("exchange log: missing column line");
  }
  ExchangeLog log;
  bool first = true;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto f = text::split(line, '\t');
    if (f.size() != 11) {
      throw FormatError("exchange log line " + std::to_string(line_no) + ": expected 11 fields, got " +
                        std::to_string(f.size()));
    }
    const std::string run_id(f[0]);
    const auto env = envgen::parse_environment(f[1]);
    if (first) {
      log.run_id = run_id;
      log.env = env;
      first = false;
    } else if (run_id != log.run_id || env != log.env) {
      throw FormatError("exchange log line " + std::to_string(line_no) + ": mixed runs or environments");
    }
    metrics::ExchangeRecord r;
    r.t = text::parse_int<int>(f[2]);
    r.target = envgen::parse_object(f[3]);
    r.distractors = envgen::parse_objects(f[4]);
    r.target_index = text::parse_int<int>(f[5]);
    r.message = text::parse_ints<int>(f[6]);
    r.guess = text::parse_int<int>(f[7]);
    r.correct = text::parse_bool(f[8]);
    r.temporal_label = text::parse_int<int>(f[9]);
    r.predicted_label = text::parse_int<int>(f[10]);
    log.history.push_back(std::move(r));
  }
  return log;
}

void write_train_log(std::ostream& out, const std::vector<agents::EpochLog>& log) {
  out << kTrainColumns << '\n';
  for (const auto& e : log) {
    out << e.epoch << '\t' << text::format_double(e.loss) << '\t' << text::format_double(e.accuracy)
        << '\n';
  }
}

std::vector<agents::EpochLog> read_train_log(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kTrainColumns) throw FormatError("train log: missing column line");
  std::vector<agents::EpochLog> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = text::split(line, '\t');
    if (f.size() != 3) throw FormatError("train log: expected 3 fields");
    out.push_back({text::parse_int<int>(f[0]), text::parse_double(f[1]), text::parse_double(f[2])});
  }
  return out;
}

void write_message_table(std::ostream& out, const metrics::TemporalityReport& report) {
  out << "message\tuses";
  for (int n = 1; n <= report.horizon; ++n) out << "\tprev_" << n;
  out << "\twithin_horizon\tcorrect\n";
  for (const auto& m : report.messages) {
    out << text::join_ints(m.message) << '\t' << m.total;
    for (int n = 1; n <= report.horizon; ++n) out << '\t' << m.previous[n];
    out << '\t' << m.within_horizon << '\t' << m.correct << '\n';
  }
}

}  // namespace tempref::harness
