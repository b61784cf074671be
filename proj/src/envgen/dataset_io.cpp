#include "tempref/envgen/dataset_io.hpp"

#include <istream>
#include <map>
#include <ostream>

#include "tempref/text.hpp"

namespace tempref::envgen {

std::string format_object(const ObjectVector& object) { return text::join_ints(object.values); }

ObjectVector parse_object(std::string_view s) { return ObjectVector{text::parse_ints<int>(s)}; }

std::string format_objects(const std::vector<ObjectVector>& objects) {
  std::string out;
  for (std::size_t i = 0; i < objects.size(); ++i) {
    if (i) out += ';';
    out += format_object(objects[i]);
  }
  return out;
}

std::vector<ObjectVector> parse_objects(std::string_view s) {
  std::vector<ObjectVector> out;
  if (text::trim(s).empty()) return out;
  for (auto part : text::split(s, ';')) out.push_back(parse_object(part));
  return out;
}

std::string format_game_config(const GameConfig& c) {
  return "n_att=" + std::to_string(c.n_att) + " n_val=" + std::to_string(c.n_val) +
         " num_distractors=" + std::to_string(c.num_distractors) +
         " max_len=" + std::to_string(c.max_len) + " vocab_size=" + std::to_string(c.vocab_size) +
         " repetition_chance=" + text::format_double(c.repetition_chance) +
         " horizon=" + std::to_string(c.horizon) +
         " dataset_size=" + std::to_string(c.dataset_size) + " seed=" + std::to_string(c.seed);
}

GameConfig parse_game_config(std::string_view s) {
  GameConfig c;
  for (auto token : text::split(text::trim(s), ' ')) {
    if (token.empty()) continue;
    const auto eq = token.find('=');
    if (eq == std::string_view::npos) throw FormatError("bad config token '" + std::string(token) + "'");
    const auto key = token.substr(0, eq);
    const auto value = token.substr(eq + 1);
    if (key == "n_att") c.n_att = text::parse_int<int>(value);
    else if (key == "n_val") c.n_val = text::parse_int<int>(value);
    else if (key == "num_distractors") c.num_distractors = text::parse_int<int>(value);
    else if (key == "max_len") c.max_len = text::parse_int<int>(value);
    else if (key == "vocab_size") c.vocab_size = text::parse_int<int>(value);
    else if (key == "repetition_chance") c.repetition_chance = text::parse_double(value);
    else if (key == "horizon") c.horizon = text::parse_int<int>(value);
    else if (key == "dataset_size") c.dataset_size = text::parse_int<int>(value);
    else if (key == "seed") c.seed = text::parse_int<std::uint64_t>(value);
    else throw FormatError("unknown config key '" + std::string(key) + "'");
  }
  return c;
}

namespace {
constexpr std::string_view kMagic = "# tempref-dataset v1 ";
constexpr std::string_view kColumns =
    "episode_index\ttarget\tdistractors\ttarget_index\ttemporal_label";
}  // namespace

void write_dataset(std::ostream& out, const Dataset& d) {
  out << kMagic << "env=" << to_string(d.kind) << ' ' << format_game_config(d.config) << '\n';
  out << kColumns << '\n';
  for (const auto& ep : d.episodes) {
    out << ep.t << '\t' << format_object(ep.target) << '\t' << format_objects(ep.distractors)
        << '\t' << ep.target_index << '\t' << ep.temporal_label << '\n';
  }
}

Dataset read_dataset(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || !line.starts_with(kMagic)) {
    throw FormatError("missing dataset header");
  }
  std::string_view rest = std::string_view(line).substr(kMagic.size());
  if (!rest.starts_with("env=")) throw FormatError("dataset header lacks env=");
  const auto space = rest.find(' ');
  Dataset d{parse_environment(rest.substr(4, space - 4)), {}, {}};
  d.config = parse_game_config(space == std::string_view::npos ? "" : rest.substr(space + 1));
  if (!std::getline(in, line) || line != kColumns) throw FormatError("missing dataset column line");
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = text::split(line, '\t');
    if (f.size() != 5) throw FormatError("dataset record needs 5 fields: " + line);
    EpisodeSpec ep;
    ep.t = text::parse_int<int>(f[0]);
    ep.target = parse_object(f[1]);
    ep.distractors = parse_objects(f[2]);
    ep.target_index = text::parse_int<int>(f[3]);
    ep.temporal_label = text::parse_int<int>(f[4]);
    d.episodes.push_back(std::move(ep));
  }
  return d;
}

}  // namespace tempref::envgen
