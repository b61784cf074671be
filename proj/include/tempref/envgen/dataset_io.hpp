#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "tempref/envgen/envgen.hpp"

namespace tempref::envgen {

/// "4,2,3"
std::string format_object(const ObjectVector& object);
ObjectVector parse_object(std::string_view text);
/// Vectors separated by ';'.
std::string format_objects(const std::vector<ObjectVector>& objects);
std::vector<ObjectVector> parse_objects(std::string_view text);

/// `key=value` pairs separated by spaces, in a fixed key order.
std::string format_game_config(const GameConfig& cfg);
GameConfig parse_game_config(std::string_view text);

struct Dataset {
  EnvironmentKind kind;
  GameConfig config;
  std::vector<EpisodeSpec> episodes;
};

/// Header `# tempref-dataset v1 env=<kind> <config>`, a column line, then one
/// tab-separated record per episode.
void write_dataset(std::ostream& out, const Dataset& dataset);
Dataset read_dataset(std::istream& in);

}  // namespace tempref::envgen
