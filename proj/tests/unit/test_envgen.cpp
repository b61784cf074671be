#include <doctest.h>

#include <set>
#include <sstream>

#include "tempref/envgen/dataset_io.hpp"
#include "tempref/envgen/envgen.hpp"
#include "tempref/numcore/errors.hpp"

using namespace tempref::envgen;

namespace {

GameConfig small_game() {
  GameConfig g;
  g.n_att = 4;
  g.n_val = 4;
  g.num_distractors = 3;
  g.max_len = 3;
  g.vocab_size = 10;
  g.dataset_size = 1000;
  g.seed = 3;
  return g;
}

ObjectVector obj(std::initializer_list<int> v) { return ObjectVector{std::vector<int>(v)}; }

// Independent scan of the target stream.
int brute_label(const std::vector<EpisodeSpec>& eps, std::size_t t, int h) {
  for (int k = 1; k <= h && static_cast<std::size_t>(k) <= t; ++k) {
    if (eps[t - k].target == eps[t].target) return k;
  }
  return 0;
}

}  // namespace

TEST_CASE("temporal label") {
  const auto x = obj({1, 2}), y = obj({0, 0}), z = obj({3, 3});
  // x, then four other objects, then x again: 5 episodes back
  std::vector<ObjectVector> h{x, y, z, y, z, x};
  CHECK(temporal_label(h, 5, 8) == 5);
  CHECK(temporal_label(h, 5, 4) == 0);
  CHECK(temporal_label(h, 0, 8) == 0);
  // smallest lag wins
  CHECK(temporal_label(h, 4, 8) == 2);
}

TEST_CASE("trg draws") {
  GameConfig g = small_game();
  const std::vector<ObjectVector> history{obj({0, 0, 0, 1}), obj({0, 0, 1, 0}), obj({0, 1, 0, 0})};
  g.repetition_chance = 1.0;
  Rng rng(1);
  for (int i = 0; i < 200; ++i) {
    const auto d = next_target_trg(history, g, rng);
    CHECK(d.chance);
    if (d.lag <= 3) {
      CHECK(d.repeated);
      CHECK(d.object == history[history.size() - d.lag]);
    } else {
      CHECK_FALSE(d.repeated);
    }
  }
  g.repetition_chance = 0.0;
  for (int i = 0; i < 200; ++i) CHECK_FALSE(next_target_trg(history, g, rng).chance);
  // empty history always falls back to a fresh object
  g.repetition_chance = 1.0;
  CHECK_FALSE(next_target_trg({}, g, rng).repeated);
}

TEST_CASE("distractors") {
  GameConfig g = small_game();
  Rng rng(2);
  for (int i = 0; i < 1000; ++i) {
    const auto target = random_object(g, rng);
    for (auto kind : {EnvironmentKind::kRg, EnvironmentKind::kRgHard}) {
      const auto ds = make_distractors(target, kind, g, rng);
      CHECK(ds.size() == 3);
      std::set<ObjectVector> unique(ds.begin(), ds.end());
      CHECK(unique.size() == ds.size());
      for (const auto& d : ds) {
        CHECK(d != target);
        if (is_hard(kind)) CHECK(hamming(d, target) == 1);
      }
    }
  }
  // only n_att * (n_val - 1) = 3 hard neighbours exist on a 3x2 space
  GameConfig tiny = small_game();
  tiny.n_att = 3;
  tiny.n_val = 2;
  tiny.num_distractors = 4;
  CHECK_THROWS_AS(make_distractors(obj({0, 0, 0}), EnvironmentKind::kRgHard, tiny, rng),
                  tempref::ConfigError);
}

TEST_CASE("dataset invariants") {
  const GameConfig g = small_game();
  for (auto kind : kAllEnvironments) {
    CAPTURE(to_string(kind));
    GameConfig cfg = g;
    if (kind == EnvironmentKind::kNeverSame) cfg.dataset_size = 256;
    const auto eps = build_dataset(kind, cfg);
    CHECK(eps.size() == static_cast<std::size_t>(cfg.dataset_size));
    for (std::size_t t = 0; t < eps.size(); ++t) {
      const auto& e = eps[t];
      CHECK(e.t == static_cast<int>(t));
      CHECK(e.distractors.size() == 3);
      CHECK(e.candidates()[e.target_index] == e.target);
      CHECK(e.temporal_label == brute_label(eps, t, cfg.horizon));
    }
    CHECK(build_dataset(kind, cfg) == eps);
  }
}

TEST_CASE("always same and never same") {
  GameConfig g = small_game();
  g.dataset_size = 200;
  const auto as = build_dataset(EnvironmentKind::kAlwaysSame, g);
  std::set<ObjectVector> seen;
  for (std::size_t block = 0; block < 20; ++block) {
    int ones = 0;
    for (std::size_t i = 0; i < 10; ++i) {
      const auto& e = as[10 * block + i];
      CHECK(e.target == as[10 * block].target);
      ones += e.temporal_label == 1;
    }
    CHECK(ones == 9);
    CHECK(seen.insert(as[10 * block].target).second);
  }

  g.dataset_size = 256;
  const auto ns = build_dataset(EnvironmentKind::kNeverSame, g);
  std::set<ObjectVector> all;
  for (const auto& e : ns) {
    CHECK(e.temporal_label == 0);
    all.insert(e.target);
  }
  CHECK(all.size() == 256);
  g.dataset_size = 257;
  CHECK_THROWS_AS(build_dataset(EnvironmentKind::kNeverSame, g), tempref::ConfigError);

  CHECK(max_episodes(EnvironmentKind::kNeverSame, g) == 256);
  CHECK(max_episodes(EnvironmentKind::kAlwaysSame, g) == 2560);
  CHECK(max_episodes(EnvironmentKind::kTrg, g) == UINT64_MAX);
  g.dataset_size = 2560;
  CHECK(build_dataset(EnvironmentKind::kAlwaysSame, g).size() == 2560);
  g.dataset_size = 2561;
  CHECK_THROWS(build_dataset(EnvironmentKind::kAlwaysSame, g));
}

TEST_CASE("repeat fractions") {
  GameConfig g = small_game();
  g.n_att = 8;
  g.n_val = 8;
  g.num_distractors = 10;
  g.dataset_size = 20000;
  for (double p : {0.25, 0.5, 0.75}) {
    g.repetition_chance = p;
    CHECK(std::abs(repeat_fraction(build_dataset(EnvironmentKind::kTrg, g)) - p) <= 0.02);
  }
  CHECK(repeat_fraction(build_dataset(EnvironmentKind::kRg, g)) < 0.01);
  g.repetition_chance = 0.0;
  CHECK(repeat_fraction(build_dataset(EnvironmentKind::kTrg, g)) < 0.01);
}

TEST_CASE("dataset export round trip") {
  GameConfig g = small_game();
  g.dataset_size = 50;
  Dataset d{EnvironmentKind::kTrgHard, g, build_dataset(EnvironmentKind::kTrgHard, g)};
  std::stringstream s;
  write_dataset(s, d);
  const auto back = read_dataset(s);
  CHECK(back.kind == d.kind);
  CHECK(back.config == d.config);
  CHECK(back.episodes == d.episodes);
  std::stringstream again;
  write_dataset(again, back);
  std::stringstream first;
  write_dataset(first, d);
  CHECK(again.str() == first.str());

  std::stringstream bad("not a dataset\n");
  CHECK_THROWS_AS(read_dataset(bad), tempref::FormatError);
}

TEST_CASE("config validation") {
  GameConfig g = small_game();
  g.n_val = 1;
  CHECK_THROWS_AS(g.validate(), tempref::ConfigError);
  g = small_game();
  g.repetition_chance = 1.5;
  CHECK_THROWS_AS(g.validate(), tempref::ConfigError);
  g = small_game();
  g.horizon = 0;
  CHECK_THROWS_AS(g.validate(), tempref::ConfigError);
  CHECK(small_game().object_space_size() == 256);
}
