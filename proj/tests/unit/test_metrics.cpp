#include <doctest.h>

#include "tempref/metrics/compositionality.hpp"
#include "tempref/metrics/temporality.hpp"
#include "tempref/numcore/errors.hpp"
#include "tempref/numcore/rng.hpp"

using namespace tempref::metrics;
using Rows = std::vector<std::vector<int>>;

namespace {

std::vector<ObjectVector> objects_of(const Rows& rows) {
  std::vector<ObjectVector> out;
  for (const auto& r : rows) out.push_back(ObjectVector{r});
  return out;
}

ExchangeHistory history_of(const std::vector<ObjectVector>& objects, const Rows& messages,
                           int horizon = 8) {
  ExchangeHistory h;
  std::vector<ObjectVector> stream;
  for (std::size_t i = 0; i < objects.size(); ++i) {
    stream.push_back(objects[i]);
    ExchangeRecord r;
    r.t = static_cast<int>(i);
    r.target = objects[i];
    r.message = messages[i];
    r.temporal_label = tempref::envgen::temporal_label(stream, i, horizon);
    r.correct = true;
    h.push_back(r);
  }
  return h;
}

// x y z y y y x
const std::vector<ObjectVector> kWorked = objects_of({{0}, {1}, {2}, {1}, {1}, {1}, {0}});

}  // namespace

TEST_CASE("worked M_prev examples") {
  const Rows m4{{1}, {2}, {3}, {2}, {4}, {4}, {1}};
  const auto a = m_previous(history_of(kWorked, m4), {4}, 1);
  CHECK(a.count == 2);
  CHECK(a.total == 2);
  CHECK(a.is_full());

  const Rows m4b{{1}, {2}, {3}, {4}, {4}, {4}, {1}};
  const auto b = m_previous(history_of(kWorked, m4b), {4}, 1);
  CHECK(b.count == 2);
  CHECK(b.total == 3);

  const Rows m2{{1}, {2}, {3}, {2}, {2}, {2}, {1}};
  const auto c = m_previous(history_of(kWorked, m2), {2}, 1);
  CHECK(c.count == 2);
  CHECK(c.total == 4);
  CHECK(c.value() == 50.0);

  CHECK_THROWS_AS(m_previous(history_of(kWorked, m2), {9}, 1), tempref::Error);
}

TEST_CASE("object_same") {
  const auto h = history_of(objects_of({{0}, {1}, {0}}), {{0}, {0}, {0}});
  CHECK(object_same(h, 3, 2));
  CHECK_FALSE(object_same(h, 3, 1));
  CHECK_FALSE(object_same(h, 1, 1));
  CHECK_FALSE(object_same(h, 2, 5));

  tempref::numcore::Rng rng(4);
  std::vector<ObjectVector> objs;
  Rows msgs;
  for (int i = 0; i < 200; ++i) {
    objs.push_back(ObjectVector{{static_cast<int>(rng.uniform_int(5))}});
    msgs.push_back({static_cast<int>(rng.uniform_int(3))});
  }
  const auto rh = history_of(objs, msgs);
  for (std::size_t j = 1; j <= rh.size(); ++j) {
    for (int n = 1; n <= 8; ++n) {
      const bool brute = j > static_cast<std::size_t>(n) && objs[j - 1] == objs[j - 1 - n];
      CHECK(object_same(rh, j, n) == brute);
    }
  }
  // report counts agree with a double loop over the log
  const auto report = temporality_report(rh, 8);
  for (const auto& u : report.messages) {
    for (int n = 1; n <= 8; ++n) {
      long c = 0, t = 0;
      for (std::size_t j = 1; j <= rh.size(); ++j) {
        if (rh[j - 1].message != u.message) continue;
        ++t;
        c += object_same(rh, j, n);
      }
      CHECK(u.at(n).count == c);
      CHECK(u.at(n).total == t);
    }
  }
}

TEST_CASE("emergence decision") {
  const Rows m4{{1}, {2}, {3}, {2}, {4}, {4}, {1}};
  const auto report = temporality_report(history_of(kWorked, m4), 8);
  CHECK(emergence_decision(report, 1));
  CHECK(emergence_decision(report, 2));
  CHECK_FALSE(emergence_decision(report, 3));
  CHECK(report.emergence(2)[1]);
  CHECK(report.max_previous(1, 2) == 100.0);

  // descriptive language on a stream without repeats
  std::vector<ObjectVector> objs;
  Rows msgs;
  for (int i = 0; i < 50; ++i) {
    objs.push_back(ObjectVector{{i}});
    msgs.push_back({i % 7});
  }
  const auto none = temporality_report(history_of(objs, msgs), 8);
  CHECK_FALSE(emergence_decision(none, 1));
  for (int n = 1; n <= 8; ++n) CHECK(none.max_previous(n) == 0.0);
}

TEST_CASE("topographic similarity") {
  // identity code and permuted identity code
  const Rows grid{{0, 0, 1}, {1, 2, 0}, {2, 1, 1}, {0, 1, 2}, {2, 2, 2}, {1, 0, 0}};
  const auto objs = objects_of(grid);
  CHECK(topographic_similarity(objs, grid).value == doctest::Approx(1.0).epsilon(1e-12));
  Rows permuted;
  for (const auto& r : grid) permuted.push_back({(r[0] + 1) % 3 + 5, (r[1] + 2) % 3, r[2] * 2});
  CHECK(topographic_similarity(objs, permuted).value == doctest::Approx(1.0).epsilon(1e-12));

  const Rows constant(grid.size(), std::vector<int>{1, 1, 1});
  const auto d = topographic_similarity(objs, constant);
  CHECK(d.degenerate);
  CHECK(d.value == 0.0);

  // scipy.stats.spearmanr over the 190 pairwise Hamming distances
  const Rows o{{1,1,2}, {2,0,0}, {2,2,0}, {0,2,1}, {0,2,0}, {1,1,1}, {0,0,2}, {2,2,1}, {2,0,1}, {2,0,0}, {0,1,2}, {0,1,1}, {2,0,1}, {0,0,2}, {0,0,1}, {1,0,2}, {2,2,0}, {2,0,1}, {2,0,2}, {0,0,2}};
  const Rows m{{1,2,1}, {2,2,3}, {2,3,1}, {3,3,4}, {2,0,3}, {1,4,2}, {0,0,2}, {2,3,4}, {1,2,4}, {1,1,4}, {0,2,3}, {0,4,3}, {0,0,2}, {0,0,3}, {0,3,4}, {1,2,4}, {2,0,2}, {0,1,4}, {3,4,4}, {4,1,2}};
  CHECK(topographic_similarity(objects_of(o), m).value ==
        doctest::Approx(0.17476938094634778).epsilon(1e-12));
}

TEST_CASE("topsim subsampling is seeded") {
  tempref::numcore::Rng rng(12);
  Rows o, m;
  for (int i = 0; i < 300; ++i) {
    o.push_back({static_cast<int>(rng.uniform_int(4)), static_cast<int>(rng.uniform_int(4))});
    m.push_back({o.back()[0], static_cast<int>(rng.uniform_int(4))});
  }
  const auto objs = objects_of(o);
  const auto a = topographic_similarity(objs, m, {.cap = 100, .seed = 1});
  const auto b = topographic_similarity(objs, m, {.cap = 100, .seed = 1});
  const auto c = topographic_similarity(objs, m, {.cap = 100, .seed = 2});
  CHECK(a.value == b.value);
  CHECK(a.value != c.value);
}

TEST_CASE("posdis and bosdis") {
  // symbol j copies attribute j, attributes independent and uniform
  Rows full;
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b) full.push_back({a, b});
  CHECK(posdis(objects_of(full), full).value == doctest::Approx(1.0).epsilon(1e-12));
  // disjoint symbol ranges per attribute make the bag of symbols disentangled too
  Rows shifted;
  for (const auto& r : full) shifted.push_back({r[0], r[1] + 3});
  CHECK(bosdis(objects_of(full), shifted, 6).value == doctest::Approx(1.0).epsilon(1e-12));

  const Rows constant(full.size(), std::vector<int>{2, 2});
  CHECK(posdis(objects_of(full), constant).degenerate);
  CHECK(posdis(objects_of(full), constant).value == 0.0);
  CHECK(bosdis(objects_of(full), constant, 4).degenerate);

  // plug-in histogram mutual information, natural log
  const Rows o{{2,0,0}, {0,1,2}, {1,0,1}, {1,2,2}, {2,0,2}, {0,1,0}, {0,1,0}, {1,0,0}, {2,1,2}, {2,2,1}, {0,1,2}, {2,2,2}, {1,1,0}, {0,0,1}, {1,1,2}, {2,2,2}, {2,0,2}, {2,0,1}, {1,2,2}, {0,1,0}, {2,0,1}, {2,1,2}, {1,2,1}, {1,1,1}, {1,1,2}, {1,1,2}, {0,1,1}, {2,1,1}, {0,2,1}, {1,0,2}, {1,1,2}, {1,0,0}, {0,0,1}, {0,1,2}, {1,1,0}, {2,0,2}, {1,1,2}, {2,2,1}, {0,2,2}, {1,1,0}, {2,0,1}, {0,2,1}, {0,0,0}, {0,2,2}, {1,0,0}, {1,1,1}, {1,1,1}, {1,1,2}, {2,2,0}, {1,2,1}};
  const Rows m{{0,2,2}, {0,2,1}, {1,3,4}, {1,0,0}, {2,1,2}, {0,1,3}, {0,0,0}, {1,2,0}, {2,4,2}, {2,4,0}, {2,4,1}, {2,1,1}, {1,0,3}, {0,4,1}, {1,2,3}, {0,4,0}, {4,1,3}, {2,3,1}, {1,3,0}, {0,3,4}, {2,4,1}, {2,3,1}, {1,2,4}, {1,3,0}, {4,0,0}, {1,0,3}, {0,4,4}, {2,1,3}, {0,0,3}, {4,4,3}, {4,0,0}, {1,0,3}, {0,1,2}, {0,2,4}, {1,4,3}, {2,2,3}, {2,2,4}, {2,1,3}, {0,4,4}, {0,1,4}, {3,2,0}, {0,3,0}, {2,2,2}, {0,2,0}, {1,0,0}, {4,4,3}, {1,1,2}, {1,0,2}, {2,4,2}, {1,0,4}};
  CHECK(posdis(objects_of(o), m).value == doctest::Approx(0.17877876418630631).epsilon(1e-12));
  CHECK(bosdis(objects_of(o), m, 5).value == doctest::Approx(0.033857942791617621).epsilon(1e-12));
}

TEST_CASE("oracle speakers") {
  tempref::envgen::GameConfig g;
  g.n_att = 4;
  g.n_val = 4;
  g.num_distractors = 3;
  g.dataset_size = 5000;
  g.seed = 21;
  const auto eps = tempref::envgen::build_dataset(tempref::envgen::EnvironmentKind::kTrg, g);
  std::vector<ObjectVector> objs;
  Rows temporal, descriptive;
  constexpr int kRepeatToken = 99;
  for (const auto& e : eps) {
    objs.push_back(e.target);
    temporal.push_back(e.temporal_label == 1 ? std::vector<int>{kRepeatToken} : e.target.values);
    descriptive.push_back(e.target.values);
  }
  const auto t = temporality_report(history_of(objs, temporal), 8);
  CHECK(t.find({kRepeatToken})->at(1).is_full());
  CHECK(emergence_decision(t));

  const auto d = temporality_report(history_of(objs, descriptive), 8);
  CHECK_FALSE(emergence_decision(d));
  CHECK(std::abs(d.mean_within_horizon() - 100.0 * g.repetition_chance) < 5.0);
}
