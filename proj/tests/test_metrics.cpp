// Confusion counting, precision/recall/F1, and multi-seed summaries.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>

#include "doctest.h"
#include "json.hpp"
#include "vid/errors.hpp"
#include "vid/metrics.hpp"

using namespace vid;

TEST_CASE("confusion counts a hand-built example") {
  const Label P = Label::Positive, N = Label::Negative;
  std::vector<Label> preds = {P, P, N, N, P, N};
  std::vector<Label> golds = {P, N, P, N, P, N};
  ConfusionCounts c = confusion(preds, golds);
  CHECK(c.tp == 2);
  CHECK(c.fp == 1);
  CHECK(c.fn == 1);
  CHECK(c.tn == 2);
  CHECK(c.total() == 6);
}

TEST_CASE("confusion rejects mismatched or empty inputs") {
  CHECK_THROWS_AS(confusion({Label::Positive}, {}), DimensionError);
  CHECK_THROWS_AS(confusion({}, {}), ParamError);
}

TEST_CASE("prf1 on the frozen reference counts") {
  ConfusionCounts c;
  c.tp = 2034;
  c.fp = 966;
  c.fn = 791;
  c.tn = 100;
  Prf1 m = prf1(c);
  CHECK(m.precision == doctest::Approx(0.678).epsilon(1e-12));
  CHECK(m.recall == doctest::Approx(0.72).epsilon(1e-12));
  CHECK(std::round(m.f1 * 100.0) / 100.0 == doctest::Approx(0.70));
}

TEST_CASE("prf1 defines every 0/0 as zero") {
  ConfusionCounts none;  // all counts zero except tn
  none.tn = 5;
  Prf1 m = prf1(none);
  CHECK(m.precision == 0.0);
  CHECK(m.recall == 0.0);
  CHECK(m.f1 == 0.0);

  ConfusionCounts no_preds;  // fn only: recall 0, precision 0/0
  no_preds.fn = 3;
  m = prf1(no_preds);
  CHECK(m.precision == 0.0);
  CHECK(m.recall == 0.0);
  CHECK(m.f1 == 0.0);
}

TEST_CASE("prf1 perfect and inverted predictions") {
  ConfusionCounts perfect;
  perfect.tp = 10;
  perfect.tn = 90;
  Prf1 m = prf1(perfect);
  CHECK(m.precision == 1.0);
  CHECK(m.recall == 1.0);
  CHECK(m.f1 == 1.0);
}

TEST_CASE("summarize_runs computes mean and population stddev") {
  RunResult r;
  r.name = "m";
  r.per_seed = {{0.5, 0.4, 0.6}, {0.7, 0.8, 0.8}};
  auto s = summarize_runs({r});
  REQUIRE(s.size() == 1);
  CHECK(s[0].mean.precision == doctest::Approx(0.6));
  CHECK(s[0].mean.recall == doctest::Approx(0.6));
  CHECK(s[0].mean.f1 == doctest::Approx(0.7));
  CHECK(s[0].stddev.f1 == doctest::Approx(0.1));
  CHECK(s[0].stddev.precision == doctest::Approx(0.1));

  RunResult empty;
  empty.name = "none";
  CHECK_THROWS_AS(summarize_runs({empty}), ParamError);
}

TEST_CASE("compare_runs renders a table and needs two runs") {
  RunResult a{"alpha", {{1.0, 1.0, 1.0}}};
  RunResult b{"beta", {{0.0, 0.0, 0.0}}};
  std::string table = compare_runs({a, b});
  CHECK(table.find("method\tprecision\trecall\tf1") == 0);
  CHECK(table.find("alpha\t1.0000") != std::string::npos);
  CHECK(table.find("beta\t0.0000") != std::string::npos);
  CHECK_THROWS_AS(compare_runs({a}), ParamError);
}

TEST_CASE("runs_to_json emits parseable per-seed values") {
  RunResult a{"alpha", {{0.25, 0.5, 0.75}, {0.1, 0.2, 0.3}}};
  nlohmann::json j = nlohmann::json::parse(runs_to_json({a}));
  REQUIRE(j.is_array());
  REQUIRE(j.size() == 1);
  CHECK(j[0]["method"] == "alpha");
  REQUIRE(j[0]["per_seed"].size() == 2);
  CHECK(j[0]["per_seed"][0]["f1"] == doctest::Approx(0.75));
  CHECK(j[0]["per_seed"][1]["precision"] == doctest::Approx(0.1));
}
