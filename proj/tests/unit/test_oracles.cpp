// The reference implementations are checked on cases small enough to do by
// hand before any library result is compared against them.
#include "doctest.h"
#include "oracles.hpp"

using namespace pertree;

TEST_SUITE("oracles") {
  TEST_CASE("random data is integral and covers every arm") {
    Rng rng(1);
    const Dataset ds = oracle::random_dataset(rng, 40, 3, 4, 5, 7, 3);
    const auto counts = ds.arm_counts();
    for (std::size_t c : counts) CHECK(c >= 3);
    for (std::size_t i = 0; i < ds.size(); ++i) {
      CHECK(ds.y[i] == std::floor(ds.y[i]));
      CHECK((ds.y[i] >= 0 && ds.y[i] < 7));
      for (std::size_t j = 0; j < 3; ++j) CHECK(ds.x(i, j) == std::floor(ds.x(i, j)));
    }
    ds.validate();
  }

  TEST_CASE("impurity by hand") {
    Dataset ds;
    ds.m = 2;
    ds.t = {1, 1, 2};
    ds.y = {2, 4, 1};
    const std::vector<std::size_t> all{0, 1, 2};
    // Means 3 and 1; three rows.
    CHECK(oracle::impurity(ds, all, ds.y, true, 1) == 3.0);
    CHECK(oracle::impurity(ds, all, ds.y, false, 2) == 9.0);
    CHECK_FALSE(oracle::impurity(ds, {0, 1}, ds.y, true, 1).has_value());
    CHECK_FALSE(oracle::impurity(ds, {2}, ds.y, false, 2).has_value());
  }

  TEST_CASE("split search by hand") {
    Dataset ds;
    ds.m = 2;
    ds.schema = FeatureSchema::numeric(1);
    ds.x.resize(4, 1);
    ds.x << 1, 2, 3, 4;
    ds.t = {1, 2, 1, 2};
    ds.y = {0, 5, 5, 0};
    const auto s = oracle::best_split(ds, {0, 1, 2, 3}, {0}, 1, false);
    REQUIRE(s.has_value());
    CHECK(s->threshold == 2.5);
    CHECK(s->impurity == 0.0);
    CHECK_FALSE(oracle::best_split(ds, {0, 1, 2, 3}, {0}, 2, false).has_value());
  }

  TEST_CASE("depth-two enumeration by hand") {
    // Four quadrant cells of two rows; arm 1 is cheap left, arm 2 right.
    Dataset ds;
    ds.m = 2;
    ds.schema = FeatureSchema::numeric(2);
    ds.x.resize(8, 2);
    ds.x << 0, 0, 0, 0, 0, 1, 0, 1, 1, 0, 1, 0, 1, 1, 1, 1;
    ds.t = {1, 2, 1, 2, 1, 2, 1, 2};
    ds.y = {0, 3, 0, 3, 3, 0, 3, 0};
    CutMenu menu;
    menu.cuts = {{{1, 0.5}, {0, 0.5}}, {{1, 0.5}}, {{1, 0.5}}};
    const auto best = oracle::exhaustive_depth_two(ds, menu, 1);
    REQUIRE(best.feasible);
    CHECK(best.objective == 0.0);
    CHECK(best.c1 == 1);
    CHECK(best.treatments == std::vector<int>{1, 1, 2, 2});
  }

  TEST_CASE("pair enumeration by hand") {
    Dataset ds;
    ds.m = 2;
    ds.schema = FeatureSchema::numeric(1);
    ds.x.resize(4, 1);
    ds.x << 0, 10, 1, 2;
    ds.t = {1, 1, 2, 2};
    ds.y = {0, 0, 0, 0};
    const auto metric = metric_from_covariance(Eigen::MatrixXd::Identity(1, 1));
    CHECK(oracle::brute_submatch_cost(ds, metric, 1) == doctest::Approx(1.0).epsilon(1e-7));
    CHECK(oracle::brute_submatch_cost(ds, metric, 2) == doctest::Approx(1.0 + 8.0).epsilon(1e-7));
  }
}
