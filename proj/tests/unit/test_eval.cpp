#include <cmath>
#include <sstream>

#include "doctest.h"
#include "oracles.hpp"
#include "pertree/eval.hpp"

using namespace pertree;

namespace {

Dataset points(const std::vector<std::vector<double>>& xs, std::vector<int> t, std::vector<double> y, int m) {
  Dataset ds;
  ds.m = m;
  ds.schema = FeatureSchema::numeric(xs.front().size());
  ds.x.resize(static_cast<Eigen::Index>(xs.size()), static_cast<Eigen::Index>(xs.front().size()));
  for (std::size_t i = 0; i < xs.size(); ++i) {
    for (std::size_t j = 0; j < xs[i].size(); ++j) ds.x(i, j) = xs[i][j];
  }
  ds.t = std::move(t);
  ds.y = std::move(y);
  return ds;
}

Metric identity_metric(std::size_t d) { return metric_from_covariance(Eigen::MatrixXd::Identity(d, d)); }

MatchedTestSet hand_set(const Matrix& yhat) {
  MatchedTestSet mts;
  mts.m = static_cast<int>(yhat.cols());
  const auto rows = static_cast<std::size_t>(yhat.rows());
  mts.covariates.resize(yhat.rows(), 1);
  for (std::size_t j = 0; j < rows; ++j) {
    mts.covariates(j, 0) = static_cast<double>(j);
    mts.drawn.push_back(j);
  }
  mts.yhat = yhat;
  return mts;
}

// Prescribes picks[row], reading the row number from the single covariate.
FunctionPolicy pick(std::vector<int> picks, int m) {
  return FunctionPolicy(m, [picks](std::span<const double> x) { return picks[static_cast<std::size_t>(x[0])]; });
}

}  // namespace

TEST_SUITE("eval") {
  TEST_CASE("mahalanobis distance") {
    Eigen::MatrixXd cov(2, 2);
    cov << 4, 0, 0, 1;
    const auto metric = metric_from_covariance(cov);
    CHECK(distance(metric, std::vector<double>{2, 0}, std::vector<double>{0, 0}) == doctest::Approx(1.0).epsilon(1e-7));
    CHECK(distance(metric, std::vector<double>{0, 1}, std::vector<double>{0, 0}) == doctest::Approx(1.0).epsilon(1e-7));
    const auto id = identity_metric(2);
    CHECK(distance(id, std::vector<double>{3, 4}, std::vector<double>{0, 0}) == doctest::Approx(5.0).epsilon(1e-7));
    CHECK(distance(id, std::vector<double>{1.5, -2}, std::vector<double>{1.5, -2}) == 0.0);
    CHECK_THROWS_AS(distance(id, std::vector<double>{1}, std::vector<double>{1, 2}), Error);
  }

  TEST_CASE("sample covariance metric whitens the data") {
    Rng rng(40);
    Dataset ds = oracle::random_dataset(rng, 200, 3, 2, 10, 5, 1);
    for (std::size_t i = 0; i < ds.size(); ++i) ds.x(i, 2) = 3.0 * ds.x(i, 0) + rng.normal();
    const auto metric = mahalanobis_metric(ds);
    const Matrix z = ds.x * metric.whitening.transpose();
    const Eigen::RowVectorXd mean = z.colwise().mean();
    const Eigen::MatrixXd centered = z.rowwise() - mean;
    const Eigen::MatrixXd cov = centered.transpose() * centered / 199.0;
    CHECK((cov - Eigen::MatrixXd::Identity(3, 3)).cwiseAbs().maxCoeff() < 1e-5);
  }

  TEST_CASE("greedy submatch copies exact matches") {
    // Every subject has a twin in the other arm with identical covariates.
    const auto ds = points({{0, 0}, {0, 0}, {5, 1}, {5, 1}, {9, 3}, {9, 3}}, {1, 2, 1, 2, 1, 2}, {1, 2, 3, 4, 5, 6}, 2);
    const auto metric = mahalanobis_metric(ds);
    const auto mts = greedy_submatch(ds, 6, metric, 3);
    REQUIRE(mts.size() == 6);
    for (std::size_t j = 0; j < 6; ++j) {
      const std::size_t i = mts.drawn[j];
      const std::size_t twin = i % 2 == 0 ? i + 1 : i - 1;
      CHECK(mts.factual[j] == ds.y[i]);
      CHECK(mts.yhat(j, ds.t[i] - 1) == ds.y[i]);
      CHECK(mts.yhat(j, ds.t[twin] - 1) == ds.y[twin]);
    }
    CHECK(mts.total_cost == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(mts.removed.size() == 6);
  }

  TEST_CASE("greedy ties go to the lowest index") {
    // Subjects 1 and 2 are equidistant from subject 0.
    const auto ds = points({{0}, {-1}, {1}, {7}}, {1, 2, 2, 1}, {0, 10, 20, 0}, 2);
    const auto metric = identity_metric(1);
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      const auto mts = greedy_submatch(ds, 4, metric, seed);
      for (std::size_t j = 0; j < 4; ++j) {
        if (mts.drawn[j] == 0) {
          CHECK(mts.source[j][1] == 1);
          CHECK(mts.yhat(j, 1) == 10.0);
        }
      }
    }
  }

  TEST_CASE("greedy imputation on a hand example") {
    const auto ds = points({{0}, {1}, {3}, {10}}, {1, 2, 1, 2}, {5, 6, 7, 8}, 2);
    const auto mts = greedy_submatch(ds, 4, identity_metric(1), 1);
    // Nearest opposite-arm subject: 0 -> 1, 1 -> 0, 2 -> 1, 3 -> 2.
    const std::vector<std::size_t> partner{1, 0, 1, 2};
    for (std::size_t j = 0; j < 4; ++j) {
      const std::size_t i = mts.drawn[j];
      const int other = ds.t[i] == 1 ? 2 : 1;
      CHECK(mts.yhat(j, other - 1) == ds.y[partner[i]]);
    }
    CHECK_THROWS_AS(greedy_submatch(ds, 5, identity_metric(1), 1), Error);
  }

  TEST_CASE("minimum-cost assignment") {
    Eigen::MatrixXd cost(3, 3);
    cost << 4, 1, 3, 2, 0, 5, 3, 2, 2;
    CHECK(min_cost_assignment(cost) == std::vector<std::size_t>{1, 0, 2});
    Eigen::MatrixXd wide(2, 4);
    wide << 9, 9, 1, 9, 9, 9, 9, 0;
    CHECK(min_cost_assignment(wide) == std::vector<std::size_t>{2, 3});
    CHECK_THROWS_AS(min_cost_assignment(Eigen::MatrixXd::Zero(3, 2)), Error);
  }

  TEST_CASE("optimal submatch picks the cheapest disjoint pair") {
    const auto ds = points({{0}, {10}, {1}, {2}}, {1, 1, 2, 2}, {1, 2, 3, 4}, 2);
    const auto mts = optimal_submatch(ds, 1, identity_metric(1));
    CHECK(mts.total_cost == doctest::Approx(1.0).epsilon(1e-7));
    REQUIRE(mts.size() == 2);
    CHECK(mts.drawn == std::vector<std::size_t>{0, 2});
    CHECK(mts.yhat(0, 0) == 1.0);
    CHECK(mts.yhat(0, 1) == 3.0);
    CHECK(mts.yhat(1, 0) == 1.0);
    CHECK(mts.yhat(1, 1) == 3.0);
    CHECK(mts.removed == std::vector<std::size_t>{0, 2});
  }

  TEST_CASE("optimal submatch with zero-cost pairs and wrong arm counts") {
    const auto ds = points({{0}, {4}, {8}, {8}, {4}, {0}}, {1, 1, 1, 2, 2, 2}, {0, 0, 0, 0, 0, 0}, 2);
    const auto mts = optimal_submatch(ds, 3, identity_metric(1));
    CHECK(mts.total_cost == doctest::Approx(0.0).epsilon(1e-12));
    const auto three = points({{0}, {1}, {2}}, {1, 2, 3}, {0, 0, 0}, 3);
    try {
      optimal_submatch(three, 1, identity_metric(1));
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::kUnsupported);
    }
    CHECK_THROWS_AS(optimal_submatch(ds, 4, identity_metric(1)), Error);
  }

  TEST_CASE("optimal submatch matches brute-force enumeration") {
    Rng rng(41);
    for (int rep = 0; rep < 30; ++rep) {
      const std::size_t n = 4 + rng.below(6);
      Dataset ds = oracle::random_dataset(rng, n, 2, 2, 50, 5, 1);
      for (std::size_t i = 0; i < n; ++i) {
        ds.x(i, 0) += rng.uniform();
        ds.x(i, 1) += rng.uniform();
      }
      const auto counts = ds.arm_counts();
      const std::size_t n_pair = 1 + rng.below(std::min(counts[0], counts[1]));
      const auto metric = mahalanobis_metric(ds);
      const auto mts = optimal_submatch(ds, n_pair, metric);
      CHECK(mts.total_cost == doctest::Approx(oracle::brute_submatch_cost(ds, metric, n_pair)).epsilon(1e-9));
      CHECK(mts.size() == 2 * n_pair);
      CHECK(mts.removed.size() == 2 * n_pair);
    }
  }

  TEST_CASE("matched risk and coefficients on a hand table") {
    Matrix yhat(2, 2);
    yhat << 1, 3, 4, 2;
    auto mts = hand_set(yhat);
    mts.factual = {1, 2};
    const auto pol = pick({2, 1}, 2);
    CHECK(matched_risk(mts, pol) == 3.5);
    // Prescient 3, best constant 5, factual 3.
    const auto p1 = p1_hat(mts, pol);
    CHECK(p1.defined);
    CHECK(p1.value == doctest::Approx(-1.0));
    const auto prescient = pick({1, 2}, 2);
    CHECK(matched_risk(mts, prescient) == 1.5);
    CHECK(p1_hat(mts, prescient).value == 1.0);
    CHECK_FALSE(p2_hat(mts, pol).defined);
  }

  TEST_CASE("a constant-best table leaves the first coefficient at zero") {
    Matrix yhat(3, 2);
    yhat << 1, 2, 0, 5, 3, 2;
    auto mts = hand_set(yhat);
    mts.factual = {2, 5, 3};
    const auto first = pick({1, 1, 1}, 2);
    const auto p1 = p1_hat(mts, first);
    CHECK(p1.defined);
    CHECK(p1.value == 0.0);
    const auto p2 = p2_hat(mts, first);
    CHECK(p2.defined);
    CHECK(p2.value == doctest::Approx(6.0 / 7.0));
  }

  TEST_CASE("the factual column of every test row is its own outcome") {
    Rng rng(42);
    const Dataset ds = oracle::random_dataset(rng, 60, 2, 3, 10, 20, 5);
    const auto mts = greedy_submatch(ds, 20, mahalanobis_metric(ds), 9);
    std::vector<std::size_t> sorted = mts.drawn;
    std::sort(sorted.begin(), sorted.end());
    CHECK(std::adjacent_find(sorted.begin(), sorted.end()) == sorted.end());
    for (std::size_t j = 0; j < mts.size(); ++j) {
      const std::size_t i = mts.drawn[j];
      CHECK(mts.yhat(j, ds.t[i] - 1) == ds.y[i]);
      for (int t = 1; t <= 3; ++t) {
        CHECK(ds.t[mts.source[j][t - 1]] == t);
        CHECK(std::binary_search(mts.removed.begin(), mts.removed.end(), mts.source[j][t - 1]));
      }
    }
    std::ostringstream csv;
    write_matched_csv(mts, csv);
    CHECK(csv.str().rfind("subject_index,factual_t,factual_y,yhat_1,yhat_2,yhat_3\n", 0) == 0);
  }
}
