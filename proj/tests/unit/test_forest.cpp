#include "doctest.h"
#include "oracles.hpp"
#include "pertree/forest.hpp"

using namespace pertree;

TEST_SUITE("forest") {
  TEST_CASE("majority vote with ties to the lowest label") {
    CHECK(majority_vote(std::vector<std::size_t>{2, 1}) == 1);
    CHECK(majority_vote(std::vector<std::size_t>{1, 1}) == 1);
    CHECK(majority_vote(std::vector<std::size_t>{0, 3, 3}) == 2);
    CHECK(majority_vote(std::vector<std::size_t>{1, 0, 4}) == 3);
  }

  TEST_CASE("single identity-resampled tree equals a plain tree") {
    Rng rng(1);
    for (int rep = 0; rep < 10; ++rep) {
      const Dataset ds = oracle::random_dataset(rng, 80, 3, 3, 8, 10, 5);
      PfConfig pf;
      pf.trees = 1;
      pf.base.n_min_leaf = 2;
      pf.base.n_features = 3;
      pf.identity_resample = true;
      pf.master_seed = 44;
      pf.threads = 1;
      const auto forest = PersonalizationForest::fit(ds, pf);
      PtConfig pt = pf.base;
      pt.seed = mix_seed(forest_tree_seed(44, 0), 0);
      const auto tree = PersonalizationTree::fit(ds, pt);
      for (std::size_t i = 0; i < ds.size(); ++i) CHECK(forest.prescribe(ds.row(i)) == tree.prescribe(ds.row(i)));
    }
  }

  TEST_CASE("same seed gives identical forests; thread count is irrelevant") {
    Rng rng(2);
    const Dataset ds = oracle::random_dataset(rng, 120, 4, 3, 10, 10, 8);
    PfConfig pf;
    pf.trees = 25;
    pf.base.n_min_leaf = 3;
    pf.master_seed = 9;
    pf.threads = 1;
    const auto a = PersonalizationForest::fit(ds, pf);
    pf.threads = 4;
    const auto b = PersonalizationForest::fit(ds, pf);
    CHECK(a == b);
    pf.trees = 30;
    const auto c = PersonalizationForest::fit(ds, pf);
    for (std::size_t j = 0; j < 25; ++j) CHECK(c.trees()[j] == a.trees()[j]);
  }

  TEST_CASE("votes are conserved") {
    Rng rng(3);
    const Dataset ds = oracle::random_dataset(rng, 60, 2, 2, 6, 10, 6);
    PfConfig pf;
    pf.trees = 5;
    pf.base.n_min_leaf = 2;
    const auto forest = PersonalizationForest::fit(ds, pf);
    for (std::size_t i = 0; i < ds.size(); ++i) {
      const auto v = forest.votes(ds.row(i));
      CHECK(std::accumulate(v.begin(), v.end(), std::size_t{0}) == 5);
      CHECK(forest.prescribe(ds.row(i)) == majority_vote(v));
    }
  }

  TEST_CASE("every tree separates a long line") {
    // Arm 1 is free on the left half and arm 2 on the right half.
    Dataset ds;
    ds.m = 2;
    ds.schema = FeatureSchema::numeric(1);
    ds.x.resize(40, 1);
    for (int i = 0; i < 40; ++i) {
      ds.x(i, 0) = i + 1;
      ds.t.push_back(1 + i % 2);
      ds.y.push_back((i < 20) == (i % 2 == 0) ? 0.0 : 5.0);
    }
    PfConfig pf;
    pf.trees = 10;
    pf.base.n_min_leaf = 1;
    pf.master_seed = 5;
    const auto forest = PersonalizationForest::fit(ds, pf);
    for (const auto& tree : forest.trees()) {
      CHECK(tree.prescribe(std::vector<double>{1.0}) == 1);
      CHECK(tree.prescribe(std::vector<double>{40.0}) == 2);
    }
  }

  TEST_CASE("json round trip") {
    Rng rng(4);
    const Dataset ds = oracle::random_dataset(rng, 50, 2, 2, 6, 10, 6);
    PfConfig pf;
    pf.trees = 4;
    pf.base.n_min_leaf = 2;
    const auto forest = PersonalizationForest::fit(ds, pf);
    const auto doc = forest.to_json();
    CHECK(doc.at("kind") == "pf");
    CHECK(PersonalizationForest::from_json(doc) == forest);
  }
}
