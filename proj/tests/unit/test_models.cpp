#include <cmath>
#include <numeric>
#include <sstream>

#include "doctest.h"
#include "oracles.hpp"
#include "pertree/experiment.hpp"
#include "pertree/models.hpp"

using namespace pertree;

namespace {

Dataset smooth_sample(std::size_t n, std::uint64_t seed) {
  SyntheticSpec spec;
  spec.n = n;
  spec.d = 2;
  spec.m = 2;
  spec.seed = seed;
  return generate_synthetic(spec);
}

nlohmann::json small_params(const std::string& algo) {
  if (algo == "pt") return {{"n_min_leaf", 5}};
  if (algo == "pf") return {{"trees", 5}, {"n_min_leaf", 5}, {"seed", 3}};
  if (algo == "opt") return {{"depth", 2}, {"n_min_leaf", 5}, {"n_cuts", 4}};
  if (algo == "rc-knn") return {{"k", 5}};
  if (algo == "1va") return {{"regressor", "knn"}, {"k", 7}};
  return nlohmann::json::object();
}

nlohmann::json experiment_doc() {
  return {{"schema_version", 1},
          {"data", {{"synthetic", {{"d", 2}, {"m", 2}, {"outcome", {{"kind", "smooth"}, {"noise", 0.1}}}}}}},
          {"algorithms", {"pt", {{"name", "opt"}, {"params", {{"n_min_leaf", 50}}}}}},
          {"n_grid", {20, 40}},
          {"replications", 5},
          {"test", {{"protocol", "oracle"}, {"n_test", 200}}},
          {"seed", 17},
          {"threads", 2}};
}

}  // namespace

TEST_SUITE("models") {
  TEST_CASE("every algorithm trains, prescribes in range and round-trips") {
    const Dataset ds = smooth_sample(150, 1);
    for (const auto& algo : algorithm_names()) {
      CAPTURE(algo);
      const auto pol = train_policy(ds, algo, small_params(algo));
      CHECK(pol->treatments() == 2);
      const auto doc = policy_to_json(*pol);
      const auto back = policy_from_json(doc);
      CHECK(policy_to_json(*back) == doc);
      for (std::size_t i = 0; i < ds.size(); ++i) {
        const int t = pol->prescribe(ds.row(i));
        CHECK((t == 1 || t == 2));
        CHECK(back->prescribe(ds.row(i)) == t);
      }
    }
  }

  TEST_CASE("training errors") {
    const Dataset ds = smooth_sample(50, 2);
    try {
      train_policy(ds, "svm");
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::kUsage);
      CHECK(std::string(e.what()).find("1v1-b") != std::string::npos);
    }
    try {
      train_policy(ds, "pt", {{"n_min", 3}});
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::kConfig);
      CHECK(std::string(e.what()).find("n_min") != std::string::npos);
    }
    CHECK_THROWS_AS(train_policy(ds, "pt", {{"n_min_leaf", -1}}), Error);
    CHECK_THROWS_AS(policy_from_json({{"kind", "svm"}}), Error);
    CHECK_THROWS_AS(policy_from_json(nlohmann::json::array()), Error);
  }

  TEST_CASE("evaluation protocols") {
    Dataset ds = smooth_sample(200, 3);
    const auto pol = train_policy(ds, "pt", {{"n_min_leaf", 10}});
    const auto oracle = evaluate_policy(*pol, ds, {{"kind", "oracle"}});
    const auto direct = oracle_metrics(ds, *pol);
    CHECK(oracle.at("risk").get<double>() == direct.risk);
    CHECK(oracle.at("n_test") == 200);

    const auto greedy = evaluate_policy(*pol, ds, {{"kind", "greedy"}, {"n_test", 50}, {"seed", 4}});
    const auto mts = greedy_submatch(ds, 50, mahalanobis_metric(ds), 4);
    CHECK(greedy.at("risk").get<double>() == matched_risk(mts, *pol));
    CHECK(greedy.at("n_test") == 50);

    const auto optimal = evaluate_policy(*pol, ds, {{"kind", "optimal"}, {"n_pair", 10}});
    CHECK(optimal.at("n_test") == 20);

    ds.q.reset();
    CHECK_THROWS_AS(evaluate_policy(*pol, ds, {{"kind", "ipw"}}), Error);
    ds.q = std::vector<double>(ds.size(), 0.5);
    const auto ipw = evaluate_policy(*pol, ds, {{"kind", "ipw"}});
    CHECK(ipw.at("risk").get<double>() == ipw_risk(ds, *pol));
    CHECK(ipw.at("p1").is_null());
    CHECK_THROWS_AS(evaluate_policy(*pol, ds, {{"kind", "bootstrap"}}), Error);
    CHECK_THROWS_AS(evaluate_policy(*pol, ds, {{"kind", "optimal"}}), Error);
  }

  TEST_CASE("undefined coefficients serialize as null") {
    Dataset ds = smooth_sample(20, 5);
    ds.cf->setConstant(1.0);
    for (double& y : ds.y) y = 1.0;
    const FunctionPolicy one(2, [](std::span<const double>) { return 1; });
    const auto r = evaluate_policy(one, ds, {{"kind", "oracle"}});
    CHECK(r.at("p1").is_null());
    CHECK(r.at("p2").is_null());
    CHECK(r.at("risk") == 1.0);
  }

  TEST_CASE("experiment rows, order and failures") {
    const auto config = ExperimentConfig::from_json(experiment_doc());
    const auto rows = run_experiment(config);
    REQUIRE(rows.size() == 2 * 2 * 5);
    std::size_t k = 0;
    for (const std::string algo : {"pt", "opt"}) {
      for (std::size_t n : {20, 40}) {
        for (std::size_t rep = 1; rep <= 5; ++rep, ++k) {
          CHECK(rows[k].algo == algo);
          CHECK(rows[k].n == n);
          CHECK(rows[k].replication == rep);
          // 4 leaves * 2 arms * 50 exceed every n in the grid.
          CHECK(std::isnan(rows[k].risk) == (algo == "opt"));
        }
      }
    }
    std::ostringstream csv;
    write_experiment_csv(rows, csv);
    CHECK(csv.str().rfind("algo,n,replication,risk,p1,p2\n", 0) == 0);
  }

  TEST_CASE("experiment rows are reproducible from their seeds") {
    auto doc = experiment_doc();
    doc["algorithms"] = {"pt"};
    doc["replications"] = 2;
    const auto rows = run_experiment(ExperimentConfig::from_json(doc));
    doc["threads"] = 1;
    const auto serial = run_experiment(ExperimentConfig::from_json(doc));
    REQUIRE(rows.size() == serial.size());
    for (std::size_t k = 0; k < rows.size(); ++k) CHECK(rows[k].risk == serial[k].risk);

    for (const auto& row : rows) {
      const std::uint64_t seed = mix_seed(mix_seed(17, row.n), row.replication - 1);
      const Dataset pool = smooth_sample(row.n + 200, mix_seed(seed, 0));
      std::vector<std::size_t> train(row.n), test(200);
      std::iota(train.begin(), train.end(), std::size_t{0});
      std::iota(test.begin(), test.end(), row.n);
      const auto pol = train_policy(split(pool, train), "pt", {{"seed", mix_seed(seed, 2)}});
      CHECK(oracle_metrics(split(pool, test), *pol).risk == row.risk);
    }
  }

  TEST_CASE("submatching experiments keep matched subjects out of training") {
    auto doc = experiment_doc();
    doc["algorithms"] = {"rc-ols"};
    doc["replications"] = 2;
    doc["test"] = {{"protocol", "greedy"}, {"n_test", 30}};
    const auto rows = run_experiment(ExperimentConfig::from_json(doc));
    REQUIRE(rows.size() == 4);
    for (const auto& row : rows) CHECK(std::isfinite(row.risk));
  }

  TEST_CASE("experiment config validation") {
    auto doc = experiment_doc();
    doc["n_grid"] = {40, 20};
    CHECK_THROWS_AS(ExperimentConfig::from_json(doc).validate(), Error);
    doc = experiment_doc();
    doc["algorithms"] = {"svm"};
    CHECK_THROWS_AS(ExperimentConfig::from_json(doc).validate(), Error);
    doc = experiment_doc();
    doc["schema_version"] = 2;
    CHECK_THROWS_AS(ExperimentConfig::from_json(doc), Error);
  }
}
