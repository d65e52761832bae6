#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "json.hpp"
#include "pertree/dataset.hpp"

namespace pertree {

struct AlgorithmSpec {
  std::string name;
  nlohmann::json params = nlohmann::json::object();
};

struct TestProtocol {
  std::string kind = "oracle";  // oracle | greedy | optimal
  std::size_t n_test = 1000;    // oracle and greedy
  std::size_t n_pair = 0;       // optimal
  // Extra synthetic subjects drawn beyond n for submatching protocols;
  // 0 means m * n_test (greedy) or 2 * n_pair (optimal).
  std::size_t pool_extra = 0;
};

// JSON form (schema_version 1):
// {
//   "schema_version": 1,
//   "data": {"benchmark": "warfarin-like"} | {"synthetic": <spec>} |
//           {"csv": {"path": ..., "treatment_col": ..., "outcome_col": ...,
//                    "counterfactuals": bool, "propensity_col": ...}},
//   "algorithms": ["pf", {"name": "pt", "params": {...}}, ...],
//   "n_grid": [100, 200], "replications": 5,
//   "test": {"protocol": "oracle", "n_test": 1000},
//   "seed": 0, "threads": 0, "output": "curve.csv"
// }
struct ExperimentConfig {
  nlohmann::json data;
  std::vector<AlgorithmSpec> algorithms;
  std::vector<std::size_t> n_grid;
  std::size_t replications = 1;
  TestProtocol test;
  std::uint64_t seed = 0;
  int threads = 0;
  std::string output;

  static ExperimentConfig from_json(const nlohmann::json& doc);
  void validate() const;
};

struct ExperimentRow {
  std::string algo;
  std::size_t n = 0;
  std::size_t replication = 0;  // 1-based
  double risk = 0.0;            // NaN when training failed on this draw
  double p1 = 0.0;              // NaN when undefined
  double p2 = 0.0;
};

// One row per (algorithm, n, replication), ordered by algorithm (config
// order), then n, then replication. Submatched subjects never enter training.
std::vector<ExperimentRow> run_experiment(const ExperimentConfig& config);

// Columns: algo, n, replication, risk, p1, p2.
void write_experiment_csv(const std::vector<ExperimentRow>& rows, std::ostream& out);

}  // namespace pertree
