#pragma once

#include <memory>
#include <string>
#include <vector>

#include "json.hpp"
#include "pertree/eval.hpp"
#include "pertree/risk.hpp"

namespace pertree {

// pt, pf, opt, rc-ols, rc-knn, 1va, 1v1-a, 1v1-b
const std::vector<std::string>& algorithm_names();

// Trains `algo` with JSON parameters (unknown keys are rejected). Defaults:
//   pt     n_min_leaf 20, max_depth none, n_features all, scarce_mode false
//   pf     trees 500, n_min_leaf 10, max_depth none, n_features ceil(sqrt d)
//   opt    depth "auto" (2, or 3 when n >= 300), n_min_leaf 20, n_cuts 10,
//          n_features all, time_limit 3600
//   rc-knn k floor(sqrt n_t)
//   1va, 1v1-a, 1v1-b  regressor "ols" | "knn", k
// Every algorithm takes "seed"; pf takes "threads".
std::shared_ptr<Policy> train_policy(const Dataset& ds, const std::string& algo,
                                     const nlohmann::json& params = nlohmann::json::object());

nlohmann::json policy_to_json(const Policy& policy);
std::shared_ptr<Policy> policy_from_json(const nlohmann::json& doc);

// Protocols:
//   {"kind":"oracle"}                          needs counterfactuals
//   {"kind":"ipw"}                             needs propensities
//   {"kind":"greedy","n_test":k,"seed":s}      submatching on ds
//   {"kind":"optimal","n_pair":k}              two treatments only
// Returns {"protocol","n_test","risk","p1","p2"}; undefined values are null.
nlohmann::json evaluate_policy(const Policy& policy, const Dataset& ds, const nlohmann::json& protocol);

// Submatched test set for a protocol of kind greedy or optimal.
MatchedTestSet submatch_for_protocol(const Dataset& ds, const nlohmann::json& protocol);

}  // namespace pertree
