#include "pertree/models.hpp"

#include <cmath>
#include <set>

#include "pertree/baselines.hpp"
#include "pertree/forest.hpp"
#include "pertree/opt.hpp"
#include "pertree/tree.hpp"

namespace pertree {
namespace {

// Typed access to a parameter object; leftover keys are an error.
class Params {
 public:
  Params(const nlohmann::json& doc, std::string owner) : doc_(doc), owner_(std::move(owner)) {
    if (!doc_.is_null() && !doc_.is_object()) {
      throw Error(ErrorCode::kConfig, owner_ + ": parameters must be a JSON object");
    }
  }

  template <class T>
  T get(const std::string& key, T fallback) {
    if (!has(key)) return fallback;
    used_.insert(key);
    try {
      return doc_.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
      throw Error(ErrorCode::kConfig, owner_ + ": invalid value for '" + key + "'");
    }
  }

  std::size_t count(const std::string& key, std::size_t fallback) {
    const bool ok = !has(key) || doc_.at(key).is_number_unsigned() ||
                    (doc_.at(key).is_number_integer() && doc_.at(key).get<std::int64_t>() >= 0);
    if (!ok) {
      throw Error(ErrorCode::kConfig, owner_ + ": '" + key + "' must be a non-negative integer");
    }
    return get<std::size_t>(key, fallback);
  }

  bool has(const std::string& key) const { return doc_.is_object() && doc_.contains(key); }
  const nlohmann::json& raw(const std::string& key) {
    used_.insert(key);
    return doc_.at(key);
  }

  void finish() const {
    if (!doc_.is_object()) return;
    for (const auto& [key, value] : doc_.items()) {
      if (!used_.contains(key)) throw Error(ErrorCode::kConfig, owner_ + ": unknown parameter '" + key + "'");
    }
  }

 private:
  const nlohmann::json& doc_;
  std::string owner_;
  std::set<std::string> used_;
};

std::optional<int> optional_depth(Params& p) {
  if (!p.has("max_depth") || p.raw("max_depth").is_null()) return std::nullopt;
  const int depth = p.get<int>("max_depth", 0);
  if (depth < 0) throw Error(ErrorCode::kConfig, "max_depth must be >= 0");
  return depth;
}

std::shared_ptr<Policy> train_pt(const Dataset& ds, Params& p) {
  PtConfig c;
  c.n_min_leaf = p.count("n_min_leaf", 20);
  c.max_depth = optional_depth(p);
  c.n_features = p.count("n_features", 0);
  c.seed = p.get<std::uint64_t>("seed", 0);
  c.scarce_mode = p.get<bool>("scarce_mode", false);
  p.finish();
  return std::make_shared<PersonalizationTree>(PersonalizationTree::fit(ds, c));
}

std::shared_ptr<Policy> train_pf(const Dataset& ds, Params& p) {
  PfConfig c;
  c.trees = p.count("trees", 500);
  c.base.n_min_leaf = p.count("n_min_leaf", 10);
  c.base.max_depth = optional_depth(p);
  c.base.n_features = p.count("n_features", 0);
  c.base.scarce_mode = p.get<bool>("scarce_mode", false);
  c.master_seed = p.get<std::uint64_t>("seed", 0);
  c.threads = p.get<int>("threads", 0);
  p.finish();
  return std::make_shared<PersonalizationForest>(PersonalizationForest::fit(ds, c));
}

std::shared_ptr<Policy> train_opt(const Dataset& ds, Params& p) {
  OptConfig c;
  if (p.has("depth") && p.raw("depth").is_string()) {
    if (p.raw("depth").get<std::string>() != "auto") throw Error(ErrorCode::kConfig, "opt: depth must be an integer or \"auto\"");
    c.depth = ds.size() >= 300 ? 3 : 2;
  } else {
    c.depth = p.get<int>("depth", ds.size() >= 300 ? 3 : 2);
  }
  c.n_min_leaf = p.count("n_min_leaf", 20);
  c.n_features = p.count("n_features", 0);
  c.n_cuts = p.count("n_cuts", 10);
  c.time_limit = p.get<double>("time_limit", 3600.0);
  c.seed = p.get<std::uint64_t>("seed", 0);
  c.cache_entries = p.count("cache_entries", c.cache_entries);
  p.finish();
  auto result = fit_optimal_tree(ds, c);
  if (!result.proven_optimal) {
    warn("opt: time limit reached; returning the warm-start tree without a proof of optimality");
  }
  return std::make_shared<OptimalTree>(std::move(result.tree));
}

RegressorFactory cate_factory(Params& p) {
  const auto family = p.get<std::string>("regressor", "ols");
  nlohmann::json params = nlohmann::json::object();
  if (p.has("k")) params["k"] = p.raw("k");
  return regressor_factory(family, params);
}

}  // namespace

const std::vector<std::string>& algorithm_names() {
  static const std::vector<std::string> names{"pt", "pf", "opt", "rc-ols", "rc-knn", "1va", "1v1-a", "1v1-b"};
  return names;
}

std::shared_ptr<Policy> train_policy(const Dataset& ds, const std::string& algo, const nlohmann::json& params) {
  ds.validate();
  Params p(params, algo);
  if (algo == "pt") return train_pt(ds, p);
  if (algo == "pf") return train_pf(ds, p);
  if (algo == "opt") return train_opt(ds, p);
  if (algo == "rc-ols" || algo == "rc-knn") {
    nlohmann::json reg = nlohmann::json::object();
    if (algo == "rc-knn" && p.has("k")) reg["k"] = p.raw("k");
    p.get<std::uint64_t>("seed", 0);
    p.finish();
    return std::make_shared<RcPolicy>(fit_rc(ds, algo.substr(3), reg));
  }
  if (algo == "1va" || algo == "1v1-a" || algo == "1v1-b") {
    const auto factory = cate_factory(p);
    p.get<std::uint64_t>("seed", 0);
    p.finish();
    if (algo == "1va") return std::make_shared<OneVsAllPolicy>(fit_1va(ds, factory));
    return std::make_shared<OneVsOnePolicy>(
        fit_1v1(ds, factory, algo == "1v1-a" ? OneVsOneRule::kA : OneVsOneRule::kB));
  }
  std::string valid;
  for (const auto& n : algorithm_names()) valid += (valid.empty() ? "" : ", ") + n;
  throw Error(ErrorCode::kUsage, "unknown algorithm '" + algo + "' (valid: " + valid + ")");
}

nlohmann::json policy_to_json(const Policy& policy) {
  if (auto* p = dynamic_cast<const PersonalizationTree*>(&policy)) return p->to_json();
  if (auto* p = dynamic_cast<const PersonalizationForest*>(&policy)) return p->to_json();
  if (auto* p = dynamic_cast<const OptimalTree*>(&policy)) return p->to_json();
  if (auto* p = dynamic_cast<const RcPolicy*>(&policy)) return p->to_json();
  if (auto* p = dynamic_cast<const OneVsAllPolicy*>(&policy)) return p->to_json();
  if (auto* p = dynamic_cast<const OneVsOnePolicy*>(&policy)) return p->to_json();
  throw Error(ErrorCode::kUnsupported, "policy type has no JSON form");
}

std::shared_ptr<Policy> policy_from_json(const nlohmann::json& doc) {
  if (!doc.is_object() || !doc.contains("kind") || !doc.at("kind").is_string()) {
    throw Error(ErrorCode::kParse, "model json: missing string field 'kind'");
  }
  const auto kind = doc.at("kind").get<std::string>();
  if (kind == "pt") return std::make_shared<PersonalizationTree>(PersonalizationTree::from_json(doc));
  if (kind == "pf") return std::make_shared<PersonalizationForest>(PersonalizationForest::from_json(doc));
  if (kind == "opt") return std::make_shared<OptimalTree>(OptimalTree::from_json(doc));
  if (kind == "rc-ols" || kind == "rc-knn") return std::make_shared<RcPolicy>(RcPolicy::from_json(doc));
  if (kind == "1va") return std::make_shared<OneVsAllPolicy>(OneVsAllPolicy::from_json(doc));
  if (kind == "1v1-a" || kind == "1v1-b") return std::make_shared<OneVsOnePolicy>(OneVsOnePolicy::from_json(doc));
  throw Error(ErrorCode::kParse, "model json: unknown kind '" + kind + "'");
}

namespace {

nlohmann::json coefficient_json(const Coefficient& c) {
  return c.defined && std::isfinite(c.value) ? nlohmann::json(c.value) : nlohmann::json(nullptr);
}

}  // namespace

MatchedTestSet submatch_for_protocol(const Dataset& ds, const nlohmann::json& protocol) {
  Params p(protocol, "protocol");
  const auto kind = p.get<std::string>("kind", "");
  if (kind == "greedy") {
    const std::size_t n_test = p.count("n_test", ds.size());
    const auto seed = p.get<std::uint64_t>("seed", 0);
    p.finish();
    return greedy_submatch(ds, n_test, mahalanobis_metric(ds), seed);
  }
  if (kind == "optimal") {
    if (!p.has("n_pair")) throw Error(ErrorCode::kConfig, "protocol optimal: 'n_pair' is required");
    const std::size_t n_pair = p.count("n_pair", 0);
    p.finish();
    return optimal_submatch(ds, n_pair, mahalanobis_metric(ds));
  }
  throw Error(ErrorCode::kConfig, "protocol: submatching kind must be greedy or optimal, got '" + kind + "'");
}

nlohmann::json evaluate_policy(const Policy& policy, const Dataset& ds, const nlohmann::json& protocol) {
  const auto kind = protocol.is_object() ? protocol.value("kind", std::string()) : std::string();
  nlohmann::json out{{"protocol", kind}};
  if (kind == "oracle") {
    Params(protocol, "protocol").get<std::string>("kind", "");
    const auto metrics = oracle_metrics(ds, policy);
    out["n_test"] = ds.size();
    out["risk"] = metrics.risk;
    out["p1"] = coefficient_json(metrics.p1);
    out["p2"] = coefficient_json(metrics.p2);
    return out;
  }
  if (kind == "ipw") {
    out["n_test"] = ds.size();
    out["risk"] = ipw_risk(ds, policy);
    out["p1"] = nullptr;
    out["p2"] = nullptr;
    return out;
  }
  if (kind == "greedy" || kind == "optimal") {
    const auto mts = submatch_for_protocol(ds, protocol);
    out["n_test"] = mts.size();
    out["risk"] = matched_risk(mts, policy);
    out["p1"] = coefficient_json(p1_hat(mts, policy));
    out["p2"] = coefficient_json(p2_hat(mts, policy));
    return out;
  }
  throw Error(ErrorCode::kConfig, "protocol: kind must be oracle, ipw, greedy or optimal");
}

}  // namespace pertree
