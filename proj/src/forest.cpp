#include "pertree/forest.hpp"

#include <cmath>
#include <numeric>

namespace pertree {
namespace {

constexpr int kMaxResampleRetries = 100;

}  // namespace

std::uint64_t forest_tree_seed(std::uint64_t master_seed, std::size_t tree) {
  return mix_seed(master_seed, tree);
}

int majority_vote(std::span<const std::size_t> votes) {
  std::size_t best = 0;
  for (std::size_t t = 1; t < votes.size(); ++t) {
    if (votes[t] > votes[best]) best = t;
  }
  return static_cast<int>(best) + 1;
}

PersonalizationForest::PersonalizationForest(std::vector<PersonalizationTree> trees)
    : trees_(std::move(trees)) {
  if (trees_.empty()) throw Error(ErrorCode::kDomain, "pf: a forest needs at least one tree");
  m_ = trees_.front().treatments();
  d_ = trees_.front().dims();
  for (const auto& tree : trees_) {
    if (tree.treatments() != m_ || tree.dims() != d_) {
      throw Error(ErrorCode::kDomain, "pf: trees disagree on treatment count or dimension");
    }
  }
}

PersonalizationForest PersonalizationForest::fit(const Dataset& ds, const PfConfig& config) {
  if (config.trees < 1) throw Error(ErrorCode::kConfig, "pf: trees must be >= 1");
  if (ds.size() == 0) throw Error(ErrorCode::kDomain, "pf: cannot fit on an empty dataset");
  PtConfig base = config.base;
  if (base.n_features == 0) {
    base.n_features = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(ds.dims()))));
  }
  base.validate(ds.dims());

  std::vector<PersonalizationTree> trees(config.trees);
  parallel_for(config.trees, resolve_thread_count(config.threads), [&](std::size_t j) {
    const std::uint64_t seed = forest_tree_seed(config.master_seed, j);
    PtConfig tree_config = base;
    tree_config.seed = mix_seed(seed, 0);
    if (config.identity_resample) {
      trees[j] = PersonalizationTree::fit(ds, tree_config);
      return;
    }
    // Resamples missing a treatment entirely are redrawn with a derived seed.
    for (int attempt = 0; attempt <= kMaxResampleRetries; ++attempt) {
      const auto rows = bootstrap_indices(ds.size(), mix_seed(seed, 1 + attempt));
      std::vector<std::size_t> seen(ds.m, 0);
      for (std::size_t i : rows) ++seen[ds.t[i] - 1];
      if (std::find(seen.begin(), seen.end(), 0) != seen.end()) continue;
      trees[j] = PersonalizationTree::fit(ds, rows, tree_config);
      return;
    }
    throw Error(ErrorCode::kUndefinedImpurity,
                "pf: tree " + std::to_string(j) + ": every bootstrap resample missed a treatment");
  });
  return PersonalizationForest(std::move(trees));
}

std::vector<std::size_t> PersonalizationForest::votes(std::span<const double> x) const {
  if (x.size() != d_) {
    throw Error(ErrorCode::kBounds, "pf: expected " + std::to_string(d_) + " covariates, got " +
                                        std::to_string(x.size()));
  }
  std::vector<std::size_t> out(m_, 0);
  for (const auto& tree : trees_) ++out[tree.prescribe(x) - 1];
  return out;
}

int PersonalizationForest::prescribe(std::span<const double> x) const {
  return majority_vote(votes(x));
}

nlohmann::json PersonalizationForest::to_json() const {
  nlohmann::json trees = nlohmann::json::array();
  for (const auto& tree : trees_) trees.push_back(tree.to_json());
  return {{"kind", "pf"}, {"trees", std::move(trees)}};
}

PersonalizationForest PersonalizationForest::from_json(const nlohmann::json& doc) {
  if (!doc.is_object() || doc.value("kind", std::string()) != "pf") {
    throw Error(ErrorCode::kParse, "model json /kind: expected \"pf\"");
  }
  if (!doc.contains("trees") || !doc.at("trees").is_array()) {
    throw Error(ErrorCode::kParse, "model json: missing 'trees' array");
  }
  std::vector<PersonalizationTree> trees;
  std::size_t k = 0;
  for (const auto& t : doc.at("trees")) {
    try {
      trees.push_back(PersonalizationTree::from_json(t));
    } catch (const Error& e) {
      throw Error(e.code(), std::string(e.what()) + " (in /trees/" + std::to_string(k) + ")");
    }
    ++k;
  }
  return PersonalizationForest(std::move(trees));
}

}  // namespace pertree
