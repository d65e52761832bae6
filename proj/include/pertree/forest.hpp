#pragma once

#include <vector>

#include "pertree/tree.hpp"

namespace pertree {

struct PfConfig {
  std::size_t trees = 500;
  // n_features == 0 resolves to ceil(sqrt(d)) at fit time.
  PtConfig base = [] {
    PtConfig c;
    c.n_min_leaf = 10;
    return c;
  }();
  std::uint64_t master_seed = 0;
  int threads = 0;  // 0: PERTREE_THREADS or hardware concurrency
  // Test hook: every tree sees the original rows instead of a resample.
  bool identity_resample = false;
};

// Seed for tree j; independent of the number of trees.
std::uint64_t forest_tree_seed(std::uint64_t master_seed, std::size_t tree);

// Bagged personalization trees; prescribes the most-voted treatment.
class PersonalizationForest final : public Policy {
 public:
  PersonalizationForest() = default;
  explicit PersonalizationForest(std::vector<PersonalizationTree> trees);

  static PersonalizationForest fit(const Dataset& ds, const PfConfig& config);

  int prescribe(std::span<const double> x) const override;
  int treatments() const override { return m_; }
  std::vector<std::size_t> votes(std::span<const double> x) const;
  const std::vector<PersonalizationTree>& trees() const { return trees_; }

  nlohmann::json to_json() const;
  static PersonalizationForest from_json(const nlohmann::json& doc);

  bool operator==(const PersonalizationForest& other) const { return trees_ == other.trees_; }

 private:
  std::vector<PersonalizationTree> trees_;
  int m_ = 0;
  std::size_t d_ = 0;
};

// Index of the largest vote (lowest treatment on ties), as a 1-based label.
int majority_vote(std::span<const std::size_t> votes);

}  // namespace pertree
