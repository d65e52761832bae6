#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "pertree/risk.hpp"

namespace pertree {

struct PtConfig {
  std::size_t n_min_leaf = 1;
  std::optional<int> max_depth;  // nullopt: unbounded
  std::size_t n_features = 0;    // candidate features per node; 0 means all
  std::uint64_t seed = 0;
  bool scarce_mode = false;

  ImpurityRule rule() const {
    return {scarce_mode ? ImpurityMode::kScarce : ImpurityMode::kStrict, n_min_leaf};
  }
  void validate(std::size_t d) const;
};

// Node storage is flat; children are indices into PersonalizationTree::nodes.
struct TreeNode {
  // Internal nodes.
  int feature = -1;
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  // Leaves. means[t-1] is 0 when counts[t-1] is 0.
  int treatment = 0;
  std::vector<std::size_t> counts;
  std::vector<double> means;

  bool is_leaf() const { return left < 0; }
  bool operator==(const TreeNode&) const = default;
};

struct SplitCandidate {
  int feature = -1;
  double threshold = 0.0;
  double impurity = 0.0;      // left + right personalization impurity
  std::size_t left_size = 0;  // samples with x[feature] <= threshold
};

// Called at every sweep step with the running left/right statistics.
using SweepObserver =
    std::function<void(int feature, std::size_t left_size, const ArmStats& left, const ArmStats& right)>;

// Best axis-aligned cut of the subsample over `features`, scanning each
// feature in sorted order and moving one sample at a time from right to left.
// Cuts are only placed between strictly increasing values; the first cut with
// the smallest impurity sum wins. nullopt when no feasible cut exists.
std::optional<SplitCandidate> best_split(const Dataset& ds, std::span<const std::size_t> indices,
                                         std::span<const int> features, const PtConfig& config,
                                         const SweepObserver& observer = {});

class PersonalizationTree final : public Policy {
 public:
  PersonalizationTree() = default;

  // Greedy recursive partitioning of `ds` (the whole dataset).
  static PersonalizationTree fit(const Dataset& ds, const PtConfig& config);
  // Same, restricted to the rows in `indices` (duplicates allowed).
  static PersonalizationTree fit(const Dataset& ds, std::span<const std::size_t> indices,
                                 const PtConfig& config);

  int prescribe(std::span<const double> x) const override;
  int treatments() const override { return m_; }
  std::size_t dims() const { return d_; }

  // Index into nodes() of the leaf reached by x.
  int leaf_for(std::span<const double> x) const;
  const std::vector<TreeNode>& nodes() const { return nodes_; }
  const PtConfig& config() const { return config_; }
  int depth() const;
  std::size_t leaf_count() const;

  nlohmann::json to_json() const;
  static PersonalizationTree from_json(const nlohmann::json& doc);

  // Structural equality (nodes, m, d); the fitting config is not compared.
  bool operator==(const PersonalizationTree& other) const {
    return m_ == other.m_ && d_ == other.d_ && nodes_ == other.nodes_;
  }

 private:
  std::vector<TreeNode> nodes_;
  int m_ = 0;
  std::size_t d_ = 0;
  PtConfig config_;

  friend class TreeBuilder;
};

}  // namespace pertree
