#pragma once

#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "json.hpp"
#include "pertree/risk.hpp"

namespace pertree {

struct OptConfig {
  int depth = 2;
  std::size_t n_min_leaf = 20;
  std::size_t n_features = 0;  // 0 means all features
  std::size_t n_cuts = 10;
  double time_limit = std::numeric_limits<double>::infinity();  // seconds
  std::uint64_t seed = 0;
  // Memo entries kept by solve_exact before least-recently-used eviction.
  std::size_t cache_entries = std::size_t{1} << 20;

  void validate() const;
};

// Complete binary tree in heap order: internal nodes 1 .. 2^depth - 1,
// leaves 2^depth .. 2^(depth+1) - 1; node 2q is the left child of q.
class TreeSkeleton {
 public:
  struct Ancestor {
    int node;
    int direction;  // +1 if the path takes the right branch at `node`, else -1
  };

  explicit TreeSkeleton(int depth);

  int depth() const { return depth_; }
  int internal_count() const { return (1 << depth_) - 1; }
  int leaf_count() const { return 1 << depth_; }
  int first_leaf() const { return 1 << depth_; }
  int last_leaf() const { return (1 << (depth_ + 1)) - 1; }
  bool is_leaf(int p) const { return p >= first_leaf(); }
  // Root-first path to `leaf`.
  std::vector<Ancestor> ancestors(int leaf) const;

 private:
  int depth_;
};

struct Cut {
  int feature = 0;
  double threshold = 0.0;

  bool goes_left(std::span<const double> x) const { return x[feature] <= threshold; }
  bool operator==(const Cut&) const = default;
};

// Candidate cuts per internal node; cuts[p - 1] belongs to node p.
struct CutMenu {
  std::vector<std::vector<Cut>> cuts;

  const std::vector<Cut>& at(int p) const { return cuts.at(static_cast<std::size_t>(p - 1)); }
};

// Grid positions {1, s, 2s, ..., n-1} with s = ceil((n-1)/n_cuts), 1-based.
std::vector<std::size_t> cut_positions(std::size_t n, std::size_t n_cuts);

// Per internal node: draw n_features features (seeded), then for each grid
// position j take the midpoint between the j-th smallest value and the next
// larger distinct value. Throws kEmptyMenu when a node gets no cut.
CutMenu build_cut_menu(const Dataset& ds, const TreeSkeleton& skeleton, const OptConfig& config);

// A complete tree: one menu cut per internal node, one treatment per leaf.
struct OptAssignment {
  std::vector<std::size_t> cut_index;  // [p - 1] for internal p
  std::vector<int> treatments;         // [p - first_leaf] for leaf p

  bool operator==(const OptAssignment&) const = default;
};

std::vector<Cut> resolve_cuts(const CutMenu& menu, const OptAssignment& assignment);

// Leaf index (0-based, p - first_leaf) reached by x.
int route(const TreeSkeleton& skeleton, std::span<const Cut> cuts, std::span<const double> x);

// Outcomes shifted so the smallest is zero.
std::vector<double> shifted_outcomes(const Dataset& ds);

// Sum over leaves of (leaf size) * (mean shifted outcome of the leaf's
// treatment), or nullopt if some leaf has fewer than n_min_leaf samples of
// some treatment.
std::optional<double> evaluate_assignment(const Dataset& ds, const TreeSkeleton& skeleton,
                                          std::span<const Cut> cuts,
                                          std::span<const int> treatments,
                                          const OptConfig& config);

class OptimalTree final : public Policy {
 public:
  OptimalTree() = default;
  OptimalTree(int depth, std::vector<Cut> cuts, std::vector<int> treatments, int m, std::size_t d);

  int prescribe(std::span<const double> x) const override;
  int treatments() const override { return m_; }
  int depth() const { return depth_; }
  const std::vector<Cut>& cuts() const { return cuts_; }
  const std::vector<int>& leaf_treatments() const { return leaf_treatments_; }

  nlohmann::json to_json() const;
  static OptimalTree from_json(const nlohmann::json& doc);
  bool operator==(const OptimalTree&) const = default;

 private:
  int depth_ = 1;
  std::vector<Cut> cuts_;
  std::vector<int> leaf_treatments_;
  int m_ = 0;
  std::size_t d_ = 0;
};

struct OptResult {
  OptimalTree tree;
  OptAssignment assignment;
  double objective = 0.0;  // on shifted outcomes
  bool proven_optimal = false;
};

// Exact minimization of the summed leaf impurities over the menu by memoized
// recursion on (node, sample set), pruned by the incumbent. Ties resolve to
// the smallest cut indices in node order, then the lowest treatments. When
// the time limit expires the incumbent is returned with proven_optimal false.
OptResult solve_exact(const Dataset& ds, const TreeSkeleton& skeleton, const CutMenu& menu,
                      const OptConfig& config,
                      const std::optional<OptAssignment>& warm = std::nullopt);

// Warm start from a depth-limited greedy tree: its cuts are snapped to the
// nearest same-feature menu cut, shallow leaves are padded with uniformly
// drawn feasible menu cuts, and children inherit the leaf's treatment.
// nullopt when no feasible completion is found.
std::optional<OptAssignment> warm_start_from_pt(const Dataset& ds, const TreeSkeleton& skeleton,
                                                const CutMenu& menu, const OptConfig& config);

// Menu, warm start and exact solve in one call.
OptResult fit_optimal_tree(const Dataset& ds, const OptConfig& config);

}  // namespace pertree
