#include "pertree/tree.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace pertree {

void PtConfig::validate(std::size_t d) const {
  if (n_min_leaf < 1) throw Error(ErrorCode::kConfig, "pt: n_min_leaf must be >= 1");
  if (max_depth && *max_depth < 0) throw Error(ErrorCode::kConfig, "pt: max_depth must be >= 0");
  if (n_features > d) {
    throw Error(ErrorCode::kConfig, "pt: n_features exceeds the covariate dimension");
  }
}

namespace {

bool feasible_cut(const ArmStats& left, const ArmStats& right, const PtConfig& config) {
  if (config.scarce_mode) return true;  // definedness is checked by the caller
  std::size_t k_min = std::numeric_limits<std::size_t>::max();
  for (int t = 0; t < left.arms(); ++t) {
    k_min = std::min({k_min, left.counts[t], right.counts[t]});
  }
  return k_min >= config.n_min_leaf;
}

// Midpoint of a < b that still separates them after rounding.
double separating_midpoint(double a, double b) {
  const double mid = a + (b - a) / 2.0;
  return (mid >= a && mid < b) ? mid : a;
}

}  // namespace

std::optional<SplitCandidate> best_split(const Dataset& ds, std::span<const std::size_t> indices,
                                         std::span<const int> features, const PtConfig& config,
                                         const SweepObserver& observer) {
  const std::size_t k = indices.size();
  if (k < 2) return std::nullopt;
  const ImpurityRule rule = config.rule();

  ArmStats all(ds.m);
  for (std::size_t i : indices) all.add(ds.t[i], ds.y[i]);

  std::optional<SplitCandidate> best;
  double best_impurity = std::numeric_limits<double>::infinity();
  std::vector<std::size_t> order(indices.begin(), indices.end());
  for (int feature : features) {
    std::copy(indices.begin(), indices.end(), order.begin());
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return ds.x(a, feature) < ds.x(b, feature);
    });
    ArmStats left(ds.m);
    ArmStats right = all;
    for (std::size_t j = 0; j + 1 < k; ++j) {
      const std::size_t i = order[j];
      left.add(ds.t[i], ds.y[i]);
      right.remove(ds.t[i], ds.y[i]);
      if (observer) observer(feature, j + 1, left, right);
      const double here = ds.x(i, feature);
      const double next = ds.x(order[j + 1], feature);
      if (!(here < next)) continue;
      if (!feasible_cut(left, right, config)) continue;
      const auto il = try_impurity(left, rule);
      const auto ir = try_impurity(right, rule);
      if (!il || !ir) continue;
      const double total = *il + *ir;
      if (total < best_impurity) {
        best_impurity = total;
        best = SplitCandidate{feature, separating_midpoint(here, next), total, j + 1};
      }
    }
  }
  return best;
}

class TreeBuilder {
 public:
  TreeBuilder(const Dataset& ds, const PtConfig& config, PersonalizationTree& tree)
      : ds_(ds), config_(config), tree_(tree), rng_(config.seed) {
    const std::size_t d = ds.dims();
    n_features_ = config.n_features == 0 ? d : std::min(config.n_features, d);
  }

  int build(std::vector<std::size_t> indices, int depth) {
    const bool depth_left = !config_.max_depth || depth < *config_.max_depth;
    if (depth_left && indices.size() >= 2 && ds_.dims() > 0) {
      const auto features = draw_features();
      const auto cut = best_split(ds_, indices, features, config_);
      if (cut) {
        std::vector<std::size_t> left, right;
        for (std::size_t i : indices) {
          (ds_.x(i, cut->feature) <= cut->threshold ? left : right).push_back(i);
        }
        const int id = static_cast<int>(tree_.nodes_.size());
        tree_.nodes_.emplace_back();
        tree_.nodes_[id].feature = cut->feature;
        tree_.nodes_[id].threshold = cut->threshold;
        indices.clear();
        indices.shrink_to_fit();
        const int l = build(std::move(left), depth + 1);
        const int r = build(std::move(right), depth + 1);
        tree_.nodes_[id].left = l;
        tree_.nodes_[id].right = r;
        return id;
      }
    }
    return make_leaf(indices);
  }

 private:
  std::vector<int> draw_features() {
    const std::size_t d = ds_.dims();
    std::vector<int> out;
    if (n_features_ >= d) {
      out.resize(d);
      std::iota(out.begin(), out.end(), 0);
      return out;
    }
    for (std::size_t f : rng_.sample_without_replacement(d, n_features_)) {
      out.push_back(static_cast<int>(f));
    }
    return out;
  }

  int make_leaf(const std::vector<std::size_t>& indices) {
    ArmStats stats(ds_.m);
    for (std::size_t i : indices) stats.add(ds_.t[i], ds_.y[i]);
    const auto rx = best_arm(stats, config_.rule());
    if (!rx) {
      throw Error(ErrorCode::kUndefinedImpurity,
                  "pt: leaf with " + std::to_string(indices.size()) +
                      " samples has no eligible treatment");
    }
    TreeNode leaf;
    leaf.treatment = *rx;
    leaf.counts = stats.counts;
    leaf.means.resize(ds_.m, 0.0);
    for (int t = 0; t < ds_.m; ++t) {
      if (stats.counts[t] > 0) leaf.means[t] = stats.sums[t] / static_cast<double>(stats.counts[t]);
    }
    tree_.nodes_.push_back(std::move(leaf));
    return static_cast<int>(tree_.nodes_.size()) - 1;
  }

  const Dataset& ds_;
  const PtConfig& config_;
  PersonalizationTree& tree_;
  Rng rng_;
  std::size_t n_features_;
};

PersonalizationTree PersonalizationTree::fit(const Dataset& ds, const PtConfig& config) {
  std::vector<std::size_t> all(ds.size());
  std::iota(all.begin(), all.end(), std::size_t{0});
  return fit(ds, all, config);
}

PersonalizationTree PersonalizationTree::fit(const Dataset& ds,
                                             std::span<const std::size_t> indices,
                                             const PtConfig& config) {
  config.validate(ds.dims());
  if (indices.empty()) throw Error(ErrorCode::kDomain, "pt: cannot fit on an empty dataset");
  for (std::size_t i : indices) {
    if (i >= ds.size()) throw Error(ErrorCode::kBounds, "pt: sample index out of range");
  }
  if (!config.scarce_mode) {
    ArmStats root(ds.m);
    for (std::size_t i : indices) root.add(ds.t[i], ds.y[i]);
    for (int t = 1; t <= ds.m; ++t) {
      if (root.counts[t - 1] == 0) {
        throw Error(ErrorCode::kUndefinedImpurity,
                    "pt: treatment " + std::to_string(t) + " is absent from the training data");
      }
    }
  }
  PersonalizationTree tree;
  tree.m_ = ds.m;
  tree.d_ = ds.dims();
  tree.config_ = config;
  TreeBuilder builder(ds, config, tree);
  builder.build(std::vector<std::size_t>(indices.begin(), indices.end()), 0);
  // build() emits the root first.
  return tree;
}

int PersonalizationTree::leaf_for(std::span<const double> x) const {
  if (x.size() != d_) {
    throw Error(ErrorCode::kBounds, "pt: expected " + std::to_string(d_) +
                                        " covariates, got " + std::to_string(x.size()));
  }
  if (nodes_.empty()) throw Error(ErrorCode::kDomain, "pt: empty tree");
  int id = 0;
  while (!nodes_[id].is_leaf()) {
    const TreeNode& node = nodes_[id];
    id = x[node.feature] <= node.threshold ? node.left : node.right;
  }
  return id;
}

int PersonalizationTree::prescribe(std::span<const double> x) const {
  return nodes_[leaf_for(x)].treatment;
}

int PersonalizationTree::depth() const {
  if (nodes_.empty()) return 0;
  int best = 0;
  std::vector<std::pair<int, int>> stack{{0, 0}};
  while (!stack.empty()) {
    auto [id, dep] = stack.back();
    stack.pop_back();
    if (nodes_[id].is_leaf()) {
      best = std::max(best, dep);
    } else {
      stack.push_back({nodes_[id].left, dep + 1});
      stack.push_back({nodes_[id].right, dep + 1});
    }
  }
  return best;
}

std::size_t PersonalizationTree::leaf_count() const {
  return static_cast<std::size_t>(
      std::count_if(nodes_.begin(), nodes_.end(), [](const TreeNode& n) { return n.is_leaf(); }));
}

namespace {

nlohmann::json node_to_json(const std::vector<TreeNode>& nodes, int id) {
  const TreeNode& node = nodes[id];
  if (node.is_leaf()) {
    return {{"leaf", {{"treatment", node.treatment}, {"counts", node.counts}, {"means", node.means}}}};
  }
  return {{"split", {{"feature", node.feature}, {"threshold", node.threshold}}},
          {"left", node_to_json(nodes, node.left)},
          {"right", node_to_json(nodes, node.right)}};
}

[[noreturn]] void bad_document(const std::string& path, const std::string& what) {
  throw Error(ErrorCode::kParse, "model json " + path + ": " + what);
}

const nlohmann::json& member(const nlohmann::json& obj, const char* key, const std::string& path) {
  if (!obj.is_object() || !obj.contains(key)) bad_document(path, std::string("missing '") + key + "'");
  return obj.at(key);
}

template <class T>
T number(const nlohmann::json& v, const std::string& path) {
  if (!v.is_number()) bad_document(path, "expected a number");
  if constexpr (std::is_integral_v<T>) {
    if (!v.is_number_integer()) bad_document(path, "expected an integer");
  }
  return v.get<T>();
}

int node_from_json(const nlohmann::json& doc, const std::string& path, int m, std::size_t d,
                   std::vector<TreeNode>& nodes) {
  if (!doc.is_object()) bad_document(path, "node must be an object");
  const int id = static_cast<int>(nodes.size());
  nodes.emplace_back();
  if (doc.contains("leaf")) {
    const auto& leaf = doc.at("leaf");
    const std::string lp = path + "/leaf";
    const int t = number<int>(member(leaf, "treatment", lp), lp + "/treatment");
    if (t < 1 || t > m) {
      throw Error(ErrorCode::kDomain, "model json " + lp + "/treatment: label " +
                                          std::to_string(t) + " outside [1.." +
                                          std::to_string(m) + "]");
    }
    TreeNode node;
    node.treatment = t;
    const auto& counts = member(leaf, "counts", lp);
    const auto& means = member(leaf, "means", lp);
    if (!counts.is_array() || counts.size() != static_cast<std::size_t>(m)) {
      bad_document(lp + "/counts", "expected an array of length m");
    }
    if (!means.is_array() || means.size() != static_cast<std::size_t>(m)) {
      bad_document(lp + "/means", "expected an array of length m");
    }
    for (std::size_t k = 0; k < counts.size(); ++k) {
      node.counts.push_back(number<std::size_t>(counts[k], lp + "/counts/" + std::to_string(k)));
      node.means.push_back(number<double>(means[k], lp + "/means/" + std::to_string(k)));
    }
    nodes[id] = std::move(node);
    return id;
  }
  const auto& split = member(doc, "split", path);
  const std::string sp = path + "/split";
  const int feature = number<int>(member(split, "feature", sp), sp + "/feature");
  const double threshold = number<double>(member(split, "threshold", sp), sp + "/threshold");
  if (feature < 0 || static_cast<std::size_t>(feature) >= d) {
    bad_document(sp + "/feature", "feature index out of range");
  }
  if (!std::isfinite(threshold)) bad_document(sp + "/threshold", "threshold must be finite");
  const int l = node_from_json(member(doc, "left", path), path + "/left", m, d, nodes);
  const int r = node_from_json(member(doc, "right", path), path + "/right", m, d, nodes);
  nodes[id].feature = feature;
  nodes[id].threshold = threshold;
  nodes[id].left = l;
  nodes[id].right = r;
  return id;
}

}  // namespace

nlohmann::json PersonalizationTree::to_json() const {
  return {{"kind", "pt"}, {"m", m_}, {"d", d_}, {"root", node_to_json(nodes_, 0)}};
}

PersonalizationTree PersonalizationTree::from_json(const nlohmann::json& doc) {
  if (!doc.is_object()) bad_document("", "document must be an object");
  const auto& kind = member(doc, "kind", "");
  if (!kind.is_string() || kind.get<std::string>() != "pt") bad_document("/kind", "expected \"pt\"");
  PersonalizationTree tree;
  tree.m_ = number<int>(member(doc, "m", ""), "/m");
  tree.d_ = number<std::size_t>(member(doc, "d", ""), "/d");
  if (tree.m_ < 1) bad_document("/m", "treatment count must be >= 1");
  node_from_json(member(doc, "root", ""), "/root", tree.m_, tree.d_, tree.nodes_);
  return tree;
}

}  // namespace pertree
