#include "pertree/opt.hpp"

#include <algorithm>
#include <chrono>
#include <functional>
#include <cmath>
#include <list>
#include <numeric>
#include <unordered_map>

#include "pertree/tree.hpp"

namespace pertree {

void OptConfig::validate() const {
  if (depth < 1 || depth > 12) throw Error(ErrorCode::kConfig, "opt: depth must be in [1, 12]");
  if (n_cuts < 1) throw Error(ErrorCode::kConfig, "opt: n_cuts must be >= 1");
  if (n_min_leaf < 1) throw Error(ErrorCode::kConfig, "opt: n_min_leaf must be >= 1");
  if (!(time_limit > 0)) throw Error(ErrorCode::kConfig, "opt: time_limit must be positive");
}

TreeSkeleton::TreeSkeleton(int depth) : depth_(depth) {
  if (depth < 1 || depth > 12) throw Error(ErrorCode::kConfig, "opt: depth must be in [1, 12]");
}

std::vector<TreeSkeleton::Ancestor> TreeSkeleton::ancestors(int leaf) const {
  if (!is_leaf(leaf) || leaf > last_leaf()) {
    throw Error(ErrorCode::kBounds, "skeleton: node " + std::to_string(leaf) + " is not a leaf");
  }
  std::vector<Ancestor> path(depth_);
  int p = leaf;
  for (int k = depth_ - 1; k >= 0; --k) {
    path[k] = {p / 2, (p % 2 == 1) ? +1 : -1};
    p /= 2;
  }
  return path;
}

std::vector<std::size_t> cut_positions(std::size_t n, std::size_t n_cuts) {
  std::vector<std::size_t> out;
  if (n < 2 || n_cuts == 0) return out;
  const std::size_t last = n - 1;
  const std::size_t step = (last + n_cuts - 1) / n_cuts;
  out.push_back(1);
  for (std::size_t j = step; j <= last; j += step) out.push_back(j);
  out.push_back(last);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

namespace {

double separating_midpoint(double a, double b) {
  const double mid = a + (b - a) / 2.0;
  return (mid >= a && mid < b) ? mid : a;
}

std::vector<int> draw_node_features(Rng& rng, std::size_t d, std::size_t n_features) {
  std::vector<int> out;
  if (n_features == 0 || n_features >= d) {
    out.resize(d);
    std::iota(out.begin(), out.end(), 0);
    return out;
  }
  for (std::size_t f : rng.sample_without_replacement(d, n_features)) out.push_back(static_cast<int>(f));
  return out;
}

void check_treatments(std::span<const int> treatments, int m) {
  for (int t : treatments) {
    if (t < 1 || t > m) throw Error(ErrorCode::kBounds, "opt: leaf treatment outside [1..m]");
  }
}

}  // namespace

CutMenu build_cut_menu(const Dataset& ds, const TreeSkeleton& skeleton, const OptConfig& config) {
  config.validate();
  const std::size_t n = ds.size();
  const std::size_t d = ds.dims();
  if (n < 2) throw Error(ErrorCode::kEmptyMenu, "opt: need at least two samples to build cuts");
  if (config.n_features > d) throw Error(ErrorCode::kConfig, "opt: n_features exceeds dimension");
  std::vector<std::vector<double>> sorted(d);
  auto sorted_column = [&](int f) -> const std::vector<double>& {
    auto& col = sorted[f];
    if (col.empty()) {
      col.resize(n);
      for (std::size_t i = 0; i < n; ++i) col[i] = ds.x(i, f);
      std::sort(col.begin(), col.end());
    }
    return col;
  };
  const auto positions = cut_positions(n, config.n_cuts);
  Rng rng(config.seed);
  CutMenu menu;
  menu.cuts.resize(skeleton.internal_count());
  for (int p = 1; p <= skeleton.internal_count(); ++p) {
    auto& cuts = menu.cuts[p - 1];
    for (int f : draw_node_features(rng, d, config.n_features)) {
      const auto& col = sorted_column(f);
      for (std::size_t j : positions) {
        const double a = col[j - 1];
        auto next = std::upper_bound(col.begin(), col.end(), a);
        if (next == col.end()) continue;
        const Cut cut{f, separating_midpoint(a, *next)};
        if (std::find(cuts.begin(), cuts.end(), cut) == cuts.end()) cuts.push_back(cut);
      }
    }
    if (cuts.empty()) {
      throw Error(ErrorCode::kEmptyMenu,
                  "opt: every candidate feature is constant at node " + std::to_string(p));
    }
  }
  return menu;
}

std::vector<Cut> resolve_cuts(const CutMenu& menu, const OptAssignment& assignment) {
  if (assignment.cut_index.size() != menu.cuts.size()) {
    throw Error(ErrorCode::kBounds, "opt: assignment does not match the menu's node count");
  }
  std::vector<Cut> cuts;
  for (std::size_t k = 0; k < menu.cuts.size(); ++k) {
    if (assignment.cut_index[k] >= menu.cuts[k].size()) {
      throw Error(ErrorCode::kBounds, "opt: cut index out of range at node " + std::to_string(k + 1));
    }
    cuts.push_back(menu.cuts[k][assignment.cut_index[k]]);
  }
  return cuts;
}

int route(const TreeSkeleton& skeleton, std::span<const Cut> cuts, std::span<const double> x) {
  int p = 1;
  for (int k = 0; k < skeleton.depth(); ++k) p = 2 * p + (cuts[p - 1].goes_left(x) ? 0 : 1);
  return p - skeleton.first_leaf();
}

std::vector<double> shifted_outcomes(const Dataset& ds) {
  std::vector<double> out(ds.y);
  if (out.empty()) return out;
  const double lo = *std::min_element(out.begin(), out.end());
  for (auto& v : out) v -= lo;
  return out;
}

namespace {

// count * (sum / count) for the given arm; the solver and the evaluator share
// this so their objectives agree to the last bit.
double leaf_value(const ArmStats& stats, int t) {
  return static_cast<double>(stats.total) *
         (stats.sums[t - 1] / static_cast<double>(stats.counts[t - 1]));
}

bool leaf_feasible(const ArmStats& stats, std::size_t n_min_leaf) {
  return std::all_of(stats.counts.begin(), stats.counts.end(),
                     [&](std::size_t c) { return c >= n_min_leaf; });
}

std::pair<double, int> best_leaf(const ArmStats& stats) {
  double best = std::numeric_limits<double>::infinity();
  int arm = 1;
  for (int t = 1; t <= stats.arms(); ++t) {
    const double v = leaf_value(stats, t);
    if (v < best) {
      best = v;
      arm = t;
    }
  }
  return {best, arm};
}

// Sums leaf values pairwise up the heap, matching the solver's recursion.
double heap_sum(std::span<const double> leaf_values) {
  std::vector<double> level(leaf_values.begin(), leaf_values.end());
  while (level.size() > 1) {
    std::vector<double> up(level.size() / 2);
    for (std::size_t k = 0; k < up.size(); ++k) up[k] = level[2 * k] + level[2 * k + 1];
    level = std::move(up);
  }
  return level.front();
}

}  // namespace

std::optional<double> evaluate_assignment(const Dataset& ds, const TreeSkeleton& skeleton,
                                          std::span<const Cut> cuts,
                                          std::span<const int> treatments,
                                          const OptConfig& config) {
  if (cuts.size() != static_cast<std::size_t>(skeleton.internal_count()) ||
      treatments.size() != static_cast<std::size_t>(skeleton.leaf_count())) {
    throw Error(ErrorCode::kBounds, "opt: assignment shape does not match the skeleton");
  }
  check_treatments(treatments, ds.m);
  const auto ybar = shifted_outcomes(ds);
  std::vector<ArmStats> leaves(skeleton.leaf_count(), ArmStats(ds.m));
  for (std::size_t i = 0; i < ds.size(); ++i) {
    leaves[route(skeleton, cuts, ds.row(i))].add(ds.t[i], ybar[i]);
  }
  std::vector<double> values(leaves.size());
  for (std::size_t l = 0; l < leaves.size(); ++l) {
    if (!leaf_feasible(leaves[l], config.n_min_leaf)) return std::nullopt;
    values[l] = leaf_value(leaves[l], treatments[l]);
  }
  return heap_sum(values);
}

OptimalTree::OptimalTree(int depth, std::vector<Cut> cuts, std::vector<int> treatments, int m,
                         std::size_t d)
    : depth_(depth), cuts_(std::move(cuts)), leaf_treatments_(std::move(treatments)), m_(m), d_(d) {
  const TreeSkeleton skeleton(depth_);
  if (cuts_.size() != static_cast<std::size_t>(skeleton.internal_count()) ||
      leaf_treatments_.size() != static_cast<std::size_t>(skeleton.leaf_count())) {
    throw Error(ErrorCode::kDomain, "opt: tree shape does not match its depth");
  }
  check_treatments(leaf_treatments_, m_);
  for (const auto& c : cuts_) {
    if (c.feature < 0 || static_cast<std::size_t>(c.feature) >= d_ || !std::isfinite(c.threshold)) {
      throw Error(ErrorCode::kDomain, "opt: invalid cut in tree");
    }
  }
}

int OptimalTree::prescribe(std::span<const double> x) const {
  if (x.size() != d_) {
    throw Error(ErrorCode::kBounds, "opt: expected " + std::to_string(d_) + " covariates, got " +
                                        std::to_string(x.size()));
  }
  return leaf_treatments_[route(TreeSkeleton(depth_), cuts_, x)];
}

nlohmann::json OptimalTree::to_json() const {
  nlohmann::json cuts = nlohmann::json::array();
  for (const auto& c : cuts_) cuts.push_back({{"feature", c.feature}, {"threshold", c.threshold}});
  return {{"kind", "opt"}, {"m", m_},       {"d", d_},
          {"depth", depth_}, {"cuts", cuts}, {"treatments", leaf_treatments_}};
}

OptimalTree OptimalTree::from_json(const nlohmann::json& doc) {
  try {
    if (doc.at("kind").get<std::string>() != "opt") {
      throw Error(ErrorCode::kParse, "model json /kind: expected \"opt\"");
    }
    std::vector<Cut> cuts;
    for (const auto& c : doc.at("cuts")) {
      cuts.push_back({c.at("feature").get<int>(), c.at("threshold").get<double>()});
    }
    return OptimalTree(doc.at("depth").get<int>(), std::move(cuts),
                       doc.at("treatments").get<std::vector<int>>(), doc.at("m").get<int>(),
                       doc.at("d").get<std::size_t>());
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kParse, std::string("model json: ") + e.what());
  }
}

namespace {

struct TimeoutSignal {};

class ExactSolver {
 public:
  ExactSolver(const Dataset& ds, const TreeSkeleton& skeleton, const CutMenu& menu,
              const OptConfig& config)
      : ds_(ds),
        skeleton_(skeleton),
        menu_(menu),
        config_(config),
        ybar_(shifted_outcomes(ds)),
        start_(std::chrono::steady_clock::now()) {
    // goes_left_[p - 1][c][i]: sample i takes the left branch under cut c of node p.
    goes_left_.resize(menu.cuts.size());
    for (std::size_t k = 0; k < menu.cuts.size(); ++k) {
      for (const Cut& cut : menu.cuts[k]) {
        std::vector<char> mask(ds.size());
        for (std::size_t i = 0; i < ds.size(); ++i) mask[i] = cut.goes_left(ds.row(i)) ? 1 : 0;
        goes_left_[k].push_back(std::move(mask));
      }
    }
  }

  struct Value {
    double value;
    bool exact;  // false: `value` is a lower bound exceeding the budget
  };

  Value solve(int p, const std::vector<std::uint32_t>& samples, double budget) {
    if (skeleton_.is_leaf(p)) {
      const ArmStats stats = stats_of(samples);
      if (!leaf_feasible(stats, config_.n_min_leaf)) return {kInf, true};
      return {best_leaf(stats).first, true};
    }
    tick();
    if (!subtree_feasible(p, samples)) return {kInf, true};

    const Key key = make_key(p, samples);
    if (const Entry* hit = lookup(key)) {
      if (hit->exact || hit->value > budget) return {hit->value, hit->exact};
    }

    const auto& cuts = menu_.at(p);
    double best = kInf;
    int choice = -1;
    double unresolved_bound = kInf;
    std::vector<std::uint32_t> left, right;
    for (std::size_t c = 0; c < cuts.size(); ++c) {
      split(p, c, samples, left, right);
      if (!subtree_feasible(2 * p, left) || !subtree_feasible(2 * p + 1, right)) continue;
      const double cap = std::min(budget, best);
      const double cap_slack = cap + slack(cap);
      const Value lv = solve(2 * p, left, cap_slack);
      if (!lv.exact || lv.value > cap_slack) {
        if (best > budget) unresolved_bound = std::min(unresolved_bound, lv.value);
        continue;
      }
      const Value rv = solve(2 * p + 1, right, cap_slack - lv.value);
      const double total = lv.value + rv.value;
      if (!rv.exact) {
        if (best > budget) unresolved_bound = std::min(unresolved_bound, total);
        continue;
      }
      if (total < best) {
        best = total;
        choice = static_cast<int>(c);
      }
    }
    Entry entry;
    if (best <= budget + slack(budget) || unresolved_bound == kInf) {
      entry = {best, true, choice};
    } else {
      entry = {std::min(best, unresolved_bound), false, -1};
    }
    store(key, entry);
    return {entry.value, entry.exact};
  }

  // Rebuilds the argmin assignment after an exact solve of the root.
  void reconstruct(int p, const std::vector<std::uint32_t>& samples, OptAssignment& out) {
    if (skeleton_.is_leaf(p)) {
      out.treatments[p - skeleton_.first_leaf()] = best_leaf(stats_of(samples)).second;
      return;
    }
    const Entry* hit = lookup(make_key(p, samples));
    if (!hit || !hit->exact) {
      solve(p, samples, kInf);
      hit = lookup(make_key(p, samples));
    }
    const int c = hit->choice;
    if (c < 0) throw Error(ErrorCode::kInfeasible, "opt: no feasible tree at node " + std::to_string(p));
    out.cut_index[p - 1] = static_cast<std::size_t>(c);
    std::vector<std::uint32_t> left, right;
    split(p, static_cast<std::size_t>(c), samples, left, right);
    reconstruct(2 * p, left, out);
    reconstruct(2 * p + 1, right, out);
  }

  static constexpr double kInf = std::numeric_limits<double>::infinity();

 private:
  struct Key {
    int node;
    std::uint32_t size;
    std::uint64_t h1, h2;
    bool operator==(const Key&) const = default;
  };
  struct KeyHash {
    std::size_t operator()(const Key& k) const { return k.h1 ^ (k.h2 * 31) ^ k.node; }
  };
  struct Entry {
    double value = kInf;
    bool exact = false;
    int choice = -1;
  };
  using LruList = std::list<Key>;

  static double slack(double v) { return std::isfinite(v) ? 1e-9 * (1.0 + std::abs(v)) : 0.0; }

  void tick() {
    if (++calls_ % 1024 != 0 || !std::isfinite(config_.time_limit)) return;
    const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start_;
    if (elapsed.count() > config_.time_limit) throw TimeoutSignal{};
  }

  ArmStats stats_of(const std::vector<std::uint32_t>& samples) const {
    ArmStats stats(ds_.m);
    for (std::uint32_t i : samples) stats.add(ds_.t[i], ybar_[i]);
    return stats;
  }

  // Every leaf below p needs n_min_leaf samples of every treatment.
  bool subtree_feasible(int p, const std::vector<std::uint32_t>& samples) const {
    int levels = 0;
    for (int q = p; !skeleton_.is_leaf(q); q *= 2) ++levels;
    const std::size_t need = config_.n_min_leaf << levels;
    if (samples.size() < need * static_cast<std::size_t>(ds_.m)) return false;
    std::vector<std::size_t> counts(ds_.m, 0);
    for (std::uint32_t i : samples) ++counts[ds_.t[i] - 1];
    return std::all_of(counts.begin(), counts.end(), [&](std::size_t c) { return c >= need; });
  }

  void split(int p, std::size_t c, const std::vector<std::uint32_t>& samples,
             std::vector<std::uint32_t>& left, std::vector<std::uint32_t>& right) const {
    const auto& mask = goes_left_[p - 1][c];
    left.clear();
    right.clear();
    for (std::uint32_t i : samples) (mask[i] ? left : right).push_back(i);
  }

  static Key make_key(int p, const std::vector<std::uint32_t>& samples) {
    std::uint64_t h1 = 0x243F6A8885A308D3ULL, h2 = 0x13198A2E03707344ULL;
    for (std::uint32_t i : samples) {
      h1 = mix_seed(h1, i);
      h2 = (h2 ^ i) * 0x100000001B3ULL + 0x9E3779B97F4A7C15ULL;
    }
    return {p, static_cast<std::uint32_t>(samples.size()), h1, h2};
  }

  const Entry* lookup(const Key& key) {
    auto it = memo_.find(key);
    if (it == memo_.end()) return nullptr;
    lru_.splice(lru_.begin(), lru_, it->second.second);
    return &it->second.first;
  }

  void store(const Key& key, const Entry& entry) {
    auto it = memo_.find(key);
    if (it != memo_.end()) {
      it->second.first = entry;
      lru_.splice(lru_.begin(), lru_, it->second.second);
      return;
    }
    lru_.push_front(key);
    memo_.emplace(key, std::make_pair(entry, lru_.begin()));
    while (memo_.size() > std::max<std::size_t>(config_.cache_entries, 1)) {
      memo_.erase(lru_.back());
      lru_.pop_back();
    }
  }

  const Dataset& ds_;
  const TreeSkeleton& skeleton_;
  const CutMenu& menu_;
  const OptConfig& config_;
  std::vector<double> ybar_;
  std::vector<std::vector<std::vector<char>>> goes_left_;
  std::unordered_map<Key, std::pair<Entry, LruList::iterator>, KeyHash> memo_;
  LruList lru_;
  std::chrono::steady_clock::time_point start_;
  std::uint64_t calls_ = 0;
};

OptResult make_result(const Dataset& ds, const TreeSkeleton& skeleton, const CutMenu& menu,
                      OptAssignment assignment, double objective, bool proven) {
  OptResult result;
  result.tree = OptimalTree(skeleton.depth(), resolve_cuts(menu, assignment), assignment.treatments,
                            ds.m, ds.dims());
  result.assignment = std::move(assignment);
  result.objective = objective;
  result.proven_optimal = proven;
  return result;
}

}  // namespace

OptResult solve_exact(const Dataset& ds, const TreeSkeleton& skeleton, const CutMenu& menu,
                      const OptConfig& config, const std::optional<OptAssignment>& warm) {
  config.validate();
  if (menu.cuts.size() != static_cast<std::size_t>(skeleton.internal_count())) {
    throw Error(ErrorCode::kBounds, "opt: menu does not match the skeleton");
  }
  for (std::size_t k = 0; k < menu.cuts.size(); ++k) {
    if (menu.cuts[k].empty()) {
      throw Error(ErrorCode::kEmptyMenu, "opt: empty menu at node " + std::to_string(k + 1));
    }
  }
  if (ds.size() > std::numeric_limits<std::uint32_t>::max()) {
    throw Error(ErrorCode::kBounds, "opt: too many samples");
  }
  std::optional<double> incumbent;
  if (warm) incumbent = evaluate_assignment(ds, skeleton, resolve_cuts(menu, *warm), warm->treatments, config);

  std::vector<std::uint32_t> all(ds.size());
  std::iota(all.begin(), all.end(), 0u);
  ExactSolver solver(ds, skeleton, menu, config);
  try {
    const double budget = incumbent ? *incumbent : ExactSolver::kInf;
    const auto root = solver.solve(1, all, budget);
    if (!root.exact || !std::isfinite(root.value)) {
      if (incumbent) return make_result(ds, skeleton, menu, *warm, *incumbent, true);
      throw Error(ErrorCode::kInfeasible,
                  "opt: no tree over the menu gives every leaf " + std::to_string(config.n_min_leaf) +
                      " samples of every treatment");
    }
    OptAssignment assignment;
    assignment.cut_index.assign(skeleton.internal_count(), 0);
    assignment.treatments.assign(skeleton.leaf_count(), 1);
    solver.reconstruct(1, all, assignment);
    return make_result(ds, skeleton, menu, std::move(assignment), root.value, true);
  } catch (const TimeoutSignal&) {
    if (incumbent) return make_result(ds, skeleton, menu, *warm, *incumbent, false);
    throw Error(ErrorCode::kTimeout, "opt: time limit reached without an incumbent");
  }
}

std::optional<OptAssignment> warm_start_from_pt(const Dataset& ds, const TreeSkeleton& skeleton,
                                                const CutMenu& menu, const OptConfig& config) {
  PtConfig pt_config;
  pt_config.n_min_leaf = config.n_min_leaf;
  pt_config.max_depth = skeleton.depth();
  pt_config.n_features = config.n_features;
  pt_config.seed = config.seed;
  PersonalizationTree tree;
  try {
    tree = PersonalizationTree::fit(ds, pt_config);
  } catch (const Error&) {
    return std::nullopt;
  }
  const auto& nodes = tree.nodes();
  Rng rng(mix_seed(config.seed, 1));
  OptAssignment out;
  out.cut_index.assign(skeleton.internal_count(), 0);
  out.treatments.assign(skeleton.leaf_count(), 1);

  auto feasible = [&](int child, const std::vector<std::size_t>& rows) {
    int levels = 0;
    for (int q = child; !skeleton.is_leaf(q); q *= 2) ++levels;
    const std::size_t need = config.n_min_leaf << levels;
    std::vector<std::size_t> counts(ds.m, 0);
    for (std::size_t i : rows) ++counts[ds.t[i] - 1];
    return std::all_of(counts.begin(), counts.end(), [&](std::size_t c) { return c >= need; });
  };
  auto partition = [&](const Cut& cut, const std::vector<std::size_t>& rows,
                       std::vector<std::size_t>& left, std::vector<std::size_t>& right) {
    left.clear();
    right.clear();
    for (std::size_t i : rows) (cut.goes_left(ds.row(i)) ? left : right).push_back(i);
  };

  // Walks the heap alongside the greedy tree; pt_node stays on a leaf while padding.
  std::function<bool(int, int, const std::vector<std::size_t>&)> place =
      [&](int p, int pt_node, const std::vector<std::size_t>& rows) -> bool {
    const TreeNode& node = nodes[pt_node];
    if (skeleton.is_leaf(p)) {
      out.treatments[p - skeleton.first_leaf()] = node.treatment;
      return true;
    }
    const auto& cuts = menu.at(p);
    std::vector<std::size_t> left, right;
    std::optional<std::size_t> chosen;
    if (!node.is_leaf()) {
      double best_gap = std::numeric_limits<double>::infinity();
      for (std::size_t c = 0; c < cuts.size(); ++c) {
        if (cuts[c].feature != node.feature) continue;
        const double gap = std::abs(cuts[c].threshold - node.threshold);
        if (gap < best_gap) {
          best_gap = gap;
          chosen = c;
        }
      }
      if (chosen) {
        partition(cuts[*chosen], rows, left, right);
        if (!feasible(2 * p, left) || !feasible(2 * p + 1, right)) chosen.reset();
      }
    }
    if (!chosen) {
      std::vector<std::size_t> options;
      for (std::size_t c = 0; c < cuts.size(); ++c) {
        partition(cuts[c], rows, left, right);
        if (feasible(2 * p, left) && feasible(2 * p + 1, right)) options.push_back(c);
      }
      if (options.empty()) return false;
      chosen = options[rng.below(options.size())];
      partition(cuts[*chosen], rows, left, right);
    }
    out.cut_index[p - 1] = *chosen;
    const int next_left = node.is_leaf() ? pt_node : node.left;
    const int next_right = node.is_leaf() ? pt_node : node.right;
    return place(2 * p, next_left, left) && place(2 * p + 1, next_right, right);
  };

  std::vector<std::size_t> all(ds.size());
  std::iota(all.begin(), all.end(), std::size_t{0});
  if (!place(1, 0, all)) return std::nullopt;
  if (!evaluate_assignment(ds, skeleton, resolve_cuts(menu, out), out.treatments, config)) {
    return std::nullopt;
  }
  return out;
}

OptResult fit_optimal_tree(const Dataset& ds, const OptConfig& config) {
  config.validate();
  const TreeSkeleton skeleton(config.depth);
  const std::size_t leaves = static_cast<std::size_t>(skeleton.leaf_count());
  if (ds.size() < leaves * static_cast<std::size_t>(ds.m) * config.n_min_leaf) {
    throw Error(ErrorCode::kInfeasible, "opt: " + std::to_string(ds.size()) +
                                            " samples cannot fill " + std::to_string(leaves) +
                                            " leaves with " + std::to_string(config.n_min_leaf) +
                                            " samples per treatment");
  }
  const CutMenu menu = build_cut_menu(ds, skeleton, config);
  const auto warm = warm_start_from_pt(ds, skeleton, menu, config);
  return solve_exact(ds, skeleton, menu, config, warm);
}

}  // namespace pertree
