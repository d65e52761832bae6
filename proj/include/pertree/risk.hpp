#pragma once

#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "pertree/dataset.hpp"

namespace pertree {

// A treatment-personalization rule: covariate vector -> treatment in [1..m].
class Policy {
 public:
  virtual ~Policy() = default;
  virtual int prescribe(std::span<const double> x) const = 0;
  virtual int treatments() const = 0;
};

// Adapts any callable to the Policy contract.
class FunctionPolicy final : public Policy {
 public:
  FunctionPolicy(int m, std::function<int(std::span<const double>)> fn)
      : m_(m), fn_(std::move(fn)) {}
  int prescribe(std::span<const double> x) const override { return fn_(x); }
  int treatments() const override { return m_; }

 private:
  int m_;
  std::function<int(std::span<const double>)> fn_;
};

std::vector<int> prescribe_all(const Policy& policy, const Matrix& x);

// Per-treatment counts and outcome sums for a subsample. Index t - 1.
struct ArmStats {
  std::vector<std::size_t> counts;
  std::vector<double> sums;
  std::size_t total = 0;

  explicit ArmStats(int m = 0) : counts(m, 0), sums(m, 0.0) {}
  void add(int t, double y) {
    ++counts[t - 1];
    sums[t - 1] += y;
    ++total;
  }
  void remove(int t, double y) {
    --counts[t - 1];
    sums[t - 1] -= y;
    --total;
  }
  int arms() const { return static_cast<int>(counts.size()); }
};

// Strict: every treatment must be present. Scarce: the minimum is taken only
// over treatments with at least n_min_leaf samples.
enum class ImpurityMode { kStrict, kScarce };

struct ImpurityRule {
  ImpurityMode mode = ImpurityMode::kStrict;
  std::size_t n_min_leaf = 1;
};

// Eligible treatment with the smallest mean outcome (lowest label on ties),
// or nullopt when the impurity is undefined.
std::optional<int> best_arm(const ArmStats& stats, const ImpurityRule& rule);
// k * min over eligible t of (mean outcome of t), or nullopt when undefined.
std::optional<double> try_impurity(const ArmStats& stats, const ImpurityRule& rule);

// Personalization impurity of a subsample given as parallel (T, Y) sequences.
// Throws kUndefinedImpurity when undefined under `rule`.
double impurity(std::span<const int> t, std::span<const double> y, int m,
                const ImpurityRule& rule = {});

// Leaf assignment for each sample; leaf ids are 0-based in [0, leaves).
struct Partition {
  std::vector<std::size_t> leaf_of;
  std::size_t leaves = 0;
};

// Sum over leaves of (leaf share) * (matched mean), where each matched sample
// i (T_i = pol(X_i)) contributes Y_i divided by the number of leaf members
// that received pol(X_i). Throws kUndefinedEstimate naming the leaf when a
// prescribed treatment is absent from that leaf.
double partition_risk_estimate(const Dataset& ds, const Partition& part, const Policy& pol);

// (1/n) sum 1[T_i = pol(X_i)] Y_i / Q_i. Throws kMissingPropensity without Q.
double ipw_risk(const Dataset& ds, const Policy& pol);

// A coefficient of personalization; undefined when its denominator is zero.
struct Coefficient {
  double value = std::numeric_limits<double>::quiet_NaN();
  bool defined = false;
};

// 1 - (achieved - prescient) / (reference - prescient).
Coefficient personalization_coefficient(double achieved, double prescient, double reference);

struct OracleMetrics {
  double risk = 0.0;
  Coefficient p1;  // relative to the best constant treatment
  Coefficient p2;  // relative to the observed assignment
};

// Sample-analogue risk and coefficients from the full counterfactual matrix.
OracleMetrics oracle_metrics(const Dataset& ds, const Policy& pol);

}  // namespace pertree
