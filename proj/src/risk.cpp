#include "pertree/risk.hpp"

#include <algorithm>
#include <cmath>

namespace pertree {

std::vector<int> prescribe_all(const Policy& policy, const Matrix& x) {
  std::vector<int> out(static_cast<std::size_t>(x.rows()));
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    out[i] = policy.prescribe({x.data() + i * x.cols(), static_cast<std::size_t>(x.cols())});
  }
  return out;
}

std::optional<int> best_arm(const ArmStats& stats, const ImpurityRule& rule) {
  const std::size_t need = rule.mode == ImpurityMode::kStrict ? 1 : rule.n_min_leaf;
  if (rule.mode == ImpurityMode::kStrict) {
    for (std::size_t c : stats.counts) {
      if (c == 0) return std::nullopt;
    }
  }
  std::optional<int> best;
  double best_mean = 0.0;
  for (int t = 1; t <= stats.arms(); ++t) {
    const std::size_t c = stats.counts[t - 1];
    if (c < need || c == 0) continue;
    const double mean = stats.sums[t - 1] / static_cast<double>(c);
    if (!best || mean < best_mean) {
      best = t;
      best_mean = mean;
    }
  }
  return best;
}

std::optional<double> try_impurity(const ArmStats& stats, const ImpurityRule& rule) {
  const auto t = best_arm(stats, rule);
  if (!t) return std::nullopt;
  const double mean = stats.sums[*t - 1] / static_cast<double>(stats.counts[*t - 1]);
  return static_cast<double>(stats.total) * mean;
}

double impurity(std::span<const int> t, std::span<const double> y, int m,
                const ImpurityRule& rule) {
  if (t.size() != y.size()) throw Error(ErrorCode::kBounds, "impurity: T and Y lengths differ");
  if (t.empty()) throw Error(ErrorCode::kUndefinedImpurity, "impurity: empty subsample");
  ArmStats stats(m);
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (t[i] < 1 || t[i] > m) throw Error(ErrorCode::kBounds, "impurity: treatment out of range");
    stats.add(t[i], y[i]);
  }
  const auto value = try_impurity(stats, rule);
  if (!value) {
    throw Error(ErrorCode::kUndefinedImpurity,
                rule.mode == ImpurityMode::kStrict
                    ? "impurity: some treatment is absent from the subsample"
                    : "impurity: no treatment has the minimum number of samples");
  }
  return *value;
}

double partition_risk_estimate(const Dataset& ds, const Partition& part, const Policy& pol) {
  const std::size_t n = ds.size();
  if (part.leaf_of.size() != n) {
    throw Error(ErrorCode::kBounds, "partition_risk_estimate: partition size differs from data");
  }
  if (n == 0) throw Error(ErrorCode::kUndefinedEstimate, "partition_risk_estimate: empty data");
  const auto m = static_cast<std::size_t>(ds.m);
  std::vector<std::size_t> counts(part.leaves * m, 0);
  std::vector<std::size_t> leaf_size(part.leaves, 0);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t leaf = part.leaf_of[i];
    if (leaf >= part.leaves) throw Error(ErrorCode::kBounds, "partition_risk_estimate: bad leaf id");
    ++counts[leaf * m + ds.t[i] - 1];
    ++leaf_size[leaf];
  }
  std::vector<double> leaf_sum(part.leaves, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t leaf = part.leaf_of[i];
    const int rx = pol.prescribe(ds.row(i));
    if (rx < 1 || rx > ds.m) throw Error(ErrorCode::kBounds, "policy prescribed an invalid treatment");
    const std::size_t matched = counts[leaf * m + rx - 1];
    if (matched == 0) {
      throw Error(ErrorCode::kUndefinedEstimate,
                  "partition_risk_estimate: leaf " + std::to_string(leaf) +
                      " has no sample that received prescribed treatment " + std::to_string(rx));
    }
    if (ds.t[i] == rx) leaf_sum[leaf] += ds.y[i] / static_cast<double>(matched);
  }
  double total = 0.0;
  for (std::size_t leaf = 0; leaf < part.leaves; ++leaf) {
    total += static_cast<double>(leaf_size[leaf]) / static_cast<double>(n) * leaf_sum[leaf];
  }
  return total;
}

double ipw_risk(const Dataset& ds, const Policy& pol) {
  if (!ds.q) throw Error(ErrorCode::kMissingPropensity, "ipw_risk: dataset has no propensities");
  const std::size_t n = ds.size();
  if (n == 0) throw Error(ErrorCode::kUndefinedEstimate, "ipw_risk: empty data");
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (pol.prescribe(ds.row(i)) == ds.t[i]) total += ds.y[i] / (*ds.q)[i];
  }
  return total / static_cast<double>(n);
}

Coefficient personalization_coefficient(double achieved, double prescient, double reference) {
  const double den = reference - prescient;
  const double scale = std::max({1.0, std::abs(reference), std::abs(prescient)});
  if (!(std::abs(den) > 1e-12 * scale)) return {};
  return {1.0 - (achieved - prescient) / den, true};
}

OracleMetrics oracle_metrics(const Dataset& ds, const Policy& pol) {
  if (!ds.cf) throw Error(ErrorCode::kUndefinedEstimate, "oracle_metrics: no counterfactuals");
  const std::size_t n = ds.size();
  if (n == 0) throw Error(ErrorCode::kUndefinedEstimate, "oracle_metrics: empty data");
  const Matrix& cf = *ds.cf;
  double policy_sum = 0.0, prescient_sum = 0.0, factual_sum = 0.0;
  std::vector<double> column_sum(ds.m, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const int rx = pol.prescribe(ds.row(i));
    if (rx < 1 || rx > ds.m) throw Error(ErrorCode::kBounds, "policy prescribed an invalid treatment");
    policy_sum += cf(i, rx - 1);
    prescient_sum += cf.row(i).minCoeff();
    factual_sum += ds.y[i];
    for (int t = 0; t < ds.m; ++t) column_sum[t] += cf(i, t);
  }
  const double nn = static_cast<double>(n);
  const double risk = policy_sum / nn;
  const double prescient = prescient_sum / nn;
  const double best_constant = *std::min_element(column_sum.begin(), column_sum.end()) / nn;
  return {risk, personalization_coefficient(risk, prescient, best_constant),
          personalization_coefficient(risk, prescient, factual_sum / nn)};
}

}  // namespace pertree
