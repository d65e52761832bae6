#include "pertree/eval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

namespace pertree {

Metric metric_from_covariance(const Eigen::MatrixXd& covariance) {
  const Eigen::Index d = covariance.rows();
  if (d == 0 || covariance.cols() != d) throw Error(ErrorCode::kDomain, "metric: covariance must be square and non-empty");
  const double trace = covariance.trace();
  const double eps = trace > 0 ? 1e-8 * trace / static_cast<double>(d) : 1e-8;
  const Eigen::MatrixXd reg = covariance + eps * Eigen::MatrixXd::Identity(d, d);
  Eigen::LLT<Eigen::MatrixXd> llt(reg);
  if (llt.info() != Eigen::Success) throw Error(ErrorCode::kDomain, "metric: covariance is not positive semidefinite");
  Metric metric;
  const Eigen::MatrixXd l = llt.matrixL();
  metric.whitening = l.triangularView<Eigen::Lower>().solve(Eigen::MatrixXd::Identity(d, d));
  metric.inverse = llt.solve(Eigen::MatrixXd::Identity(d, d));
  return metric;
}

Metric mahalanobis_metric(const Dataset& ds) {
  const std::size_t n = ds.size();
  if (n < 2) throw Error(ErrorCode::kDomain, "metric: need at least two samples");
  const Eigen::RowVectorXd mean = ds.x.colwise().mean();
  const Eigen::MatrixXd centered = ds.x.rowwise() - mean;
  const Eigen::MatrixXd cov = centered.transpose() * centered / static_cast<double>(n - 1);
  return metric_from_covariance(cov);
}

double distance(const Metric& metric, std::span<const double> a, std::span<const double> b) {
  const std::size_t d = metric.dims();
  if (a.size() != d || b.size() != d) throw Error(ErrorCode::kBounds, "metric: dimension mismatch");
  Eigen::VectorXd diff(d);
  for (std::size_t j = 0; j < d; ++j) diff(j) = a[j] - b[j];
  // The explicit inverse loses digits on near-singular covariances; the
  // triangular factor does not.
  return (metric.whitening * diff).norm();
}

namespace {

Matrix whiten(const Dataset& ds, const Metric& metric) {
  if (metric.dims() != ds.dims()) throw Error(ErrorCode::kBounds, "metric: dimension mismatch with data");
  return ds.x * metric.whitening.transpose();
}

double squared_gap(const Matrix& z, std::size_t a, std::size_t b) { return (z.row(a) - z.row(b)).squaredNorm(); }

void fill_subject(MatchedTestSet& out, const Dataset& ds, std::size_t j, std::size_t i) {
  out.drawn[j] = i;
  out.covariates.row(j) = ds.x.row(i);
  out.treatments[j] = ds.t[i];
  out.factual[j] = ds.y[i];
  out.yhat(j, ds.t[i] - 1) = ds.y[i];
  out.source[j].assign(ds.m, i);
}

MatchedTestSet empty_set(const Dataset& ds, std::size_t rows) {
  MatchedTestSet out;
  out.m = ds.m;
  out.drawn.assign(rows, 0);
  out.covariates.resize(rows, ds.dims());
  out.treatments.assign(rows, 0);
  out.factual.assign(rows, 0.0);
  out.yhat = Matrix::Constant(rows, ds.m, std::numeric_limits<double>::quiet_NaN());
  out.source.assign(rows, {});
  return out;
}

void finish_removed(MatchedTestSet& out) {
  for (const auto& row : out.source) out.removed.insert(out.removed.end(), row.begin(), row.end());
  std::sort(out.removed.begin(), out.removed.end());
  out.removed.erase(std::unique(out.removed.begin(), out.removed.end()), out.removed.end());
}

}  // namespace

MatchedTestSet greedy_submatch(const Dataset& ds, std::size_t n_test, const Metric& metric,
                               std::uint64_t seed) {
  const std::size_t n = ds.size();
  if (n_test > n) {
    throw Error(ErrorCode::kBounds, "greedy submatch: n_test " + std::to_string(n_test) + " exceeds n " +
                                        std::to_string(n));
  }
  const auto counts = ds.arm_counts();
  for (int t = 1; t <= ds.m; ++t) {
    if (counts[t - 1] == 0) throw Error(ErrorCode::kDomain, "greedy submatch: treatment " + std::to_string(t) + " has no samples");
  }
  const Matrix z = whiten(ds, metric);
  Rng rng(seed);
  const auto draws = rng.sample_without_replacement(n, n_test);
  MatchedTestSet out = empty_set(ds, n_test);
  for (std::size_t j = 0; j < n_test; ++j) {
    const std::size_t subject = draws[j];
    fill_subject(out, ds, j, subject);
    for (int t = 1; t <= ds.m; ++t) {
      if (t == ds.t[subject]) continue;
      std::size_t best = n;
      double best_gap = std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < n; ++i) {
        if (ds.t[i] != t) continue;
        const double gap = squared_gap(z, subject, i);
        if (gap < best_gap) {
          best_gap = gap;
          best = i;
        }
      }
      out.yhat(j, t - 1) = ds.y[best];
      out.source[j][t - 1] = best;
      out.total_cost += std::sqrt(best_gap);
    }
  }
  finish_removed(out);
  return out;
}

std::vector<std::size_t> min_cost_assignment(const Eigen::MatrixXd& cost) {
  // Successive shortest augmenting paths with potentials; 1-based internals.
  const std::size_t rows = static_cast<std::size_t>(cost.rows());
  const std::size_t cols = static_cast<std::size_t>(cost.cols());
  if (rows > cols) throw Error(ErrorCode::kBounds, "assignment: more rows than columns");
  constexpr double kInf = std::numeric_limits<double>::infinity();
  std::vector<double> u(rows + 1, 0.0), v(cols + 1, 0.0);
  std::vector<std::size_t> match(cols + 1, 0), way(cols + 1, 0);
  for (std::size_t r = 1; r <= rows; ++r) {
    match[0] = r;
    std::size_t col = 0;
    std::vector<double> minv(cols + 1, kInf);
    std::vector<char> used(cols + 1, 0);
    do {
      used[col] = 1;
      const std::size_t row = match[col];
      double delta = kInf;
      std::size_t next = 0;
      for (std::size_t c = 1; c <= cols; ++c) {
        if (used[c]) continue;
        const double reduced = cost(row - 1, c - 1) - u[row] - v[c];
        if (reduced < minv[c]) {
          minv[c] = reduced;
          way[c] = col;
        }
        if (minv[c] < delta) {
          delta = minv[c];
          next = c;
        }
      }
      for (std::size_t c = 0; c <= cols; ++c) {
        if (used[c]) {
          u[match[c]] += delta;
          v[c] -= delta;
        } else {
          minv[c] -= delta;
        }
      }
      col = next;
    } while (match[col] != 0);
    do {
      const std::size_t prev = way[col];
      match[col] = match[prev];
      col = prev;
    } while (col != 0);
  }
  std::vector<std::size_t> out(rows, 0);
  for (std::size_t c = 1; c <= cols; ++c) {
    if (match[c] != 0) out[match[c] - 1] = c - 1;
  }
  return out;
}

MatchedTestSet optimal_submatch(const Dataset& ds, std::size_t n_pair, const Metric& metric) {
  if (ds.m != 2) throw Error(ErrorCode::kUnsupported, "optimal submatch: requires exactly two treatments (use greedy)");
  std::vector<std::size_t> arm[2];
  for (std::size_t i = 0; i < ds.size(); ++i) arm[ds.t[i] - 1].push_back(i);
  if (n_pair > std::min(arm[0].size(), arm[1].size())) {
    throw Error(ErrorCode::kBounds, "optimal submatch: n_pair " + std::to_string(n_pair) +
                                        " exceeds the smaller arm (" +
                                        std::to_string(std::min(arm[0].size(), arm[1].size())) + ")");
  }
  const Matrix z = whiten(ds, metric);
  // The smaller arm goes on the left so the assignment is rows <= cols.
  const bool swap = arm[0].size() > arm[1].size();
  const auto& left = swap ? arm[1] : arm[0];
  const auto& right = swap ? arm[0] : arm[1];
  const std::size_t dummies = left.size() - n_pair;
  Eigen::MatrixXd cost = Eigen::MatrixXd::Zero(left.size(), right.size() + dummies);
  for (std::size_t a = 0; a < left.size(); ++a) {
    for (std::size_t b = 0; b < right.size(); ++b) cost(a, b) = std::sqrt(squared_gap(z, left[a], right[b]));
  }
  const auto assigned = min_cost_assignment(cost);

  // (arm-1 subject, arm-2 subject, distance); ties with dummies can leave
  // extra real pairs, so keep the n_pair cheapest.
  struct Pair {
    std::size_t first, second;
    double cost;
  };
  std::vector<Pair> pairs;
  for (std::size_t a = 0; a < left.size(); ++a) {
    if (assigned[a] >= right.size()) continue;
    const std::size_t l = left[a], r = right[assigned[a]];
    pairs.push_back({swap ? r : l, swap ? l : r, cost(a, assigned[a])});
  }
  std::stable_sort(pairs.begin(), pairs.end(), [](const Pair& x, const Pair& y) { return x.cost < y.cost; });
  pairs.resize(n_pair);
  std::sort(pairs.begin(), pairs.end(), [](const Pair& x, const Pair& y) { return x.first < y.first; });

  MatchedTestSet out = empty_set(ds, 2 * n_pair);
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    const auto& p = pairs[k];
    fill_subject(out, ds, 2 * k, p.first);
    out.yhat(2 * k, 1) = ds.y[p.second];
    out.source[2 * k][1] = p.second;
    fill_subject(out, ds, 2 * k + 1, p.second);
    out.yhat(2 * k + 1, 0) = ds.y[p.first];
    out.source[2 * k + 1][0] = p.first;
    out.total_cost += p.cost;
  }
  finish_removed(out);
  return out;
}

namespace {

struct MatchedSums {
  double policy = 0.0;
  double prescient = 0.0;
  double best_constant = 0.0;
  double factual = 0.0;
};

MatchedSums matched_sums(const MatchedTestSet& mts, const Policy& pol) {
  if (pol.treatments() != mts.m) {
    throw Error(ErrorCode::kBounds, "matched evaluation: policy has " + std::to_string(pol.treatments()) +
                                        " treatments, test set has " + std::to_string(mts.m));
  }
  MatchedSums s;
  std::vector<double> columns(mts.m, 0.0);
  for (std::size_t j = 0; j < mts.size(); ++j) {
    const std::span<const double> x(mts.covariates.row(j).data(), static_cast<std::size_t>(mts.covariates.cols()));
    const int t = pol.prescribe(x);
    if (t < 1 || t > mts.m) throw Error(ErrorCode::kBounds, "matched evaluation: policy prescribed " + std::to_string(t));
    s.policy += mts.yhat(j, t - 1);
    s.prescient += mts.yhat.row(j).minCoeff();
    for (int c = 0; c < mts.m; ++c) columns[c] += mts.yhat(j, c);
    s.factual += mts.factual[j];
  }
  s.best_constant = *std::min_element(columns.begin(), columns.end());
  return s;
}

}  // namespace

double matched_risk(const MatchedTestSet& mts, const Policy& pol) {
  if (mts.size() == 0) throw Error(ErrorCode::kUndefinedEstimate, "matched risk: empty test set");
  return matched_sums(mts, pol).policy / static_cast<double>(mts.size());
}

Coefficient p1_hat(const MatchedTestSet& mts, const Policy& pol) {
  const auto s = matched_sums(mts, pol);
  return personalization_coefficient(s.policy, s.prescient, s.best_constant);
}

Coefficient p2_hat(const MatchedTestSet& mts, const Policy& pol) {
  const auto s = matched_sums(mts, pol);
  return personalization_coefficient(s.policy, s.prescient, s.factual);
}

void write_matched_csv(const MatchedTestSet& mts, std::ostream& out) {
  out << "subject_index,factual_t,factual_y";
  for (int t = 1; t <= mts.m; ++t) out << ",yhat_" << t;
  out << "\n";
  for (std::size_t j = 0; j < mts.size(); ++j) {
    out << mts.drawn[j] << "," << mts.treatments[j] << "," << format_double(mts.factual[j]);
    for (int t = 0; t < mts.m; ++t) out << "," << format_double(mts.yhat(j, t));
    out << "\n";
  }
}

}  // namespace pertree
