#pragma once

#include <iosfwd>
#include <span>
#include <vector>

#include "pertree/risk.hpp"

namespace pertree {

// Mahalanobis metric from the regularized sample covariance S + eps I,
// eps = 1e-8 * trace(S) / d (1e-8 when the trace is zero).
struct Metric {
  Eigen::MatrixXd inverse;    // (S + eps I)^-1
  Eigen::MatrixXd whitening;  // L^-1 with S + eps I = L L'

  std::size_t dims() const { return static_cast<std::size_t>(inverse.rows()); }
};

Metric mahalanobis_metric(const Dataset& ds);
// Metric for a given covariance (regularized the same way).
Metric metric_from_covariance(const Eigen::MatrixXd& covariance);
double distance(const Metric& metric, std::span<const double> a, std::span<const double> b);

struct MatchedTestSet {
  int m = 0;
  std::vector<std::size_t> drawn;   // test subjects, in test-row order
  Matrix covariates;                // n_test x d
  std::vector<int> treatments;      // observed treatment of each test subject
  std::vector<double> factual;      // observed outcome of each test subject
  Matrix yhat;                      // n_test x m imputed outcomes
  // source[j][t-1]: subject whose outcome fills yhat(j, t-1).
  std::vector<std::vector<std::size_t>> source;
  std::vector<std::size_t> removed;  // sorted, unique; drawn plus every match
  double total_cost = 0.0;           // optimal submatching only

  std::size_t size() const { return drawn.size(); }
};

// Draws n_test subjects without replacement; each missing arm t is imputed
// from the nearest subject in [n] that received t (lowest index on ties).
MatchedTestSet greedy_submatch(const Dataset& ds, std::size_t n_test, const Metric& metric,
                               std::uint64_t seed);

// Two treatments only: the n_pair disjoint cross-arm pairs of least total
// distance. Every pair yields two test rows (the arm-1 subject first); pairs
// are ordered by their arm-1 subject.
MatchedTestSet optimal_submatch(const Dataset& ds, std::size_t n_pair, const Metric& metric);

// Minimum-cost assignment of every row to a distinct column (rows <= cols).
// Returns the column of each row.
std::vector<std::size_t> min_cost_assignment(const Eigen::MatrixXd& cost);

double matched_risk(const MatchedTestSet& mts, const Policy& pol);
Coefficient p1_hat(const MatchedTestSet& mts, const Policy& pol);
Coefficient p2_hat(const MatchedTestSet& mts, const Policy& pol);

// Columns: subject_index, factual_t, factual_y, yhat_1..yhat_m.
void write_matched_csv(const MatchedTestSet& mts, std::ostream& out);

}  // namespace pertree
