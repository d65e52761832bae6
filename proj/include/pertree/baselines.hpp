#pragma once

#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "pertree/risk.hpp"

namespace pertree {

class Regressor {
 public:
  virtual ~Regressor() = default;
  virtual void fit(const Matrix& x, std::span<const double> y) = 0;
  virtual double predict(std::span<const double> x) const = 0;
  virtual nlohmann::json to_json() const = 0;
};

using RegressorFactory = std::function<std::unique_ptr<Regressor>()>;

// Least squares with intercept. Rank-deficient designs get a ridge of
// 1e-8 * trace(A'A) / cols(A) on the normal matrix.
class LeastSquares final : public Regressor {
 public:
  void fit(const Matrix& x, std::span<const double> y) override;
  double predict(std::span<const double> x) const override;
  nlohmann::json to_json() const override;
  static std::unique_ptr<LeastSquares> from_json(const nlohmann::json& doc);

  double intercept() const { return intercept_; }
  const std::vector<double>& coefficients() const { return coef_; }

 private:
  double intercept_ = 0.0;
  std::vector<double> coef_;
};

// k nearest neighbours, Euclidean on features standardized by the training
// mean and standard deviation. k = 0 means floor(sqrt(n)); k above n is
// clamped to n with a warning. Every point tied with the k-th distance is
// averaged in.
class NearestNeighbors final : public Regressor {
 public:
  explicit NearestNeighbors(std::size_t k = 0) : requested_k_(k) {}

  void fit(const Matrix& x, std::span<const double> y) override;
  double predict(std::span<const double> x) const override;
  nlohmann::json to_json() const override;
  static std::unique_ptr<NearestNeighbors> from_json(const nlohmann::json& doc);

  std::size_t k() const { return k_; }

 private:
  std::size_t requested_k_ = 0;
  std::size_t k_ = 0;
  std::vector<double> mean_, scale_;
  Matrix x_;  // standardized
  std::vector<double> y_;
};

// "ols" | "knn"; params may carry {"k": n} for knn.
RegressorFactory regressor_factory(const std::string& family, const nlohmann::json& params = {});
std::unique_ptr<Regressor> regressor_from_json(const nlohmann::json& doc);

// Regress and compare: one regressor per treatment arm, prescribe the
// smallest prediction (lowest label on ties).
class RcPolicy final : public Policy {
 public:
  RcPolicy(std::vector<std::unique_ptr<Regressor>> models, std::size_t d, std::string kind);

  int prescribe(std::span<const double> x) const override;
  int treatments() const override { return static_cast<int>(models_.size()); }
  std::vector<double> predictions(std::span<const double> x) const;

  nlohmann::json to_json() const;
  static RcPolicy from_json(const nlohmann::json& doc);

 private:
  std::vector<std::unique_ptr<Regressor>> models_;
  std::size_t d_;
  std::string kind_;
};

// Throws kDomain naming the treatment when an arm is empty.
RcPolicy fit_rc(const Dataset& ds, const std::string& family, const nlohmann::json& params = {});

// Conditional effect of arm 2 over arm 1 on a binary-relabeled sample:
// delta(x) = muhat_2(x) - muhat_1(x) from two separately fitted regressors.
class CateEstimator {
 public:
  explicit CateEstimator(RegressorFactory factory) : factory_(std::move(factory)) {}

  // t holds the relabeled treatments, each 1 or 2.
  void fit(const Matrix& x, std::span<const int> t, std::span<const double> y);
  double predict(std::span<const double> x) const;

  nlohmann::json to_json() const;
  static CateEstimator from_json(const nlohmann::json& doc);

 private:
  RegressorFactory factory_;
  std::shared_ptr<Regressor> control_, treated_;
};

// Decision rules on CATE values, all ties to the lowest label.
// tva[t-1] = delta^{t vs rest}(x); argmin_t.
int one_vs_all_decision(std::span<const double> tva);
// tvs(t, s) = delta^{t vs s}(x) for t != s (diagonal ignored).
using PairwiseEffects = std::function<double(int t, int s)>;
// argmin_t min_{s != t} delta^{t vs s}.
int one_vs_one_a_decision(int m, const PairwiseEffects& tvs);
// argmax_t #{s != t : delta^{t vs s} < 0}.
int one_vs_one_b_decision(int m, const PairwiseEffects& tvs);

class OneVsAllPolicy final : public Policy {
 public:
  OneVsAllPolicy(std::vector<CateEstimator> estimators, std::size_t d);

  int prescribe(std::span<const double> x) const override;
  int treatments() const override { return static_cast<int>(estimators_.size()); }
  std::vector<double> effects(std::span<const double> x) const;

  nlohmann::json to_json() const;
  static OneVsAllPolicy from_json(const nlohmann::json& doc);

 private:
  std::vector<CateEstimator> estimators_;
  std::size_t d_;
};

enum class OneVsOneRule { kA, kB };

class OneVsOnePolicy final : public Policy {
 public:
  // estimators[(t-1)*m + (s-1)] for t != s; diagonal slots are unused.
  OneVsOnePolicy(int m, std::vector<std::optional<CateEstimator>> estimators, OneVsOneRule rule,
                 std::size_t d);

  int prescribe(std::span<const double> x) const override;
  int treatments() const override { return m_; }

  nlohmann::json to_json() const;
  static OneVsOnePolicy from_json(const nlohmann::json& doc);

 private:
  int m_;
  std::vector<std::optional<CateEstimator>> estimators_;
  OneVsOneRule rule_;
  std::size_t d_;
};

// Each t versus the pooled rest, relabeled T' = 1 + 1[T = t].
OneVsAllPolicy fit_1va(const Dataset& ds, const RegressorFactory& factory);
// Each ordered pair (t, s) on rows with T in {t, s}, relabeled T' = 1 + 1[T = t].
OneVsOnePolicy fit_1v1(const Dataset& ds, const RegressorFactory& factory, OneVsOneRule rule);

}  // namespace pertree
