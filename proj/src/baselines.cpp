#include "pertree/baselines.hpp"

#include <algorithm>
#include <cmath>

namespace pertree {
namespace {

void check_dims(std::span<const double> x, std::size_t d, const char* who) {
  if (x.size() != d) {
    throw Error(ErrorCode::kBounds, std::string(who) + ": expected " + std::to_string(d) +
                                        " covariates, got " + std::to_string(x.size()));
  }
}

Matrix rows_of(const Dataset& ds, std::span<const std::size_t> rows) {
  Matrix out(rows.size(), ds.dims());
  for (std::size_t k = 0; k < rows.size(); ++k) out.row(k) = ds.x.row(rows[k]);
  return out;
}

template <class T>
T json_get(const nlohmann::json& doc, const char* key, const char* who) {
  try {
    return doc.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw Error(ErrorCode::kParse, std::string(who) + " json: missing or invalid '" + key + "'");
  }
}

}  // namespace

void LeastSquares::fit(const Matrix& x, std::span<const double> y) {
  const Eigen::Index n = x.rows();
  const Eigen::Index d = x.cols();
  if (n == 0) throw Error(ErrorCode::kDomain, "ols: cannot fit on zero samples");
  Eigen::MatrixXd a(n, d + 1);
  a.col(0).setOnes();
  a.rightCols(d) = x;
  const Eigen::Map<const Eigen::VectorXd> target(y.data(), n);
  Eigen::MatrixXd normal = a.transpose() * a;
  const Eigen::VectorXd rhs = a.transpose() * target;
  Eigen::FullPivLU<Eigen::MatrixXd> lu(normal);
  if (lu.rank() < normal.rows()) {
    const double ridge = 1e-8 * normal.trace() / static_cast<double>(normal.rows());
    normal.diagonal().array() += ridge > 0 ? ridge : 1e-8;
  }
  const Eigen::VectorXd beta = normal.ldlt().solve(rhs);
  intercept_ = beta(0);
  coef_.assign(beta.data() + 1, beta.data() + beta.size());
}

double LeastSquares::predict(std::span<const double> x) const {
  check_dims(x, coef_.size(), "ols");
  double v = intercept_;
  for (std::size_t j = 0; j < coef_.size(); ++j) v += coef_[j] * x[j];
  return v;
}

nlohmann::json LeastSquares::to_json() const {
  return {{"type", "ols"}, {"intercept", intercept_}, {"coef", coef_}};
}

std::unique_ptr<LeastSquares> LeastSquares::from_json(const nlohmann::json& doc) {
  auto out = std::make_unique<LeastSquares>();
  out->intercept_ = json_get<double>(doc, "intercept", "ols");
  out->coef_ = json_get<std::vector<double>>(doc, "coef", "ols");
  return out;
}

void NearestNeighbors::fit(const Matrix& x, std::span<const double> y) {
  const std::size_t n = static_cast<std::size_t>(x.rows());
  const std::size_t d = static_cast<std::size_t>(x.cols());
  if (n == 0) throw Error(ErrorCode::kDomain, "knn: cannot fit on zero samples");
  k_ = requested_k_ == 0 ? static_cast<std::size_t>(std::floor(std::sqrt(static_cast<double>(n))))
                         : requested_k_;
  k_ = std::max<std::size_t>(k_, 1);
  if (k_ > n) {
    warn("knn: k = " + std::to_string(k_) + " exceeds the " + std::to_string(n) +
         " training samples; using k = " + std::to_string(n));
    k_ = n;
  }
  mean_.assign(d, 0.0);
  scale_.assign(d, 1.0);
  for (std::size_t j = 0; j < d; ++j) {
    const double mu = x.col(j).mean();
    double ss = 0.0;
    for (std::size_t i = 0; i < n; ++i) ss += (x(i, j) - mu) * (x(i, j) - mu);
    const double sd = n > 1 ? std::sqrt(ss / static_cast<double>(n - 1)) : 0.0;
    mean_[j] = mu;
    scale_[j] = sd > 0 ? sd : 1.0;
  }
  x_.resize(n, d);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) x_(i, j) = (x(i, j) - mean_[j]) / scale_[j];
  }
  y_.assign(y.begin(), y.end());
}

double NearestNeighbors::predict(std::span<const double> x) const {
  check_dims(x, mean_.size(), "knn");
  const std::size_t n = y_.size();
  std::vector<double> dist(n);
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < mean_.size(); ++j) {
      const double diff = (x[j] - mean_[j]) / scale_[j] - x_(i, j);
      s += diff * diff;
    }
    dist[i] = s;
  }
  std::vector<double> sorted = dist;
  std::nth_element(sorted.begin(), sorted.begin() + (k_ - 1), sorted.end());
  const double radius = sorted[k_ - 1];
  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (dist[i] <= radius) {
      sum += y_[i];
      ++count;
    }
  }
  return sum / static_cast<double>(count);
}

nlohmann::json NearestNeighbors::to_json() const {
  std::vector<std::vector<double>> rows(x_.rows());
  for (Eigen::Index i = 0; i < x_.rows(); ++i) rows[i].assign(x_.row(i).data(), x_.row(i).data() + x_.cols());
  return {{"type", "knn"}, {"k", k_}, {"mean", mean_}, {"scale", scale_}, {"x", rows}, {"y", y_}};
}

std::unique_ptr<NearestNeighbors> NearestNeighbors::from_json(const nlohmann::json& doc) {
  auto out = std::make_unique<NearestNeighbors>();
  out->k_ = json_get<std::size_t>(doc, "k", "knn");
  out->requested_k_ = out->k_;
  out->mean_ = json_get<std::vector<double>>(doc, "mean", "knn");
  out->scale_ = json_get<std::vector<double>>(doc, "scale", "knn");
  out->y_ = json_get<std::vector<double>>(doc, "y", "knn");
  const auto rows = json_get<std::vector<std::vector<double>>>(doc, "x", "knn");
  const std::size_t d = out->mean_.size();
  if (out->scale_.size() != d || rows.size() != out->y_.size() || out->y_.empty() || out->k_ < 1 ||
      out->k_ > rows.size()) {
    throw Error(ErrorCode::kParse, "knn json: inconsistent shapes");
  }
  out->x_.resize(rows.size(), d);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != d) throw Error(ErrorCode::kParse, "knn json: inconsistent shapes");
    for (std::size_t j = 0; j < d; ++j) out->x_(i, j) = rows[i][j];
  }
  return out;
}

RegressorFactory regressor_factory(const std::string& family, const nlohmann::json& params) {
  if (family == "ols") return [] { return std::make_unique<LeastSquares>(); };
  if (family == "knn") {
    std::size_t k = 0;
    if (params.is_object() && params.contains("k")) {
      const auto& v = params.at("k");
      if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0)) {
        throw Error(ErrorCode::kConfig, "knn: k must be a non-negative integer");
      }
      k = params.at("k").get<std::size_t>();
    }
    return [k] { return std::make_unique<NearestNeighbors>(k); };
  }
  throw Error(ErrorCode::kUsage, "unknown regressor family '" + family + "' (valid: ols, knn)");
}

std::unique_ptr<Regressor> regressor_from_json(const nlohmann::json& doc) {
  const auto type = doc.is_object() ? doc.value("type", std::string()) : std::string();
  if (type == "ols") return LeastSquares::from_json(doc);
  if (type == "knn") return NearestNeighbors::from_json(doc);
  throw Error(ErrorCode::kParse, "regressor json: unknown type '" + type + "'");
}

RcPolicy::RcPolicy(std::vector<std::unique_ptr<Regressor>> models, std::size_t d, std::string kind)
    : models_(std::move(models)), d_(d), kind_(std::move(kind)) {
  if (models_.empty()) throw Error(ErrorCode::kDomain, "rc: need at least one regressor");
}

std::vector<double> RcPolicy::predictions(std::span<const double> x) const {
  check_dims(x, d_, "rc");
  std::vector<double> out;
  for (const auto& model : models_) out.push_back(model->predict(x));
  return out;
}

int RcPolicy::prescribe(std::span<const double> x) const {
  const auto pred = predictions(x);
  return static_cast<int>(std::min_element(pred.begin(), pred.end()) - pred.begin()) + 1;
}

nlohmann::json RcPolicy::to_json() const {
  nlohmann::json models = nlohmann::json::array();
  for (const auto& model : models_) models.push_back(model->to_json());
  return {{"kind", kind_}, {"m", models_.size()}, {"d", d_}, {"models", models}};
}

RcPolicy RcPolicy::from_json(const nlohmann::json& doc) {
  const auto kind = json_get<std::string>(doc, "kind", "rc");
  if (kind != "rc-ols" && kind != "rc-knn") throw Error(ErrorCode::kParse, "rc json: unknown kind " + kind);
  std::vector<std::unique_ptr<Regressor>> models;
  for (const auto& m : json_get<nlohmann::json>(doc, "models", "rc")) models.push_back(regressor_from_json(m));
  if (models.size() != json_get<std::size_t>(doc, "m", "rc")) {
    throw Error(ErrorCode::kParse, "rc json: model count does not match m");
  }
  return RcPolicy(std::move(models), json_get<std::size_t>(doc, "d", "rc"), kind);
}

RcPolicy fit_rc(const Dataset& ds, const std::string& family, const nlohmann::json& params) {
  const auto factory = regressor_factory(family, params);
  std::vector<std::unique_ptr<Regressor>> models;
  for (int t = 1; t <= ds.m; ++t) {
    std::vector<std::size_t> rows;
    std::vector<double> y;
    for (std::size_t i = 0; i < ds.size(); ++i) {
      if (ds.t[i] == t) {
        rows.push_back(i);
        y.push_back(ds.y[i]);
      }
    }
    if (rows.empty()) throw Error(ErrorCode::kDomain, "rc: treatment " + std::to_string(t) + " has no samples");
    auto model = factory();
    model->fit(rows_of(ds, rows), y);
    models.push_back(std::move(model));
  }
  return RcPolicy(std::move(models), ds.dims(), "rc-" + family);
}

void CateEstimator::fit(const Matrix& x, std::span<const int> t, std::span<const double> y) {
  std::vector<Eigen::Index> rows[2];
  std::vector<double> ys[2];
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (t[i] != 1 && t[i] != 2) throw Error(ErrorCode::kDomain, "cate: relabeled treatment must be 1 or 2");
    rows[t[i] - 1].push_back(static_cast<Eigen::Index>(i));
    ys[t[i] - 1].push_back(y[i]);
  }
  std::shared_ptr<Regressor> fitted[2];
  for (int a = 0; a < 2; ++a) {
    if (rows[a].empty()) throw Error(ErrorCode::kDomain, "cate: relabeled arm " + std::to_string(a + 1) + " is empty");
    Matrix sub(rows[a].size(), x.cols());
    for (std::size_t k = 0; k < rows[a].size(); ++k) sub.row(k) = x.row(rows[a][k]);
    fitted[a] = factory_();
    fitted[a]->fit(sub, ys[a]);
  }
  control_ = fitted[0];
  treated_ = fitted[1];
}

double CateEstimator::predict(std::span<const double> x) const {
  if (!control_ || !treated_) throw Error(ErrorCode::kDomain, "cate: estimator is not fitted");
  return treated_->predict(x) - control_->predict(x);
}

nlohmann::json CateEstimator::to_json() const {
  if (!control_ || !treated_) throw Error(ErrorCode::kDomain, "cate: estimator is not fitted");
  return {{"control", control_->to_json()}, {"treated", treated_->to_json()}};
}

CateEstimator CateEstimator::from_json(const nlohmann::json& doc) {
  CateEstimator out(nullptr);
  out.control_ = regressor_from_json(json_get<nlohmann::json>(doc, "control", "cate"));
  out.treated_ = regressor_from_json(json_get<nlohmann::json>(doc, "treated", "cate"));
  return out;
}

int one_vs_all_decision(std::span<const double> tva) {
  return static_cast<int>(std::min_element(tva.begin(), tva.end()) - tva.begin()) + 1;
}

int one_vs_one_a_decision(int m, const PairwiseEffects& tvs) {
  int best = 1;
  double best_value = std::numeric_limits<double>::infinity();
  for (int t = 1; t <= m; ++t) {
    double worst = std::numeric_limits<double>::infinity();
    for (int s = 1; s <= m; ++s) {
      if (s != t) worst = std::min(worst, tvs(t, s));
    }
    if (worst < best_value) {
      best_value = worst;
      best = t;
    }
  }
  return best;
}

int one_vs_one_b_decision(int m, const PairwiseEffects& tvs) {
  int best = 1;
  int best_votes = -1;
  for (int t = 1; t <= m; ++t) {
    int votes = 0;
    for (int s = 1; s <= m; ++s) {
      if (s != t && tvs(t, s) < 0) ++votes;
    }
    if (votes > best_votes) {
      best_votes = votes;
      best = t;
    }
  }
  return best;
}

OneVsAllPolicy::OneVsAllPolicy(std::vector<CateEstimator> estimators, std::size_t d)
    : estimators_(std::move(estimators)), d_(d) {
  if (estimators_.empty()) throw Error(ErrorCode::kDomain, "1va: need at least one estimator");
}

std::vector<double> OneVsAllPolicy::effects(std::span<const double> x) const {
  check_dims(x, d_, "1va");
  std::vector<double> out;
  for (const auto& e : estimators_) out.push_back(e.predict(x));
  return out;
}

int OneVsAllPolicy::prescribe(std::span<const double> x) const { return one_vs_all_decision(effects(x)); }

nlohmann::json OneVsAllPolicy::to_json() const {
  nlohmann::json est = nlohmann::json::array();
  for (const auto& e : estimators_) est.push_back(e.to_json());
  return {{"kind", "1va"}, {"m", estimators_.size()}, {"d", d_}, {"estimators", est}};
}

OneVsAllPolicy OneVsAllPolicy::from_json(const nlohmann::json& doc) {
  if (json_get<std::string>(doc, "kind", "1va") != "1va") throw Error(ErrorCode::kParse, "1va json: wrong kind");
  std::vector<CateEstimator> est;
  for (const auto& e : json_get<nlohmann::json>(doc, "estimators", "1va")) est.push_back(CateEstimator::from_json(e));
  if (est.size() != json_get<std::size_t>(doc, "m", "1va")) {
    throw Error(ErrorCode::kParse, "1va json: estimator count does not match m");
  }
  return OneVsAllPolicy(std::move(est), json_get<std::size_t>(doc, "d", "1va"));
}

OneVsOnePolicy::OneVsOnePolicy(int m, std::vector<std::optional<CateEstimator>> estimators,
                               OneVsOneRule rule, std::size_t d)
    : m_(m), estimators_(std::move(estimators)), rule_(rule), d_(d) {
  if (m_ < 1 || estimators_.size() != static_cast<std::size_t>(m_ * m_)) {
    throw Error(ErrorCode::kDomain, "1v1: need an m x m estimator table");
  }
  for (int t = 1; t <= m_; ++t) {
    for (int s = 1; s <= m_; ++s) {
      if (s != t && !estimators_[(t - 1) * m_ + (s - 1)]) {
        throw Error(ErrorCode::kDomain, "1v1: missing estimator for pair (" + std::to_string(t) + ", " +
                                            std::to_string(s) + ")");
      }
    }
  }
}

int OneVsOnePolicy::prescribe(std::span<const double> x) const {
  check_dims(x, d_, "1v1");
  std::vector<double> table(static_cast<std::size_t>(m_ * m_), 0.0);
  for (int t = 1; t <= m_; ++t) {
    for (int s = 1; s <= m_; ++s) {
      if (s != t) table[(t - 1) * m_ + (s - 1)] = estimators_[(t - 1) * m_ + (s - 1)]->predict(x);
    }
  }
  const PairwiseEffects tvs = [&](int t, int s) { return table[(t - 1) * m_ + (s - 1)]; };
  return rule_ == OneVsOneRule::kA ? one_vs_one_a_decision(m_, tvs) : one_vs_one_b_decision(m_, tvs);
}

nlohmann::json OneVsOnePolicy::to_json() const {
  nlohmann::json pairs = nlohmann::json::array();
  for (int t = 1; t <= m_; ++t) {
    for (int s = 1; s <= m_; ++s) {
      if (s == t) continue;
      auto entry = estimators_[(t - 1) * m_ + (s - 1)]->to_json();
      entry["t"] = t;
      entry["s"] = s;
      pairs.push_back(std::move(entry));
    }
  }
  return {{"kind", rule_ == OneVsOneRule::kA ? "1v1-a" : "1v1-b"}, {"m", m_}, {"d", d_}, {"pairs", pairs}};
}

OneVsOnePolicy OneVsOnePolicy::from_json(const nlohmann::json& doc) {
  const auto kind = json_get<std::string>(doc, "kind", "1v1");
  if (kind != "1v1-a" && kind != "1v1-b") throw Error(ErrorCode::kParse, "1v1 json: wrong kind");
  const int m = json_get<int>(doc, "m", "1v1");
  if (m < 1) throw Error(ErrorCode::kParse, "1v1 json: m must be positive");
  std::vector<std::optional<CateEstimator>> est(static_cast<std::size_t>(m * m));
  for (const auto& e : json_get<nlohmann::json>(doc, "pairs", "1v1")) {
    const int t = json_get<int>(e, "t", "1v1");
    const int s = json_get<int>(e, "s", "1v1");
    if (t < 1 || t > m || s < 1 || s > m || t == s) throw Error(ErrorCode::kParse, "1v1 json: bad pair");
    est[(t - 1) * m + (s - 1)] = CateEstimator::from_json(e);
  }
  try {
    return OneVsOnePolicy(m, std::move(est), kind == "1v1-a" ? OneVsOneRule::kA : OneVsOneRule::kB,
                          json_get<std::size_t>(doc, "d", "1v1"));
  } catch (const Error& e) {
    throw Error(ErrorCode::kParse, std::string("1v1 json: ") + e.what());
  }
}

OneVsAllPolicy fit_1va(const Dataset& ds, const RegressorFactory& factory) {
  std::vector<CateEstimator> est;
  for (int t = 1; t <= ds.m; ++t) {
    std::vector<int> relabeled(ds.size());
    for (std::size_t i = 0; i < ds.size(); ++i) relabeled[i] = ds.t[i] == t ? 2 : 1;
    const auto n_t = static_cast<std::size_t>(std::count(relabeled.begin(), relabeled.end(), 2));
    if (n_t == 0 || n_t == ds.size()) {
      throw Error(ErrorCode::kDomain, "1va: treatment " + std::to_string(t) + " versus the rest needs both " +
                                          "sides populated");
    }
    CateEstimator e(factory);
    e.fit(ds.x, relabeled, ds.y);
    est.push_back(std::move(e));
  }
  return OneVsAllPolicy(std::move(est), ds.dims());
}

OneVsOnePolicy fit_1v1(const Dataset& ds, const RegressorFactory& factory, OneVsOneRule rule) {
  const int m = ds.m;
  std::vector<std::optional<CateEstimator>> est(static_cast<std::size_t>(m * m));
  for (int t = 1; t <= m; ++t) {
    for (int s = 1; s <= m; ++s) {
      if (s == t) continue;
      std::vector<std::size_t> rows;
      std::vector<int> relabeled;
      std::vector<double> y;
      std::size_t n_t = 0;
      for (std::size_t i = 0; i < ds.size(); ++i) {
        if (ds.t[i] != t && ds.t[i] != s) continue;
        rows.push_back(i);
        relabeled.push_back(ds.t[i] == t ? 2 : 1);
        y.push_back(ds.y[i]);
        n_t += ds.t[i] == t ? 1 : 0;
      }
      if (n_t == 0 || n_t == rows.size()) {
        throw Error(ErrorCode::kDomain, "1v1: pair (" + std::to_string(t) + ", " + std::to_string(s) +
                                            ") has an empty arm");
      }
      CateEstimator e(factory);
      e.fit(rows_of(ds, rows), relabeled, y);
      est[(t - 1) * m + (s - 1)] = std::move(e);
    }
  }
  return OneVsOnePolicy(m, std::move(est), rule, ds.dims());
}

}  // namespace pertree
