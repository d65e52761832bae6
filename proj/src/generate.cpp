// Synthetic and semi-synthetic data with full potential outcomes.
//
// Outcome models, for t in [1..m]:
//   smooth    E[Y(t)|x] = |x1 - c_t| + x2 / 2,  c_t = (t - 1/2) / m
//   linear    E[Y(t)|x] = (t - (m + 1) / 2) (x1 - 1/2)
//   wave      E[Y(t)|x] = cos(t (1 + sum_k x_k))
//   warfarin  Y(t) = 1[t != g] where g is the dose group (<= 21, (21, 49),
//             >= 49 mg/week) of a sqrt weekly dose drawn from the IWPC
//             pharmacogenetic model plus noise * N(0, 1)
// (x1 is the first covariate.) All but warfarin add noise * N(0, 1).

#include <algorithm>
#include <cmath>
#include <numeric>

#include "pertree/dataset.hpp"

namespace pertree {
namespace {

// Dose-group cuts on the sqrt(mg/week) scale: sqrt(21) and sqrt(49).
constexpr double kLowDoseCut = 4.58257569495584;
constexpr double kHighDoseCut = 7.0;

// Warfarin covariate layout.
// VKORC1 columns: the -1639 G>A genotype, then six SNPs in linkage
// disequilibrium with it. CYP2C9: counts of *2 and *3 alleles.
constexpr std::size_t kVkorc1Snps = 7;
enum WarfarinColumn : std::size_t {
  kBmi, kAgeDecade, kHeight, kWeight, kVkorc1,
  kCyp2c9Star2 = kVkorc1 + kVkorc1Snps, kCyp2c9Star3, kRace, kAmiodarone, kInducer,
  kMale, kSmoker, kDiabetes, kAtrialFibrillation, kThrombosis, kWarfarinColumns
};

bool known(const std::string& v, std::initializer_list<const char*> names) {
  return std::any_of(names.begin(), names.end(), [&](const char* n) { return v == n; });
}

// IWPC pharmacogenetic algorithm for sqrt(mg/week).
// VKORC1: 0 G/G, 1 A/G, 2 A/A. Race: 0 white, 1 asian, 2 black.
double warfarin_score(std::span<const double> x) {
  static constexpr double vkorc1[] = {0.0, -0.8677, -1.6974};
  // Indexed [*2 count][*3 count].
  static constexpr double cyp2c9[3][3] = {
      {0.0, -0.9357, -2.3312}, {-0.5211, -1.9206, 0.0}, {-1.0616, 0.0, 0.0}};
  static constexpr double race[] = {0.0, -0.1092, -0.2760};
  return 5.6044 - 0.2614 * x[kAgeDecade] + 0.0087 * x[kHeight] + 0.0128 * x[kWeight] +
         vkorc1[static_cast<int>(x[kVkorc1])] +
         cyp2c9[static_cast<int>(x[kCyp2c9Star2])][static_cast<int>(x[kCyp2c9Star3])] +
         race[static_cast<int>(x[kRace])] + 1.1816 * x[kInducer] - 0.5503 * x[kAmiodarone];
}

int dose_group(double score) {
  if (score <= kLowDoseCut) return 1;
  if (score >= kHighDoseCut) return 3;
  return 2;
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

int categorical_draw(Rng& rng, std::initializer_list<double> probs) {
  double u = rng.uniform();
  int k = 0;
  for (double p : probs) {
    if (u < p) return k;
    u -= p;
    ++k;
  }
  return k - 1;
}

// Genotype frequencies vary by race; anthropometrics by sex and race.
template <typename Row>
void draw_warfarin_patient(Rng& rng, Row& row) {
  const int race = categorical_draw(rng, {0.55, 0.30, 0.15});
  const bool male = rng.uniform() < 0.55;
  double height = male ? 176.0 + 8.0 * rng.normal() : 162.0 + 7.0 * rng.normal();
  double weight = male ? 86.0 + 18.0 * rng.normal() : 72.0 + 17.0 * rng.normal();
  if (race == 1) {
    height -= 8.0;
    weight -= 15.0;
  }
  height = std::clamp(height, 135.0, 210.0);
  weight = std::clamp(weight, 35.0, 200.0);
  // CYP2C9 genotypes in order *1/*1, *1/*2, *1/*3, *2/*2, *2/*3, *3/*3.
  static constexpr int star2[] = {0, 1, 0, 2, 1, 0};
  static constexpr int star3[] = {0, 0, 1, 0, 1, 2};
  auto draw_vkorc1 = [&] {
    if (race == 0) return categorical_draw(rng, {0.38, 0.46, 0.16});
    if (race == 1) return categorical_draw(rng, {0.02, 0.16, 0.82});
    return categorical_draw(rng, {0.78, 0.20, 0.02});
  };
  const int vkorc1 = draw_vkorc1();
  int cyp2c9;
  if (race == 0) {
    cyp2c9 = categorical_draw(rng, {0.65, 0.19, 0.11, 0.02, 0.02, 0.01});
  } else if (race == 1) {
    cyp2c9 = categorical_draw(rng, {0.93, 0.0, 0.07, 0.0, 0.0, 0.0});
  } else {
    cyp2c9 = categorical_draw(rng, {0.90, 0.04, 0.03, 0.01, 0.01, 0.01});
  }
  row(kBmi) = weight / (height * height / 1e4);
  row(kAgeDecade) = 2 + categorical_draw(rng, {0.02, 0.04, 0.08, 0.15, 0.25, 0.27, 0.15, 0.04});
  row(kHeight) = height;
  row(kWeight) = weight;
  row(kVkorc1) = vkorc1;
  for (std::size_t k = 1; k < kVkorc1Snps; ++k) {
    row(kVkorc1 + k) = rng.uniform() < 0.9 ? vkorc1 : draw_vkorc1();
  }
  row(kCyp2c9Star2) = star2[cyp2c9];
  row(kCyp2c9Star3) = star3[cyp2c9];
  row(kRace) = race;
  row(kAmiodarone) = rng.uniform() < 0.06 ? 1.0 : 0.0;
  row(kInducer) = rng.uniform() < 0.03 ? 1.0 : 0.0;
  row(kMale) = male ? 1.0 : 0.0;
  row(kSmoker) = rng.uniform() < 0.10 ? 1.0 : 0.0;
  row(kDiabetes) = rng.uniform() < 0.20 ? 1.0 : 0.0;
  row(kAtrialFibrillation) = rng.uniform() < 0.45 ? 1.0 : 0.0;
  row(kThrombosis) = rng.uniform() < 0.30 ? 1.0 : 0.0;
}

std::vector<double> ordinal_propensity(double z, int m, double strength) {
  std::vector<double> logits(m);
  const double center = (m + 1) / 2.0;
  for (int t = 1; t <= m; ++t) logits[t - 1] = strength * (t - center) * z;
  const double top = *std::max_element(logits.begin(), logits.end());
  double total = 0.0;
  for (auto& l : logits) {
    l = std::exp(l - top);
    total += l;
  }
  for (auto& l : logits) l /= total;
  return logits;
}

}  // namespace

std::vector<double> confounded_propensity(double z, int m) {
  if (m != 3) {
    throw Error(ErrorCode::kUnsupported,
                "confounded_propensity: the single-feature logistic family is defined for "
                "3 treatments, got " + std::to_string(m));
  }
  if (!std::isfinite(z)) throw Error(ErrorCode::kDomain, "confounded_propensity: z must be finite");
  // exp((t - 2) z) for t = 1, 2, 3, scaled by exp(-|z|) to avoid overflow.
  const double a = std::abs(z);
  std::vector<double> p{std::exp(-z - a), std::exp(-a), std::exp(z - a)};
  const double total = p[0] + p[1] + p[2];
  for (auto& v : p) v /= total;
  return p;
}

void SyntheticSpec::validate() const {
  if (n < 1 || d < 1 || m < 2) {
    throw Error(ErrorCode::kConfig, "synthetic spec: need n >= 1, d >= 1, m >= 2");
  }
  if (!(noise >= 0.0)) throw Error(ErrorCode::kConfig, "synthetic spec: noise must be >= 0");
  if (!known(covariates, {"uniform", "normal", "discrete"})) {
    throw Error(ErrorCode::kConfig, "synthetic spec: unknown covariate model '" + covariates + "'");
  }
  if (covariates == "discrete" && levels < 1) {
    throw Error(ErrorCode::kConfig, "synthetic spec: discrete covariates need levels >= 1");
  }
  if (!known(outcome, {"smooth", "linear", "wave", "warfarin"})) {
    throw Error(ErrorCode::kConfig, "synthetic spec: unknown outcome model '" + outcome + "'");
  }
  if (outcome == "warfarin" && (m != 3 || d < kWarfarinColumns)) {
    throw Error(ErrorCode::kConfig, "synthetic spec: warfarin outcome needs m = 3 and d >= " +
                                        std::to_string(kWarfarinColumns));
  }
  if (!known(propensity, {"uniform", "bmi-logistic", "ordinal-logistic"})) {
    throw Error(ErrorCode::kConfig, "synthetic spec: unknown propensity model '" + propensity + "'");
  }
  if (propensity != "uniform" && propensity_feature >= d) {
    throw Error(ErrorCode::kConfig, "synthetic spec: propensity feature out of range");
  }
  if (propensity == "bmi-logistic" && m != 3) {
    throw Error(ErrorCode::kConfig, "synthetic spec: bmi-logistic propensity needs m = 3");
  }
}

SyntheticSpec synthetic_spec_from_json(const nlohmann::json& doc) {
  SyntheticSpec s;
  try {
    if (doc.contains("schema_version") && doc.at("schema_version").get<int>() != 1) {
      throw Error(ErrorCode::kConfig, "synthetic spec: unsupported schema_version");
    }
    if (doc.contains("benchmark")) s = benchmark_spec(doc.at("benchmark").get<std::string>());
    s.n = doc.value("n", s.n);
    s.d = doc.value("d", s.d);
    s.m = doc.value("m", s.m);
    s.seed = doc.value("seed", s.seed);
    if (doc.contains("covariates")) {
      const auto& c = doc.at("covariates");
      s.covariates = c.value("kind", s.covariates);
      s.levels = c.value("levels", s.levels);
    }
    if (doc.contains("outcome")) {
      const auto& o = doc.at("outcome");
      s.outcome = o.value("kind", s.outcome);
      s.noise = o.value("noise", s.noise);
    }
    if (doc.contains("propensity")) {
      const auto& p = doc.at("propensity");
      s.propensity = p.value("kind", s.propensity);
      s.propensity_feature = p.value("feature", s.propensity_feature);
      s.propensity_strength = p.value("strength", s.propensity_strength);
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kConfig, std::string("synthetic spec: ") + e.what());
  }
  s.validate();
  return s;
}

nlohmann::json to_json(const SyntheticSpec& s) {
  return {{"schema_version", 1},
          {"n", s.n},
          {"d", s.d},
          {"m", s.m},
          {"seed", s.seed},
          {"covariates", {{"kind", s.covariates}, {"levels", s.levels}}},
          {"outcome", {{"kind", s.outcome}, {"noise", s.noise}}},
          {"propensity",
           {{"kind", s.propensity},
            {"feature", s.propensity_feature},
            {"strength", s.propensity_strength}}}};
}

Matrix draw_covariates(const SyntheticSpec& spec, std::size_t n, std::uint64_t seed) {
  spec.validate();
  Rng rng(seed);
  Matrix x(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(spec.d));
  for (std::size_t i = 0; i < n; ++i) {
    if (spec.outcome == "warfarin") {
      auto row = x.row(static_cast<Eigen::Index>(i));
      draw_warfarin_patient(rng, row);
      for (std::size_t j = kWarfarinColumns; j < spec.d; ++j) row(static_cast<Eigen::Index>(j)) = rng.normal();
      continue;
    }
    for (std::size_t j = 0; j < spec.d; ++j) {
      if (spec.covariates == "uniform") {
        x(i, j) = rng.uniform();
      } else if (spec.covariates == "normal") {
        x(i, j) = rng.normal();
      } else {
        x(i, j) = static_cast<double>(rng.below(static_cast<std::size_t>(spec.levels)));
      }
    }
  }
  return x;
}

std::vector<double> expected_outcomes(const SyntheticSpec& spec, std::span<const double> x) {
  if (x.size() != spec.d) throw Error(ErrorCode::kBounds, "expected_outcomes: dimension mismatch");
  const int m = spec.m;
  std::vector<double> mu(m);
  if (spec.outcome == "smooth") {
    const double shared = spec.d >= 2 ? 0.5 * x[1] : 0.0;
    for (int t = 1; t <= m; ++t) mu[t - 1] = std::abs(x[0] - (t - 0.5) / m) + shared;
  } else if (spec.outcome == "linear") {
    for (int t = 1; t <= m; ++t) mu[t - 1] = (t - (m + 1) / 2.0) * (x[0] - 0.5);
  } else if (spec.outcome == "wave") {
    const double s = std::accumulate(x.begin(), x.end(), 1.0);
    for (int t = 1; t <= m; ++t) mu[t - 1] = std::cos(t * s);
  } else if (spec.outcome == "warfarin") {
    const double s = warfarin_score(x);
    double p_low, p_high;
    if (spec.noise > 0) {
      p_low = normal_cdf((kLowDoseCut - s) / spec.noise);
      p_high = 1.0 - normal_cdf((kHighDoseCut - s) / spec.noise);
    } else {
      p_low = s <= kLowDoseCut ? 1.0 : 0.0;
      p_high = s >= kHighDoseCut ? 1.0 : 0.0;
    }
    const double p_mid = 1.0 - p_low - p_high;
    mu = {1.0 - p_low, 1.0 - p_mid, 1.0 - p_high};
  } else {
    throw Error(ErrorCode::kConfig, "unknown outcome model '" + spec.outcome + "'");
  }
  return mu;
}

SyntheticSpec benchmark_spec(const std::string& name) {
  SyntheticSpec s;
  if (name == "warfarin-like") {
    s.d = kWarfarinColumns;
    s.m = 3;
    s.outcome = "warfarin";
    s.noise = 1.0;
    s.propensity = "bmi-logistic";
    s.propensity_feature = kBmi;
  } else if (name == "smooth") {
    s.d = 2;
    s.m = 3;
    s.covariates = "uniform";
    s.outcome = "smooth";
    s.noise = 0.1;
    s.propensity = "ordinal-logistic";
    s.propensity_feature = 1;
  } else {
    throw Error(ErrorCode::kUsage, "unknown benchmark '" + name + "' (valid: warfarin-like, smooth)");
  }
  return s;
}

Dataset generate_synthetic(const SyntheticSpec& spec) {
  spec.validate();
  const std::size_t n = spec.n;
  const int m = spec.m;
  Rng rng(spec.seed);
  Dataset ds;
  ds.m = m;
  ds.schema = FeatureSchema::numeric(spec.d);
  ds.x = draw_covariates(spec, n, rng.next());

  // Standardize the assignment feature by its sample mean and std.
  double mean = 0.0, sd = 1.0;
  if (spec.propensity != "uniform") {
    const auto col = ds.x.col(static_cast<Eigen::Index>(spec.propensity_feature));
    mean = col.mean();
    if (n > 1) {
      const double ss = (col.array() - mean).square().sum();
      sd = std::sqrt(ss / static_cast<double>(n - 1));
    }
    if (!(sd > 0.0)) sd = 1.0;
  }

  Matrix cf(static_cast<Eigen::Index>(n), m);
  ds.t.resize(n);
  ds.y.resize(n);
  std::vector<double> q(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto x = ds.row(i);
    if (spec.outcome == "warfarin") {
      const int g = dose_group(warfarin_score(x) + spec.noise * rng.normal());
      for (int t = 1; t <= m; ++t) cf(i, t - 1) = t == g ? 0.0 : 1.0;
    } else {
      const auto mu = expected_outcomes(spec, x);
      for (int t = 1; t <= m; ++t) cf(i, t - 1) = mu[t - 1] + spec.noise * rng.normal();
    }

    std::vector<double> probs;
    if (spec.propensity == "uniform") {
      probs.assign(m, 1.0 / m);
    } else {
      const double z = (x[spec.propensity_feature] - mean) / sd;
      probs = spec.propensity == "bmi-logistic"
                  ? confounded_propensity(z, m)
                  : ordinal_propensity(z, m, spec.propensity_strength);
    }
    double u = rng.uniform();
    int chosen = 0;
    for (int t = 1; t <= m; ++t) {
      if (u < probs[t - 1]) {
        chosen = t;
        break;
      }
      u -= probs[t - 1];
    }
    // Rounding can exhaust u; fall back to the last arm with positive mass.
    for (int t = m; chosen == 0; --t) {
      if (probs[t - 1] > 0.0) chosen = t;
    }
    ds.t[i] = chosen;
    q[i] = probs[chosen - 1];
    ds.y[i] = cf(i, chosen - 1);
  }
  ds.cf = std::move(cf);
  ds.q = std::move(q);
  ds.validate();
  return ds;
}

}  // namespace pertree
