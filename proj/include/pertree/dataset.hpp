#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "pertree/common.hpp"

namespace pertree {

// Row-major so that a subject's covariate vector is contiguous.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct FeatureKind {
  bool categorical = false;
  std::vector<std::string> levels;  // only for categorical features

  bool operator==(const FeatureKind&) const = default;
};

// Source features before encoding. Categorical features expand into one
// indicator column per level (all levels kept), so encoded_width() is the
// covariate dimension d.
struct FeatureSchema {
  std::vector<std::string> names;
  std::vector<FeatureKind> kinds;

  static FeatureSchema numeric(std::size_t d);
  std::size_t encoded_width() const;
  std::vector<std::string> encoded_names() const;
  void validate() const;

  bool operator==(const FeatureSchema&) const = default;
};

// Observational personalization data. Treatments are 1-based labels in
// [1..m]; outcomes are costs (smaller is better).
struct Dataset {
  Matrix x;
  std::vector<int> t;
  std::vector<double> y;
  int m = 0;
  std::optional<Matrix> cf;                // n x m potential outcomes
  std::optional<std::vector<double>> q;    // propensity of the received treatment
  FeatureSchema schema;

  std::size_t size() const { return y.size(); }
  std::size_t dims() const { return static_cast<std::size_t>(x.cols()); }
  std::span<const double> row(std::size_t i) const {
    return {x.data() + i * x.cols(), static_cast<std::size_t>(x.cols())};
  }
  // Per-treatment sample counts, indexed by t - 1.
  std::vector<std::size_t> arm_counts() const;
  // Throws Error(kDomain/kBounds) when any invariant is broken.
  void validate() const;
};

struct CsvOptions {
  std::string treatment_col = "treatment";
  std::string outcome_col = "outcome";
  // Read counterfactual columns y1..ym.
  bool counterfactuals = false;
  std::optional<std::string> propensity_col;
  // Columns forced to categorical. Columns with no numeric cell at all are
  // detected as categorical automatically.
  std::vector<std::string> categorical;
  // Additional columns to ignore entirely.
  std::vector<std::string> ignore;
  // When set, a header containing y1 enables `counterfactuals`, and a column
  // named q is taken as the propensity column.
  bool auto_detect = false;
};

Dataset read_csv(std::istream& in, const CsvOptions& options);
Dataset load_csv(const std::filesystem::path& path, const CsvOptions& options);
// Writes encoded features, treatment, outcome, then y1..ym and q when present.
// Floats use shortest round-trip formatting.
void write_csv(const Dataset& ds, std::ostream& out);
void save_csv(const Dataset& ds, const std::filesystem::path& path);

// Single-feature logistic assignment over three treatments: component t is
// proportional to exp((t - 2) z) for the standardized feature value z.
std::vector<double> confounded_propensity(double z, int m = 3);

// Recipe for synthetic data with known potential outcomes.
//   covariates: "uniform" (U[0,1]), "normal" (N(0,1)), "discrete" (integers in
//               [0, levels))
//   outcome:    "smooth" | "linear" | "wave" | "warfarin" (see generate.cpp)
//   propensity: "uniform" | "bmi-logistic" (m = 3) | "ordinal-logistic"
struct SyntheticSpec {
  std::size_t n = 1000;
  std::size_t d = 2;
  int m = 2;
  std::string covariates = "uniform";
  int levels = 3;
  std::string outcome = "smooth";
  double noise = 0.1;
  std::string propensity = "uniform";
  std::size_t propensity_feature = 0;
  double propensity_strength = 1.0;
  std::uint64_t seed = 0;

  void validate() const;
};

SyntheticSpec synthetic_spec_from_json(const nlohmann::json& doc);
nlohmann::json to_json(const SyntheticSpec& spec);

Dataset generate_synthetic(const SyntheticSpec& spec);
// Named recipes: "warfarin-like" (dose groups, BMI-driven assignment) and
// "smooth" (two uniform covariates, ordinal assignment). n and seed are left
// at their defaults.
SyntheticSpec benchmark_spec(const std::string& name);
// Conditional mean outcomes E[Y(t) | X = x] of the spec's outcome model,
// indexed by t - 1.
std::vector<double> expected_outcomes(const SyntheticSpec& spec, std::span<const double> x);
// Fresh covariate draws following the spec's covariate model.
Matrix draw_covariates(const SyntheticSpec& spec, std::size_t n, std::uint64_t seed);

// Row subset; m and schema are preserved. Out-of-range indices throw kBounds.
Dataset split(const Dataset& ds, std::span<const std::size_t> indices);

struct BootstrapSample {
  Dataset data;
  std::vector<std::size_t> indices;
};
std::vector<std::size_t> bootstrap_indices(std::size_t n, std::uint64_t seed);
BootstrapSample bootstrap(const Dataset& ds, std::uint64_t seed);

}  // namespace pertree
