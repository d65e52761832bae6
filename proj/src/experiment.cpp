#include "pertree/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>

#include "pertree/eval.hpp"
#include "pertree/models.hpp"

namespace pertree {

ExperimentConfig ExperimentConfig::from_json(const nlohmann::json& doc) {
  ExperimentConfig c;
  try {
    if (!doc.is_object()) throw Error(ErrorCode::kConfig, "experiment config: expected a JSON object");
    if (doc.value("schema_version", 0) != 1) {
      throw Error(ErrorCode::kConfig, "experiment config: schema_version must be 1");
    }
    c.data = doc.at("data");
    for (const auto& a : doc.at("algorithms")) {
      if (a.is_string()) {
        c.algorithms.push_back({a.get<std::string>(), nlohmann::json::object()});
      } else {
        c.algorithms.push_back({a.at("name").get<std::string>(), a.value("params", nlohmann::json::object())});
      }
    }
    c.n_grid = doc.at("n_grid").get<std::vector<std::size_t>>();
    c.replications = doc.value("replications", c.replications);
    c.seed = doc.value("seed", c.seed);
    c.threads = doc.value("threads", c.threads);
    c.output = doc.value("output", c.output);
    if (doc.contains("test")) {
      const auto& t = doc.at("test");
      c.test.kind = t.value("protocol", c.test.kind);
      c.test.n_test = t.value("n_test", c.test.n_test);
      c.test.n_pair = t.value("n_pair", c.test.n_pair);
      c.test.pool_extra = t.value("pool_extra", c.test.pool_extra);
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kConfig, std::string("experiment config: ") + e.what());
  }
  c.validate();
  return c;
}

void ExperimentConfig::validate() const {
  if (algorithms.empty()) throw Error(ErrorCode::kConfig, "experiment config: no algorithms");
  const auto& names = algorithm_names();
  for (const auto& a : algorithms) {
    if (std::find(names.begin(), names.end(), a.name) == names.end()) {
      std::string valid;
      for (const auto& n : names) valid += (valid.empty() ? "" : ", ") + n;
      throw Error(ErrorCode::kUsage, "unknown algorithm '" + a.name + "' (valid: " + valid + ")");
    }
  }
  if (n_grid.empty()) throw Error(ErrorCode::kConfig, "experiment config: empty n_grid");
  for (std::size_t k = 0; k < n_grid.size(); ++k) {
    if (n_grid[k] == 0 || (k > 0 && n_grid[k] <= n_grid[k - 1])) {
      throw Error(ErrorCode::kConfig, "experiment config: n_grid must be positive and strictly ascending");
    }
  }
  if (replications < 1) throw Error(ErrorCode::kConfig, "experiment config: replications must be >= 1");
  if (test.kind != "oracle" && test.kind != "greedy" && test.kind != "optimal") {
    throw Error(ErrorCode::kConfig, "experiment config: test protocol must be oracle, greedy or optimal");
  }
  if (test.kind == "optimal" && test.n_pair == 0) {
    throw Error(ErrorCode::kConfig, "experiment config: optimal protocol needs n_pair >= 1");
  }
  if (test.kind != "optimal" && test.n_test == 0) {
    throw Error(ErrorCode::kConfig, "experiment config: n_test must be >= 1");
  }
  if (!data.is_object() || data.size() != 1 ||
      !(data.contains("benchmark") || data.contains("synthetic") || data.contains("csv"))) {
    throw Error(ErrorCode::kConfig, "experiment config: data must hold exactly one of benchmark, synthetic, csv");
  }
}

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct Source {
  std::optional<SyntheticSpec> spec;
  std::optional<Dataset> table;
};

Source load_source(const nlohmann::json& data) {
  Source s;
  if (data.contains("benchmark")) {
    s.spec = benchmark_spec(data.at("benchmark").get<std::string>());
  } else if (data.contains("synthetic")) {
    s.spec = synthetic_spec_from_json(data.at("synthetic"));
  } else {
    const auto& c = data.at("csv");
    CsvOptions o;
    o.treatment_col = c.value("treatment_col", o.treatment_col);
    o.outcome_col = c.value("outcome_col", o.outcome_col);
    o.counterfactuals = c.value("counterfactuals", false);
    if (c.contains("propensity_col")) o.propensity_col = c.at("propensity_col").get<std::string>();
    o.categorical = c.value("categorical", std::vector<std::string>{});
    o.ignore = c.value("ignore", std::vector<std::string>{});
    s.table = load_csv(c.at("path").get<std::string>(), o);
  }
  return s;
}

struct Draw {
  Dataset train;
  std::optional<Dataset> oracle_test;
  std::optional<MatchedTestSet> matched;
};

Draw draw_replication(const Source& source, const TestProtocol& test, std::size_t n, std::uint64_t seed) {
  Dataset pool;
  std::vector<std::size_t> order;
  const int m = source.spec ? source.spec->m : source.table->m;
  if (source.spec) {
    SyntheticSpec spec = *source.spec;
    std::size_t extra = test.pool_extra;
    if (test.kind == "oracle") extra = test.n_test;
    else if (extra == 0) extra = test.kind == "greedy" ? static_cast<std::size_t>(m) * test.n_test : 2 * test.n_pair;
    spec.n = n + extra;
    spec.seed = mix_seed(seed, 0);
    pool = generate_synthetic(spec);
    order.resize(pool.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
  } else {
    pool = *source.table;
    Rng rng(mix_seed(seed, 0));
    order = rng.sample_without_replacement(pool.size(), pool.size());
  }

  Draw draw;
  if (test.kind == "oracle") {
    if (!pool.cf) throw Error(ErrorCode::kMissingColumn, "experiment: the oracle protocol needs counterfactual columns");
    if (pool.size() <= n) throw Error(ErrorCode::kBounds, "experiment: no subjects left for testing");
    const std::size_t n_test = std::min(test.n_test, pool.size() - n);
    draw.train = split(pool, std::span(order).subspan(0, n));
    draw.oracle_test = split(pool, std::span(order).subspan(n, n_test));
    return draw;
  }

  const Metric metric = mahalanobis_metric(pool);
  MatchedTestSet mts = test.kind == "greedy" ? greedy_submatch(pool, test.n_test, metric, mix_seed(seed, 1))
                                             : optimal_submatch(pool, test.n_pair, metric);
  std::vector<std::size_t> train_rows;
  for (std::size_t i : order) {
    if (train_rows.size() == n) break;
    if (!std::binary_search(mts.removed.begin(), mts.removed.end(), i)) train_rows.push_back(i);
  }
  if (train_rows.size() < n) {
    throw Error(ErrorCode::kInfeasible, "experiment: only " + std::to_string(train_rows.size()) +
                                            " unmatched subjects remain for n = " + std::to_string(n));
  }
  // Audit: no matched subject may reach training.
  for (std::size_t i : train_rows) {
    if (std::binary_search(mts.removed.begin(), mts.removed.end(), i)) {
      throw Error(ErrorCode::kDomain, "experiment: matched subject " + std::to_string(i) + " leaked into training");
    }
  }
  draw.train = split(pool, train_rows);
  draw.matched = std::move(mts);
  return draw;
}

bool recoverable(ErrorCode code) {
  switch (code) {
    case ErrorCode::kUndefinedImpurity:
    case ErrorCode::kUndefinedEstimate:
    case ErrorCode::kInfeasible:
    case ErrorCode::kEmptyMenu:
    case ErrorCode::kDomain:
    case ErrorCode::kTimeout:
      return true;
    default:
      return false;
  }
}

double coefficient_value(const Coefficient& c) { return c.defined ? c.value : kNaN; }

}  // namespace

std::vector<ExperimentRow> run_experiment(const ExperimentConfig& config) {
  config.validate();
  const Source source = load_source(config.data);
  const std::size_t n_algos = config.algorithms.size();
  const std::size_t n_cells = config.n_grid.size() * config.replications;
  const int threads = resolve_thread_count(config.threads);

  // rows[cell * n_algos + a]; reordered by (algo, n, replication) at the end.
  std::vector<ExperimentRow> rows(n_cells * n_algos);
  parallel_for(n_cells, threads, [&](std::size_t cell) {
    const std::size_t g = cell / config.replications;
    const std::size_t rep = cell % config.replications;
    const std::size_t n = config.n_grid[g];
    const std::uint64_t seed = mix_seed(mix_seed(config.seed, n), rep);
    const Draw draw = draw_replication(source, config.test, n, seed);
    for (std::size_t a = 0; a < n_algos; ++a) {
      const auto& algo = config.algorithms[a];
      ExperimentRow& row = rows[cell * n_algos + a];
      row = {algo.name, n, rep + 1, kNaN, kNaN, kNaN};
      nlohmann::json params = algo.params;
      if (!params.contains("seed")) params["seed"] = mix_seed(seed, 2 + a);
      if (algo.name == "pf" && !params.contains("threads") && threads > 1) params["threads"] = 1;
      std::shared_ptr<Policy> policy;
      try {
        policy = train_policy(draw.train, algo.name, params);
      } catch (const Error& e) {
        if (!recoverable(e.code())) throw;
        warn(algo.name + " at n = " + std::to_string(n) + ", replication " + std::to_string(rep + 1) +
             ": " + e.what());
        continue;
      }
      if (draw.oracle_test) {
        const auto metrics = oracle_metrics(*draw.oracle_test, *policy);
        row.risk = metrics.risk;
        row.p1 = coefficient_value(metrics.p1);
        row.p2 = coefficient_value(metrics.p2);
      } else {
        row.risk = matched_risk(*draw.matched, *policy);
        row.p1 = coefficient_value(p1_hat(*draw.matched, *policy));
        row.p2 = coefficient_value(p2_hat(*draw.matched, *policy));
      }
    }
  });

  std::vector<ExperimentRow> ordered;
  ordered.reserve(rows.size());
  for (std::size_t a = 0; a < n_algos; ++a) {
    for (std::size_t cell = 0; cell < n_cells; ++cell) ordered.push_back(std::move(rows[cell * n_algos + a]));
  }
  return ordered;
}

void write_experiment_csv(const std::vector<ExperimentRow>& rows, std::ostream& out) {
  out << "algo,n,replication,risk,p1,p2\n";
  for (const auto& r : rows) {
    out << r.algo << "," << r.n << "," << r.replication << "," << format_double(r.risk) << ","
        << format_double(r.p1) << "," << format_double(r.p2) << "\n";
  }
}

}  // namespace pertree
