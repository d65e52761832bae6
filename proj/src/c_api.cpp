#include "pertree/pertree.h"

#include <cstring>
#include <fstream>
#include <memory>
#include <sstream>
#include <string>

#include "pertree/dataset.hpp"
#include "pertree/experiment.hpp"
#include "pertree/mip.hpp"
#include "pertree/models.hpp"
#include "pertree/opt.hpp"

struct pertree_dataset {
  pertree::Dataset data;
};

struct pertree_model {
  std::shared_ptr<pertree::Policy> policy;
};

namespace {

thread_local std::string g_last_error;

struct NullArgument {
  const char* name;
};

pertree_status status_of(pertree::ErrorCode code) { return static_cast<pertree_status>(static_cast<int>(code)); }

template <class Body>
pertree_status guarded(Body&& body) {
  g_last_error.clear();
  try {
    body();
    return PERTREE_OK;
  } catch (const pertree::Error& e) {
    g_last_error = e.what();
    return status_of(e.code());
  } catch (const NullArgument& e) {
    g_last_error = std::string("null argument: ") + e.name;
    return PERTREE_ERR_NULL_ARGUMENT;
  } catch (const nlohmann::json::exception& e) {
    g_last_error = std::string("json: ") + e.what();
    return PERTREE_ERR_PARSE;
  } catch (const std::exception& e) {
    g_last_error = std::string("internal error: ") + e.what();
    return PERTREE_ERR_INTERNAL;
  } catch (...) {
    g_last_error = "internal error";
    return PERTREE_ERR_INTERNAL;
  }
}

template <class T>
T* require(T* p, const char* name) {
  if (!p) throw NullArgument{name};
  return p;
}

nlohmann::json parse_json(const char* text, const char* what) {
  if (!text || !*text) return nlohmann::json::object();
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw pertree::Error(pertree::ErrorCode::kParse, std::string(what) + ": " + e.what());
  }
}

nlohmann::json read_json_file(const char* path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw pertree::Error(pertree::ErrorCode::kIo, std::string("cannot open ") + path);
  std::ostringstream text;
  text << in.rdbuf();
  try {
    return nlohmann::json::parse(text.str());
  } catch (const nlohmann::json::parse_error& e) {
    throw pertree::Error(pertree::ErrorCode::kParse, std::string(path) + ": " + e.what());
  }
}

void write_text(const char* path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw pertree::Error(pertree::ErrorCode::kIo, std::string("cannot open ") + path + " for writing");
  out << text;
  if (!out) throw pertree::Error(pertree::ErrorCode::kIo, std::string("failed writing ") + path);
}

char* duplicate(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

pertree::CsvOptions csv_options(const nlohmann::json& doc) {
  pertree::CsvOptions o;
  try {
    o.treatment_col = doc.value("treatment_col", o.treatment_col);
    o.outcome_col = doc.value("outcome_col", o.outcome_col);
    o.counterfactuals = doc.value("counterfactuals", o.counterfactuals);
    if (doc.contains("propensity_col") && !doc.at("propensity_col").is_null()) {
      o.propensity_col = doc.at("propensity_col").get<std::string>();
    }
    o.categorical = doc.value("categorical", o.categorical);
    o.ignore = doc.value("ignore", o.ignore);
    o.auto_detect = doc.value("auto_detect", o.auto_detect);
  } catch (const nlohmann::json::exception& e) {
    throw pertree::Error(pertree::ErrorCode::kConfig, std::string("csv options: ") + e.what());
  }
  return o;
}

pertree::OptConfig opt_config(const nlohmann::json& doc) {
  pertree::OptConfig c;
  try {
    for (const auto& [key, value] : doc.items()) {
      if (key == "depth") c.depth = value.get<int>();
      else if (key == "n_min_leaf") c.n_min_leaf = value.get<std::size_t>();
      else if (key == "n_features") c.n_features = value.get<std::size_t>();
      else if (key == "n_cuts") c.n_cuts = value.get<std::size_t>();
      else if (key == "seed") c.seed = value.get<std::uint64_t>();
      else if (key == "time_limit") c.time_limit = value.get<double>();
      else throw pertree::Error(pertree::ErrorCode::kConfig, "mip: unknown parameter '" + key + "'");
    }
  } catch (const nlohmann::json::exception& e) {
    throw pertree::Error(pertree::ErrorCode::kConfig, std::string("mip parameters: ") + e.what());
  }
  c.validate();
  return c;
}

struct MipSetup {
  pertree::TreeSkeleton skeleton;
  pertree::CutMenu menu;
  pertree::MipModel model;
};

MipSetup build_mip_setup(const pertree::Dataset& ds, const pertree::OptConfig& config) {
  pertree::TreeSkeleton skeleton(config.depth);
  auto menu = pertree::build_cut_menu(ds, skeleton, config);
  auto model = pertree::build_mip(ds, skeleton, menu, config);
  return {skeleton, std::move(menu), std::move(model)};
}

}  // namespace

extern "C" {

const char* pertree_version(void) { return "0.1.0"; }

const char* pertree_last_error(void) { return g_last_error.c_str(); }

const char* pertree_status_name(pertree_status status) {
  switch (status) {
    case PERTREE_OK: return "ok";
    case PERTREE_ERR_NULL_ARGUMENT: return "null-argument";
    case PERTREE_ERR_INTERNAL: return "internal";
    default:
      if (status >= PERTREE_ERR_USAGE && status <= PERTREE_ERR_TIMEOUT) {
        return pertree::error_code_name(static_cast<pertree::ErrorCode>(status));
      }
      return "unknown";
  }
}

void pertree_string_free(char* s) { std::free(s); }

pertree_status pertree_dataset_load_csv(const char* path, const char* options_json, pertree_dataset** out) {
  return guarded([&] {
    require(out, "out");
    auto ds = std::make_unique<pertree_dataset>();
    ds->data = pertree::load_csv(require(path, "path"), csv_options(parse_json(options_json, "csv options")));
    *out = ds.release();
  });
}

pertree_status pertree_dataset_generate(const char* spec_json, pertree_dataset** out) {
  return guarded([&] {
    require(out, "out");
    const auto spec = pertree::synthetic_spec_from_json(parse_json(require(spec_json, "spec_json"), "spec"));
    auto ds = std::make_unique<pertree_dataset>();
    ds->data = pertree::generate_synthetic(spec);
    *out = ds.release();
  });
}

pertree_status pertree_dataset_save_csv(const pertree_dataset* ds, const char* path) {
  return guarded([&] { pertree::save_csv(require(ds, "ds")->data, require(path, "path")); });
}

pertree_status pertree_dataset_shape(const pertree_dataset* ds, size_t* n, size_t* d, int* m) {
  return guarded([&] {
    require(ds, "ds");
    if (n) *n = ds->data.size();
    if (d) *d = ds->data.dims();
    if (m) *m = ds->data.m;
  });
}

void pertree_dataset_free(pertree_dataset* ds) { delete ds; }

pertree_status pertree_model_train(const pertree_dataset* ds, const char* algo, const char* params_json,
                                   pertree_model** out) {
  return guarded([&] {
    require(out, "out");
    auto model = std::make_unique<pertree_model>();
    model->policy = pertree::train_policy(require(ds, "ds")->data, require(algo, "algo"),
                                          parse_json(params_json, "parameters"));
    *out = model.release();
  });
}

pertree_status pertree_model_from_json(const char* json, pertree_model** out) {
  return guarded([&] {
    require(out, "out");
    auto model = std::make_unique<pertree_model>();
    model->policy = pertree::policy_from_json(parse_json(require(json, "json"), "model json"));
    *out = model.release();
  });
}

pertree_status pertree_model_load(const char* path, pertree_model** out) {
  return guarded([&] {
    require(out, "out");
    auto model = std::make_unique<pertree_model>();
    model->policy = pertree::policy_from_json(read_json_file(require(path, "path")));
    *out = model.release();
  });
}

pertree_status pertree_model_to_json(const pertree_model* model, char** out) {
  return guarded([&] {
    require(out, "out");
    *out = duplicate(pertree::policy_to_json(*require(model, "model")->policy).dump());
  });
}

pertree_status pertree_model_save(const pertree_model* model, const char* path) {
  return guarded([&] {
    write_text(require(path, "path"), pertree::policy_to_json(*require(model, "model")->policy).dump() + "\n");
  });
}

pertree_status pertree_model_treatments(const pertree_model* model, int* m) {
  return guarded([&] { *require(m, "m") = require(model, "model")->policy->treatments(); });
}

pertree_status pertree_model_predict(const pertree_model* model, const pertree_dataset* ds, int* out,
                                     size_t capacity) {
  return guarded([&] {
    require(model, "model");
    require(ds, "ds");
    require(out, "out");
    if (capacity < ds->data.size()) {
      throw pertree::Error(pertree::ErrorCode::kBounds, "predict: output capacity smaller than the row count");
    }
    const auto t = pertree::prescribe_all(*model->policy, ds->data.x);
    std::copy(t.begin(), t.end(), out);
  });
}

pertree_status pertree_model_prescribe(const pertree_model* model, const double* x, size_t d, int* out) {
  return guarded([&] {
    *require(out, "out") = require(model, "model")->policy->prescribe(std::span<const double>(require(x, "x"), d));
  });
}

void pertree_model_free(pertree_model* model) { delete model; }

pertree_status pertree_evaluate(const pertree_model* model, const pertree_dataset* ds, const char* protocol_json,
                                char** metrics_json) {
  return guarded([&] {
    require(metrics_json, "metrics_json");
    const auto metrics = pertree::evaluate_policy(*require(model, "model")->policy, require(ds, "ds")->data,
                                                  parse_json(require(protocol_json, "protocol_json"), "protocol"));
    *metrics_json = duplicate(metrics.dump());
  });
}

pertree_status pertree_submatch(const pertree_dataset* ds, const char* protocol_json, const char* csv_path,
                                char** removed_json) {
  return guarded([&] {
    const auto mts = pertree::submatch_for_protocol(require(ds, "ds")->data,
                                                    parse_json(require(protocol_json, "protocol_json"), "protocol"));
    std::ostringstream csv;
    pertree::write_matched_csv(mts, csv);
    write_text(require(csv_path, "csv_path"), csv.str());
    if (removed_json) *removed_json = duplicate(nlohmann::json{{"removed", mts.removed}}.dump());
  });
}

pertree_status pertree_export_mip(const pertree_dataset* ds, const char* opt_json, const char* mps_path,
                                  const char* map_path, const char* solution_path, char** summary_json) {
  return guarded([&] {
    const auto& data = require(ds, "ds")->data;
    const auto config = opt_config(parse_json(opt_json, "mip parameters"));
    const auto setup = build_mip_setup(data, config);
    pertree::export_mps(setup.model, require(mps_path, "mps_path"), require(map_path, "map_path"));
    nlohmann::json summary{{"variables", setup.model.variables.size()},
                           {"constraints", setup.model.constraints.size()},
                           {"binaries", setup.model.binary_count()},
                           {"big_m", setup.model.big_m}};
    if (solution_path) {
      const auto result = pertree::solve_exact(data, setup.skeleton, setup.menu, config,
                                               pertree::warm_start_from_pt(data, setup.skeleton, setup.menu, config));
      const auto values = pertree::induced_solution(setup.model, data, setup.skeleton, setup.menu, result.assignment);
      write_text(solution_path, pertree::solution_to_json(setup.model, values).dump(1) + "\n");
      summary["objective"] = result.objective;
      summary["proven_optimal"] = result.proven_optimal;
    }
    if (summary_json) *summary_json = duplicate(summary.dump());
  });
}

pertree_status pertree_check_solution(const pertree_dataset* ds, const char* opt_json, const char* solution_path,
                                      double tolerance, char** report_json) {
  return guarded([&] {
    require(report_json, "report_json");
    const auto config = opt_config(parse_json(opt_json, "mip parameters"));
    const auto setup = build_mip_setup(require(ds, "ds")->data, config);
    const auto values = pertree::solution_from_json(setup.model, read_json_file(require(solution_path, "solution_path")));
    const auto check = pertree::check_solution(setup.model, values, tolerance > 0 ? tolerance : 1e-9);
    std::vector<std::string> shown(check.violations.begin(),
                                   check.violations.begin() + std::min<std::size_t>(check.violations.size(), 20));
    *report_json = duplicate(nlohmann::json{{"feasible", check.feasible},
                                            {"max_violation", check.max_violation},
                                            {"violation_count", check.violations.size()},
                                            {"violations", shown},
                                            {"objective", check.objective}}
                                 .dump());
  });
}

pertree_status pertree_run_experiment(const char* config_json, const char* csv_path) {
  return guarded([&] {
    const auto config = pertree::ExperimentConfig::from_json(parse_json(require(config_json, "config_json"), "experiment config"));
    const auto rows = pertree::run_experiment(config);
    std::ostringstream csv;
    pertree::write_experiment_csv(rows, csv);
    write_text(require(csv_path, "csv_path"), csv.str());
  });
}

}  // extern "C"
