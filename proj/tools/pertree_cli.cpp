// pertree command-line front end. Every subcommand is a thin shell over the C
// API; exit codes are 0 (ok), 1 (usage or configuration), 2 (data, I/O or
// feasibility).

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "pertree/pertree.h"

namespace {

using nlohmann::json;

constexpr int kExitUsage = 1;
constexpr int kExitData = 2;

struct Failure {
  int exit_code;
};

int exit_code_for(pertree_status s) {
  switch (s) {
    case PERTREE_OK: return 0;
    case PERTREE_ERR_USAGE:
    case PERTREE_ERR_CONFIG:
    case PERTREE_ERR_NULL_ARGUMENT:
      return kExitUsage;
    default:
      return kExitData;
  }
}

void check(pertree_status s) {
  if (s == PERTREE_OK) return;
  std::cerr << "pertree: " << pertree_status_name(s) << ": " << pertree_last_error() << "\n";
  throw Failure{exit_code_for(s)};
}

void usage_error(const std::string& message) {
  std::cerr << "pertree: usage: " << message << "\n";
  throw Failure{kExitUsage};
}

std::string take_string(char* s) {
  std::string out = s ? s : "";
  pertree_string_free(s);
  return out;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    std::cerr << "pertree: io: cannot open " << path << "\n";
    throw Failure{kExitData};
  }
  std::ostringstream text;
  text << in.rdbuf();
  return text.str();
}

json parse_or_fail(const std::string& text, const std::string& what) {
  try {
    return text.empty() ? json::object() : json::parse(text);
  } catch (const json::parse_error& e) {
    usage_error(what + " is not valid JSON: " + e.what());
  }
  return {};
}

void write_file(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out || !(out << text)) {
    std::cerr << "pertree: io: cannot write " << path << "\n";
    throw Failure{kExitData};
  }
}

struct Handle {
  pertree_dataset* ds = nullptr;
  pertree_model* model = nullptr;
  ~Handle() {
    pertree_dataset_free(ds);
    pertree_model_free(model);
  }
};

// CSV column options shared by every data-reading subcommand.
struct DataFlags {
  std::string path;
  std::string treatment_col = "treatment";
  std::string outcome_col = "outcome";
  std::string propensity_col;
  std::vector<std::string> categorical;
  std::vector<std::string> ignore;
  bool no_auto_detect = false;

  void attach(CLI::App* app) {
    app->add_option("--data", path, "Input CSV")->required();
    app->add_option("--treatment-col", treatment_col, "Treatment column (labels 1..m)");
    app->add_option("--outcome-col", outcome_col, "Outcome column (smaller is better)");
    app->add_option("--propensity-col", propensity_col, "Column with the propensity of the received treatment");
    app->add_option("--categorical", categorical, "Columns to one-hot encode")->delimiter(',');
    app->add_option("--ignore", ignore, "Columns to drop")->delimiter(',');
    app->add_flag("--no-auto-detect", no_auto_detect,
                  "Do not treat y1..ym as counterfactuals and q as the propensity");
  }

  pertree_dataset* load() const {
    json o{{"treatment_col", treatment_col},
           {"outcome_col", outcome_col},
           {"categorical", categorical},
           {"ignore", ignore},
           {"auto_detect", !no_auto_detect}};
    if (!propensity_col.empty()) o["propensity_col"] = propensity_col;
    pertree_dataset* ds = nullptr;
    check(pertree_dataset_load_csv(path.c_str(), o.dump().c_str(), &ds));
    return ds;
  }
};

struct MipFlags {
  int depth = 2;
  std::size_t n_min_leaf = 20;
  std::size_t n_features = 0;
  std::size_t n_cuts = 10;
  std::uint64_t seed = 0;

  void attach(CLI::App* app) {
    app->add_option("--depth", depth, "Tree depth")->check(CLI::Range(1, 12));
    app->add_option("--n-min-leaf", n_min_leaf, "Samples of every treatment required per leaf");
    app->add_option("--n-features", n_features, "Features drawn per node (0 = all)");
    app->add_option("--n-cuts", n_cuts, "Grid positions per feature");
    app->add_option("--seed", seed, "Feature-draw seed");
  }

  std::string to_json() const {
    return json{{"depth", depth}, {"n_min_leaf", n_min_leaf}, {"n_features", n_features}, {"n_cuts", n_cuts}, {"seed", seed}}
        .dump();
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Treatment personalization from observational data"};
  app.require_subcommand(1);
  app.set_version_flag("--version", pertree_version());

  // gen-data
  auto* gen = app.add_subcommand("gen-data", "Generate a synthetic dataset with full counterfactuals");
  std::string gen_spec, gen_benchmark, gen_out;
  std::optional<std::size_t> gen_n;
  std::optional<std::uint64_t> gen_seed;
  gen->add_option("--spec", gen_spec, "Synthetic spec JSON file");
  gen->add_option("--benchmark", gen_benchmark, "Named recipe: warfarin-like | smooth");
  gen->add_option("--n", gen_n, "Override the sample size");
  gen->add_option("--seed", gen_seed, "Override the seed");
  gen->add_option("--out", gen_out, "Output CSV")->required();

  // train
  auto* train = app.add_subcommand("train", "Fit a personalization policy");
  DataFlags train_data;
  train_data.attach(train);
  std::string train_algo, train_params, train_params_file, train_out;
  train->add_option("--algo", train_algo, "pt | pf | opt | rc-ols | rc-knn | 1va | 1v1-a | 1v1-b")->required();
  train->add_option("--params", train_params, "Parameters as inline JSON");
  train->add_option("--params-file", train_params_file, "Parameters as a JSON file");
  train->add_option("--out", train_out, "Model JSON output")->required();

  // predict
  auto* predict = app.add_subcommand("predict", "Prescribe a treatment for every row");
  DataFlags predict_data;
  predict_data.attach(predict);
  std::string predict_model, predict_out;
  predict->add_option("--model", predict_model, "Model JSON")->required();
  predict->add_option("--out", predict_out, "Output CSV (row, treatment); '-' for stdout")->required();

  // evaluate
  auto* evaluate = app.add_subcommand("evaluate", "Estimate risk and coefficients of personalization");
  DataFlags eval_data;
  eval_data.attach(evaluate);
  std::string eval_model, eval_out;
  bool eval_oracle = false, eval_ipw = false;
  std::optional<std::size_t> eval_greedy, eval_optimal;
  std::uint64_t eval_seed = 0;
  evaluate->add_option("--model", eval_model, "Model JSON")->required();
  auto* o_oracle = evaluate->add_flag("--oracle", eval_oracle, "Use the counterfactual columns");
  auto* o_ipw = evaluate->add_flag("--ipw", eval_ipw, "Inverse propensity weighting");
  auto* o_greedy = evaluate->add_option("--greedy", eval_greedy, "Greedy submatching with this many test subjects");
  auto* o_optimal = evaluate->add_option("--optimal", eval_optimal, "Optimal submatching with this many pairs");
  o_oracle->excludes(o_ipw, o_greedy, o_optimal);
  o_ipw->excludes(o_greedy, o_optimal);
  o_greedy->excludes(o_optimal);
  evaluate->add_option("--seed", eval_seed, "Submatching seed");
  evaluate->add_option("--out", eval_out, "Metrics JSON output (default stdout)");

  // submatch
  auto* submatch = app.add_subcommand("submatch", "Build a matched test set");
  DataFlags sm_data;
  sm_data.attach(submatch);
  std::string sm_method = "greedy", sm_out, sm_removed;
  std::size_t sm_size = 0;
  std::uint64_t sm_seed = 0;
  submatch->add_option("--method", sm_method, "greedy | optimal")->check(CLI::IsMember({"greedy", "optimal"}));
  submatch->add_option("--size", sm_size, "n_test (greedy) or n_pair (optimal)")->required();
  submatch->add_option("--seed", sm_seed, "Draw seed (greedy)");
  submatch->add_option("--out", sm_out, "Matched test set CSV")->required();
  submatch->add_option("--removed", sm_removed, "Write the removed subject indices as JSON");

  // export-mip
  auto* export_mip = app.add_subcommand("export-mip", "Write the tree MIP in fixed-format MPS");
  DataFlags mip_data;
  mip_data.attach(export_mip);
  MipFlags mip_flags;
  mip_flags.attach(export_mip);
  std::string mip_out, mip_names, mip_solution;
  export_mip->add_option("--out", mip_out, "MPS output")->required();
  export_mip->add_option("--names", mip_names, "Name map JSON (default <out>.names.json)");
  export_mip->add_option("--solution", mip_solution, "Also solve exactly and write the induced variable values");

  // check-solution
  auto* check_sol = app.add_subcommand("check-solution", "Check variable values against the tree MIP");
  DataFlags chk_data;
  chk_data.attach(check_sol);
  MipFlags chk_flags;
  chk_flags.attach(check_sol);
  std::string chk_solution;
  double chk_tol = 1e-9;
  check_sol->add_option("--solution", chk_solution, "JSON object of variable name -> value")->required();
  check_sol->add_option("--tol", chk_tol, "Absolute tolerance");

  // experiment
  auto* experiment = app.add_subcommand("experiment", "Run a learning-curve experiment");
  std::string exp_config, exp_out;
  experiment->add_option("--config", exp_config, "Experiment config JSON")->required();
  experiment->add_option("--out", exp_out, "Long-format CSV (overrides the config's output)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    Handle h;
    if (gen->parsed()) {
      if (gen_spec.empty() == gen_benchmark.empty()) usage_error("gen-data needs exactly one of --spec, --benchmark");
      json spec = gen_spec.empty() ? json{{"benchmark", gen_benchmark}} : parse_or_fail(read_file(gen_spec), gen_spec);
      if (gen_n) spec["n"] = *gen_n;
      if (gen_seed) spec["seed"] = *gen_seed;
      check(pertree_dataset_generate(spec.dump().c_str(), &h.ds));
      check(pertree_dataset_save_csv(h.ds, gen_out.c_str()));
    } else if (train->parsed()) {
      if (!train_params.empty() && !train_params_file.empty()) usage_error("use one of --params, --params-file");
      const std::string params = train_params_file.empty() ? train_params : read_file(train_params_file);
      parse_or_fail(params, "parameters");
      h.ds = train_data.load();
      check(pertree_model_train(h.ds, train_algo.c_str(), params.empty() ? nullptr : params.c_str(), &h.model));
      check(pertree_model_save(h.model, train_out.c_str()));
    } else if (predict->parsed()) {
      check(pertree_model_load(predict_model.c_str(), &h.model));
      h.ds = predict_data.load();
      std::size_t n = 0;
      check(pertree_dataset_shape(h.ds, &n, nullptr, nullptr));
      std::vector<int> t(n);
      check(pertree_model_predict(h.model, h.ds, t.data(), t.size()));
      std::ostringstream csv;
      csv << "row,treatment\n";
      for (std::size_t i = 0; i < n; ++i) csv << i << "," << t[i] << "\n";
      write_file(predict_out, csv.str());
    } else if (evaluate->parsed()) {
      json protocol;
      if (eval_oracle) protocol = {{"kind", "oracle"}};
      else if (eval_ipw) protocol = {{"kind", "ipw"}};
      else if (eval_greedy) protocol = {{"kind", "greedy"}, {"n_test", *eval_greedy}, {"seed", eval_seed}};
      else if (eval_optimal) protocol = {{"kind", "optimal"}, {"n_pair", *eval_optimal}};
      else usage_error("evaluate needs one of --oracle, --ipw, --greedy N, --optimal N");
      check(pertree_model_load(eval_model.c_str(), &h.model));
      h.ds = eval_data.load();
      char* metrics = nullptr;
      check(pertree_evaluate(h.model, h.ds, protocol.dump().c_str(), &metrics));
      write_file(eval_out, json::parse(take_string(metrics)).dump(2) + "\n");
    } else if (submatch->parsed()) {
      json protocol = sm_method == "greedy" ? json{{"kind", "greedy"}, {"n_test", sm_size}, {"seed", sm_seed}}
                                            : json{{"kind", "optimal"}, {"n_pair", sm_size}};
      h.ds = sm_data.load();
      char* removed = nullptr;
      check(pertree_submatch(h.ds, protocol.dump().c_str(), sm_out.c_str(), sm_removed.empty() ? nullptr : &removed));
      if (!sm_removed.empty()) write_file(sm_removed, take_string(removed) + "\n");
    } else if (export_mip->parsed()) {
      h.ds = mip_data.load();
      const std::string names = mip_names.empty() ? mip_out + ".names.json" : mip_names;
      char* summary = nullptr;
      check(pertree_export_mip(h.ds, mip_flags.to_json().c_str(), mip_out.c_str(), names.c_str(),
                               mip_solution.empty() ? nullptr : mip_solution.c_str(), &summary));
      std::cout << json::parse(take_string(summary)).dump(2) << "\n";
    } else if (check_sol->parsed()) {
      h.ds = chk_data.load();
      char* report = nullptr;
      check(pertree_check_solution(h.ds, chk_flags.to_json().c_str(), chk_solution.c_str(), chk_tol, &report));
      const json parsed = json::parse(take_string(report));
      std::cout << parsed.dump(2) << "\n";
      if (!parsed.at("feasible").get<bool>()) return kExitData;
    } else if (experiment->parsed()) {
      const json config = parse_or_fail(read_file(exp_config), exp_config);
      const std::string out = !exp_out.empty() ? exp_out : config.value("output", std::string());
      if (out.empty()) usage_error("experiment needs --out or an 'output' entry in the config");
      check(pertree_run_experiment(config.dump().c_str(), out.c_str()));
    }
  } catch (const Failure& f) {
    return f.exit_code;
  }
  return 0;
}
