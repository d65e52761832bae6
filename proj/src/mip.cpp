#include "pertree/mip.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <ostream>
#include <sstream>

namespace pertree {

std::size_t MipModel::add_variable(MipVariable v) {
  if (index_.contains(v.name)) throw Error(ErrorCode::kDomain, "mip: duplicate variable " + v.name);
  index_.emplace(v.name, variables.size());
  variables.push_back(std::move(v));
  return variables.size() - 1;
}

std::size_t MipModel::index_of(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw Error(ErrorCode::kMissingColumn, "mip: unknown variable " + name);
  return it->second;
}

std::size_t MipModel::binary_count() const {
  return static_cast<std::size_t>(std::count_if(variables.begin(), variables.end(), [](const auto& v) {
    return v.kind == VarKind::kBinary;
  }));
}

nlohmann::json MipModel::registry() const {
  nlohmann::json out = nlohmann::json::object();
  for (const auto& v : variables) out[v.name] = v.meaning;
  return out;
}

namespace {

std::string idx(std::initializer_list<long long> parts) {
  std::string s = "[";
  bool first = true;
  for (long long v : parts) {
    if (!first) s += ",";
    s += std::to_string(v);
    first = false;
  }
  return s + "]";
}

int code_bits(std::size_t cuts) {
  int k = 0;
  while ((std::size_t{1} << k) < cuts) ++k;
  return k;
}

bool code_bit(std::size_t c, int b) { return ((c >> b) & 1u) == 1u; }

}  // namespace

MipModel build_mip(const Dataset& ds, const TreeSkeleton& skeleton, const CutMenu& menu,
                   const OptConfig& config) {
  config.validate();
  ds.validate();
  const std::size_t n = ds.size();
  const int m = ds.m;
  const int first_leaf = skeleton.first_leaf();
  const int last_leaf = skeleton.last_leaf();
  const std::size_t leaves = static_cast<std::size_t>(skeleton.leaf_count());
  if (menu.cuts.size() != static_cast<std::size_t>(skeleton.internal_count())) {
    throw Error(ErrorCode::kBounds, "mip: menu does not match the skeleton");
  }
  for (std::size_t k = 0; k < menu.cuts.size(); ++k) {
    if (menu.cuts[k].empty()) throw Error(ErrorCode::kEmptyMenu, "mip: empty menu at node " + std::to_string(k + 1));
  }
  if (n < leaves * static_cast<std::size_t>(m) * config.n_min_leaf) {
    throw Error(ErrorCode::kInfeasible, "mip: " + std::to_string(n) + " samples cannot fill " +
                                            std::to_string(leaves) + " leaves with " +
                                            std::to_string(config.n_min_leaf) +
                                            " samples per treatment");
  }

  const auto ybar = shifted_outcomes(ds);
  const double ybar_max = ybar.empty() ? 0.0 : *std::max_element(ybar.begin(), ybar.end());
  const auto arm_counts = ds.arm_counts();
  const double max_arm = static_cast<double>(*std::max_element(arm_counts.begin(), arm_counts.end()));
  const double big_m = ybar_max * (max_arm - static_cast<double>(leaves * config.n_min_leaf));

  MipModel model;
  model.big_m = big_m;
  model.ybar_max = ybar_max;
  constexpr double kInf = std::numeric_limits<double>::infinity();

  // Variables, grouped by kind in declaration order.
  std::vector<std::vector<std::size_t>> w(n, std::vector<std::size_t>(leaves));
  std::vector<std::vector<std::size_t>> nu(n, std::vector<std::size_t>(leaves));
  std::vector<std::vector<std::size_t>> lambda(leaves, std::vector<std::size_t>(m));
  std::vector<std::size_t> mu(leaves);
  std::vector<std::vector<std::size_t>> gamma(menu.cuts.size());
  std::vector<std::vector<std::size_t>> delta(menu.cuts.size());

  for (std::size_t i = 0; i < n; ++i) {
    for (int p = first_leaf; p <= last_leaf; ++p) {
      w[i][p - first_leaf] = model.add_variable(
          {"w" + idx({static_cast<long long>(i), p}), VarKind::kContinuous, 0.0, 1.0,
           "sample " + std::to_string(i) + " lies in leaf " + std::to_string(p)});
    }
  }
  for (int p = first_leaf; p <= last_leaf; ++p) {
    for (int t = 1; t <= m; ++t) {
      lambda[p - first_leaf][t - 1] = model.add_variable(
          {"lambda" + idx({p, t}), VarKind::kBinary, 0.0, 1.0,
           "leaf " + std::to_string(p) + " prescribes treatment " + std::to_string(t)});
    }
  }
  for (int p = first_leaf; p <= last_leaf; ++p) {
    mu[p - first_leaf] = model.add_variable(
        {"mu" + idx({p}), VarKind::kContinuous, 0.0, kInf,
         "mean shifted outcome of the prescribed treatment in leaf " + std::to_string(p)});
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (int p = first_leaf; p <= last_leaf; ++p) {
      nu[i][p - first_leaf] = model.add_variable(
          {"nu" + idx({static_cast<long long>(i), p}), VarKind::kContinuous, 0.0, kInf,
           "mu of leaf " + std::to_string(p) + " if sample " + std::to_string(i) + " lies in it, else 0"});
    }
  }
  for (int p = 1; p < first_leaf; ++p) {
    const auto& cuts = menu.at(p);
    for (std::size_t c = 0; c < cuts.size(); ++c) {
      gamma[p - 1].push_back(model.add_variable(
          {"gamma" + idx({p, static_cast<long long>(c)}), VarKind::kContinuous, 0.0, 1.0,
           "node " + std::to_string(p) + " uses cut x" + std::to_string(cuts[c].feature) +
               " <= " + format_double(cuts[c].threshold)}));
    }
    for (int b = 0; b < code_bits(cuts.size()); ++b) {
      delta[p - 1].push_back(model.add_variable(
          {"delta" + idx({p, b}), VarKind::kBinary, 0.0, 1.0,
           "bit " + std::to_string(b) + " of the cut index chosen at node " + std::to_string(p)}));
    }
  }

  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t l = 0; l < leaves; ++l) model.objective.push_back({nu[i][l], 1.0});
  }

  auto add_row = [&](std::string name, std::vector<MipTerm> terms, Sense sense, double rhs) {
    model.constraints.push_back({std::move(name), std::move(terms), sense, rhs});
  };

  // Cut choice: binary code and simplex.
  for (int p = 1; p < first_leaf; ++p) {
    const auto& g = gamma[p - 1];
    for (std::size_t b = 0; b < delta[p - 1].size(); ++b) {
      std::vector<MipTerm> terms;
      for (std::size_t c = 0; c < g.size(); ++c) {
        if (code_bit(c, static_cast<int>(b))) terms.push_back({g[c], 1.0});
      }
      terms.push_back({delta[p - 1][b], -1.0});
      add_row("cut_code" + idx({p, static_cast<long long>(b)}), std::move(terms), Sense::kEq, 0.0);
    }
    std::vector<MipTerm> terms;
    for (std::size_t v : g) terms.push_back({v, 1.0});
    add_row("cut_one" + idx({p}), std::move(terms), Sense::kEq, 1.0);
  }

  // chi_i(gamma_q) terms scaled by `scale`.
  auto chi_terms = [&](std::size_t i, int q, double scale, std::vector<MipTerm>& terms) {
    const auto& cuts = menu.at(q);
    for (std::size_t c = 0; c < cuts.size(); ++c) {
      if (cuts[c].goes_left(ds.row(i))) terms.push_back({gamma[q - 1][c], scale});
    }
  };

  // Routing.
  for (int p = first_leaf; p <= last_leaf; ++p) {
    const auto path = skeleton.ancestors(p);
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t wv = w[i][p - first_leaf];
      for (const auto& a : path) {
        const double r = a.direction;
        std::vector<MipTerm> terms{{wv, 1.0}};
        chi_terms(i, a.node, r, terms);
        add_row("route_ub" + idx({static_cast<long long>(i), p, a.node}), std::move(terms), Sense::kLe,
                (1.0 + r) / 2.0);
      }
      // w >= 1 - sum_q ((1 - R)/2 + R chi_q)
      std::vector<MipTerm> terms{{wv, 1.0}};
      double rhs = 1.0;
      for (const auto& a : path) {
        const double r = a.direction;
        chi_terms(i, a.node, r, terms);
        rhs -= (1.0 - r) / 2.0;
      }
      add_row("route_lb" + idx({static_cast<long long>(i), p}), std::move(terms), Sense::kGe, rhs);
    }
  }

  // Minimum per-treatment leaf occupancy.
  for (int p = first_leaf; p <= last_leaf; ++p) {
    for (int t = 1; t <= m; ++t) {
      std::vector<MipTerm> terms;
      for (std::size_t i = 0; i < n; ++i) {
        if (ds.t[i] == t) terms.push_back({w[i][p - first_leaf], 1.0});
      }
      add_row("min_leaf" + idx({p, t}), std::move(terms), Sense::kGe,
              static_cast<double>(config.n_min_leaf));
    }
  }

  // nu = mu * w.
  for (std::size_t i = 0; i < n; ++i) {
    for (int p = first_leaf; p <= last_leaf; ++p) {
      const std::size_t l = p - first_leaf;
      const auto name = idx({static_cast<long long>(i), p});
      add_row("nu_w" + name, {{nu[i][l], 1.0}, {w[i][l], -ybar_max}}, Sense::kLe, 0.0);
      add_row("nu_mu" + name, {{nu[i][l], 1.0}, {mu[l], -1.0}}, Sense::kLe, 0.0);
      add_row("nu_lb" + name, {{nu[i][l], 1.0}, {mu[l], -1.0}, {w[i][l], -ybar_max}}, Sense::kGe,
              -ybar_max);
    }
  }

  // Treatment choice and mean consistency.
  for (int p = first_leaf; p <= last_leaf; ++p) {
    const std::size_t l = p - first_leaf;
    std::vector<MipTerm> one;
    for (int t = 1; t <= m; ++t) one.push_back({lambda[l][t - 1], 1.0});
    add_row("one_trt" + idx({p}), std::move(one), Sense::kEq, 1.0);
    for (int t = 1; t <= m; ++t) {
      std::vector<MipTerm> terms;
      for (std::size_t i = 0; i < n; ++i) {
        if (ds.t[i] != t) continue;
        terms.push_back({nu[i][l], 1.0});
        terms.push_back({w[i][l], -ybar[i]});
      }
      auto ub = terms;
      ub.push_back({lambda[l][t - 1], big_m});
      add_row("mean_ub" + idx({p, t}), std::move(ub), Sense::kLe, big_m);
      terms.push_back({lambda[l][t - 1], -big_m});
      add_row("mean_lb" + idx({p, t}), std::move(terms), Sense::kGe, -big_m);
    }
  }
  return model;
}

std::vector<double> induced_solution(const MipModel& model, const Dataset& ds,
                                     const TreeSkeleton& skeleton, const CutMenu& menu,
                                     const OptAssignment& assignment) {
  const auto cuts = resolve_cuts(menu, assignment);
  const auto ybar = shifted_outcomes(ds);
  const int first_leaf = skeleton.first_leaf();
  std::vector<double> values(model.variables.size(), 0.0);
  auto set = [&](const std::string& name, double v) { values[model.index_of(name)] = v; };

  std::vector<int> leaf_of(ds.size());
  std::vector<ArmStats> stats(skeleton.leaf_count(), ArmStats(ds.m));
  for (std::size_t i = 0; i < ds.size(); ++i) {
    leaf_of[i] = route(skeleton, cuts, ds.row(i));
    stats[leaf_of[i]].add(ds.t[i], ybar[i]);
  }
  std::vector<double> mu(skeleton.leaf_count(), 0.0);
  for (int l = 0; l < skeleton.leaf_count(); ++l) {
    const int p = first_leaf + l;
    const int t = assignment.treatments[l];
    const std::size_t count = stats[l].counts[t - 1];
    mu[l] = count > 0 ? stats[l].sums[t - 1] / static_cast<double>(count) : 0.0;
    set("mu" + idx({p}), mu[l]);
    set("lambda" + idx({p, t}), 1.0);
  }
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const int p = first_leaf + leaf_of[i];
    set("w" + idx({static_cast<long long>(i), p}), 1.0);
    set("nu" + idx({static_cast<long long>(i), p}), mu[leaf_of[i]]);
  }
  for (int p = 1; p < first_leaf; ++p) {
    const std::size_t c = assignment.cut_index[p - 1];
    set("gamma" + idx({p, static_cast<long long>(c)}), 1.0);
    for (int b = 0; b < code_bits(menu.at(p).size()); ++b) {
      set("delta" + idx({p, b}), code_bit(c, b) ? 1.0 : 0.0);
    }
  }
  return values;
}

double objective_value(const MipModel& model, std::span<const double> values) {
  double sum = 0.0;
  for (const auto& term : model.objective) sum += term.coef * values[term.var];
  return sum;
}

MipCheck check_solution(const MipModel& model, std::span<const double> values, double tol) {
  if (values.size() != model.variables.size()) {
    throw Error(ErrorCode::kBounds, "mip: solution has " + std::to_string(values.size()) +
                                        " values for " + std::to_string(model.variables.size()) +
                                        " variables");
  }
  MipCheck check;
  auto record = [&](const std::string& name, double violation) {
    if (violation > tol) {
      check.feasible = false;
      check.violations.push_back(name);
    }
    check.max_violation = std::max(check.max_violation, violation);
  };
  for (std::size_t k = 0; k < values.size(); ++k) {
    const auto& v = model.variables[k];
    const double x = values[k];
    if (!std::isfinite(x)) {
      record(v.name, std::numeric_limits<double>::infinity());
      continue;
    }
    record(v.name, std::max({0.0, v.lower - x, x - v.upper}));
    if (v.kind == VarKind::kBinary) record(v.name, std::abs(x - std::round(x)));
  }
  for (const auto& row : model.constraints) {
    double lhs = 0.0;
    for (const auto& term : row.terms) lhs += term.coef * values[term.var];
    double violation = 0.0;
    switch (row.sense) {
      case Sense::kLe: violation = std::max(0.0, lhs - row.rhs); break;
      case Sense::kGe: violation = std::max(0.0, row.rhs - lhs); break;
      case Sense::kEq: violation = std::abs(lhs - row.rhs); break;
    }
    record(row.name, violation);
  }
  check.objective = objective_value(model, values);
  return check;
}

std::vector<double> solution_from_json(const MipModel& model, const nlohmann::json& doc) {
  if (!doc.is_object()) throw Error(ErrorCode::kParse, "solution json: expected an object of name -> value");
  std::vector<double> values(model.variables.size(), 0.0);
  std::vector<char> seen(model.variables.size(), 0);
  for (const auto& [name, value] : doc.items()) {
    if (!value.is_number()) throw Error(ErrorCode::kParse, "solution json /" + name + ": expected a number");
    const std::size_t k = model.index_of(name);
    values[k] = value.get<double>();
    seen[k] = 1;
  }
  for (std::size_t k = 0; k < seen.size(); ++k) {
    if (!seen[k]) {
      throw Error(ErrorCode::kMissingColumn, "solution json: no value for " + model.variables[k].name);
    }
  }
  return values;
}

nlohmann::json solution_to_json(const MipModel& model, std::span<const double> values) {
  nlohmann::json out = nlohmann::json::object();
  for (std::size_t k = 0; k < model.variables.size(); ++k) out[model.variables[k].name] = values[k];
  return out;
}

namespace {

std::string column_name(std::size_t k) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "X%07zu", k + 1);
  return buf;
}

std::string row_name(std::size_t k) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "R%07zu", k + 1);
  return buf;
}

// Shortest %g rendering that fits the 12-character numeric field.
std::string mps_number(double v) {
  char buf[64];
  for (int precision = 12; precision >= 1; --precision) {
    std::snprintf(buf, sizeof buf, "%.*g", precision, v);
    if (std::strlen(buf) <= 12) return buf;
  }
  throw Error(ErrorCode::kDomain, "mps: value does not fit a 12-character field");
}

std::string field_line(const std::string& f1, const std::string& f2, const std::string& f3,
                       const std::string& f4) {
  // Columns 2-3, 5-12, 15-22, 25-36.
  char buf[128];
  std::snprintf(buf, sizeof buf, " %-2s %-8s  %-8s  %12s", f1.c_str(), f2.c_str(), f3.c_str(), f4.c_str());
  std::string s = buf;
  while (!s.empty() && s.back() == ' ') s.pop_back();
  return s;
}

}  // namespace

void write_mps(const MipModel& model, std::ostream& out) {
  // Mangled names carry seven digits to stay within eight characters.
  constexpr std::size_t kMaxNames = 9999999;
  if (model.variables.size() > kMaxNames || model.constraints.size() > kMaxNames) {
    throw Error(ErrorCode::kUnsupported, "mps: more than 9999999 columns or rows");
  }
  out << "NAME          " << model.name.substr(0, 8) << "\n";
  out << "ROWS\n";
  out << field_line("N", "OBJ", "", "") << "\n";
  for (std::size_t r = 0; r < model.constraints.size(); ++r) {
    const char* sense = model.constraints[r].sense == Sense::kLe   ? "L"
                        : model.constraints[r].sense == Sense::kGe ? "G"
                                                                    : "E";
    out << field_line(sense, row_name(r), "", "") << "\n";
  }

  // Column-major view of the objective and rows.
  std::vector<std::vector<std::pair<std::size_t, double>>> columns(model.variables.size());
  for (const auto& term : model.objective) {
    if (term.coef != 0.0) columns[term.var].push_back({0, term.coef});
  }
  for (std::size_t r = 0; r < model.constraints.size(); ++r) {
    for (const auto& term : model.constraints[r].terms) {
      if (term.coef == 0.0) continue;
      auto& col = columns[term.var];
      if (!col.empty() && col.back().first == r + 1) {
        col.back().second += term.coef;
      } else {
        col.push_back({r + 1, term.coef});
      }
    }
  }

  out << "COLUMNS\n";
  bool in_integer = false;
  std::size_t marker = 0;
  auto emit_marker = [&](const char* kind) {
    char buf[80];
    std::snprintf(buf, sizeof buf, "    M%07zu  'MARKER'                 '%s'", ++marker, kind);
    out << buf << "\n";
  };
  for (std::size_t k = 0; k < model.variables.size(); ++k) {
    const bool binary = model.variables[k].kind == VarKind::kBinary;
    if (binary != in_integer) {
      emit_marker(binary ? "INTORG" : "INTEND");
      in_integer = binary;
    }
    const auto name = column_name(k);
    if (columns[k].empty()) {
      out << field_line("", name, "OBJ", "0") << "\n";
      continue;
    }
    for (const auto& [row, coef] : columns[k]) {
      out << field_line("", name, row == 0 ? "OBJ" : row_name(row - 1), mps_number(coef)) << "\n";
    }
  }
  if (in_integer) emit_marker("INTEND");

  out << "RHS\n";
  for (std::size_t r = 0; r < model.constraints.size(); ++r) {
    if (model.constraints[r].rhs != 0.0) {
      out << field_line("", "RHS", row_name(r), mps_number(model.constraints[r].rhs)) << "\n";
    }
  }

  out << "BOUNDS\n";
  for (std::size_t k = 0; k < model.variables.size(); ++k) {
    const auto& v = model.variables[k];
    const auto name = column_name(k);
    if (v.kind == VarKind::kBinary) {
      out << field_line("BV", "BND", name, "") << "\n";
      continue;
    }
    if (v.lower != 0.0) {
      if (std::isinf(v.lower)) {
        out << field_line("MI", "BND", name, "") << "\n";
      } else {
        out << field_line("LO", "BND", name, mps_number(v.lower)) << "\n";
      }
    }
    if (std::isfinite(v.upper)) out << field_line("UP", "BND", name, mps_number(v.upper)) << "\n";
  }
  out << "ENDATA\n";
}

nlohmann::json mps_name_map(const MipModel& model) {
  nlohmann::json columns = nlohmann::json::object();
  for (std::size_t k = 0; k < model.variables.size(); ++k) {
    columns[column_name(k)] = {{"name", model.variables[k].name},
                               {"meaning", model.variables[k].meaning}};
  }
  nlohmann::json rows = nlohmann::json::object();
  for (std::size_t r = 0; r < model.constraints.size(); ++r) rows[row_name(r)] = model.constraints[r].name;
  return {{"objective", "OBJ"}, {"columns", columns}, {"rows", rows},
          {"big_m", model.big_m}, {"ybar_max", model.ybar_max}};
}

void export_mps(const MipModel& model, const std::filesystem::path& mps_path,
                const std::filesystem::path& map_path) {
  std::ostringstream mps;
  write_mps(model, mps);
  auto write = [](const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::kIo, "cannot open " + path.string() + " for writing");
    out << text;
    if (!out) throw Error(ErrorCode::kIo, "failed writing " + path.string());
  };
  write(mps_path, mps.str());
  write(map_path, mps_name_map(model).dump(2) + "\n");
}

}  // namespace pertree
