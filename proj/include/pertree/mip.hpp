#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <unordered_map>
#include <vector>

#include "json.hpp"
#include "pertree/opt.hpp"

namespace pertree {

// Variable naming (i is a 0-based row, p a heap node id, t a 1-based
// treatment, c a 0-based menu index, b a 0-based bit):
//   w[i,p] lambda[p,t] mu[p] nu[i,p] gamma[p,c] delta[p,b]
enum class VarKind { kContinuous, kBinary };
enum class Sense { kLe, kEq, kGe };

struct MipVariable {
  std::string name;
  VarKind kind = VarKind::kContinuous;
  double lower = 0.0;
  double upper = std::numeric_limits<double>::infinity();
  std::string meaning;
};

struct MipTerm {
  std::size_t var = 0;
  double coef = 0.0;
};

struct MipConstraint {
  std::string name;
  std::vector<MipTerm> terms;
  Sense sense = Sense::kLe;
  double rhs = 0.0;
};

struct MipModel {
  std::string name = "PERTREE";
  std::vector<MipVariable> variables;
  std::vector<MipConstraint> constraints;
  std::vector<MipTerm> objective;  // minimized
  double big_m = 0.0;
  double ybar_max = 0.0;

  std::size_t add_variable(MipVariable v);
  std::size_t index_of(const std::string& name) const;  // throws kMissingColumn
  std::size_t binary_count() const;
  // Declared name -> meaning.
  nlohmann::json registry() const;

 private:
  std::unordered_map<std::string, std::size_t> index_;
};

// The flow formulation of the fixed-depth tree problem over the menu. The
// big-M is taken verbatim: Ybar_max * (max_t n_t - |L| * n_min_leaf).
// Throws kInfeasible when n < |L| * m * n_min_leaf.
MipModel build_mip(const Dataset& ds, const TreeSkeleton& skeleton, const CutMenu& menu,
                   const OptConfig& config);

// Variable values (in declaration order) implied by a tree assignment.
std::vector<double> induced_solution(const MipModel& model, const Dataset& ds,
                                     const TreeSkeleton& skeleton, const CutMenu& menu,
                                     const OptAssignment& assignment);

double objective_value(const MipModel& model, std::span<const double> values);

struct MipCheck {
  bool feasible = true;
  double max_violation = 0.0;
  std::vector<std::string> violations;  // names of violated bounds or rows
  double objective = 0.0;
};

// Bounds, integrality and every row, each to absolute tolerance `tol`.
MipCheck check_solution(const MipModel& model, std::span<const double> values, double tol = 1e-9);

// Solution import: JSON object from declared variable names to values.
std::vector<double> solution_from_json(const MipModel& model, const nlohmann::json& doc);
nlohmann::json solution_to_json(const MipModel& model, std::span<const double> values);

// Fixed-format MPS. Columns are renamed X0000001.., rows R0000001.., the
// objective row is OBJ; numbers are written in at most 12 characters.
void write_mps(const MipModel& model, std::ostream& out);
// Mangled name -> declared name and meaning.
nlohmann::json mps_name_map(const MipModel& model);
// Writes the MPS file and its name map. Throws kIo when unwritable.
void export_mps(const MipModel& model, const std::filesystem::path& mps_path,
                const std::filesystem::path& map_path);

}  // namespace pertree
