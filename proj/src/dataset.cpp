#include "pertree/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

namespace pertree {
namespace {

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && (s[b] == ' ' || s[b] == '\t' || s[b] == '\r')) ++b;
  while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t' || s[e - 1] == '\r')) --e;
  return std::string(s.substr(b, e - b));
}

// RFC-4180-ish: quoted fields with doubled quotes, no embedded newlines.
std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  out.push_back(trim(cur));
  return out;
}

std::optional<double> parse_number(std::string_view s) {
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  if (s.empty()) return std::nullopt;
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) {
    return std::nullopt;
  }
  return v;
}

std::string cell_error(std::size_t row, const std::string& col, const std::string& value) {
  std::ostringstream msg;
  msg << "row " << row << ", column '" << col << "': cannot parse '" << value
      << "' as a number";
  return msg.str();
}

}  // namespace

FeatureSchema FeatureSchema::numeric(std::size_t d) {
  FeatureSchema s;
  for (std::size_t j = 0; j < d; ++j) {
    s.names.push_back("x" + std::to_string(j + 1));
    s.kinds.push_back({});
  }
  return s;
}

std::size_t FeatureSchema::encoded_width() const {
  std::size_t w = 0;
  for (const auto& k : kinds) w += k.categorical ? k.levels.size() : 1;
  return w;
}

std::vector<std::string> FeatureSchema::encoded_names() const {
  std::vector<std::string> out;
  for (std::size_t j = 0; j < names.size(); ++j) {
    if (kinds[j].categorical) {
      for (const auto& level : kinds[j].levels) out.push_back(names[j] + "=" + level);
    } else {
      out.push_back(names[j]);
    }
  }
  return out;
}

void FeatureSchema::validate() const {
  if (names.size() != kinds.size()) {
    throw Error(ErrorCode::kDomain, "feature schema: names and kinds differ in length");
  }
  std::set<std::string> seen;
  for (std::size_t j = 0; j < names.size(); ++j) {
    if (!seen.insert(names[j]).second) {
      throw Error(ErrorCode::kDomain, "feature schema: duplicate feature '" + names[j] + "'");
    }
    if (kinds[j].categorical) {
      if (kinds[j].levels.empty()) {
        throw Error(ErrorCode::kDomain, "feature '" + names[j] + "' has no levels");
      }
      std::set<std::string> lv(kinds[j].levels.begin(), kinds[j].levels.end());
      if (lv.size() != kinds[j].levels.size()) {
        throw Error(ErrorCode::kDomain, "feature '" + names[j] + "' has duplicate levels");
      }
    }
  }
}

std::vector<std::size_t> Dataset::arm_counts() const {
  std::vector<std::size_t> counts(static_cast<std::size_t>(std::max(m, 0)), 0);
  for (int ti : t) {
    if (ti >= 1 && ti <= m) ++counts[ti - 1];
  }
  return counts;
}

void Dataset::validate() const {
  const std::size_t n = y.size();
  if (t.size() != n || static_cast<std::size_t>(x.rows()) != n) {
    throw Error(ErrorCode::kDomain, "dataset: X, T and Y lengths differ");
  }
  if (m < 1) throw Error(ErrorCode::kDomain, "dataset: treatment count must be >= 1");
  schema.validate();
  if (schema.encoded_width() != dims()) {
    throw Error(ErrorCode::kDomain, "dataset: schema width does not match covariate columns");
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (t[i] < 1 || t[i] > m) {
      throw Error(ErrorCode::kDomain, "dataset: treatment label " + std::to_string(t[i]) +
                                          " at row " + std::to_string(i) + " outside [1.." +
                                          std::to_string(m) + "]");
    }
  }
  if (cf) {
    if (static_cast<std::size_t>(cf->rows()) != n || cf->cols() != m) {
      throw Error(ErrorCode::kDomain, "dataset: counterfactual matrix must be n x m");
    }
    for (std::size_t i = 0; i < n; ++i) {
      if ((*cf)(i, t[i] - 1) != y[i]) {
        throw Error(ErrorCode::kDomain, "dataset: row " + std::to_string(i) +
                                            " outcome differs from its counterfactual entry");
      }
    }
  }
  if (q) {
    if (q->size() != n) throw Error(ErrorCode::kDomain, "dataset: propensity length differs");
    for (std::size_t i = 0; i < n; ++i) {
      if (!((*q)[i] > 0.0 && (*q)[i] <= 1.0)) {
        throw Error(ErrorCode::kDomain,
                    "dataset: propensity at row " + std::to_string(i) + " outside (0, 1]");
      }
    }
  }
}

Dataset read_csv(std::istream& in, const CsvOptions& options) {
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::kParse, "csv: missing header row");
  if (line.size() >= 3 && static_cast<unsigned char>(line[0]) == 0xEF &&
      static_cast<unsigned char>(line[1]) == 0xBB && static_cast<unsigned char>(line[2]) == 0xBF) {
    line.erase(0, 3);
  }
  const std::vector<std::string> header = split_csv_line(line);
  std::map<std::string, std::size_t> col_index;
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (!col_index.emplace(header[c], c).second) {
      throw Error(ErrorCode::kParse, "csv: duplicate column '" + header[c] + "'");
    }
  }
  auto require = [&](const std::string& name) {
    auto it = col_index.find(name);
    if (it == col_index.end()) {
      throw Error(ErrorCode::kMissingColumn, "csv: missing column '" + name + "'");
    }
    return it->second;
  };

  const std::size_t t_col = require(options.treatment_col);
  const std::size_t y_col = require(options.outcome_col);
  bool want_cf = options.counterfactuals || (options.auto_detect && col_index.count("y1"));
  std::optional<std::string> q_name = options.propensity_col;
  if (!q_name && options.auto_detect && col_index.count("q")) q_name = "q";
  std::optional<std::size_t> q_col;
  if (q_name) q_col = require(*q_name);

  std::vector<std::size_t> cf_cols;
  if (want_cf) {
    for (int k = 1;; ++k) {
      auto it = col_index.find("y" + std::to_string(k));
      if (it == col_index.end()) break;
      cf_cols.push_back(it->second);
    }
    if (cf_cols.empty()) require("y1");
  }

  std::set<std::size_t> reserved{t_col, y_col};
  reserved.insert(cf_cols.begin(), cf_cols.end());
  if (q_col) reserved.insert(*q_col);
  for (const auto& name : options.ignore) reserved.insert(require(name));
  std::vector<std::size_t> feature_cols;
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (!reserved.count(c)) feature_cols.push_back(c);
  }
  for (const auto& name : options.categorical) {
    const std::size_t c = require(name);
    if (reserved.count(c)) {
      throw Error(ErrorCode::kConfig, "csv: column '" + name + "' cannot be categorical");
    }
  }

  std::vector<std::vector<std::string>> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    auto cells = split_csv_line(line);
    if (cells.size() != header.size()) {
      throw Error(ErrorCode::kParse, "csv: row " + std::to_string(line_no) + " has " +
                                         std::to_string(cells.size()) + " cells, expected " +
                                         std::to_string(header.size()));
    }
    rows.push_back(std::move(cells));
  }
  const std::size_t n = rows.size();
  auto number_at = [&](std::size_t r, std::size_t c) {
    auto v = parse_number(rows[r][c]);
    if (!v) throw Error(ErrorCode::kParse, "csv: " + cell_error(r + 2, header[c], rows[r][c]));
    return *v;
  };

  // Decide each feature's kind. A column is categorical when forced, or when
  // none of its cells parse as numbers; a mix of numeric and non-numeric cells
  // is reported at the first offending cell.
  FeatureSchema schema;
  std::vector<bool> categorical(feature_cols.size(), false);
  for (std::size_t f = 0; f < feature_cols.size(); ++f) {
    const std::size_t c = feature_cols[f];
    const bool forced = std::find(options.categorical.begin(), options.categorical.end(),
                                  header[c]) != options.categorical.end();
    bool any_numeric = false;
    for (std::size_t r = 0; r < n && !any_numeric; ++r) any_numeric = parse_number(rows[r][c]).has_value();
    categorical[f] = forced || (n > 0 && !any_numeric);
    FeatureKind kind;
    kind.categorical = categorical[f];
    if (kind.categorical) {
      std::set<std::string> levels;
      for (std::size_t r = 0; r < n; ++r) levels.insert(rows[r][c]);
      kind.levels.assign(levels.begin(), levels.end());
    }
    schema.names.push_back(header[c]);
    schema.kinds.push_back(std::move(kind));
  }

  Dataset ds;
  ds.schema = schema;
  ds.x.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(schema.encoded_width()));
  ds.x.setZero();
  ds.t.resize(n);
  ds.y.resize(n);
  for (std::size_t r = 0; r < n; ++r) {
    Eigen::Index col = 0;
    for (std::size_t f = 0; f < feature_cols.size(); ++f) {
      const std::size_t c = feature_cols[f];
      if (categorical[f]) {
        const auto& levels = schema.kinds[f].levels;
        auto it = std::lower_bound(levels.begin(), levels.end(), rows[r][c]);
        ds.x(r, col + (it - levels.begin())) = 1.0;
        col += static_cast<Eigen::Index>(levels.size());
      } else {
        ds.x(r, col++) = number_at(r, c);
      }
    }
    const double tv = number_at(r, t_col);
    if (tv != std::floor(tv)) {
      throw Error(ErrorCode::kParse, "csv: row " + std::to_string(r + 2) +
                                         ", column '" + header[t_col] +
                                         "': treatment must be an integer");
    }
    if (tv < 1) {
      throw Error(ErrorCode::kDomain, "csv: row " + std::to_string(r + 2) +
                                          ": treatment label " + rows[r][t_col] + " is below 1");
    }
    ds.t[r] = static_cast<int>(tv);
    ds.y[r] = number_at(r, y_col);
  }
  int m = 0;
  for (int ti : ds.t) m = std::max(m, ti);
  if (!cf_cols.empty()) {
    if (static_cast<int>(cf_cols.size()) < m) {
      throw Error(ErrorCode::kMissingColumn,
                  "csv: missing column 'y" + std::to_string(cf_cols.size() + 1) + "'");
    }
    m = static_cast<int>(cf_cols.size());
    Matrix cf(static_cast<Eigen::Index>(n), m);
    for (std::size_t r = 0; r < n; ++r) {
      for (int k = 0; k < m; ++k) cf(r, k) = number_at(r, cf_cols[k]);
    }
    ds.cf = std::move(cf);
  }
  if (q_col) {
    std::vector<double> q(n);
    for (std::size_t r = 0; r < n; ++r) q[r] = number_at(r, *q_col);
    ds.q = std::move(q);
  }
  ds.m = std::max(m, 1);
  ds.validate();
  return ds;
}

Dataset load_csv(const std::filesystem::path& path, const CsvOptions& options) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open '" + path.string() + "'");
  return read_csv(in, options);
}

void write_csv(const Dataset& ds, std::ostream& out) {
  auto names = ds.schema.encoded_names();
  auto quote = [](const std::string& s) {
    if (s.find_first_of(",\"") == std::string::npos) return s;
    std::string q = "\"";
    for (char c : s) {
      if (c == '"') q += '"';
      q += c;
    }
    return q + "\"";
  };
  for (const auto& name : names) out << quote(name) << ',';
  out << "treatment,outcome";
  if (ds.cf) {
    for (int k = 1; k <= ds.m; ++k) out << ",y" << k;
  }
  if (ds.q) out << ",q";
  out << '\n';
  for (std::size_t i = 0; i < ds.size(); ++i) {
    for (std::size_t j = 0; j < ds.dims(); ++j) out << format_double(ds.x(i, j)) << ',';
    out << ds.t[i] << ',' << format_double(ds.y[i]);
    if (ds.cf) {
      for (int k = 0; k < ds.m; ++k) out << ',' << format_double((*ds.cf)(i, k));
    }
    if (ds.q) out << ',' << format_double((*ds.q)[i]);
    out << '\n';
  }
}

void save_csv(const Dataset& ds, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, "cannot write '" + path.string() + "'");
  write_csv(ds, out);
  if (!out) throw Error(ErrorCode::kIo, "write failed for '" + path.string() + "'");
}

Dataset split(const Dataset& ds, std::span<const std::size_t> indices) {
  const std::size_t n = ds.size();
  for (std::size_t i : indices) {
    if (i >= n) {
      throw Error(ErrorCode::kBounds, "split: index " + std::to_string(i) +
                                          " out of range for " + std::to_string(n) + " rows");
    }
  }
  Dataset out;
  out.m = ds.m;
  out.schema = ds.schema;
  const auto k = static_cast<Eigen::Index>(indices.size());
  out.x.resize(k, ds.x.cols());
  out.t.resize(indices.size());
  out.y.resize(indices.size());
  if (ds.cf) out.cf = Matrix(k, ds.cf->cols());
  if (ds.q) out.q = std::vector<double>(indices.size());
  for (std::size_t r = 0; r < indices.size(); ++r) {
    const std::size_t i = indices[r];
    out.x.row(r) = ds.x.row(i);
    out.t[r] = ds.t[i];
    out.y[r] = ds.y[i];
    if (ds.cf) out.cf->row(r) = ds.cf->row(i);
    if (ds.q) (*out.q)[r] = (*ds.q)[i];
  }
  return out;
}

std::vector<std::size_t> bootstrap_indices(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<std::size_t> idx(n);
  for (auto& i : idx) i = rng.below(n);
  return idx;
}

BootstrapSample bootstrap(const Dataset& ds, std::uint64_t seed) {
  if (ds.size() == 0) throw Error(ErrorCode::kBounds, "bootstrap: empty dataset");
  BootstrapSample out;
  out.indices = bootstrap_indices(ds.size(), seed);
  out.data = split(ds, out.indices);
  return out;
}

}  // namespace pertree
