#pragma once

// MPS reader (fixed and free format) and the reduction of a general LP
//
//   min c^T x + c0   s.t.  row_lower <= A x <= row_upper,  lower <= x <= upper
//
// to the standard form  min c^T x  s.t.  A x = b, x >= 0,  with a record
// that maps standard-form points back to the original variables.

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <zlib.h>

#include "ipk/common.hpp"
#include "ipk/sparse.hpp"

namespace ipk {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

enum class RowType { LE, EQ, GE };

struct LpProblem {
  std::string name;
  std::string objective_name;
  std::vector<std::string> row_names;
  std::vector<std::string> col_names;
  std::vector<RowType> row_types;
  CsrMatrix a;
  Vector b;          // right-hand side as written
  Vector row_lower;  // two-sided row bounds after RANGES
  Vector row_upper;
  Vector c;
  Vector lower;
  Vector upper;
  double objective_constant = 0.0;
  bool maximize = false;

  Index rows() const { return a.rows(); }
  Index cols() const { return a.cols(); }

  double objective(std::span<const double> x) const {
    return vec::dot(c, x) + objective_constant;
  }
};

class ParseError : public Error {
 public:
  ParseError(const std::string& msg, long line)
      : Error(line > 0 ? "line " + std::to_string(line) + ": " + msg : msg), line_(line) {}
  long line() const { return line_; }

 private:
  long line_;
};

enum class MpsFormat { Free, Fixed };

namespace detail {

inline std::vector<std::string> split_ws(std::string_view s) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
    std::size_t j = i;
    while (j < s.size() && !std::isspace(static_cast<unsigned char>(s[j]))) ++j;
    if (j > i) out.emplace_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

inline std::string trim(std::string_view s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return std::string(s.substr(a, b - a));
}

/// Classic fixed-column fields: 2-3, 5-12, 15-22, 25-36, 40-47, 50-61.
inline std::vector<std::string> split_fixed(std::string_view s) {
  static constexpr std::size_t kStart[] = {1, 4, 14, 24, 39, 49};
  static constexpr std::size_t kLen[] = {2, 8, 8, 12, 8, 12};
  std::vector<std::string> out;
  for (int f = 0; f < 6; ++f) {
    if (kStart[f] >= s.size()) break;
    out.push_back(trim(s.substr(kStart[f], kLen[f])));
  }
  while (!out.empty() && out.back().empty()) out.pop_back();
  return out;
}

inline double parse_number(const std::string& tok, long line) {
  try {
    std::size_t used = 0;
    const double v = std::stod(tok, &used);
    if (used != tok.size()) throw std::invalid_argument(tok);
    return v;
  } catch (const std::out_of_range&) {
    // Subnormal or huge literal; strtod saturates to 0 or inf as intended.
    return std::strtod(tok.c_str(), nullptr);
  } catch (const std::exception&) {
    throw ParseError("invalid number '" + tok + "'", line);
  }
}

enum class Section { None, Name, ObjSense, Rows, Columns, Rhs, Ranges, Bounds, End };

inline std::optional<Section> section_of(std::string_view word) {
  if (word == "NAME") return Section::Name;
  if (word == "OBJSENSE") return Section::ObjSense;
  if (word == "ROWS") return Section::Rows;
  if (word == "COLUMNS") return Section::Columns;
  if (word == "RHS") return Section::Rhs;
  if (word == "RANGES") return Section::Ranges;
  if (word == "BOUNDS") return Section::Bounds;
  if (word == "ENDATA") return Section::End;
  return std::nullopt;
}

}  // namespace detail

inline LpProblem parse_mps(std::istream& in, MpsFormat format = MpsFormat::Free) {
  using detail::Section;
  LpProblem p;
  std::unordered_map<std::string, Index> row_index;
  std::unordered_map<std::string, Index> col_index;
  std::vector<Triplet> entries;
  std::map<std::pair<Index, Index>, long> seen_entry;
  Vector rhs, range;
  std::vector<char> has_range;
  std::vector<double> bound_lo, bound_up;
  std::vector<char> explicit_lo;
  std::map<std::pair<Index, std::string>, double> seen_bound;
  std::optional<std::string> rhs_set, range_set, bound_set;
  bool have_objective = false;
  Section sec = Section::None;
  std::string line;
  long lineno = 0;
  bool ended = false;

  auto lookup_row = [&](const std::string& name) -> Index {
    auto it = row_index.find(name);
    if (it == row_index.end()) throw ParseError("unknown row '" + name + "'", lineno);
    return it->second;
  };
  auto lookup_col = [&](const std::string& name) -> Index {
    auto it = col_index.find(name);
    if (it == col_index.end()) throw ParseError("unknown column '" + name + "'", lineno);
    return it->second;
  };
  // -1 denotes the objective row.
  auto lookup_row_or_obj = [&](const std::string& name) -> Index {
    if (have_objective && name == p.objective_name) return -1;
    return lookup_row(name);
  };

  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '*') continue;
    if (detail::trim(line).empty()) continue;
    if (!std::isspace(static_cast<unsigned char>(line[0]))) {
      auto tok = detail::split_ws(line);
      auto s = detail::section_of(tok[0]);
      if (!s) throw ParseError("unknown section '" + tok[0] + "'", lineno);
      sec = *s;
      if (sec == Section::Name) {
        p.name = tok.size() > 1 ? tok[1] : "";
      } else if (sec == Section::ObjSense && tok.size() > 1) {
        if (tok[1] == "MAX" || tok[1] == "MAXIMIZE") p.maximize = true;
        else if (tok[1] != "MIN" && tok[1] != "MINIMIZE") throw ParseError("bad OBJSENSE '" + tok[1] + "'", lineno);
      } else if (sec == Section::End) {
        ended = true;
        break;
      } else if (tok.size() > 1 && sec != Section::Rhs && sec != Section::Ranges && sec != Section::Bounds) {
        throw ParseError("unexpected tokens after section header", lineno);
      }
      continue;
    }
    auto tok = format == MpsFormat::Fixed ? detail::split_fixed(line) : detail::split_ws(line);
    if (format == MpsFormat::Fixed && !tok.empty() && tok[0].empty()) tok.erase(tok.begin());
    if (tok.empty()) continue;
    switch (sec) {
      case Section::None:
      case Section::Name:
      case Section::End:
        throw ParseError("data line outside of a section", lineno);
      case Section::ObjSense: {
        if (tok[0] == "MAX" || tok[0] == "MAXIMIZE") p.maximize = true;
        else if (tok[0] != "MIN" && tok[0] != "MINIMIZE") throw ParseError("bad OBJSENSE '" + tok[0] + "'", lineno);
        break;
      }
      case Section::Rows: {
        if (tok.size() != 2) throw ParseError("ROWS entry needs type and name", lineno);
        const std::string& t = tok[0];
        const std::string& nm = tok[1];
        if (t == "N") {
          if (!have_objective) {
            p.objective_name = nm;
            have_objective = true;
          }
          // Further N rows are free rows and carry no constraint; ignored.
          break;
        }
        RowType rt;
        if (t == "E") rt = RowType::EQ;
        else if (t == "L") rt = RowType::LE;
        else if (t == "G") rt = RowType::GE;
        else throw ParseError("unknown row type '" + t + "'", lineno);
        if (row_index.count(nm) || (have_objective && nm == p.objective_name)) {
          throw ParseError("duplicate row '" + nm + "'", lineno);
        }
        row_index[nm] = static_cast<Index>(p.row_names.size());
        p.row_names.push_back(nm);
        p.row_types.push_back(rt);
        break;
      }
      case Section::Columns: {
        if (tok.size() >= 3 && tok[1] == "'MARKER'") {
          // Integrality markers are accepted; the relaxation is solved.
          if (tok[2] != "'INTORG'" && tok[2] != "'INTEND'") throw ParseError("unknown marker " + tok[2], lineno);
          break;
        }
        if (tok.size() != 3 && tok.size() != 5) throw ParseError("COLUMNS entry needs 3 or 5 fields", lineno);
        const std::string& cn = tok[0];
        Index j;
        auto it = col_index.find(cn);
        if (it == col_index.end()) {
          j = static_cast<Index>(p.col_names.size());
          col_index[cn] = j;
          p.col_names.push_back(cn);
          p.c.push_back(0.0);
          bound_lo.push_back(0.0);
          bound_up.push_back(kInf);
          explicit_lo.push_back(0);
        } else {
          j = it->second;
        }
        for (std::size_t k = 1; k + 1 < tok.size(); k += 2) {
          const Index i = lookup_row_or_obj(tok[k]);
          const double v = detail::parse_number(tok[k + 1], lineno);
          if (!seen_entry.emplace(std::make_pair(i, j), lineno).second) {
            throw ParseError("duplicate entry for row '" + tok[k] + "', column '" + cn + "'", lineno);
          }
          if (i < 0) p.c[j] = v;
          else entries.push_back({i, j, v});
        }
        break;
      }
      case Section::Rhs:
      case Section::Ranges: {
        // Optional set name: odd field count means it is present.
        std::size_t start = tok.size() % 2 == 1 ? 1 : 0;
        if (tok.size() < 2 || tok.size() > 5) throw ParseError("bad RHS/RANGES entry", lineno);
        auto& set = sec == Section::Rhs ? rhs_set : range_set;
        const std::string setname = start == 1 ? tok[0] : "";
        if (!set) set = setname;
        if (*set != setname) break;  // only the first set is used
        if (rhs.empty()) {
          rhs.assign(p.row_names.size(), 0.0);
          range.assign(p.row_names.size(), 0.0);
          has_range.assign(p.row_names.size(), 0);
        }
        for (std::size_t k = start; k + 1 < tok.size(); k += 2) {
          const Index i = lookup_row_or_obj(tok[k]);
          const double v = detail::parse_number(tok[k + 1], lineno);
          if (sec == Section::Rhs) {
            if (i < 0) p.objective_constant = -v;
            else rhs[i] = v;
          } else {
            if (i < 0) throw ParseError("RANGES on the objective row", lineno);
            if (has_range[i]) throw ParseError("duplicate range for row '" + tok[k] + "'", lineno);
            range[i] = v;
            has_range[i] = 1;
          }
        }
        break;
      }
      case Section::Bounds: {
        if (tok.size() < 2 || tok.size() > 4) throw ParseError("bad BOUNDS entry", lineno);
        const std::string& bt = tok[0];
        const bool needs_value = bt == "UP" || bt == "LO" || bt == "FX" || bt == "LI" || bt == "UI";
        const bool no_value = bt == "FR" || bt == "MI" || bt == "PL";
        const bool bv = bt == "BV";
        if (!needs_value && !no_value && !bv) throw ParseError("unsupported bound type '" + bt + "'", lineno);
        std::size_t fields = tok.size() - 1;  // after the type
        std::string setname, cn, val;
        if (needs_value) {
          if (fields == 3) { setname = tok[1]; cn = tok[2]; val = tok[3]; }
          else if (fields == 2) { cn = tok[1]; val = tok[2]; }
          else throw ParseError("bound '" + bt + "' needs a value", lineno);
        } else if (no_value) {
          if (fields == 2) { setname = tok[1]; cn = tok[2]; }
          else if (fields == 1) { cn = tok[1]; }
          else if (fields == 3) { setname = tok[1]; cn = tok[2]; }  // trailing value ignored
        } else {
          if (fields == 3) { setname = tok[1]; cn = tok[2]; }
          else if (fields == 2) {
            // "BV set col" or "BV col value": decide by whether tok[1] is a column.
            if (col_index.count(tok[1]) && !col_index.count(tok[2])) cn = tok[1];
            else { setname = tok[1]; cn = tok[2]; }
          } else cn = tok[1];
        }
        if (!bound_set) bound_set = setname;
        if (*bound_set != setname) break;
        const Index j = lookup_col(cn);
        const double v = needs_value ? detail::parse_number(val, lineno) : 0.0;
        auto check_dup = [&](const std::string& key, double value) {
          auto [it, fresh] = seen_bound.emplace(std::make_pair(j, key), value);
          if (!fresh && it->second != value) {
            throw ParseError("conflicting " + key + " bounds for column '" + cn + "'", lineno);
          }
        };
        if (bt == "UP" || bt == "UI") {
          check_dup("upper", v);
          bound_up[j] = v;
          // Historical convention: a negative upper bound with default lower
          // bound makes the variable unbounded below.
          if (v < 0.0 && !explicit_lo[j] && bound_lo[j] == 0.0) bound_lo[j] = -kInf;
        } else if (bt == "LO" || bt == "LI") {
          check_dup("lower", v);
          bound_lo[j] = v;
          explicit_lo[j] = 1;
        } else if (bt == "FX") {
          check_dup("lower", v);
          check_dup("upper", v);
          bound_lo[j] = bound_up[j] = v;
          explicit_lo[j] = 1;
        } else if (bt == "FR") {
          check_dup("lower", -kInf);
          check_dup("upper", kInf);
          bound_lo[j] = -kInf;
          bound_up[j] = kInf;
          explicit_lo[j] = 1;
        } else if (bt == "MI") {
          check_dup("lower", -kInf);
          bound_lo[j] = -kInf;
          explicit_lo[j] = 1;
        } else if (bt == "PL") {
          check_dup("upper", kInf);
          bound_up[j] = kInf;
        } else {  // BV
          check_dup("lower", 0.0);
          check_dup("upper", 1.0);
          bound_lo[j] = 0.0;
          bound_up[j] = 1.0;
          explicit_lo[j] = 1;
        }
        break;
      }
    }
  }
  if (!ended) throw ParseError("missing ENDATA", lineno);
  if (!have_objective) throw ParseError("no objective (N) row", lineno);

  const auto m = static_cast<Index>(p.row_names.size());
  const auto n = static_cast<Index>(p.col_names.size());
  if (rhs.empty()) {
    rhs.assign(static_cast<std::size_t>(m), 0.0);
    range.assign(static_cast<std::size_t>(m), 0.0);
    has_range.assign(static_cast<std::size_t>(m), 0);
  }
  p.a = CsrMatrix(m, n, std::move(entries));
  p.b = rhs;
  p.row_lower.resize(static_cast<std::size_t>(m));
  p.row_upper.resize(static_cast<std::size_t>(m));
  for (Index i = 0; i < m; ++i) {
    const double r = rhs[i];
    double lo = r, up = r;
    switch (p.row_types[i]) {
      case RowType::LE: lo = -kInf; break;
      case RowType::GE: up = kInf; break;
      case RowType::EQ: break;
    }
    if (has_range[i]) {
      const double R = range[i];
      switch (p.row_types[i]) {
        case RowType::LE: lo = r - std::abs(R); break;
        case RowType::GE: up = r + std::abs(R); break;
        case RowType::EQ:
          if (R >= 0.0) up = r + R;
          else lo = r + R;
          break;
      }
    }
    p.row_lower[i] = lo;
    p.row_upper[i] = up;
  }
  p.lower = std::move(bound_lo);
  p.upper = std::move(bound_up);
  for (Index j = 0; j < n; ++j) {
    if (p.lower[j] > p.upper[j]) {
      throw InfeasibleError("column '" + p.col_names[j] + "' has lower bound above upper bound");
    }
  }
  return p;
}

inline LpProblem parse_mps_string(const std::string& text, MpsFormat format = MpsFormat::Free) {
  std::istringstream in(text);
  return parse_mps(in, format);
}

/// Reads a file; names ending in ".gz" are decompressed with zlib.
inline LpProblem read_mps_file(const std::string& path, MpsFormat format = MpsFormat::Free) {
  const bool gz = path.size() >= 3 && path.compare(path.size() - 3, 3, ".gz") == 0;
  if (!gz) {
    std::ifstream f(path);
    if (!f) throw ParseError("cannot open " + path, 0);
    return parse_mps(f, format);
  }
  gzFile g = gzopen(path.c_str(), "rb");
  if (!g) throw ParseError("cannot open " + path, 0);
  std::string text;
  char buf[1 << 14];
  int got;
  while ((got = gzread(g, buf, sizeof buf)) > 0) text.append(buf, static_cast<std::size_t>(got));
  int err = 0;
  const char* msg = gzerror(g, &err);
  const std::string emsg = msg ? msg : "";
  gzclose(g);
  if (got < 0 || (err != Z_OK && err != Z_STREAM_END)) throw ParseError("gzip: " + emsg + " in " + path, 0);
  return parse_mps_string(text, format);
}

/// Free-format writer; numbers are printed with 17 significant digits so a
/// parse of the output reproduces the problem bit for bit, except the bound
/// of a ranged row that is rebuilt from the range width.
inline void write_mps(std::ostream& os, const LpProblem& p) {
  char buf[64];
  auto num = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return std::string(buf);
  };
  const std::string obj = p.objective_name.empty() ? "COST" : p.objective_name;
  os << "NAME " << (p.name.empty() ? "LP" : p.name) << '\n';
  if (p.maximize) os << "OBJSENSE\n    MAX\n";
  os << "ROWS\n N  " << obj << '\n';
  for (Index i = 0; i < p.rows(); ++i) {
    const char* t = p.row_types[i] == RowType::EQ ? "E" : p.row_types[i] == RowType::LE ? "L" : "G";
    os << ' ' << t << "  " << p.row_names[i] << '\n';
  }
  os << "COLUMNS\n";
  std::vector<std::vector<std::pair<Index, double>>> by_col(static_cast<std::size_t>(p.cols()));
  for (const auto& t : p.a.triplets()) by_col[t.col].push_back({t.row, t.value});
  for (Index j = 0; j < p.cols(); ++j) {
    if (p.c[j] != 0.0) os << "    " << p.col_names[j] << ' ' << obj << ' ' << num(p.c[j]) << '\n';
    for (auto [i, v] : by_col[j]) os << "    " << p.col_names[j] << ' ' << p.row_names[i] << ' ' << num(v) << '\n';
  }
  os << "RHS\n";
  if (p.objective_constant != 0.0) os << "    RHS " << obj << ' ' << num(-p.objective_constant) << '\n';
  for (Index i = 0; i < p.rows(); ++i) {
    if (p.b[i] != 0.0) os << "    RHS " << p.row_names[i] << ' ' << num(p.b[i]) << '\n';
  }
  bool ranges = false;
  for (Index i = 0; i < p.rows(); ++i) {
    const bool two_sided = std::isfinite(p.row_lower[i]) && std::isfinite(p.row_upper[i]);
    if (!two_sided || p.row_lower[i] == p.row_upper[i]) continue;
    if (!ranges) os << "RANGES\n";
    ranges = true;
    double r = p.row_upper[i] - p.row_lower[i];
    if (p.row_types[i] == RowType::EQ && p.b[i] == p.row_upper[i]) r = -r;
    os << "    RNG " << p.row_names[i] << ' ' << num(r) << '\n';
  }
  bool bounds = false;
  auto bound_line = [&](const char* type, const std::string& col, std::optional<double> v) {
    if (!bounds) os << "BOUNDS\n";
    bounds = true;
    os << ' ' << type << " BND " << col;
    if (v) os << ' ' << num(*v);
    os << '\n';
  };
  for (Index j = 0; j < p.cols(); ++j) {
    const double l = p.lower[j], u = p.upper[j];
    if (l == u) {
      bound_line("FX", p.col_names[j], l);
      continue;
    }
    if (l == -kInf && u == kInf) {
      bound_line("FR", p.col_names[j], std::nullopt);
      continue;
    }
    if (l == -kInf) bound_line("MI", p.col_names[j], std::nullopt);
    else if (l != 0.0) bound_line("LO", p.col_names[j], l);
    if (u != kInf) bound_line("UP", p.col_names[j], u);
  }
  os << "ENDATA\n";
}

// ---------------------------------------------------------------------------
// Standard form.

enum class TransformKind {
  ShiftByLower,      // x = offset + x_std[col]
  ReflectUpper,      // x = offset - x_std[col]          (only an upper bound)
  SplitFree,         // x = x_std[col] - x_std[aux]
  FixVariable,       // x = offset, column dropped from A
  UpperBoundRow,     // row `row`: x_std[col] + x_std[aux] = offset
  SlackColumn,       // row `row` gets +x_std[aux] (<= rows)
  SurplusColumn,     // row `row` gets -x_std[aux] (>= and ranged rows)
};

struct Transform {
  TransformKind kind;
  Index col = -1;   // original column (variable transforms) or standard column
  Index aux = -1;   // companion standard-form column
  Index row = -1;
  double offset = 0.0;
};

struct TransformRecord {
  Index original_cols = 0;
  Index original_rows = 0;
  Index standard_cols = 0;
  Index standard_rows = 0;
  std::vector<Transform> steps;
  // original objective = sign * (c_std^T x_std + offset)
  double objective_sign = 1.0;
  double objective_offset = 0.0;

  bool is_identity() const {
    return steps.empty() && original_cols == standard_cols && original_rows == standard_rows &&
           objective_sign == 1.0 && objective_offset == 0.0;
  }
};

struct StandardFormLp {
  std::string name;
  CsrMatrix a;
  Vector b;
  Vector c;
  TransformRecord transform;

  Index rows() const { return a.rows(); }
  Index cols() const { return a.cols(); }

  /// Objective of the original problem at the point mapped back from x_std.
  double original_objective(std::span<const double> x_std) const {
    return transform.objective_sign * (vec::dot(c, x_std) + transform.objective_offset);
  }
};

/// Structural column j keeps index j in the standard form; the negative parts
/// of free variables, row slacks and upper-bound slacks follow in that order.
inline StandardFormLp to_standard_form(const LpProblem& p) {
  const Index m = p.rows(), n = p.cols();
  require_size(p.c.size(), static_cast<std::size_t>(n), "to_standard_form: c");
  require_size(p.lower.size(), static_cast<std::size_t>(n), "to_standard_form: lower");
  require_size(p.upper.size(), static_cast<std::size_t>(n), "to_standard_form: upper");
  require_size(p.row_lower.size(), static_cast<std::size_t>(m), "to_standard_form: row_lower");
  require_size(p.row_upper.size(), static_cast<std::size_t>(m), "to_standard_form: row_upper");
  StandardFormLp out;
  out.name = p.name;
  TransformRecord& rec = out.transform;
  rec.original_cols = n;
  rec.original_rows = m;
  const double sign = p.maximize ? -1.0 : 1.0;
  rec.objective_sign = sign;
  rec.objective_offset = sign * p.objective_constant;

  // Column-wise copy of A so variable transforms can rescale columns.
  std::vector<std::vector<std::pair<Index, double>>> col(static_cast<std::size_t>(n));
  for (const auto& t : p.a.triplets()) col[t.col].push_back({t.row, t.value});

  Vector c(static_cast<std::size_t>(n));
  for (Index j = 0; j < n; ++j) c[j] = sign * p.c[j];
  Vector shift(static_cast<std::size_t>(m), 0.0);  // A * (constant part of x)
  std::vector<Triplet> t;
  std::vector<std::pair<Index, double>> ub_rows;  // (standard column, bound)
  Index next_col = n;

  for (Index j = 0; j < n; ++j) {
    const double l = p.lower[j], u = p.upper[j];
    if (l > u) throw InfeasibleError("column " + std::to_string(j) + ": lower bound exceeds upper bound");
    auto add_const = [&](double v) {
      for (auto [i, a] : col[j]) shift[i] += a * v;
      rec.objective_offset += c[j] * v;
    };
    if (std::isfinite(l) && l == u) {
      add_const(l);
      rec.steps.push_back({TransformKind::FixVariable, j, -1, -1, l});
      c[j] = 0.0;
      continue;
    }
    if (std::isfinite(l)) {
      if (l != 0.0) {
        add_const(l);
        rec.steps.push_back({TransformKind::ShiftByLower, j, j, -1, l});
      }
      for (auto [i, a] : col[j]) t.push_back({i, j, a});
      if (std::isfinite(u)) ub_rows.push_back({j, u - l});
    } else if (std::isfinite(u)) {
      add_const(u);
      rec.steps.push_back({TransformKind::ReflectUpper, j, j, -1, u});
      for (auto [i, a] : col[j]) t.push_back({i, j, -a});
      c[j] = -c[j];
    } else {
      const Index neg = next_col++;
      rec.steps.push_back({TransformKind::SplitFree, j, neg, -1, 0.0});
      for (auto [i, a] : col[j]) {
        t.push_back({i, j, a});
        t.push_back({i, neg, -a});
      }
      c.push_back(-c[j]);
    }
  }

  Vector b(static_cast<std::size_t>(m));
  for (Index i = 0; i < m; ++i) {
    const double lo = p.row_lower[i] - shift[i];
    const double up = p.row_upper[i] - shift[i];
    const bool has_lo = std::isfinite(p.row_lower[i]);
    const bool has_up = std::isfinite(p.row_upper[i]);
    if (has_lo && has_up && p.row_lower[i] == p.row_upper[i]) {
      b[i] = lo;
    } else if (has_lo && has_up) {
      if (p.row_lower[i] > p.row_upper[i]) throw InfeasibleError("row " + p.row_names[i] + ": empty range");
      const Index s = next_col++;
      t.push_back({i, s, -1.0});
      c.push_back(0.0);
      b[i] = lo;
      rec.steps.push_back({TransformKind::SurplusColumn, -1, s, i, 0.0});
      ub_rows.push_back({s, up - lo});
    } else if (has_up) {
      const Index s = next_col++;
      t.push_back({i, s, 1.0});
      c.push_back(0.0);
      b[i] = up;
      rec.steps.push_back({TransformKind::SlackColumn, -1, s, i, 0.0});
    } else if (has_lo) {
      const Index s = next_col++;
      t.push_back({i, s, -1.0});
      c.push_back(0.0);
      b[i] = lo;
      rec.steps.push_back({TransformKind::SurplusColumn, -1, s, i, 0.0});
    } else {
      b[i] = 0.0;  // free row: a zero row after dropping its coefficients
      for (auto& e : t) {
        if (e.row == i) e.value = 0.0;
      }
    }
  }

  Index next_row = m;
  for (auto [j, bound] : ub_rows) {
    const Index s = next_col++;
    const Index r = next_row++;
    t.push_back({r, j, 1.0});
    t.push_back({r, s, 1.0});
    c.push_back(0.0);
    b.push_back(bound);
    rec.steps.push_back({TransformKind::UpperBoundRow, j, s, r, bound});
  }
  out.a = CsrMatrix(next_row, next_col, std::move(t));
  out.b = std::move(b);
  out.c = std::move(c);
  rec.standard_cols = next_col;
  rec.standard_rows = next_row;
  return out;
}

/// Map a standard-form point back to the original variables.
inline Vector recover_solution(std::span<const double> x_std, const TransformRecord& rec) {
  require_size(x_std.size(), static_cast<std::size_t>(rec.standard_cols), "recover_solution");
  Vector x(x_std.begin(), x_std.begin() + rec.original_cols);
  for (const auto& s : rec.steps) {
    switch (s.kind) {
      case TransformKind::ShiftByLower:
        x[s.col] = s.offset + x_std[s.aux];
        break;
      case TransformKind::ReflectUpper:
        x[s.col] = s.offset - x_std[s.aux];
        break;
      case TransformKind::SplitFree:
        x[s.col] = x_std[s.col] - x_std[s.aux];
        break;
      case TransformKind::FixVariable:
        x[s.col] = s.offset;
        break;
      case TransformKind::UpperBoundRow:
      case TransformKind::SlackColumn:
      case TransformKind::SurplusColumn:
        break;
    }
  }
  return x;
}

/// Inverse of recover_solution on the feasible set: given an original point,
/// produce the standard-form point with slacks filled in.
inline Vector to_standard_point(const LpProblem& p, const TransformRecord& rec,
                                std::span<const double> x) {
  require_size(x.size(), static_cast<std::size_t>(rec.original_cols), "to_standard_point");
  Vector xs(static_cast<std::size_t>(rec.standard_cols), 0.0);
  for (Index j = 0; j < rec.original_cols; ++j) xs[j] = x[j];
  const Vector ax = matvec(p.a, x);
  for (const auto& s : rec.steps) {
    switch (s.kind) {
      case TransformKind::ShiftByLower:
        xs[s.aux] = x[s.col] - s.offset;
        break;
      case TransformKind::ReflectUpper:
        xs[s.aux] = s.offset - x[s.col];
        break;
      case TransformKind::SplitFree:
        xs[s.col] = std::max(x[s.col], 0.0);
        xs[s.aux] = std::max(-x[s.col], 0.0);
        break;
      case TransformKind::FixVariable:
        xs[s.col] = 0.0;
        break;
      case TransformKind::SlackColumn:
        xs[s.aux] = p.row_upper[s.row] - ax[s.row];
        break;
      case TransformKind::SurplusColumn:
        xs[s.aux] = ax[s.row] - p.row_lower[s.row];
        break;
      case TransformKind::UpperBoundRow:
        break;
    }
  }
  for (const auto& s : rec.steps) {
    if (s.kind == TransformKind::UpperBoundRow) xs[s.aux] = s.offset - xs[s.col];
  }
  return xs;
}

}  // namespace ipk
