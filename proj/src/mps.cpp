#include "hems/mps.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <string>
#include <vector>

#include "hems/error.hpp"

namespace hems {

namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// Fields start at columns 2, 5, 15, 25, 40, 50. Numbers may run past their
// nominal width; precision matters more than strict columns here.
std::string line(const std::string& code, const std::string& n1, const std::string& n2 = {},
                 const std::string& v1 = {}, const std::string& n3 = {}, const std::string& v2 = {}) {
  std::string s = " " + code;
  auto pad = [&](std::size_t col) {
    if (s.size() < col) s.resize(col, ' ');
    else s += ' ';
  };
  pad(4);
  s += n1;
  if (!n2.empty() || !v1.empty()) {
    pad(14);
    s += n2;
    pad(24);
    s += v1;
  }
  if (!n3.empty()) {
    pad(39);
    s += n3;
    pad(49);
    s += v2;
  }
  return s;
}

char row_type(double lo, double hi) {
  if (lo == hi) return 'E';
  if (std::isfinite(lo)) return 'G';
  if (std::isfinite(hi)) return 'L';
  return 'N';
}

}  // namespace

void write_mps(const MiqpProblem& p, std::ostream& out, const std::string& name) {
  if (p.empty()) throw ValidationError("cannot export an empty problem");
  const int n = p.num_vars(), m = p.num_rows();
  out << "* objective = c'x + 0.5 x'Qx + constant; the constant is stored as\n"
      << "* RHS of row OBJ with flipped sign: constant = -RHS(OBJ).\n"
      << "* " << n << " columns, " << m << " rows, " << p.num_integers() << " binaries\n";
  out << "NAME          " << name << '\n' << "ROWS\n" << " N  OBJ\n";
  for (int r = 0; r < m; ++r) {
    const char t = row_type(p.row_lo(r), p.row_hi(r));
    if (t == 'N') throw ValidationError("row " + p.row_name(r) + " is free on both sides");
    out << line(std::string(1, t), p.row_name(r)) << '\n';
  }

  // Column-major view of the row-wise matrix.
  std::vector<std::vector<std::pair<int, double>>> by_col(static_cast<std::size_t>(n));
  for (int r = 0; r < m; ++r) {
    for (int k = p.row_begin(r); k < p.row_end(r); ++k) by_col[p.cols()[k]].push_back({r, p.coefs()[k]});
  }
  out << "COLUMNS\n";
  bool in_int = false;
  int marker = 0;
  for (int j = 0; j < n; ++j) {
    if (p.is_integer(j) != in_int) {
      in_int = p.is_integer(j);
      char mk[16];
      std::snprintf(mk, sizeof mk, "M%07d", marker++);
      out << line("", mk, "'MARKER'", "", in_int ? "'INTORG'" : "'INTEND'") << '\n';
    }
    std::vector<std::pair<std::string, double>> entries;
    if (p.c(j) != 0.0) entries.push_back({"OBJ", p.c(j)});
    for (const auto& [r, v] : by_col[j]) entries.push_back({p.row_name(r), v});
    if (entries.empty()) entries.push_back({"OBJ", 0.0});
    for (std::size_t k = 0; k < entries.size(); k += 2) {
      if (k + 1 < entries.size()) {
        out << line("", p.var_name(j), entries[k].first, num(entries[k].second), entries[k + 1].first,
                    num(entries[k + 1].second))
            << '\n';
      } else {
        out << line("", p.var_name(j), entries[k].first, num(entries[k].second)) << '\n';
      }
    }
  }
  if (in_int) {
    char mk[16];
    std::snprintf(mk, sizeof mk, "M%07d", marker);
    out << line("", mk, "'MARKER'", "", "'INTEND'") << '\n';
  }

  out << "RHS\n";
  if (p.constant() != 0.0) out << line("", "RHS", "OBJ", num(-p.constant())) << '\n';
  for (int r = 0; r < m; ++r) {
    const double lo = p.row_lo(r), hi = p.row_hi(r);
    const double rhs = row_type(lo, hi) == 'L' ? hi : lo;
    if (rhs != 0.0) out << line("", "RHS", p.row_name(r), num(rhs)) << '\n';
  }
  bool ranges = false;
  for (int r = 0; r < m; ++r) {
    const double lo = p.row_lo(r), hi = p.row_hi(r);
    if (lo == hi || !std::isfinite(lo) || !std::isfinite(hi)) continue;
    if (!ranges) out << "RANGES\n";
    ranges = true;
    out << line("", "RNG", p.row_name(r), num(hi - lo)) << '\n';
  }

  out << "BOUNDS\n";
  for (int j = 0; j < n; ++j) {
    const double lo = p.var_lo(j), hi = p.var_hi(j);
    const auto& v = p.var_name(j);
    if (p.is_integer(j) && lo == 0.0 && hi == 1.0) {
      out << line("BV", "BND", v) << '\n';
      continue;
    }
    if (!std::isfinite(lo) && !std::isfinite(hi)) {
      out << line("FR", "BND", v) << '\n';
      continue;
    }
    if (lo == hi) {
      out << line("FX", "BND", v, num(lo)) << '\n';
      continue;
    }
    if (!std::isfinite(lo)) out << line("MI", "BND", v) << '\n';
    else if (lo != 0.0) out << line("LO", "BND", v, num(lo)) << '\n';
    if (std::isfinite(hi)) out << line("UP", "BND", v, num(hi)) << '\n';
  }

  bool quad = false;
  for (int j = 0; j < n; ++j) {
    if (p.q(j) == 0.0) continue;
    if (!quad) out << "QMATRIX\n";
    quad = true;
    out << line("", p.var_name(j), p.var_name(j), num(p.q(j))) << '\n';
  }
  out << "ENDATA\n";
}

void export_mps(const MiqpProblem& problem, const std::filesystem::path& path, const std::string& name) {
  if (problem.empty()) throw ValidationError("cannot export an empty problem");
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  write_mps(problem, out, name);
  if (!out) throw Error("write failed for " + path.string());
}

}  // namespace hems
