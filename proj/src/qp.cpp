#include "hems/qp.hpp"

#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>
#include <algorithm>
#include <cmath>

#include "hems/error.hpp"

namespace hems {

std::string to_string(QpStatus s) {
  switch (s) {
    case QpStatus::kOptimal: return "optimal";
    case QpStatus::kInfeasible: return "infeasible";
    case QpStatus::kUnbounded: return "unbounded";
    case QpStatus::kIterationLimit: return "iteration-limit";
    case QpStatus::kNumericalFailure: return "numerical-failure";
  }
  return "unknown";
}

namespace {

constexpr double kFixedWidth = 1e-12;
constexpr double kStepFraction = 0.995;
constexpr double kHuge = 1e10;

// Scalars are laid out as [x (n) | w (m) | v+ (m) | v- (m)].
// Row r reads  a_r'x - w_r + v+_r - v-_r = 0  with lo_r <= w_r <= hi_r.
struct Scalars {
  std::vector<double> lo, hi, q, c, v, zl, zu;
  // Bound distances are carried separately from v and stepped alongside it;
  // recomputing them as v - lo loses every digit near a large bound.
  std::vector<double> gl, gu;
  std::vector<char> has_lo, has_hi, fixed;

  void resize(std::size_t n) {
    for (auto* vec : {&lo, &hi, &q, &c, &v, &zl, &zu, &gl, &gu}) vec->assign(n, 0.0);
    for (auto* vec : {&has_lo, &has_hi, &fixed}) vec->assign(n, 0);
  }
};

}  // namespace

struct QpSolver::Impl {
  using SpMat = Eigen::SparseMatrix<double, Eigen::ColMajor, int>;

  const MiqpProblem& p;
  int n = 0, m = 0, nt = 0;
  SpMat kkt;
  std::vector<int> diag_pos;  // n + m
  std::vector<int> a_pos;     // per CSR nonzero
  Eigen::SimplicialLDLT<SpMat, Eigen::Lower, Eigen::AMDOrdering<int>> ldlt;
  bool analyzed = false;
  std::vector<char> row_active;
  double bound_norm = 1.0;

  // Workspace.
  Scalars s;
  std::vector<double> y, ax, rp, g, sig, rhat, ds, dzl, dzu, dy, dsa, dzla, dzua, dya, atv;
  Eigen::VectorXd rhs, sol, resid, corr;

  explicit Impl(const MiqpProblem& prob) : p(prob) {
    n = p.num_vars();
    m = p.num_rows();
    nt = n + 3 * m;
    row_active.assign(static_cast<std::size_t>(m), 1);
    for (int r = 0; r < m; ++r) {
      if (std::isinf(p.row_lo(r)) && std::isinf(p.row_hi(r))) row_active[r] = 0;
      if (std::isfinite(p.row_lo(r))) bound_norm = std::max(bound_norm, std::abs(p.row_lo(r)));
      if (std::isfinite(p.row_hi(r))) bound_norm = std::max(bound_norm, std::abs(p.row_hi(r)));
    }
    build_pattern();
    s.resize(static_cast<std::size_t>(nt));
    for (auto* vec : {&y, &ax, &rp, &dy, &dya}) vec->assign(static_cast<std::size_t>(m), 0.0);
    for (auto* vec : {&g, &sig, &rhat, &ds, &dzl, &dzu, &dsa, &dzla, &dzua}) vec->assign(static_cast<std::size_t>(nt), 0.0);
    atv.assign(static_cast<std::size_t>(n), 0.0);
    rhs.resize(n + m);
    sol.resize(n + m);
    resid.resize(n + m);
    corr.resize(n + m);
  }

  void build_pattern() {
    // Lower triangle of [[H, A'], [A, -D]]: column j < n holds H_jj then the
    // A entries of column j; column n + r holds -D_r.
    std::vector<std::vector<std::pair<int, int>>> by_col(static_cast<std::size_t>(n));
    for (int r = 0; r < m; ++r) {
      for (int k = p.row_begin(r); k < p.row_end(r); ++k) by_col[p.cols()[k]].emplace_back(r, k);
    }
    std::vector<Eigen::Triplet<double, int>> trips;
    trips.reserve(static_cast<std::size_t>(n + m + p.num_nonzeros()));
    for (int j = 0; j < n; ++j) {
      trips.emplace_back(j, j, 1.0);
      for (auto [r, k] : by_col[j]) trips.emplace_back(n + r, j, 1.0);
    }
    for (int r = 0; r < m; ++r) trips.emplace_back(n + r, n + r, -1.0);
    kkt.resize(n + m, n + m);
    kkt.setFromTriplets(trips.begin(), trips.end());
    kkt.makeCompressed();

    diag_pos.assign(static_cast<std::size_t>(n + m), -1);
    a_pos.assign(static_cast<std::size_t>(p.num_nonzeros()), -1);
    const int* outer = kkt.outerIndexPtr();
    const int* inner = kkt.innerIndexPtr();
    for (int j = 0; j < n; ++j) {
      std::size_t next = 0;
      for (int idx = outer[j]; idx < outer[j + 1]; ++idx) {
        const int row = inner[idx];
        if (row == j) {
          diag_pos[j] = idx;
        } else {
          // by_col[j] is sorted by row already because rows were scanned in order.
          while (next < by_col[j].size() && n + by_col[j][next].first != row) ++next;
          a_pos[by_col[j][next].second] = idx;
          ++next;
        }
      }
    }
    for (int r = 0; r < m; ++r) diag_pos[n + r] = outer[n + r];
  }

  int row_of(int t) const { return (t - n) % m; }
  double sigma_of(int t) const {
    if (t < n + m) return -1.0;
    if (t < n + 2 * m) return 1.0;
    return -1.0;
  }

  void set_bounds(std::span<const double> var_lo, std::span<const double> var_hi, std::span<const double> qx,
                  std::span<const double> cx, double penalty) {
    for (int j = 0; j < n; ++j) {
      s.lo[j] = var_lo[j];
      s.hi[j] = var_hi[j];
      s.q[j] = qx[j];
      s.c[j] = cx[j];
    }
    for (int r = 0; r < m; ++r) {
      const int w = n + r, vp = n + m + r, vm = n + 2 * m + r;
      s.lo[w] = row_active[r] ? p.row_lo(r) : 0.0;
      s.hi[w] = row_active[r] ? p.row_hi(r) : 0.0;
      s.q[w] = s.c[w] = 0.0;
      for (int t : {vp, vm}) {
        s.lo[t] = 0.0;
        s.hi[t] = kInf;
        s.q[t] = 0.0;
        s.c[t] = penalty;
      }
    }
    for (int t = 0; t < nt; ++t) {
      s.has_lo[t] = std::isfinite(s.lo[t]);
      s.has_hi[t] = std::isfinite(s.hi[t]);
      s.fixed[t] = s.has_lo[t] && s.has_hi[t] && s.hi[t] - s.lo[t] <= kFixedWidth;
      if (t >= n && t < n + m && !row_active[row_of(t)]) s.fixed[t] = 1;
    }
  }

  void initial_point(double penalty) {
    for (int t = 0; t < n + m; ++t) {
      double v;
      const double lo = s.lo[t], hi = s.hi[t];
      if (s.fixed[t]) {
        v = lo;
      } else if (s.has_lo[t] && s.has_hi[t]) {
        v = 0.5 * (lo + hi);
      } else if (s.has_lo[t]) {
        v = lo + std::max(1.0, 0.1 * std::abs(lo));
      } else if (s.has_hi[t]) {
        v = hi - std::max(1.0, 0.1 * std::abs(hi));
      } else {
        v = 0.0;
      }
      s.v[t] = v;
    }
    activities();
    for (int r = 0; r < m; ++r) {
      const int w = n + r;
      if (!s.fixed[w]) {
        const double lo = s.lo[w], hi = s.hi[w];
        const bool bl = s.has_lo[w], bh = s.has_hi[w];
        double v = ax[r];
        if (bl && bh) {
          const double margin = std::min(1.0, 0.25 * (hi - lo));
          v = std::clamp(v, lo + margin, hi - margin);
        } else if (bl) {
          v = std::max(v, lo + 1.0);
        } else if (bh) {
          v = std::min(v, hi - 1.0);
        }
        s.v[w] = v;
      }
      const double e = ax[r] - s.v[w];
      s.v[n + m + r] = 1.0 + std::max(-e, 0.0);
      s.v[n + 2 * m + r] = 1.0 + std::max(e, 0.0);
    }
    for (int t = 0; t < nt; ++t) {
      s.gl[t] = s.has_lo[t] ? s.v[t] - s.lo[t] : 0.0;
      s.gu[t] = s.has_hi[t] ? s.hi[t] - s.v[t] : 0.0;
    }
    for (int t = 0; t < nt; ++t) {
      const bool elastic = t >= n + m;
      s.zl[t] = s.has_lo[t] && !s.fixed[t] ? (elastic ? std::max(1.0, 0.5 * penalty) : 1.0) : 0.0;
      s.zu[t] = s.has_hi[t] && !s.fixed[t] ? 1.0 : 0.0;
    }
    std::fill(y.begin(), y.end(), 0.0);
  }

  void activities() {
    for (int r = 0; r < m; ++r) {
      double a = 0.0;
      for (int k = p.row_begin(r); k < p.row_end(r); ++k) a += p.coefs()[k] * s.v[p.cols()[k]];
      ax[r] = a;
    }
  }

  void at_times(const std::vector<double>& yy, std::vector<double>& out) {
    std::fill(out.begin(), out.end(), 0.0);
    for (int r = 0; r < m; ++r) {
      if (!row_active[r] || yy[r] == 0.0) continue;
      for (int k = p.row_begin(r); k < p.row_end(r); ++k) out[p.cols()[k]] += p.coefs()[k] * yy[r];
    }
  }

  // Gradient of the Lagrangian without bound duals: q v + c - coupling.
  void gradients() {
    at_times(y, atv);
    for (int j = 0; j < n; ++j) g[j] = s.q[j] * s.v[j] + s.c[j] - atv[j];
    for (int t = n; t < nt; ++t) g[t] = s.q[t] * s.v[t] + s.c[t] - sigma_of(t) * y[row_of(t)];
  }

  double sl(int t) const { return s.gl[t]; }
  double su(int t) const { return s.gu[t]; }

  // K * vec using the stored lower triangle, without regularization terms
  // other than those already in the values.
  void kkt_times(const Eigen::VectorXd& v, Eigen::VectorXd& out) const {
    out.setZero();
    const int* outer = kkt.outerIndexPtr();
    const int* inner = kkt.innerIndexPtr();
    const double* val = kkt.valuePtr();
    for (int j = 0; j < n + m; ++j) {
      for (int idx = outer[j]; idx < outer[j + 1]; ++idx) {
        const int i = inner[idx];
        out[i] += val[idx] * v[j];
        if (i != j) out[j] += val[idx] * v[i];
      }
    }
  }

  // Solves the Newton system for complementarity targets tl/tu (per scalar).
  // Reads sig (Sigma) and writes ds, dzl, dzu, dy.
  bool newton(const std::vector<double>& tl, const std::vector<double>& tu, std::vector<double>& dsv,
              std::vector<double>& dzlv, std::vector<double>& dzuv, std::vector<double>& dyv, double reg) {
    for (int t = 0; t < nt; ++t) {
      if (s.fixed[t]) {
        rhat[t] = 0.0;
        continue;
      }
      double r = g[t];
      if (s.has_lo[t]) r -= tl[t] / sl(t);
      if (s.has_hi[t]) r += tu[t] / su(t);
      rhat[t] = r;
    }
    for (int j = 0; j < n; ++j) rhs[j] = s.fixed[j] ? 0.0 : -rhat[j];
    for (int r = 0; r < m; ++r) {
      if (!row_active[r]) {
        rhs[n + r] = 0.0;
        continue;
      }
      double v = -rp[r];
      for (int t : {n + r, n + m + r, n + 2 * m + r}) {
        if (!s.fixed[t]) v += sigma_of(t) * rhat[t] / sig[t];
      }
      rhs[n + r] = v;
    }
    sol = ldlt.solve(rhs);
    if (ldlt.info() != Eigen::Success || !sol.allFinite()) return false;
    // One refinement step against the regularized matrix compensates for
    // loss of accuracy from the elimination ordering.
    kkt_times(sol, resid);
    resid = rhs - resid;
    corr = ldlt.solve(resid);
    if (corr.allFinite()) sol += corr;
    (void)reg;

    for (int j = 0; j < n; ++j) dsv[j] = s.fixed[j] ? 0.0 : sol[j];
    for (int r = 0; r < m; ++r) dyv[r] = row_active[r] ? -sol[n + r] : 0.0;
    for (int t = n; t < nt; ++t) {
      dsv[t] = s.fixed[t] ? 0.0 : (sigma_of(t) * dyv[row_of(t)] - rhat[t]) / sig[t];
    }
    for (int t = 0; t < nt; ++t) {
      if (s.fixed[t]) {
        dzlv[t] = dzuv[t] = 0.0;
        continue;
      }
      dzlv[t] = s.has_lo[t] ? tl[t] / sl(t) - s.zl[t] - s.zl[t] / sl(t) * dsv[t] : 0.0;
      dzuv[t] = s.has_hi[t] ? tu[t] / su(t) - s.zu[t] + s.zu[t] / su(t) * dsv[t] : 0.0;
    }
    return true;
  }

  double max_step(const std::vector<double>& dsv, const std::vector<double>& dzlv,
                  const std::vector<double>& dzuv) const {
    double a = 1.0;
    for (int t = 0; t < nt; ++t) {
      if (s.fixed[t]) continue;
      if (s.has_lo[t]) {
        if (dsv[t] < 0.0) a = std::min(a, -sl(t) / dsv[t]);
        if (dzlv[t] < 0.0) a = std::min(a, -s.zl[t] / dzlv[t]);
      }
      if (s.has_hi[t]) {
        if (dsv[t] > 0.0) a = std::min(a, su(t) / dsv[t]);
        if (dzuv[t] < 0.0) a = std::min(a, -s.zu[t] / dzuv[t]);
      }
    }
    return a;
  }

  struct RunResult {
    QpStatus status = QpStatus::kNumericalFailure;
    int iterations = 0;
    double pres = 0, dres = 0, gap = 0, elastic = 0;
  };

  RunResult run(const QpOptions& opts, double penalty, double obj_scale) {
    RunResult res;
    initial_point(penalty);
    std::vector<double> tl(static_cast<std::size_t>(nt)), tu(static_cast<std::size_t>(nt));
    double reg_p = 1e-9, reg_d = 1e-9;
    int ncomp = 0;
    for (int t = 0; t < nt; ++t) {
      if (s.fixed[t]) continue;
      ncomp += s.has_lo[t] + s.has_hi[t];
    }
    ncomp = std::max(ncomp, 1);

    bool nearly = false;
    double best_gap = kInf;
    int stalled = 0;
    for (int it = 0; it < opts.max_iter; ++it) {
      res.iterations = it;
      activities();
      for (int r = 0; r < m; ++r) {
        rp[r] = row_active[r] ? ax[r] - s.v[n + r] + s.v[n + m + r] - s.v[n + 2 * m + r] : 0.0;
      }
      gradients();
      double pres = 0.0, dres = 0.0, gap = 0.0, xmax = 0.0;
      for (int r = 0; r < m; ++r) pres = std::max(pres, std::abs(rp[r]));
      for (int t = 0; t < nt; ++t) {
        if (s.fixed[t]) continue;
        if (t < n) xmax = std::max(xmax, std::abs(s.v[t]));
        const double rd = g[t] - s.zl[t] + s.zu[t];
        // Elastic stationarity is measured relative to the penalty.
        dres = std::max(dres, t >= n + m ? std::abs(rd) / penalty * obj_scale : std::abs(rd));
        if (s.has_lo[t]) gap += sl(t) * s.zl[t];
        if (s.has_hi[t]) gap += su(t) * s.zu[t];
      }
      res.pres = pres;
      res.dres = dres;
      res.gap = gap;
      if (xmax > kHuge) {
        res.status = QpStatus::kUnbounded;
        return res;
      }
      const double fval = objective_with_penalty();
      if (pres <= opts.tol * bound_norm && dres <= opts.tol * obj_scale &&
          gap <= opts.tol * std::max(1.0, std::abs(fval))) {
        res.status = QpStatus::kOptimal;
        break;
      }
      // Used when the linear algebra gives out this close to the end; the
      // remaining complementarity is subtracted from the bound anyway.
      nearly = pres <= 1e3 * opts.tol * bound_norm && dres <= 1e3 * opts.tol * obj_scale &&
                          gap <= 1e3 * opts.tol * std::max(1.0, std::abs(fval));
      // Rounding floor reached: the gap stopped shrinking.
      if (gap < 0.99 * best_gap) {
        best_gap = gap;
        stalled = 0;
      } else if (++stalled >= 5 && nearly) {
        res.status = QpStatus::kOptimal;
        break;
      }
      const double mu = gap / ncomp;

      // Sigma and matrix values.
      double* val = kkt.valuePtr();
      for (int t = 0; t < nt; ++t) {
        if (s.fixed[t]) {
          sig[t] = 0.0;
          continue;
        }
        double d = s.q[t];
        if (s.has_lo[t]) d += s.zl[t] / sl(t);
        if (s.has_hi[t]) d += s.zu[t] / su(t);
        sig[t] = d + (t < n ? reg_p : 1e-14);
      }
      for (int j = 0; j < n; ++j) val[diag_pos[j]] = s.fixed[j] ? 1.0 : sig[j];
      for (int r = 0; r < m; ++r) {
        double dd = 0.0;
        if (row_active[r]) {
          for (int t : {n + r, n + m + r, n + 2 * m + r}) {
            if (!s.fixed[t]) dd += 1.0 / sig[t];
          }
        }
        val[diag_pos[n + r]] = row_active[r] ? -(dd + reg_d) : -1.0;
        for (int k = p.row_begin(r); k < p.row_end(r); ++k) {
          val[a_pos[k]] = (row_active[r] && !s.fixed[p.cols()[k]]) ? p.coefs()[k] : 0.0;
        }
      }
      if (!analyzed) {
        ldlt.analyzePattern(kkt);
        analyzed = true;
      }
      ldlt.factorize(kkt);
      if (ldlt.info() != Eigen::Success) {
        reg_p *= 100.0;
        reg_d *= 100.0;
        if (reg_p > 1e-2) {
          if (nearly) res.status = QpStatus::kOptimal;
          return res;
        }
        continue;
      }

      // Predictor.
      for (int t = 0; t < nt; ++t) {
        tl[t] = 0.0;
        tu[t] = 0.0;
      }
      if (!newton(tl, tu, dsa, dzla, dzua, dya, reg_p)) {
        if (nearly) res.status = QpStatus::kOptimal;
        return res;
      }
      const double a_aff = max_step(dsa, dzla, dzua);
      double gap_aff = 0.0;
      for (int t = 0; t < nt; ++t) {
        if (s.fixed[t]) continue;
        if (s.has_lo[t]) gap_aff += (sl(t) + a_aff * dsa[t]) * (s.zl[t] + a_aff * dzla[t]);
        if (s.has_hi[t]) gap_aff += (su(t) - a_aff * dsa[t]) * (s.zu[t] + a_aff * dzua[t]);
      }
      const double ratio = std::clamp(gap_aff / std::max(gap, 1e-300), 0.0, 1.0);
      const double centering = ratio * ratio * ratio;

      // Corrector.
      for (int t = 0; t < nt; ++t) {
        if (s.fixed[t]) continue;
        tl[t] = s.has_lo[t] ? centering * mu - dsa[t] * dzla[t] : 0.0;
        tu[t] = s.has_hi[t] ? centering * mu + dsa[t] * dzua[t] : 0.0;
      }
      if (!newton(tl, tu, ds, dzl, dzu, dy, reg_p)) {
        if (nearly) res.status = QpStatus::kOptimal;
        return res;
      }
      const double alpha = std::min(1.0, kStepFraction * max_step(ds, dzl, dzu));
      for (int t = 0; t < nt; ++t) {
        if (s.fixed[t]) continue;
        s.v[t] += alpha * ds[t];
        s.gl[t] += alpha * ds[t];
        s.gu[t] -= alpha * ds[t];
        s.zl[t] += alpha * dzl[t];
        s.zu[t] += alpha * dzu[t];
      }
      for (int r = 0; r < m; ++r) y[r] += alpha * dy[r];
      res.iterations = it + 1;
    }
    if (res.status != QpStatus::kOptimal) res.status = nearly ? QpStatus::kOptimal : QpStatus::kIterationLimit;
    double el = 0.0;
    for (int r = 0; r < m; ++r) el += s.v[n + m + r] + s.v[n + 2 * m + r];
    res.elastic = el;
    return res;
  }

  double objective_with_penalty() const {
    double f = 0.0;
    for (int t = 0; t < nt; ++t) f += 0.5 * s.q[t] * s.v[t] * s.v[t] + s.c[t] * s.v[t];
    return f;
  }

  double complementarity() const {
    double gap = 0.0;
    for (int t = 0; t < nt; ++t) {
      if (s.fixed[t]) continue;
      if (s.has_lo[t]) gap += sl(t) * s.zl[t];
      if (s.has_hi[t]) gap += su(t) * s.zu[t];
    }
    return gap;
  }

  QpSolution solve(std::span<const double> var_lo, std::span<const double> var_hi, const QpOptions& opts) {
    QpSolution out;
    for (int j = 0; j < n; ++j) {
      if (var_lo[j] > var_hi[j] + kFixedWidth) {
        out.status = QpStatus::kInfeasible;
        out.phase1_value = var_lo[j] - var_hi[j];
        return out;
      }
    }
    double obj_scale = 1.0;
    for (int j = 0; j < n; ++j) obj_scale = std::max({obj_scale, std::abs(p.c(j)), std::abs(p.q(j))});

    double penalty = opts.penalty;
    int total_iter = 0;
    for (int attempt = 0; attempt < 2; ++attempt) {
      set_bounds(var_lo, var_hi, p.q(), p.c(), penalty);
      auto res = run(opts, penalty, obj_scale);
      total_iter += res.iterations;
      out.iterations = total_iter;
      out.primal_residual = res.pres;
      out.dual_residual = res.dres;
      out.complementarity = res.gap;
      if (res.status == QpStatus::kUnbounded || res.status == QpStatus::kNumericalFailure) {
        out.status = res.status;
        return out;
      }
      collect(out);
      // A slightly violated optimum can often be repaired by the active-set
      // pass, which is cheaper and better conditioned than a higher price.
      if (out.violation > opts.feas_tol && res.status == QpStatus::kOptimal && opts.polish) {
        polish(out, opts.feas_tol);
      }
      if (out.violation <= opts.feas_tol) {
        out.status = res.status;
        if (res.status == QpStatus::kOptimal) {
          if (opts.polish) polish(out, opts.feas_tol);  // no-op when already repaired
          out.lower_bound = objective_with_penalty() + p.constant() - complementarity() -
                            1e-9 * std::max(1.0, std::abs(out.objective));
          out.lower_bound = std::min(out.lower_bound, out.objective);
        }
        return out;
      }
      // Violated rows: either the node is infeasible or the price was too low.
      const double phase1 = phase_one(var_lo, var_hi, opts, obj_scale, total_iter);
      out.phase1_value = phase1;
      out.iterations = total_iter;
      if (phase1 > opts.feas_tol) {
        out.status = QpStatus::kInfeasible;
        return out;
      }
      penalty *= 1e3;
    }
    out.status = QpStatus::kNumericalFailure;
    return out;
  }

  double phase_one(std::span<const double> var_lo, std::span<const double> var_hi, const QpOptions& opts,
                   double obj_scale, int& iters) {
    std::vector<double> zero(static_cast<std::size_t>(n), 0.0);
    set_bounds(var_lo, var_hi, zero, zero, 1.0);
    QpOptions o = opts;
    auto res = run(o, 1.0, std::max(1.0, obj_scale * 0.0 + 1.0));
    iters += res.iterations;
    if (res.status != QpStatus::kOptimal && res.status != QpStatus::kIterationLimit) return kInf;
    // The elastic sum overstates the violation by the barrier offset; the
    // actual row violation of x is the better certificate.
    activities();
    double worst = 0.0;
    for (int r = 0; r < m; ++r) {
      if (!row_active[r]) continue;
      worst = std::max({worst, p.row_lo(r) - ax[r], ax[r] - p.row_hi(r)});
    }
    return std::max(worst, 0.0);
  }

  // Active-set cleanup of a converged iterate: bounds and rows that look
  // active are imposed as equalities and the reduced KKT system is solved on
  // the same pattern. The result replaces `out.x` only if it is feasible and
  // no worse than the interior point.
  bool polish(QpSolution& out, double feas_tol) {
    const double reg = 1e-11;
    std::vector<double> target(static_cast<std::size_t>(n), 0.0);
    std::vector<char> fix(static_cast<std::size_t>(n), 0);
    for (int j = 0; j < n; ++j) {
      if (s.fixed[j]) {
        fix[j] = 1;
        target[j] = s.lo[j];
      } else if (s.has_lo[j] && sl(j) < s.zl[j]) {
        fix[j] = 1;
        target[j] = s.lo[j];
      } else if (s.has_hi[j] && su(j) < s.zu[j]) {
        fix[j] = 1;
        target[j] = s.hi[j];
      }
    }
    std::vector<char> act(static_cast<std::size_t>(m), 0);
    std::vector<double> bval(static_cast<std::size_t>(m), 0.0);
    for (int r = 0; r < m; ++r) {
      if (!row_active[r]) continue;
      const int w = n + r;
      if (s.fixed[w]) {
        act[r] = 1;
        bval[r] = s.lo[w];
      } else if (s.has_lo[w] && sl(w) < s.zl[w]) {
        act[r] = 1;
        bval[r] = s.lo[w];
      } else if (s.has_hi[w] && su(w) < s.zu[w]) {
        act[r] = 1;
        bval[r] = s.hi[w];
      }
    }
    double* val = kkt.valuePtr();
    for (int j = 0; j < n; ++j) val[diag_pos[j]] = fix[j] ? 1.0 : s.q[j] + reg;
    for (int r = 0; r < m; ++r) {
      val[diag_pos[n + r]] = act[r] ? -reg : -1.0;
      for (int k = p.row_begin(r); k < p.row_end(r); ++k) {
        val[a_pos[k]] = (act[r] && !fix[p.cols()[k]]) ? p.coefs()[k] : 0.0;
      }
    }
    ldlt.factorize(kkt);
    if (ldlt.info() != Eigen::Success) return false;

    Eigen::VectorXd z = Eigen::VectorXd::Zero(n + m);
    for (int j = 0; j < n; ++j) z[j] = fix[j] ? target[j] : s.v[j];
    for (int r = 0; r < m; ++r) z[n + r] = act[r] ? -y[r] : 0.0;
    std::vector<double> u(static_cast<std::size_t>(m));
    for (int sweep = 0; sweep < 4; ++sweep) {
      // Residual of the unregularized equations.
      for (int r = 0; r < m; ++r) u[r] = act[r] ? -z[n + r] : 0.0;
      for (int j = 0; j < n; ++j) atv[j] = 0.0;
      for (int r = 0; r < m; ++r) {
        if (!act[r]) continue;
        for (int k = p.row_begin(r); k < p.row_end(r); ++k) atv[p.cols()[k]] += p.coefs()[k] * u[r];
      }
      for (int j = 0; j < n; ++j) resid[j] = fix[j] ? 0.0 : -(s.q[j] * z[j] + s.c[j] - atv[j]);
      for (int r = 0; r < m; ++r) {
        if (!act[r]) {
          resid[n + r] = 0.0;
          continue;
        }
        double a = 0.0;
        for (int k = p.row_begin(r); k < p.row_end(r); ++k) a += p.coefs()[k] * z[p.cols()[k]];
        resid[n + r] = bval[r] - a;
      }
      corr = ldlt.solve(resid);
      if (!corr.allFinite()) return false;
      for (int j = 0; j < n; ++j) {
        if (!fix[j]) z[j] += corr[j];
      }
      for (int r = 0; r < m; ++r) {
        if (act[r]) z[n + r] += corr[n + r];
      }
    }
    std::vector<double> x(z.data(), z.data() + n);
    for (int j = 0; j < n; ++j) {
      const double lo = s.lo[j], hi = s.hi[j];
      if (s.has_lo[j] && x[j] < lo) {
        if (x[j] < lo - feas_tol) return false;
        x[j] = lo;
      }
      if (s.has_hi[j] && x[j] > hi) {
        if (x[j] > hi + feas_tol) return false;
        x[j] = hi;
      }
    }
    double viol = 0.0;
    for (int r = 0; r < m; ++r) {
      if (!row_active[r]) continue;
      double a = 0.0;
      for (int k = p.row_begin(r); k < p.row_end(r); ++k) a += p.coefs()[k] * x[p.cols()[k]];
      viol = std::max({viol, p.row_lo(r) - a, a - p.row_hi(r)});
    }
    if (viol > std::max(out.violation, feas_tol)) return false;
    const double f = p.objective(x);
    // An interior point that leans on a small row violation can look cheaper
    // than the clean vertex; feasibility wins in that case.
    const bool cleaner = out.violation > feas_tol && viol <= feas_tol;
    if (!cleaner && f > out.objective + 1e-9 * std::max(1.0, std::abs(out.objective))) return false;
    out.x = std::move(x);
    out.objective = f;
    out.violation = std::max(viol, 0.0);
    return true;
  }

  void collect(QpSolution& out) {
    out.x.assign(s.v.begin(), s.v.begin() + n);
    for (int j = 0; j < n; ++j) {
      if (s.fixed[j]) out.x[j] = s.lo[j];
    }
    out.row_duals = y;
    out.objective = p.objective(out.x);
    out.violation = 0.0;
    for (int r = 0; r < m; ++r) {
      if (!row_active[r]) continue;
      double a = 0.0;
      for (int k = p.row_begin(r); k < p.row_end(r); ++k) a += p.coefs()[k] * out.x[p.cols()[k]];
      out.violation = std::max({out.violation, p.row_lo(r) - a, a - p.row_hi(r)});
    }
  }
};

QpSolver::QpSolver(const MiqpProblem& problem) : problem_(&problem), impl_(std::make_unique<Impl>(problem)) {
  for (int j = 0; j < problem.num_vars(); ++j) {
    if (problem.q(j) < 0.0) throw ValidationError("quadratic term of " + problem.var_name(j) + " is negative");
  }
}
QpSolver::~QpSolver() = default;
QpSolver::QpSolver(QpSolver&&) noexcept = default;
QpSolver& QpSolver::operator=(QpSolver&&) noexcept = default;

QpSolution QpSolver::solve(std::span<const double> var_lo, std::span<const double> var_hi, const QpOptions& opts) {
  return impl_->solve(var_lo, var_hi, opts);
}

QpSolution QpSolver::solve(const QpOptions& opts) {
  return impl_->solve(problem_->var_lo(), problem_->var_hi(), opts);
}

QpSolution solve_qp(const MiqpProblem& problem, const QpOptions& opts) {
  QpSolver solver(problem);
  return solver.solve(opts);
}

}  // namespace hems
