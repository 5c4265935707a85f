#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "gridcap/common.hpp"

namespace gridcap {

/// Feasible region {x : G x <= h, x >= lower, x_i = 0 for i in fixed_zero}.
/// Entries of `lower` may be -inf for variables free below; variables in
/// fixed_zero are pinned regardless of bounds. Optional row_names label the
/// rows of G in diagnostics.
struct Polyhedron {
  Eigen::MatrixXd G;
  Eigen::VectorXd h;
  Eigen::VectorXd lower;
  std::vector<int> fixed_zero;
  std::vector<std::string> row_names;

  int n_vars() const { return static_cast<int>(lower.size()); }
  int n_rows() const { return static_cast<int>(G.rows()); }

  static Polyhedron with_vars(int n) {
    Polyhedron p;
    p.G = Eigen::MatrixXd(0, n);
    p.h = Eigen::VectorXd(0);
    p.lower = Eigen::VectorXd::Zero(n);
    return p;
  }

  /// Convenience for small hand-built regions; quadratic if used in bulk.
  void append_row(const Eigen::VectorXd& row, double rhs, std::string name = std::string()) {
    if (row.size() != lower.size()) throw Error(Errc::DimensionMismatch, "row length != n_vars");
    G.conservativeResize(G.rows() + 1, lower.size());
    G.row(G.rows() - 1) = row.transpose();
    h.conservativeResize(h.size() + 1);
    h[h.size() - 1] = rhs;
    if (!row_names.empty() || !name.empty()) {
      row_names.resize(static_cast<size_t>(G.rows()) - 1, "");
      row_names.push_back(std::move(name));
    }
  }

  std::string row_name(int j) const {
    if (j >= 0 && j < static_cast<int>(row_names.size()) && !row_names[j].empty())
      return row_names[j];
    return "row " + std::to_string(j);
  }
};

/// Weighted squared deviation from targets: f(x) = sum_i w_i (t_i - x_i)^2.
/// Weights are zero on coordinates the objective ignores.
struct SeparableQuadratic {
  Eigen::VectorXd weights;
  Eigen::VectorXd targets;

  double value(const Eigen::VectorXd& x) const {
    return (weights.array() * (targets - x).array().square()).sum();
  }
  Eigen::VectorXd gradient(const Eigen::VectorXd& x) const {
    return 2.0 * (weights.array() * (x - targets).array()).matrix();
  }
};

enum class SolveStatus { Optimal, Infeasible, Unbounded, IterationLimit };

inline const char* solve_status_name(SolveStatus s) {
  switch (s) {
    case SolveStatus::Optimal: return "Optimal";
    case SolveStatus::Infeasible: return "Infeasible";
    case SolveStatus::Unbounded: return "Unbounded";
    case SolveStatus::IterationLimit: return "IterationLimit";
  }
  return "?";
}

enum class Sense { Minimize, Maximize };

/// Outcome of one solve. On Optimal the solution is feasible to 1e-7 and the
/// stationarity/complementarity residual is at most 1e-6. `duals` are the
/// multipliers of the rows of G for the minimization form of the problem
/// (costs are negated internally when maximizing). On Infeasible,
/// violating_rows lists rows that retain violation at the minimum-violation
/// point of a phase-1 solve.
struct SolveReport {
  Eigen::VectorXd solution;
  Eigen::VectorXd duals;
  double objective = 0.0;
  SolveStatus status = SolveStatus::IterationLimit;
  double kkt_residual = std::numeric_limits<double>::infinity();
  std::vector<int> binding_rows;
  std::vector<int> violating_rows;
  int iterations = 0;
};

constexpr double kFeasTol = 1e-7;
constexpr double kKktTol = 1e-6;

inline void check_polyhedron(const Polyhedron& feas) {
  const int n = feas.n_vars();
  if (feas.G.rows() != feas.h.size())
    throw Error(Errc::DimensionMismatch, "G and h row counts differ");
  if (feas.G.rows() > 0 && feas.G.cols() != n)
    throw Error(Errc::DimensionMismatch, "G column count != n_vars");
  if (!feas.row_names.empty() && static_cast<int>(feas.row_names.size()) != feas.n_rows())
    throw Error(Errc::DimensionMismatch, "row_names length != row count");
  for (int i : feas.fixed_zero) {
    if (i < 0 || i >= n) throw Error(Errc::IndexOutOfRange, "fixed_zero index " + std::to_string(i));
  }
  for (int j = 0; j < feas.n_rows(); ++j) {
    if (feas.G.row(j).cwiseAbs().maxCoeff() == 0.0 && feas.h[j] < 0.0)
      throw Error(Errc::BadInput, "all-zero row " + std::to_string(j) + " with negative bound");
  }
}

namespace detail {

/// Canonical inequality-form problem the interior-point core consumes:
/// min 1/2 x' diag(Q) x + q' x  s.t.  A x <= b. The leading m_user rows of A
/// are caller rows; the rest encode variable lower bounds.
struct ConeProblem {
  Eigen::VectorXd Qdiag;
  Eigen::VectorXd q;
  Eigen::SparseMatrix<double> A;
  Eigen::VectorXd b;
  int m_user = 0;
  std::vector<int> bound_row_of;  // per variable, index of its bound row or -1
};

struct IpmResult {
  Eigen::VectorXd x;
  Eigen::VectorXd lambda;
  bool certified = false;  // feasibility and folded KKT met internal targets
  int iterations = 0;
  bool diverged = false;
};

/// Max violation of A x <= b.
inline double primal_violation(const ConeProblem& p, const Eigen::VectorXd& x) {
  if (p.A.rows() == 0) return 0.0;
  return std::max(0.0, (p.A * x - p.b).maxCoeff());
}

/// Stationarity/complementarity residual with bound-row multipliers folded
/// into the per-variable sign conditions. This is the same quantity the
/// public kkt_residual reports, evaluated on the canonical form.
inline double folded_kkt(const ConeProblem& p, const Eigen::VectorXd& x,
                         const Eigen::VectorXd& lambda) {
  const Eigen::VectorXd grad = p.Qdiag.cwiseProduct(x) + p.q;
  Eigen::VectorXd nu = grad;
  if (p.A.rows() > 0) {
    // Fold only user rows; bound rows act as the bound multipliers below.
    nu += p.A.topRows(p.m_user).transpose() * lambda.head(p.m_user);
  }
  double res = 0.0;
  const Eigen::VectorXd gap = p.A.rows() > 0 ? Eigen::VectorXd(p.A * x - p.b) : Eigen::VectorXd();
  for (int i = 0; i < p.Qdiag.size(); ++i) {
    const int row = p.bound_row_of[i];
    if (row >= 0) {
      const double mult = nu[i];                 // implied bound multiplier
      const double slack = -gap[row];            // x_i - lower_i
      res = std::max(res, std::max(0.0, -mult));
      res = std::max(res, std::abs(mult * slack));
    } else {
      res = std::max(res, std::abs(nu[i]));
    }
  }
  for (int j = 0; j < p.m_user; ++j) {
    res = std::max(res, std::max(0.0, -lambda[j]));
    res = std::max(res, std::abs(lambda[j] * gap[j]));
  }
  return res;
}

/// Primal objective of the canonical form.
inline double cone_objective(const ConeProblem& p, const Eigen::VectorXd& x) {
  return 0.5 * x.dot(p.Qdiag.cwiseProduct(x)) + p.q.dot(x);
}

/// Infeasible-start predictor-corrector interior-point iteration on the
/// canonical form. Stops once the iterate is feasible to feas_target, the
/// folded KKT residual is below kkt_target and the complementarity gap is
/// small relative to the objective (which bounds objective suboptimality),
/// or on stall/divergence.
inline IpmResult ipm_solve(const ConeProblem& p, double feas_target = 0.5 * kFeasTol,
                           double kkt_target = 0.5 * kKktTol, int max_iter = 200) {
  const int n = static_cast<int>(p.Qdiag.size());
  const int m = static_cast<int>(p.A.rows());

  IpmResult out;
  if (m == 0) {
    // No constraints at all: solvable only where the quadratic is present.
    out.x = Eigen::VectorXd::Zero(n);
    bool ok = true;
    for (int i = 0; i < n; ++i) {
      if (p.Qdiag[i] > 0.0)
        out.x[i] = -p.q[i] / p.Qdiag[i];
      else if (p.q[i] != 0.0)
        ok = false;  // linear and unconstrained: no finite minimizer
    }
    out.lambda = Eigen::VectorXd(0);
    out.certified = ok;
    out.diverged = !ok;
    return out;
  }

  Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd s = p.b.cwiseMax(1.0);
  Eigen::VectorXd lambda = Eigen::VectorXd::Ones(m);

  const Eigen::SparseMatrix<double> At = p.A.transpose();

  // Diagonal pattern added up front so the normal-matrix sparsity stays
  // constant across iterations and the symbolic factorization is reused.
  Eigen::SparseMatrix<double> D(n, n);
  D.setIdentity();

  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt;
  bool analyzed = false;

  double delta = 1e-11 * (1.0 + p.Qdiag.cwiseAbs().maxCoeff());
  double mu_prev = std::numeric_limits<double>::infinity();
  int stall = 0;

  // Worst ratio of the three stopping criteria; <= 1 means strictly
  // certified. The complementarity gap bounds objective suboptimality at a
  // primal-feasible point, hence the relative form.
  auto score_at = [&](const Eigen::VectorXd& xc, const Eigen::VectorXd& sc,
                      const Eigen::VectorXd& lc) {
    const double gap_tol = 1e-9 * (1.0 + std::abs(cone_objective(p, xc)));
    return std::max({primal_violation(p, xc) / feas_target, sc.dot(lc) / gap_tol,
                     folded_kkt(p, xc, lc) / kkt_target});
  };

  double best_score = std::numeric_limits<double>::infinity();
  Eigen::VectorXd best_x = x, best_s = s, best_lambda = lambda;
  auto consider = [&](const Eigen::VectorXd& xc, const Eigen::VectorXd& sc,
                      const Eigen::VectorXd& lc) {
    const double score = score_at(xc, sc, lc);
    if (score < best_score) {
      best_score = score;
      best_x = xc;
      best_s = sc;
      best_lambda = lc;
    }
    return score;
  };

  for (int iter = 0; iter < max_iter; ++iter) {
    out.iterations = iter;

    if (consider(x, s, lambda) <= 1.0) {
      out.certified = true;
      break;
    }
    if (x.cwiseAbs().maxCoeff() > 1e10) {
      out.diverged = true;
      break;
    }

    const Eigen::VectorXd r_p = p.A * x + s - p.b;
    const Eigen::VectorXd grad = p.Qdiag.cwiseProduct(x) + p.q;
    const double mu = s.dot(lambda) / m;

    // Stall detection: complementarity no longer improving.
    if (mu > 0.971 * mu_prev) {
      if (++stall >= 12) break;
    } else {
      stall = 0;
    }
    mu_prev = mu;

    Eigen::VectorXd w(m);
    for (int j = 0; j < m; ++j)
      w[j] = std::clamp(lambda[j] / s[j], 1e-16, 1e16);

    Eigen::SparseMatrix<double> K;
    Eigen::VectorXd dx_aff, dx;
    bool factored = false;
    while (!factored) {
      for (int i = 0; i < n; ++i) D.valuePtr()[i] = p.Qdiag[i] + delta;
      K = Eigen::SparseMatrix<double>(At * w.asDiagonal() * p.A) + D;
      if (!analyzed) {
        ldlt.analyzePattern(K);
        analyzed = true;
      }
      ldlt.factorize(K);
      if (ldlt.info() == Eigen::Success) {
        factored = true;
      } else {
        delta *= 100.0;
        if (delta > 1.0) {
          out.diverged = true;
          return out;
        }
      }
    }
    auto solve_refined = [&](const Eigen::VectorXd& rhs) {
      Eigen::VectorXd d = ldlt.solve(rhs);
      d += ldlt.solve(rhs - K * d);
      return d;
    };

    // Affine-scaling predictor.
    Eigen::VectorXd rhs = -grad - At * (w.cwiseProduct(r_p));
    dx_aff = solve_refined(rhs);
    Eigen::VectorXd ds_aff = -r_p - p.A * dx_aff;
    Eigen::VectorXd dl_aff = -lambda - w.cwiseProduct(ds_aff);

    auto max_step = [](const Eigen::VectorXd& v, const Eigen::VectorXd& dv) {
      double a = 1.0;
      for (int j = 0; j < v.size(); ++j)
        if (dv[j] < 0.0) a = std::min(a, -v[j] / dv[j]);
      return a;
    };
    const double ap_aff = max_step(s, ds_aff);
    const double ad_aff = max_step(lambda, dl_aff);
    const double mu_aff =
        (s + ap_aff * ds_aff).dot(lambda + ad_aff * dl_aff) / m;
    double sigma = mu > 0.0 ? std::pow(mu_aff / mu, 3) : 0.0;
    sigma = std::clamp(sigma, 0.0, 1.0);

    // Centering-plus-corrector step.
    Eigen::VectorXd comp = (sigma * mu - dl_aff.cwiseProduct(ds_aff).array()).matrix();
    Eigen::VectorXd sinv_rc = lambda - comp.cwiseQuotient(s);
    rhs = -grad + At * (sinv_rc - lambda) - At * (w.cwiseProduct(r_p));
    dx = solve_refined(rhs);
    Eigen::VectorXd ds = -r_p - p.A * dx;
    Eigen::VectorXd dl = -sinv_rc - w.cwiseProduct(ds);

    const double tau = mu < 1e-6 * (1.0 + p.b.cwiseAbs().maxCoeff()) ? 0.9995 : 0.995;
    const double ap = std::min(1.0, tau * max_step(s, ds));
    const double ad = std::min(1.0, tau * max_step(lambda, dl));

    x += ap * dx;
    s += ap * ds;
    lambda += ad * dl;
    for (int j = 0; j < m; ++j) {
      s[j] = std::max(s[j], 1e-300);
      lambda[j] = std::max(lambda[j], 1e-300);
    }
  }

  if (!out.certified) {
    consider(x, s, lambda);
    if (best_score <= 1.0) out.certified = true;
  }
  if (!out.certified && !out.diverged) {
    // Degenerate instances can floor the gap above its strict target while
    // the iterate already sits at the numerical optimum. Accept it when the
    // public feasibility/KKT gates hold and the gap still bounds the
    // objective error within the documented solve tolerance.
    const double gap = best_s.dot(best_lambda);
    out.certified = primal_violation(p, best_x) <= feas_target &&
                    folded_kkt(p, best_x, best_lambda) <= kkt_target &&
                    gap <= 1e-7 * (1.0 + std::abs(cone_objective(p, best_x)));
  }
  out.x = std::move(best_x);
  out.lambda = std::move(best_lambda);
  return out;
}

/// Reduced problem: fixed-to-zero variables removed, lower bounds split out.
struct Reduction {
  std::vector<int> keep;          // reduced index -> original index
  std::vector<int> reduced_of;    // original index -> reduced index or -1
  Eigen::MatrixXd G;              // user rows over kept variables
  Eigen::VectorXd h;
  Eigen::VectorXd lower;          // kept-variable lower bounds (may be -inf)
};

inline Reduction reduce(const Polyhedron& feas) {
  const int n = feas.n_vars();
  std::vector<char> fixed(n, 0);
  for (int i : feas.fixed_zero) fixed[i] = 1;

  Reduction red;
  red.reduced_of.assign(n, -1);
  for (int i = 0; i < n; ++i) {
    if (!fixed[i]) {
      red.reduced_of[i] = static_cast<int>(red.keep.size());
      red.keep.push_back(i);
    }
  }
  const int nr = static_cast<int>(red.keep.size());
  red.G.resize(feas.n_rows(), nr);
  for (int k = 0; k < nr; ++k) red.G.col(k) = feas.G.col(red.keep[k]);
  red.h = feas.h;
  red.lower.resize(nr);
  for (int k = 0; k < nr; ++k) red.lower[k] = feas.lower[red.keep[k]];
  return red;
}

inline ConeProblem assemble(const Eigen::VectorXd& Qdiag, const Eigen::VectorXd& q,
                            const Eigen::MatrixXd& G, const Eigen::VectorXd& h,
                            const Eigen::VectorXd& lower) {
  const int n = static_cast<int>(q.size());
  const int m_user = static_cast<int>(G.rows());
  ConeProblem p;
  p.Qdiag = Qdiag;
  p.q = q;
  p.m_user = m_user;
  p.bound_row_of.assign(n, -1);

  int m_bound = 0;
  for (int i = 0; i < n; ++i)
    if (lower[i] > -kInf) ++m_bound;

  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(static_cast<size_t>((G.array() != 0.0).count()) + m_bound);
  Eigen::VectorXd b(m_user + m_bound);
  for (int j = 0; j < m_user; ++j) {
    for (int i = 0; i < n; ++i)
      if (G(j, i) != 0.0) trips.emplace_back(j, i, G(j, i));
    b[j] = h[j];
  }
  int row = m_user;
  for (int i = 0; i < n; ++i) {
    if (lower[i] > -kInf) {
      trips.emplace_back(row, i, -1.0);
      b[row] = -lower[i];
      p.bound_row_of[i] = row;
      ++row;
    }
  }
  p.A.resize(m_user + m_bound, n);
  p.A.setFromTriplets(trips.begin(), trips.end());
  p.b = std::move(b);
  return p;
}

/// Phase-1 least-violation LP: min sum t  s.t.  G x - t <= h, t >= 0, bounds
/// on x kept hard. Always feasible and bounded, so the interior-point core
/// converges; a positive optimum certifies infeasibility of the original
/// rows and the positive t_j name the irreducible violations.
struct Phase1Outcome {
  bool feasible = false;
  std::vector<int> violating_rows;
};

inline Phase1Outcome phase1(const Reduction& red) {
  const int nr = static_cast<int>(red.lower.size());
  const int m = static_cast<int>(red.G.rows());
  Eigen::MatrixXd G(m, nr + m);
  G << red.G, -Eigen::MatrixXd::Identity(m, m);
  Eigen::VectorXd lower(nr + m);
  lower.head(nr) = red.lower;
  lower.tail(m).setZero();
  Eigen::VectorXd q = Eigen::VectorXd::Zero(nr + m);
  q.tail(m).setOnes();

  ConeProblem p = assemble(Eigen::VectorXd::Zero(nr + m), q, G, red.h, lower);
  IpmResult r = ipm_solve(p);

  Phase1Outcome out;
  if (!r.certified) return out;  // stay inconclusive; caller reports a limit
  const Eigen::VectorXd t = r.x.tail(m);
  out.feasible = t.sum() <= kFeasTol * (1.0 + static_cast<double>(m));
  if (!out.feasible) {
    for (int j = 0; j < m; ++j)
      if (t[j] > kFeasTol) out.violating_rows.push_back(j);
  }
  return out;
}

/// Objective growth probe for a linear cost: re-solves under two nested
/// boxes; if enlarging the box keeps improving the objective the problem is
/// unbounded in the cost direction.
inline bool lp_unbounded_probe(const Reduction& red, const Eigen::VectorXd& q) {
  const int nr = static_cast<int>(red.lower.size());
  auto boxed_value = [&](double radius, bool& ok) {
    Eigen::MatrixXd G(red.G.rows() + 2 * nr, nr);
    Eigen::VectorXd h(red.h.size() + 2 * nr);
    G.topRows(red.G.rows()) = red.G;
    h.head(red.h.size()) = red.h;
    G.bottomRows(2 * nr).setZero();
    for (int i = 0; i < nr; ++i) {
      G(red.G.rows() + 2 * i, i) = 1.0;
      h(red.h.size() + 2 * i) = radius;
      G(red.G.rows() + 2 * i + 1, i) = -1.0;
      h(red.h.size() + 2 * i + 1) = radius;
    }
    ConeProblem p = assemble(Eigen::VectorXd::Zero(nr), q, G, h, red.lower);
    IpmResult r = ipm_solve(p);
    ok = r.certified;
    return ok ? q.dot(r.x) : 0.0;
  };
  bool ok1 = false, ok2 = false;
  const double v1 = boxed_value(1e6, ok1);
  const double v2 = boxed_value(1e8, ok2);
  if (!ok1 || !ok2) return false;
  return v2 < v1 - 1e-3 * (1.0 + std::abs(v1));
}

}  // namespace detail

/// Stationarity/complementarity residual of a candidate primal-dual pair:
/// the max over variables of the folded bound conditions and over rows of
/// dual sign and complementary slackness. Fixed-to-zero variables carry no
/// condition. Primal feasibility is checked separately by callers.
inline double kkt_residual(const SeparableQuadratic& obj, const Polyhedron& feas,
                           const Eigen::VectorXd& x, const Eigen::VectorXd& duals) {
  const int n = feas.n_vars();
  if (obj.weights.size() != n || obj.targets.size() != n || x.size() != n)
    throw Error(Errc::DimensionMismatch, "objective/point size != n_vars");
  if (duals.size() != feas.n_rows())
    throw Error(Errc::DimensionMismatch, "dual vector length != row count");

  std::vector<char> fixed(n, 0);
  for (int i : feas.fixed_zero) fixed[i] = 1;

  Eigen::VectorXd nu = obj.gradient(x);
  if (feas.n_rows() > 0) nu += feas.G.transpose() * duals;

  double res = 0.0;
  for (int i = 0; i < n; ++i) {
    if (fixed[i]) continue;
    if (feas.lower[i] > -kInf) {
      res = std::max(res, std::max(0.0, -nu[i]));
      res = std::max(res, std::abs(nu[i] * (x[i] - feas.lower[i])));
    } else {
      res = std::max(res, std::abs(nu[i]));
    }
  }
  for (int j = 0; j < feas.n_rows(); ++j) {
    res = std::max(res, std::max(0.0, -duals[j]));
    res = std::max(res, std::abs(duals[j] * (feas.G.row(j).dot(x) - feas.h[j])));
  }
  return res;
}

namespace detail {

struct MinProblem {
  Eigen::VectorXd Qdiag;  // over reduced variables
  Eigen::VectorXd q;
};

/// Shared driver: solve the reduced minimization, classify failures, expand
/// the solution back to the full variable space and certify the report.
inline SolveReport drive_solve(const Polyhedron& feas, const Reduction& red, const MinProblem& mp,
                               bool is_lp) {
  ConeProblem cone = assemble(mp.Qdiag, mp.q, red.G, red.h, red.lower);
  IpmResult res = ipm_solve(cone);

  SolveReport report;
  report.iterations = res.iterations;

  if (!res.certified) {
    Phase1Outcome ph = phase1(red);
    if (!ph.feasible && !ph.violating_rows.empty()) {
      report.status = SolveStatus::Infeasible;
      report.violating_rows = ph.violating_rows;
      return report;
    }
    if (ph.feasible && is_lp && lp_unbounded_probe(red, mp.q)) {
      report.status = SolveStatus::Unbounded;
      return report;
    }
    report.status = SolveStatus::IterationLimit;
    return report;
  }

  const int n = feas.n_vars();
  report.solution = Eigen::VectorXd::Zero(n);
  for (size_t k = 0; k < red.keep.size(); ++k) report.solution[red.keep[k]] = res.x[k];
  report.duals = res.lambda.head(feas.n_rows());
  report.status = SolveStatus::Optimal;
  for (int j = 0; j < feas.n_rows(); ++j) {
    if (std::abs(feas.G.row(j).dot(report.solution) - feas.h[j]) <= kFeasTol)
      report.binding_rows.push_back(j);
  }
  return report;
}

/// Pushes an optimal interior-point iterate to a vertex of the feasible set
/// without losing optimality: repeatedly move along a null-space direction
/// of the tight rows that does not increase the cost until a new row blocks,
/// so the tight set grows to full rank. Returns false when no vertex is
/// reachable this way (non-pointed region); callers then keep the iterate.
inline bool purify_vertex(const Reduction& red, const Eigen::VectorXd& q,
                          Eigen::VectorXd& x_red) {
  const int nr = static_cast<int>(red.lower.size());
  // All rows, bounds included, as one stacked system.
  std::vector<Eigen::VectorXd> rows;
  std::vector<double> rhs;
  for (int j = 0; j < red.G.rows(); ++j) {
    rows.push_back(red.G.row(j).transpose());
    rhs.push_back(red.h[j]);
  }
  for (int i = 0; i < nr; ++i) {
    if (red.lower[i] > -kInf) {
      Eigen::VectorXd e = Eigen::VectorXd::Zero(nr);
      e[i] = -1.0;
      rows.push_back(e);
      rhs.push_back(-red.lower[i]);
    }
  }
  const int m = static_cast<int>(rows.size());

  Eigen::VectorXd x = x_red;
  for (int round = 0; round < 4 * nr + 4; ++round) {
    std::vector<int> tight;
    for (int j = 0; j < m; ++j) {
      if (rhs[j] - rows[j].dot(x) <= 1e-7 * (1.0 + std::abs(rhs[j]))) tight.push_back(j);
    }
    Eigen::MatrixXd B(tight.size(), nr);
    for (size_t k = 0; k < tight.size(); ++k) B.row(k) = rows[tight[k]].transpose();
    Eigen::FullPivLU<Eigen::MatrixXd> lu(B);
    lu.setThreshold(1e-9);
    if (static_cast<int>(lu.rank()) == nr) {
      x_red = x;
      return true;
    }
    const Eigen::MatrixXd Z = tight.empty() ? Eigen::MatrixXd::Identity(nr, nr)
                                            : Eigen::MatrixXd(lu.kernel());

    // Prefer the steepest cost-decreasing direction in the null space; fall
    // back to an arbitrary flat one when the cost is constant there.
    Eigen::VectorXd d = -Z * (Z.transpose() * q);
    bool flat = false;
    if (d.norm() <= 1e-12) {
      d = Z.col(0);
      flat = true;
    }
    d /= d.norm();

    auto blocking_step = [&](const Eigen::VectorXd& dir, bool& any) {
      double theta = std::numeric_limits<double>::infinity();
      any = false;
      for (int j = 0; j < m; ++j) {
        const double advance = rows[j].dot(dir);
        if (advance > 1e-11) {
          any = true;
          theta = std::min(theta, std::max(0.0, rhs[j] - rows[j].dot(x)) / advance);
        }
      }
      return theta;
    };
    bool any = false;
    double theta = blocking_step(d, any);
    if (!any && flat) {
      d = -d;
      theta = blocking_step(d, any);
    }
    if (!any) return false;  // recession direction: region is not pointed
    x += theta * d;
  }
  return false;
}

}  // namespace detail

/// Minimizes a separable quadratic over the polyhedron. On Optimal the
/// report carries row duals certifying a residual at most 1e-6.
inline SolveReport solve_separable_qp(const SeparableQuadratic& obj, const Polyhedron& feas) {
  check_polyhedron(feas);
  const int n = feas.n_vars();
  if (obj.weights.size() != n || obj.targets.size() != n)
    throw Error(Errc::DimensionMismatch, "objective size != n_vars");
  for (int i = 0; i < n; ++i) {
    if (obj.weights[i] < 0.0) throw Error(Errc::BadInput, "negative quadratic weight");
    if (obj.weights[i] > 0.0 && obj.targets[i] <= 0.0)
      throw Error(Errc::BadInput, "weighted coordinate needs a positive target");
  }

  detail::Reduction red = detail::reduce(feas);
  detail::MinProblem mp;
  const int nr = static_cast<int>(red.keep.size());
  mp.Qdiag.resize(nr);
  mp.q.resize(nr);
  for (int k = 0; k < nr; ++k) {
    const int i = red.keep[k];
    mp.Qdiag[k] = 2.0 * obj.weights[i];
    mp.q[k] = -2.0 * obj.weights[i] * obj.targets[i];
  }

  SolveReport report = detail::drive_solve(feas, red, mp, /*is_lp=*/false);
  if (report.status == SolveStatus::Optimal) {
    report.objective = obj.value(report.solution);
    report.kkt_residual = kkt_residual(obj, feas, report.solution, report.duals);
  }
  return report;
}

/// Optimizes a linear cost over the polyhedron. Solutions of small problems
/// are cleaned up to a vertex of the optimal face; the objective is always
/// within 1e-7 of the optimum on Optimal.
inline SolveReport solve_lp(const Eigen::VectorXd& cost, const Polyhedron& feas, Sense sense) {
  check_polyhedron(feas);
  const int n = feas.n_vars();
  if (cost.size() != n) throw Error(Errc::DimensionMismatch, "cost size != n_vars");

  detail::Reduction red = detail::reduce(feas);
  detail::MinProblem mp;
  const int nr = static_cast<int>(red.keep.size());
  mp.Qdiag = Eigen::VectorXd::Zero(nr);
  mp.q.resize(nr);
  const double flip = sense == Sense::Maximize ? -1.0 : 1.0;
  for (int k = 0; k < nr; ++k) mp.q[k] = flip * cost[red.keep[k]];

  SolveReport report = detail::drive_solve(feas, red, mp, /*is_lp=*/true);
  if (report.status != SolveStatus::Optimal) return report;

  // Residual for the minimization form; the gradient is the (flipped) cost.
  std::vector<char> fixed(n, 0);
  for (int i : feas.fixed_zero) fixed[i] = 1;
  auto residual_at = [&](const Eigen::VectorXd& x) {
    Eigen::VectorXd nu = flip * cost;
    if (feas.n_rows() > 0) nu += feas.G.transpose() * report.duals;
    double res = 0.0;
    for (int i = 0; i < n; ++i) {
      if (fixed[i]) continue;
      if (feas.lower[i] > -kInf) {
        res = std::max(res, std::max(0.0, -nu[i]));
        res = std::max(res, std::abs(nu[i] * (x[i] - feas.lower[i])));
      } else {
        res = std::max(res, std::abs(nu[i]));
      }
    }
    for (int j = 0; j < feas.n_rows(); ++j) {
      res = std::max(res, std::max(0.0, -report.duals[j]));
      res = std::max(res, std::abs(report.duals[j] * (feas.G.row(j).dot(x) - feas.h[j])));
    }
    return res;
  };

  if (nr <= 32) {
    Eigen::VectorXd x_red(nr);
    for (int k = 0; k < nr; ++k) x_red[k] = report.solution[red.keep[k]];
    Eigen::VectorXd purified = x_red;
    if (detail::purify_vertex(red, mp.q, purified)) {
      Eigen::VectorXd candidate = Eigen::VectorXd::Zero(n);
      for (int k = 0; k < nr; ++k) candidate[red.keep[k]] = purified[k];
      const double viol =
          feas.n_rows() > 0 ? std::max(0.0, (feas.G * candidate - feas.h).maxCoeff()) : 0.0;
      // The original face duals must keep certifying the cleaned-up point.
      if (viol <= kFeasTol && residual_at(candidate) <= kKktTol) {
        report.solution = candidate;
        report.binding_rows.clear();
        for (int j = 0; j < feas.n_rows(); ++j) {
          if (std::abs(feas.G.row(j).dot(candidate) - feas.h[j]) <= kFeasTol)
            report.binding_rows.push_back(j);
        }
      }
    }
  }

  report.objective = cost.dot(report.solution);
  report.kkt_residual = residual_at(report.solution);
  return report;
}

}  // namespace gridcap
