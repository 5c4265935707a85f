#pragma once

// Independent reference implementations used to cross-check library results.
// Each oracle takes a different computational route than the code under test.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <vector>

namespace oracles {

/// CVaR via the defining one-dimensional minimization. The objective
/// zeta + (1/((1-alpha) Ns)) sum (v_s - zeta)_+ is convex piecewise linear
/// in zeta with breakpoints at the sample values, so scanning those values
/// finds the exact minimum. No sorting-based tail logic involved.
inline double cvar_breakpoint_min(const Eigen::VectorXd& values, double alpha) {
  const double k = (1.0 - alpha) * static_cast<double>(values.size());
  double best = std::numeric_limits<double>::infinity();
  for (int i = 0; i < values.size(); ++i) {
    const double zeta = values[i];
    double tail = 0.0;
    for (int s = 0; s < values.size(); ++s) tail += std::max(0.0, values[s] - zeta);
    best = std::min(best, zeta + tail / k);
  }
  return best;
}

/// Rowwise max and min of S * l over a box by enumerating all 2^N vertices.
/// Feasible only for small N; the extremes of a linear map over a box are
/// attained at vertices.
struct VertexExtremes {
  Eigen::VectorXd upper;
  Eigen::VectorXd lower;
};

inline VertexExtremes box_vertex_extremes(const Eigen::MatrixXd& S, const Eigen::VectorXd& lo,
                                          const Eigen::VectorXd& hi) {
  const int n = static_cast<int>(S.cols());
  VertexExtremes out;
  out.upper = Eigen::VectorXd::Constant(S.rows(), -std::numeric_limits<double>::infinity());
  out.lower = Eigen::VectorXd::Constant(S.rows(), std::numeric_limits<double>::infinity());
  for (unsigned mask = 0; mask < (1u << n); ++mask) {
    Eigen::VectorXd vertex(n);
    for (int i = 0; i < n; ++i) vertex[i] = (mask >> i) & 1u ? hi[i] : lo[i];
    const Eigen::VectorXd image = S * vertex;
    out.upper = out.upper.cwiseMax(image);
    out.lower = out.lower.cwiseMin(image);
  }
  return out;
}

/// Minimizes a separable quadratic over {G x <= h, lo <= x <= hi} by nested
/// grid search: scan a lattice, then shrink the window around the incumbent.
/// Convexity of the problem makes the local refinement globally valid as
/// long as the feasible set has interior around the optimum.
inline double qp_grid_refine(const Eigen::VectorXd& w, const Eigen::VectorXd& t,
                             const Eigen::MatrixXd& G, const Eigen::VectorXd& h,
                             Eigen::VectorXd lo, Eigen::VectorXd hi, double final_step = 1e-3) {
  const int n = static_cast<int>(w.size());
  const int divisions = 12;
  auto objective = [&](const Eigen::VectorXd& x) {
    return (w.array() * (t - x).array().square()).sum();
  };
  auto feasible = [&](const Eigen::VectorXd& x) {
    if (G.rows() > 0 && ((G * x - h).array() > 1e-9).any()) return false;
    return true;
  };

  double best_val = std::numeric_limits<double>::infinity();
  Eigen::VectorXd best_x;
  double step = 0.0;
  for (int level = 0; level < 12; ++level) {
    step = 0.0;
    for (int i = 0; i < n; ++i) step = std::max(step, (hi[i] - lo[i]) / divisions);
    std::vector<int> idx(n, 0);
    bool done = false;
    while (!done) {
      Eigen::VectorXd x(n);
      for (int i = 0; i < n; ++i)
        x[i] = lo[i] + (hi[i] - lo[i]) * idx[i] / static_cast<double>(divisions);
      if (feasible(x)) {
        const double val = objective(x);
        if (val < best_val) {
          best_val = val;
          best_x = x;
        }
      }
      int d = 0;
      while (d < n && ++idx[d] > divisions) idx[d++] = 0;
      done = d == n;
    }
    if (best_x.size() == 0) break;  // no feasible lattice point; widen nothing
    if (step <= final_step) break;
    for (int i = 0; i < n; ++i) {
      const double half = 2.0 * (hi[i] - lo[i]) / divisions;
      const double c = best_x[i];
      lo[i] = std::max(lo[i], c - half);
      hi[i] = std::min(hi[i], c + half);
    }
  }
  return best_val;
}

/// Optimal value of a linear cost over {G x <= h, x >= lower} by trying all
/// n-row bases: solve each square subsystem, keep feasible vertices, take
/// the best objective. Exponential, for cross-checks on tiny instances only.
inline double lp_vertex_enumerate(const Eigen::VectorXd& cost, const Eigen::MatrixXd& G,
                                  const Eigen::VectorXd& h, const Eigen::VectorXd& lower,
                                  bool maximize, bool* found = nullptr) {
  const int n = static_cast<int>(cost.size());
  // Stack user rows and bound rows into one system.
  std::vector<Eigen::VectorXd> rows;
  std::vector<double> rhs;
  for (int j = 0; j < G.rows(); ++j) {
    rows.push_back(G.row(j).transpose());
    rhs.push_back(h[j]);
  }
  for (int i = 0; i < n; ++i) {
    if (lower[i] > -1e300) {
      Eigen::VectorXd e = Eigen::VectorXd::Zero(n);
      e[i] = -1.0;
      rows.push_back(e);
      rhs.push_back(-lower[i]);
    }
  }
  const int m = static_cast<int>(rows.size());
  double best = maximize ? -std::numeric_limits<double>::infinity()
                         : std::numeric_limits<double>::infinity();
  bool any = false;

  std::vector<int> pick(n);
  std::function<void(int, int)> recurse = [&](int start, int depth) {
    if (depth == n) {
      Eigen::MatrixXd B(n, n);
      Eigen::VectorXd c(n);
      for (int k = 0; k < n; ++k) {
        B.row(k) = rows[pick[k]].transpose();
        c[k] = rhs[pick[k]];
      }
      Eigen::FullPivLU<Eigen::MatrixXd> lu(B);
      if (!lu.isInvertible()) return;
      const Eigen::VectorXd x = lu.solve(c);
      for (int j = 0; j < m; ++j)
        if (rows[j].dot(x) > rhs[j] + 1e-7) return;
      const double val = cost.dot(x);
      any = true;
      best = maximize ? std::max(best, val) : std::min(best, val);
      return;
    }
    for (int j = start; j <= m - (n - depth); ++j) {
      pick[depth] = j;
      recurse(j + 1, depth + 1);
    }
  };
  if (n <= m) recurse(0, 0);
  if (found) *found = any;
  return best;
}

}  // namespace oracles
