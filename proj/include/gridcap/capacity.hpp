#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "gridcap/common.hpp"
#include "gridcap/network.hpp"
#include "gridcap/qp.hpp"
#include "gridcap/risk.hpp"

namespace gridcap {

/// Optimal withdrawal allocation together with solver diagnostics. The
/// objective is the normalized unserved-demand ratio sum_I ((d_i - c_i)/d_i)^2
/// evaluated at c, also for solutions of the companion total-capacity LPs.
struct CapacitySolution {
  CapacityKind kind = CapacityKind::Firm;
  Eigen::VectorXd c;
  double objective = 0.0;
  double total = 0.0;
  std::optional<double> alpha;
  std::vector<std::string> binding;
  SolveReport report;
};

/// Firm model data: every constraint must hold for all loads in the box, so
/// the rows carry the rowwise worst case of S l over the box.
struct FirmModel {
  Eigen::MatrixXd S;
  BoxBounds box;
  Polyhedron feas;
};

/// Flexible model data: each original constraint row becomes one tail
/// variable zeta plus one excess variable z per scenario; variables are laid
/// out as [c, zeta..., z...] with z grouped by constraint row.
struct FlexModel {
  Eigen::MatrixXd S;
  double alpha = 0.0;
  int n_families = 0;
  int n_scenarios = 0;
  Polyhedron feas;
  std::vector<std::string> family_names;
};

namespace detail {

inline Eigen::MatrixXd resolve_shift_matrix(const ValidatedNetwork& vnet,
                                            const std::optional<Eigen::MatrixXd>& S) {
  if (!S) return build_path_matrix(vnet).entries;
  if (S->rows() != vnet.n_edges() || S->cols() != vnet.n_buses())
    throw Error(Errc::DimensionMismatch, "shift matrix must be (N-1) x N");
  return *S;
}

inline void check_box_for(const ValidatedNetwork& vnet, const BoxBounds& box) {
  check_box(box);
  if (box.lower.size() != vnet.n_buses())
    throw Error(Errc::DimensionMismatch, "box bounds must have one entry per bus");
}

inline std::vector<int> omitted_buses(const ValidatedNetwork& vnet) {
  std::vector<int> fixed;
  for (int i = 0; i < vnet.n_buses(); ++i)
    if (!vnet.has_request(i)) fixed.push_back(i);
  return fixed;
}

inline SeparableQuadratic unserved_ratio_objective(const ValidatedNetwork& vnet, int n_vars) {
  SeparableQuadratic obj;
  obj.weights = Eigen::VectorXd::Zero(n_vars);
  obj.targets = Eigen::VectorXd::Zero(n_vars);
  for (int i : vnet.request_set()) {
    const double d = vnet.net().demand[i];
    obj.weights[i] = 1.0 / (d * d);
    obj.targets[i] = d;
  }
  return obj;
}

inline Eigen::VectorXd request_indicator(const ValidatedNetwork& vnet, int n_vars) {
  Eigen::VectorXd cost = Eigen::VectorXd::Zero(n_vars);
  for (int i : vnet.request_set()) cost[i] = 1.0;
  return cost;
}

inline CapacitySolution finish_solution(const ValidatedNetwork& vnet, const Polyhedron& feas,
                                        CapacityKind kind, std::optional<double> alpha,
                                        SolveReport report, const char* what) {
  if (report.status == SolveStatus::Infeasible) {
    std::string rows;
    for (int j : report.violating_rows) {
      if (!rows.empty()) rows += ", ";
      rows += feas.row_name(j);
    }
    throw Error(Errc::InfeasibleInput,
                std::string(what) + " infeasible: background load alone violates " + rows);
  }
  if (report.status != SolveStatus::Optimal)
    throw Error(Errc::SolverFailure,
                std::string(what) + " solve ended with status " +
                    solve_status_name(report.status));

  CapacitySolution sol;
  sol.kind = kind;
  sol.alpha = alpha;
  sol.c = report.solution.head(vnet.n_buses());
  const SeparableQuadratic ratio = unserved_ratio_objective(vnet, vnet.n_buses());
  sol.objective = ratio.value(sol.c);
  sol.total = 0.0;
  for (int i : vnet.request_set()) sol.total += sol.c[i];
  for (int j : report.binding_rows) sol.binding.push_back(feas.row_name(j));
  sol.report = std::move(report);
  return sol;
}

}  // namespace detail

/// Assembles the deterministic polyhedron of the firm model: per-bus cap
/// rows c_i <= qbar_i - lbar_i and per-edge flow rows S c <= bbar - worst_up,
/// S c >= blow - worst_down, with c fixed to zero off the request set.
/// Rows whose right-hand side is infinite are dropped.
inline FirmModel build_firm_model(const ValidatedNetwork& vnet, const BoxBounds& box,
                                  const std::optional<Eigen::MatrixXd>& S = std::nullopt) {
  detail::check_box_for(vnet, box);
  FirmModel model;
  model.S = detail::resolve_shift_matrix(vnet, S);
  model.box = box;

  const int n = vnet.n_buses();
  const int m_edges = vnet.n_edges();
  const BoxExtremes ext = box_worst_case(model.S, box);
  const RadialNetwork& net = vnet.net();

  int rows = 0;
  for (int i = 0; i < n; ++i)
    if (net.withdrawal_cap[i] < kInf) ++rows;
  for (int e = 0; e < m_edges; ++e) {
    if (net.line_upper[e] < kInf) ++rows;
    if (net.line_lower[e] > -kInf) ++rows;
  }

  Polyhedron feas = Polyhedron::with_vars(n);
  feas.G = Eigen::MatrixXd::Zero(rows, n);
  feas.h = Eigen::VectorXd::Zero(rows);
  feas.row_names.assign(rows, "");
  feas.fixed_zero = detail::omitted_buses(vnet);

  int r = 0;
  for (int i = 0; i < n; ++i) {
    if (net.withdrawal_cap[i] >= kInf) continue;
    feas.G(r, i) = 1.0;
    feas.h[r] = net.withdrawal_cap[i] - box.upper[i];
    feas.row_names[r] = "cap bus " + std::to_string(i + 1);
    ++r;
  }
  for (int e = 0; e < m_edges; ++e) {
    if (net.line_upper[e] >= kInf) continue;
    feas.G.row(r) = model.S.row(e);
    feas.h[r] = net.line_upper[e] - ext.worst_up[e];
    feas.row_names[r] = "line " + std::to_string(e + 1) + " upper";
    ++r;
  }
  for (int e = 0; e < m_edges; ++e) {
    if (net.line_lower[e] <= -kInf) continue;
    feas.G.row(r) = -model.S.row(e);
    feas.h[r] = ext.worst_down[e] - net.line_lower[e];
    feas.row_names[r] = "line " + std::to_string(e + 1) + " lower";
    ++r;
  }
  model.feas = std::move(feas);
  return model;
}

/// Assembles the scenario tail reformulation. Each retained constraint row f
/// (per-bus cap, per-edge upper, per-edge lower) contributes a budget row
/// zeta_f + T sum_s z_fs <= 0 with T = 1/((1-alpha) Ns) and one excess row
/// a_f' c - zeta_f - z_fs <= r_fs per scenario, where r_fs is the row's
/// slack under scenario load s at c = 0.
inline FlexModel build_flex_model(const ValidatedNetwork& vnet, const ScenarioSet& scen,
                                  double alpha,
                                  const std::optional<Eigen::MatrixXd>& S = std::nullopt) {
  check_scenarios(scen);
  if (scen.n_buses() != vnet.n_buses())
    throw Error(Errc::DimensionMismatch, "scenario width must equal the bus count");
  const int ns = scen.count();
  const double k = detail::tail_mass(alpha, ns);  // throws on alpha outside [0,1)
  if (k < 1.0)
    throw Error(Errc::AlphaTooHigh, "(1 - alpha) * Ns = " + std::to_string(k) +
                                        " leaves less than one scenario in the tail");
  const double T = 1.0 / k;

  FlexModel model;
  model.S = detail::resolve_shift_matrix(vnet, S);
  model.alpha = alpha;
  model.n_scenarios = ns;

  const int n = vnet.n_buses();
  const RadialNetwork& net = vnet.net();
  const Eigen::MatrixXd flows = scen.samples * model.S.transpose();  // Ns x (N-1)

  struct Family {
    Eigen::VectorXd a;
    Eigen::VectorXd r;
    std::string name;
  };
  std::vector<Family> families;
  for (int i = 0; i < n; ++i) {
    if (net.withdrawal_cap[i] >= kInf) continue;
    Family f;
    f.a = Eigen::VectorXd::Zero(n);
    f.a[i] = 1.0;
    f.r = (net.withdrawal_cap[i] - scen.samples.col(i).array()).matrix();
    f.name = "cap bus " + std::to_string(i + 1);
    families.push_back(std::move(f));
  }
  for (int e = 0; e < vnet.n_edges(); ++e) {
    if (net.line_upper[e] >= kInf) continue;
    Family f;
    f.a = model.S.row(e).transpose();
    f.r = (net.line_upper[e] - flows.col(e).array()).matrix();
    f.name = "line " + std::to_string(e + 1) + " upper";
    families.push_back(std::move(f));
  }
  for (int e = 0; e < vnet.n_edges(); ++e) {
    if (net.line_lower[e] <= -kInf) continue;
    Family f;
    f.a = -model.S.row(e).transpose();
    f.r = (flows.col(e).array() - net.line_lower[e]).matrix();
    f.name = "line " + std::to_string(e + 1) + " lower";
    families.push_back(std::move(f));
  }

  const int nf = static_cast<int>(families.size());
  model.n_families = nf;
  const int n_vars = n + nf + nf * ns;
  const int n_rows = nf * (1 + ns);

  Polyhedron feas = Polyhedron::with_vars(n_vars);
  feas.G = Eigen::MatrixXd::Zero(n_rows, n_vars);
  feas.h = Eigen::VectorXd::Zero(n_rows);
  feas.row_names.assign(n_rows, "");
  feas.fixed_zero = detail::omitted_buses(vnet);
  for (int f = 0; f < nf; ++f) feas.lower[n + f] = -kInf;  // tail thresholds are free

  const auto zeta_col = [&](int f) { return n + f; };
  const auto z_col = [&](int f, int s) { return n + nf + f * ns + s; };

  int r = 0;
  for (int f = 0; f < nf; ++f) {
    feas.G(r, zeta_col(f)) = 1.0;
    for (int s = 0; s < ns; ++s) feas.G(r, z_col(f, s)) = T;
    feas.h[r] = 0.0;
    feas.row_names[r] = "cvar " + families[f].name;
    ++r;
  }
  for (int f = 0; f < nf; ++f) {
    for (int s = 0; s < ns; ++s) {
      feas.G.row(r).head(n) = families[f].a.transpose();
      feas.G(r, zeta_col(f)) = -1.0;
      feas.G(r, z_col(f, s)) = -1.0;
      feas.h[r] = families[f].r[s];
      feas.row_names[r] = families[f].name + " scenario " + std::to_string(s + 1);
      ++r;
    }
  }
  for (const Family& f : families) model.family_names.push_back(f.name);
  model.feas = std::move(feas);
  return model;
}

/// Firm capacity: minimize the unserved-demand ratio over the box-robust
/// polyhedron. Throws InfeasibleInput naming the violated rows when the
/// background load alone breaks a limit.
inline CapacitySolution solve_firm(const ValidatedNetwork& vnet, const BoxBounds& box,
                                   const std::optional<Eigen::MatrixXd>& S = std::nullopt) {
  FirmModel model = build_firm_model(vnet, box, S);
  SeparableQuadratic obj = detail::unserved_ratio_objective(vnet, vnet.n_buses());
  SolveReport rep = solve_separable_qp(obj, model.feas);
  return detail::finish_solution(vnet, model.feas, CapacityKind::Firm, std::nullopt,
                                 std::move(rep), "firm model");
}

/// Total firm capacity: maximize sum of c over the request set on the same
/// polyhedron as solve_firm.
inline CapacitySolution solve_firm_companion_lp(const ValidatedNetwork& vnet,
                                                const BoxBounds& box,
                                                const std::optional<Eigen::MatrixXd>& S =
                                                    std::nullopt) {
  FirmModel model = build_firm_model(vnet, box, S);
  SolveReport rep =
      solve_lp(detail::request_indicator(vnet, vnet.n_buses()), model.feas, Sense::Maximize);
  return detail::finish_solution(vnet, model.feas, CapacityKind::Firm, std::nullopt,
                                 std::move(rep), "firm companion");
}

/// Flexible capacity at confidence alpha over the given scenarios.
inline CapacitySolution solve_flex(const ValidatedNetwork& vnet, const ScenarioSet& scen,
                                   double alpha,
                                   const std::optional<Eigen::MatrixXd>& S = std::nullopt) {
  FlexModel model = build_flex_model(vnet, scen, alpha, S);
  SeparableQuadratic obj = detail::unserved_ratio_objective(vnet, model.feas.n_vars());
  SolveReport rep = solve_separable_qp(obj, model.feas);
  return detail::finish_solution(vnet, model.feas, CapacityKind::Flexible, alpha,
                                 std::move(rep), "flexible model");
}

/// Total flexible capacity via the same scenario polyhedron.
inline CapacitySolution solve_flex_companion_lp(const ValidatedNetwork& vnet,
                                                const ScenarioSet& scen, double alpha,
                                                const std::optional<Eigen::MatrixXd>& S =
                                                    std::nullopt) {
  FlexModel model = build_flex_model(vnet, scen, alpha, S);
  SolveReport rep =
      solve_lp(detail::request_indicator(vnet, model.feas.n_vars()), model.feas, Sense::Maximize);
  return detail::finish_solution(vnet, model.feas, CapacityKind::Flexible, alpha,
                                 std::move(rep), "flexible companion");
}

/// One tree-augmentation step on the deterministic polyhedron
/// {0 <= x <= withdrawal_cap on I, x = 0 off I, blow <= A x <= bbar}:
/// a request bus j whose root path has no tight upper edge and the largest
/// single-coordinate increase that keeps c + epsilon e_j feasible.
struct Augmentation {
  int bus = -1;
  double epsilon = 0.0;
};

inline Augmentation find_augmenting_index(const ValidatedNetwork& vnet, const Eigen::VectorXd& c,
                                          const Eigen::VectorXd& c_hat) {
  const int n = vnet.n_buses();
  if (c.size() != n || c_hat.size() != n)
    throw Error(Errc::DimensionMismatch, "capacity vectors must have one entry per bus");
  const RadialNetwork& net = vnet.net();
  const Eigen::MatrixXd A = build_path_matrix(vnet).entries;
  const double tol = 1e-9;

  auto check_feasible = [&](const Eigen::VectorXd& x, const char* label) {
    for (int i = 0; i < n; ++i) {
      if (x[i] < -tol)
        throw Error(Errc::InfeasibleInput, std::string(label) + " has a negative entry");
      if (!vnet.has_request(i) && std::abs(x[i]) > tol)
        throw Error(Errc::InfeasibleInput,
                    std::string(label) + " withdraws outside the request set");
      if (x[i] > net.withdrawal_cap[i] + tol)
        throw Error(Errc::InfeasibleInput, std::string(label) + " exceeds the cap at bus " +
                                               std::to_string(i + 1));
    }
    const Eigen::VectorXd flow = A * x;
    for (int e = 0; e < vnet.n_edges(); ++e) {
      if (flow[e] > net.line_upper[e] + tol || flow[e] < net.line_lower[e] - tol)
        throw Error(Errc::InfeasibleInput, std::string(label) + " violates line " +
                                               std::to_string(e + 1));
    }
  };
  check_feasible(c, "c");
  check_feasible(c_hat, "c_hat");

  double gain = 0.0;
  for (int i : vnet.request_set()) gain += c_hat[i] - c[i];
  if (gain <= tol)
    throw Error(Errc::NoAugmentation, "the candidate does not increase the total");

  const Eigen::VectorXd flow = A * c;
  for (int j : vnet.request_set()) {
    if (c_hat[j] - c[j] <= tol) continue;
    double path_slack = kInf;
    bool tight_edge = false;
    for (int cur = j; cur != 0; cur = vnet.parent(cur)) {
      const int e = vnet.edge_above(cur);
      const double slack = net.line_upper[e] - flow[e];
      if (slack <= tol) {
        tight_edge = true;
        break;
      }
      path_slack = std::min(path_slack, slack);
    }
    if (tight_edge) continue;
    Augmentation aug;
    aug.bus = j;
    aug.epsilon = std::min(c_hat[j] - c[j], path_slack);
    return aug;
  }
  throw Error(Errc::NoAugmentation, "every improvable bus sits behind a tight upper edge");
}

/// Agreement report between the ratio-minimizing solve and its companion
/// total-capacity LP on identical constraints. The alignment claim applies
/// only on scarce instances (every request strictly under-served).
struct TotalAlignment {
  double qp_total = 0.0;
  double lp_total = 0.0;
  double gap = 0.0;
  bool scarce = false;
  CapacitySolution qp;
  CapacitySolution lp;
};

namespace detail {

inline void require_path_shift(const ValidatedNetwork& vnet,
                               const std::optional<Eigen::MatrixXd>& S) {
  if (!S) return;
  const Eigen::MatrixXd A = build_path_matrix(vnet).entries;
  if (S->rows() != A.rows() || S->cols() != A.cols() || *S != A)
    throw Error(Errc::BadInput,
                "total-alignment checks apply to the path shift matrix only");
}

inline TotalAlignment alignment_from(const ValidatedNetwork& vnet, CapacitySolution qp,
                                     CapacitySolution lp) {
  TotalAlignment out;
  out.qp_total = qp.total;
  out.lp_total = lp.total;
  out.gap = std::abs(qp.total - lp.total);
  // A bus whose exact optimum sits at demand can land within ~1e-3*d of it
  // numerically (the ratio objective is flat at that vertex), so the
  // under-service margin is relative and an order wider.
  out.scarce = true;
  for (int i : vnet.request_set()) {
    const double d = vnet.net().demand[i];
    if (qp.c[i] >= d - 1e-2 * (1.0 + d)) out.scarce = false;
  }
  out.qp = std::move(qp);
  out.lp = std::move(lp);
  return out;
}

}  // namespace detail

inline TotalAlignment check_firm_total_alignment(const ValidatedNetwork& vnet,
                                                 const BoxBounds& box,
                                                 const std::optional<Eigen::MatrixXd>& S =
                                                     std::nullopt) {
  detail::require_path_shift(vnet, S);
  return detail::alignment_from(vnet, solve_firm(vnet, box, S),
                                solve_firm_companion_lp(vnet, box, S));
}

inline TotalAlignment check_flex_total_alignment(const ValidatedNetwork& vnet,
                                                 const ScenarioSet& scen, double alpha) {
  return detail::alignment_from(vnet, solve_flex(vnet, scen, alpha),
                                solve_flex_companion_lp(vnet, scen, alpha));
}

}  // namespace gridcap
