#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <string>
#include <vector>

#include "gridcap/auction.hpp"
#include "gridcap/capacity.hpp"
#include "gridcap/common.hpp"
#include "gridcap/random_instances.hpp"
#include "gridcap/worked_examples.hpp"

namespace gridcap {

/// Outcome of one randomized or golden-data verification sweep. A sweep
/// passes only when every exercised case met its bound and the sweep reached
/// its target case count.
struct SuiteReport {
  std::string suite;
  bool passed = false;
  int cases_checked = 0;
  double worst_gap = 0.0;
  std::vector<std::string> failures;
};

namespace detail {

inline std::string short_num(double x) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4g", x);
  return buf;
}

inline void finish_report(SuiteReport& report, int target) {
  if (report.cases_checked < target)
    report.failures.push_back("only " + std::to_string(report.cases_checked) + " of " +
                              std::to_string(target) + " cases could be generated");
  report.passed = report.failures.empty();
}

/// Tail-threshold LP: minimize zeta + sum z_s / ((1-alpha) Ns) with
/// z_s >= v_s - zeta, z >= 0. Its optimum is the empirical tail average, so
/// it serves as an independent oracle for the closed form. zeta is bounded
/// below by min(v) - 1, which never cuts off an optimal threshold but keeps
/// the alpha = 0 face bounded.
inline double cvar_tail_lp(const Eigen::VectorXd& values, double alpha) {
  const int ns = static_cast<int>(values.size());
  const double weight = 1.0 / ((1.0 - alpha) * ns);
  Polyhedron feas = Polyhedron::with_vars(1 + ns);
  feas.lower.setConstant(0.0);
  feas.lower[0] = values.minCoeff() - 1.0;
  for (int s = 0; s < ns; ++s) {
    Eigen::VectorXd row = Eigen::VectorXd::Zero(1 + ns);
    row[0] = -1.0;
    row[1 + s] = -1.0;
    feas.append_row(row, -values[s], "excess " + std::to_string(s + 1));
  }
  Eigen::VectorXd cost = Eigen::VectorXd::Constant(1 + ns, weight);
  cost[0] = 1.0;
  const SolveReport rep = solve_lp(cost, feas, Sense::Minimize);
  if (rep.status != SolveStatus::Optimal)
    throw Error(Errc::SolverFailure, "tail-threshold oracle did not certify");
  return rep.objective;
}

}  // namespace detail

/// Randomized agreement sweep between the firm ratio-minimizing solve and its
/// companion total-capacity LP on scarce instances.
inline SuiteReport verify_firm_alignment(int trials, std::uint64_t seed) {
  SuiteReport report;
  report.suite = "theorem1";
  Rng rng(seed);
  const int max_attempts = trials * 12;
  for (int attempt = 0; attempt < max_attempts && report.cases_checked < trials; ++attempt) {
    const RandomCapacityInstance inst = random_capacity_instance(rng, 10);
    TotalAlignment align;
    try {
      align = check_firm_total_alignment(inst.vnet, inst.box);
    } catch (const Error& err) {
      report.failures.push_back("attempt " + std::to_string(attempt) + ": " + err.what());
      continue;
    }
    if (!align.scarce) continue;
    ++report.cases_checked;
    report.worst_gap = std::max(report.worst_gap, align.gap);
    if (align.gap > 1e-5)
      report.failures.push_back("attempt " + std::to_string(attempt) + ": firm totals differ by " +
                                detail::short_num(align.gap));
  }
  detail::finish_report(report, trials);
  return report;
}

/// Randomized agreement sweep for the scenario-tail solves, plus the check
/// that accepting more risk never shrinks the total.
inline SuiteReport verify_flex_alignment(int trials, std::uint64_t seed) {
  SuiteReport report;
  report.suite = "prop2";
  Rng rng(seed);
  const int max_attempts = trials * 12;
  for (int attempt = 0; attempt < max_attempts && report.cases_checked < trials; ++attempt) {
    const RandomCapacityInstance inst = random_capacity_instance(rng, 8);
    // At least ten samples keep a nonempty tail at the strictest level 0.9.
    const ScenarioSet scen = random_scenarios_in_box(rng, inst.box, 10 + rng.uniform_int(31));
    bool scarce_seen = false;
    double prev_total = -kInf;
    try {
      for (double alpha : {0.9, 0.5, 0.0}) {
        const TotalAlignment align = check_flex_total_alignment(inst.vnet, scen, alpha);
        if (align.qp_total < prev_total - 1e-6)
          report.failures.push_back("attempt " + std::to_string(attempt) +
                                    ": total shrank when more risk was accepted");
        prev_total = align.qp_total;
        if (!align.scarce) continue;
        scarce_seen = true;
        report.worst_gap = std::max(report.worst_gap, align.gap);
        if (align.gap > 1e-5)
          report.failures.push_back("attempt " + std::to_string(attempt) + " alpha " +
                                    detail::short_num(alpha) + ": totals differ by " +
                                    detail::short_num(align.gap));
      }
    } catch (const Error& err) {
      report.failures.push_back("attempt " + std::to_string(attempt) + ": " + err.what());
      continue;
    }
    if (scarce_seen) ++report.cases_checked;
  }
  detail::finish_report(report, trials);
  return report;
}

/// Every firm solution must satisfy the line limits at all 2^N corners of the
/// load box, and reported binding rows must be tight at their worst corner.
inline SuiteReport verify_box_vertices(int trials, std::uint64_t seed) {
  SuiteReport report;
  report.suite = "box-vertices";
  Rng rng(seed);
  for (int trial = 0; trial < trials; ++trial) {
    const RandomCapacityInstance inst = random_capacity_instance(rng, 8);
    const ValidatedNetwork& vnet = inst.vnet;
    const RadialNetwork& net = vnet.net();
    const int n = vnet.n_buses();
    const Eigen::MatrixXd S = build_path_matrix(vnet).entries;
    CapacitySolution sol;
    try {
      sol = solve_firm(vnet, inst.box);
    } catch (const Error& err) {
      report.failures.push_back("trial " + std::to_string(trial) + ": " + err.what());
      continue;
    }

    double worst = 0.0;
    for (std::uint32_t corner = 0; corner < (std::uint32_t{1} << n); ++corner) {
      Eigen::VectorXd load(n);
      for (int i = 0; i < n; ++i)
        load[i] = ((corner >> i) & 1u) ? inst.box.upper[i] : inst.box.lower[i];
      const Eigen::VectorXd flow = S * (sol.c + load);
      for (int e = 0; e < vnet.n_edges(); ++e) {
        worst = std::max(worst, flow[e] - net.line_upper[e]);
        worst = std::max(worst, net.line_lower[e] - flow[e]);
      }
      for (int i = 0; i < n; ++i)
        if (std::isfinite(net.withdrawal_cap[i]))
          worst = std::max(worst, sol.c[i] + load[i] - net.withdrawal_cap[i]);
    }
    report.worst_gap = std::max(report.worst_gap, worst);
    if (worst > 1e-7)
      report.failures.push_back("trial " + std::to_string(trial) + ": corner violation " +
                                detail::short_num(worst));

    // Binding reformulated rows must be tight at their own worst corner.
    const Eigen::VectorXd up_flow = S * (sol.c + inst.box.upper);
    const Eigen::VectorXd down_flow = S * (sol.c + inst.box.lower);
    for (const std::string& name : sol.binding) {
      double residual = 0.0;
      if (name.rfind("line ", 0) == 0) {
        const int e = std::stoi(name.substr(5)) - 1;
        residual = name.find("upper") != std::string::npos
                       ? std::abs(up_flow[e] - net.line_upper[e])
                       : std::abs(down_flow[e] - net.line_lower[e]);
      } else if (name.rfind("cap bus ", 0) == 0) {
        const int i = std::stoi(name.substr(8)) - 1;
        residual = std::abs(sol.c[i] + inst.box.upper[i] - net.withdrawal_cap[i]);
      }
      if (residual > 1e-5)
        report.failures.push_back("trial " + std::to_string(trial) + ": binding row " + name +
                                  " off by " + detail::short_num(residual));
    }
    ++report.cases_checked;
  }
  detail::finish_report(report, trials);
  return report;
}

/// Closed-form tail averages against the tail-threshold LP, plus the
/// shift-equivariance identity.
inline SuiteReport verify_cvar_oracle(int pairs, std::uint64_t seed) {
  SuiteReport report;
  report.suite = "cvar-oracle";
  Rng rng(seed);
  for (int trial = 0; trial < pairs; ++trial) {
    const int ns = 2 + rng.uniform_int(49);
    Eigen::VectorXd values(ns);
    for (int s = 0; s < ns; ++s) values[s] = rng.uniform(-5.0, 5.0);
    double alpha = 0.0;
    if (trial % 3 == 1) alpha = 1.0 - 1.0 / ns;
    if (trial % 3 == 2) alpha = rng.uniform(0.0, 1.0 - 1.0 / ns);

    try {
      const double gap = std::abs(detail::cvar_tail_lp(values, alpha) -
                                  empirical_cvar(values, alpha));
      report.worst_gap = std::max(report.worst_gap, gap);
      if (gap > 1e-8)
        report.failures.push_back("trial " + std::to_string(trial) + ": oracle gap " +
                                  detail::short_num(gap));
      if (!cvar_translation_check(values, rng.uniform(-4.0, 4.0), alpha))
        report.failures.push_back("trial " + std::to_string(trial) + ": shift equivariance broke");
    } catch (const Error& err) {
      report.failures.push_back("trial " + std::to_string(trial) + ": " + err.what());
      continue;
    }
    ++report.cases_checked;
  }
  detail::finish_report(report, pairs);
  return report;
}

/// Feasible pairs with a larger-total candidate must always yield a feasible
/// single-coordinate step; a refusal is a soundness failure.
inline SuiteReport verify_augmentation(int pairs, std::uint64_t seed) {
  SuiteReport report;
  report.suite = "augmentation";
  Rng rng(seed);
  const int max_attempts = pairs * 10;
  for (int attempt = 0; attempt < max_attempts && report.cases_checked < pairs; ++attempt) {
    const ValidatedNetwork vnet = random_augmentation_network(rng, 10);
    const RadialNetwork& net = vnet.net();
    Eigen::VectorXd c = random_tree_point(rng, vnet, vnet.n_buses());
    Eigen::VectorXd c_hat = random_tree_point(rng, vnet, 3 * vnet.n_buses());
    double total_c = 0.0, total_hat = 0.0;
    for (int i : vnet.request_set()) {
      total_c += c[i];
      total_hat += c_hat[i];
    }
    if (total_hat < total_c) {
      std::swap(c, c_hat);
      std::swap(total_c, total_hat);
    }
    if (total_hat - total_c <= 1e-6) continue;

    try {
      const Augmentation aug = find_augmenting_index(vnet, c, c_hat);
      Eigen::VectorXd stepped = c;
      stepped[aug.bus] += aug.epsilon;
      double worst = -aug.epsilon;  // the step itself must be positive
      const Eigen::VectorXd flow = build_path_matrix(vnet).entries * stepped;
      for (int e = 0; e < vnet.n_edges(); ++e) {
        worst = std::max(worst, flow[e] - net.line_upper[e]);
        worst = std::max(worst, net.line_lower[e] - flow[e]);
      }
      for (int i = 0; i < vnet.n_buses(); ++i) {
        worst = std::max(worst, stepped[i] - net.withdrawal_cap[i]);
        worst = std::max(worst, -stepped[i]);
      }
      report.worst_gap = std::max(report.worst_gap, worst);
      if (worst > 1e-7)
        report.failures.push_back("attempt " + std::to_string(attempt) + ": step violates by " +
                                  detail::short_num(worst));
    } catch (const Error& err) {
      report.failures.push_back("attempt " + std::to_string(attempt) + ": " + err.what());
      continue;
    }
    ++report.cases_checked;
  }
  detail::finish_report(report, pairs);
  return report;
}

/// Random auctions must clear into a modified-valuation equilibrium with
/// welfare within one increment per item; a fixed instance swept over
/// shrinking increments must track the tightening bound.
inline SuiteReport verify_auction_equilibrium(int runs, std::uint64_t seed) {
  SuiteReport report;
  report.suite = "auction-equilibrium";
  Rng rng(seed);
  for (int run = 0; run < runs; ++run) {
    AuctionConfig config;
    config.epsilon = rng.bernoulli(0.5) ? 0.5 : 1.0;
    const int k = 1 + rng.uniform_int(6);
    const int m = 1 + rng.uniform_int(4);
    for (int j = 0; j < k; ++j) config.items.push_back({10.0, 0.0, j, CapacityKind::Firm});
    for (int b = 0; b < m; ++b) {
      if (rng.bernoulli(0.5)) {
        Eigen::VectorXd v(k);
        for (int j = 0; j < k; ++j) v[j] = rng.uniform(0.0, 10.0);
        config.bidders.push_back(AdditiveValuation{v});
      } else {
        std::vector<double> inc(static_cast<size_t>(k));
        for (double& d : inc) d = rng.uniform(0.0, 5.0);
        std::sort(inc.begin(), inc.end(), std::greater<>());
        std::vector<double> f(static_cast<size_t>(k) + 1, 0.0);
        for (int t = 1; t <= k; ++t) f[t] = f[t - 1] + inc[t - 1];
        config.bidders.push_back(SymmetricConcaveValuation{std::move(f)});
      }
    }

    try {
      const AuctionOutcome out = run_saa(config);
      const CEReport ce = verify_ce(config.items, config.bidders, out.final_prices,
                                    out.allocation, config.epsilon);
      if (!ce.holds)
        report.failures.push_back("run " + std::to_string(run) + ": " +
                                  (ce.violations.empty() ? "equilibrium failed"
                                                         : ce.violations.front()));
      const EfficiencyReport eff = efficiency_gap(config.items, config.bidders, out.allocation);
      report.worst_gap = std::max(report.worst_gap, eff.gap - config.epsilon * k);
      if (eff.gap > config.epsilon * k + 1e-9)
        report.failures.push_back("run " + std::to_string(run) + ": welfare gap " +
                                  detail::short_num(eff.gap) + " exceeds " +
                                  detail::short_num(config.epsilon * k));
    } catch (const Error& err) {
      report.failures.push_back("run " + std::to_string(run) + ": " + err.what());
      continue;
    }
    ++report.cases_checked;
  }

  // Shrinking increments on a fixed instance tighten the welfare bound.
  const WorkedAuction fixed = additive_pair_example();
  for (double eps : {4.0, 2.0, 1.0, 0.5, 0.25}) {
    AuctionConfig config = fixed.config;
    config.epsilon = eps;
    try {
      const AuctionOutcome out = run_saa(config);
      const EfficiencyReport eff = efficiency_gap(config.items, config.bidders, out.allocation);
      if (eff.gap > eps * static_cast<double>(config.items.size()) + 1e-9)
        report.failures.push_back("increment " + detail::short_num(eps) + ": welfare gap " +
                                  detail::short_num(eff.gap) + " exceeds its bound");
    } catch (const Error& err) {
      report.failures.push_back("increment " + detail::short_num(eps) + ": " + err.what());
    }
  }
  detail::finish_report(report, runs);
  return report;
}

/// Both valuation classes must pass randomized substitutes trials; the
/// two-item complements table must fail with a recorded witness.
inline SuiteReport verify_gross_substitutes(int trials_per_class, std::uint64_t seed) {
  SuiteReport report;
  report.suite = "gs";
  Rng rng(seed);

  std::vector<std::pair<std::string, Valuation>> passing;
  const WorkedAuction additive = additive_pair_example();
  const WorkedAuction sized = size_table_pair_example();
  passing.emplace_back("per-item bidder 1", additive.config.bidders[0]);
  passing.emplace_back("per-item bidder 2", additive.config.bidders[1]);
  passing.emplace_back("size-table bidder 1", sized.config.bidders[0]);
  passing.emplace_back("size-table bidder 2", sized.config.bidders[1]);
  for (int extra = 0; extra < 4; ++extra) {
    const int k = 2 + rng.uniform_int(5);
    Eigen::VectorXd v(k);
    for (int j = 0; j < k; ++j) v[j] = rng.uniform(0.0, 10.0);
    passing.emplace_back("random per-item " + std::to_string(extra), AdditiveValuation{v});
    std::vector<double> inc(static_cast<size_t>(k));
    for (double& d : inc) d = rng.uniform(0.0, 8.0);
    std::sort(inc.begin(), inc.end(), std::greater<>());
    std::vector<double> f(static_cast<size_t>(k) + 1, 0.0);
    for (int t = 1; t <= k; ++t) f[t] = f[t - 1] + inc[t - 1];
    passing.emplace_back("random size-table " + std::to_string(extra),
                         SymmetricConcaveValuation{std::move(f)});
  }

  for (const auto& [label, val] : passing) {
    const GsReport gs = check_gross_substitutes(val, trials_per_class, 12.0, rng.next_u64());
    report.cases_checked += trials_per_class;
    if (!gs.passes)
      report.failures.push_back(label + " violated substitutes at prices " +
                                detail::short_num(gs.counterexample->prices.sum()));
  }

  const Valuation complements = TableValuation{2, {0.0, 0.0, 0.0, 10.0}};
  const GsReport gs = check_gross_substitutes(complements, trials_per_class, 12.0,
                                              rng.next_u64());
  report.cases_checked += trials_per_class;
  if (gs.passes || !gs.counterexample)
    report.failures.push_back("complements table was not caught");
  report.passed = report.failures.empty();
  return report;
}

/// Replays every worksheet row of the two fixed auction instances and checks
/// the quoted equilibrium facts: row-exact surpluses, equilibrium at the
/// quoted prices, per-bidder maxima, and the welfare optimum.
inline SuiteReport verify_surplus_worksheets() {
  SuiteReport report;
  report.suite = "appendixF";
  for (const WorkedAuction& ex : {additive_pair_example(), size_table_pair_example()}) {
    const double eps = ex.config.epsilon;
    for (size_t b = 0; b < ex.worksheets.size(); ++b) {
      for (const SurplusRow& row : ex.worksheets[b]) {
        const double value = eval_valuation(ex.config.bidders[b], row.bundle);
        const double penalty = eps * bundle_size(row.bundle & ~ex.allocation[b]);
        double price = 0.0;
        for (int j = 0; j < ex.clearing_prices.size(); ++j)
          if ((row.bundle >> j) & 1u) price += ex.clearing_prices[j];
        const double surplus = value - penalty - price;
        ++report.cases_checked;
        if (value != row.value || penalty != row.penalty || price != row.bundle_price ||
            surplus != row.surplus)
          report.failures.push_back("bidder " + std::to_string(b + 1) + " bundle " +
                                    std::to_string(row.bundle) + " recomputes to " +
                                    detail::short_num(surplus) + ", worksheet says " +
                                    detail::short_num(row.surplus));
      }
    }

    const CEReport ce =
        verify_ce(ex.config.items, ex.config.bidders, ex.clearing_prices, ex.allocation, eps);
    if (!ce.holds)
      report.failures.push_back("quoted prices do not support the quoted allocation");
    for (size_t b = 0; b < ex.max_modified_surplus.size(); ++b)
      if (ce.per_bidder_max_surplus[b] != ex.max_modified_surplus[b])
        report.failures.push_back("bidder " + std::to_string(b + 1) + " max surplus " +
                                  detail::short_num(ce.per_bidder_max_surplus[b]) +
                                  " differs from the quoted " +
                                  detail::short_num(ex.max_modified_surplus[b]));

    const EfficiencyReport eff =
        efficiency_gap(ex.config.items, ex.config.bidders, ex.allocation);
    if (eff.optimal_welfare != ex.optimal_welfare || eff.gap != 0.0)
      report.failures.push_back("quoted allocation is not welfare optimal");
  }
  report.passed = report.failures.empty();
  return report;
}

/// The hand-solved two-bus feeder: firm numbers and the flexible totals for
/// each tail level, including a strictly positive capacity unlock.
inline SuiteReport verify_two_bus_numbers() {
  SuiteReport report;
  report.suite = "two-bus";
  const WorkedCapacity ex = two_bus_example();
  try {
    const ValidatedNetwork vnet = validate_radial(ex.network);
    const CapacitySolution firm = solve_firm(vnet, ex.box);
    auto expect = [&](double got, double want, const std::string& label) {
      ++report.cases_checked;
      report.worst_gap = std::max(report.worst_gap, std::abs(got - want));
      if (std::abs(got - want) > 1e-6)
        report.failures.push_back(label + " came out " + detail::short_num(got) +
                                  ", expected " + detail::short_num(want));
    };
    expect(firm.total, ex.firm_total, "firm total");
    expect(firm.objective, ex.firm_objective, "firm objective");
    for (const auto& [alpha, want] : ex.flex_totals) {
      const CapacitySolution flex = solve_flex(vnet, ex.scenarios, alpha);
      expect(flex.total, want, "flexible total at alpha " + detail::short_num(alpha));
      if (alpha < 0.75 && flex.c[1] - firm.c[1] <= 0.0)
        report.failures.push_back("no capacity unlock at alpha " + detail::short_num(alpha));
    }
  } catch (const Error& err) {
    report.failures.push_back(err.what());
  }
  report.passed = report.failures.empty();
  return report;
}

/// Dispatch for the named verification suites. Trials <= 0 selects each
/// suite's default budget.
inline SuiteReport run_suite(const std::string& name, int trials, std::uint64_t seed) {
  if (name == "theorem1") return verify_firm_alignment(trials > 0 ? trials : 200, seed);
  if (name == "prop2") return verify_flex_alignment(trials > 0 ? trials : 100, seed);
  if (name == "gs") return verify_gross_substitutes(trials > 0 ? trials : 500, seed);
  if (name == "appendixF") return verify_surplus_worksheets();
  throw Error(Errc::BadInput, "unknown verification suite: " + name);
}

}  // namespace gridcap
