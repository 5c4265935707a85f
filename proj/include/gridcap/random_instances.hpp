#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <vector>

#include "gridcap/common.hpp"
#include "gridcap/network.hpp"
#include "gridcap/risk.hpp"

namespace gridcap {

/// Deterministic instance generators shared by the property sweeps and the
/// CLI verification drivers. Every instance is feasible by construction:
/// line limits are placed relative to the worst-case box flows, so the
/// zero-withdrawal point always satisfies the assembled models.

struct RandomCapacityInstance {
  ValidatedNetwork vnet;
  BoxBounds box;
};

namespace detail {

/// Random rooted tree on [2, max_buses] buses. Each non-root bus attaches to
/// a uniformly chosen earlier bus; stored edge orientation is randomized so
/// validation has to reorient. Demand lands on each non-root bus with
/// probability 0.7 (at least one request is forced).
inline RadialNetwork random_tree_skeleton(Rng& rng, int max_buses) {
  RadialNetwork net;
  net.n_buses = 2 + rng.uniform_int(std::max(1, max_buses - 1));
  const int n = net.n_buses;
  for (int child = 1; child < n; ++child) {
    const int parent = rng.uniform_int(child);
    if (rng.bernoulli(0.5))
      net.edges.push_back({parent, child});
    else
      net.edges.push_back({child, parent});
  }
  net.demand = Eigen::VectorXd::Zero(n);
  bool any = false;
  for (int i = 1; i < n; ++i) {
    if (rng.bernoulli(0.7)) {
      net.demand[i] = rng.uniform(5.0, 50.0);
      any = true;
    }
  }
  if (!any) net.demand[n - 1] = rng.uniform(5.0, 50.0);
  net.withdrawal_cap = Eigen::VectorXd::Constant(n, kInf);
  net.line_upper = Eigen::VectorXd::Zero(n - 1);
  net.line_lower = Eigen::VectorXd::Zero(n - 1);
  return net;
}

/// Request demand strictly below each edge; the natural scale for line
/// limits that bind without cutting the instance off entirely.
inline Eigen::VectorXd downstream_request_demand(const ValidatedNetwork& vnet) {
  Eigen::VectorXd total = Eigen::VectorXd::Zero(vnet.n_edges());
  for (int e = 0; e < vnet.n_edges(); ++e) {
    for (int bus : downstream_set(vnet, e)) total[e] += vnet.net().demand[bus];
  }
  return total;
}

}  // namespace detail

/// Random scarce-leaning firm instance: box loads on non-root buses, caps
/// finite with probability 0.7, upper line limits tighter than the
/// downstream request demand, lower limits slack (occasionally near the
/// reverse-flow worst case).
inline RandomCapacityInstance random_capacity_instance(Rng& rng, int max_buses) {
  RadialNetwork net = detail::random_tree_skeleton(rng, max_buses);
  const int n = net.n_buses;

  BoxBounds box;
  box.upper = Eigen::VectorXd::Zero(n);
  box.lower = Eigen::VectorXd::Zero(n);
  for (int i = 1; i < n; ++i) {
    box.upper[i] = rng.uniform(0.0, 8.0);
    box.lower[i] = box.upper[i] - rng.uniform(0.0, 6.0);
  }

  for (int i = 1; i < n; ++i) {
    if (rng.bernoulli(0.3)) continue;
    const double room = rng.uniform(0.3, 0.9) * std::max(net.demand[i], 5.0);
    net.withdrawal_cap[i] = box.upper[i] + room;
  }

  ValidatedNetwork shape = validate_radial(net);
  const Eigen::MatrixXd A = build_path_matrix(shape).entries;
  const Eigen::VectorXd wanted = detail::downstream_request_demand(shape);
  const Eigen::VectorXd flow_up = A * box.upper;
  const Eigen::VectorXd flow_down = A * box.lower;

  RadialNetwork withLimits = shape.net();
  for (int e = 0; e < n - 1; ++e) {
    withLimits.line_upper[e] = flow_up[e] + rng.uniform(0.15, 0.85) * std::max(wanted[e], 1.0);
    const double margin = rng.bernoulli(0.2) ? rng.uniform(0.05, 0.5) : rng.uniform(5.0, 30.0);
    withLimits.line_lower[e] = flow_down[e] - margin;
  }

  RandomCapacityInstance inst{validate_radial(std::move(withLimits)), std::move(box)};
  return inst;
}

/// Scenario rows drawn uniformly inside the box, so the empirical hull is
/// contained in it and flexible capacity dominates firm capacity.
inline ScenarioSet random_scenarios_in_box(Rng& rng, const BoxBounds& box, int n_samples) {
  ScenarioSet scen;
  scen.samples = Eigen::MatrixXd::Zero(n_samples, box.lower.size());
  for (int s = 0; s < n_samples; ++s)
    for (int i = 0; i < box.lower.size(); ++i)
      scen.samples(s, i) = rng.uniform(box.lower[i], box.upper[i]);
  return scen;
}

/// Network for augmentation experiments on the load-free tree polyhedron
/// {0 <= x <= cap, blow <= A x <= bbar}: upper limits below the downstream
/// request demand, lower limits negative so x = 0 is always inside.
inline ValidatedNetwork random_augmentation_network(Rng& rng, int max_buses) {
  RadialNetwork net = detail::random_tree_skeleton(rng, max_buses);
  for (int i = 1; i < net.n_buses; ++i) {
    if (net.demand[i] > 0.0 && rng.bernoulli(0.5))
      net.withdrawal_cap[i] = rng.uniform(0.3, 1.0) * net.demand[i];
  }
  ValidatedNetwork shape = validate_radial(std::move(net));
  const Eigen::VectorXd wanted = detail::downstream_request_demand(shape);
  RadialNetwork withLimits = shape.net();
  for (int e = 0; e < shape.n_edges(); ++e) {
    withLimits.line_upper[e] = rng.uniform(0.2, 0.9) * std::max(wanted[e], 1.0);
    withLimits.line_lower[e] = -rng.uniform(5.0, 20.0);
  }
  return validate_radial(std::move(withLimits));
}

/// Feasible point of the tree polyhedron grown by random single-coordinate
/// pushes: each pass picks a request bus and consumes a random fraction of
/// the remaining cap and path slack, so feasibility never needs a solve.
/// More passes push the point closer to the efficient frontier.
inline Eigen::VectorXd random_tree_point(Rng& rng, const ValidatedNetwork& vnet, int passes) {
  const RadialNetwork& net = vnet.net();
  Eigen::VectorXd x = Eigen::VectorXd::Zero(vnet.n_buses());
  Eigen::VectorXd flow = Eigen::VectorXd::Zero(vnet.n_edges());
  const std::vector<int>& requests = vnet.request_set();
  for (int t = 0; t < passes; ++t) {
    const int j = requests[rng.uniform_int(static_cast<int>(requests.size()))];
    double room = net.withdrawal_cap[j] - x[j];
    for (int cur = j; cur != 0; cur = vnet.parent(cur)) {
      const int e = vnet.edge_above(cur);
      room = std::min(room, net.line_upper[e] - flow[e]);
    }
    if (room <= 1e-9) continue;
    const double step = room * rng.uniform(0.1, 0.95);
    x[j] += step;
    for (int cur = j; cur != 0; cur = vnet.parent(cur)) flow[vnet.edge_above(cur)] += step;
  }
  return x;
}

}  // namespace gridcap
