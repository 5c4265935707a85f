#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <utility>
#include <vector>

#include "gridcap/common.hpp"

namespace gridcap {

/// Rooted radial network description. Buses are 0-based internally with bus 0
/// as both the tree root and the DC slack; file loaders convert from the
/// 1-based external convention. Edges may arrive in either orientation;
/// validation reorients them parent -> child without changing their order.
struct RadialNetwork {
  int n_buses = 0;
  std::vector<std::array<int, 2>> edges;  // n_buses - 1 undirected pairs
  Eigen::VectorXd line_upper;             // per edge, MW
  Eigen::VectorXd line_lower;             // per edge, MW
  Eigen::VectorXd withdrawal_cap;         // per bus, MW, +inf = unconstrained
  Eigen::VectorXd demand;                 // per bus, MW, > 0 marks a request
};

/// Path matrix of a rooted tree: entries(e, n) = 1 iff edge e lies on the
/// unique path from the root to bus n. Rows follow the input edge order,
/// columns the bus order. For radial DC power flow this is also the shift
/// factor matrix, so flows are A * c.
struct PathMatrix {
  Eigen::MatrixXd entries;  // (n_buses - 1) x n_buses, 0/1
};

/// A RadialNetwork whose tree invariants have been checked, with cached
/// parent/depth arrays and the request set. Immutable after construction.
class ValidatedNetwork {
 public:
  const RadialNetwork& net() const { return net_; }
  int n_buses() const { return net_.n_buses; }
  int n_edges() const { return net_.n_buses - 1; }

  int parent(int bus) const { return parent_[bus]; }
  int depth(int bus) const { return depth_[bus]; }

  /// Downstream endpoint of edge e (the child side after rooting).
  int edge_child(int e) const { return edge_child_[e]; }

  /// Edge connecting `bus` to its parent; -1 for the root.
  int edge_above(int bus) const { return edge_above_[bus]; }

  /// Buses with a positive demand request (sorted, root excluded).
  const std::vector<int>& request_set() const { return request_; }

  bool has_request(int bus) const { return net_.demand[bus] > 0.0; }

  friend ValidatedNetwork validate_radial(RadialNetwork net);

 private:
  ValidatedNetwork() = default;

  RadialNetwork net_;
  std::vector<int> parent_;      // parent_[0] = -1
  std::vector<int> depth_;       // depth_[0] = 0
  std::vector<int> edge_child_;  // per edge, downstream endpoint
  std::vector<int> edge_above_;  // per bus, edge to parent (-1 at root)
  std::vector<int> request_;
};

namespace detail {

class UnionFind {
 public:
  explicit UnionFind(int n) : parent_(n) {
    for (int i = 0; i < n; ++i) parent_[i] = i;
  }
  int find(int a) {
    while (parent_[a] != a) a = parent_[a] = parent_[parent_[a]];
    return a;
  }
  bool unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a == b) return false;
    parent_[a] = b;
    return true;
  }

 private:
  std::vector<int> parent_;
};

}  // namespace detail

/// Checks the rooted-tree invariants and returns the network with parent,
/// depth and downstream bookkeeping cached. The input edge order is kept so
/// that path-matrix rows stay aligned with the caller's line data.
inline ValidatedNetwork validate_radial(RadialNetwork net) {
  const int n = net.n_buses;
  if (n < 1) throw Error(Errc::BadInput, "network needs at least one bus");

  auto expect_size = [&](const Eigen::VectorXd& v, int want, const char* name) {
    if (static_cast<int>(v.size()) != want)
      throw Error(Errc::DimensionMismatch,
                  std::string(name) + " has " + std::to_string(v.size()) + " entries, expected " +
                      std::to_string(want));
  };
  expect_size(net.demand, n, "demand");
  expect_size(net.withdrawal_cap, n, "withdrawal_cap");
  // Line data aligns with the edge list as given; topology checks below
  // diagnose a wrong edge count more precisely than a size mismatch would.
  expect_size(net.line_upper, static_cast<int>(net.edges.size()), "line_upper");
  expect_size(net.line_lower, static_cast<int>(net.edges.size()), "line_lower");

  for (const auto& e : net.edges) {
    if (e[0] < 0 || e[0] >= n || e[1] < 0 || e[1] >= n)
      throw Error(Errc::IndexOutOfRange, "edge endpoint outside 0.." + std::to_string(n - 1));
    if (e[0] == e[1]) throw Error(Errc::CycleDetected, "self-loop at bus " + std::to_string(e[0] + 1));
  }

  // Cycle before count: an extra edge always closes a cycle and that is the
  // more informative diagnosis.
  detail::UnionFind uf(n);
  for (const auto& e : net.edges) {
    if (!uf.unite(e[0], e[1]))
      throw Error(Errc::CycleDetected,
                  "edge (" + std::to_string(e[0] + 1) + "," + std::to_string(e[1] + 1) +
                      ") closes a cycle");
  }
  for (int i = 0; i < n; ++i) {
    if (uf.find(i) != uf.find(0))
      throw Error(Errc::Disconnected, "bus " + std::to_string(i + 1) + " is not reachable from the root");
  }
  if (static_cast<int>(net.edges.size()) != n - 1)
    throw Error(Errc::BadEdgeCount, "expected " + std::to_string(n - 1) + " edges, got " +
                                        std::to_string(net.edges.size()));

  if (net.demand[0] > 0.0) throw Error(Errc::RootHasRequest, "the root bus carries no request");
  for (int i = 0; i < n; ++i) {
    if (net.demand[i] < 0.0) throw Error(Errc::BadInput, "negative demand at bus " + std::to_string(i + 1));
    if (net.withdrawal_cap[i] < 0.0)
      throw Error(Errc::BadInput, "negative withdrawal cap at bus " + std::to_string(i + 1));
  }
  for (int e = 0; e < n - 1; ++e) {
    if (net.line_lower[e] > net.line_upper[e])
      throw Error(Errc::BadInput, "line " + std::to_string(e + 1) + " has lower limit above upper limit");
  }

  // Root the tree at bus 0 and reorient edges parent -> child in place.
  std::vector<std::vector<std::pair<int, int>>> adj(n);  // bus -> (neighbor, edge index)
  for (int e = 0; e < n - 1; ++e) {
    adj[net.edges[e][0]].emplace_back(net.edges[e][1], e);
    adj[net.edges[e][1]].emplace_back(net.edges[e][0], e);
  }

  ValidatedNetwork out;
  out.parent_.assign(n, -1);
  out.depth_.assign(n, 0);
  out.edge_above_.assign(n, -1);
  out.edge_child_.assign(std::max(0, n - 1), -1);

  std::vector<int> stack{0};
  std::vector<char> seen(n, 0);
  seen[0] = 1;
  while (!stack.empty()) {
    const int bus = stack.back();
    stack.pop_back();
    for (const auto& [next, e] : adj[bus]) {
      if (seen[next]) continue;
      seen[next] = 1;
      out.parent_[next] = bus;
      out.depth_[next] = out.depth_[bus] + 1;
      out.edge_above_[next] = e;
      out.edge_child_[e] = next;
      net.edges[e] = {bus, next};
      stack.push_back(next);
    }
  }

  for (int i = 1; i < n; ++i) {
    if (net.demand[i] > 0.0) out.request_.push_back(i);
  }

  out.net_ = std::move(net);
  return out;
}

/// Builds the 0/1 path matrix by walking each bus up to the root.
inline PathMatrix build_path_matrix(const ValidatedNetwork& vnet) {
  const int n = vnet.n_buses();
  PathMatrix pm;
  pm.entries = Eigen::MatrixXd::Zero(std::max(0, n - 1), n);
  for (int bus = 1; bus < n; ++bus) {
    for (int cur = bus; cur != 0; cur = vnet.parent(cur)) {
      pm.entries(vnet.edge_above(cur), bus) = 1.0;
    }
  }
  return pm;
}

/// Buses strictly below edge e, i.e. those whose root path uses e. Sorted.
inline std::vector<int> downstream_set(const ValidatedNetwork& vnet, int edge) {
  if (edge < 0 || edge >= vnet.n_edges())
    throw Error(Errc::IndexOutOfRange, "edge index " + std::to_string(edge));
  // Child lists are not cached; a scan over parents is enough at this scale.
  const int n = vnet.n_buses();
  std::vector<int> result;
  std::vector<char> below(n, 0);
  below[vnet.edge_child(edge)] = 1;
  result.push_back(vnet.edge_child(edge));
  // Parents are always discovered before children in bus order only if the
  // labels happen to be topological, so iterate by increasing depth instead.
  std::vector<int> order(n);
  for (int i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](int a, int b) { return vnet.depth(a) < vnet.depth(b); });
  for (int bus : order) {
    if (bus == 0 || below[bus]) continue;
    if (below[vnet.parent(bus)]) {
      below[bus] = 1;
      result.push_back(bus);
    }
  }
  std::sort(result.begin(), result.end());
  return result;
}

}  // namespace gridcap
