#pragma once

#include <Eigen/Dense>
#include <initializer_list>
#include <utility>
#include <vector>

#include "gridcap/auction.hpp"
#include "gridcap/network.hpp"
#include "gridcap/risk.hpp"

namespace gridcap {

/// Two-bus feeder whose firm and flexible capacities follow by hand: the line
/// carries everything bus 2 withdraws on top of its background load, so the
/// firm room is 8 - 3 = 5 and each tail average of the load scenarios shifts
/// the flexible room accordingly.
struct WorkedCapacity {
  RadialNetwork network;
  BoxBounds box;
  ScenarioSet scenarios;
  double firm_total = 0.0;
  double firm_objective = 0.0;
  std::vector<std::pair<double, double>> flex_totals;  // (alpha, expected total)
};

inline WorkedCapacity two_bus_example() {
  WorkedCapacity ex;
  ex.network.n_buses = 2;
  ex.network.edges = {{0, 1}};
  ex.network.line_upper = Eigen::VectorXd::Constant(1, 8.0);
  ex.network.line_lower = Eigen::VectorXd::Constant(1, -8.0);
  ex.network.withdrawal_cap = Eigen::VectorXd(2);
  ex.network.withdrawal_cap << kInf, 12.0;
  ex.network.demand = Eigen::VectorXd(2);
  ex.network.demand << 0.0, 10.0;
  ex.box.lower = Eigen::VectorXd::Zero(2);
  ex.box.upper = Eigen::VectorXd(2);
  ex.box.upper << 0.0, 3.0;
  ex.scenarios.samples = Eigen::MatrixXd::Zero(4, 2);
  ex.scenarios.samples.col(1) << 0.0, 1.0, 2.0, 3.0;
  ex.firm_total = 5.0;
  ex.firm_objective = 0.25;
  ex.flex_totals = {{0.75, 5.0}, {0.5, 5.5}, {0.0, 6.5}};
  return ex;
}

/// One line of a hand-audited surplus worksheet: a bundle, its raw value,
/// the increment penalty against the reference allocation, the bundle price,
/// and the resulting modified surplus. All entries are exact integers, so
/// replays compare with zero tolerance.
struct SurplusRow {
  Bundle bundle = 0;
  double value = 0.0;
  double penalty = 0.0;
  double bundle_price = 0.0;
  double surplus = 0.0;
};

/// A fixed auction instance whose clearing prices, allocation, and per-bidder
/// surplus worksheets are known in closed form.
struct WorkedAuction {
  AuctionConfig config;
  Eigen::VectorXd clearing_prices;
  std::vector<Bundle> allocation;
  std::vector<double> max_modified_surplus;      // one entry per bidder
  double optimal_welfare = 0.0;
  std::vector<std::vector<SurplusRow>> worksheets;  // one table per bidder
};

namespace detail {

inline Bundle bundle_of(std::initializer_list<int> one_based_items) {
  Bundle b = 0;
  for (int j : one_based_items) b |= Bundle{1} << (j - 1);
  return b;
}

inline std::vector<CapacityItem> worked_items() {
  return {{40.0, 0.0, 2, CapacityKind::Firm},
          {25.0, 0.0, 3, CapacityKind::Firm},
          {60.0, 0.05, 5, CapacityKind::Flexible},
          {30.0, 0.10, 7, CapacityKind::Flexible}};
}

}  // namespace detail

/// Two bidders with per-item values competing for four capacity products at
/// increment 5. Clearing at prices (20,5,10,5) allocates {3,4} and {1,2};
/// the first bidder's modified optimum is unique at 30, the second reaches 25.
inline WorkedAuction additive_pair_example() {
  using detail::bundle_of;
  WorkedAuction ex;
  ex.config.epsilon = 5.0;
  ex.config.items = detail::worked_items();
  Eigen::VectorXd v1(4), v2(4);
  v1 << 20, 0, 30, 15;
  v2 << 30, 20, 10, 10;
  ex.config.bidders = {AdditiveValuation{v1}, AdditiveValuation{v2}};
  ex.clearing_prices = Eigen::VectorXd(4);
  ex.clearing_prices << 20, 5, 10, 5;
  ex.allocation = {bundle_of({3, 4}), bundle_of({1, 2})};
  ex.max_modified_surplus = {30.0, 25.0};
  ex.optimal_welfare = 95.0;

  // Bundles containing item 2 are dominated for the first bidder (zero
  // value there) and are left out of its worksheet.
  ex.worksheets = {
      {{bundle_of({}), 0, 0, 0, 0},
       {bundle_of({1}), 20, 5, 20, -5},
       {bundle_of({3}), 30, 0, 10, 20},
       {bundle_of({4}), 15, 0, 5, 10},
       {bundle_of({1, 3}), 50, 5, 30, 15},
       {bundle_of({1, 4}), 35, 5, 25, 5},
       {bundle_of({3, 4}), 45, 0, 15, 30},
       {bundle_of({1, 3, 4}), 65, 5, 35, 25}},
      {{bundle_of({}), 0, 0, 0, 0},
       {bundle_of({1}), 30, 0, 20, 10},
       {bundle_of({2}), 20, 0, 5, 15},
       {bundle_of({3}), 10, 5, 10, -5},
       {bundle_of({4}), 10, 5, 5, 0},
       {bundle_of({1, 2}), 50, 0, 25, 25},
       {bundle_of({1, 3}), 40, 5, 30, 5},
       {bundle_of({1, 4}), 40, 5, 25, 10},
       {bundle_of({2, 3}), 30, 5, 15, 10},
       {bundle_of({2, 4}), 30, 5, 10, 15},
       {bundle_of({3, 4}), 20, 10, 15, -5},
       {bundle_of({1, 2, 3}), 60, 5, 35, 20},
       {bundle_of({1, 2, 4}), 60, 5, 30, 25},
       {bundle_of({1, 3, 4}), 50, 10, 35, 5},
       {bundle_of({2, 3, 4}), 40, 10, 20, 10},
       {bundle_of({1, 2, 3, 4}), 70, 10, 40, 20}}};
  return ex;
}

/// Two bidders whose value depends only on how many products they win,
/// clearing at the uniform price 10. The second bidder ties between its
/// holdings {1,3} and the supersets {1,2,3} and {1,3,4}.
inline WorkedAuction size_table_pair_example() {
  using detail::bundle_of;
  WorkedAuction ex;
  ex.config.epsilon = 5.0;
  ex.config.items = detail::worked_items();
  ex.config.bidders = {SymmetricConcaveValuation{{0, 30, 50, 55, 60}},
                       SymmetricConcaveValuation{{0, 25, 45, 60, 65}}};
  ex.clearing_prices = Eigen::VectorXd::Constant(4, 10.0);
  ex.allocation = {bundle_of({2, 4}), bundle_of({1, 3})};
  ex.max_modified_surplus = {30.0, 25.0};
  ex.optimal_welfare = 95.0;

  ex.worksheets = {
      {{bundle_of({}), 0, 0, 0, 0},
       {bundle_of({1}), 30, 5, 10, 15},
       {bundle_of({2}), 30, 0, 10, 20},
       {bundle_of({3}), 30, 5, 10, 15},
       {bundle_of({4}), 30, 0, 10, 20},
       {bundle_of({1, 2}), 50, 5, 20, 25},
       {bundle_of({1, 3}), 50, 10, 20, 20},
       {bundle_of({1, 4}), 50, 5, 20, 25},
       {bundle_of({2, 3}), 50, 5, 20, 25},
       {bundle_of({2, 4}), 50, 0, 20, 30},
       {bundle_of({3, 4}), 50, 5, 20, 25},
       {bundle_of({1, 2, 3}), 55, 10, 30, 15},
       {bundle_of({1, 2, 4}), 55, 5, 30, 20},
       {bundle_of({1, 3, 4}), 55, 10, 30, 15},
       {bundle_of({2, 3, 4}), 55, 5, 30, 20},
       {bundle_of({1, 2, 3, 4}), 60, 10, 40, 10}},
      {{bundle_of({}), 0, 0, 0, 0},
       {bundle_of({1}), 25, 0, 10, 15},
       {bundle_of({2}), 25, 5, 10, 10},
       {bundle_of({3}), 25, 0, 10, 15},
       {bundle_of({4}), 25, 5, 10, 10},
       {bundle_of({1, 2}), 45, 5, 20, 20},
       {bundle_of({1, 3}), 45, 0, 20, 25},
       {bundle_of({1, 4}), 45, 5, 20, 20},
       {bundle_of({2, 3}), 45, 5, 20, 20},
       {bundle_of({2, 4}), 45, 10, 20, 15},
       {bundle_of({3, 4}), 45, 5, 20, 20},
       {bundle_of({1, 2, 3}), 60, 5, 30, 25},
       {bundle_of({1, 2, 4}), 60, 10, 30, 20},
       {bundle_of({1, 3, 4}), 60, 5, 30, 25},
       {bundle_of({2, 3, 4}), 60, 10, 30, 20},
       {bundle_of({1, 2, 3, 4}), 65, 10, 40, 15}}};
  return ex;
}

}  // namespace gridcap
