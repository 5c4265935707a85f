#include "gridcap/auction.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <vector>

namespace {

using namespace gridcap;

Eigen::VectorXd vec(std::initializer_list<double> vals) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(vals.size()));
  Eigen::Index i = 0;
  for (double x : vals) v[i++] = x;
  return v;
}

// Bundles in the tests are written as 1-based item lists to match the
// narrative; the library itself works in 0-based bitmasks.
Bundle mask_of(std::initializer_list<int> one_based) {
  Bundle b = 0;
  for (int j : one_based) b |= Bundle{1} << (j - 1);
  return b;
}

Valuation pair_bidder1() { return AdditiveValuation{vec({20, 0, 30, 15})}; }
Valuation pair_bidder2() { return AdditiveValuation{vec({30, 20, 10, 10})}; }
Valuation size_bidder1() { return SymmetricConcaveValuation{{0, 30, 50, 55, 60}}; }
Valuation size_bidder2() { return SymmetricConcaveValuation{{0, 25, 45, 60, 65}}; }

std::vector<CapacityItem> four_items() {
  std::vector<CapacityItem> items;
  for (int j = 0; j < 4; ++j) items.push_back({25.0, 0.0, j, CapacityKind::Firm});
  return items;
}

Errc code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& err) {
    return err.code();
  }
  ADD_FAILURE() << "expected a gridcap::Error";
  return Errc::BadInput;
}

double surplus_at(const Valuation& val, const Eigen::VectorXd& prices, Bundle u) {
  double s = eval_valuation(val, u);
  for (int j = 0; j < prices.size(); ++j)
    if ((u >> j) & 1u) s -= prices[j];
  return s;
}

// Random concave size table: nonincreasing increments drawn once and summed.
Valuation random_size_table(Rng& rng, int k, double top_increment) {
  std::vector<double> inc(static_cast<size_t>(k));
  for (double& d : inc) d = rng.uniform(0.0, top_increment);
  std::sort(inc.begin(), inc.end(), std::greater<>());
  std::vector<double> f(static_cast<size_t>(k) + 1, 0.0);
  for (int t = 1; t <= k; ++t) f[t] = f[t - 1] + inc[t - 1];
  return SymmetricConcaveValuation{std::move(f)};
}

Valuation random_bidder(Rng& rng, int k) {
  if (rng.bernoulli(0.5)) {
    Eigen::VectorXd v(k);
    for (int j = 0; j < k; ++j) v[j] = rng.uniform(0.0, 10.0);
    return AdditiveValuation{v};
  }
  return random_size_table(rng, k, 5.0);
}

std::vector<CapacityItem> firm_items(int k) {
  std::vector<CapacityItem> items;
  for (int j = 0; j < k; ++j) items.push_back({10.0, 0.0, j, CapacityKind::Firm});
  return items;
}

TEST(EvalValuation, AddsPerItemValues) {
  const Valuation val = pair_bidder1();
  EXPECT_DOUBLE_EQ(eval_valuation(val, mask_of({3, 4})), 45.0);
  EXPECT_DOUBLE_EQ(eval_valuation(val, mask_of({1})), 20.0);
  EXPECT_DOUBLE_EQ(eval_valuation(val, mask_of({1, 2, 3, 4})), 65.0);
}

TEST(EvalValuation, ReadsTheSizeTable) {
  const Valuation val = size_bidder1();
  EXPECT_DOUBLE_EQ(eval_valuation(val, mask_of({2, 4})), 50.0);
  EXPECT_DOUBLE_EQ(eval_valuation(val, mask_of({1, 2, 3})), 55.0);
  EXPECT_DOUBLE_EQ(eval_valuation(val, mask_of({3})), 30.0);
}

TEST(EvalValuation, EmptyBundleIsFree) {
  EXPECT_DOUBLE_EQ(eval_valuation(pair_bidder1(), 0), 0.0);
  EXPECT_DOUBLE_EQ(eval_valuation(size_bidder2(), 0), 0.0);
  const Valuation table = TableValuation{2, {0.0, 3.0, 4.0, 10.0}};
  EXPECT_DOUBLE_EQ(eval_valuation(table, 0), 0.0);
}

TEST(EvalValuation, RejectsForeignItems) {
  const Valuation two = AdditiveValuation{vec({1, 2})};
  EXPECT_EQ(code_of([&] { eval_valuation(two, mask_of({3})); }), Errc::UnknownItem);
  const Valuation table = TableValuation{2, {0.0, 3.0, 4.0, 10.0}};
  EXPECT_EQ(code_of([&] { eval_valuation(table, mask_of({1, 3})); }), Errc::UnknownItem);
}

TEST(ValuationGuards, RejectMalformedTables) {
  EXPECT_EQ(code_of([] { check_valuation(AdditiveValuation{vec({3, -1})}); }), Errc::BadInput);
  EXPECT_EQ(code_of([] { check_valuation(SymmetricConcaveValuation{{0, 10, 25}}); }),
            Errc::BadInput);  // increment grows
  EXPECT_EQ(code_of([] { check_valuation(SymmetricConcaveValuation{{0, 5, 3}}); }),
            Errc::BadInput);  // decreasing
  EXPECT_EQ(code_of([] { check_valuation(SymmetricConcaveValuation{{1, 2}}); }), Errc::BadInput);
  EXPECT_EQ(code_of([] { check_valuation(TableValuation{2, {0.0, 1.0}}); }), Errc::BadInput);
  EXPECT_EQ(code_of([] { check_valuation(TableValuation{21, {}}); }), Errc::TooManyItems);
  EXPECT_NO_THROW(check_valuation(SymmetricConcaveValuation{{0, 10, 12}}));
}

TEST(ItemGuards, RejectImpossibleProducts) {
  EXPECT_EQ(code_of([] { check_item({0.0, 0.0, 1, CapacityKind::Firm}); }), Errc::BadInput);
  EXPECT_EQ(code_of([] { check_item({5.0, 0.3, 1, CapacityKind::Firm}); }), Errc::BadInput);
  EXPECT_EQ(code_of([] { check_item({5.0, 1.5, 1, CapacityKind::Flexible}); }), Errc::BadInput);
  EXPECT_EQ(code_of([] { check_item({5.0, 0.1, -2, CapacityKind::Flexible}); }), Errc::BadInput);
  EXPECT_NO_THROW(check_item({5.0, 0.1, 3, CapacityKind::Flexible}));
}

TEST(DemandCorrespondence, CollectsEveryTiedMaximizer) {
  // Item 1 is exactly net zero at these prices, so it pads the best bundle.
  const auto demand = demand_correspondence(pair_bidder1(), vec({20, 5, 10, 5}));
  const std::vector<Bundle> expected{mask_of({3, 4}), mask_of({1, 3, 4})};
  EXPECT_EQ(demand, expected);
}

TEST(DemandCorrespondence, PicksTheCheapestCountForSizeTables) {
  const Valuation val = SymmetricConcaveValuation{{0, 10, 12}};
  const auto demand = demand_correspondence(val, vec({1, 20}));
  EXPECT_EQ(demand, std::vector<Bundle>{mask_of({1})});
}

TEST(DemandCorrespondence, FallsBackToTheEmptyBundle) {
  const auto demand = demand_correspondence(AdditiveValuation{vec({3, 4})}, vec({10, 10}));
  EXPECT_EQ(demand, std::vector<Bundle>{Bundle{0}});
}

TEST(DemandCorrespondence, RejectsBadShapes) {
  const Valuation val = pair_bidder1();
  EXPECT_EQ(code_of([&] { demand_correspondence(val, vec({1, 2})); }), Errc::DimensionMismatch);
  EXPECT_EQ(code_of([&] { demand_correspondence(val, vec({1, 2, 3, -1})); }), Errc::BadInput);
  const Valuation wide = AdditiveValuation{Eigen::VectorXd::Ones(21)};
  EXPECT_EQ(code_of([&] { demand_correspondence(wide, Eigen::VectorXd::Ones(21)); }),
            Errc::TooManyItems);
}

TEST(DemandCorrespondence, MatchesTheCheapestCountRuleOnRandomTables) {
  // For concave size tables the optimum takes the cheapest items while the
  // marginal value still beats the next cheapest price.
  Rng rng(0x4742534bu);
  for (int trial = 0; trial < 200; ++trial) {
    const int k = 2 + rng.uniform_int(5);
    const Valuation val = random_size_table(rng, k, 10.0);
    const auto& f = std::get<SymmetricConcaveValuation>(val).by_count;
    Eigen::VectorXd prices(k);
    for (int j = 0; j < k; ++j) prices[j] = rng.uniform(0.0, 12.0);

    std::vector<int> order(static_cast<size_t>(k));
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) { return prices[a] < prices[b]; });
    Bundle greedy = 0;
    for (int t = 1; t <= k; ++t) {
      if (f[t] - f[t - 1] <= prices[order[t - 1]]) break;
      greedy |= Bundle{1} << order[t - 1];
    }

    const auto demand = demand_correspondence(val, prices);
    ASSERT_FALSE(demand.empty());
    const double best = surplus_at(val, prices, demand.front());
    EXPECT_NEAR(surplus_at(val, prices, greedy), best, 1e-9) << "trial " << trial;
    EXPECT_NE(std::find(demand.begin(), demand.end(), greedy), demand.end()) << "trial " << trial;
  }
}

TEST(RunSaa, LoneBidderWinsAtTheOpeningPrice) {
  AuctionConfig config;
  config.epsilon = 1.0;
  config.items = firm_items(1);
  config.bidders = {AdditiveValuation{vec({10})}};
  const AuctionOutcome out = run_saa(config);
  EXPECT_EQ(out.rounds_used, 1);
  EXPECT_DOUBLE_EQ(out.final_prices[0], 0.0);
  EXPECT_EQ(out.allocation[0], mask_of({1}));
  ASSERT_EQ(out.state.log.size(), 1u);
  EXPECT_EQ(out.state.log[0].bidder, 0);
  EXPECT_DOUBLE_EQ(out.state.log[0].amount, 0.0);
}

TEST(RunSaa, CompetitionStopsWithinOneIncrementOfTheLoserValue) {
  for (int strong_first = 0; strong_first < 2; ++strong_first) {
    AuctionConfig config;
    config.epsilon = 1.0;
    config.items = firm_items(1);
    if (strong_first)
      config.bidders = {AdditiveValuation{vec({10})}, AdditiveValuation{vec({7})}};
    else
      config.bidders = {AdditiveValuation{vec({7})}, AdditiveValuation{vec({10})}};
    const AuctionOutcome out = run_saa(config);
    const int strong = strong_first ? 0 : 1;
    EXPECT_EQ(out.allocation[strong], mask_of({1})) << "order " << strong_first;
    EXPECT_EQ(out.allocation[1 - strong], 0u);
    EXPECT_GE(out.final_prices[0], 6.0);
    EXPECT_LE(out.final_prices[0], 8.0);
  }
}

TEST(RunSaa, AdditivePairSettlesIntoTheModifiedEquilibrium) {
  AuctionConfig config;
  config.epsilon = 5.0;
  config.items = four_items();
  config.bidders = {pair_bidder1(), pair_bidder2()};
  const AuctionOutcome out = run_saa(config);

  const auto ce = verify_ce(config.items, config.bidders, out.final_prices, out.allocation, 5.0);
  EXPECT_TRUE(ce.holds) << (ce.violations.empty() ? "" : ce.violations.front());
  const auto eff = efficiency_gap(config.items, config.bidders, out.allocation);
  EXPECT_LE(eff.gap, 5.0 * 4 + 1e-9);
}

TEST(RunSaa, ReportsTheCapWithStateWhenStopped) {
  AuctionConfig config;
  config.epsilon = 1.0;
  config.items = firm_items(1);
  config.bidders = {AdditiveValuation{vec({10})}, AdditiveValuation{vec({7})}};
  config.max_rounds = 2;
  try {
    run_saa(config);
    FAIL() << "expected RoundLimitError";
  } catch (const RoundLimitError& err) {
    EXPECT_EQ(err.code(), Errc::RoundLimitExceeded);
    EXPECT_EQ(err.state().round, 2);
    EXPECT_GE(err.state().standing_bidder[0], 0);
    EXPECT_FALSE(err.state().log.empty());
  }
}

TEST(RunSaa, PricesClimbByExactlyOneIncrement) {
  AuctionConfig config;
  config.epsilon = 1.0;
  config.items = firm_items(1);
  config.bidders = {AdditiveValuation{vec({10})}, AdditiveValuation{vec({7})}};
  const AuctionOutcome out = run_saa(config);
  ASSERT_FALSE(out.state.log.empty());
  EXPECT_DOUBLE_EQ(out.state.log.front().amount, 0.0);
  for (size_t i = 1; i < out.state.log.size(); ++i)
    EXPECT_NEAR(out.state.log[i].amount, out.state.log[i - 1].amount + 1.0, 1e-12);
  EXPECT_DOUBLE_EQ(out.final_prices[0], out.state.log.back().amount);
}

TEST(RunSaa, RejectsBrokenConfigs) {
  AuctionConfig config;
  config.items = firm_items(2);
  config.bidders = {AdditiveValuation{vec({1, 2})}};
  config.epsilon = 0.0;
  EXPECT_EQ(code_of([&] { run_saa(config); }), Errc::BadInput);
  config.epsilon = 1.0;
  config.bidders = {AdditiveValuation{vec({1})}};
  EXPECT_EQ(code_of([&] { run_saa(config); }), Errc::DimensionMismatch);
  config.bidders.clear();
  EXPECT_EQ(code_of([&] { run_saa(config); }), Errc::BadInput);
  config.bidders = {AdditiveValuation{vec({1, 2})}};
  config.items.clear();
  EXPECT_EQ(code_of([&] { run_saa(config); }), Errc::BadInput);
}

TEST(RunSaa, RandomAuctionsTerminateWithinTheStraightforwardBound) {
  Rng rng(0x534141u);
  for (int trial = 0; trial < 40; ++trial) {
    AuctionConfig config;
    config.epsilon = (trial % 2 == 0) ? 1.0 : 0.5;
    const int k = 1 + rng.uniform_int(6);
    const int m = 1 + rng.uniform_int(4);
    config.items = firm_items(k);
    for (int b = 0; b < m; ++b) config.bidders.push_back(random_bidder(rng, k));

    double top = 0.0;
    for (const Valuation& val : config.bidders)
      top = std::max(top, eval_valuation(val, (Bundle{1} << k) - 1u));
    const int bound = static_cast<int>(std::ceil(top / config.epsilon)) * k * m + 1;

    const AuctionOutcome out = run_saa(config);
    EXPECT_LE(out.rounds_used, bound) << "trial " << trial;

    // Holdings are disjoint and mirror the standing bidders.
    Bundle seen = 0;
    for (int b = 0; b < m; ++b) {
      EXPECT_EQ(out.allocation[b] & seen, 0u);
      seen |= out.allocation[b];
    }
    for (int j = 0; j < k; ++j) {
      const int owner = out.state.standing_bidder[j];
      if (owner < 0) {
        EXPECT_DOUBLE_EQ(out.final_prices[j], 0.0);
        EXPECT_EQ(seen & (Bundle{1} << j), 0u);
      } else {
        EXPECT_TRUE((out.allocation[owner] >> j) & 1u);
      }
    }

    // Accepted bids per item: opening at 0, then exact increments.
    std::vector<double> last(static_cast<size_t>(k), -1.0);
    for (const BidRecord& bid : out.state.log) {
      if (last[bid.item] < 0.0)
        EXPECT_DOUBLE_EQ(bid.amount, 0.0);
      else
        EXPECT_NEAR(bid.amount, last[bid.item] + config.epsilon, 1e-12);
      last[bid.item] = bid.amount;
    }
  }
}

TEST(RunSaa, RandomOutcomesStayNearEfficient) {
  Rng rng(0x50524f50u);
  for (int trial = 0; trial < 30; ++trial) {
    AuctionConfig config;
    config.epsilon = (trial % 2 == 0) ? 0.5 : 1.0;
    const int k = 1 + rng.uniform_int(5);
    const int m = 1 + rng.uniform_int(3);
    config.items = firm_items(k);
    for (int b = 0; b < m; ++b) config.bidders.push_back(random_bidder(rng, k));

    const AuctionOutcome out = run_saa(config);
    const auto ce =
        verify_ce(config.items, config.bidders, out.final_prices, out.allocation, config.epsilon);
    EXPECT_TRUE(ce.holds) << "trial " << trial
                          << (ce.violations.empty() ? "" : ": " + ce.violations.front());
    const auto eff = efficiency_gap(config.items, config.bidders, out.allocation);
    EXPECT_LE(eff.gap, config.epsilon * k + 1e-9) << "trial " << trial;
  }
}

TEST(RunSaa, ShrinkingIncrementsTightenTheEfficiencyBound) {
  double prev_bound = kInf;
  for (double eps : {4.0, 2.0, 1.0, 0.5, 0.25}) {
    AuctionConfig config;
    config.epsilon = eps;
    config.items = four_items();
    config.bidders = {pair_bidder1(), pair_bidder2()};
    const AuctionOutcome out = run_saa(config);
    const auto eff = efficiency_gap(config.items, config.bidders, out.allocation);
    const double bound = eps * 4;
    EXPECT_LE(eff.gap, bound + 1e-9) << "eps " << eps;
    EXPECT_LT(bound, prev_bound);
    prev_bound = bound;
  }
}

TEST(ModifiedValuation, PenalizesOnlyTheForeignItems) {
  // {1,3} against holdings {3,4}: one outside item costs one increment.
  const double v = modified_valuation(pair_bidder1(), mask_of({3, 4}), 5.0, mask_of({1, 3}));
  EXPECT_DOUBLE_EQ(v, 45.0);
  EXPECT_DOUBLE_EQ(v - (20.0 + 10.0), 15.0);  // surplus at prices (20,5,10,5)
}

TEST(ModifiedValuation, SizeTableLosesOneIncrementPerOutsideItem) {
  const double v = modified_valuation(size_bidder2(), mask_of({1, 3}), 5.0, mask_of({2, 4}));
  EXPECT_DOUBLE_EQ(v, 35.0);
  EXPECT_DOUBLE_EQ(v - (10.0 + 10.0), 15.0);  // surplus at prices (10,10,10,10)
}

TEST(ModifiedValuation, HeldBundleKeepsItsRawValue) {
  const Bundle held = mask_of({2, 4});
  EXPECT_DOUBLE_EQ(modified_valuation(size_bidder1(), held, 5.0, held),
                   eval_valuation(size_bidder1(), held));
  EXPECT_DOUBLE_EQ(modified_valuation(pair_bidder2(), held, 7.0, held),
                   eval_valuation(pair_bidder2(), held));
}

TEST(VerifyCe, AcceptsTheAdditivePairAtItsQuotedPrices) {
  const auto items = four_items();
  const std::vector<Valuation> bidders{pair_bidder1(), pair_bidder2()};
  const Eigen::VectorXd prices = vec({20, 5, 10, 5});
  const std::vector<Bundle> allocation{mask_of({3, 4}), mask_of({1, 2})};

  const CEReport report = verify_ce(items, bidders, prices, allocation, 5.0);
  EXPECT_TRUE(report.holds);
  ASSERT_EQ(report.per_bidder_max_surplus.size(), 2u);
  EXPECT_DOUBLE_EQ(report.per_bidder_max_surplus[0], 30.0);
  EXPECT_DOUBLE_EQ(report.per_bidder_max_surplus[1], 25.0);

  // The first bidder's optimum is unique; count the attaining bundles.
  int attained = 0;
  for (Bundle u = 0; u < 16; ++u) {
    double s = modified_valuation(bidders[0], allocation[0], 5.0, u);
    for (int j = 0; j < 4; ++j)
      if ((u >> j) & 1u) s -= prices[j];
    if (s >= 30.0 - 1e-9) ++attained;
  }
  EXPECT_EQ(attained, 1);
}

TEST(VerifyCe, AcceptsTheSizeTablePairWithItsTies) {
  const auto items = four_items();
  const std::vector<Valuation> bidders{size_bidder1(), size_bidder2()};
  const Eigen::VectorXd prices = vec({10, 10, 10, 10});
  const std::vector<Bundle> allocation{mask_of({2, 4}), mask_of({1, 3})};

  const CEReport report = verify_ce(items, bidders, prices, allocation, 5.0);
  EXPECT_TRUE(report.holds);
  EXPECT_DOUBLE_EQ(report.per_bidder_max_surplus[0], 30.0);
  EXPECT_DOUBLE_EQ(report.per_bidder_max_surplus[1], 25.0);

  // The second bidder is indifferent between its holdings and two supersets.
  for (Bundle u : {mask_of({1, 3}), mask_of({1, 2, 3}), mask_of({1, 3, 4})}) {
    double s = modified_valuation(bidders[1], allocation[1], 5.0, u);
    for (int j = 0; j < 4; ++j)
      if ((u >> j) & 1u) s -= prices[j];
    EXPECT_DOUBLE_EQ(s, 25.0);
  }
}

TEST(VerifyCe, FlagsAPricedUnallocatedItem) {
  const auto items = firm_items(2);
  const std::vector<Valuation> bidders{AdditiveValuation{vec({10, 0})}};
  const std::vector<Bundle> allocation{mask_of({1})};

  EXPECT_TRUE(verify_ce(items, bidders, vec({0, 0}), allocation).holds);
  const CEReport report = verify_ce(items, bidders, vec({0, 3}), allocation);
  EXPECT_FALSE(report.holds);
  ASSERT_EQ(report.violations.size(), 1u);
  EXPECT_NE(report.violations[0].find("unallocated item 2"), std::string::npos);
}

TEST(VerifyCe, FlipsWhenAPerturbedPriceBreaksTheTie) {
  // Bidder 1 values any single item at 5 and gains nothing from the pair, so
  // at equal prices its held item ties with the other one. Raising the held
  // item's price by 1 makes the swap strictly better and equilibrium fails.
  const auto items = firm_items(2);
  const std::vector<Valuation> bidders{SymmetricConcaveValuation{{0, 5, 5}},
                                       AdditiveValuation{vec({10, 0})}};
  const std::vector<Bundle> allocation{mask_of({2}), mask_of({1})};

  EXPECT_TRUE(verify_ce(items, bidders, vec({2, 2}), allocation).holds);
  const CEReport report = verify_ce(items, bidders, vec({2, 3}), allocation);
  EXPECT_FALSE(report.holds);
  ASSERT_EQ(report.violations.size(), 1u);
  EXPECT_NE(report.violations[0].find("bidder 1"), std::string::npos);
}

TEST(VerifyCe, RejectsMalformedQueries) {
  const auto items = firm_items(2);
  const std::vector<Valuation> bidders{AdditiveValuation{vec({1, 2})}};
  EXPECT_EQ(code_of([&] {
              verify_ce(items, bidders, vec({0, 0}), {mask_of({1}), mask_of({2})});
            }),
            Errc::DimensionMismatch);
  EXPECT_EQ(code_of([&] { verify_ce(items, bidders, vec({0}), {mask_of({1})}); }),
            Errc::DimensionMismatch);
  const std::vector<Valuation> two{AdditiveValuation{vec({1, 2})}, AdditiveValuation{vec({1, 2})}};
  EXPECT_EQ(code_of([&] { verify_ce(items, two, vec({0, 0}), {mask_of({1}), mask_of({1})}); }),
            Errc::BadInput);
}

TEST(EfficiencyGap, AdditivePairAllocationIsOptimal) {
  const auto report = efficiency_gap(four_items(), {pair_bidder1(), pair_bidder2()},
                                     {mask_of({3, 4}), mask_of({1, 2})});
  EXPECT_DOUBLE_EQ(report.optimal_welfare, 95.0);
  EXPECT_DOUBLE_EQ(report.achieved_welfare, 95.0);
  EXPECT_DOUBLE_EQ(report.gap, 0.0);
}

TEST(EfficiencyGap, SizeTablePairAllocationIsOptimal) {
  const auto report = efficiency_gap(four_items(), {size_bidder1(), size_bidder2()},
                                     {mask_of({2, 4}), mask_of({1, 3})});
  EXPECT_DOUBLE_EQ(report.achieved_welfare, 95.0);
  EXPECT_DOUBLE_EQ(report.optimal_welfare, 95.0);
  EXPECT_DOUBLE_EQ(report.gap, 0.0);
}

TEST(EfficiencyGap, SingleBidderKeepsEverything) {
  const auto report =
      efficiency_gap(four_items(), {pair_bidder1()}, {mask_of({1, 2, 3, 4})});
  EXPECT_DOUBLE_EQ(report.gap, 0.0);
  EXPECT_DOUBLE_EQ(report.optimal_welfare, 65.0);
}

TEST(EfficiencyGap, CountsTheForgoneItems) {
  const auto report =
      efficiency_gap(four_items(), {pair_bidder1(), pair_bidder2()}, {mask_of({3, 4}), 0});
  EXPECT_DOUBLE_EQ(report.achieved_welfare, 45.0);
  EXPECT_DOUBLE_EQ(report.gap, 50.0);
}

TEST(EfficiencyGap, RefusesHugeSearches) {
  std::vector<CapacityItem> items = firm_items(20);
  const std::vector<Valuation> bidders{AdditiveValuation{Eigen::VectorXd::Ones(20)},
                                       AdditiveValuation{Eigen::VectorXd::Ones(20)}};
  EXPECT_EQ(code_of([&] { efficiency_gap(items, bidders, {0u, 0u}); }), Errc::TooLarge);
}

TEST(GrossSubstitutes, PerItemValuesAlwaysPass) {
  const auto report = check_gross_substitutes(pair_bidder1(), 500, 10.0, 0x47531u);
  EXPECT_TRUE(report.passes);
  EXPECT_FALSE(report.counterexample.has_value());
}

TEST(GrossSubstitutes, SizeTablesAlwaysPass) {
  const auto report = check_gross_substitutes(size_bidder1(), 500, 10.0, 0x47532u);
  EXPECT_TRUE(report.passes);
  EXPECT_FALSE(report.counterexample.has_value());
}

TEST(GrossSubstitutes, RandomSizeTablesAlwaysPass) {
  Rng rng(0x47533u);
  for (int trial = 0; trial < 30; ++trial) {
    const int k = 2 + rng.uniform_int(5);
    const Valuation val = random_size_table(rng, k, 8.0);
    const auto report = check_gross_substitutes(val, 100, 10.0, rng.next_u64());
    EXPECT_TRUE(report.passes) << "trial " << trial;
  }
}

TEST(GrossSubstitutes, ComplementsFailWithAWitness) {
  // The pair is worth 10 but each half is worthless: raising one price must
  // drop the other item too, which gross substitutes forbids.
  const Valuation val = TableValuation{2, {0.0, 0.0, 0.0, 10.0}};
  EXPECT_EQ(demand_correspondence(val, vec({1, 1})), std::vector<Bundle>{mask_of({1, 2})});
  EXPECT_EQ(demand_correspondence(val, vec({20, 1})), std::vector<Bundle>{Bundle{0}});

  const auto report = check_gross_substitutes(val, 500, 12.0, 0x47534u);
  ASSERT_FALSE(report.passes);
  ASSERT_TRUE(report.counterexample.has_value());
  const GsCounterexample& ce = *report.counterexample;

  // Replay the witness: the demanded bundle loses an item whose price is flat.
  const auto before = demand_correspondence(val, ce.prices);
  EXPECT_NE(std::find(before.begin(), before.end(), ce.demanded), before.end());
  Bundle kept = 0;
  for (int j = 0; j < 2; ++j)
    if (((ce.demanded >> j) & 1u) && ce.raised_prices[j] == ce.prices[j]) kept |= Bundle{1} << j;
  bool retained = false;
  for (Bundle u2 : demand_correspondence(val, ce.raised_prices))
    if ((u2 & kept) == kept) retained = true;
  EXPECT_FALSE(retained);
}

TEST(GrossSubstitutes, RejectsOversizedSweeps) {
  const Valuation wide = AdditiveValuation{Eigen::VectorXd::Ones(13)};
  EXPECT_EQ(code_of([&] { check_gross_substitutes(wide, 10, 1.0, 1); }), Errc::TooManyItems);
  EXPECT_EQ(code_of([&] { check_gross_substitutes(pair_bidder1(), 10, 0.0, 1); }), Errc::BadInput);
}

}  // namespace
