#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "gridcap/common.hpp"

namespace gridcap {

/// Item sets are bitmasks over item indices (item j = bit j). Ascending mask
/// order coincides with lexicographic order on sorted index lists, which the
/// tie-break rules rely on.
using Bundle = std::uint32_t;

inline int bundle_size(Bundle b) { return std::popcount(b); }

inline std::vector<int> bundle_items(Bundle b) {
  std::vector<int> items;
  for (int j = 0; b >> j; ++j)
    if ((b >> j) & 1u) items.push_back(j);
  return items;
}

/// An indivisible capacity product: so many MW at a bus, firm or carrying a
/// stated tail risk.
struct CapacityItem {
  double capacity = 0.0;
  double risk = 0.0;
  int location = 0;
  CapacityKind kind = CapacityKind::Firm;
};

inline void check_item(const CapacityItem& item) {
  if (!(item.capacity > 0.0)) throw Error(Errc::BadInput, "item capacity must be positive");
  if (item.risk < 0.0 || item.risk > 1.0)
    throw Error(Errc::BadInput, "item risk must lie in [0, 1]");
  if (item.kind == CapacityKind::Firm && item.risk != 0.0)
    throw Error(Errc::BadInput, "firm items carry zero risk");
  if (item.location < 0) throw Error(Errc::BadInput, "item location must be a bus index");
}

/// Per-item values, bundle value is their sum.
struct AdditiveValuation {
  Eigen::VectorXd item_values;
};

/// Value depends only on the bundle size through a concave table
/// f(0) = 0 <= f(1) <= ... with nonincreasing increments.
struct SymmetricConcaveValuation {
  std::vector<double> by_count;  // length n_items + 1
};

/// Explicit value per subset, indexed by bundle mask. Used to replay golden
/// data and to build deliberately non-substitutable valuations.
struct TableValuation {
  int n_items = 0;
  std::vector<double> by_mask;  // length 2^n_items, entry 0 must be 0
};

using Valuation = std::variant<AdditiveValuation, SymmetricConcaveValuation, TableValuation>;

inline int valuation_items(const Valuation& val) {
  struct {
    int operator()(const AdditiveValuation& v) const {
      return static_cast<int>(v.item_values.size());
    }
    int operator()(const SymmetricConcaveValuation& v) const {
      return static_cast<int>(v.by_count.size()) - 1;
    }
    int operator()(const TableValuation& v) const { return v.n_items; }
  } visitor;
  return std::visit(visitor, val);
}

inline void check_valuation(const Valuation& val) {
  if (const auto* add = std::get_if<AdditiveValuation>(&val)) {
    if (add->item_values.size() < 1) throw Error(Errc::BadInput, "additive valuation is empty");
    if ((add->item_values.array() < 0.0).any())
      throw Error(Errc::BadInput, "additive item values must be nonnegative");
    return;
  }
  if (const auto* sym = std::get_if<SymmetricConcaveValuation>(&val)) {
    const auto& f = sym->by_count;
    if (f.size() < 2) throw Error(Errc::BadInput, "size-value table needs entries for 0 and 1 items");
    if (f[0] != 0.0) throw Error(Errc::BadInput, "value of the empty bundle must be 0");
    double prev_inc = kInf;
    for (size_t k = 1; k < f.size(); ++k) {
      const double inc = f[k] - f[k - 1];
      if (inc < 0.0) throw Error(Errc::BadInput, "size-value table must be nondecreasing");
      if (inc > prev_inc + 1e-12)
        throw Error(Errc::BadInput, "size-value increments must be nonincreasing (concavity)");
      prev_inc = inc;
    }
    return;
  }
  const auto& tab = std::get<TableValuation>(val);
  if (tab.n_items < 1 || tab.n_items > 20)
    throw Error(Errc::TooManyItems, "table valuation supports 1..20 items");
  if (tab.by_mask.size() != (size_t{1} << tab.n_items))
    throw Error(Errc::BadInput, "table valuation needs one value per subset");
  if (tab.by_mask[0] != 0.0) throw Error(Errc::BadInput, "value of the empty bundle must be 0");
}

/// Bundle value under the given valuation.
inline double eval_valuation(const Valuation& val, Bundle bundle) {
  const int k = valuation_items(val);
  if (k < 32 && (bundle >> k) != 0)
    throw Error(Errc::UnknownItem, "bundle references an item the valuation does not cover");
  if (const auto* add = std::get_if<AdditiveValuation>(&val)) {
    double total = 0.0;
    for (int j = 0; j < k; ++j)
      if ((bundle >> j) & 1u) total += add->item_values[j];
    return total;
  }
  if (const auto* sym = std::get_if<SymmetricConcaveValuation>(&val))
    return sym->by_count[static_cast<size_t>(bundle_size(bundle))];
  return std::get<TableValuation>(val).by_mask[bundle];
}

/// Eq. value minus an increment penalty for items outside the reference
/// bundle; competitive-equilibrium claims about auction outcomes hold for
/// these modified values rather than the raw ones.
inline double modified_valuation(const Valuation& val, Bundle allocated, double epsilon,
                                 Bundle bundle) {
  return eval_valuation(val, bundle) - epsilon * bundle_size(bundle & ~allocated);
}

/// All quasi-linear utility maximizers at the given prices, ascending mask
/// order. The empty bundle (surplus 0) always competes, so the result is
/// nonempty and {0} alone means nothing is worth its price.
inline std::vector<Bundle> demand_correspondence(const Valuation& val,
                                                 const Eigen::VectorXd& prices) {
  const int k = valuation_items(val);
  if (static_cast<int>(prices.size()) != k)
    throw Error(Errc::DimensionMismatch, "need one price per item");
  if (k > 20) throw Error(Errc::TooManyItems, "demand enumeration supports up to 20 items");
  if ((prices.array() < 0.0).any()) throw Error(Errc::BadInput, "prices must be nonnegative");

  const Bundle full = (Bundle{1} << k) - 1u;
  auto surplus_of = [&](Bundle b) {
    double surplus = eval_valuation(val, b);
    for (int j = 0; j < k; ++j)
      if ((b >> j) & 1u) surplus -= prices[j];
    return surplus;
  };
  double best = -kInf;
  for (Bundle b = 0; b <= full; ++b) best = std::max(best, surplus_of(b));
  std::vector<Bundle> argmax;
  for (Bundle b = 0; b <= full; ++b)
    if (surplus_of(b) >= best - 1e-9) argmax.push_back(b);
  return argmax;
}

struct AuctionConfig {
  double epsilon = 1.0;
  std::vector<CapacityItem> items;
  std::vector<Valuation> bidders;
  int max_rounds = 0;  // 0: use the worst-case straightforward-bidding bound
};

struct BidRecord {
  int round = 0;
  int bidder = 0;
  int item = 0;
  double amount = 0.0;
};

struct AuctionState {
  int round = 0;
  Eigen::VectorXd standing_price;
  std::vector<int> standing_bidder;  // -1 while an item has never been bid on
  std::vector<BidRecord> log;        // accepted standing-bid changes, in order
};

struct AuctionOutcome {
  Eigen::VectorXd final_prices;
  std::vector<Bundle> allocation;  // per bidder; items nobody stands on are unallocated
  int rounds_used = 0;
  AuctionState state;
};

/// Raised when the round cap is hit; carries the state for inspection.
class RoundLimitError : public Error {
 public:
  RoundLimitError(AuctionState st, int cap)
      : Error(Errc::RoundLimitExceeded,
              "no termination within " + std::to_string(cap) + " rounds"),
        state_(std::move(st)) {}

  const AuctionState& state() const { return state_; }

 private:
  AuctionState state_;
};

inline void check_auction_config(const AuctionConfig& config) {
  if (!(config.epsilon > 0.0)) throw Error(Errc::BadInput, "bid increment must be positive");
  if (config.items.empty()) throw Error(Errc::BadInput, "auction needs at least one item");
  if (config.bidders.empty()) throw Error(Errc::BadInput, "auction needs at least one bidder");
  if (config.items.size() > 20)
    throw Error(Errc::TooManyItems, "demand enumeration supports up to 20 items");
  for (const CapacityItem& item : config.items) check_item(item);
  const int k = static_cast<int>(config.items.size());
  for (const Valuation& val : config.bidders) {
    check_valuation(val);
    if (valuation_items(val) != k)
      throw Error(Errc::DimensionMismatch, "every valuation must cover all items");
  }
}

/// Simultaneous ascending auction under straightforward bidding. Each round
/// every bidder demands a utility-maximizing bundle at its perceived prices
/// (held items at the standing bid, others one increment up, never-bid items
/// at the zero opening) and bids on the demanded items it does not hold;
/// the lowest bidder index wins ties. A bid-free round ends the auction and
/// is not counted in rounds_used.
inline AuctionOutcome run_saa(const AuctionConfig& config) {
  check_auction_config(config);
  const int k = static_cast<int>(config.items.size());
  const int m = static_cast<int>(config.bidders.size());
  const double eps = config.epsilon;

  int round_cap = config.max_rounds;
  if (round_cap <= 0) {
    const Bundle full = (Bundle{1} << k) - 1u;
    double top = 0.0;
    for (const Valuation& val : config.bidders)
      top = std::max(top, eval_valuation(val, full));
    round_cap = static_cast<int>(std::ceil(top / eps)) * k * m + 1;
  }

  AuctionState state;
  state.standing_price = Eigen::VectorXd::Zero(k);
  state.standing_bidder.assign(k, -1);

  std::vector<Bundle> held(m, 0);
  for (int round = 1;; ++round) {
    if (round > round_cap) throw RoundLimitError(std::move(state), round_cap);
    state.round = round;

    // Perceived-price demands are computed against the same pre-round state
    // for every bidder; bids land simultaneously afterwards.
    struct Proposal {
      int bidder;
      int item;
      double amount;
    };
    std::vector<Proposal> proposals;
    for (int b = 0; b < m; ++b) {
      Eigen::VectorXd perceived(k);
      for (int j = 0; j < k; ++j) {
        if (state.standing_bidder[j] == b)
          perceived[j] = state.standing_price[j];
        else if (state.standing_bidder[j] == -1)
          perceived[j] = 0.0;
        else
          perceived[j] = state.standing_price[j] + eps;
      }
      const Bundle wanted = demand_correspondence(config.bidders[b], perceived).front();
      const Bundle fresh = wanted & ~held[b];
      for (int j = 0; j < k; ++j)
        if ((fresh >> j) & 1u) proposals.push_back({b, j, perceived[j]});
    }

    if (proposals.empty()) {
      state.round = round - 1;
      break;
    }

    for (int j = 0; j < k; ++j) {
      const Proposal* winner = nullptr;
      for (const Proposal& prop : proposals) {
        if (prop.item != j) continue;
        if (!winner || prop.amount > winner->amount + 1e-12) winner = &prop;
      }
      if (!winner) continue;
      if (state.standing_bidder[j] >= 0) held[state.standing_bidder[j]] &= ~(Bundle{1} << j);
      state.standing_bidder[j] = winner->bidder;
      state.standing_price[j] = winner->amount;
      held[winner->bidder] |= Bundle{1} << j;
      state.log.push_back({round, winner->bidder, j, winner->amount});
    }
  }

  AuctionOutcome out;
  out.final_prices = state.standing_price;
  out.allocation = std::move(held);
  out.rounds_used = state.round;
  out.state = std::move(state);
  return out;
}

struct CEReport {
  bool holds = false;
  std::vector<double> per_bidder_max_surplus;
  std::vector<std::string> violations;
};

/// Competitive-equilibrium check: every bidder's allocated bundle attains its
/// maximum surplus at the given prices (over all bundles, with the increment
/// penalty applied when epsilon is given), and unallocated items are free.
inline CEReport verify_ce(const std::vector<CapacityItem>& items,
                          const std::vector<Valuation>& bidders, const Eigen::VectorXd& prices,
                          const std::vector<Bundle>& allocation,
                          std::optional<double> epsilon = std::nullopt) {
  const int k = static_cast<int>(items.size());
  const int m = static_cast<int>(bidders.size());
  if (static_cast<int>(prices.size()) != k)
    throw Error(Errc::DimensionMismatch, "need one price per item");
  if (static_cast<int>(allocation.size()) != m)
    throw Error(Errc::DimensionMismatch, "need one allocation block per bidder");
  if (k > 20) throw Error(Errc::TooManyItems, "surplus enumeration supports up to 20 items");
  Bundle seen = 0;
  for (Bundle b : allocation) {
    if (b & seen) throw Error(Errc::BadInput, "allocation blocks must be disjoint");
    seen |= b;
  }

  CEReport report;
  report.holds = true;
  const Bundle full = (Bundle{1} << k) - 1u;
  for (int b = 0; b < m; ++b) {
    auto surplus_of = [&](Bundle u) {
      double s = epsilon ? modified_valuation(bidders[b], allocation[b], *epsilon, u)
                         : eval_valuation(bidders[b], u);
      for (int j = 0; j < k; ++j)
        if ((u >> j) & 1u) s -= prices[j];
      return s;
    };
    double best = -kInf;
    for (Bundle u = 0; u <= full; ++u) best = std::max(best, surplus_of(u));
    report.per_bidder_max_surplus.push_back(best);
    if (surplus_of(allocation[b]) < best - 1e-9) {
      report.holds = false;
      report.violations.push_back("bidder " + std::to_string(b + 1) +
                                  " prefers another bundle at these prices");
    }
  }
  for (int j = 0; j < k; ++j) {
    if (!((seen >> j) & 1u) && prices[j] > 1e-9) {
      report.holds = false;
      report.violations.push_back("unallocated item " + std::to_string(j + 1) +
                                  " has a positive price");
    }
  }
  return report;
}

struct EfficiencyReport {
  double optimal_welfare = 0.0;
  double achieved_welfare = 0.0;
  double gap = 0.0;
};

/// Welfare of the allocation against the exhaustive optimum over all ways of
/// assigning each item to one bidder or to nobody.
inline EfficiencyReport efficiency_gap(const std::vector<CapacityItem>& items,
                                       const std::vector<Valuation>& bidders,
                                       const std::vector<Bundle>& allocation) {
  const int k = static_cast<int>(items.size());
  const int m = static_cast<int>(bidders.size());
  if (static_cast<int>(allocation.size()) != m)
    throw Error(Errc::DimensionMismatch, "need one allocation block per bidder");
  double combos = 1.0;
  for (int j = 0; j < k; ++j) {
    combos *= static_cast<double>(m + 1);
    if (combos > static_cast<double>(1 << 24))
      throw Error(Errc::TooLarge, "exhaustive welfare search needs (m+1)^K <= 2^24");
  }

  EfficiencyReport report;
  std::vector<int> owner(k, 0);  // 0 = unassigned, 1..m = bidder index + 1
  std::vector<Bundle> blocks(m, 0);
  for (;;) {
    double welfare = 0.0;
    for (int b = 0; b < m; ++b) welfare += eval_valuation(bidders[b], blocks[b]);
    report.optimal_welfare = std::max(report.optimal_welfare, welfare);

    int j = 0;
    for (; j < k; ++j) {
      if (owner[j] >= 1) blocks[owner[j] - 1] &= ~(Bundle{1} << j);
      if (++owner[j] <= m) {
        blocks[owner[j] - 1] |= Bundle{1} << j;
        break;
      }
      owner[j] = 0;
    }
    if (j == k) break;
  }

  for (int b = 0; b < m; ++b)
    report.achieved_welfare += eval_valuation(bidders[b], allocation[b]);
  report.gap = report.optimal_welfare - report.achieved_welfare;
  return report;
}

struct GsCounterexample {
  Eigen::VectorXd prices;
  Eigen::VectorXd raised_prices;
  Bundle demanded = 0;
};

struct GsReport {
  bool passes = false;
  std::optional<GsCounterexample> counterexample;
};

/// Randomized gross-substitutes test: raise a random subset of prices and
/// require that every previously demanded bundle can keep its items whose
/// prices did not move. A pass is statistical evidence, not a proof; a
/// recorded counterexample is a proof of failure.
inline GsReport check_gross_substitutes(const Valuation& val, int trials, double price_cap,
                                        std::uint64_t seed) {
  check_valuation(val);
  const int k = valuation_items(val);
  if (k > 12) throw Error(Errc::TooManyItems, "substitutes sweep supports up to 12 items");
  if (!(price_cap > 0.0)) throw Error(Errc::BadInput, "price cap must be positive");

  Rng rng(seed);
  GsReport report;
  report.passes = true;
  for (int trial = 0; trial < trials; ++trial) {
    Eigen::VectorXd p(k);
    for (int j = 0; j < k; ++j) p[j] = rng.uniform(0.0, price_cap);
    const Bundle raised = static_cast<Bundle>(1 + rng.uniform_int((1 << k) - 1));
    Eigen::VectorXd p2 = p;
    for (int j = 0; j < k; ++j)
      if ((raised >> j) & 1u) p2[j] += rng.uniform(0.0, price_cap);

    const std::vector<Bundle> before = demand_correspondence(val, p);
    const std::vector<Bundle> after = demand_correspondence(val, p2);
    for (Bundle u : before) {
      const Bundle keep = u & ~raised;
      bool kept = false;
      for (Bundle u2 : after)
        if ((u2 & keep) == keep) {
          kept = true;
          break;
        }
      if (!kept) {
        report.passes = false;
        report.counterexample = GsCounterexample{p, p2, u};
        return report;
      }
    }
  }
  return report;
}

}  // namespace gridcap
