// Command-line front end: firm / flexible capacity solves on network files,
// auction runs on bidder files, and the named verification sweeps.
// Exit codes: 0 success, 1 bad input, 2 infeasible, 3 round limit,
// 4 verification failure.

#include <cstdint>
#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "gridcap/io.hpp"
#include "gridcap/verification.hpp"

namespace {

using namespace gridcap;

std::uint64_t env_seed() {
  if (const char* env = std::getenv("GRIDCAP_SEED")) {
    char* end = nullptr;
    const unsigned long long parsed = std::strtoull(env, &end, 10);
    if (end && *end == '\0') return parsed;
  }
  return 0x67726964636170ull;
}

void emit(const std::string& out_path, const nlohmann::json& report) {
  const std::string text = report.dump(2) + "\n";
  if (out_path.empty())
    std::cout << text;
  else
    write_file(out_path, text);
}

int exit_code_for(const Error& err) {
  switch (err.code()) {
    case Errc::InfeasibleInput:
      return 2;
    case Errc::RoundLimitExceeded:
      return 3;
    default:
      return 1;
  }
}

int cmd_firm(const std::string& network_path, const std::string& out_path, std::uint64_t seed) {
  const std::string text = read_file(network_path);
  const RunManifest manifest{"firm", {{network_path, content_hash(text)}}, seed};
  const NetworkFile file = parse_network_json(text);
  const ValidatedNetwork vnet = validate_radial(file.network);
  const CapacitySolution sol = solve_firm(vnet, file.box);
  nlohmann::json report = solution_to_json(sol);
  report["manifest"] = manifest_to_json(manifest);
  emit(out_path, report);
  return 0;
}

int cmd_flex(const std::string& network_path, const std::string& scenario_path, double alpha,
             const std::string& out_path, std::uint64_t seed) {
  const std::string net_text = read_file(network_path);
  const std::string csv_text = read_file(scenario_path);
  const RunManifest manifest{"flex",
                             {{network_path, content_hash(net_text)},
                              {scenario_path, content_hash(csv_text)}},
                             seed};
  const NetworkFile file = parse_network_json(net_text);
  const ScenarioSet scen = parse_scenario_csv(csv_text);
  const ValidatedNetwork vnet = validate_radial(file.network);
  const CapacitySolution flex = solve_flex(vnet, scen, alpha);
  nlohmann::json report = solution_to_json(flex);
  if (file.has_box) {
    const CapacitySolution firm = solve_firm(vnet, file.box);
    report["c_incremental"] = gridcap::detail::vector_to_json(flex.c - firm.c);
    report["firm_total"] = gridcap::detail::num(firm.total);
  }
  report["manifest"] = manifest_to_json(manifest);
  emit(out_path, report);
  return 0;
}

nlohmann::json state_to_json(const AuctionState& state) {
  nlohmann::json bidders = nlohmann::json::array();
  for (int b : state.standing_bidder)
    bidders.push_back(b < 0 ? nlohmann::json() : nlohmann::json(b + 1));
  nlohmann::json log = nlohmann::json::array();
  for (const BidRecord& bid : state.log)
    log.push_back({{"round", bid.round},
                   {"bidder", bid.bidder + 1},
                   {"item", bid.item + 1},
                   {"amount", gridcap::detail::num(bid.amount)}});
  return {{"round", state.round},
          {"standing_price", gridcap::detail::vector_to_json(state.standing_price)},
          {"standing_bidder", bidders},
          {"log", log}};
}

int cmd_auction(const std::string& auction_path, const std::string& out_path,
                std::uint64_t seed) {
  const std::string text = read_file(auction_path);
  const RunManifest manifest{"auction", {{auction_path, content_hash(text)}}, seed};
  const AuctionConfig config = parse_auction_json(text);

  AuctionOutcome out;
  try {
    out = run_saa(config);
  } catch (const RoundLimitError& err) {
    nlohmann::json report{{"error", err.what()}, {"state", state_to_json(err.state())}};
    report["manifest"] = manifest_to_json(manifest);
    emit(out_path, report);
    std::cerr << "error: " << err.what() << "\n";
    return 3;
  }

  const CEReport ce =
      verify_ce(config.items, config.bidders, out.final_prices, out.allocation, config.epsilon);
  std::optional<EfficiencyReport> eff;
  try {
    eff = efficiency_gap(config.items, config.bidders, out.allocation);
  } catch (const Error& err) {
    if (err.code() != Errc::TooLarge) throw;
  }
  nlohmann::json report = outcome_to_json(out, ce, eff);
  report["manifest"] = manifest_to_json(manifest);
  emit(out_path, report);
  return 0;
}

int cmd_verify(const std::string& suite, int trials, const std::string& out_path,
               std::uint64_t seed) {
  const SuiteReport report = run_suite(suite, trials, seed);
  nlohmann::json j{{"suite", report.suite},
                   {"passed", report.passed},
                   {"cases_checked", report.cases_checked},
                   {"worst_gap", gridcap::detail::num(report.worst_gap)},
                   {"failures", report.failures}};
  RunManifest manifest{"verify --suite " + suite, {}, seed};
  j["manifest"] = manifest_to_json(manifest);
  emit(out_path, j);
  if (!report.passed) {
    for (const std::string& failure : report.failures)
      std::cerr << "verify " << suite << ": " << failure << "\n";
    return 4;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Firm and flexible data-center capacity on radial grids, and "
               "ascending auctions over the resulting products"};
  app.require_subcommand(1);

  std::string network_path, scenario_path, auction_path, out_path, suite;
  double alpha = 0.0;
  int trials = 0;
  std::uint64_t seed = env_seed();

  CLI::App* firm = app.add_subcommand("firm", "Box-robust firm capacity of a network file");
  firm->add_option("network", network_path, "network JSON file")->required();
  firm->add_option("--out", out_path, "write the JSON report to this file");

  CLI::App* flex =
      app.add_subcommand("flex", "Scenario-tail flexible capacity of a network file");
  flex->add_option("network", network_path, "network JSON file")->required();
  flex->add_option("scenarios", scenario_path, "scenario CSV file")->required();
  flex->add_option("--alpha", alpha, "tail confidence level in [0, 1)")->required();
  flex->add_option("--out", out_path, "write the JSON report to this file");

  CLI::App* auction = app.add_subcommand("auction", "Run the ascending auction on a config file");
  auction->add_option("config", auction_path, "auction JSON file")->required();
  auction->add_option("--seed", seed, "seed recorded in the manifest (default GRIDCAP_SEED)");
  auction->add_option("--out", out_path, "write the JSON report to this file");

  CLI::App* verify = app.add_subcommand("verify", "Run a named verification sweep");
  verify->add_option("--suite", suite, "theorem1, prop2, gs, or appendixF")->required();
  verify->add_option("--seeds", trials, "number of randomized cases (0 = suite default)");
  verify->add_option("--out", out_path, "write the JSON report to this file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    const int code = app.exit(err);
    return code == 0 ? 0 : 1;
  }

  try {
    if (firm->parsed()) return cmd_firm(network_path, out_path, seed);
    if (flex->parsed()) return cmd_flex(network_path, scenario_path, alpha, out_path, seed);
    if (auction->parsed()) return cmd_auction(auction_path, out_path, seed);
    return cmd_verify(suite, trials, out_path, seed);
  } catch (const gridcap::Error& err) {
    std::cerr << "error: " << err.what() << "\n";
    return exit_code_for(err);
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 1;
  }
}
