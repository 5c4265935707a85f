#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "gridcap/auction.hpp"
#include "gridcap/capacity.hpp"
#include "gridcap/common.hpp"
#include "json.hpp"

namespace gridcap {

inline constexpr const char* kToolVersion = "1.0.0";

/// Network file contents: the network itself plus the embedded load box.
/// Files without load bounds get the degenerate zero box; has_box records
/// whether bounds were actually present so reports can skip the firm pairing.
struct NetworkFile {
  RadialNetwork network;
  BoxBounds box;
  bool has_box = false;
};

namespace detail {

using nlohmann::json;

/// Rounding to 12 significant digits keeps emitted reports byte-stable
/// across platforms without hiding real differences.
inline double round_sig(double x) {
  if (x == 0.0 || !std::isfinite(x)) return x;
  const double scale = std::pow(10.0, 11 - std::floor(std::log10(std::abs(x))));
  return std::round(x * scale) / scale;
}

inline json num(double x) {
  if (!std::isfinite(x)) return nullptr;  // JSON has no infinity
  return round_sig(x);
}

inline json vector_to_json(const Eigen::VectorXd& v) {
  json arr = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(num(v[i]));
  return arr;
}

inline const json& require(const json& j, const char* key, const char* where) {
  const auto it = j.find(key);
  if (it == j.end())
    throw Error(Errc::ParseError,
                std::string(where) + " is missing the \"" + key + "\" key");
  return *it;
}

inline double as_number(const json& j, const std::string& what) {
  if (!j.is_number()) throw Error(Errc::ParseError, what + " must be a number");
  return j.get<double>();
}

inline Eigen::VectorXd as_vector(const json& j, const std::string& what) {
  if (!j.is_array()) throw Error(Errc::ParseError, what + " must be an array");
  Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
  Eigen::Index i = 0;
  for (const json& entry : j) v[i++] = as_number(entry, what + " entry");
  return v;
}

/// Like as_vector but each entry may be null, meaning "no limit".
inline Eigen::VectorXd as_capacity_vector(const json& j, const std::string& what) {
  if (!j.is_array()) throw Error(Errc::ParseError, what + " must be an array");
  Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
  Eigen::Index i = 0;
  for (const json& entry : j)
    v[i++] = entry.is_null() ? kInf : as_number(entry, what + " entry");
  return v;
}

inline json parse_text(const std::string& text, const char* what) {
  json j = json::parse(text, nullptr, false);
  if (j.is_discarded())
    throw Error(Errc::ParseError, std::string(what) + " is not valid JSON");
  return j;
}

}  // namespace detail

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::ParseError, "cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

inline void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::ParseError, "cannot write " + path);
  out << text;
}

/// FNV-1a over the raw bytes; enough to pin file identity in run manifests.
inline std::string content_hash(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

/// Reproducibility record emitted with every report: what ran, on which
/// bytes, under which seed. Wall-clock time is deliberately absent so that
/// identical inputs produce byte-identical reports.
struct RunManifest {
  std::string command;
  std::vector<std::pair<std::string, std::string>> inputs;  // path, content hash
  std::uint64_t seed = 0;
};

inline nlohmann::json manifest_to_json(const RunManifest& manifest) {
  nlohmann::json inputs = nlohmann::json::array();
  for (const auto& [path, hash] : manifest.inputs)
    inputs.push_back({{"path", path}, {"hash", hash}});
  return {{"command", manifest.command},
          {"inputs", inputs},
          {"seed", manifest.seed},
          {"version", kToolVersion}};
}

/// Network JSON: {"n_buses", "edges" (1-based pairs), "line_upper",
/// "line_lower", "withdrawal_cap" (null entries mean no limit), "demand",
/// optional "load_lower"/"load_upper"}.
inline NetworkFile parse_network_json(const std::string& text) {
  using detail::json;
  const json j = detail::parse_text(text, "network file");
  if (!j.is_object()) throw Error(Errc::ParseError, "network file must be a JSON object");

  NetworkFile file;
  RadialNetwork& net = file.network;
  const json& n_buses = detail::require(j, "n_buses", "network file");
  if (!n_buses.is_number_integer() || n_buses.get<int>() < 1)
    throw Error(Errc::ParseError, "\"n_buses\" must be a positive integer");
  net.n_buses = n_buses.get<int>();

  const json& edges = detail::require(j, "edges", "network file");
  if (!edges.is_array()) throw Error(Errc::ParseError, "\"edges\" must be an array of pairs");
  for (const json& edge : edges) {
    if (!edge.is_array() || edge.size() != 2 || !edge[0].is_number_integer() ||
        !edge[1].is_number_integer())
      throw Error(Errc::ParseError, "each edge must be a [parent, child] pair of bus numbers");
    const int p = edge[0].get<int>(), c = edge[1].get<int>();
    if (p < 1 || p > net.n_buses || c < 1 || c > net.n_buses)
      throw Error(Errc::ParseError, "edge endpoints must be 1-based bus numbers");
    net.edges.push_back({p - 1, c - 1});
  }

  net.line_upper = detail::as_vector(detail::require(j, "line_upper", "network file"),
                                     "\"line_upper\"");
  net.line_lower = detail::as_vector(detail::require(j, "line_lower", "network file"),
                                     "\"line_lower\"");
  const json& cap = detail::require(j, "withdrawal_cap", "network file");
  net.withdrawal_cap = cap.is_null() ? Eigen::VectorXd::Constant(net.n_buses, kInf).eval()
                                     : detail::as_capacity_vector(cap, "\"withdrawal_cap\"");
  net.demand = detail::as_vector(detail::require(j, "demand", "network file"), "\"demand\"");

  file.has_box = j.contains("load_lower") || j.contains("load_upper");
  file.box.lower = j.contains("load_lower")
                       ? detail::as_vector(j["load_lower"], "\"load_lower\"")
                       : Eigen::VectorXd::Zero(net.n_buses).eval();
  file.box.upper = j.contains("load_upper")
                       ? detail::as_vector(j["load_upper"], "\"load_upper\"")
                       : Eigen::VectorXd::Zero(net.n_buses).eval();
  return file;
}

inline std::string write_network_json(const NetworkFile& file) {
  using detail::json;
  const RadialNetwork& net = file.network;
  json edges = json::array();
  for (const auto& e : net.edges) edges.push_back({e[0] + 1, e[1] + 1});
  json j{{"n_buses", net.n_buses},
         {"edges", edges},
         {"line_upper", detail::vector_to_json(net.line_upper)},
         {"line_lower", detail::vector_to_json(net.line_lower)},
         {"withdrawal_cap", detail::vector_to_json(net.withdrawal_cap)},
         {"demand", detail::vector_to_json(net.demand)}};
  if (file.has_box) {
    j["load_lower"] = detail::vector_to_json(file.box.lower);
    j["load_upper"] = detail::vector_to_json(file.box.upper);
  }
  return j.dump(2) + "\n";
}

/// Scenario CSV: header "bus_1,...,bus_N", one sample per row.
inline ScenarioSet parse_scenario_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw Error(Errc::ParseError, "scenario file is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();

  auto split = [](const std::string& s) {
    std::vector<std::string> fields;
    std::istringstream ls(s);
    std::string field;
    while (std::getline(ls, field, ',')) fields.push_back(field);
    if (!s.empty() && s.back() == ',') fields.emplace_back();
    return fields;
  };

  const std::vector<std::string> header = split(line);
  const int n = static_cast<int>(header.size());
  for (int i = 0; i < n; ++i)
    if (header[i] != "bus_" + std::to_string(i + 1))
      throw Error(Errc::ParseError,
                  "scenario header must read bus_1,...,bus_N; column " + std::to_string(i + 1) +
                      " is \"" + header[i] + "\"");

  std::vector<Eigen::VectorXd> rows;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::vector<std::string> fields = split(line);
    if (static_cast<int>(fields.size()) != n)
      throw Error(Errc::ParseError, "line " + std::to_string(line_no) + ": expected " +
                                        std::to_string(n) + " fields, got " +
                                        std::to_string(fields.size()));
    Eigen::VectorXd row(n);
    for (int i = 0; i < n; ++i) {
      try {
        size_t used = 0;
        row[i] = std::stod(fields[i], &used);
        if (used != fields[i].size()) throw std::invalid_argument(fields[i]);
      } catch (const std::exception&) {
        throw Error(Errc::ParseError, "line " + std::to_string(line_no) + ": \"" + fields[i] +
                                          "\" is not a number");
      }
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw Error(Errc::EmptySample, "scenario file has no sample rows");

  ScenarioSet scen;
  scen.samples.resize(static_cast<Eigen::Index>(rows.size()), n);
  for (size_t r = 0; r < rows.size(); ++r) scen.samples.row(static_cast<Eigen::Index>(r)) = rows[r];
  return scen;
}

inline std::string write_scenario_csv(const ScenarioSet& scen) {
  std::ostringstream out;
  for (Eigen::Index i = 0; i < scen.samples.cols(); ++i)
    out << (i ? "," : "") << "bus_" << (i + 1);
  out << "\n";
  out.precision(12);
  for (Eigen::Index s = 0; s < scen.samples.rows(); ++s) {
    for (Eigen::Index i = 0; i < scen.samples.cols(); ++i)
      out << (i ? "," : "") << scen.samples(s, i);
    out << "\n";
  }
  return out.str();
}

/// Auction JSON: {"epsilon", "items": [{"capacity","risk","location","kind"}],
/// "bidders": [{"type": "additive","v"} | {"type": "symmetric_concave","f"} |
/// {"type": "table","values": {"1,3": 50, ...}}]}. Item locations are kept
/// verbatim as 1-based bus labels; table keys list 1-based item numbers.
inline AuctionConfig parse_auction_json(const std::string& text) {
  using detail::json;
  const json j = detail::parse_text(text, "auction file");
  if (!j.is_object()) throw Error(Errc::ParseError, "auction file must be a JSON object");

  AuctionConfig config;
  config.epsilon = detail::as_number(detail::require(j, "epsilon", "auction file"),
                                     "\"epsilon\"");
  if (j.contains("max_rounds")) {
    if (!j["max_rounds"].is_number_integer())
      throw Error(Errc::ParseError, "\"max_rounds\" must be an integer");
    config.max_rounds = j["max_rounds"].get<int>();
  }

  const json& items = detail::require(j, "items", "auction file");
  if (!items.is_array()) throw Error(Errc::ParseError, "\"items\" must be an array");
  for (const json& it : items) {
    CapacityItem item;
    item.capacity = detail::as_number(detail::require(it, "capacity", "item"), "item capacity");
    item.risk = detail::as_number(detail::require(it, "risk", "item"), "item risk");
    const json& loc = detail::require(it, "location", "item");
    if (!loc.is_number_integer()) throw Error(Errc::ParseError, "item location must be an integer");
    item.location = loc.get<int>();
    const json& kind = detail::require(it, "kind", "item");
    if (kind == "firm")
      item.kind = CapacityKind::Firm;
    else if (kind == "flex")
      item.kind = CapacityKind::Flexible;
    else
      throw Error(Errc::ParseError, "item kind must be \"firm\" or \"flex\"");
    config.items.push_back(item);
  }

  const int k = static_cast<int>(config.items.size());
  const json& bidders = detail::require(j, "bidders", "auction file");
  if (!bidders.is_array()) throw Error(Errc::ParseError, "\"bidders\" must be an array");
  for (const json& b : bidders) {
    const json& type = detail::require(b, "type", "bidder");
    if (type == "additive") {
      config.bidders.push_back(
          AdditiveValuation{detail::as_vector(detail::require(b, "v", "bidder"), "\"v\"")});
    } else if (type == "symmetric_concave") {
      const Eigen::VectorXd f = detail::as_vector(detail::require(b, "f", "bidder"), "\"f\"");
      config.bidders.push_back(
          SymmetricConcaveValuation{{f.data(), f.data() + f.size()}});
    } else if (type == "table") {
      if (k < 1 || k > 20)
        throw Error(Errc::TooManyItems, "table bidders need 1..20 auction items");
      TableValuation table;
      table.n_items = k;
      table.by_mask.assign(size_t{1} << k, 0.0);
      const json& values = detail::require(b, "values", "bidder");
      if (!values.is_object())
        throw Error(Errc::ParseError, "table \"values\" must map item lists to numbers");
      for (const auto& [key, value] : values.items()) {
        Bundle mask = 0;
        std::istringstream ks(key);
        std::string tok;
        while (std::getline(ks, tok, ',')) {
          int item = 0;
          try {
            item = std::stoi(tok);
          } catch (const std::exception&) {
            item = 0;
          }
          if (item < 1 || item > k)
            throw Error(Errc::ParseError,
                        "table key \"" + key + "\" does not list valid item numbers");
          mask |= Bundle{1} << (item - 1);
        }
        if (mask == 0)
          throw Error(Errc::ParseError, "table key \"" + key + "\" names no items");
        table.by_mask[mask] = detail::as_number(value, "table value for {" + key + "}");
      }
      config.bidders.push_back(std::move(table));
    } else {
      throw Error(Errc::ParseError,
                  "bidder type must be \"additive\", \"symmetric_concave\", or \"table\"");
    }
  }
  return config;
}

inline std::string write_auction_json(const AuctionConfig& config) {
  using detail::json;
  json items = json::array();
  for (const CapacityItem& item : config.items)
    items.push_back({{"capacity", detail::num(item.capacity)},
                     {"risk", detail::num(item.risk)},
                     {"location", item.location},
                     {"kind", item.kind == CapacityKind::Firm ? "firm" : "flex"}});
  json bidders = json::array();
  for (const Valuation& val : config.bidders) {
    if (const auto* add = std::get_if<AdditiveValuation>(&val)) {
      bidders.push_back({{"type", "additive"}, {"v", detail::vector_to_json(add->item_values)}});
    } else if (const auto* sym = std::get_if<SymmetricConcaveValuation>(&val)) {
      json f = json::array();
      for (double x : sym->by_count) f.push_back(detail::num(x));
      bidders.push_back({{"type", "symmetric_concave"}, {"f", f}});
    } else {
      const auto& table = std::get<TableValuation>(val);
      json values = json::object();
      for (Bundle mask = 1; mask < table.by_mask.size(); ++mask) {
        if (table.by_mask[mask] == 0.0) continue;
        std::string key;
        for (int item : bundle_items(mask))
          key += (key.empty() ? "" : ",") + std::to_string(item + 1);
        values[key] = detail::num(table.by_mask[mask]);
      }
      bidders.push_back({{"type", "table"}, {"values", values}});
    }
  }
  json j{{"epsilon", detail::num(config.epsilon)}, {"items", items}, {"bidders", bidders}};
  if (config.max_rounds > 0) j["max_rounds"] = config.max_rounds;
  return j.dump(2) + "\n";
}

inline nlohmann::json solution_to_json(const CapacitySolution& sol) {
  nlohmann::json j{{"kind", sol.kind == CapacityKind::Firm ? "firm" : "flex"},
                   {"c", detail::vector_to_json(sol.c)},
                   {"objective", detail::num(sol.objective)},
                   {"total", detail::num(sol.total)},
                   {"binding", sol.binding}};
  if (sol.alpha) j["alpha"] = detail::num(*sol.alpha);
  return j;
}

inline CapacitySolution solution_from_json(const nlohmann::json& j) {
  CapacitySolution sol;
  const nlohmann::json& kind = detail::require(j, "kind", "solution");
  if (kind == "firm")
    sol.kind = CapacityKind::Firm;
  else if (kind == "flex")
    sol.kind = CapacityKind::Flexible;
  else
    throw Error(Errc::ParseError, "solution kind must be \"firm\" or \"flex\"");
  sol.c = detail::as_vector(detail::require(j, "c", "solution"), "\"c\"");
  sol.objective = detail::as_number(detail::require(j, "objective", "solution"), "\"objective\"");
  sol.total = detail::as_number(detail::require(j, "total", "solution"), "\"total\"");
  for (const nlohmann::json& name : detail::require(j, "binding", "solution"))
    sol.binding.push_back(name.get<std::string>());
  if (j.contains("alpha")) sol.alpha = detail::as_number(j["alpha"], "\"alpha\"");
  return sol;
}

/// Auction outcome plus its equilibrium verdicts, as one report object.
/// Bidders and items are numbered from 1 in reports, matching the files.
inline nlohmann::json outcome_to_json(const AuctionOutcome& out, const CEReport& ce,
                                      const std::optional<EfficiencyReport>& eff) {
  using detail::json;
  json allocation = json::array();
  for (Bundle b : out.allocation) {
    json items = json::array();
    for (int j : bundle_items(b)) items.push_back(j + 1);
    allocation.push_back(items);
  }
  json log = json::array();
  for (const BidRecord& bid : out.state.log)
    log.push_back({{"round", bid.round},
                   {"bidder", bid.bidder + 1},
                   {"item", bid.item + 1},
                   {"amount", detail::num(bid.amount)}});
  json max_surplus = json::array();
  for (double s : ce.per_bidder_max_surplus) max_surplus.push_back(detail::num(s));

  json j{{"final_prices", detail::vector_to_json(out.final_prices)},
         {"allocation", allocation},
         {"rounds_used", out.rounds_used},
         {"log", log},
         {"ce_modified_holds", ce.holds},
         {"ce_violations", ce.violations},
         {"per_bidder_max_surplus", max_surplus}};
  if (eff) {
    j["optimal_welfare"] = detail::num(eff->optimal_welfare);
    j["achieved_welfare"] = detail::num(eff->achieved_welfare);
    j["efficiency_gap"] = detail::num(eff->gap);
  } else {
    j["efficiency_gap"] = nullptr;
  }
  return j;
}

}  // namespace gridcap
