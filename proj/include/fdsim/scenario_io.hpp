#pragma once

#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

#include <nlohmann/json.hpp>

#include "fdsim/scenario.hpp"

namespace fdsim {

inline constexpr int kScenarioFormatVersion = 1;

class ScenarioFormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace io {

using nlohmann::json;

inline json to_json(const MixtureComponent& c) {
  if (c.kind == MixtureComponent::Kind::kUniform)
    return {{"kind", "uniform"}, {"weight", c.weight}, {"low", c.a}, {"high", c.b}};
  return {{"kind", "lognormal"}, {"weight", c.weight}, {"mu", c.a}, {"sigma", c.b}};
}

inline MixtureComponent component_from_json(const json& j) {
  MixtureComponent c;
  const std::string kind = j.at("kind").get<std::string>();
  c.weight = j.at("weight").get<double>();
  if (kind == "uniform") {
    c.kind = MixtureComponent::Kind::kUniform;
    c.a = j.at("low").get<double>();
    c.b = j.at("high").get<double>();
  } else if (kind == "lognormal") {
    c.kind = MixtureComponent::Kind::kLogNormal;
    c.a = j.at("mu").get<double>();
    c.b = j.at("sigma").get<double>();
  } else {
    throw ScenarioFormatError("unknown mixture component kind '" + kind + "'");
  }
  return c;
}

inline json to_json(const TrafficMixture& m) {
  json comps = json::array();
  for (const auto& c : m.components) comps.push_back(to_json(c));
  return {{"components", comps}};
}

inline TrafficMixture mixture_from_json(const json& j) {
  TrafficMixture m;
  for (const auto& c : j.at("components")) m.components.push_back(component_from_json(c));
  m.validate();
  return m;
}

inline json to_json(const ScenarioParams& p) {
  return {{"n_pairs", p.n_pairs},
          {"n_iat_scale", p.n_iat_scale},
          {"n_bneck", p.n_bneck},
          {"n_bneck_intensity", p.n_bneck_intensity},
          {"n_bneck_duration", p.n_bneck_duration},
          {"bneck_sigma", p.bneck_sigma},
          {"n_isr", p.n_isr},
          {"n_hs", p.n_hs},
          {"n_hs_intensity", p.n_hs_intensity},
          {"n_traffic_scale", p.n_traffic_scale},
          {"n_lifetime", p.n_lifetime},
          {"gamma_k", p.gamma_k},
          {"gamma_theta_ms", p.gamma_theta_ms},
          {"bitrate_c", p.bitrate_c},
          {"max_lifetime", p.max_lifetime},
          {"horizon_cap", p.horizon_cap},
          {"start_offset", p.start_offset},
          {"rule_priority", p.rule_priority},
          {"mixture", to_json(p.mixture)}};
}

inline ScenarioParams params_from_json(const json& j) {
  ScenarioParams p;
  p.n_pairs = j.at("n_pairs").get<int>();
  p.n_iat_scale = j.at("n_iat_scale").get<double>();
  p.n_bneck = j.at("n_bneck").get<int>();
  p.n_bneck_intensity = j.at("n_bneck_intensity").get<double>();
  p.n_bneck_duration = j.at("n_bneck_duration").get<double>();
  p.bneck_sigma = j.at("bneck_sigma").get<double>();
  p.n_isr = j.at("n_isr").get<double>();
  p.n_hs = j.at("n_hs").get<int>();
  p.n_hs_intensity = j.at("n_hs_intensity").get<int>();
  p.n_traffic_scale = j.at("n_traffic_scale").get<double>();
  p.n_lifetime = j.at("n_lifetime").get<double>();
  p.gamma_k = j.at("gamma_k").get<double>();
  p.gamma_theta_ms = j.at("gamma_theta_ms").get<double>();
  p.bitrate_c = j.at("bitrate_c").get<double>();
  p.max_lifetime = j.at("max_lifetime").get<double>();
  p.horizon_cap = j.at("horizon_cap").get<double>();
  p.start_offset = j.at("start_offset").get<double>();
  p.rule_priority = j.at("rule_priority").get<int>();
  p.mixture = mixture_from_json(j.at("mixture"));
  return p;
}

inline json to_json(const TopologyParams& p) {
  return {{"n_switches", p.n_switches},         {"ba_m", p.ba_m},
          {"hosts_per_switch", p.hosts_per_switch}, {"table_capacity", p.table_capacity},
          {"link_capacity", p.link_capacity},   {"host_link_capacity", p.host_link_capacity}};
}

inline TopologyParams topology_params_from_json(const json& j) {
  TopologyParams p;
  p.n_switches = j.at("n_switches").get<int>();
  p.ba_m = j.at("ba_m").get<int>();
  p.hosts_per_switch = j.at("hosts_per_switch").get<int>();
  p.table_capacity = j.at("table_capacity").get<int>();
  p.link_capacity = j.at("link_capacity").get<double>();
  p.host_link_capacity = j.at("host_link_capacity").get<double>();
  return p;
}

inline json to_json(const Topology& t) {
  json links = json::array();
  for (const auto& l : t.links()) links.push_back(json::array({l.a, l.b, l.capacity}));
  return {{"switches", t.num_switches()},
          {"links", links},
          {"host_switch", t.host_switch()},
          {"table_capacity", t.table_capacities()},
          {"host_link_capacity", t.host_link_capacity()}};
}

inline Topology topology_from_json(const json& j) {
  std::vector<SwitchLink> links;
  for (const auto& l : j.at("links")) links.push_back({l.at(0).get<int>(), l.at(1).get<int>(), l.at(2).get<double>()});
  return Topology(j.at("switches").get<int>(), std::move(links), j.at("host_switch").get<std::vector<int>>(),
                  j.at("table_capacity").get<std::vector<int>>(), j.at("host_link_capacity").get<double>());
}

inline const std::vector<std::string>& rule_columns() {
  static const std::vector<std::string> cols = {
      "id",         "flow",         "switch",    "in_port",      "src",  "dst",     "priority",
      "install",    "remove",       "bits",      "bitrate",      "reactive", "ingress_port", "egress_port",
      "template_hint"};
  return cols;
}

inline json optional_int(const std::optional<int>& v) { return v ? json(*v) : json(nullptr); }

inline std::optional<int> optional_int_from(const json& j) {
  if (j.is_null()) return std::nullopt;
  return j.get<int>();
}

}  // namespace io

inline nlohmann::json scenario_to_json(const Scenario& sc) {
  using nlohmann::json;
  json rows = json::array();
  for (const FlowRule& f : sc.rules) {
    rows.push_back(json::array({f.id, f.flow_id, f.owner_switch, f.match.in_port, f.match.src, f.match.dst, f.priority,
                                f.install_time, f.remove_time, f.total_bits, f.bitrate, f.reactive,
                                io::optional_int(f.ingress_port), f.egress_port, io::optional_int(f.template_hint)}));
  }
  json windows = json::array();
  for (const auto& w : sc.bottlenecks) windows.push_back(json::array({w.x, w.y, w.truncated}));
  return {{"format", "fdsim-scenario"},
          {"version", kScenarioFormatVersion},
          {"seed", sc.seed},
          {"params", io::to_json(sc.params)},
          {"topology_params", io::to_json(sc.topology_params)},
          {"topology", io::to_json(sc.topology)},
          {"bottlenecks", windows},
          {"hotspot_hosts", sc.hotspot_hosts},
          {"pairs_generated", sc.pairs_generated},
          {"rules", {{"columns", io::rule_columns()}, {"rows", rows}}}};
}

inline Scenario scenario_from_json(const nlohmann::json& j) {
  try {
    if (j.value("format", std::string()) != "fdsim-scenario") throw ScenarioFormatError("not a scenario document");
    const int version = j.at("version").get<int>();
    if (version != kScenarioFormatVersion)
      throw ScenarioFormatError("unsupported scenario version " + std::to_string(version) + " (expected " +
                                std::to_string(kScenarioFormatVersion) + ")");
    Scenario sc;
    sc.seed = j.at("seed").get<std::uint64_t>();
    sc.params = io::params_from_json(j.at("params"));
    sc.topology_params = io::topology_params_from_json(j.at("topology_params"));
    sc.topology = io::topology_from_json(j.at("topology"));
    for (const auto& w : j.at("bottlenecks"))
      sc.bottlenecks.push_back({w.at(0).get<std::size_t>(), w.at(1).get<std::size_t>(), w.at(2).get<bool>()});
    sc.hotspot_hosts = j.at("hotspot_hosts").get<std::vector<HostId>>();
    sc.pairs_generated = j.at("pairs_generated").get<int>();
    if (j.at("rules").at("columns").get<std::vector<std::string>>() != io::rule_columns())
      throw ScenarioFormatError("unexpected rule table columns");
    for (const auto& r : j.at("rules").at("rows")) {
      FlowRule f;
      f.id = r.at(0).get<RuleId>();
      f.flow_id = r.at(1).get<std::int64_t>();
      f.owner_switch = r.at(2).get<SwitchId>();
      f.match = Match{r.at(3).get<int>(), r.at(4).get<int>(), r.at(5).get<int>()};
      f.priority = r.at(6).get<int>();
      f.install_time = r.at(7).get<double>();
      f.remove_time = r.at(8).get<double>();
      f.total_bits = r.at(9).get<double>();
      f.bitrate = r.at(10).get<double>();
      f.reactive = r.at(11).get<bool>();
      f.ingress_port = io::optional_int_from(r.at(12));
      f.egress_port = r.at(13).get<int>();
      f.template_hint = io::optional_int_from(r.at(14));
      f.validate();
      if (f.owner_switch < 0 || f.owner_switch >= sc.topology.num_switches())
        throw ScenarioFormatError("rule " + std::to_string(f.id) + " on unknown switch");
      sc.rules.push_back(f);
    }
    return sc;
  } catch (const nlohmann::json::exception& e) {
    throw ScenarioFormatError(std::string("malformed scenario: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw ScenarioFormatError(std::string("invalid scenario: ") + e.what());
  }
}

inline std::string scenario_to_string(const Scenario& sc) { return scenario_to_json(sc).dump(1) + "\n"; }

inline void save_scenario(const Scenario& sc, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << scenario_to_string(sc);
  if (!out) throw std::runtime_error("write failed: " + path);
}

inline Scenario load_scenario(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open scenario file " + path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ScenarioFormatError("corrupt scenario file " + path + ": " + e.what());
  }
  return scenario_from_json(j);
}

inline TrafficMixture load_mixture(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open mixture file " + path);
  try {
    return io::mixture_from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::exception& e) {
    throw ScenarioFormatError(std::string("malformed mixture: ") + e.what());
  }
}

}  // namespace fdsim
