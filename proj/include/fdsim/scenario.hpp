#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <random>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "fdsim/flow_rule.hpp"
#include "fdsim/topology.hpp"

namespace fdsim {

// Deterministic sub-seed derivation so that independent streams (topology,
// arrivals, pairs, traffic) never share state.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) {
  return splitmix64(master ^ splitmix64(stream + 0x632be59bd9b4e019ULL));
}

// ---------------------------------------------------------------- traffic

struct MixtureComponent {
  enum class Kind { kUniform, kLogNormal };
  Kind kind = Kind::kUniform;
  double weight = 1.0;
  double a = 0.0;  // uniform: low,  lognormal: mu (of log)
  double b = 1.0;  // uniform: high, lognormal: sigma (of log)
  friend bool operator==(const MixtureComponent&, const MixtureComponent&) = default;
};

struct TrafficMixture {
  std::vector<MixtureComponent> components;
  friend bool operator==(const TrafficMixture&, const TrafficMixture&) = default;

  void validate() const {
    if (components.empty()) throw std::invalid_argument("mixture needs at least one component");
    double total = 0.0;
    for (const auto& c : components) {
      if (!(c.weight > 0.0) || !std::isfinite(c.weight)) throw std::invalid_argument("mixture weights must be positive");
      if (c.kind == MixtureComponent::Kind::kUniform && !(c.a >= 0.0 && c.b > c.a))
        throw std::invalid_argument("uniform component needs 0 <= low < high");
      if (c.kind == MixtureComponent::Kind::kLogNormal && !(c.b > 0.0))
        throw std::invalid_argument("lognormal component needs sigma > 0");
      total += c.weight;
    }
    if (!(total > 0.0)) throw std::invalid_argument("mixture weights sum to zero");
  }

  // Closed-form CDF of the (unscaled) mixture.
  double cdf(double x) const {
    double total = 0.0, acc = 0.0;
    for (const auto& c : components) {
      total += c.weight;
      double p = 0.0;
      if (c.kind == MixtureComponent::Kind::kUniform) {
        p = std::clamp((x - c.a) / (c.b - c.a), 0.0, 1.0);
      } else if (x > 0.0) {
        p = 0.5 * std::erfc(-(std::log(x) - c.a) / (c.b * std::sqrt(2.0)));
      }
      acc += c.weight * p;
    }
    return acc / total;
  }

  double quantile(double q) const {
    double lo = 0.0, hi = 1.0;
    while (cdf(hi) < q) hi *= 2.0;
    for (int i = 0; i < 200; ++i) {
      const double mid = 0.5 * (lo + hi);
      (cdf(mid) < q ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
  }

  template <class Rng>
  double sample(Rng& rng) const {
    std::vector<double> w;
    for (const auto& c : components) w.push_back(c.weight);
    const auto k = std::discrete_distribution<std::size_t>(w.begin(), w.end())(rng);
    const auto& c = components[k];
    if (c.kind == MixtureComponent::Kind::kUniform) return std::uniform_real_distribution<double>(c.a, c.b)(rng);
    return std::lognormal_distribution<double>(c.a, c.b)(rng);
  }

  // Built-in stand-in for the measured flow-length mixture (bits): a body of
  // short flows, a log-normal bulk, and a heavy elephant tail.
  static TrafficMixture builtin() {
    using K = MixtureComponent::Kind;
    return {{{K::kUniform, 0.30, 1.0, 25.0},
             {K::kLogNormal, 0.45, std::log(200.0), 1.2},
             {K::kLogNormal, 0.25, std::log(5e3), 1.5}}};
  }
};

struct FlowSample {
  double bits = 0.0;     // delta
  double bitrate = 1.0;  // b
};

inline double bitrate_for(double bits, double c) { return std::max(1.0, std::round(c * std::sqrt(bits))); }

template <class Rng>
FlowSample sample_flow(const TrafficMixture& mix, double traffic_scale, double bitrate_c, Rng& rng) {
  if (!(traffic_scale > 0.0)) throw std::invalid_argument("traffic_scale must be positive");
  FlowSample s;
  s.bits = mix.sample(rng) * (100.0 / traffic_scale);
  s.bitrate = bitrate_for(s.bits, bitrate_c);
  return s;
}

// ---------------------------------------------------------------- arrivals

inline std::vector<double> generate_iat_series(double k, double theta_ms, int n_pairs, double iat_scale,
                                               std::uint64_t seed) {
  if (!(k > 0.0) || !(theta_ms > 0.0)) throw std::invalid_argument("gamma parameters must be positive");
  if (n_pairs < 0) throw std::invalid_argument("negative n_pairs");
  std::mt19937_64 rng(seed);
  std::gamma_distribution<double> g(k, theta_ms);
  std::vector<double> out(static_cast<std::size_t>(n_pairs));
  for (double& v : out) {
    // Gamma draws with small shape can underflow to 0; arrivals stay strictly ordered.
    v = std::max(g(rng), 1e-9) * iat_scale;
  }
  return out;
}

struct BottleneckWindow {
  std::size_t x = 0;  // first index
  std::size_t y = 0;  // window is [x, x+y]
  bool truncated = false;
  friend bool operator==(const BottleneckWindow&, const BottleneckWindow&) = default;
};

// Smallest y with floor(sum_{i=x}^{x+y} iat[i] / 1000) >= duration. When the
// series ends first the window runs to the last index and is flagged.
inline BottleneckWindow minimal_window(const std::vector<double>& iat, std::size_t x, double duration_s) {
  BottleneckWindow w{x, 0, false};
  double sum = 0.0;
  for (std::size_t i = x; i < iat.size(); ++i) {
    sum += iat[i];
    w.y = i - x;
    if (std::floor(sum / 1000.0) >= duration_s) return w;
  }
  w.truncated = true;
  return w;
}

inline double bottleneck_mean_multiplier(double intensity) { return 100.0 / intensity; }

struct BottleneckResult {
  std::vector<double> iat;
  std::vector<BottleneckWindow> windows;
};

// Each window compresses inter-arrival times by factors drawn from
// N(100/intensity, sigma). The draw's deviation from 1 tapers linearly to zero
// at both window ends, so a bottleneck ramps up and down.
inline BottleneckResult inject_bottlenecks(std::vector<double> iat, int n_bneck, double intensity, double duration_s,
                                           double sigma, std::uint64_t seed) {
  if (n_bneck < 0) throw std::invalid_argument("negative n_bneck");
  if (n_bneck > 0 && !(intensity > 100.0)) throw std::invalid_argument("bottleneck intensity must exceed 100");
  if (n_bneck > 0 && !(duration_s > 0.0)) throw std::invalid_argument("bottleneck duration must be positive");
  BottleneckResult out;
  if (iat.empty() || n_bneck == 0) {
    out.iat = std::move(iat);
    return out;
  }
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> draw(bottleneck_mean_multiplier(intensity), sigma);
  for (int b = 0; b < n_bneck; ++b) {
    const auto x = std::uniform_int_distribution<std::size_t>(0, iat.size() - 1)(rng);
    const BottleneckWindow w = minimal_window(iat, x, duration_s);
    for (std::size_t i = w.x; i <= w.x + w.y; ++i) {
      double taper = 1.0;
      if (w.y > 0) {
        const double pos = static_cast<double>(i - w.x) / static_cast<double>(w.y);
        taper = 1.0 - std::abs(2.0 * pos - 1.0);
      }
      const double m = std::clamp(draw(rng), 0.01, 1.0);
      iat[i] *= 1.0 + (m - 1.0) * taper;
    }
    out.windows.push_back(w);
  }
  out.iat = std::move(iat);
  return out;
}

// ---------------------------------------------------------------- host pairs

inline std::vector<HostId> pick_hotspot_hosts(const Topology& topo, int n_hs, std::mt19937_64& rng) {
  std::vector<SwitchId> sw(static_cast<std::size_t>(topo.num_switches()));
  for (int i = 0; i < topo.num_switches(); ++i) sw[static_cast<std::size_t>(i)] = i;
  std::shuffle(sw.begin(), sw.end(), rng);
  std::vector<HostId> hosts;
  for (int i = 0; i < std::min(n_hs, topo.num_switches()); ++i) {
    for (HostId h : topo.hosts_of(sw[static_cast<std::size_t>(i)])) hosts.push_back(h);
  }
  std::sort(hosts.begin(), hosts.end());
  return hosts;
}

namespace detail {

inline std::pair<HostId, HostId> draw_pair(const Topology& topo, double n_isr, std::mt19937_64& rng) {
  const int nh = topo.num_hosts();
  const HostId src = std::uniform_int_distribution<int>(0, nh - 1)(rng);
  const SwitchId s = topo.switch_of(src);
  const bool inter = std::bernoulli_distribution(n_isr)(rng);
  std::vector<HostId> candidates;
  for (HostId h = 0; h < nh; ++h) {
    if (h == src) continue;
    if ((topo.switch_of(h) != s) == inter) candidates.push_back(h);
  }
  if (candidates.empty()) {
    // Requested locality impossible on this topology; any other host will do.
    for (HostId h = 0; h < nh; ++h) {
      if (h != src) candidates.push_back(h);
    }
  }
  const auto k = std::uniform_int_distribution<std::size_t>(0, candidates.size() - 1)(rng);
  return {src, candidates[k]};
}

}  // namespace detail

inline std::pair<HostId, HostId> select_host_pair(const Topology& topo, double n_isr,
                                                  const std::vector<HostId>& hotspot_hosts, int n_hs_intensity,
                                                  std::mt19937_64& rng) {
  if (topo.num_hosts() < 2) throw std::invalid_argument("need at least two hosts");
  auto pair = detail::draw_pair(topo, n_isr, rng);
  if (hotspot_hosts.empty()) return pair;
  for (int r = 0; r < n_hs_intensity; ++r) {
    if (std::binary_search(hotspot_hosts.begin(), hotspot_hosts.end(), pair.first)) break;
    pair = detail::draw_pair(topo, n_isr, rng);
  }
  return pair;
}

// ---------------------------------------------------------------- scenario

struct ScenarioParams {
  int n_pairs = 3000;
  double n_iat_scale = 3.0;
  int n_bneck = 2;
  double n_bneck_intensity = 200.0;
  double n_bneck_duration = 30.0;  // s
  double bneck_sigma = 0.05;
  double n_isr = 0.7;
  int n_hs = 1;
  int n_hs_intensity = 3;
  double n_traffic_scale = 100.0;
  double n_lifetime = 2.0;  // s
  double gamma_k = 0.3;
  double gamma_theta_ms = 100.0;
  double bitrate_c = 1.0;
  double max_lifetime = 35.0;  // s
  double horizon_cap = 400.0;  // s
  double start_offset = 10.0;  // s
  int rule_priority = 1;
  TrafficMixture mixture = TrafficMixture::builtin();

  void validate() const {
    if (n_pairs < 0) throw std::invalid_argument("n_pairs must be >= 0");
    if (!(n_iat_scale > 0.0)) throw std::invalid_argument("n_iat_scale must be positive");
    if (n_bneck < 0) throw std::invalid_argument("n_bneck must be >= 0");
    if (!(n_bneck_intensity > 100.0)) throw std::invalid_argument("n_bneck_intensity must exceed 100");
    if (!(n_bneck_duration > 0.0)) throw std::invalid_argument("n_bneck_duration must be positive");
    if (!(bneck_sigma >= 0.0)) throw std::invalid_argument("bneck_sigma must be >= 0");
    if (!(n_isr >= 0.0 && n_isr <= 1.0)) throw std::invalid_argument("n_isr must lie in [0,1]");
    if (n_hs < 0 || n_hs_intensity < 0) throw std::invalid_argument("hotspot parameters must be >= 0");
    if (!(n_traffic_scale > 0.0)) throw std::invalid_argument("n_traffic_scale must be positive");
    if (!(n_lifetime > 0.0) || n_lifetime > max_lifetime) throw std::invalid_argument("n_lifetime must lie in (0, max_lifetime]");
    if (!(gamma_k > 0.0) || !(gamma_theta_ms > 0.0)) throw std::invalid_argument("gamma parameters must be positive");
    if (!(bitrate_c > 0.0)) throw std::invalid_argument("bitrate_c must be positive");
    if (rule_priority < 0) throw std::invalid_argument("rule_priority must be >= 0");
    mixture.validate();
  }
};

struct Scenario {
  Topology topology;
  std::vector<FlowRule> rules;  // ordered by id
  ScenarioParams params;
  TopologyParams topology_params;
  std::uint64_t seed = 0;
  std::vector<BottleneckWindow> bottlenecks;
  std::vector<HostId> hotspot_hosts;
  int pairs_generated = 0;  // < n_pairs when the horizon cap stopped generation

  SwitchId backup_switch() const { return topology.num_switches(); }

  Slot num_slots() const {
    Slot end = 0;
    for (const FlowRule& f : rules) end = std::max(end, f.end_slot());
    return end;
  }

  std::vector<std::vector<const FlowRule*>> rules_by_switch() const {
    std::vector<std::vector<const FlowRule*>> out(static_cast<std::size_t>(topology.num_switches()));
    for (const FlowRule& f : rules) out[static_cast<std::size_t>(f.owner_switch)].push_back(&f);
    return out;
  }

  // Own active rules per switch and slot (no delegation).
  std::vector<std::vector<int>> demand() const {
    const Slot n = num_slots();
    std::vector<std::vector<int>> out(static_cast<std::size_t>(topology.num_switches()),
                                      std::vector<int>(static_cast<std::size_t>(n), 0));
    for (const FlowRule& f : rules) {
      auto& row = out[static_cast<std::size_t>(f.owner_switch)];
      for (Slot t = std::max(0, f.install_slot()); t < f.end_slot(); ++t) ++row[static_cast<std::size_t>(t)];
    }
    return out;
  }

  std::vector<int> peak_demand() const {
    std::vector<int> peaks;
    for (const auto& row : demand()) peaks.push_back(row.empty() ? 0 : *std::max_element(row.begin(), row.end()));
    return peaks;
  }
};

inline Scenario build_scenario(const Topology& topo, const ScenarioParams& p, std::uint64_t seed) {
  p.validate();
  if (!topo.connected()) throw std::invalid_argument("topology must be connected");
  if (topo.num_hosts() < 2 && p.n_pairs > 0) throw std::invalid_argument("need at least two hosts");

  Scenario sc;
  sc.topology = topo;
  sc.params = p;
  sc.seed = seed;

  auto iat = generate_iat_series(p.gamma_k, p.gamma_theta_ms, p.n_pairs, p.n_iat_scale, derive_seed(seed, 1));
  auto injected = inject_bottlenecks(std::move(iat), p.n_bneck, p.n_bneck_intensity, p.n_bneck_duration,
                                     p.bneck_sigma, derive_seed(seed, 2));
  sc.bottlenecks = injected.windows;

  std::mt19937_64 pair_rng(derive_seed(seed, 3));
  std::mt19937_64 traffic_rng(derive_seed(seed, 4));
  sc.hotspot_hosts = pick_hotspot_hosts(topo, p.n_hs, pair_rng);

  double offset = p.start_offset;
  RuleId next_id = 0;
  for (int i = 0; i < p.n_pairs; ++i) {
    const auto [src, dst] = select_host_pair(topo, p.n_isr, sc.hotspot_hosts, p.n_hs_intensity, pair_rng);
    const FlowSample fs = sample_flow(p.mixture, p.n_traffic_scale, p.bitrate_c, traffic_rng);
    const double lifetime = std::max(std::min(fs.bits / fs.bitrate, p.max_lifetime), p.n_lifetime);
    const double install = offset;
    const double remove = offset + lifetime;
    if (remove > p.horizon_cap) break;

    const auto path = topo.shortest_path(topo.switch_of(src), topo.switch_of(dst));
    for (std::size_t k = 0; k < path.size(); ++k) {
      const SwitchId s = path[k];
      FlowRule f;
      f.id = next_id++;
      f.flow_id = i;
      f.match = Match{kAny, src, dst};
      f.priority = p.rule_priority;
      f.install_time = install;
      f.remove_time = remove;
      f.total_bits = fs.bits;
      f.bitrate = fs.bitrate;
      f.owner_switch = s;
      f.reactive = true;
      f.ingress_port = k == 0 ? topo.port_to_host(s, src) : topo.port_to_switch(s, path[k - 1]);
      f.egress_port = k + 1 == path.size() ? topo.port_to_host(s, dst) : topo.port_to_switch(s, path[k + 1]);
      sc.rules.push_back(f);
    }
    sc.pairs_generated = i + 1;
    offset += injected.iat[static_cast<std::size_t>(i)] / 1000.0;
  }
  return sc;
}

inline Scenario generate_scenario(const TopologyParams& tp, const ScenarioParams& p, std::uint64_t seed) {
  Scenario sc = build_scenario(generate_topology(tp, derive_seed(seed, 0)), p, seed);
  sc.topology_params = tp;
  return sc;
}

}  // namespace fdsim
