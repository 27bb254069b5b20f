#pragma once

#include <algorithm>
#include <cstdint>
#include <deque>
#include <limits>
#include <optional>
#include <random>
#include <set>
#include <stdexcept>
#include <utility>
#include <vector>

#include "fdsim/flow_rule.hpp"

namespace fdsim {

using HostId = int;

struct SwitchLink {
  SwitchId a = 0;
  SwitchId b = 0;
  double capacity = 0.0;  // bit/s, each direction
  friend bool operator==(const SwitchLink&, const SwitchLink&) = default;
};

// Switches 0..n-1 and hosts 0..h-1. Each switch numbers its ports with the
// neighbor switches first (ascending id), then its attached hosts (ascending id).
class Topology {
 public:
  Topology() = default;

  Topology(int num_switches, std::vector<SwitchLink> links, std::vector<SwitchId> host_switch,
           std::vector<int> table_capacity, double host_link_capacity)
      : num_switches_(num_switches),
        links_(std::move(links)),
        host_switch_(std::move(host_switch)),
        table_capacity_(std::move(table_capacity)),
        host_link_capacity_(host_link_capacity) {
    build_index();
  }

  int num_switches() const { return num_switches_; }
  int num_hosts() const { return static_cast<int>(host_switch_.size()); }
  const std::vector<SwitchLink>& links() const { return links_; }
  const std::vector<SwitchId>& host_switch() const { return host_switch_; }
  SwitchId switch_of(HostId h) const { return host_switch_.at(static_cast<std::size_t>(h)); }
  const std::vector<SwitchId>& neighbors(SwitchId s) const { return neighbors_.at(static_cast<std::size_t>(s)); }
  const std::vector<HostId>& hosts_of(SwitchId s) const { return hosts_.at(static_cast<std::size_t>(s)); }
  double host_link_capacity() const { return host_link_capacity_; }

  int table_capacity(SwitchId s) const { return table_capacity_.at(static_cast<std::size_t>(s)); }
  const std::vector<int>& table_capacities() const { return table_capacity_; }
  void set_table_capacity(SwitchId s, int c) { table_capacity_.at(static_cast<std::size_t>(s)) = c; }
  void set_all_table_capacities(int c) { std::fill(table_capacity_.begin(), table_capacity_.end(), c); }

  int port_count(SwitchId s) const { return static_cast<int>(neighbors(s).size() + hosts_of(s).size()); }

  int port_to_switch(SwitchId s, SwitchId nb) const {
    const auto& n = neighbors(s);
    auto it = std::lower_bound(n.begin(), n.end(), nb);
    if (it == n.end() || *it != nb) throw std::out_of_range("switches are not adjacent");
    return static_cast<int>(it - n.begin());
  }

  int port_to_host(SwitchId s, HostId h) const {
    const auto& hs = hosts_of(s);
    auto it = std::lower_bound(hs.begin(), hs.end(), h);
    if (it == hs.end() || *it != h) throw std::out_of_range("host is not attached to switch");
    return static_cast<int>(neighbors(s).size() + static_cast<std::size_t>(it - hs.begin()));
  }

  bool adjacent(SwitchId a, SwitchId b) const {
    const auto& n = neighbors(a);
    return std::binary_search(n.begin(), n.end(), b);
  }

  double link_capacity(SwitchId a, SwitchId b) const {
    for (const SwitchLink& l : links_) {
      if ((l.a == a && l.b == b) || (l.a == b && l.b == a)) return l.capacity;
    }
    throw std::out_of_range("no link between switches");
  }

  // BFS shortest path; ties resolve towards lower switch ids.
  std::vector<SwitchId> shortest_path(SwitchId from, SwitchId to) const {
    std::vector<int> prev(static_cast<std::size_t>(num_switches_), -1);
    std::vector<bool> seen(static_cast<std::size_t>(num_switches_), false);
    std::deque<SwitchId> q{from};
    seen[static_cast<std::size_t>(from)] = true;
    while (!q.empty()) {
      const SwitchId u = q.front();
      q.pop_front();
      if (u == to) break;
      for (SwitchId v : neighbors(u)) {
        if (seen[static_cast<std::size_t>(v)]) continue;
        seen[static_cast<std::size_t>(v)] = true;
        prev[static_cast<std::size_t>(v)] = u;
        q.push_back(v);
      }
    }
    if (!seen[static_cast<std::size_t>(to)]) throw std::runtime_error("switches are disconnected");
    std::vector<SwitchId> path{to};
    while (path.back() != from) path.push_back(prev[static_cast<std::size_t>(path.back())]);
    std::reverse(path.begin(), path.end());
    return path;
  }

  bool connected() const {
    if (num_switches_ == 0) return true;
    std::vector<bool> seen(static_cast<std::size_t>(num_switches_), false);
    std::deque<SwitchId> q{0};
    seen[0] = true;
    int count = 1;
    while (!q.empty()) {
      const SwitchId u = q.front();
      q.pop_front();
      for (SwitchId v : neighbors(u)) {
        if (!seen[static_cast<std::size_t>(v)]) {
          seen[static_cast<std::size_t>(v)] = true;
          ++count;
          q.push_back(v);
        }
      }
    }
    return count == num_switches_;
  }

  std::vector<int> degrees() const {
    std::vector<int> d;
    for (const auto& n : neighbors_) d.push_back(static_cast<int>(n.size()));
    return d;
  }

 private:
  void build_index() {
    if (num_switches_ < 0) throw std::invalid_argument("negative switch count");
    if (static_cast<int>(table_capacity_.size()) != num_switches_)
      throw std::invalid_argument("table capacity list must have one entry per switch");
    neighbors_.assign(static_cast<std::size_t>(num_switches_), {});
    hosts_.assign(static_cast<std::size_t>(num_switches_), {});
    for (const SwitchLink& l : links_) {
      if (l.a < 0 || l.b < 0 || l.a >= num_switches_ || l.b >= num_switches_ || l.a == l.b)
        throw std::invalid_argument("link endpoint out of range");
      if (!(l.capacity > 0.0)) throw std::invalid_argument("link capacity must be positive");
      neighbors_[static_cast<std::size_t>(l.a)].push_back(l.b);
      neighbors_[static_cast<std::size_t>(l.b)].push_back(l.a);
    }
    for (auto& n : neighbors_) {
      std::sort(n.begin(), n.end());
      if (std::adjacent_find(n.begin(), n.end()) != n.end()) throw std::invalid_argument("duplicate link");
    }
    for (std::size_t h = 0; h < host_switch_.size(); ++h) {
      const SwitchId s = host_switch_[h];
      if (s < 0 || s >= num_switches_) throw std::invalid_argument("host attached to unknown switch");
      hosts_[static_cast<std::size_t>(s)].push_back(static_cast<HostId>(h));
    }
  }

  int num_switches_ = 0;
  std::vector<SwitchLink> links_;
  std::vector<SwitchId> host_switch_;
  std::vector<int> table_capacity_;
  double host_link_capacity_ = 0.0;
  std::vector<std::vector<SwitchId>> neighbors_;
  std::vector<std::vector<HostId>> hosts_;
};

struct TopologyParams {
  int n_switches = 12;
  int ba_m = 1;
  int hosts_per_switch = 3;
  int table_capacity = 1'000'000;  // effectively unlimited until a sweep sets it
  double link_capacity = 1e9;
  double host_link_capacity = 1e9;
};

// Barabasi-Albert preferential attachment: a clique of min(n, m+1) seed
// switches, then every new switch links to m distinct existing switches
// chosen with probability proportional to their degree.
inline Topology generate_topology(const TopologyParams& p, std::uint64_t seed) {
  if (p.n_switches < 1 || p.ba_m < 1 || p.n_switches < p.ba_m) throw std::invalid_argument("need n_switches >= ba_m >= 1");
  if (p.hosts_per_switch < 0) throw std::invalid_argument("negative hosts_per_switch");
  std::mt19937_64 rng(seed);
  std::vector<SwitchLink> links;
  std::vector<SwitchId> endpoints;  // one entry per link endpoint
  const int seed_nodes = std::min(p.n_switches, p.ba_m + 1);
  for (int a = 0; a < seed_nodes; ++a) {
    for (int b = a + 1; b < seed_nodes; ++b) {
      links.push_back({a, b, p.link_capacity});
      endpoints.push_back(a);
      endpoints.push_back(b);
    }
  }
  for (int v = seed_nodes; v < p.n_switches; ++v) {
    std::set<SwitchId> targets;
    while (static_cast<int>(targets.size()) < p.ba_m) {
      const auto k = std::uniform_int_distribution<std::size_t>(0, endpoints.size() - 1)(rng);
      targets.insert(endpoints[k]);
    }
    for (SwitchId t : targets) {
      links.push_back({t, v, p.link_capacity});
      endpoints.push_back(t);
      endpoints.push_back(v);
    }
  }
  std::vector<SwitchId> host_switch;
  for (int s = 0; s < p.n_switches; ++s) {
    for (int h = 0; h < p.hosts_per_switch; ++h) host_switch.push_back(s);
  }
  return Topology(p.n_switches, std::move(links), std::move(host_switch),
                  std::vector<int>(static_cast<std::size_t>(p.n_switches), p.table_capacity), p.host_link_capacity);
}

}  // namespace fdsim
