#pragma once

#include <vector>

#include "fdsim/scenario.hpp"

namespace fdsim::testing {

// Hand-built scenario: switches, links and hosts are given explicitly and
// rules are added one at a time.
struct ScenarioBuilder {
  Scenario sc;
  std::vector<SwitchLink> links;
  std::vector<SwitchId> hosts;
  std::vector<int> caps;
  int n = 0;

  ScenarioBuilder(int switches, std::vector<SwitchLink> l, std::vector<SwitchId> host_switch, std::vector<int> capacities)
      : links(std::move(l)), hosts(std::move(host_switch)), caps(std::move(capacities)), n(switches) {}

  // A reactive rule whose packet_in arrived on `in_port`.
  ScenarioBuilder& rule(SwitchId owner, int in_port, int egress, double install, double remove, double bits = 1000.0,
                        double rate = 100.0) {
    FlowRule f;
    f.id = static_cast<RuleId>(sc.rules.size());
    f.flow_id = f.id;
    f.match = Match{kAny, static_cast<int>(f.id), 0};
    f.priority = 1;
    f.install_time = install;
    f.remove_time = remove;
    f.total_bits = bits;
    f.bitrate = rate;
    f.owner_switch = owner;
    f.reactive = true;
    f.ingress_port = in_port;
    f.egress_port = egress;
    sc.rules.push_back(f);
    return *this;
  }

  ScenarioBuilder& rules(int count, SwitchId owner, int in_port, int egress, double install, double remove) {
    for (int i = 0; i < count; ++i) rule(owner, in_port, egress, install, remove);
    return *this;
  }

  Scenario build() {
    sc.topology = Topology(n, links, hosts, caps, 1e9);
    return sc;
  }
};

}  // namespace fdsim::testing
