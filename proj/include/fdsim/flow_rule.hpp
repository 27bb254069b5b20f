#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>

#include "fdsim/match.hpp"

namespace fdsim {

using RuleId = std::int64_t;
using SwitchId = int;
using Slot = int;

inline constexpr RuleId kDefaultRuleId = -1;

// One flow rule installed at one switch. Times are seconds; slots are the
// integer seconds [t, t+1).
struct FlowRule {
  RuleId id = 0;
  std::int64_t flow_id = 0;  // rules created for the same host pair share it
  Match match;
  int priority = 0;
  double install_time = 0.0;
  double remove_time = 0.0;
  double total_bits = 0.0;   // delta
  double bitrate = 1.0;      // b, bit/s
  SwitchId owner_switch = 0;
  bool reactive = true;
  std::optional<int> ingress_port;  // port reported by the packet_in that triggered the install
  int egress_port = -1;
  std::optional<int> template_hint;

  Slot install_slot() const { return static_cast<Slot>(std::floor(install_time)); }
  // One past the last active slot.
  Slot end_slot() const { return static_cast<Slot>(std::ceil(remove_time)); }

  bool active_in(Slot t) const { return t >= install_slot() && t < end_slot(); }
  bool installed_in(Slot t) const { return t == install_slot(); }

  // Traffic flows at `bitrate` from install until delta is transferred or the
  // rule is removed, whichever comes first.
  double transfer_end() const {
    const double duration = bitrate > 0.0 ? total_bits / bitrate : 0.0;
    return std::min(install_time + duration, remove_time);
  }

  // delta_{f,t}: bits processed by this rule within slot t.
  double bits_in_slot(Slot t) const {
    const double lo = std::max(static_cast<double>(t), install_time);
    const double hi = std::min(static_cast<double>(t) + 1.0, transfer_end());
    return hi > lo ? bitrate * (hi - lo) : 0.0;
  }

  void validate() const {
    if (!(install_time < remove_time)) throw std::invalid_argument("rule " + std::to_string(id) + ": install_time must precede remove_time");
    if (priority < 0) throw std::invalid_argument("rule " + std::to_string(id) + ": negative priority");
    if (total_bits < 0.0 || bitrate < 0.0) throw std::invalid_argument("rule " + std::to_string(id) + ": negative traffic");
  }
};

struct Activity {
  int active = 0;     // lambda^a
  int installed = 0;  // lambda^i
  friend bool operator==(const Activity&, const Activity&) = default;
};

inline Activity compute_activity(const FlowRule& f, Slot t) {
  return {f.active_in(t) ? 1 : 0, f.installed_in(t) ? 1 : 0};
}

// Total order used wherever rules are ranked: priority descending, then
// install time, then id.
inline bool rule_precedes(const FlowRule& a, const FlowRule& b) {
  if (a.priority != b.priority) return a.priority > b.priority;
  if (a.install_time != b.install_time) return a.install_time < b.install_time;
  return a.id < b.id;
}

}  // namespace fdsim
