#pragma once

// Packet-level forwarding oracle for cover-set checks. Independent of the
// region algebra: it only evaluates single matches against packets.

#include <optional>
#include <span>
#include <unordered_set>
#include <vector>

#include "fdsim/cover_set.hpp"

namespace fdsim::testing {

// Highest-ranked rule of `rules` matching z, or nullopt.
inline std::optional<RuleId> winner(std::span<const FlowRule> rules, const Packet& z) {
  const FlowRule* best = nullptr;
  for (const FlowRule& f : rules) {
    if (f.id == kDefaultRuleId || !f.match.matches(z)) continue;
    if (best == nullptr || rule_precedes(f, *best)) best = &f;
  }
  if (best == nullptr) return std::nullopt;
  return best->id;
}

struct CoverViolation {
  Packet packet;
  std::optional<RuleId> before;
  std::optional<RuleId> after;
};

// After delegation the delegator keeps F \ CS plus a redirect at agg_priority
// (which beats every kept rule of priority <= agg_priority); redirected
// packets are processed by the remote copy of CS.
inline std::vector<CoverViolation> check_cover_set(std::span<const FlowRule> rules, const CoverSet& cs,
                                                   int agg_priority, const Domain& domain) {
  std::unordered_set<RuleId> in_cs(cs.rules.begin(), cs.rules.end());
  std::vector<FlowRule> kept;
  std::vector<FlowRule> remote;
  for (const FlowRule& f : rules) (in_cs.count(f.id) ? remote : kept).push_back(f);

  std::vector<CoverViolation> out;
  for_each_packet(domain, [&](const Packet& z) {
    const auto before = winner(rules, z);
    const bool redirected = cs.redirect.contains(z);
    // Rule "processes the packet" condition 1: CS winners must be redirected.
    if (before && in_cs.count(*before) && !redirected) {
      out.push_back({z, before, std::nullopt});
      return;
    }
    std::optional<RuleId> after;
    const auto local = winner(kept, z);
    bool local_beats_redirect = false;
    if (local) {
      for (const FlowRule& f : kept) {
        if (f.id == *local) local_beats_redirect = f.priority > agg_priority;
      }
    }
    if (redirected && !local_beats_redirect) {
      after = winner(remote, z);
    } else {
      after = local;
    }
    if (after != before) out.push_back({z, before, after});
  });
  return out;
}

}  // namespace fdsim::testing
