#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include "fdsim/flow_rule.hpp"

namespace fdsim {

using TemplateId = int;

// Template 0 is d0, the rules that cannot be relocated.
inline constexpr TemplateId kUnrelocatableTemplate = 0;

struct DelegationTemplate {
  TemplateId id = 0;
  Match agg_match;
  int agg_priority = 0;
  std::vector<RuleId> members;  // rules linked to this template over the whole run
  bool relocatable = true;
};

struct TemplateDiagnostic {
  RuleId rule = 0;
  std::string reason;
};

struct TemplateSet {
  SwitchId switch_id = 0;
  // Index i holds template i; index 0 is d0 and ports map to port + 1.
  std::vector<DelegationTemplate> templates;
  std::vector<TemplateDiagnostic> diagnostics;

  static TemplateId for_port(int port) { return port + 1; }
};

// F_{d,t}: members of `d` that are active in slot t.
inline std::vector<RuleId> cover_set_at(const DelegationTemplate& d, const std::map<RuleId, const FlowRule*>& by_id,
                                        Slot t) {
  std::vector<RuleId> out;
  for (RuleId id : d.members) {
    auto it = by_id.find(id);
    if (it != by_id.end() && it->second->active_in(t)) out.push_back(id);
  }
  return out;
}

// Flow-to-ingress-port mapping: one template per physical port plus d0.
//  1. a rule matching one concrete in_port joins that port's template;
//  2. a reactive rule with wildcard in_port joins the port its packet_in
//     reported;
//  3. everything else (proactive, unknown port) lands in d0.
// Conflicting evidence (match port vs. logged port, or out-of-range port)
// also lands in d0 and is reported.
inline TemplateSet derive_templates(SwitchId sw, int num_ports, std::span<const FlowRule> rules,
                                    const std::map<RuleId, int>& packet_in_log, int agg_priority = 0) {
  TemplateSet out;
  out.switch_id = sw;
  out.templates.resize(static_cast<std::size_t>(num_ports) + 1);
  out.templates[0].id = kUnrelocatableTemplate;
  out.templates[0].relocatable = false;
  out.templates[0].agg_priority = agg_priority;
  for (int p = 0; p < num_ports; ++p) {
    auto& d = out.templates[static_cast<std::size_t>(TemplateSet::for_port(p))];
    d.id = TemplateSet::for_port(p);
    d.agg_match = Match{p, kAny, kAny};
    d.agg_priority = agg_priority;
  }

  auto in_range = [num_ports](int p) { return p >= 0 && p < num_ports; };
  for (const FlowRule& f : rules) {
    if (f.id == kDefaultRuleId) continue;
    std::optional<int> logged;
    if (auto it = packet_in_log.find(f.id); it != packet_in_log.end()) logged = it->second;

    TemplateId target = kUnrelocatableTemplate;
    if (f.match.in_port != kAny) {
      if (!in_range(f.match.in_port)) {
        out.diagnostics.push_back({f.id, "in_port outside switch ports"});
      } else if (logged && *logged != f.match.in_port) {
        out.diagnostics.push_back({f.id, "match in_port contradicts packet_in port"});
      } else {
        target = TemplateSet::for_port(f.match.in_port);
      }
    } else if (f.reactive && logged) {
      if (in_range(*logged)) {
        target = TemplateSet::for_port(*logged);
      } else {
        out.diagnostics.push_back({f.id, "packet_in port outside switch ports"});
      }
    }
    out.templates[static_cast<std::size_t>(target)].members.push_back(f.id);
  }
  return out;
}

}  // namespace fdsim
