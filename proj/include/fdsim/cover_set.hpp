#pragma once

#include <algorithm>
#include <span>
#include <vector>

#include "fdsim/flow_rule.hpp"
#include "fdsim/region.hpp"

namespace fdsim {

struct CoverSet {
  std::vector<RuleId> rules;  // in walk order
  // Packets whose winning rule is in `rules`; the traffic the aggregation
  // redirect has to carry to the remote switch.
  Region redirect;
  // True when the single aggregation match already contains `redirect`.
  bool within_aggregation_match = true;
};

// Conflict-free cover set of an aggregation match with respect to a rule
// table. Rules are walked in precedence order (priority descending, install
// time, id); a rule joins when the aggregation priority is at least its own
// and it meets the evolving aggregation region, which is then updated to the
// symmetric remainder of both regions. Rules with id kDefaultRuleId are
// skipped.
inline CoverSet cover_set(const Match& agg_match, int agg_priority, std::span<const FlowRule> rules,
                          const Domain& domain) {
  std::vector<const FlowRule*> sorted;
  sorted.reserve(rules.size());
  for (const FlowRule& f : rules) {
    if (f.id != kDefaultRuleId) sorted.push_back(&f);
  }
  std::stable_sort(sorted.begin(), sorted.end(),
                   [](const FlowRule* a, const FlowRule* b) { return rule_precedes(*a, *b); });

  CoverSet out;
  out.redirect = Region(domain);
  Region z_agg(domain, agg_match);
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const FlowRule& f = *sorted[i];
    if (agg_priority < f.priority) continue;
    const Region z_i(domain, f.match);
    Region z_int = intersect(z_agg, f.match);
    if (z_int.empty()) continue;
    out.rules.push_back(f.id);
    z_agg = region_update(z_agg, z_i, z_int);

    // Effective region of f: its match minus everything ranked before it.
    Region::Term eff{f.match, {}};
    for (std::size_t k = 0; k < i; ++k) {
      if (auto o = intersect_cubes(f.match, sorted[k]->match)) eff.excluded.push_back(*o);
    }
    out.redirect.add_term(std::move(eff));
  }
  out.within_aggregation_match = subset_of(out.redirect, Region(domain, agg_match));
  return out;
}

}  // namespace fdsim
