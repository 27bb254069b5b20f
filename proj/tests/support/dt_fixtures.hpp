#pragma once

#include <algorithm>
#include <cmath>
#include <deque>
#include <map>
#include <random>
#include <vector>

#include "fdsim/dt_select.hpp"

namespace fdsim::testing {

// Random DT-Select problem with its own rule storage.
struct DtFixture {
  std::deque<FlowRule> storage;
  DtProblem problem;
};

inline DtFixture random_dt_fixture(std::mt19937_64& rng, int max_templates, int max_horizon, bool with_history = true) {
  DtFixture fx;
  auto& p = fx.problem;
  auto uni = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
  auto real = [&](double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); };
  p.t1 = uni(40, 60);
  p.horizon = uni(1, max_horizon);
  const int n_templates = uni(1, max_templates);
  RuleId next = 0;
  int baseline0 = 0;
  for (int d = 0; d < n_templates; ++d) {
    DtTemplateInput in;
    in.id = d + 1;
    in.history_selected = with_history && uni(0, 1) == 1;
    const int n_rules = uni(0, 8);
    for (int i = 0; i < n_rules; ++i) {
      FlowRule f;
      f.id = next++;
      f.install_time = p.t1 - 5 + real(0.0, p.horizon + 7.0);
      f.remove_time = f.install_time + real(0.5, 10.0);
      f.total_bits = std::floor(real(1.0, 5000.0));
      f.bitrate = std::max(1.0, std::round(std::sqrt(f.total_bits)));
      fx.storage.push_back(f);
      in.rules.push_back(&fx.storage.back());
    }
    if (in.history_selected) {
      const int n_hist = uni(0, 6);
      for (int i = 0; i < n_hist; ++i) {
        FlowRule f;
        f.id = next++;
        f.install_time = p.t1 - real(1.0, 30.0);
        f.remove_time = f.install_time + real(0.5, 35.0);
        f.total_bits = std::floor(real(1.0, 5000.0));
        f.bitrate = std::max(1.0, std::round(std::sqrt(f.total_bits)));
        fx.storage.push_back(f);
        in.history_rules.push_back(&fx.storage.back());
        in.rules.push_back(&fx.storage.back());
      }
    }
    baseline0 += static_cast<int>(in.rules.size());
    p.templates.push_back(std::move(in));
  }
  p.backflow_reserve = uni(0, 2);
  for (int k = 0; k < p.horizon; ++k) p.baseline.push_back(baseline0 / 2 + uni(0, 10) + 3 * k);
  p.capacity = std::max(1, p.baseline[0] - uni(-3, 8));
  return fx;
}

// Independent re-evaluation of a held selection straight from the rules:
// replay each selected template over the horizon and count what has been
// moved off the switch in every slot.
inline std::vector<int> replay_utilization(const DtProblem& p, const std::vector<TemplateId>& selected) {
  std::vector<int> util(p.baseline.begin(), p.baseline.end());
  if (selected.empty()) return util;
  for (int k = 0; k < p.horizon; ++k) util[k] += p.backflow_reserve;
  for (const auto& d : p.templates) {
    if (std::find(selected.begin(), selected.end(), d.id) == selected.end()) continue;
    int moved_new = 0;
    for (int k = 0; k < p.horizon; ++k) {
      const Slot t = p.t1 + k;
      for (const FlowRule* f : d.rules) {
        if (compute_activity(*f, t).installed) ++moved_new;
      }
      int moved_hist = 0;
      if (d.history_selected) {
        for (const FlowRule* f : d.history_rules) moved_hist += compute_activity(*f, t).active;
      }
      util[k] -= moved_new + moved_hist - 1;
    }
  }
  return util;
}

struct ReplayCoefficients {
  std::vector<int> u01, u11;
  int table01 = 0;
  double link01 = 0, link11 = 0;
  int ctrl01 = 0, ctrl10 = 0, ctrl11 = 0;
};

// Event replay: walk the install events of the horizon in time order and
// count what a controller would do in the three non-trivial history cases.
inline ReplayCoefficients replay_coefficients(const DtTemplateInput& d, Slot t1, int horizon) {
  std::multimap<double, const FlowRule*> events;
  for (const FlowRule* f : d.rules) events.emplace(f->install_time, f);
  ReplayCoefficients r;

  // Case 01: aggregation rule installed at t1, every new install redirected.
  r.table01 = 1;
  r.ctrl01 = 1;
  int moved = 0;
  for (int k = 0; k < horizon; ++k) {
    const Slot t = t1 + k;
    for (auto it = events.lower_bound(t); it != events.end() && it->first < t + 1; ++it) {
      ++moved;
      ++r.ctrl01;
      r.link01 += it->second->bits_in_slot(t);
    }
    r.u01.push_back(moved);
  }

  // Case 11: new installs as above plus the still-active history rules.
  moved = 0;
  for (int k = 0; k < horizon; ++k) {
    const Slot t = t1 + k;
    int hist = 0;
    if (d.history_selected) {
      for (const FlowRule* f : d.history_rules) {
        if (!compute_activity(*f, t).active) continue;
        ++hist;
        r.link11 += f->bits_in_slot(t);
      }
    }
    for (auto it = events.lower_bound(t); it != events.end() && it->first < t + 1; ++it) {
      ++moved;
      ++r.ctrl11;
      r.link11 += it->second->bits_in_slot(t);
    }
    r.u11.push_back(moved + hist);
  }

  // Case 10: aggregation rule removed, active history rules reinstalled.
  r.ctrl10 = 1;
  if (d.history_selected) {
    for (const FlowRule* f : d.history_rules) r.ctrl10 += compute_activity(*f, t1).active;
  }
  return r;
}

}  // namespace fdsim::testing
