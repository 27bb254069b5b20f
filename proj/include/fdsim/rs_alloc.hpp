#pragma once

#include <algorithm>
#include <chrono>
#include <map>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <tuple>
#include <utility>
#include <vector>

#include "fdsim/mckp.hpp"
#include "fdsim/templates.hpp"
#include "fdsim/topology.hpp"

namespace fdsim {

// A template selected by DT-Select together with its per-slot demands.
struct SelectedTemplate {
  SwitchId delegator = 0;
  TemplateId template_id = 0;
  std::vector<int> selected;  // per horizon slot, 0/1
  std::vector<int> table;     // relocated rules per horizon slot
  std::vector<double> link;   // delegated bits per horizon slot
  std::optional<SwitchId> previous_remote;
};

struct AllocationJob {
  int id = 0;
  SwitchId delegator = 0;
  TemplateId template_id = 0;
  int first = 0;              // index of the first slot of T_j within the horizon
  std::vector<int> table;     // u^Table_{j,t}, t in T_j
  std::vector<double> link;   // u^Link_{j,t}, t in T_j
  std::optional<SwitchId> previous_remote;

  int length() const { return static_cast<int>(table.size()); }
};

// J_T with T_j = the consecutive run starting at the first selected slot.
inline std::vector<AllocationJob> build_jobs(const std::vector<SelectedTemplate>& sel, int horizon) {
  std::vector<AllocationJob> jobs;
  for (const auto& s : sel) {
    if (static_cast<int>(s.selected.size()) != horizon || static_cast<int>(s.table.size()) != horizon ||
        static_cast<int>(s.link.size()) != horizon)
      throw std::invalid_argument("selection vectors must cover the horizon");
    auto it = std::find(s.selected.begin(), s.selected.end(), 1);
    if (it == s.selected.end()) continue;
    AllocationJob j;
    j.id = static_cast<int>(jobs.size());
    j.delegator = s.delegator;
    j.template_id = s.template_id;
    j.first = static_cast<int>(it - s.selected.begin());
    j.previous_remote = s.previous_remote;
    for (int k = j.first; k < horizon && s.selected[static_cast<std::size_t>(k)]; ++k) {
      j.table.push_back(s.table[static_cast<std::size_t>(k)]);
      j.link.push_back(s.link[static_cast<std::size_t>(k)]);
    }
    jobs.push_back(std::move(j));
  }
  return jobs;
}

// Committed load over the horizon, excluding every job being allocated.
struct RsState {
  const Topology* topology = nullptr;
  Slot t1 = 0;
  int horizon = 1;
  std::vector<std::vector<double>> table_used;                      // [switch][k]
  std::map<std::pair<SwitchId, SwitchId>, std::vector<double>> link_used;  // directed, [k]

  RsState() = default;
  RsState(const Topology& topo, Slot first, int h)
      : topology(&topo),
        t1(first),
        horizon(h),
        table_used(static_cast<std::size_t>(topo.num_switches()), std::vector<double>(static_cast<std::size_t>(h), 0.0)) {}

  SwitchId backup() const { return topology->num_switches(); }

  double table_free(SwitchId r, int k) const {
    return topology->table_capacity(r) - table_used[static_cast<std::size_t>(r)][static_cast<std::size_t>(k)];
  }

  double link_load(SwitchId a, SwitchId b, int k) const {
    auto it = link_used.find({a, b});
    return it == link_used.end() ? 0.0 : it->second[static_cast<std::size_t>(k)];
  }

  double link_free(SwitchId a, SwitchId b, int k) const { return topology->link_capacity(a, b) - link_load(a, b, k); }

  void add_link(SwitchId a, SwitchId b, int k, double v) {
    auto& row = link_used[{a, b}];
    if (row.empty()) row.assign(static_cast<std::size_t>(horizon), 0.0);
    row[static_cast<std::size_t>(k)] += v;
  }
};

// R_{j,t}: neighbors of the delegator that fit the job's table demand and
// whose link carries the detour in both directions. `k` indexes T_j.
inline std::vector<SwitchId> remote_set(const AllocationJob& j, const RsState& st, int k) {
  std::vector<SwitchId> out;
  const int h = j.first + k;
  const double tol = kFeasibilityTol;
  for (SwitchId r : st.topology->neighbors(j.delegator)) {
    if (j.table[static_cast<std::size_t>(k)] > st.table_free(r, h) + tol) continue;
    const double l = j.link[static_cast<std::size_t>(k)];
    if (l > st.link_free(j.delegator, r, h) + tol || l > st.link_free(r, j.delegator, h) + tol) continue;
    out.push_back(r);
  }
  return out;
}

enum class AssignmentMode { kStable, kFull };

struct RsConfig {
  AssignmentMode mode = AssignmentMode::kStable;
  double change_penalty = 1e6;      // per remote change, including against the previous period
  std::size_t max_full_assignments = 10'000;
  std::chrono::milliseconds budget{10'000};
  std::uint64_t node_limit = 250'000;  // keeps truncated solves reproducible
};

struct AllocationAssignment {
  std::vector<SwitchId> remotes;  // per slot of T_j
  bool backup = false;
  double cost = 0.0;              // before the BS penalty is applied
};

inline double assignment_cost(const AllocationJob& j, const RsState& st, const std::vector<SwitchId>& remotes,
                              const RsConfig& cfg) {
  double cost = 0.0;
  for (int k = 0; k < j.length(); ++k) {
    const SwitchId r = remotes[static_cast<std::size_t>(k)];
    const int h = j.first + k;
    const double load_factor = st.link_load(j.delegator, r, h) / st.topology->link_capacity(j.delegator, r);
    cost += j.link[static_cast<std::size_t>(k)] * (1.0 + load_factor);
    const std::optional<SwitchId> before = k == 0 ? j.previous_remote : std::optional<SwitchId>(remotes[k - 1]);
    if (before && *before != r) cost += cfg.change_penalty;
  }
  return cost;
}

// A_{j,T_j}. The all-backup assignment is always appended last. Full mode
// falls back to stable mode (and sets *downgraded) past the size guard.
inline std::vector<AllocationAssignment> enumerate_assignments(const AllocationJob& j, const RsState& st,
                                                               const RsConfig& cfg, bool* downgraded = nullptr) {
  std::vector<std::vector<SwitchId>> sets;
  for (int k = 0; k < j.length(); ++k) sets.push_back(remote_set(j, st, k));
  std::vector<AllocationAssignment> out;
  AssignmentMode mode = cfg.mode;
  if (downgraded) *downgraded = false;
  if (mode == AssignmentMode::kFull) {
    double product = 1.0;
    for (const auto& s : sets) product *= static_cast<double>(s.size());
    if (product > static_cast<double>(cfg.max_full_assignments)) {
      mode = AssignmentMode::kStable;
      if (downgraded) *downgraded = true;
    }
  }
  if (mode == AssignmentMode::kStable) {
    std::vector<SwitchId> common = sets.empty() ? std::vector<SwitchId>{} : sets[0];
    for (std::size_t k = 1; k < sets.size(); ++k) {
      std::vector<SwitchId> next;
      std::set_intersection(common.begin(), common.end(), sets[k].begin(), sets[k].end(), std::back_inserter(next));
      common = std::move(next);
    }
    for (SwitchId r : common) {
      AllocationAssignment a;
      a.remotes.assign(static_cast<std::size_t>(j.length()), r);
      out.push_back(std::move(a));
    }
  } else if (!sets.empty()) {
    std::vector<std::size_t> idx(sets.size(), 0);
    bool done = std::any_of(sets.begin(), sets.end(), [](const auto& s) { return s.empty(); });
    while (!done) {
      AllocationAssignment a;
      for (std::size_t k = 0; k < sets.size(); ++k) a.remotes.push_back(sets[k][idx[k]]);
      out.push_back(std::move(a));
      // Odometer, last slot fastest.
      std::size_t k = sets.size();
      for (;;) {
        if (k == 0) {
          done = true;
          break;
        }
        --k;
        if (++idx[k] < sets[k].size()) break;
        idx[k] = 0;
      }
    }
  }
  for (auto& a : out) a.cost = assignment_cost(j, st, a.remotes, cfg);
  AllocationAssignment bs;
  bs.backup = true;
  bs.remotes.assign(static_cast<std::size_t>(j.length()), st.backup());
  out.push_back(std::move(bs));
  return out;
}

struct RsAllocResult {
  std::vector<AllocationAssignment> chosen;  // per job
  std::vector<std::vector<double>> table_residual;  // [switch][k]
  std::map<std::pair<SwitchId, SwitchId>, std::vector<double>> link_residual;
  std::vector<int> backup_rules;  // per horizon slot
  double objective = 0.0;
  double backup_penalty = 0.0;
  bool optimal = true;
  int downgraded_jobs = 0;
  double modeling_ms = 0.0;
  double solving_ms = 0.0;
};

namespace detail {

struct UnionFind {
  std::vector<int> parent;
  explicit UnionFind(int n) : parent(static_cast<std::size_t>(n)) { std::iota(parent.begin(), parent.end(), 0); }
  int find(int x) {
    while (parent[static_cast<std::size_t>(x)] != x) x = parent[static_cast<std::size_t>(x)] = parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(x)])];
    return x;
  }
  void unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a != b) parent[static_cast<std::size_t>(std::max(a, b))] = std::min(a, b);
  }
};

// Capacity dimension key: kind 0 = table (r, r), kind 1 = directed link (a, b).
using ResourceKey = std::tuple<int, SwitchId, SwitchId, int>;

inline std::vector<std::pair<ResourceKey, double>> assignment_loads(const AllocationJob& j, const AllocationAssignment& a) {
  std::vector<std::pair<ResourceKey, double>> out;
  if (a.backup) return out;
  for (int k = 0; k < j.length(); ++k) {
    const SwitchId r = a.remotes[static_cast<std::size_t>(k)];
    const int h = j.first + k;
    out.push_back({{0, r, r, h}, static_cast<double>(j.table[static_cast<std::size_t>(k)])});
    out.push_back({{1, j.delegator, r, h}, j.link[static_cast<std::size_t>(k)]});
    out.push_back({{1, r, j.delegator, h}, j.link[static_cast<std::size_t>(k)]});
  }
  return out;
}

inline double resource_free(const RsState& st, const ResourceKey& key) {
  const auto& [kind, a, b, h] = key;
  return kind == 0 ? st.table_free(a, h) : st.link_free(a, b, h);
}

}  // namespace detail

// Penalty per backup rule-slot: larger than every non-backup cost combined,
// so BS is chosen only when no remote fits.
inline double backup_penalty_unit(const std::vector<std::vector<AllocationAssignment>>& options) {
  double total = 1.0;
  for (const auto& opts : options) {
    double worst = 0.0;
    for (const auto& a : opts) {
      if (!a.backup) worst = std::max(worst, a.cost);
    }
    total += worst;
  }
  return total;
}

inline double backup_cost(const AllocationJob& j, double unit) {
  return unit * (1.0 + std::accumulate(j.table.begin(), j.table.end(), 0.0));
}

inline MckpInstance build_rs_instance(const std::vector<AllocationJob>& jobs,
                                      const std::vector<std::vector<AllocationAssignment>>& options,
                                      const RsState& st, double unit, const std::vector<int>& members) {
  std::map<detail::ResourceKey, std::size_t> dims;
  std::vector<std::vector<std::vector<std::pair<detail::ResourceKey, double>>>> loads;
  for (int j : members) {
    loads.emplace_back();
    for (const auto& a : options[static_cast<std::size_t>(j)]) {
      loads.back().push_back(detail::assignment_loads(jobs[static_cast<std::size_t>(j)], a));
      for (const auto& [key, v] : loads.back().back()) dims.emplace(key, dims.size());
    }
  }
  MckpInstance inst;
  inst.capacity.assign(dims.size(), 0.0);
  // Clamped so the all-backup choice stays feasible on already overfull switches.
  for (const auto& [key, d] : dims) inst.capacity[d] = std::max(0.0, detail::resource_free(st, key));
  for (std::size_t m = 0; m < members.size(); ++m) {
    const auto& job = jobs[static_cast<std::size_t>(members[m])];
    const auto& opts = options[static_cast<std::size_t>(members[m])];
    std::vector<MckpItem> items;
    for (std::size_t i = 0; i < opts.size(); ++i) {
      MckpItem it;
      it.cost = opts[i].backup ? backup_cost(job, unit) : opts[i].cost;
      it.weights.assign(dims.size(), 0.0);
      for (const auto& [key, v] : loads[m][i]) it.weights[dims.at(key)] += v;
      items.push_back(std::move(it));
    }
    inst.choice_sets.push_back(std::move(items));
  }
  return inst;
}

// Allocation solved exactly, one knapsack per group of jobs that share a
// candidate remote switch or link.
inline RsAllocResult solve_rs_alloc(const std::vector<AllocationJob>& jobs, const RsState& st, const RsConfig& cfg = {}) {
  using Clock = std::chrono::steady_clock;
  auto ms = [](Clock::time_point t0) { return std::chrono::duration<double, std::milli>(Clock::now() - t0).count(); };
  auto t0 = Clock::now();
  RsAllocResult res;
  std::vector<std::vector<AllocationAssignment>> options;
  for (const auto& j : jobs) {
    bool down = false;
    options.push_back(enumerate_assignments(j, st, cfg, &down));
    res.downgraded_jobs += down ? 1 : 0;
  }
  const double unit = backup_penalty_unit(options);
  res.backup_penalty = unit;

  detail::UnionFind uf(static_cast<int>(jobs.size()));
  std::map<detail::ResourceKey, int> owner;
  for (std::size_t j = 0; j < jobs.size(); ++j) {
    for (const auto& a : options[j]) {
      for (const auto& [key, v] : detail::assignment_loads(jobs[j], a)) {
        auto [it, fresh] = owner.emplace(key, static_cast<int>(j));
        if (!fresh) uf.unite(it->second, static_cast<int>(j));
      }
    }
  }
  std::map<int, std::vector<int>> groups;
  for (std::size_t j = 0; j < jobs.size(); ++j) groups[uf.find(static_cast<int>(j))].push_back(static_cast<int>(j));
  res.modeling_ms += ms(t0);

  res.chosen.resize(jobs.size());
  for (const auto& [root, members] : groups) {
    t0 = Clock::now();
    const MckpInstance inst = build_rs_instance(jobs, options, st, unit, members);
    res.modeling_ms += ms(t0);
    t0 = Clock::now();
    MckpSolution sol = solve_exact(inst, cfg.budget, cfg.node_limit);
    res.solving_ms += ms(t0);
    res.optimal = res.optimal && sol.optimal;
    if (!sol.feasible) {
      // Cannot happen while backup assignments exist; keep everything on BS.
      sol.chosen.clear();
      for (int j : members) sol.chosen.push_back(static_cast<int>(options[static_cast<std::size_t>(j)].size()) - 1);
    }
    for (std::size_t m = 0; m < members.size(); ++m) {
      const auto j = static_cast<std::size_t>(members[m]);
      res.chosen[j] = options[j][static_cast<std::size_t>(sol.chosen[m])];
    }
  }

  t0 = Clock::now();
  res.backup_rules.assign(static_cast<std::size_t>(st.horizon), 0);
  res.table_residual.assign(st.table_used.size(), std::vector<double>(static_cast<std::size_t>(st.horizon), 0.0));
  for (std::size_t r = 0; r < st.table_used.size(); ++r)
    for (int h = 0; h < st.horizon; ++h) res.table_residual[r][static_cast<std::size_t>(h)] = st.table_free(static_cast<SwitchId>(r), h);
  for (const auto& l : st.topology->links()) {
    for (auto [a, b] : {std::pair{l.a, l.b}, std::pair{l.b, l.a}}) {
      auto& row = res.link_residual[{a, b}];
      for (int h = 0; h < st.horizon; ++h) row.push_back(st.link_free(a, b, h));
    }
  }
  for (std::size_t j = 0; j < jobs.size(); ++j) {
    const auto& job = jobs[j];
    const auto& a = res.chosen[j];
    res.objective += a.backup ? backup_cost(job, unit) : a.cost;
    for (int k = 0; k < job.length(); ++k) {
      const int h = job.first + k;
      if (a.backup) {
        res.backup_rules[static_cast<std::size_t>(h)] += job.table[static_cast<std::size_t>(k)];
        continue;
      }
      const SwitchId r = a.remotes[static_cast<std::size_t>(k)];
      res.table_residual[static_cast<std::size_t>(r)][static_cast<std::size_t>(h)] -= job.table[static_cast<std::size_t>(k)];
      res.link_residual[{job.delegator, r}][static_cast<std::size_t>(h)] -= job.link[static_cast<std::size_t>(k)];
      res.link_residual[{r, job.delegator}][static_cast<std::size_t>(h)] -= job.link[static_cast<std::size_t>(k)];
    }
  }
  res.modeling_ms += ms(t0);
  return res;
}

}  // namespace fdsim
