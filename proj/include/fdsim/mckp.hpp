#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <utility>
#include <vector>

namespace fdsim {

// Multi-dimensional multiple-choice 0-1 knapsack, minimization: pick exactly
// one item per choice set so that the summed weight vector stays within the
// capacity vector componentwise and the summed cost is minimal.
struct MckpItem {
  double cost = 0.0;
  std::vector<double> weights;
};

struct MckpInstance {
  std::vector<std::vector<MckpItem>> choice_sets;
  std::vector<double> capacity;

  std::size_t dimensions() const { return capacity.size(); }

  void validate() const {
    for (std::size_t s = 0; s < choice_sets.size(); ++s) {
      if (choice_sets[s].empty()) throw std::invalid_argument("mckp: choice set " + std::to_string(s) + " is empty");
      for (const MckpItem& it : choice_sets[s]) {
        if (it.weights.size() != capacity.size())
          throw std::invalid_argument("mckp: weight vector dimension differs from capacity dimension");
        if (!std::isfinite(it.cost)) throw std::invalid_argument("mckp: non-finite cost");
      }
    }
  }
};

struct MckpSolution {
  std::vector<int> chosen;  // item index per choice set
  double objective = 0.0;
  bool feasible = false;
  bool optimal = false;  // search completed within the budget
  std::uint64_t nodes = 0;
};

inline constexpr double kFeasibilityTol = 1e-9;

namespace detail {

inline double tie_tol(double v) { return 1e-9 * std::max(1.0, std::abs(v)); }

inline bool within_capacity(const MckpInstance& inst, const std::vector<int>& chosen) {
  std::vector<double> load(inst.dimensions(), 0.0);
  for (std::size_t s = 0; s < chosen.size(); ++s) {
    const auto& w = inst.choice_sets[s][static_cast<std::size_t>(chosen[s])].weights;
    for (std::size_t d = 0; d < load.size(); ++d) load[d] += w[d];
  }
  for (std::size_t d = 0; d < load.size(); ++d) {
    if (load[d] > inst.capacity[d] + kFeasibilityTol) return false;
  }
  return true;
}

}  // namespace detail

// Sum of weights and cost of a selection, recomputed from scratch.
inline bool is_feasible_selection(const MckpInstance& inst, const std::vector<int>& chosen) {
  if (chosen.size() != inst.choice_sets.size()) return false;
  for (std::size_t s = 0; s < chosen.size(); ++s) {
    if (chosen[s] < 0 || static_cast<std::size_t>(chosen[s]) >= inst.choice_sets[s].size()) return false;
  }
  return detail::within_capacity(inst, chosen);
}

inline double selection_cost(const MckpInstance& inst, const std::vector<int>& chosen) {
  double c = 0.0;
  for (std::size_t s = 0; s < chosen.size(); ++s) c += inst.choice_sets[s][static_cast<std::size_t>(chosen[s])].cost;
  return c;
}

// Exhaustive enumeration in lexicographic order; the first optimum found wins ties.
inline MckpSolution solve_brute_force(const MckpInstance& inst, double max_combinations = 1e7) {
  inst.validate();
  double combos = 1.0;
  for (const auto& set : inst.choice_sets) combos *= static_cast<double>(set.size());
  if (combos > max_combinations) throw std::length_error("mckp brute force: too many combinations");

  const std::size_t n = inst.choice_sets.size();
  const std::size_t dims = inst.dimensions();
  MckpSolution best;
  best.objective = std::numeric_limits<double>::infinity();
  std::vector<int> cur(n, 0);
  std::vector<double> load(dims, 0.0);

  auto rec = [&](auto&& self, std::size_t s, double cost) -> void {
    if (s == n) {
      ++best.nodes;
      for (std::size_t d = 0; d < dims; ++d) {
        if (load[d] > inst.capacity[d] + kFeasibilityTol) return;
      }
      if (!best.feasible || cost < best.objective - detail::tie_tol(best.objective)) {
        best.feasible = true;
        best.objective = cost;
        best.chosen = cur;
      }
      return;
    }
    const auto& set = inst.choice_sets[s];
    for (std::size_t i = 0; i < set.size(); ++i) {
      cur[s] = static_cast<int>(i);
      for (std::size_t d = 0; d < dims; ++d) load[d] += set[i].weights[d];
      self(self, s + 1, cost + set[i].cost);
      for (std::size_t d = 0; d < dims; ++d) load[d] -= set[i].weights[d];
    }
  };
  rec(rec, 0, 0.0);
  best.optimal = true;
  if (!best.feasible) best.objective = 0.0;
  return best;
}

// Branch-and-bound. The bound is the per-set minimum cost completion plus,
// for each dimension the cheapest completion would overflow, the optimum of
// the LP relaxation of repairing that dimension alone (greedy over the lower
// convex hull of each set's cost/weight trade-offs). The maximum over
// dimensions is admissible. Ties within tolerance resolve to the
// lexicographically smallest choice vector, matching solve_brute_force.
class MckpSolver {
 public:
  using Clock = std::chrono::steady_clock;

  // node_limit 0 means unlimited. Unlike the time budget it stops the search at
  // the same point on every machine.
  explicit MckpSolver(std::chrono::milliseconds budget = std::chrono::milliseconds(10'000), std::uint64_t node_limit = 0)
      : budget_(budget), node_limit_(node_limit) {}

  MckpSolution solve(const MckpInstance& inst) {
    inst.validate();
    // Dimensions that no selection can overfill do not constrain the search.
    std::vector<std::size_t> binding;
    for (std::size_t d = 0; d < inst.dimensions(); ++d) {
      double worst = 0.0;
      for (const auto& set : inst.choice_sets) {
        double m = 0.0;
        for (const auto& it : set) m = std::max(m, it.weights[d]);
        worst += m;
      }
      if (worst > inst.capacity[d] + kFeasibilityTol) binding.push_back(d);
    }
    if (binding.size() == inst.dimensions()) return run(inst);
    MckpInstance reduced;
    for (std::size_t d : binding) reduced.capacity.push_back(inst.capacity[d]);
    for (const auto& set : inst.choice_sets) {
      std::vector<MckpItem> items;
      for (const auto& it : set) {
        MckpItem r{it.cost, {}};
        for (std::size_t d : binding) r.weights.push_back(it.weights[d]);
        items.push_back(std::move(r));
      }
      reduced.choice_sets.push_back(std::move(items));
    }
    return run(reduced);
  }

 private:
  MckpSolution run(const MckpInstance& inst) {
    inst_ = &inst;
    n_ = inst.choice_sets.size();
    dims_ = inst.dimensions();
    deadline_ = Clock::now() + budget_;
    timed_out_ = false;
    best_ = MckpSolution{};
    best_.objective = std::numeric_limits<double>::infinity();
    prepare();

    cur_.assign(n_, -1);
    load_.assign(dims_, 0.0);
    greedy_incumbent();
    search(0, 0.0);
    return finish();
  }

  struct Segment {
    double slope;  // extra cost per unit of weight removed
    double dw;
    double dc;
    std::size_t set;
  };

  void prepare() {
    const auto& sets = inst_->choice_sets;
    order_.assign(n_, {});
    for (std::size_t s = 0; s < n_; ++s) {
      const auto& items = sets[s];
      std::vector<int> keep;
      for (std::size_t j = 0; j < items.size(); ++j) {
        bool dominated = false;
        for (std::size_t i = 0; i < items.size() && !dominated; ++i) {
          if (i == j) continue;
          bool wle = true;
          for (std::size_t d = 0; d < dims_ && wle; ++d) wle = items[i].weights[d] <= items[j].weights[d];
          if (!wle) continue;
          if (items[i].cost < items[j].cost - detail::tie_tol(items[j].cost)) dominated = true;
          else if (i < j && items[i].cost <= items[j].cost) dominated = true;
        }
        if (!dominated) keep.push_back(static_cast<int>(j));
      }
      std::stable_sort(keep.begin(), keep.end(), [&](int a, int b) { return items[a].cost < items[b].cost; });
      order_[s] = std::move(keep);
    }

    // Cheapest item per set and per-dimension minimum weights.
    cmin_.assign(n_, 0.0);
    cmin_item_.assign(n_, 0);
    wmin_.assign(n_, std::vector<double>(dims_, 0.0));
    for (std::size_t s = 0; s < n_; ++s) {
      const auto& items = sets[s];
      int bi = order_[s].front();
      for (int i : order_[s]) {
        if (items[i].cost < items[bi].cost || (items[i].cost == items[bi].cost && i < bi)) bi = i;
      }
      cmin_item_[s] = bi;
      cmin_[s] = items[bi].cost;
      for (std::size_t d = 0; d < dims_; ++d) {
        double m = std::numeric_limits<double>::infinity();
        for (int i : order_[s]) m = std::min(m, items[i].weights[d]);
        wmin_[s][d] = m;
      }
    }
    suffix_cmin_.assign(n_ + 1, 0.0);
    suffix_wmin_.assign(n_ + 1, std::vector<double>(dims_, 0.0));
    suffix_wcheap_.assign(n_ + 1, std::vector<double>(dims_, 0.0));
    for (std::size_t s = n_; s-- > 0;) {
      suffix_cmin_[s] = suffix_cmin_[s + 1] + cmin_[s];
      for (std::size_t d = 0; d < dims_; ++d) {
        suffix_wmin_[s][d] = suffix_wmin_[s + 1][d] + wmin_[s][d];
        suffix_wcheap_[s][d] = suffix_wcheap_[s + 1][d] + sets[s][static_cast<std::size_t>(cmin_item_[s])].weights[d];
      }
    }

    // Lower hull segments per dimension, relative to each set's cheapest item.
    segments_.assign(dims_, {});
    for (std::size_t d = 0; d < dims_; ++d) {
      for (std::size_t s = 0; s < n_; ++s) {
        const auto& items = sets[s];
        const double w0 = items[static_cast<std::size_t>(cmin_item_[s])].weights[d];
        std::vector<std::pair<double, double>> pts;  // (dw, dc), dw > 0
        for (int i : order_[s]) {
          const double dw = w0 - items[i].weights[d];
          if (dw > 0.0) pts.emplace_back(dw, items[i].cost - cmin_[s]);
        }
        if (pts.empty()) continue;
        std::sort(pts.begin(), pts.end());
        // Lower convex hull starting from the origin.
        std::vector<std::pair<double, double>> hull{{0.0, 0.0}};
        for (const auto& p : pts) {
          while (hull.size() >= 2) {
            const auto& a = hull[hull.size() - 2];
            const auto& b = hull.back();
            const double cross = (b.first - a.first) * (p.second - a.second) - (b.second - a.second) * (p.first - a.first);
            if (cross <= 0.0) hull.pop_back(); else break;
          }
          if (p.first > hull.back().first) hull.push_back(p);
          else if (p.second < hull.back().second) hull.back() = p;
        }
        for (std::size_t k = 1; k < hull.size(); ++k) {
          const double dw = hull[k].first - hull[k - 1].first;
          const double dc = hull[k].second - hull[k - 1].second;
          if (dw <= 0.0) continue;
          segments_[d].push_back({dc / dw, dw, dc, s});
        }
      }
      std::stable_sort(segments_[d].begin(), segments_[d].end(),
                       [](const Segment& a, const Segment& b) { return a.slope < b.slope; });
    }
  }

  // Lower bound on the cost to complete sets [k, n) given the current load;
  // +inf when no completion can be feasible.
  double completion_bound(std::size_t k) const {
    double extra = 0.0;
    for (std::size_t d = 0; d < dims_; ++d) {
      const double cap = inst_->capacity[d] + kFeasibilityTol;
      if (load_[d] + suffix_wmin_[k][d] > cap) return std::numeric_limits<double>::infinity();
      double excess = load_[d] + suffix_wcheap_[k][d] - cap;
      if (excess <= 0.0) continue;
      double need = 0.0;
      for (const Segment& seg : segments_[d]) {
        if (seg.set < k) continue;
        if (seg.dw >= excess) {
          need += seg.slope * excess;
          excess = 0.0;
          break;
        }
        need += seg.dc;
        excess -= seg.dw;
      }
      // Remaining excess within tolerance of the hull end is rounding noise.
      if (excess > 1e-7) return std::numeric_limits<double>::infinity();
      extra = std::max(extra, need);
    }
    return suffix_cmin_[k] + extra;
  }

  // -1, 0, 1 comparing cur_[0..k) against the incumbent's prefix.
  int prefix_cmp(std::size_t k) const {
    if (!best_.feasible) return -1;
    for (std::size_t s = 0; s < k; ++s) {
      if (cur_[s] != best_.chosen[s]) return cur_[s] < best_.chosen[s] ? -1 : 1;
    }
    return 0;
  }

  void offer(double cost) {
    const double tol = detail::tie_tol(best_.objective);
    if (best_.feasible) {
      if (cost > best_.objective + tol) return;
      if (cost >= best_.objective - tol && !std::lexicographical_compare(cur_.begin(), cur_.end(), best_.chosen.begin(), best_.chosen.end()))
        return;
    }
    best_.feasible = true;
    best_.objective = cost;
    best_.chosen = cur_;
  }

  void greedy_incumbent() {
    double cost = 0.0;
    for (std::size_t s = 0; s < n_; ++s) {
      bool placed = false;
      for (int i : order_[s]) {
        const auto& it = inst_->choice_sets[s][static_cast<std::size_t>(i)];
        bool ok = true;
        for (std::size_t d = 0; d < dims_ && ok; ++d)
          ok = load_[d] + it.weights[d] + suffix_wmin_[s + 1][d] <= inst_->capacity[d] + kFeasibilityTol;
        if (!ok) continue;
        cur_[s] = i;
        for (std::size_t d = 0; d < dims_; ++d) load_[d] += it.weights[d];
        cost += it.cost;
        placed = true;
        break;
      }
      if (!placed) break;
      if (s + 1 == n_) offer(cost);
    }
    std::fill(cur_.begin(), cur_.end(), -1);
    std::fill(load_.begin(), load_.end(), 0.0);
  }

  bool out_of_time() {
    if (timed_out_) return true;
    ++best_.nodes;
    if (node_limit_ != 0 && best_.nodes > node_limit_) timed_out_ = true;
    else if ((best_.nodes & 1023u) == 0 && Clock::now() > deadline_) timed_out_ = true;
    return timed_out_;
  }

  void search(std::size_t k, double cost) {
    if (out_of_time()) return;
    if (k == n_) {
      for (std::size_t d = 0; d < dims_; ++d) {
        if (load_[d] > inst_->capacity[d] + kFeasibilityTol) return;
      }
      offer(cost);
      return;
    }
    const double lb = cost + completion_bound(k);
    if (!std::isfinite(lb)) return;
    if (best_.feasible) {
      const double tol = detail::tie_tol(best_.objective);
      if (lb > best_.objective + tol) return;
      if (lb >= best_.objective - tol && prefix_cmp(k) > 0) return;
    }
    const auto& items = inst_->choice_sets[k];
    for (int i : order_[k]) {
      const auto& it = items[static_cast<std::size_t>(i)];
      cur_[k] = i;
      for (std::size_t d = 0; d < dims_; ++d) load_[d] += it.weights[d];
      search(k + 1, cost + it.cost);
      for (std::size_t d = 0; d < dims_; ++d) load_[d] -= it.weights[d];
      cur_[k] = -1;
      if (timed_out_) return;
    }
  }

  MckpSolution finish() {
    best_.optimal = !timed_out_;
    if (!best_.feasible) {
      best_.objective = 0.0;
      best_.chosen.clear();
    }
    return best_;
  }

  std::chrono::milliseconds budget_;
  std::uint64_t node_limit_ = 0;
  Clock::time_point deadline_{};
  bool timed_out_ = false;
  const MckpInstance* inst_ = nullptr;
  std::size_t n_ = 0;
  std::size_t dims_ = 0;
  std::vector<std::vector<int>> order_;
  std::vector<double> cmin_;
  std::vector<int> cmin_item_;
  std::vector<std::vector<double>> wmin_;
  std::vector<double> suffix_cmin_;
  std::vector<std::vector<double>> suffix_wmin_;
  std::vector<std::vector<double>> suffix_wcheap_;
  std::vector<std::vector<Segment>> segments_;
  std::vector<int> cur_;
  std::vector<double> load_;
  MckpSolution best_;
};

inline MckpSolution solve_exact(const MckpInstance& inst,
                                std::chrono::milliseconds time_budget = std::chrono::milliseconds(10'000),
                                std::uint64_t node_limit = 0) {
  return MckpSolver(time_budget, node_limit).solve(inst);
}

}  // namespace fdsim
