#pragma once

#include <algorithm>
#include <utility>
#include <vector>

#include "fdsim/match.hpp"

namespace fdsim {

// A set of packets over a finite universe, stored as a union of terms where
// each term is a cube minus a list of excluded cubes. Membership is the only
// semantics; terms are only canonicalized by region_update on enumerable
// domains (see from_mask). Emptiness is decided exactly by
// splitting on the concrete values mentioned in the exclusions.
class Region {
 public:
  struct Term {
    Match cube;
    std::vector<Match> excluded;
  };

  Region() = default;
  explicit Region(Domain domain) : domain_(domain) {}
  Region(Domain domain, const Match& cube) : domain_(domain) { terms_.push_back({cube, {}}); }

  const Domain& domain() const { return domain_; }
  const std::vector<Term>& terms() const { return terms_; }

  bool contains(const Packet& z) const {
    for (const Term& t : terms_) {
      if (!t.cube.matches(z)) continue;
      bool excluded = false;
      for (const Match& e : t.excluded) {
        if (e.matches(z)) {
          excluded = true;
          break;
        }
      }
      if (!excluded) return true;
    }
    return false;
  }

  bool empty() const {
    for (const Term& t : terms_) {
      if (!term_empty(t)) return false;
    }
    return true;
  }

  std::size_t count() const {
    std::size_t n = 0;
    for_each_packet(domain_, [&](const Packet& z) { n += contains(z) ? 1 : 0; });
    return n;
  }

  void add_term(Term t) {
    if (!term_empty(t)) terms_.push_back(std::move(t));
  }

  // Drops empty terms and exclusions that cannot remove anything.
  void prune() {
    std::vector<Term> kept;
    kept.reserve(terms_.size());
    for (Term& t : terms_) {
      std::vector<Match> ex;
      for (const Match& e : t.excluded) {
        if (auto i = intersect_cubes(t.cube, e)) ex.push_back(*i);
      }
      t.excluded = std::move(ex);
      if (!term_empty(t)) kept.push_back(std::move(t));
    }
    terms_ = std::move(kept);
  }

  friend Region intersect(const Region& a, const Match& m) {
    Region out(a.domain_);
    for (const Term& t : a.terms_) {
      if (auto c = intersect_cubes(t.cube, m)) out.add_term({*c, t.excluded});
    }
    return out;
  }

  friend Region intersect(const Region& a, const Region& b) {
    Region out(a.domain_);
    for (const Term& ta : a.terms_) {
      for (const Term& tb : b.terms_) {
        auto c = intersect_cubes(ta.cube, tb.cube);
        if (!c) continue;
        Term t{*c, ta.excluded};
        t.excluded.insert(t.excluded.end(), tb.excluded.begin(), tb.excluded.end());
        out.add_term(std::move(t));
      }
    }
    return out;
  }

  friend Region unite(const Region& a, const Region& b) {
    Region out = a;
    for (const Term& t : b.terms_) out.terms_.push_back(t);
    return out;
  }

  // a \ m for a single cube.
  friend Region subtract(const Region& a, const Match& m) {
    Region out(a.domain_);
    for (const Term& t : a.terms_) {
      Term n = t;
      if (intersect_cubes(t.cube, m)) n.excluded.push_back(m);
      out.add_term(std::move(n));
    }
    return out;
  }

  // a \ b. For one term (d \ F) of b:  (c \ E) \ (d \ F) = (c \ (E + d)) U ((c & d & f) \ E) for f in F.
  friend Region subtract(const Region& a, const Region& b) {
    Region cur = a;
    for (const Term& tb : b.terms_) {
      Region next(a.domain_);
      for (const Term& ta : cur.terms_) {
        auto overlap = intersect_cubes(ta.cube, tb.cube);
        if (!overlap) {
          next.terms_.push_back(ta);
          continue;
        }
        Term outside = ta;
        outside.excluded.push_back(*overlap);
        next.add_term(std::move(outside));
        for (const Match& f : tb.excluded) {
          if (auto kept = intersect_cubes(*overlap, f)) next.add_term({*kept, ta.excluded});
        }
      }
      cur = std::move(next);
    }
    return cur;
  }

  friend bool subset_of(const Region& a, const Region& b) { return subtract(a, b).empty(); }

  // Membership of every packet of the domain, indexed in_port-major.
  std::vector<char> mask() const {
    const int n[3] = {domain_.size(Field::kInPort), domain_.size(Field::kSrc), domain_.size(Field::kDst)};
    std::vector<char> bits(domain_.universe_size(), 0);
    std::vector<char> term(bits.size());
    auto paint = [&](const Match& m, std::vector<char>& dst, char v) {
      for (int a = 0; a < n[0]; ++a) {
        if (!m.is_wildcard(Field::kInPort) && m.in_port != a) continue;
        for (int b = 0; b < n[1]; ++b) {
          if (!m.is_wildcard(Field::kSrc) && m.src != b) continue;
          const std::size_t row = (static_cast<std::size_t>(a) * n[1] + b) * n[2];
          if (m.is_wildcard(Field::kDst)) {
            std::fill(dst.begin() + row, dst.begin() + row + n[2], v);
          } else if (m.dst >= 0 && m.dst < n[2]) {
            dst[row + m.dst] = v;
          }
        }
      }
    };
    for (const Term& t : terms_) {
      if (t.excluded.empty()) {
        paint(t.cube, bits, 1);
        continue;
      }
      std::fill(term.begin(), term.end(), 0);
      paint(t.cube, term, 1);
      for (const Match& e : t.excluded) {
        if (auto i = intersect_cubes(t.cube, e)) paint(*i, term, 0);
      }
      for (std::size_t k = 0; k < bits.size(); ++k) bits[k] |= term[k];
    }
    return bits;
  }

  // The packets set in `bits` (see mask()), as disjoint cubes without
  // exclusions. Boxes are split field by field until uniform.
  static Region from_mask(const Domain& domain, const std::vector<char>& bits) {
    const int n0 = domain.size(Field::kInPort), n1 = domain.size(Field::kSrc), n2 = domain.size(Field::kDst);
    Region out(domain);
    if (n0 <= 0 || n1 <= 0 || n2 <= 0) return out;
    const int sizes[3] = {n0, n1, n2};
    auto count = [&](const int (&fixed)[3]) {
      std::size_t k = 0;
      for (int a = 0; a < n0; ++a) {
        if (fixed[0] != kAny && fixed[0] != a) continue;
        for (int b = 0; b < n1; ++b) {
          if (fixed[1] != kAny && fixed[1] != b) continue;
          for (int c = 0; c < n2; ++c) {
            if (fixed[2] != kAny && fixed[2] != c) continue;
            k += bits[(static_cast<std::size_t>(a) * n1 + b) * n2 + c];
          }
        }
      }
      return k;
    };
    auto split = [&](auto&& self, int (&fixed)[3], int depth) -> void {
      std::size_t box = 1;
      for (int f = 0; f < 3; ++f) box *= fixed[f] == kAny ? static_cast<std::size_t>(sizes[f]) : 1;
      const std::size_t k = count(fixed);
      if (k == 0) return;
      if (k == box) {
        out.terms_.push_back({Match{fixed[0], fixed[1], fixed[2]}, {}});
        return;
      }
      for (int v = 0; v < sizes[depth]; ++v) {
        fixed[depth] = v;
        self(self, fixed, depth + 1);
      }
      fixed[depth] = kAny;
    };
    int fixed[3] = {kAny, kAny, kAny};
    split(split, fixed, 0);
    return out;
  }

 private:
  // A term is empty iff its cube is covered by the union of its exclusions.
  bool term_empty(const Term& t) const {
    if (!in_domain_nonempty(t.cube)) return true;
    std::vector<Match> ex;
    ex.reserve(t.excluded.size());
    for (const Match& e : t.excluded) {
      if (auto i = intersect_cubes(t.cube, e)) ex.push_back(*i);
    }
    return covered(t.cube, ex);
  }

  bool in_domain_nonempty(const Match& c) const {
    for (std::size_t i = 0; i < kNumFields; ++i) {
      const auto f = static_cast<Field>(i);
      if (domain_.size(f) <= 0) return false;
      const int v = c.field(f);
      if (v != kAny && (v < 0 || v >= domain_.size(f))) return false;
    }
    return true;
  }

  // `ex` holds cubes already intersected with `cube`.
  bool covered(const Match& cube, const std::vector<Match>& ex) const {
    if (ex.empty()) return false;
    for (const Match& e : ex) {
      if (e == cube) return true;
    }
    // Split on a field where the cube is open but some exclusion is concrete.
    std::size_t split = kNumFields;
    for (std::size_t i = 0; i < kNumFields && split == kNumFields; ++i) {
      const auto f = static_cast<Field>(i);
      if (!cube.is_wildcard(f)) continue;
      for (const Match& e : ex) {
        if (!e.is_wildcard(f)) {
          split = i;
          break;
        }
      }
    }
    if (split == kNumFields) return false;
    const auto f = static_cast<Field>(split);
    std::vector<int> values;
    for (const Match& e : ex) {
      if (!e.is_wildcard(f)) values.push_back(e.field(f));
    }
    std::sort(values.begin(), values.end());
    values.erase(std::unique(values.begin(), values.end()), values.end());
    auto covered_at = [&](int v) {
      const Match sub = cube.with(f, v);
      std::vector<Match> next;
      for (const Match& e : ex) {
        if (auto i = intersect_cubes(sub, e)) next.push_back(*i);
      }
      return covered(sub, next);
    };
    for (int v : values) {
      if (v < 0 || v >= domain_.size(f)) continue;
      if (!covered_at(v)) return false;
    }
    // All values not mentioned by an exclusion behave alike; test one of them.
    int other = -1;
    for (int v = 0, k = 0; v < domain_.size(f); ++v) {
      while (k < static_cast<int>(values.size()) && values[k] < v) ++k;
      if (k < static_cast<int>(values.size()) && values[k] == v) continue;
      other = v;
      break;
    }
    return other < 0 || covered_at(other);
  }

  Domain domain_{};
  std::vector<Term> terms_;
};

inline Region intersect(const Match& a, const Match& b, const Domain& d) {
  Region out(d);
  if (auto c = intersect_cubes(a, b)) out.add_term({*c, {}});
  return out;
}

// (z_agg \ z_int) U (z_i \ z_int): the aggregation-region update of the cover-set walk.
// Universes up to this size are rebuilt by enumeration after each update;
// symbolic differences of many-term regions grow exponentially otherwise.
inline constexpr std::size_t kEnumerableUniverse = std::size_t{1} << 18;

inline Region region_update(const Region& z_agg, const Region& z_i, const Region& z_int) {
  if (z_agg.domain().universe_size() <= kEnumerableUniverse) {
    auto bits = z_agg.mask();
    const auto in_i = z_i.mask();
    const auto in_int = z_int.mask();
    for (std::size_t k = 0; k < bits.size(); ++k) bits[k] = (bits[k] | in_i[k]) & !in_int[k];
    return Region::from_mask(z_agg.domain(), bits);
  }
  Region out = unite(subtract(z_agg, z_int), subtract(z_i, z_int));
  out.prune();
  return out;
}

}  // namespace fdsim
