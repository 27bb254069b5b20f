#pragma once

#include <array>
#include <cstddef>
#include <functional>
#include <optional>
#include <ostream>
#include <stdexcept>

namespace fdsim {

// Header fields a match can constrain. Every field is either one concrete
// value of its finite domain or a full wildcard.
enum class Field : std::size_t { kInPort = 0, kSrc = 1, kDst = 2 };

inline constexpr std::size_t kNumFields = 3;
inline constexpr int kAny = -1;

// Sizes of the finite per-field value domains of one switch's packet universe.
struct Domain {
  std::array<int, kNumFields> sizes{1, 1, 1};

  static Domain of(int ports, int hosts) { return Domain{{ports, hosts, hosts}}; }

  int size(Field f) const { return sizes[static_cast<std::size_t>(f)]; }

  std::size_t universe_size() const {
    std::size_t n = 1;
    for (int s : sizes) n *= static_cast<std::size_t>(s);
    return n;
  }
};

struct Packet {
  int in_port = 0;
  int src = 0;
  int dst = 0;

  int field(Field f) const {
    switch (f) {
      case Field::kInPort: return in_port;
      case Field::kSrc: return src;
      case Field::kDst: return dst;
    }
    return 0;
  }

  friend bool operator==(const Packet&, const Packet&) = default;
};

struct Match {
  int in_port = kAny;
  int src = kAny;
  int dst = kAny;

  static Match any() { return {}; }

  int field(Field f) const {
    switch (f) {
      case Field::kInPort: return in_port;
      case Field::kSrc: return src;
      case Field::kDst: return dst;
    }
    return kAny;
  }

  Match with(Field f, int v) const {
    Match m = *this;
    switch (f) {
      case Field::kInPort: m.in_port = v; break;
      case Field::kSrc: m.src = v; break;
      case Field::kDst: m.dst = v; break;
    }
    return m;
  }

  bool is_wildcard(Field f) const { return field(f) == kAny; }

  bool matches(const Packet& z) const {
    for (std::size_t i = 0; i < kNumFields; ++i) {
      const auto f = static_cast<Field>(i);
      if (!is_wildcard(f) && field(f) != z.field(f)) return false;
    }
    return true;
  }

  // True when every packet matched by `other` is matched by this match.
  bool covers(const Match& other) const {
    for (std::size_t i = 0; i < kNumFields; ++i) {
      const auto f = static_cast<Field>(i);
      if (!is_wildcard(f) && field(f) != other.field(f)) return false;
    }
    return true;
  }

  friend bool operator==(const Match&, const Match&) = default;
};

inline bool matches_packet(const Match& m, const Packet& z) { return m.matches(z); }

// Cube intersection; nullopt when some field carries two distinct values.
inline std::optional<Match> intersect_cubes(const Match& a, const Match& b) {
  Match out;
  for (std::size_t i = 0; i < kNumFields; ++i) {
    const auto f = static_cast<Field>(i);
    const int va = a.field(f);
    const int vb = b.field(f);
    if (va == kAny) {
      out = out.with(f, vb);
    } else if (vb == kAny || va == vb) {
      out = out.with(f, va);
    } else {
      return std::nullopt;
    }
  }
  return out;
}

inline bool in_domain(const Match& m, const Domain& d) {
  for (std::size_t i = 0; i < kNumFields; ++i) {
    const auto f = static_cast<Field>(i);
    const int v = m.field(f);
    if (v != kAny && (v < 0 || v >= d.size(f))) return false;
  }
  return true;
}

// Calls fn(packet) for every packet of the universe, in lexicographic order.
template <typename Fn>
void for_each_packet(const Domain& d, Fn&& fn) {
  Packet z;
  for (z.in_port = 0; z.in_port < d.size(Field::kInPort); ++z.in_port)
    for (z.src = 0; z.src < d.size(Field::kSrc); ++z.src)
      for (z.dst = 0; z.dst < d.size(Field::kDst); ++z.dst) fn(z);
}

inline std::ostream& operator<<(std::ostream& os, const Match& m) {
  auto put = [&os](const char* name, int v) {
    os << name << '=';
    if (v == kAny) os << '*'; else os << v;
  };
  os << '(';
  put("in_port", m.in_port);
  os << ',';
  put("src", m.src);
  os << ',';
  put("dst", m.dst);
  return os << ')';
}

}  // namespace fdsim
