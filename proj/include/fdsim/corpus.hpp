#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>

#include "fdsim/scenario.hpp"

namespace fdsim {

// Parameter ranges of the default scenario corpus. Each scenario draws its own
// parameters uniformly from these ranges.
struct CorpusRanges {
  int switches_min = 10, switches_max = 16;
  int ba_m_min = 1, ba_m_max = 2;
  int hosts_min = 2, hosts_max = 4;
  int pairs_min = 20'000, pairs_max = 30'000;
  double iat_scale_min = 0.35, iat_scale_max = 0.5;
  int bneck_min = 1, bneck_max = 3;
  double intensity_min = 150.0, intensity_max = 300.0;
  double duration_min = 20.0, duration_max = 60.0;
  int hotspots_min = 0, hotspots_max = 2;

  void validate() const {
    auto ordered = [](double lo, double hi) { return lo <= hi; };
    if (!ordered(switches_min, switches_max) || !ordered(ba_m_min, ba_m_max) || !ordered(hosts_min, hosts_max) ||
        !ordered(pairs_min, pairs_max) || !ordered(iat_scale_min, iat_scale_max) || !ordered(bneck_min, bneck_max) ||
        !ordered(intensity_min, intensity_max) || !ordered(duration_min, duration_max) ||
        !ordered(hotspots_min, hotspots_max))
      throw std::invalid_argument("corpus range with min > max");
    if (switches_min < 1 || ba_m_min < 1 || hosts_min < 1 || intensity_min <= 100.0)
      throw std::invalid_argument("corpus range outside the generator's domain");
  }
};

struct CorpusEntry {
  int index = 0;
  std::uint64_t seed = 0;
  TopologyParams topology;
  ScenarioParams params;
};

inline CorpusEntry corpus_entry(const CorpusRanges& r, std::uint64_t master_seed, int index) {
  r.validate();
  CorpusEntry e;
  e.index = index;
  e.seed = derive_seed(master_seed, 1000 + static_cast<std::uint64_t>(index));
  std::mt19937_64 rng(derive_seed(e.seed, 99));
  auto uni = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
  auto real = [&](double lo, double hi) { return lo == hi ? lo : std::uniform_real_distribution<double>(lo, hi)(rng); };
  e.topology.n_switches = uni(r.switches_min, r.switches_max);
  e.topology.ba_m = std::min(uni(r.ba_m_min, r.ba_m_max), std::max(1, e.topology.n_switches - 1));
  e.topology.hosts_per_switch = uni(r.hosts_min, r.hosts_max);
  e.params.n_pairs = uni(r.pairs_min, r.pairs_max);
  e.params.n_iat_scale = real(r.iat_scale_min, r.iat_scale_max);
  e.params.n_bneck = uni(r.bneck_min, r.bneck_max);
  e.params.n_bneck_intensity = real(r.intensity_min, r.intensity_max);
  e.params.n_bneck_duration = real(r.duration_min, r.duration_max);
  e.params.n_hs = uni(r.hotspots_min, r.hotspots_max);
  return e;
}

inline Scenario generate_corpus_scenario(const CorpusRanges& r, std::uint64_t master_seed, int index) {
  const CorpusEntry e = corpus_entry(r, master_seed, index);
  return generate_scenario(e.topology, e.params, e.seed);
}

}  // namespace fdsim
