#pragma once
/// Shared fixtures for the test binaries: one geometry cache per process,
/// seeded samplers, and the truthful equilibrium scenario.

#include <cmath>
#include <random>
#include <utility>
#include <vector>

#include "hcg/sim.hpp"

namespace hcg::test {

inline GeometryCache& cache() {
  static GeometryCache c;
  return c;
}

inline std::shared_ptr<const Geometry> geo(double mu, double l) { return cache().get(validate_params(mu, l)); }

/// Parameter pairs (mu1 > mu2, shared l) used by the property suites, all
/// inside the supported parameter domain.
inline const std::vector<std::pair<GameParams, GameParams>>& param_pairs() {
  static const std::vector<std::pair<GameParams, GameParams>> v{
      {{0.3, 0.5}, {0.2, 0.5}}, {{0.4, 0.5}, {0.25, 0.5}}, {{0.5, 0.3}, {0.35, 0.3}},
      {{0.35, 0.7}, {0.25, 0.7}}, {{0.45, 0.4}, {0.3, 0.4}},
  };
  return v;
}

/// Both players at equilibrium under p, evader at its true bound.
inline Scenario equilibrium(const GameParams& p, RelState s0, double dt = 1e-3, double t_max = 100.0) {
  Scenario sc;
  sc.params_truth = p;
  sc.params_low = p;
  sc.initial_rel = s0;
  sc.evader_policy = {EvaderPolicy::Kind::Truthful, p.mu, p.mu};
  sc.pursuer_mode = PursuerMode::Informed;
  sc.dt = dt;
  sc.t_max = t_max;
  return sc;
}

/// True for points whose secondary lookup falls inside the characteristic
/// mesh. The thin strip along the outer side of the barrier near the BUP is
/// not reached by any stored secondary characteristic.
inline bool covered(const Geometry& g, RelState s) {
  const Region r = g.classify(s);
  if (r.tag != RegionTag::Secondary) return true;
  return g.secondary_lookup({std::abs(s.x), s.y}).exact;
}

/// Rejection sampler over a box; `accept` filters points.
template <class Accept>
std::vector<RelState> sample(std::mt19937_64& rng, size_t n, double x0, double x1, double y0, double y1,
                             Accept&& accept, size_t max_tries = 2'000'000) {
  std::uniform_real_distribution<double> X(x0, x1), Y(y0, y1);
  std::vector<RelState> out;
  for (size_t k = 0; k < max_tries && out.size() < n; ++k) {
    const RelState q{X(rng), Y(rng)};
    if (accept(q)) out.push_back(q);
  }
  return out;
}

}  // namespace hcg::test
