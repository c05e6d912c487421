#pragma once

// Shared models and hand-rolled generators for the test suites. Generators
// draw from a Philox stream so every property test is reproducible from its
// case index alone.

#include <cmath>
#include <cstdint>
#include <vector>

#include "lifshitz/lattice.hpp"
#include "lifshitz/model.hpp"
#include "lifshitz/philox.hpp"

namespace lifshitz::testing {

/// Breather with one repulsive bump, atom at lambda_minus; the model used by
/// the bounds and Lifshitz runs.
inline ModelSpec breather_model(int d = 1, double atom = 0.5) {
  ModelSpec m;
  m.d = d;
  m.site.kind = SiteKind::breather;
  m.site.bumps = {Bump{20.0, 0.4}};
  m.dist.kind = atom > 0 ? DistributionKind::two_point_plus_uniform : DistributionKind::uniform;
  m.dist.lambda_minus = 1.0;
  m.dist.lambda_plus = 2.0;
  m.dist.atom_mass_at_min = atom;
  return m;
}

inline ModelSpec alloy_model(int d = 1) {
  ModelSpec m;
  m.d = d;
  m.site.kind = SiteKind::alloy;
  m.site.bumps = {Bump{4.0, 0.45}};
  m.dist.kind = DistributionKind::uniform;
  m.dist.lambda_minus = 0.5;
  m.dist.lambda_plus = 1.5;
  return m;
}

inline ModelSpec free_model(int d = 1) {
  ModelSpec m;
  m.d = d;
  m.site.kind = SiteKind::alloy;
  m.site.bumps = {Bump{0.0, 0.4}};
  return m;
}

inline ModelSpec with_cosine(ModelSpec m, double amplitude) {
  m.vper.kind = PeriodicKind::cosine_sum;
  m.vper.amplitudes = {amplitude};
  return m;
}

struct Prepared {
  ModelSpec model;
  GroundStateData gs;
};

/// Standardized and energy-normalized model with its ground state, the form
/// every command works with.
inline Prepared prepare(const ModelSpec& raw, int n) {
  const ModelSpec s = standardize(raw);
  const GroundStateData g0 = periodic_ground_state(s, n);
  Prepared p;
  p.model = normalize_energy(s, g0.E0);
  p.gs = periodic_ground_state(p.model, n);
  return p;
}

/// Deterministic source for property tests: case c, draw k.
class Gen {
 public:
  explicit Gen(std::uint64_t test_id, std::uint64_t case_index)
      : rng_(test_id, Stream::test_data), case_(case_index) {}

  double uniform() { return rng_.uniform(case_, next_++); }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  int integer(int lo, int hi) {  // inclusive
    return lo + static_cast<int>(std::floor(uniform() * (hi - lo + 1)));
  }
  bool coin(double p = 0.5) { return uniform() < p; }

  std::vector<double> couplings(const DistributionSpec& dist, std::size_t count) {
    std::vector<double> out(count);
    for (auto& x : out) x = quantile(dist, uniform());
    return out;
  }

 private:
  CounterRng rng_;
  std::uint64_t case_;
  std::uint64_t next_ = 0;
};

}  // namespace lifshitz::testing
