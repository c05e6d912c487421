#include <benchmark/benchmark.h>

#include <vector>

#include "lifshitz/ids.hpp"
#include "lifshitz/lattice.hpp"
#include "lifshitz/model.hpp"
#include "lifshitz/spectral.hpp"

namespace {

using namespace lifshitz;

struct Setup {
  ModelSpec model;
  GroundStateData gs;
};

// Normalized breather at resolution n, the model the CLI configs use.
Setup breather(int d, int n) {
  ModelSpec m;
  m.d = d;
  m.site.kind = SiteKind::breather;
  m.site.bumps = {Bump{20.0, 0.4}};
  m.dist.kind = DistributionKind::two_point_plus_uniform;
  m.dist.lambda_minus = 1.0;
  m.dist.lambda_plus = 2.0;
  m.dist.atom_mass_at_min = 0.5;
  m = standardize(m);
  Setup s;
  s.model = normalize_energy(m, periodic_ground_state(m, n).E0);
  s.gs = periodic_ground_state(s.model, n);
  return s;
}

DiscreteHamiltonian instance(const Setup& s, int d, int L, int n) {
  const GridSpec grid = make_grid(d, L, n);
  return assemble(s.model, grid, BoundaryCondition::dirichlet(),
                  sample_realization(s.model.dist, 1, 0, L, d).couplings);
}

void BM_Assemble(benchmark::State& state) {
  const int d = static_cast<int>(state.range(0));
  const int L = static_cast<int>(state.range(1));
  const Setup s = breather(d, 8);
  const GridSpec grid = make_grid(d, L, 8);
  const auto couplings = sample_realization(s.model.dist, 1, 0, L, d).couplings;
  for (auto _ : state) benchmark::DoNotOptimize(assemble(s.model, grid, BoundaryCondition::dirichlet(), couplings));
  state.SetItemsProcessed(state.iterations() * static_cast<long>(grid.size()));
}
BENCHMARK(BM_Assemble)->Args({1, 256})->Args({2, 16})->Args({3, 4});

void BM_CountBelow(benchmark::State& state) {
  const int d = static_cast<int>(state.range(0));
  const int L = static_cast<int>(state.range(1));
  const Setup s = breather(d, 8);
  const DiscreteHamiltonian H = instance(s, d, L, 8);
  for (auto _ : state) benchmark::DoNotOptimize(count_below(H, 2.0));
  state.SetItemsProcessed(state.iterations() * static_cast<long>(H.grid.size()));
}
BENCHMARK(BM_CountBelow)->Args({1, 64})->Args({1, 1024})->Args({2, 8})->Args({2, 16})->Args({3, 2});

void BM_LowestEigenvalues(benchmark::State& state) {
  const int L = static_cast<int>(state.range(0));
  const bool iterative = state.range(1) != 0;
  const Setup s = breather(2, 8);
  const DiscreteHamiltonian H = instance(s, 2, L, 8);
  SolverOptions opts;
  if (iterative) opts.dense_threshold = 0;
  for (auto _ : state) benchmark::DoNotOptimize(lowest_eigenvalues(H, 4, opts));
}
BENCHMARK(BM_LowestEigenvalues)->Args({4, 0})->Args({4, 1})->Args({16, 1})->Unit(benchmark::kMillisecond);

void BM_EstimateIds(benchmark::State& state) {
  const Setup s = breather(1, 16);
  const std::vector<double> energies{0.5, 1, 2, 4, 8};
  IdsOptions opts;
  opts.samples = static_cast<std::size_t>(state.range(0));
  for (auto _ : state)
    benchmark::DoNotOptimize(estimate_ids(s.model, s.gs, make_grid(1, 16, 16),
                                          {BoundaryKind::dirichlet, BoundaryKind::mezincescu}, energies, opts));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_EstimateIds)->Arg(50)->Arg(200)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
