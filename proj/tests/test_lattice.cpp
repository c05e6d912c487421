#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "lifshitz/errors.hpp"
#include "lifshitz/ids.hpp"
#include "lifshitz/lattice.hpp"
#include "lifshitz/spectral.hpp"
#include "support/fixtures.hpp"

namespace lifshitz {
namespace {

using std::numbers::pi;

std::vector<double> all_eigenvalues(const DiscreteHamiltonian& H) {
  const Eigen::MatrixXd dense(H.matrix);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(dense, Eigen::EigenvaluesOnly);
  const auto& v = es.eigenvalues();
  return {v.data(), v.data() + v.size()};
}

// Closed forms for the free cell-centered stencil on N points.
std::vector<double> free_closed_form(BoundaryKind kind, int N, double h) {
  std::vector<double> out;
  for (int m = 0; m < N; ++m) {
    double s = 0.0;
    switch (kind) {
      case BoundaryKind::dirichlet: s = std::sin((m + 1) * pi / (2.0 * N)); break;
      case BoundaryKind::neumann: s = std::sin(m * pi / (2.0 * N)); break;
      default: s = std::sin(m * pi / N); break;
    }
    out.push_back(4.0 / (h * h) * s * s);
  }
  std::sort(out.begin(), out.end());
  return out;
}

TEST(Lattice, GridGeometry) {
  const GridSpec g = make_grid(2, 3, 4);
  EXPECT_EQ(g.size(), 144u);
  EXPECT_EQ(g.cell_count(), 9u);
  EXPECT_DOUBLE_EQ(g.coordinate(0), 0.125 - 1.5);
  EXPECT_DOUBLE_EQ(g.cell_center(1), 0.0);
  const auto u = g.unflatten(12 * 5 + 7);
  EXPECT_EQ(u[0], 7);
  EXPECT_EQ(u[1], 5);
  EXPECT_EQ(g.cell_of(12 * 5 + 7), 1u * 3 + 1u);
  EXPECT_THROW(make_grid(4, 2, 8), InputError);
  EXPECT_THROW(make_grid(1, 0, 8), InputError);
  EXPECT_THROW(make_grid(1, 2, 2), InputError);
}

TEST(Lattice, FreeSpectraMatchClosedForms) {
  const ModelSpec m = testing::free_model();
  for (auto [L, n] : {std::pair{1, 16}, std::pair{4, 16}, std::pair{8, 8}}) {
    const GridSpec g = make_grid(1, L, n);
    for (BoundaryKind k : {BoundaryKind::dirichlet, BoundaryKind::neumann, BoundaryKind::periodic}) {
      BoundaryCondition bc{k, {}, {}};
      const auto got = all_eigenvalues(assemble(m, g, bc));
      const auto expect = free_closed_form(k, L * n, g.h());
      ASSERT_EQ(got.size(), expect.size());
      for (std::size_t i = 0; i < got.size(); ++i)
        EXPECT_NEAR(got[i], expect[i], 1e-10 * (1 + expect[i])) << to_string(k) << " L=" << L << " n=" << n;
    }
  }
}

TEST(Lattice, SmallDirichletExample) {
  const auto ev = all_eigenvalues(assemble(testing::free_model(), make_grid(1, 1, 4), BoundaryCondition::dirichlet()));
  EXPECT_NEAR(ev.front(), 64.0 * std::pow(std::sin(pi / 8), 2), 1e-12);
  EXPECT_NEAR(ev.front(), 9.37, 5e-3);
}

TEST(Lattice, NeumannKernelIsConstant) {
  const DiscreteHamiltonian H = assemble(testing::free_model(), make_grid(2, 2, 4), BoundaryCondition::neumann());
  const Eigen::VectorXd one = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(H.grid.size()));
  EXPECT_LT((H.matrix * one).norm(), 1e-12);
}

TEST(Lattice, RobinInterpolatesNeumannAndDirichlet) {
  const ModelSpec m = testing::free_model();
  const GridSpec g = make_grid(1, 2, 8);
  const double dn = all_eigenvalues(assemble(m, g, BoundaryCondition::neumann())).front();
  const double dd = all_eigenvalues(assemble(m, g, BoundaryCondition::dirichlet())).front();
  EXPECT_NEAR(all_eigenvalues(assemble(m, g, BoundaryCondition::robin({0.0}))).front(), dn, 1e-12);
  double prev = dn;
  for (double rho : {0.5, 2.0, 8.0, 32.0}) {
    const double e = all_eigenvalues(assemble(m, g, BoundaryCondition::robin({rho}))).front();
    EXPECT_GT(e, prev);
    EXPECT_LT(e, dd);
    prev = e;
  }
}

TEST(Lattice, DirichletStencilConvergesAtSecondOrder) {
  const double L = 2.0;
  std::vector<double> err;
  for (int n : {8, 16, 32}) {
    const auto ev = all_eigenvalues(assemble(testing::free_model(), make_grid(1, 2, n), BoundaryCondition::dirichlet()));
    err.push_back(std::abs(ev.front() - pi * pi / (L * L)));
  }
  EXPECT_NEAR(err[0] / err[1], 4.0, 0.1);
  EXPECT_NEAR(err[1] / err[2], 4.0, 0.1);
}

TEST(Lattice, MatrixIsSymmetric) {
  testing::Gen gen(21, 0);
  const ModelSpec m = standardize(testing::breather_model(2));
  const GroundStateData gs = periodic_ground_state(m, 4);
  for (BoundaryKind k : {BoundaryKind::dirichlet, BoundaryKind::neumann, BoundaryKind::periodic, BoundaryKind::mezincescu}) {
    const GridSpec g = make_grid(2, 3, 4);
    const BoundaryCondition bc = k == BoundaryKind::mezincescu ? mezincescu_correction(gs, g) : BoundaryCondition{k, {}, {}};
    const DiscreteHamiltonian H = assemble(m, g, bc, gen.couplings(m.dist, g.cell_count()));
    const Eigen::MatrixXd A(H.matrix);
    EXPECT_LT((A - A.transpose()).cwiseAbs().maxCoeff(), 1e-14) << to_string(k);
  }
}

TEST(Lattice, UnresolvedMezincescuIsStateError) {
  EXPECT_THROW(assemble(testing::breather_model(), make_grid(1, 2, 8), BoundaryCondition::mezincescu_unresolved()),
               StateError);
}

TEST(Lattice, CouplingCountMustMatchCells) {
  const std::vector<double> two{1.0, 1.0};
  EXPECT_THROW(assemble(testing::breather_model(), make_grid(1, 3, 8), BoundaryCondition::dirichlet(), two),
               InputError);
}

TEST(Lattice, RandomPotentialMatchesBruteForceSum) {
  const ModelSpec m = testing::breather_model(2);
  const GridSpec g = make_grid(2, 3, 8);
  testing::Gen gen(22, 0);
  const auto lambdas = gen.couplings(m.dist, g.cell_count());
  const auto v = assemble_random_potential(m, g, lambdas);
  for (std::size_t idx = 0; idx < g.size(); ++idx) {
    const auto j = g.unflatten(idx);
    double sum = 0.0;
    for (int c1 = 0; c1 < 3; ++c1) {
      for (int c0 = 0; c0 < 3; ++c0) {
        const Point y{g.coordinate(j[0]) - g.cell_center(c0), g.coordinate(j[1]) - g.cell_center(c1), 0.0};
        sum += evaluate_site(m, lambdas[static_cast<std::size_t>(c1 * 3 + c0)], y);
      }
    }
    EXPECT_NEAR(v[idx], sum, 1e-13) << "index " << idx;
  }
}

TEST(Lattice, MezincescuKeepsTheGroundStateExact) {
  const ModelSpec m = normalize_energy(standardize(testing::with_cosine(testing::breather_model(), 2.0)), 0.0);
  const GroundStateData gs = periodic_ground_state(m, 16);
  for (int L = 2; L <= 5; ++L) {
    const GridSpec g = make_grid(1, L, 16);
    const DiscreteHamiltonian H = assemble(m, g, mezincescu_correction(gs, g));
    const auto psi = box_ground_state(gs, g);
    const Eigen::Map<const Eigen::VectorXd> v(psi.data(), static_cast<Eigen::Index>(psi.size()));
    EXPECT_NEAR(grid_dot(g, psi, psi), 1.0, 1e-12);
    EXPECT_LT((H.matrix * v - gs.E0 * v).norm() * std::sqrt(g.h()), 1e-10);
    EXPECT_NEAR(all_eigenvalues(H).front(), gs.E0, 1e-8);
  }
}

TEST(Lattice, MezincescuInTwoDimensions) {
  ModelSpec m = testing::breather_model(2);
  m.vper.kind = PeriodicKind::cosine_sum;
  m.vper.amplitudes = {1.5, -0.5};
  m = standardize(m);
  const GroundStateData gs = periodic_ground_state(m, 6);
  const GridSpec g = make_grid(2, 3, 6);
  const DiscreteHamiltonian H = assemble(m, g, mezincescu_correction(gs, g));
  EXPECT_NEAR(all_eigenvalues(H).front(), gs.E0, 1e-8);
}

TEST(Lattice, RaisingOneCouplingNeverLowersEigenvalues) {
  const ModelSpec m = standardize(testing::breather_model());
  const GridSpec g = make_grid(1, 4, 8);
  for (std::uint64_t c = 0; c < 25; ++c) {
    testing::Gen gen(23, c);
    auto lambdas = gen.couplings(m.dist, g.cell_count());
    const BoundaryCondition bc{static_cast<BoundaryKind>(gen.integer(0, 2)), {}, {}};
    const auto before = all_eigenvalues(assemble(m, g, bc, lambdas));
    const auto k = static_cast<std::size_t>(gen.integer(0, 3));
    lambdas[k] = std::min(m.dist.lambda_plus, lambdas[k] + gen.uniform(0.0, 0.5));
    const auto after = all_eigenvalues(assemble(m, g, bc, lambdas));
    for (std::size_t i = 0; i < before.size(); ++i) EXPECT_GE(after[i], before[i] - 1e-9) << "case " << c;
  }
}

TEST(Lattice, CoordinateExportListsEveryEntry) {
  const DiscreteHamiltonian H = assemble(testing::free_model(), make_grid(1, 2, 4), BoundaryCondition::periodic());
  std::ostringstream os;
  export_coordinate(H, os);
  const std::string s = os.str();
  EXPECT_EQ(static_cast<long>(std::count(s.begin(), s.end(), '\n')), H.matrix.nonZeros());
  EXPECT_EQ(s.substr(0, 2), "0 ");
}

}  // namespace
}  // namespace lifshitz
