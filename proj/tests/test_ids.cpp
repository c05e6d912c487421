#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <sstream>

#include "lifshitz/errors.hpp"
#include "lifshitz/ids.hpp"
#include "support/fixtures.hpp"

namespace lifshitz {
namespace {

TEST(Sampling, RealizationsArePureFunctions) {
  const DistributionSpec d = testing::alloy_model().dist;
  const Realization a = sample_realization(d, 7, 3, 5, 2);
  const Realization b = sample_realization(d, 7, 3, 5, 2);
  EXPECT_EQ(a.couplings, b.couplings);
  EXPECT_NE(a.couplings, sample_realization(d, 7, 4, 5, 2).couplings);
  EXPECT_NE(a.couplings, sample_realization(d, 8, 3, 5, 2).couplings);
  for (double x : a.couplings) {
    EXPECT_GE(x, d.lambda_minus);
    EXPECT_LE(x, d.lambda_plus);
  }
}

TEST(Sampling, CellCouplingsDoNotDependOnBoxSize) {
  const DistributionSpec d = testing::alloy_model().dist;
  const Realization small = sample_realization(d, 1, 0, 3, 2);
  const Realization large = sample_realization(d, 1, 0, 6, 2);
  for (int c1 = 0; c1 < 3; ++c1)
    for (int c0 = 0; c0 < 3; ++c0)
      EXPECT_EQ(small.couplings[static_cast<std::size_t>(c1 * 3 + c0)],
                large.couplings[static_cast<std::size_t>(c1 * 6 + c0)]);
}

TEST(Sampling, SiteCodePacksAxes) {
  EXPECT_EQ(site_code({1, 0, 0}), 1u);
  EXPECT_EQ(site_code({0, 1, 0}), 1ull << 21);
  EXPECT_EQ(site_code({0, 0, 1}), 1ull << 42);
}

TEST(Sampling, EmpiricalMeanMatchesDistribution) {
  const DistributionSpec d = testing::breather_model().dist;
  double s = 0.0;
  std::size_t n = 0;
  for (std::uint64_t i = 0; i < 400; ++i) {
    for (double x : sample_realization(d, 2, i, 16, 1).couplings) {
      s += x;
      ++n;
    }
  }
  const double sd = std::sqrt(0.5 * 0.25 + 0.5 * (1.0 / 12 + 0.25) - 0.0625);  // Var of the mixture
  EXPECT_NEAR(s / static_cast<double>(n), distribution_mean(d), 4 * sd / std::sqrt(static_cast<double>(n)));
}

TEST(Statistics, BatchMeansReducesToPlainErrorForSmallSamples) {
  const std::vector<double> v{1, 3, 2, 5, 4, 4, 7, 1};
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / 8;
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  EXPECT_NEAR(batch_means_se(v), std::sqrt(ss / 7 / 8), 1e-14);
  EXPECT_EQ(batch_means_se({2.0}), 0.0);
}

TEST(Statistics, BatchMeansUsesThirtyTwoBatches) {
  std::vector<double> v(64);
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = static_cast<double>(i % 2);
  EXPECT_NEAR(batch_means_se(v), 0.0, 1e-15);  // every batch of two has mean 1/2
}

class BreatherIds : public ::testing::Test {
 protected:
  BreatherIds() : p_(testing::prepare(testing::breather_model(), 8)) {}
  testing::Prepared p_;
};

TEST_F(BreatherIds, CurvesAreNondecreasingAndWorkerIndependent) {
  const std::vector<double> energies{0.5, 1, 2, 4, 8, 16};
  IdsOptions o;
  o.samples = 40;
  o.seed = 3;
  o.workers = 1;
  const GridSpec grid = make_grid(1, 4, 8);
  const IDSCurve a = estimate_ids(p_.model, p_.gs, grid, {BoundaryKind::dirichlet, BoundaryKind::mezincescu}, energies, o);
  o.workers = 3;
  const IDSCurve b = estimate_ids(p_.model, p_.gs, grid, {BoundaryKind::dirichlet, BoundaryKind::mezincescu}, energies, o);
  EXPECT_EQ(a.mean, b.mean);
  EXPECT_EQ(a.se, b.se);
  EXPECT_EQ(a.counts, b.counts);
  for (const auto& row : a.mean) EXPECT_TRUE(std::is_sorted(row.begin(), row.end()));
  // Pathwise bracketing: Dirichlet never counts more than Mezincescu.
  for (std::size_t e = 0; e < energies.size(); ++e)
    for (std::size_t i = 0; i < o.samples; ++i) EXPECT_LE(a.counts[0][e][i], a.counts[1][e][i]);
}

TEST_F(BreatherIds, BracketingOnSmallBoxes) {
  IdsOptions o;
  o.samples = 60;
  o.seed = 4;
  const BracketingReport r = bracketing_report(p_.model, p_.gs, 8, {2, 4, 8}, {1, 4, 16}, o);
  EXPECT_EQ(r.pathwise_violations, 0u);
  EXPECT_EQ(r.pathwise_checks, 3u * 3u * 60u);
  EXPECT_TRUE(r.all_ok());
}

TEST_F(BreatherIds, ScaledCurveUsesRequestedBoxes) {
  IdsOptions o;
  o.samples = 10;
  const IDSCurve c = estimate_ids_scaled(p_.model, p_.gs, 8, {1, 2, 4}, {8, 6, 4}, {BoundaryKind::dirichlet}, o);
  EXPECT_EQ(c.L, (std::vector<int>{8, 6, 4}));
  EXPECT_EQ(c.mean.size(), 1u);
}

TEST(Fit, SyntheticCurvesRecoverTheExponent) {
  for (double s : {0.5, 1.0, 1.5}) {
    const double lo = std::pow(-std::log(1e-4), -1 / s), hi = std::pow(-std::log(1e-1), -1 / s);
    const IDSCurve c = synthetic_curve(2.0 / 3.0 + s, s, geometric_energies(lo, hi * 3, 20), 1);
    const LifshitzFit f = fit_lifshitz(c, BoundaryKind::dirichlet);
    EXPECT_NEAR(f.slope, -s, 1e-3);
    EXPECT_NEAR(std::exp(f.intercept), 2.0 / 3.0 + s, 1e-6);
    EXPECT_EQ(f.ci_method, "ols");
    EXPECT_LE(f.ci_lo, f.slope);
    EXPECT_GE(f.ci_hi, f.slope);
    for (const auto& p : f.points) {
      EXPECT_GE(p.N, 1e-4);
      EXPECT_LE(p.N, 1e-1);
    }
  }
}

TEST(Fit, TooFewWindowPointsIsInsufficientData) {
  const IDSCurve c = synthetic_curve(1.0, 0.5, {0.01, 0.02, 10.0}, 1);
  EXPECT_THROW(fit_lifshitz(c, BoundaryKind::dirichlet), InsufficientDataError);
  EXPECT_THROW(fit_lifshitz(c, BoundaryKind::mezincescu), InputError);
}

TEST(Fit, BootstrapIntervalOnSampledCurve) {
  const testing::Prepared p = testing::prepare(testing::breather_model(), 8);
  IdsOptions o;
  o.samples = 400;
  o.seed = 9;
  const auto energies = geometric_energies(0.3, 20, 10);
  std::vector<int> Ls;
  for (double E : energies) Ls.push_back(choose_box_size_lower(E, 9.84, 64).L);
  const IDSCurve c = estimate_ids_scaled(p.model, p.gs, 8, energies, Ls, {BoundaryKind::dirichlet}, o);
  FitOptions fo;
  fo.min_points = 3;
  fo.n_min = 1e-3;
  fo.max_relative_se = 0.5;
  const LifshitzFit f = fit_lifshitz(c, BoundaryKind::dirichlet, fo);
  EXPECT_EQ(f.ci_method, "bootstrap");
  EXPECT_LE(f.ci_lo, f.ci_hi);
  EXPECT_DOUBLE_EQ(f.target, -0.5);
  // Same seed, same interval.
  const LifshitzFit g = fit_lifshitz(c, BoundaryKind::dirichlet, fo);
  EXPECT_EQ(f.ci_lo, g.ci_lo);
  EXPECT_EQ(f.ci_hi, g.ci_hi);
}

TEST(BoxSize, FormulasSnapAndClamp) {
  TempleConfig cfg;
  cfg.c2 = 2.0;
  cfg.c7 = 1.0;
  EXPECT_EQ(choose_box_size_upper(0.01, cfg, 4096).L, 10);  // sqrt(100)
  EXPECT_EQ(choose_box_size_upper(0.011, cfg, 4096).L, 9);
  const BoxSize big = choose_box_size_upper(1e-9, cfg, 100);
  EXPECT_EQ(big.L, 100);
  EXPECT_TRUE(big.clamped);
  EXPECT_EQ(choose_box_size_lower(0.01, 1.0, 4096).L, 20);  // 2 * 1 / 0.1
  EXPECT_EQ(choose_box_size_lower(0.0099, 1.0, 4096).L, 21);
  const BoxSize small = choose_box_size_lower(100.0, 1.0, 4096);
  EXPECT_EQ(small.L, 2);
  EXPECT_TRUE(small.clamped);
  EXPECT_EQ(small.raw, 1);
}

TEST(BoxSize, LowerFormIsNonincreasingInEnergy) {
  int prev = 1 << 30;
  for (double E : geometric_energies(1e-3, 10, 50)) {
    const int L = choose_box_size_lower(E, 9.8, 4096).L;
    EXPECT_LE(L, prev);
    prev = L;
  }
}

TEST(Csv, RoundTripPreservesEveryDigit) {
  IDSCurve c = synthetic_curve(1.0, 0.5, geometric_energies(0.05, 2.0, 7), 1);
  c.bcs = {BoundaryKind::dirichlet, BoundaryKind::mezincescu};
  c.mean.push_back(c.mean[0]);
  c.se.push_back(std::vector<double>(c.energies.size(), 1.0 / 3.0));
  c.M = 17;
  c.seed = 5;
  std::ostringstream os;
  write_ids_csv(c, os);
  EXPECT_EQ(os.str().substr(0, os.str().find('\n')), "E,N_D,se_D,N_M,se_M,L,n,M,seed");
  std::istringstream is(os.str());
  const IDSCurve r = read_ids_csv(is);
  EXPECT_EQ(r.energies, c.energies);
  EXPECT_EQ(r.mean, c.mean);
  EXPECT_EQ(r.se, c.se);
  EXPECT_EQ(r.M, 17u);
  EXPECT_EQ(r.seed, 5u);
  std::ostringstream again;
  write_ids_csv(r, again);
  EXPECT_EQ(again.str(), os.str());
}

TEST(Csv, MalformedInputIsInputError) {
  std::istringstream missing("E,N_D\n1,0.5\n");
  EXPECT_THROW(read_ids_csv(missing), InputError);
  std::istringstream garbage("E,N_D,se_D,N_M,se_M,L,n,M,seed\n1,x,0,nan,nan,4,16,10,1\n");
  EXPECT_THROW(read_ids_csv(garbage), InputError);
}

}  // namespace
}  // namespace lifshitz
