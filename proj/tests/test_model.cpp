#include <gtest/gtest.h>

#include <cmath>

#include "lifshitz/errors.hpp"
#include "lifshitz/lattice.hpp"
#include "lifshitz/model.hpp"
#include "support/fixtures.hpp"

namespace lifshitz {
namespace {

using testing::Gen;

double bump(double a, double r, double y2) {
  const double t = 1.0 - y2 / (r * r);
  return t > 0 ? a * t * t : 0.0;
}

TEST(Model, BreatherMatchesProfile) {
  const ModelSpec m = testing::breather_model();
  for (double lambda : {1.0, 1.3, 2.0}) {
    for (double x : {-0.45, -0.2, 0.0, 0.1, 0.3}) {
      const double expect = -bump(20.0, 0.4, lambda * lambda * x * x);
      EXPECT_NEAR(evaluate_site(m, lambda, {x, 0, 0}), expect, 1e-12);
    }
  }
}

TEST(Model, SiteVanishesOutsideCell) {
  ModelSpec m = testing::alloy_model();
  m.site.bumps = {Bump{1.0, 0.9}};  // profile would reach past the cell
  EXPECT_EQ(evaluate_site(m, 1.0, {0.51, 0, 0}), 0.0);
  EXPECT_EQ(evaluate_site(m, 1.0, {-0.7, 0, 0}), 0.0);
  EXPECT_NE(raw_site_unclipped(m, 1.0, {0.6, 0, 0}), 0.0);
}

TEST(Model, CouplingOutsideSupportIsDomainError) {
  const ModelSpec m = testing::breather_model();
  EXPECT_THROW(evaluate_site(m, 0.5, {0, 0, 0}), DomainError);
  EXPECT_THROW(evaluate_site(m, 2.5, {0, 0, 0}), DomainError);
}

TEST(Model, CheckModelRejectsMalformedSpecs) {
  ModelSpec m = testing::breather_model();
  m.dist.lambda_plus = m.dist.lambda_minus;
  EXPECT_THROW(check_model(m), InputError);
  m = testing::breather_model();
  m.dist.atom_mass_at_min = 1.5;
  EXPECT_THROW(check_model(m), InputError);
  m = testing::with_cosine(testing::breather_model(2), 1.0);
  m.vper.amplitudes = {1.0, 2.0, 3.0};
  EXPECT_THROW(check_model(m), InputError);
  EXPECT_NO_THROW(check_model(testing::breather_model()));
}

TEST(Model, LambdaDerivativeMatchesFiniteDifferences) {
  for (const ModelSpec& m : {testing::breather_model(), testing::alloy_model(), testing::breather_model(2)}) {
    for (std::uint64_t c = 0; c < 200; ++c) {
      Gen g(11, c);
      const double lam = m.dist.lambda_minus + g.uniform(0.05, 0.95) * (m.dist.lambda_plus - m.dist.lambda_minus);
      const Point x{g.uniform(-0.5, 0.5), g.uniform(-0.5, 0.5), 0.0};
      const double h = 1e-6;
      const double fd = (evaluate_site(m, lam + h, x) - evaluate_site(m, lam - h, x)) / (2 * h);
      EXPECT_NEAR(site_lambda_derivative(m, lam, x), fd, 1e-5 * (1 + std::abs(fd))) << "case " << c;
    }
  }
}

TEST(Model, BreatherIsMonotoneInCoupling) {
  const ModelSpec m = testing::breather_model(2);
  for (std::uint64_t c = 0; c < 300; ++c) {
    Gen g(12, c);
    const double a = g.uniform(1, 2), b = g.uniform(1, 2);
    const Point x{g.uniform(-0.5, 0.5), g.uniform(-0.5, 0.5), 0};
    EXPECT_LE(evaluate_site(m, std::min(a, b), x), evaluate_site(m, std::max(a, b), x) + 1e-14);
  }
}

TEST(Model, StandardizeIsIdempotentAndZeroAtLambdaMinus) {
  const ModelSpec m = testing::breather_model();
  const ModelSpec s = standardize(m);
  const ModelSpec s2 = standardize(s);
  for (double x : {-0.3, 0.0, 0.2}) {
    EXPECT_DOUBLE_EQ(evaluate_site(s, 1.0, {x, 0, 0}), 0.0);
    EXPECT_DOUBLE_EQ(evaluate_site(s, 1.7, {x, 0, 0}), evaluate_site(s2, 1.7, {x, 0, 0}));
    // Total potential is unchanged by moving the baseline.
    EXPECT_NEAR(evaluate_site(s, 1.7, {x, 0, 0}) + evaluate_periodic(s, {x, 0, 0}),
                evaluate_site(m, 1.7, {x, 0, 0}) + evaluate_periodic(m, {x, 0, 0}), 1e-12);
  }
}

TEST(Model, NormalizeEnergyAccumulatesShift) {
  const ModelSpec m = testing::with_cosine(testing::alloy_model(), 2.0);
  const ModelSpec a = normalize_energy(normalize_energy(m, 0.5), -0.25);
  EXPECT_DOUBLE_EQ(a.energy_shift, 0.25);
  EXPECT_NEAR(evaluate_periodic(a, {0.1, 0, 0}), evaluate_periodic(m, {0.1, 0, 0}) - 0.25, 1e-14);
}

TEST(Model, ZeroPotentialHasZeroGroundEnergy) {
  const GroundStateData g0 = periodic_ground_state(testing::free_model(), 16);
  EXPECT_NEAR(g0.E0, 0.0, 1e-12);
  EXPECT_NEAR(g0.c3, g0.c4, 1e-12);
}

TEST(Model, QuantileStaysInSupportAndIsMonotone) {
  std::vector<DistributionSpec> dists;
  dists.push_back(testing::breather_model().dist);
  dists.push_back(testing::alloy_model().dist);
  DistributionSpec beta = testing::alloy_model().dist;
  beta.kind = DistributionKind::truncated_beta;
  beta.beta_a = 2.0;
  beta.beta_b = 0.7;
  dists.push_back(beta);
  for (const auto& d : dists) {
    double prev = -1e300;
    for (int i = 0; i < 1000; ++i) {
      const double u = i / 1000.0;
      const double q = quantile(d, u);
      EXPECT_GE(q, d.lambda_minus);
      EXPECT_LE(q, d.lambda_plus);
      EXPECT_GE(q, prev);
      prev = q;
    }
  }
}

TEST(Model, QuantileInvertsTheMass) {
  const DistributionSpec d = testing::breather_model().dist;  // atom 0.5 at 1, uniform on [1, 2]
  EXPECT_EQ(quantile(d, 0.3), 1.0);
  EXPECT_NEAR(quantile(d, 0.75), 1.5, 1e-12);
  EXPECT_NEAR(mass_at_or_above(d, 1.5), 0.25, 1e-12);
  EXPECT_NEAR(mass_near_minimum(d, 0.2), 0.6, 1e-12);
  EXPECT_NEAR(distribution_mean(d), 0.5 * 1.0 + 0.5 * 1.5, 1e-12);
  const SplitPoint s = split_point(d);
  EXPECT_GT(s.lambda_star, d.lambda_minus);
  EXPECT_LT(s.lambda_star, d.lambda_plus);
  EXPECT_NEAR(s.p, mass_at_or_above(d, s.lambda_star), 1e-12);
}

TEST(Assumptions, BreatherPassesEverything) {
  const AssumptionReport r = validate_assumptions(testing::breather_model(), 64, 128);
  EXPECT_TRUE(r.all_pass());
  EXPECT_NEAR(r.kappa1_bound, 20.0, 1e-12);  // a / lambda_minus
  EXPECT_LE(r.kappa1, r.kappa1_bound);
  EXPECT_GT(r.epsilon1, 0.0);
}

TEST(Assumptions, SignChangingAlloyFailsMonotonicity) {
  ModelSpec m = testing::alloy_model();
  m.site.bumps = {Bump{1.0, 0.45}, Bump{-3.0, 0.2}};
  const AssumptionReport r = validate_assumptions(m, 32, 64);
  EXPECT_FALSE(r.all_pass());
  const auto* v = r.find("iii");
  ASSERT_NE(v, nullptr);
  EXPECT_FALSE(v->pass);
  ASSERT_TRUE(v->location.has_value());
  EXPECT_LT(std::abs((*v->location)[0]), 0.2);  // the negative dip sits at the center
}

TEST(Assumptions, SupportViolationIsLocated) {
  ModelSpec m = testing::alloy_model();
  m.site.bumps = {Bump{1.0, 0.8}};
  const AssumptionReport r = validate_assumptions(m, 32, 64);
  const auto* v = r.find("i");
  ASSERT_NE(v, nullptr);
  EXPECT_FALSE(v->pass);
}

TEST(Assumptions, DegenerateDistributionIsRejected) {
  const AssumptionReport r = validate_assumptions(testing::breather_model(1, 1.0), 32, 64);
  const auto* v = r.find("nondegenerate");
  ASSERT_NE(v, nullptr);
  EXPECT_FALSE(v->pass);
}

TEST(Assumptions, ClaimedTailConstantsAreChecked) {
  ModelSpec m = testing::alloy_model();
  m.dist.alpha = 10.0;  // uniform mass near lambda_minus is eps, far below 10 eps
  m.dist.kappa = 1.0;
  const AssumptionReport r = validate_assumptions(m, 32, 64);
  ASSERT_NE(r.find("v"), nullptr);
  EXPECT_FALSE(r.find("v")->pass);
}

TEST(Assumptions, GridsBelowSixteenAreInputErrors) {
  EXPECT_THROW(validate_assumptions(testing::breather_model(), 8, 64), InputError);
}

}  // namespace
}  // namespace lifshitz
