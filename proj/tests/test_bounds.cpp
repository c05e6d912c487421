#include <gtest/gtest.h>

#include <cmath>

#include "lifshitz/bounds.hpp"
#include "lifshitz/errors.hpp"
#include "lifshitz/ids.hpp"
#include "support/fixtures.hpp"

namespace lifshitz {
namespace {

/// P(Binomial(N, p) < t) by forward recursion over trials.
double binomial_below(long N, double p, double t) {
  std::vector<double> dist{1.0};
  for (long i = 0; i < N; ++i) {
    std::vector<double> next(dist.size() + 1, 0.0);
    for (std::size_t k = 0; k < dist.size(); ++k) {
      next[k] += dist[k] * (1 - p);
      next[k + 1] += dist[k] * p;
    }
    dist.swap(next);
  }
  double s = 0.0;
  for (std::size_t k = 0; k < dist.size(); ++k)
    if (static_cast<double>(k) < t) s += dist[k];
  return s;
}

class BreatherBounds : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    prepared_ = new testing::Prepared(testing::prepare(testing::breather_model(), 16));
    const GapFit gap = fit_epsilon0(prepared_->model, prepared_->gs, {2, 3, 4, 5, 6, 7, 8, 9, 10});
    constants_ = new ModelConstants(measure_constants(prepared_->model, prepared_->gs, gap.epsilon0));
  }
  static void TearDownTestSuite() {
    delete prepared_;
    delete constants_;
  }
  const ModelSpec& model() const { return prepared_->model; }
  const GroundStateData& gs() const { return prepared_->gs; }
  const ModelConstants& k() const { return *constants_; }

  static testing::Prepared* prepared_;
  static ModelConstants* constants_;
};

testing::Prepared* BreatherBounds::prepared_ = nullptr;
ModelConstants* BreatherBounds::constants_ = nullptr;

TEST(Compare, VerdictsAndMargins) {
  const BoundRecord a = compare("a", 1.0, Relation::le, 2.0, 1e-8);
  EXPECT_EQ(a.verdict, Verdict::pass);
  EXPECT_DOUBLE_EQ(a.margin, 1.0);
  EXPECT_EQ(compare("b", 2.0 + 1e-12, Relation::le, 2.0, 1e-8).verdict, Verdict::pass);
  EXPECT_EQ(compare("c", 2.0, Relation::lt, 2.0, 1e-8).verdict, Verdict::boundary);
  EXPECT_EQ(compare("d", 3.0, Relation::le, 2.0, 1e-8).verdict, Verdict::fail);
  EXPECT_EQ(compare("e", 1.0, Relation::lt, 2.0, 1e-8).verdict, Verdict::pass);
  BoundReport r;
  r.records = {a, compare("d", 3.0, Relation::le, 2.0, 1e-8)};
  EXPECT_FALSE(r.all_pass());
  ASSERT_NE(r.first_failure(), nullptr);
  EXPECT_EQ(r.first_failure()->name, "d");
  EXPECT_NE(r.find("a"), nullptr);
}

TEST(Bernoulli, ExactTailMatchesBinomialOracle) {
  for (double p : {0.3, 0.5, 0.8}) {
    for (long Ld : {8L, 27L, 64L}) {
      const double gamma = 2.0 / p;
      const BernoulliTail t = bernoulli_tail(p, gamma, Ld);
      EXPECT_NEAR(t.exact, binomial_below(Ld, p, Ld / gamma), 1e-12);
      EXPECT_NEAR(t.bound, std::exp(-p * p * Ld / 2), 1e-15);
      EXPECT_LE(t.exact, t.bound) << "p " << p << " Ld " << Ld;
    }
  }
}

TEST(Bernoulli, RejectsInvalidArguments) {
  EXPECT_THROW(bernoulli_tail(0.0, 2.0, 8), InputError);
  EXPECT_THROW(bernoulli_tail(0.5, 1.0, 8), InputError);
  EXPECT_THROW(bernoulli_tail(0.5, 4.0, 0), InputError);
}

TEST(Bernoulli, PropertyExactBelowHoeffdingForGammaTwoOverP) {
  for (std::uint64_t c = 0; c < 200; ++c) {
    testing::Gen g(41, c);
    const double p = g.uniform(0.05, 1.0);
    const long Ld = g.integer(1, 300);
    const BernoulliTail t = bernoulli_tail(p, 2.0 / p, Ld);
    EXPECT_GE(t.exact, 0.0);
    EXPECT_LE(t.exact, t.bound * (1 + 1e-12)) << "p " << p << " Ld " << Ld;
  }
}

TEST_F(BreatherBounds, ConstantsAreConsistent) {
  EXPECT_GT(k().epsilon0, 0.0);
  EXPECT_NEAR(k().kappa1, 20.0, 1e-12);
  EXPECT_GT(k().epsilon1, 0.0);
  EXPECT_GT(k().c3, 0.0);
  EXPECT_GE(k().c4, k().c3);
  EXPECT_NEAR(k().p, mass_at_or_above(model().dist, k().lambda_star), 1e-12);
}

TEST_F(BreatherBounds, GapShrinksLikeInverseSquare) {
  const GapFit gap = fit_epsilon0(model(), gs(), {2, 3, 4, 5, 6, 7, 8, 9, 10});
  EXPECT_GT(gap.epsilon0, 0.0);
  EXPECT_GE(gap.slope, -2.3);
  EXPECT_LE(gap.slope, -1.7);
}

TEST_F(BreatherBounds, TempleConfigSatisfiesItsFormulas) {
  for (int L : {4, 6, 8}) {
    const TempleConfig c = choose_temple_config(k(), L);
    EXPECT_TRUE(violated_hypotheses(c, k()).empty());
    const double expect_c2 = 0.9 * std::min({k().epsilon2 * L * L, k().epsilon0 / (16 * k().kappa1),
                                             k().epsilon0 * k().epsilon1 / (2 * k().c4 * k().c4)});
    EXPECT_NEAR(c.c2, expect_c2, 1e-12 * expect_c2);
    EXPECT_NEAR(c.gamma, 2.0 / k().p, 1e-12);
    EXPECT_NEAR(c.c7, 2 * c.gamma / (k().epsilon1 * k().c3 * k().c3), 1e-9 * c.c7);
    EXPECT_NEAR(c.energy * c.c7, std::min(k().epsilon2, c.c2 / (2.0 * L * L)), 1e-12);
  }
}

TEST_F(BreatherBounds, InfeasibleConstantsNameTheBindingConstraint) {
  ModelConstants bad = k();
  bad.epsilon1 = 0.0;
  try {
    choose_temple_config(bad, 4);
    FAIL() << "expected PreconditionError";
  } catch (const PreconditionError& e) {
    EXPECT_FALSE(e.violated().empty());
  }
  TempleConfig c = choose_temple_config(k(), 4);
  c.c2 *= 100;
  EXPECT_FALSE(violated_hypotheses(c, k()).empty());
}

TEST_F(BreatherBounds, MappedVariableIsMonotoneAndZeroAtLambdaMinus) {
  EXPECT_NEAR(mapped_value(model(), gs(), 1.0), 0.0, 1e-14);
  double prev = 0.0;
  for (double lambda = 1.05; lambda <= 2.0; lambda += 0.05) {
    const double xi = mapped_value(model(), gs(), lambda);
    EXPECT_GT(xi, prev);
    EXPECT_GE(xi, k().epsilon1 * k().c3 * k().c3 * std::min(lambda - 1.0, k().epsilon2) - 1e-12);
    prev = xi;
  }
}

TEST_F(BreatherBounds, MomentIdentities) {
  const TempleConfig c = choose_temple_config(k(), 6);
  const GridSpec grid = make_grid(1, 6, 16);
  const TempleContext ctx = make_temple_context(model(), gs(), grid, c, k());
  for (std::uint64_t i = 0; i < 20; ++i) {
    const Realization r = sample_realization(model().dist, 99, i, 6, 1);
    const MappedRealization m = map_realization(gs(), model(), grid, r.couplings, c, k());
    const DiscreteHamiltonian H = assemble(model(), grid, ctx.bc, m.cutoffs);
    const MomentPair first = first_moment(gs(), m, H);
    EXPECT_NEAR(first.value, first.reference, 1e-9);
    const SecondMoment second = second_moment(gs(), m, H, c, k());
    EXPECT_NEAR(second.value, second.exact, 1e-9 * (1 + second.exact));
    EXPECT_LE(second.value, second.bound);
  }
}

TEST_F(BreatherBounds, TempleChainHolds) {
  for (int L : {4, 6}) {
    const TempleConfig c = choose_temple_config(k(), L);
    const TempleContext ctx = make_temple_context(model(), gs(), make_grid(1, L, 16), c, k());
    EXPECT_NEAR(ctx.e1_per, 0.0, 1e-9);
    for (std::uint64_t i = 0; i < 20; ++i) {
      const TempleOutcome o = temple_lower_bound(ctx, sample_realization(model().dist, 5, i, L, 1).couplings);
      EXPECT_TRUE(o.report.all_pass()) << (o.report.first_failure() ? o.report.first_failure()->name : "");
      EXPECT_GE(o.e1, 0.75 * o.mapped.mean_xi() - 1e-9);
      EXPECT_LE(o.e1, o.e2);
    }
  }
}

TEST_F(BreatherBounds, CorollaryAndDeviationOnConstructedData) {
  const TempleConfig c = choose_temple_config(k(), 4);
  MappedRealization m;
  const double cut = 2 * c.gamma * c.energy;
  m.xi = {0.0, 0.0, 0.0, 10 * cut};
  m.couplings = {1.0, 1.0, 1.0, 2.0};
  m.cutoffs = m.couplings;
  // E1 above the energy: vacuous.
  const BoundRecord v = counting_corollary_check(m, 2 * c.energy, c.energy, c.gamma);
  EXPECT_EQ(v.verdict, Verdict::pass);
  EXPECT_FALSE(v.note.empty());
  // 3 of 4 small against (gamma - 1) / gamma * 4.
  const BoundRecord r = counting_corollary_check(m, 0.0, c.energy, c.gamma);
  EXPECT_EQ(r.verdict, (c.gamma - 1) / c.gamma * 4 < 3 ? Verdict::pass : Verdict::fail);

  DeviationStats s;
  EXPECT_EQ(deviation_chain_check(m, c, k(), &s).verdict, Verdict::pass);
  EXPECT_EQ(s.antecedent, 3u);
  m.couplings[0] = 2.0;  // small xi with a large coupling breaks the implication
  EXPECT_EQ(deviation_chain_check(m, c, k(), &s).verdict, Verdict::fail);
  EXPECT_EQ(s.violations, 1u);
}

TEST_F(BreatherBounds, DeviationHoldsOnSampledSites) {
  const TempleConfig c = choose_temple_config(k(), 4);
  const double cap = k().lambda_minus + c.c2 / 16.0;
  DeviationStats total;
  for (std::uint64_t s = 0; s < 2000; ++s) {
    testing::Gen g(42, s);
    MappedRealization m;
    const double lambda = quantile(model().dist, g.uniform());
    m.couplings = {lambda};
    m.cutoffs = {std::min(lambda, cap)};
    m.xi = {mapped_value(model(), gs(), m.cutoffs[0])};
    DeviationStats one;
    deviation_chain_check(m, c, k(), &one);
    total.antecedent += one.antecedent;
    total.violations += one.violations;
  }
  EXPECT_GT(total.antecedent, 0u);
  EXPECT_EQ(total.violations, 0u);
}

TEST_F(BreatherBounds, LemmaConstantsAndUpperBound) {
  const GridSpec grid = make_grid(1, 4, 16);
  const LemmaConstants lc = realize_lemma_constants(model(), gs(), grid);
  EXPECT_GE(lc.B1, 1.0);  // sup of a density is at least its mean
  EXPECT_GT(lc.B2, 0.0);
  const LemmaConstants mx = realize_lemma_constants(model(), gs(), 16, {2, 4});
  EXPECT_GE(mx.B1, lc.B1);
  for (std::uint64_t i = 0; i < 20; ++i) {
    const UpperBoundOutcome o =
        dirichlet_upper_bound(model(), gs(), grid, sample_realization(model().dist, 8, i, 4, 1).couplings);
    EXPECT_TRUE(o.report.all_pass());
    EXPECT_LE(o.e1, o.rayleigh + 1e-9);
  }
}

TEST(Bounds, NearDegenerateMuGivesTinyMargins) {
  // Almost all mass at lambda_minus: realizations are close to the periodic
  // operator, so E1 and the moment bounds all collapse towards zero.
  const testing::Prepared p = testing::prepare(testing::breather_model(1, 0.999), 16);
  const GapFit gap = fit_epsilon0(p.model, p.gs, {2, 3, 4});
  const ModelConstants k = measure_constants(p.model, p.gs, gap.epsilon0);
  const TempleConfig c = choose_temple_config(k, 4);
  const TempleContext ctx = make_temple_context(p.model, p.gs, make_grid(1, 4, 16), c, k);
  const TempleOutcome o = temple_lower_bound(ctx, std::vector<double>(4, 1.0));
  EXPECT_TRUE(o.report.all_pass());
  EXPECT_NEAR(o.e1, 0.0, 1e-9);
  EXPECT_NEAR(o.mapped.mean_xi(), 0.0, 1e-12);
}

}  // namespace
}  // namespace lifshitz
