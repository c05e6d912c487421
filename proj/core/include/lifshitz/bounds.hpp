#pragma once

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "lifshitz/lattice.hpp"
#include "lifshitz/model.hpp"
#include "lifshitz/spectral.hpp"

namespace lifshitz {

/// Measured model constants feeding the Temple and deviation arguments.
/// Expects a standardized, energy-normalized model.
struct ModelConstants {
  double kappa1 = 0.0;    // sup du/dlambda (analytic bound when available)
  double epsilon0 = 0.0;  // min_L L^2 * gap(H_per^{L,M})
  double epsilon1 = 0.0;
  double epsilon2 = 0.0;
  double c3 = 0.0;  // min Psi
  double c4 = 0.0;  // max Psi
  double lambda_minus = 0.0;
  double lambda_star = 0.0;
  double p = 0.0;  // mu([lambda_star, lambda_plus])
};

struct GapFit {
  std::vector<int> Ls;
  std::vector<double> gaps;
  double epsilon0 = 0.0;  // min over L of L^2 * gap
  double slope = 0.0;     // least-squares slope of log gap against log L
};

/// Spectral gap of H_per^{L,M} for every L in `Ls`.
GapFit fit_epsilon0(const ModelSpec& model, const GroundStateData& gs, std::vector<int> Ls,
                    const SolverOptions& opts = {});

/// Collects kappa1, epsilon1, epsilon2 (assumption scan at the simulation
/// resolution gs.n), c3, c4 and the split point; epsilon0 is supplied.
ModelConstants measure_constants(const ModelSpec& model, const GroundStateData& gs,
                                 double epsilon0, int lambda_grid_size = 64);

struct TempleConfig {
  int L = 0;
  double c2 = 0.0;
  double gamma = 0.0;
  double c7 = 0.0;
  double epsilon0 = 0.0;
  double energy = 0.0;  // the scale E used by the corollary and deviation lemma
};

/// Names of the hypotheses `cfg` violates for the given constants; empty if
/// the configuration is admissible. The mapped-variable bound uses c4^2,
/// which the moment estimate needs because d alpha = Psi^2 dx.
std::vector<std::string> violated_hypotheses(const TempleConfig& cfg, const ModelConstants& k);

/// Admissible configuration with gamma = 2 / p and
///   c2 = 0.9 * min(epsilon2 L^2, epsilon0 / (16 kappa1), epsilon0 epsilon1 / (2 c4^2)),
///   c7 = 2 gamma / (epsilon1 c3^2),
///   E  = min(epsilon2, c2 / (2 L^2)) / c7.
/// Throws PreconditionError naming the binding constraint when infeasible.
TempleConfig choose_temple_config(const ModelConstants& k, int L);

/// xi(lambda) = sum over one cell of Psi^2 u(lambda, .) h^d.
double mapped_value(const ModelSpec& model, const GroundStateData& gs, double lambda);
/// Same with u^2 in place of u.
double mapped_square(const ModelSpec& model, const GroundStateData& gs, double lambda);

struct MappedRealization {
  std::vector<double> couplings;
  std::vector<double> cutoffs;  // min(lambda_k, lambda_minus + c2 / L^2)
  std::vector<double> xi;
  std::vector<double> xi_square;  // per-cell sum of Psi^2 u^2 h^d

  double mean_xi() const;
};

/// Throws PreconditionError if `cfg` violates a hypothesis.
MappedRealization map_realization(const GroundStateData& gs, const ModelSpec& model,
                                  const GridSpec& grid, const std::vector<double>& couplings,
                                  const TempleConfig& cfg, const ModelConstants& k);

struct MomentPair {
  double value = 0.0;
  double reference = 0.0;
};

/// value = <psi_L, H psi_L>, reference = L^-d sum xi_k.
MomentPair first_moment(const GroundStateData& gs, const MappedRealization& mapped,
                        const DiscreteHamiltonian& H);

struct SecondMoment {
  double value = 0.0;  // ||H psi_L||^2
  double bound = 0.0;  // 2 kappa1 c2 L^-2 L^-d sum xi_k
  double exact = 0.0;  // L^-d sum_k sum Psi^2 u^2 h^d
};

SecondMoment second_moment(const GroundStateData& gs, const MappedRealization& mapped,
                           const DiscreteHamiltonian& H, const TempleConfig& cfg,
                           const ModelConstants& k);

enum class Verdict { pass, fail, boundary };
const char* to_string(Verdict v);

enum class Relation { le, lt };

/// One checked inequality lhs <= rhs (or lhs < rhs); margin = rhs - lhs, so a
/// nonnegative margin means the inequality holds.
struct BoundRecord {
  std::string name;
  Relation relation = Relation::le;
  double lhs = 0.0;
  double rhs = 0.0;
  double margin = 0.0;
  Verdict verdict = Verdict::pass;
  std::string note;
  std::vector<std::pair<std::string, double>> constants;
};

/// Relative comparison slack: tol * (1 + |lhs| + |rhs|). A non-strict
/// inequality within slack passes; a strict one within slack is "boundary".
BoundRecord compare(std::string name, double lhs, Relation rel, double rhs, double tol);

struct BoundReport {
  std::vector<BoundRecord> records;

  bool all_pass() const;
  /// First record whose verdict is not pass, or nullptr.
  const BoundRecord* first_failure() const;
  const BoundRecord* find(const std::string& name) const;
};

/// Comparison tolerance used by the Temple chain; eigenvalues come from a
/// solver with relative residual 1e-9.
inline constexpr double kBoundTolerance = 1e-8;

/// Fixed per-L data reused across realizations.
struct TempleContext {
  ModelSpec model;
  GroundStateData gs;
  GridSpec grid;
  TempleConfig cfg;
  ModelConstants constants;
  BoundaryCondition bc;  // Mezincescu ratios on this box
  std::vector<double> psi_L;
  double e1_per = 0.0;
  double e2_per = 0.0;
  SolverOptions opts;
};

TempleContext make_temple_context(const ModelSpec& model, const GroundStateData& gs,
                                  const GridSpec& grid, const TempleConfig& cfg,
                                  const ModelConstants& k, const SolverOptions& opts = {});

struct TempleOutcome {
  BoundReport report;
  MappedRealization mapped;
  double e1 = 0.0;  // E1 of the cut-off Hamiltonian
  double e2 = 0.0;
  double first = 0.0;
  double second = 0.0;
  double nu = 0.0;
};

/// Verifies the applicability chain
///   0 = E1(H_per) <= E1(H~) <= <psi_L, H~ psi_L> < nu <= E2(H_per) <= E2(H~)
/// followed by Temple's inequality and E1(H~) >= (3/4) L^-d sum xi_k.
TempleOutcome temple_lower_bound(const TempleContext& ctx, const std::vector<double>& couplings);

/// If E1 <= energy: #{k : xi_k < 2 gamma energy} > ((gamma - 1) / gamma) L^d.
/// Passes vacuously otherwise.
BoundRecord counting_corollary_check(const MappedRealization& mapped, double e1, double energy,
                                     double gamma);

struct DeviationStats {
  std::size_t sites = 0;
  std::size_t antecedent = 0;  // sites with xi_k < 2 gamma E
  std::size_t violations = 0;
};

/// Per site: xi_k < 2 gamma E implies lambda_k < lambda_minus + c7 E.
BoundRecord deviation_chain_check(const MappedRealization& mapped, const TempleConfig& cfg,
                                  const ModelConstants& k, DeviationStats* stats = nullptr);

struct BernoulliTail {
  double exact = 0.0;  // P(Binomial(Ld, p) < Ld / gamma)
  double bound = 0.0;  // exp(-p^2 Ld / 2)
};

BernoulliTail bernoulli_tail(double p, double gamma, long Ld);

/// Realized constants of the cosine test function on one box:
///   phi = Psi * prod_i cos(pi x_i / L),
///   B1 = sup phi^2 L^d / ||phi||^2,
///   B2 = L^2 <phi, H_per^{L,D} phi> / ||phi||^2.
struct LemmaConstants {
  int L = 0;
  double B1 = 0.0;
  double B2 = 0.0;
};

LemmaConstants realize_lemma_constants(const ModelSpec& model, const GroundStateData& gs,
                                       const GridSpec& grid);
/// Componentwise maximum over the given box sizes.
LemmaConstants realize_lemma_constants(const ModelSpec& model, const GroundStateData& gs, int n,
                                       const std::vector<int>& Ls);

struct UpperBoundOutcome {
  BoundReport report;
  double e1 = 0.0;
  double rayleigh = 0.0;
  double mean_potential = 0.0;  // L^-d * integral of V_omega over the box
  LemmaConstants constants;
};

/// E1(H^{L,D}) <= Rayleigh quotient <= B1 L^-d int V_omega + B2 L^-2 with the
/// constants realized on this box.
UpperBoundOutcome dirichlet_upper_bound(const ModelSpec& model, const GroundStateData& gs,
                                        const GridSpec& grid, const std::vector<double>& couplings,
                                        const SolverOptions& opts = {});

}  // namespace lifshitz
