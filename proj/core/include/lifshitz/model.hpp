#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

namespace lifshitz {

/// A point in R^d; coordinates beyond d are ignored.
using Point = std::array<double, 3>;

enum class PeriodicKind { zero, cosine_sum, tabulated };

/// Z^d-periodic background potential, given on the unit cell [-1/2, 1/2)^d.
struct PeriodicPotentialSpec {
  PeriodicKind kind = PeriodicKind::zero;
  /// cosine-sum: V(y) = sum_i amplitudes[i] * cos(2 pi y_i).
  std::vector<double> amplitudes;
  /// tabulated: table_n^d cell-centered samples, axis 0 fastest; evaluated
  /// by nearest sample.
  int table_n = 0;
  std::vector<double> table;
  /// Constant added by energy normalization.
  double offset = 0.0;
};

/// f(y) = amplitude * (1 - |y|^2 / radius^2)_+^2, Euclidean |y|.
struct Bump {
  double amplitude = 1.0;
  double radius = 0.4;
};

enum class SiteKind { alloy, breather, tabulated };

/// Single-site potential sampled on a (lambda, x) table. Linear in lambda,
/// nearest-sample in x.
struct TabulatedSite {
  std::vector<double> lambdas;
  int n = 0;
  std::vector<double> values;  // lambdas.size() blocks of n^d samples
};

/// Single-site family u(lambda, x).
///   alloy:    u = lambda * f(x)
///   breather: u = -f(lambda * x)
/// where f is a sum of bumps.
struct SingleSiteSpec {
  SiteKind kind = SiteKind::breather;
  std::vector<Bump> bumps{Bump{}};
  TabulatedSite table;
};

enum class DistributionKind { uniform, truncated_beta, two_point_plus_uniform };

/// Coupling distribution mu on [lambda_minus, lambda_plus].
///   uniform:                 Lebesgue measure normalized on the interval
///   truncated_beta:          Beta(beta_a, beta_b) rescaled to the interval
///   two_point_plus_uniform:  atom of mass atom_mass_at_min at lambda_minus,
///                            remaining mass uniform
struct DistributionSpec {
  DistributionKind kind = DistributionKind::uniform;
  double lambda_minus = 1.0;
  double lambda_plus = 2.0;
  double beta_a = 1.0;
  double beta_b = 1.0;
  double atom_mass_at_min = 0.0;
  /// Optional user-claimed tail constants: mu([l-, l- + eps)) >= alpha eps^kappa.
  std::optional<double> alpha;
  std::optional<double> kappa;
};

struct ModelSpec {
  int d = 1;
  PeriodicPotentialSpec vper;
  SingleSiteSpec site;
  DistributionSpec dist;
  /// When set, evaluate_site returns u(lambda, x) - u(lambda_minus, x) and the
  /// periodic potential carries the baseline sum_k u(lambda_minus, x - k).
  bool standardized = false;
  /// E_raw = E_normalized + energy_shift.
  double energy_shift = 0.0;
};

/// Throws InputError when the spec is structurally invalid.
void check_model(const ModelSpec& model);

/// u(lambda, x) (or its standardized form). Exactly 0 when some |x_i| > 1/2.
/// Throws DomainError for lambda outside [lambda_minus, lambda_plus].
double evaluate_site(const ModelSpec& model, double lambda, const Point& x);

/// d/dlambda u(lambda, x). Analytic for alloy and breather; central
/// differences for tabulated sites.
double site_lambda_derivative(const ModelSpec& model, double lambda, const Point& x);

/// Raw single-site value without support clipping or standardization.
/// Used to scan for support violations.
double raw_site_unclipped(const ModelSpec& model, double lambda, const Point& x);

/// Periodic potential (including any subsumed baseline and offset).
double evaluate_periodic(const ModelSpec& model, const Point& x);

/// Analytic upper bound for sup |du/dlambda| where the family admits one;
/// nullopt for tabulated sites.
std::optional<double> analytic_kappa1(const ModelSpec& model);

/// Moves u(lambda_minus, .) into the periodic background. Idempotent.
ModelSpec standardize(const ModelSpec& model);

/// Shifts the periodic potential by -ground_energy and accumulates the shift.
ModelSpec normalize_energy(const ModelSpec& model, double ground_energy);

// Distribution helpers.

/// mu([lambda_minus, lambda_minus + eps)).
double mass_near_minimum(const DistributionSpec& dist, double eps);
/// mu([lambda, lambda_plus]).
double mass_at_or_above(const DistributionSpec& dist, double lambda);
/// Inverse CDF; u in [0, 1).
double quantile(const DistributionSpec& dist, double u);
double distribution_mean(const DistributionSpec& dist);

/// A point lambda_* in (lambda_minus, lambda_plus) with p = mu([lambda_*, lambda_plus])
/// in (0, 1). Defaults to the median, moved past an atom at lambda_minus.
struct SplitPoint {
  double lambda_star = 0.0;
  double p = 0.0;
};
SplitPoint split_point(const DistributionSpec& dist);

struct AssumptionVerdict {
  std::string id;    // "i".."v", "nondegenerate"
  std::string name;
  bool pass = false;
  std::string detail;
  double worst_violation = 0.0;
  std::optional<Point> location;
  std::optional<double> at_lambda;
};

struct AssumptionReport {
  std::vector<AssumptionVerdict> verdicts;
  double kappa1 = 0.0;        // grid-measured sup |du/dlambda|
  double kappa1_bound = 0.0;  // analytic bound when available, else measured
  double epsilon1 = 0.0;
  double epsilon2 = 0.0;
  double alpha = 0.0;
  double kappa = 0.0;
  int lambda_grid_size = 0;
  int x_grid_size = 0;

  bool all_pass() const;
  const AssumptionVerdict* find(const std::string& id) const;
};

/// Checks Assumptions (i)-(v) and non-degeneracy of mu on grids. Never throws
/// for a well-formed spec; malformed specs raise InputError.
AssumptionReport validate_assumptions(const ModelSpec& model, int lambda_grid_size,
                                      int x_grid_size);

/// Sign tolerance for grid assumption checks.
inline constexpr double kAssumptionTolerance = 1e-9;

const char* to_string(PeriodicKind kind);
const char* to_string(SiteKind kind);
const char* to_string(DistributionKind kind);

}  // namespace lifshitz
