#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "lifshitz/bounds.hpp"
#include "lifshitz/lattice.hpp"
#include "lifshitz/model.hpp"
#include "lifshitz/spectral.hpp"

namespace lifshitz {

/// Couplings of one disorder realization on the L^d cells of a box, indexed
/// like the cells (axis 0 fastest).
struct Realization {
  std::uint64_t seed = 0;
  std::uint64_t index = 0;
  int L = 0;
  int d = 0;
  std::vector<double> couplings;
};

/// Packs cell indices (each < 2^21) into the generator counter.
std::uint64_t site_code(const std::array<int, 3>& cell);

/// lambda_k = quantile(mu, U(seed, index, k)); a pure function of its inputs.
Realization sample_realization(const DistributionSpec& dist, std::uint64_t seed,
                               std::uint64_t index, int L, int d);

/// Monte Carlo estimates of L^-d E N(E, H^{L,X}). Each energy row carries its
/// own box size so energy-matched scans fit in one curve.
struct IDSCurve {
  int d = 1;
  int n = 16;
  std::size_t M = 0;
  std::uint64_t seed = 0;
  std::vector<double> energies;
  std::vector<int> L;  // per energy
  std::vector<BoundaryKind> bcs;
  std::vector<std::vector<double>> mean;  // [bc][energy]
  std::vector<std::vector<double>> se;    // [bc][energy], batch means
  /// Raw counts [bc][energy][realization]; empty for replayed curves.
  std::vector<std::vector<std::vector<std::uint32_t>>> counts;

  /// Position of `kind` in bcs, or -1.
  int bc_index(BoundaryKind kind) const;
};

struct IdsOptions {
  std::size_t samples = 100;
  std::uint64_t seed = 1;
  unsigned workers = 1;
  bool keep_counts = true;
  SolverOptions solver;
};

/// One box size for all energies. Energies must be sorted. Mezincescu
/// conditions use `gs`.
IDSCurve estimate_ids(const ModelSpec& model, const GroundStateData& gs, const GridSpec& grid,
                      const std::vector<BoundaryKind>& bcs, const std::vector<double>& energies,
                      const IdsOptions& opts);

/// Energy-dependent box sizes (Ls[j] for energies[j]).
IDSCurve estimate_ids_scaled(const ModelSpec& model, const GroundStateData& gs, int n,
                             const std::vector<double>& energies, const std::vector<int>& Ls,
                             const std::vector<BoundaryKind>& bcs, const IdsOptions& opts);

/// Standard error of the mean from min(M, 32) contiguous batches.
double batch_means_se(const std::vector<double>& values);

struct MonotonicityCheck {
  BoundaryKind bc = BoundaryKind::dirichlet;
  double energy = 0.0;
  int L_small = 0;
  int L_large = 0;
  double difference = 0.0;   // mean(L_large) - mean(L_small)
  double combined_se = 0.0;  // sqrt(se_small^2 + se_large^2)
  bool ok = true;
};

struct CrossCheck {
  double energy = 0.0;
  int L_dirichlet = 0;
  int L_mezincescu = 0;
  double difference = 0.0;  // N_M - N_D
  double combined_se = 0.0;
  bool ok = true;
};

struct BracketingReport {
  std::vector<int> Ls;
  std::vector<double> energies;
  std::vector<IDSCurve> curves;  // one per L, bcs = {D, M}
  std::size_t pathwise_checks = 0;
  std::size_t pathwise_violations = 0;
  double z = 2.0;
  std::vector<MonotonicityCheck> monotonicity;
  std::vector<CrossCheck> cross;

  bool all_ok() const;
};

/// Pathwise D <= M counts, Dirichlet means nondecreasing and Mezincescu means
/// nonincreasing in L, and every Dirichlet mean below every Mezincescu mean;
/// mean comparisons allow z combined standard errors.
BracketingReport bracketing_report(const ModelSpec& model, const GroundStateData& gs, int n,
                                   std::vector<int> Ls, const std::vector<double>& energies,
                                   const IdsOptions& opts, double z = 2.0);

struct LifshitzPoint {
  double energy = 0.0;
  double N = 0.0;
  double se = 0.0;
  int L = 0;
  double x = 0.0;  // log E
  double y = 0.0;  // log |log N|
};

struct FitOptions {
  double n_min = 1e-4;
  double n_max = 1e-1;
  double max_relative_se = 0.25;
  std::size_t min_points = 5;
  int bootstrap = 200;
  std::uint64_t seed = 1;
};

struct LifshitzFit {
  double n_min = 0.0;
  double n_max = 0.0;
  double e_lo = 0.0;
  double e_hi = 0.0;
  std::vector<LifshitzPoint> points;
  double slope = 0.0;
  double intercept = 0.0;
  double ci_lo = 0.0;
  double ci_hi = 0.0;
  std::string ci_method;  // "bootstrap" or "ols"
  double target = 0.0;    // -d/2
};

/// Least-squares slope of log|log N| against log E over window points. The
/// interval is a 95% bootstrap over realizations when raw counts are present,
/// otherwise slope +- 1.96 standard errors. Throws InsufficientDataError.
LifshitzFit fit_lifshitz(const IDSCurve& curve, BoundaryKind bc, const FitOptions& opts = {});

struct BoxSize {
  int L = 0;
  long raw = 0;
  bool clamped = false;
};

/// floor(sqrt(c2 / (2 c7 E))) clamped to [2, L_max].
BoxSize choose_box_size_upper(double E, const TempleConfig& cfg, int L_max);
/// ceil(2 sqrt(B2) E^-1/2) clamped to [2, L_max].
BoxSize choose_box_size_lower(double E, double B2, int L_max);

/// `count` energies spaced geometrically in [lo, hi].
std::vector<double> geometric_energies(double lo, double hi, int count);

/// Noise-free curve N(E) = exp(-c E^-s) under the Dirichlet label.
IDSCurve synthetic_curve(double c, double s, const std::vector<double>& energies, int d);

/// CSV with header E,N_D,se_D,N_M,se_M,L,n,M,seed; 17 significant digits.
void write_ids_csv(const IDSCurve& curve, std::ostream& os);
/// Reads the format above. Raw counts are not stored, so fits use OLS errors.
IDSCurve read_ids_csv(std::istream& is);

}  // namespace lifshitz
