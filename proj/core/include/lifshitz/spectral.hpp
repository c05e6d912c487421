#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "lifshitz/lattice.hpp"

namespace lifshitz {

struct SolverOptions {
  /// Eigenpair residual: ||Hv - Ev|| <= tolerance * (1 + |E|).
  double tolerance = 1e-9;
  /// Pivots with |d| <= pivot_tolerance * max(1, ||H||_inf) count as zero.
  double pivot_tolerance = 1e-12;
  /// Dimension above which the iterative solver replaces the dense one.
  std::size_t dense_threshold = 2000;
  int max_iterations = 600;
  int max_perturbations = 8;
  std::uint64_t start_seed = 0x51ED5EEDull;
};

enum class SolverMethod { dense, iterative };

struct SpectralResult {
  std::vector<double> eigenvalues;  // nondecreasing, repeated by multiplicity
  std::vector<double> residuals;
  SolverMethod method = SolverMethod::dense;
  Eigen::MatrixXd vectors;  // columns, unit Euclidean norm
};

/// The m smallest eigenpairs. Dense symmetric solve up to dense_threshold,
/// above it shift-invert Lanczos with full reorthogonalization and locking;
/// completeness of each multiplicity is confirmed by an inertia count.
/// Throws ConvergenceError carrying the best iterate.
SpectralResult lowest_eigenvalues(const SparseMatrix& H, int m, const SolverOptions& opts = {});
SpectralResult lowest_eigenvalues(const DiscreteHamiltonian& H, int m,
                                  const SolverOptions& opts = {});

struct CountingValue {
  double energy = 0.0;
  std::size_t count = 0;
  double evaluated_at = 0.0;  // energy after zero-pivot perturbations
  int perturbations = 0;
};

/// N(E, H) = #{eigenvalues <= E} from the inertia of a banded LDL^T
/// factorization of H - E. `order` (optional) is a symmetric permutation
/// applied first: order[p] = original index placed at position p.
CountingValue count_below(const SparseMatrix& H, double E, const SolverOptions& opts = {},
                          std::span<const std::size_t> order = {});
/// Uses a bandwidth-reducing ordering that folds periodic axes.
CountingValue count_below(const DiscreteHamiltonian& H, double E, const SolverOptions& opts = {});
std::vector<std::size_t> count_below(const DiscreteHamiltonian& H, std::span<const double> energies,
                                     const SolverOptions& opts = {});

struct GapResult {
  double e1 = 0.0;
  double e2 = 0.0;
  double gap = 0.0;
};

GapResult spectral_gap(const DiscreteHamiltonian& H, const SolverOptions& opts = {});

/// Ordering used by count_below for a Hamiltonian: identity along
/// non-periodic axes, interleaved (0, N-1, 1, N-2, ...) along periodic ones.
std::vector<std::size_t> banded_ordering(const GridSpec& grid, bool periodic);

/// Lower Gershgorin bound min_i (H_ii - sum_j |H_ij|).
double gershgorin_lower(const SparseMatrix& H);
double gershgorin_upper(const SparseMatrix& H);

/// Symmetric banded LDL^T without pivoting of P (H - shift) P^T.
class BandLdlt {
 public:
  BandLdlt(const SparseMatrix& H, double shift, std::span<const std::size_t> order);

  /// True if some pivot fell within `tol` of zero, or below the rounding
  /// floor set by element growth earlier in the factorization (a nearly
  /// singular leading block leaves later pivot signs meaningless).
  bool has_small_pivot(double tol) const;
  std::size_t negative_pivots() const;
  std::size_t bandwidth() const { return bw_; }
  /// Solves (H - shift) x = b in the original ordering.
  Eigen::VectorXd solve(const Eigen::VectorXd& b) const;

 private:
  std::size_t n_ = 0;
  std::size_t bw_ = 0;
  std::vector<std::size_t> order_;  // position -> original index
  std::vector<double> band_;        // row-major (n, bw + 1): L(i, i - bw .. i-1), D(i)
  std::vector<double> diag_;
  std::vector<double> floor_;  // rounding floor of each pivot given growth so far

  double& at(std::size_t i, std::size_t j) { return band_[i * (bw_ + 1) + (j + bw_ - i)]; }
  double at(std::size_t i, std::size_t j) const { return band_[i * (bw_ + 1) + (j + bw_ - i)]; }
};

}  // namespace lifshitz
