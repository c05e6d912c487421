#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <vector>

#include <Eigen/SparseCore>

#include "lifshitz/model.hpp"

namespace lifshitz {

/// Cell-centered grid on the cube Lambda_L = [-L/2, L/2]^d with n points per
/// unit cell and axis. Point j along an axis sits at (j + 1/2) h - L/2; flat
/// indices run with axis 0 fastest. The L^d unit cells play the role of the
/// lattice sites I_L; a site's couplings live at its cell center.
struct GridSpec {
  int d = 1;
  int L = 1;
  int n = 16;

  double h() const { return 1.0 / n; }
  int points_per_axis() const { return n * L; }
  std::size_t size() const;
  std::size_t cell_count() const;

  /// Box coordinate of the grid index along one axis.
  double coordinate(int j) const { return (j + 0.5) * h() - 0.5 * L; }
  /// Coordinate relative to the center of the enclosing unit cell.
  double local_coordinate(int j) const { return ((j % n) + 0.5) * h() - 0.5; }
  /// Center of cell c along one axis.
  double cell_center(int c) const { return c + 0.5 - 0.5 * L; }

  std::array<int, 3> unflatten(std::size_t idx) const;
  std::size_t cell_of(std::size_t idx) const;
};

/// Throws InputError unless L >= 1, n >= 4 and d in {1, 2, 3}.
GridSpec make_grid(int d, int L, int n);

enum class BoundaryKind { dirichlet, neumann, periodic, robin, mezincescu };

/// Boundary treatment. Non-periodic conditions are folded into the diagonal
/// through a ghost value u_ghost = r * u_boundary, one ratio r per boundary
/// face site:
///   Dirichlet r = -1 (zero at the cube face), Neumann r = 1,
///   Robin r = (1 - rho h / 2) / (1 + rho h / 2),
///   Mezincescu r = Psi(ghost) / Psi(boundary) from the periodic ground state.
/// Face sites are indexed face * face_size + t with face = 2 * axis + side
/// (side 0 low, 1 high) and t the flat index over the remaining axes.
struct BoundaryCondition {
  BoundaryKind kind = BoundaryKind::dirichlet;
  std::vector<double> rho;          // robin: one value, or one per face site
  std::vector<double> ghost_ratio;  // mezincescu: one per face site

  static BoundaryCondition dirichlet() { return {BoundaryKind::dirichlet, {}, {}}; }
  static BoundaryCondition neumann() { return {BoundaryKind::neumann, {}, {}}; }
  static BoundaryCondition periodic() { return {BoundaryKind::periodic, {}, {}}; }
  static BoundaryCondition robin(std::vector<double> rho) {
    return {BoundaryKind::robin, std::move(rho), {}};
  }
  /// Placeholder; assembling with it raises StateError until
  /// mezincescu_correction supplies the ratios.
  static BoundaryCondition mezincescu_unresolved() { return {BoundaryKind::mezincescu, {}, {}}; }
};

const char* to_string(BoundaryKind kind);
/// Single-letter tag used in reports: D, N, P, R, M.
char tag(BoundaryKind kind);

std::size_t face_size(const GridSpec& grid);

using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

struct DiscreteHamiltonian {
  GridSpec grid;
  BoundaryCondition bc;
  SparseMatrix matrix;
  std::vector<double> potential;  // diagonal potential V_per + V_omega
};

/// -Delta_h + V_per (+ V_omega when couplings are given) with the requested
/// boundary treatment. Couplings are indexed by cell, axis 0 fastest.
DiscreteHamiltonian assemble(const ModelSpec& model, const GridSpec& grid,
                             const BoundaryCondition& bc);
DiscreteHamiltonian assemble(const ModelSpec& model, const GridSpec& grid,
                             const BoundaryCondition& bc, std::span<const double> couplings);

/// Sampled V_per on the grid.
std::vector<double> periodic_potential_field(const ModelSpec& model, const GridSpec& grid);

/// Sampled V_omega(x) = sum_k u(lambda_k, x - k). Each grid point lies in
/// exactly one cell, so a single term contributes.
std::vector<double> assemble_random_potential(const ModelSpec& model, const GridSpec& grid,
                                              std::span<const double> couplings);

struct SolverOptions;

/// Periodic unit-cell ground state.
struct GroundStateData {
  int d = 1;
  int n = 16;
  std::vector<double> psi;      // n^d values, positive, sum psi^2 h^d = 1
  double E0 = 0.0;
  double c3 = 0.0;              // min psi
  double c4 = 0.0;              // max psi
  std::vector<double> weights;  // psi^2 h^d

  /// Psi at a box grid point (periodic extension).
  double psi_at(const GridSpec& grid, std::size_t idx) const;
};

/// Lowest eigenpair of the L = 1 periodic problem, sign-fixed so Psi > 0.
/// Throws NumericalError if Psi is not strictly positive.
GroundStateData periodic_ground_state(const ModelSpec& model, int n);
GroundStateData periodic_ground_state(const ModelSpec& model, int n, const SolverOptions& opts);

/// psi_L = L^{-d/2} * periodic extension of Psi on the box; unit norm under
/// the h^d-weighted inner product.
std::vector<double> box_ground_state(const GroundStateData& gs, const GridSpec& grid);

/// Mezincescu ghost ratios Psi(x_ghost) / Psi(x) for every boundary face site.
BoundaryCondition mezincescu_correction(const GroundStateData& gs, const GridSpec& grid);

/// Writes "row col value" lines (0-based, 17 significant digits).
void export_coordinate(const DiscreteHamiltonian& H, std::ostream& os);

/// h^d-weighted inner product on grid functions.
double grid_dot(const GridSpec& grid, std::span<const double> a, std::span<const double> b);

}  // namespace lifshitz
