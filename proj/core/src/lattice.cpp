#include "lifshitz/lattice.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>
#include <sstream>

#include "lifshitz/errors.hpp"
#include "lifshitz/spectral.hpp"

namespace lifshitz {
namespace {

std::size_t ipow(std::size_t base, int e) {
  std::size_t r = 1;
  for (int i = 0; i < e; ++i) r *= base;
  return r;
}

// Flat index over all axes except `skip`, increasing axis order.
std::size_t transverse_index(const std::array<int, 3>& j, int d, int skip, int N) {
  std::size_t t = 0;
  std::size_t stride = 1;
  for (int k = 0; k < d; ++k) {
    if (k == skip) continue;
    t += stride * static_cast<std::size_t>(j[k]);
    stride *= static_cast<std::size_t>(N);
  }
  return t;
}

std::vector<double> ghost_ratios(const GridSpec& grid, const BoundaryCondition& bc) {
  const std::size_t faces = 2 * static_cast<std::size_t>(grid.d) * face_size(grid);
  switch (bc.kind) {
    case BoundaryKind::dirichlet:
      return std::vector<double>(faces, -1.0);
    case BoundaryKind::neumann:
      return std::vector<double>(faces, 1.0);
    case BoundaryKind::periodic:
      return {};
    case BoundaryKind::robin: {
      if (bc.rho.size() != 1 && bc.rho.size() != faces)
        throw InputError("robin rho must hold 1 value or one per boundary face site");
      std::vector<double> r(faces);
      const double h = grid.h();
      for (std::size_t f = 0; f < faces; ++f) {
        const double rho = bc.rho.size() == 1 ? bc.rho[0] : bc.rho[f];
        if (!std::isfinite(rho) || !(1.0 + 0.5 * rho * h > 0.0))
          throw InputError("robin rho must be finite and exceed -2/h");
        r[f] = (1.0 - 0.5 * rho * h) / (1.0 + 0.5 * rho * h);
      }
      return r;
    }
    case BoundaryKind::mezincescu:
      if (bc.ghost_ratio.empty())
        throw StateError("Mezincescu boundary requested before the periodic ground state was computed");
      if (bc.ghost_ratio.size() != faces)
        throw InputError("Mezincescu ratios were computed for a different grid");
      return bc.ghost_ratio;
  }
  return {};
}

}  // namespace

std::size_t GridSpec::size() const { return ipow(static_cast<std::size_t>(points_per_axis()), d); }

std::size_t GridSpec::cell_count() const { return ipow(static_cast<std::size_t>(L), d); }

std::array<int, 3> GridSpec::unflatten(std::size_t idx) const {
  std::array<int, 3> j{0, 0, 0};
  const auto N = static_cast<std::size_t>(points_per_axis());
  for (int i = 0; i < d; ++i) {
    j[i] = static_cast<int>(idx % N);
    idx /= N;
  }
  return j;
}

std::size_t GridSpec::cell_of(std::size_t idx) const {
  const auto j = unflatten(idx);
  std::size_t c = 0;
  std::size_t stride = 1;
  for (int i = 0; i < d; ++i) {
    c += stride * static_cast<std::size_t>(j[i] / n);
    stride *= static_cast<std::size_t>(L);
  }
  return c;
}

GridSpec make_grid(int d, int L, int n) {
  if (d < 1 || d > 3) throw InputError("grid dimension must be 1, 2 or 3");
  if (L < 1) throw InputError("box side L must be >= 1");
  if (n < 4) throw InputError("need at least 4 grid points per unit cell");
  return GridSpec{d, L, n};
}

const char* to_string(BoundaryKind kind) {
  switch (kind) {
    case BoundaryKind::dirichlet: return "dirichlet";
    case BoundaryKind::neumann: return "neumann";
    case BoundaryKind::periodic: return "periodic";
    case BoundaryKind::robin: return "robin";
    case BoundaryKind::mezincescu: return "mezincescu";
  }
  return "?";
}

char tag(BoundaryKind kind) {
  switch (kind) {
    case BoundaryKind::dirichlet: return 'D';
    case BoundaryKind::neumann: return 'N';
    case BoundaryKind::periodic: return 'P';
    case BoundaryKind::robin: return 'R';
    case BoundaryKind::mezincescu: return 'M';
  }
  return '?';
}

std::size_t face_size(const GridSpec& grid) {
  return ipow(static_cast<std::size_t>(grid.points_per_axis()), grid.d - 1);
}

std::vector<double> periodic_potential_field(const ModelSpec& model, const GridSpec& grid) {
  std::vector<double> v(grid.size());
  for (std::size_t idx = 0; idx < v.size(); ++idx) {
    const auto j = grid.unflatten(idx);
    Point y{0.0, 0.0, 0.0};
    for (int i = 0; i < grid.d; ++i) y[i] = grid.local_coordinate(j[i]);
    v[idx] = evaluate_periodic(model, y);
  }
  return v;
}

std::vector<double> assemble_random_potential(const ModelSpec& model, const GridSpec& grid,
                                              std::span<const double> couplings) {
  if (couplings.size() != grid.cell_count()) {
    std::ostringstream os;
    os << "expected " << grid.cell_count() << " couplings, got " << couplings.size();
    throw InputError(os.str());
  }
  for (std::size_t c = 0; c < couplings.size(); ++c) {
    if (std::isnan(couplings[c])) {
      std::ostringstream os;
      os << "missing coupling for cell " << c;
      throw InputError(os.str());
    }
  }
  std::vector<double> v(grid.size());
  for (std::size_t idx = 0; idx < v.size(); ++idx) {
    const auto j = grid.unflatten(idx);
    Point y{0.0, 0.0, 0.0};
    for (int i = 0; i < grid.d; ++i) y[i] = grid.local_coordinate(j[i]);
    v[idx] = evaluate_site(model, couplings[grid.cell_of(idx)], y);
  }
  return v;
}

namespace {

DiscreteHamiltonian assemble_with_potential(const GridSpec& grid, const BoundaryCondition& bc,
                                            std::vector<double> potential) {
  const int d = grid.d;
  const int N = grid.points_per_axis();
  const double inv_h2 = 1.0 / (grid.h() * grid.h());
  const std::vector<double> ratio = ghost_ratios(grid, bc);
  const std::size_t fsize = face_size(grid);
  const std::size_t dim = grid.size();

  std::vector<std::size_t> stride(static_cast<std::size_t>(d));
  for (int i = 0; i < d; ++i) stride[i] = ipow(static_cast<std::size_t>(N), i);

  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(dim * (2 * static_cast<std::size_t>(d) + 1));
  for (std::size_t idx = 0; idx < dim; ++idx) {
    const auto j = grid.unflatten(idx);
    double diag = 2.0 * d * inv_h2 + potential[idx];
    for (int i = 0; i < d; ++i) {
      for (int side = 0; side < 2; ++side) {
        const int nb = j[i] + (side == 0 ? -1 : 1);
        if (nb >= 0 && nb < N) {
          const std::size_t other = side == 0 ? idx - stride[i] : idx + stride[i];
          trip.emplace_back(static_cast<int>(idx), static_cast<int>(other), -inv_h2);
        } else if (bc.kind == BoundaryKind::periodic) {
          const std::size_t other =
              side == 0 ? idx + stride[i] * (N - 1) : idx - stride[i] * (N - 1);
          trip.emplace_back(static_cast<int>(idx), static_cast<int>(other), -inv_h2);
        } else {
          const std::size_t f = (2 * static_cast<std::size_t>(i) + side) * fsize +
                                transverse_index(j, d, i, N);
          diag -= ratio[f] * inv_h2;
        }
      }
    }
    trip.emplace_back(static_cast<int>(idx), static_cast<int>(idx), diag);
  }
  DiscreteHamiltonian H{grid, bc, SparseMatrix(static_cast<Eigen::Index>(dim),
                                               static_cast<Eigen::Index>(dim)),
                        std::move(potential)};
  H.matrix.setFromTriplets(trip.begin(), trip.end());
  H.matrix.makeCompressed();
  return H;
}

}  // namespace

DiscreteHamiltonian assemble(const ModelSpec& model, const GridSpec& grid,
                             const BoundaryCondition& bc) {
  return assemble_with_potential(grid, bc, periodic_potential_field(model, grid));
}

DiscreteHamiltonian assemble(const ModelSpec& model, const GridSpec& grid,
                             const BoundaryCondition& bc, std::span<const double> couplings) {
  auto v = periodic_potential_field(model, grid);
  const auto w = assemble_random_potential(model, grid, couplings);
  for (std::size_t i = 0; i < v.size(); ++i) v[i] += w[i];
  return assemble_with_potential(grid, bc, std::move(v));
}

double GroundStateData::psi_at(const GridSpec& grid, std::size_t idx) const {
  const auto j = grid.unflatten(idx);
  std::size_t k = 0;
  std::size_t stride = 1;
  for (int i = 0; i < grid.d; ++i) {
    k += stride * static_cast<std::size_t>(j[i] % n);
    stride *= static_cast<std::size_t>(n);
  }
  return psi[k];
}

GroundStateData periodic_ground_state(const ModelSpec& model, int n) {
  return periodic_ground_state(model, n, SolverOptions{});
}

GroundStateData periodic_ground_state(const ModelSpec& model, int n, const SolverOptions& opts) {
  check_model(model);
  const GridSpec grid = make_grid(model.d, 1, n);
  const auto H = assemble(model, grid, BoundaryCondition::periodic());
  const auto res = lowest_eigenvalues(H, 1, opts);
  Eigen::VectorXd v = res.vectors.col(0);
  if (v.sum() < 0.0) v = -v;
  const double hd = std::pow(grid.h(), model.d);
  v /= std::sqrt(v.squaredNorm() * hd);

  GroundStateData gs;
  gs.d = model.d;
  gs.n = n;
  gs.E0 = res.eigenvalues[0];
  gs.psi.assign(v.data(), v.data() + v.size());
  gs.c3 = v.minCoeff();
  gs.c4 = v.maxCoeff();
  if (!(gs.c3 > 0.0)) {
    std::ostringstream os;
    os << "periodic ground state not strictly positive (min = " << gs.c3
       << "); degenerate or crossed ground state";
    throw NumericalError(os.str());
  }
  gs.weights.resize(gs.psi.size());
  for (std::size_t i = 0; i < gs.psi.size(); ++i) gs.weights[i] = gs.psi[i] * gs.psi[i] * hd;
  return gs;
}

std::vector<double> box_ground_state(const GroundStateData& gs, const GridSpec& grid) {
  if (gs.n != grid.n || gs.d != grid.d)
    throw InputError("ground state resolution does not match the grid");
  const double scale = std::pow(static_cast<double>(grid.L), -0.5 * grid.d);
  std::vector<double> out(grid.size());
  for (std::size_t idx = 0; idx < out.size(); ++idx) out[idx] = scale * gs.psi_at(grid, idx);
  return out;
}

BoundaryCondition mezincescu_correction(const GroundStateData& gs, const GridSpec& grid) {
  if (gs.n != grid.n || gs.d != grid.d)
    throw InputError("ground state resolution does not match the grid");
  const int d = grid.d;
  const int n = grid.n;
  const int N = grid.points_per_axis();
  const std::size_t fsize = face_size(grid);
  BoundaryCondition bc{BoundaryKind::mezincescu, {}, std::vector<double>(2 * d * fsize)};

  auto psi_local = [&](const std::array<int, 3>& local) {
    std::size_t k = 0;
    std::size_t stride = 1;
    for (int i = 0; i < d; ++i) {
      k += stride * static_cast<std::size_t>(local[i]);
      stride *= static_cast<std::size_t>(n);
    }
    return gs.psi[k];
  };

  for (int axis = 0; axis < d; ++axis) {
    for (int side = 0; side < 2; ++side) {
      for (std::size_t t = 0; t < fsize; ++t) {
        std::array<int, 3> j{0, 0, 0};
        std::size_t r = t;
        for (int k = 0; k < d; ++k) {
          if (k == axis) continue;
          j[k] = static_cast<int>(r % N) % n;
          r /= N;
        }
        auto inside = j;
        auto ghost = j;
        inside[axis] = side == 0 ? 0 : n - 1;
        ghost[axis] = side == 0 ? n - 1 : 0;
        bc.ghost_ratio[(2 * axis + side) * fsize + t] = psi_local(ghost) / psi_local(inside);
      }
    }
  }
  return bc;
}

void export_coordinate(const DiscreteHamiltonian& H, std::ostream& os) {
  char buf[96];
  for (Eigen::Index r = 0; r < H.matrix.outerSize(); ++r) {
    for (SparseMatrix::InnerIterator it(H.matrix, r); it; ++it) {
      std::snprintf(buf, sizeof buf, "%lld %lld %.17g\n", static_cast<long long>(it.row()),
                    static_cast<long long>(it.col()), it.value());
      os << buf;
    }
  }
}

double grid_dot(const GridSpec& grid, std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s * std::pow(grid.h(), grid.d);
}

}  // namespace lifshitz
