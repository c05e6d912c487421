#include "lifshitz/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "lifshitz/errors.hpp"
#include "lifshitz/philox.hpp"

namespace lifshitz {
namespace {

double inf_norm(const SparseMatrix& H) {
  double best = 0.0;
  for (Eigen::Index r = 0; r < H.outerSize(); ++r) {
    double s = 0.0;
    for (SparseMatrix::InnerIterator it(H, r); it; ++it) s += std::abs(it.value());
    best = std::max(best, s);
  }
  return best;
}

std::vector<double> residual_norms(const SparseMatrix& H, const Eigen::MatrixXd& V,
                                   const std::vector<double>& E) {
  std::vector<double> r(E.size());
  for (std::size_t i = 0; i < E.size(); ++i) {
    const Eigen::VectorXd v = V.col(static_cast<Eigen::Index>(i));
    r[i] = (H * v - E[i] * v).norm();
  }
  return r;
}

SpectralResult dense_lowest(const SparseMatrix& H, int m) {
  const Eigen::MatrixXd A = Eigen::MatrixXd(H);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(A);
  if (es.info() != Eigen::Success) throw NumericalError("dense symmetric eigensolver failed");
  SpectralResult res;
  res.method = SolverMethod::dense;
  res.eigenvalues.assign(es.eigenvalues().data(), es.eigenvalues().data() + m);
  res.vectors = es.eigenvectors().leftCols(m);
  res.residuals = residual_norms(H, res.vectors, res.eigenvalues);
  return res;
}

// Shift-invert Lanczos on (H - sigma)^{-1} with full reorthogonalization. Ritz
// pairs that meet the residual test are locked; the search restarts in the
// orthogonal complement until an inertia count confirms nothing lower is missing.
SpectralResult iterative_lowest(const SparseMatrix& H, int m, const SolverOptions& opts) {
  const auto n = static_cast<std::size_t>(H.rows());
  const double sigma = gershgorin_lower(H) - 1.0;
  const BandLdlt shifted(H, sigma, {});
  CounterRng rng(opts.start_seed, Stream::solver_start);

  std::vector<double> locked_values;
  std::vector<Eigen::VectorXd> locked_vectors;
  std::vector<double> best_values;
  std::vector<double> best_residuals;

  auto project_out_locked = [&](Eigen::VectorXd& w) {
    for (const auto& x : locked_vectors) w -= x.dot(w) * x;
  };

  const int kmax = static_cast<int>(std::min<std::size_t>(n, static_cast<std::size_t>(opts.max_iterations)));
  for (int restart = 0; restart < m + 8; ++restart) {
    Eigen::VectorXd q(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i)
      q[static_cast<Eigen::Index>(i)] = rng.uniform(static_cast<std::uint64_t>(restart), i) - 0.5;
    project_out_locked(q);
    q.normalize();

    std::vector<Eigen::VectorXd> basis{q};
    std::vector<double> alpha;
    std::vector<double> beta;
    const int wanted = m - static_cast<int>(locked_values.size());
    bool locked_any = false;

    for (int k = 0; k < kmax; ++k) {
      Eigen::VectorXd w = shifted.solve(basis[k]);
      project_out_locked(w);
      alpha.push_back(basis[k].dot(w));
      for (int pass = 0; pass < 2; ++pass) {
        for (const auto& b : basis) w -= b.dot(w) * b;
        project_out_locked(w);
      }
      const double bnorm = w.norm();
      const bool exhausted = bnorm < 1e-13 || k + 1 == kmax ||
                             basis.size() + locked_vectors.size() >= n;
      const bool check = exhausted || (k + 1 >= wanted && (k + 1) % 10 == 0);
      if (check) {
        const int dim = k + 1;
        Eigen::VectorXd diag = Eigen::Map<Eigen::VectorXd>(alpha.data(), dim);
        Eigen::VectorXd sub(std::max(dim - 1, 0));
        for (int i = 0; i + 1 < dim; ++i) sub[i] = beta[i];
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> tri;
        tri.computeFromTridiagonal(diag, sub, Eigen::ComputeEigenvectors);
        // Largest theta <-> lowest energy.
        std::vector<double> cand_values;
        std::vector<Eigen::VectorXd> cand_vectors;
        std::vector<double> cand_res;
        const int take = std::min(wanted, dim);
        for (int t = 0; t < take; ++t) {
          const Eigen::Index col = dim - 1 - t;
          const double theta = tri.eigenvalues()[col];
          if (!(theta > 0.0)) continue;
          Eigen::VectorXd v = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
          for (int i = 0; i < dim; ++i) v += tri.eigenvectors()(i, col) * basis[i];
          v.normalize();
          const double E = v.dot(H * v);
          cand_values.push_back(E);
          cand_res.push_back((H * v - E * v).norm());
          cand_vectors.push_back(std::move(v));
        }
        best_values = cand_values;
        best_residuals = cand_res;
        bool all_ok = static_cast<int>(cand_values.size()) == take && take > 0;
        for (std::size_t t = 0; t < cand_values.size(); ++t)
          all_ok = all_ok && cand_res[t] <= opts.tolerance * (1.0 + std::abs(cand_values[t]));
        if (all_ok || exhausted) {
          for (std::size_t t = 0; t < cand_values.size(); ++t) {
            if (cand_res[t] <= opts.tolerance * (1.0 + std::abs(cand_values[t]))) {
              locked_values.push_back(cand_values[t]);
              locked_vectors.push_back(cand_vectors[t]);
              locked_any = true;
            }
          }
          break;
        }
      }
      beta.push_back(bnorm);
      basis.push_back(w / bnorm);
    }
    if (!locked_any && static_cast<int>(locked_values.size()) < m) {
      // A full Krylov pass made no progress.
      if (restart >= 2) break;
    }
    if (static_cast<int>(locked_values.size()) >= m) {
      std::vector<std::size_t> idx(locked_values.size());
      std::iota(idx.begin(), idx.end(), 0);
      std::sort(idx.begin(), idx.end(),
                [&](std::size_t a, std::size_t b) { return locked_values[a] < locked_values[b]; });
      const double top = locked_values[idx[static_cast<std::size_t>(m - 1)]];
      const double delta = 100.0 * opts.tolerance * (1.0 + std::abs(top));
      const std::size_t have_lo = static_cast<std::size_t>(std::count_if(
          locked_values.begin(), locked_values.end(), [&](double e) { return e < top - delta; }));
      const std::size_t true_lo = count_below(H, top - delta, opts).count;
      if (true_lo <= have_lo) {
        SpectralResult res;
        res.method = SolverMethod::iterative;
        res.vectors.resize(static_cast<Eigen::Index>(n), m);
        for (int i = 0; i < m; ++i) {
          res.eigenvalues.push_back(locked_values[idx[i]]);
          res.vectors.col(i) = locked_vectors[idx[i]];
        }
        res.residuals = residual_norms(H, res.vectors, res.eigenvalues);
        return res;
      }
    }
  }
  std::ostringstream os;
  os << "shift-invert Lanczos did not converge " << m << " eigenpairs ("
     << locked_values.size() << " locked)";
  if (!locked_values.empty()) {
    best_values = locked_values;
    best_residuals.assign(locked_values.size(), 0.0);
  }
  throw ConvergenceError(os.str(), best_values, best_residuals);
}

}  // namespace

double gershgorin_lower(const SparseMatrix& H) {
  double best = std::numeric_limits<double>::infinity();
  for (Eigen::Index r = 0; r < H.outerSize(); ++r) {
    double diag = 0.0;
    double off = 0.0;
    for (SparseMatrix::InnerIterator it(H, r); it; ++it) {
      if (it.col() == r) diag += it.value();
      else off += std::abs(it.value());
    }
    best = std::min(best, diag - off);
  }
  return best;
}

double gershgorin_upper(const SparseMatrix& H) {
  double best = -std::numeric_limits<double>::infinity();
  for (Eigen::Index r = 0; r < H.outerSize(); ++r) {
    double diag = 0.0;
    double off = 0.0;
    for (SparseMatrix::InnerIterator it(H, r); it; ++it) {
      if (it.col() == r) diag += it.value();
      else off += std::abs(it.value());
    }
    best = std::max(best, diag + off);
  }
  return best;
}

BandLdlt::BandLdlt(const SparseMatrix& H, double shift, std::span<const std::size_t> order)
    : n_(static_cast<std::size_t>(H.rows())) {
  order_.resize(n_);
  if (order.empty()) {
    std::iota(order_.begin(), order_.end(), 0);
  } else {
    if (order.size() != n_) throw InputError("ordering size does not match the matrix");
    order_.assign(order.begin(), order.end());
  }
  std::vector<std::size_t> pos(n_);
  for (std::size_t p = 0; p < n_; ++p) pos[order_[p]] = p;

  for (Eigen::Index r = 0; r < H.outerSize(); ++r) {
    for (SparseMatrix::InnerIterator it(H, r); it; ++it) {
      const auto a = pos[static_cast<std::size_t>(it.row())];
      const auto b = pos[static_cast<std::size_t>(it.col())];
      bw_ = std::max(bw_, a > b ? a - b : b - a);
    }
  }
  band_.assign(n_ * (bw_ + 1), 0.0);
  for (Eigen::Index r = 0; r < H.outerSize(); ++r) {
    for (SparseMatrix::InnerIterator it(H, r); it; ++it) {
      const auto a = pos[static_cast<std::size_t>(it.row())];
      const auto b = pos[static_cast<std::size_t>(it.col())];
      if (a < b) continue;
      at(a, b) = it.value() - (a == b ? shift : 0.0);
    }
  }

  // Row-oriented LDL^T; row i of L overwrites row i of the band. Without
  // pivoting the entries can grow when a leading block is nearly singular, so
  // we track the largest magnitude entering any update; rounding in every later
  // pivot is on the order of eps times that.
  diag_.assign(n_, 0.0);
  floor_.assign(n_, 0.0);
  constexpr double eps = std::numeric_limits<double>::epsilon();
  const double unit = 8.0 * static_cast<double>(bw_ + 1) * eps;
  double growth = 0.0;
  for (std::size_t i = 0; i < n_; ++i) {
    const std::size_t j0 = i > bw_ ? i - bw_ : 0;
    for (std::size_t j = j0; j < i; ++j) {
      double s = at(i, j);
      double mag = std::abs(s);
      const std::size_t k0 = std::max(j0, j > bw_ ? j - bw_ : 0);
      for (std::size_t k = k0; k < j; ++k) {
        const double t = at(i, k) * diag_[k] * at(j, k);
        s -= t;
        mag += std::abs(t);
      }
      growth = std::max(growth, mag);
      at(i, j) = s / diag_[j];
    }
    double dii = at(i, i);
    double mag = std::abs(dii);
    for (std::size_t k = j0; k < i; ++k) {
      const double t = at(i, k) * at(i, k) * diag_[k];
      dii -= t;
      mag += std::abs(t);
    }
    growth = std::max(growth, mag);
    diag_[i] = dii;
    floor_[i] = unit * growth;
    at(i, i) = dii;
    if (dii == 0.0 || !std::isfinite(dii)) {
      // Leave the remaining rows unfactored; callers see the zero pivot.
      for (std::size_t r = i + 1; r < n_; ++r) diag_[r] = 0.0;
      break;
    }
  }
}

bool BandLdlt::has_small_pivot(double tol) const {
  for (std::size_t i = 0; i < n_; ++i) {
    const double d = diag_[i];
    if (!std::isfinite(d) || !(std::abs(d) > std::max(tol, floor_[i]))) return true;
  }
  return false;
}

std::size_t BandLdlt::negative_pivots() const {
  return static_cast<std::size_t>(
      std::count_if(diag_.begin(), diag_.end(), [](double d) { return d < 0.0; }));
}

Eigen::VectorXd BandLdlt::solve(const Eigen::VectorXd& b) const {
  Eigen::VectorXd y(static_cast<Eigen::Index>(n_));
  for (std::size_t p = 0; p < n_; ++p) y[static_cast<Eigen::Index>(p)] = b[static_cast<Eigen::Index>(order_[p])];
  for (std::size_t i = 0; i < n_; ++i) {
    const std::size_t j0 = i > bw_ ? i - bw_ : 0;
    double s = y[static_cast<Eigen::Index>(i)];
    for (std::size_t k = j0; k < i; ++k) s -= at(i, k) * y[static_cast<Eigen::Index>(k)];
    y[static_cast<Eigen::Index>(i)] = s;
  }
  for (std::size_t i = 0; i < n_; ++i) y[static_cast<Eigen::Index>(i)] /= diag_[i];
  for (std::size_t ii = n_; ii-- > 0;) {
    const double yi = y[static_cast<Eigen::Index>(ii)];
    const std::size_t j0 = ii > bw_ ? ii - bw_ : 0;
    for (std::size_t k = j0; k < ii; ++k) y[static_cast<Eigen::Index>(k)] -= at(ii, k) * yi;
  }
  Eigen::VectorXd x(static_cast<Eigen::Index>(n_));
  for (std::size_t p = 0; p < n_; ++p) x[static_cast<Eigen::Index>(order_[p])] = y[static_cast<Eigen::Index>(p)];
  return x;
}

std::vector<std::size_t> banded_ordering(const GridSpec& grid, bool periodic) {
  const int N = grid.points_per_axis();
  std::vector<int> fold(static_cast<std::size_t>(N));
  for (int p = 0; p < N; ++p) fold[p] = periodic ? (p % 2 == 0 ? p / 2 : N - 1 - p / 2) : p;
  std::vector<std::size_t> order(grid.size());
  for (std::size_t p = 0; p < order.size(); ++p) {
    std::size_t r = p;
    std::size_t idx = 0;
    std::size_t stride = 1;
    for (int i = 0; i < grid.d; ++i) {
      idx += stride * static_cast<std::size_t>(fold[r % N]);
      r /= N;
      stride *= static_cast<std::size_t>(N);
    }
    order[p] = idx;
  }
  return order;
}

CountingValue count_below(const SparseMatrix& H, double E, const SolverOptions& opts,
                          std::span<const std::size_t> order) {
  if (!std::isfinite(E)) throw InputError("count_below needs a finite energy");
  const double tol = opts.pivot_tolerance * std::max(1.0, inf_norm(H));
  CountingValue cv;
  cv.energy = E;
  double shift = E;
  for (int attempt = 0; attempt <= opts.max_perturbations; ++attempt) {
    const BandLdlt f(H, shift, order);
    if (!f.has_small_pivot(tol)) {
      cv.count = f.negative_pivots();
      cv.evaluated_at = shift;
      cv.perturbations = attempt;
      return cv;
    }
    // First retry nudges by 1e-12 (1 + |E|); later ones move a decade further
    // each, since rounding noise near a degenerate level shrinks only linearly.
    shift = E + 1e-12 * (1.0 + std::abs(E)) * std::pow(10.0, attempt);
  }
  std::ostringstream os;
  os << "inertia factorization broke down at E = " << E << " after "
     << opts.max_perturbations << " perturbations";
  throw NumericalError(os.str());
}

CountingValue count_below(const DiscreteHamiltonian& H, double E, const SolverOptions& opts) {
  const auto order = banded_ordering(H.grid, H.bc.kind == BoundaryKind::periodic);
  return count_below(H.matrix, E, opts, order);
}

std::vector<std::size_t> count_below(const DiscreteHamiltonian& H, std::span<const double> energies,
                                     const SolverOptions& opts) {
  const auto order = banded_ordering(H.grid, H.bc.kind == BoundaryKind::periodic);
  std::vector<std::size_t> out;
  out.reserve(energies.size());
  for (double E : energies) out.push_back(count_below(H.matrix, E, opts, order).count);
  return out;
}

SpectralResult lowest_eigenvalues(const SparseMatrix& H, int m, const SolverOptions& opts) {
  const auto n = static_cast<std::size_t>(H.rows());
  if (m < 1 || static_cast<std::size_t>(m) > n)
    throw InputError("requested eigenvalue count must lie in [1, dim]");
  SpectralResult res = n <= opts.dense_threshold ? dense_lowest(H, m) : iterative_lowest(H, m, opts);
  for (std::size_t i = 0; i < res.eigenvalues.size(); ++i) {
    if (res.residuals[i] > opts.tolerance * (1.0 + std::abs(res.eigenvalues[i]))) {
      std::ostringstream os;
      os << "eigenpair " << i << " residual " << res.residuals[i] << " above tolerance";
      throw ConvergenceError(os.str(), res.eigenvalues, res.residuals);
    }
  }
  return res;
}

SpectralResult lowest_eigenvalues(const DiscreteHamiltonian& H, int m, const SolverOptions& opts) {
  return lowest_eigenvalues(H.matrix, m, opts);
}

GapResult spectral_gap(const DiscreteHamiltonian& H, const SolverOptions& opts) {
  if (H.matrix.rows() < 2) throw InputError("spectral gap needs dimension >= 2");
  const auto res = lowest_eigenvalues(H, 2, opts);
  return {res.eigenvalues[0], res.eigenvalues[1], res.eigenvalues[1] - res.eigenvalues[0]};
}

}  // namespace lifshitz
