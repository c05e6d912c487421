#include "lifshitz/ids.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <map>
#include <numeric>
#include <ostream>
#include <sstream>

#include "lifshitz/errors.hpp"
#include "lifshitz/parallel.hpp"
#include "lifshitz/philox.hpp"

namespace lifshitz {
namespace {

std::size_t cells_of(int L, int d) {
  std::size_t r = 1;
  for (int i = 0; i < d; ++i) r *= static_cast<std::size_t>(L);
  return r;
}

struct Ols {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_se = 0.0;
};

Ols ols(const std::vector<double>& x, const std::vector<double>& y) {
  const double m = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / m;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / m;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  Ols r;
  r.slope = sxy / sxx;
  r.intercept = my - r.slope * mx;
  if (x.size() > 2) {
    double rss = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double e = y[i] - r.intercept - r.slope * x[i];
      rss += e * e;
    }
    r.slope_se = std::sqrt(rss / (m - 2.0) / sxx);
  }
  return r;
}

// Type-7 sample quantile of sorted data.
double sample_quantile(const std::vector<double>& sorted, double q) {
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

long snap(double x) {
  const double r = std::round(x);
  return std::abs(x - r) <= 1e-9 * std::max(1.0, std::abs(x)) ? static_cast<long>(r) : -1;
}

BoxSize clamp_box(long raw, int L_max) {
  BoxSize b;
  b.raw = raw;
  b.L = static_cast<int>(std::clamp<long>(raw, 2, std::max(2, L_max)));
  b.clamped = b.L != raw;
  return b;
}

}  // namespace

std::uint64_t site_code(const std::array<int, 3>& cell) {
  return static_cast<std::uint64_t>(cell[0]) | (static_cast<std::uint64_t>(cell[1]) << 21) |
         (static_cast<std::uint64_t>(cell[2]) << 42);
}

Realization sample_realization(const DistributionSpec& dist, std::uint64_t seed,
                               std::uint64_t index, int L, int d) {
  if (L < 1 || L >= (1 << 21) || d < 1 || d > 3) throw InputError("invalid box for sampling");
  Realization r{seed, index, L, d, {}};
  const std::size_t count = cells_of(L, d);
  r.couplings.resize(count);
  const CounterRng rng(seed, Stream::couplings);
  for (std::size_t c = 0; c < count; ++c) {
    std::array<int, 3> cell{0, 0, 0};
    std::size_t rem = c;
    for (int i = 0; i < d; ++i) {
      cell[i] = static_cast<int>(rem % static_cast<std::size_t>(L));
      rem /= static_cast<std::size_t>(L);
    }
    r.couplings[c] = quantile(dist, rng.uniform(site_code(cell), index));
  }
  return r;
}

int IDSCurve::bc_index(BoundaryKind kind) const {
  for (std::size_t i = 0; i < bcs.size(); ++i)
    if (bcs[i] == kind) return static_cast<int>(i);
  return -1;
}

double batch_means_se(const std::vector<double>& values) {
  const std::size_t M = values.size();
  if (M < 2) return 0.0;
  const std::size_t B = std::min<std::size_t>(M, 32);
  std::vector<double> means(B, 0.0);
  for (std::size_t b = 0; b < B; ++b) {
    const std::size_t lo = b * M / B;
    const std::size_t hi = (b + 1) * M / B;
    double s = 0.0;
    for (std::size_t i = lo; i < hi; ++i) s += values[i];
    means[b] = s / static_cast<double>(hi - lo);
  }
  const double mean = std::accumulate(means.begin(), means.end(), 0.0) / static_cast<double>(B);
  double ss = 0.0;
  for (double m : means) ss += (m - mean) * (m - mean);
  return std::sqrt(ss / static_cast<double>(B - 1) / static_cast<double>(B));
}

IDSCurve estimate_ids(const ModelSpec& model, const GroundStateData& gs, const GridSpec& grid,
                      const std::vector<BoundaryKind>& bcs, const std::vector<double>& energies,
                      const IdsOptions& opts) {
  if (!std::is_sorted(energies.begin(), energies.end()))
    throw InputError("IDS energies must be sorted");
  if (opts.samples < 1) throw InputError("IDS estimate needs at least one sample");
  if (bcs.empty()) throw InputError("IDS estimate needs a boundary condition");

  std::vector<BoundaryCondition> conds;
  for (BoundaryKind kind : bcs) {
    switch (kind) {
      case BoundaryKind::dirichlet: conds.push_back(BoundaryCondition::dirichlet()); break;
      case BoundaryKind::neumann: conds.push_back(BoundaryCondition::neumann()); break;
      case BoundaryKind::periodic: conds.push_back(BoundaryCondition::periodic()); break;
      case BoundaryKind::mezincescu: conds.push_back(mezincescu_correction(gs, grid)); break;
      case BoundaryKind::robin: throw InputError("IDS estimates support D, N, P and M conditions");
    }
  }

  const std::size_t M = opts.samples;
  const std::size_t nE = energies.size();
  std::vector<std::vector<std::vector<std::uint32_t>>> counts(
      bcs.size(), std::vector<std::vector<std::uint32_t>>(nE, std::vector<std::uint32_t>(M, 0)));

  std::vector<std::vector<std::size_t>> orders;
  for (const auto& bc : conds) orders.push_back(banded_ordering(grid, bc.kind == BoundaryKind::periodic));

  parallel_for(M, opts.workers, [&](std::size_t i) {
    const Realization r = sample_realization(model.dist, opts.seed, i, grid.L, grid.d);
    for (std::size_t b = 0; b < conds.size(); ++b) {
      const DiscreteHamiltonian H = assemble(model, grid, conds[b], r.couplings);
      for (std::size_t j = 0; j < nE; ++j) {
        try {
          counts[b][j][i] =
              static_cast<std::uint32_t>(count_below(H.matrix, energies[j], opts.solver, orders[b]).count);
        } catch (const NumericalError& e) {
          std::ostringstream os;
          os << "realization " << i << ", E = " << energies[j] << ": " << e.what();
          throw NumericalError(os.str());
        }
      }
    }
  });

  IDSCurve curve;
  curve.d = grid.d;
  curve.n = grid.n;
  curve.M = M;
  curve.seed = opts.seed;
  curve.energies = energies;
  curve.L.assign(nE, grid.L);
  curve.bcs = bcs;
  const double vol = static_cast<double>(grid.cell_count());
  curve.mean.assign(bcs.size(), std::vector<double>(nE, 0.0));
  curve.se.assign(bcs.size(), std::vector<double>(nE, 0.0));
  std::vector<double> values(M);
  for (std::size_t b = 0; b < bcs.size(); ++b) {
    for (std::size_t j = 0; j < nE; ++j) {
      double s = 0.0;
      for (std::size_t i = 0; i < M; ++i) {
        values[i] = counts[b][j][i] / vol;
        s += values[i];
      }
      curve.mean[b][j] = s / static_cast<double>(M);
      curve.se[b][j] = batch_means_se(values);
    }
  }
  if (opts.keep_counts) curve.counts = std::move(counts);
  return curve;
}

IDSCurve estimate_ids_scaled(const ModelSpec& model, const GroundStateData& gs, int n,
                             const std::vector<double>& energies, const std::vector<int>& Ls,
                             const std::vector<BoundaryKind>& bcs, const IdsOptions& opts) {
  if (energies.size() != Ls.size()) throw InputError("one box size per energy required");
  if (!std::is_sorted(energies.begin(), energies.end()))
    throw InputError("IDS energies must be sorted");
  std::map<int, std::vector<std::size_t>> groups;
  for (std::size_t j = 0; j < energies.size(); ++j) groups[Ls[j]].push_back(j);

  IDSCurve out;
  out.d = model.d;
  out.n = n;
  out.M = opts.samples;
  out.seed = opts.seed;
  out.energies = energies;
  out.L = Ls;
  out.bcs = bcs;
  const std::size_t nE = energies.size();
  out.mean.assign(bcs.size(), std::vector<double>(nE, 0.0));
  out.se.assign(bcs.size(), std::vector<double>(nE, 0.0));
  if (opts.keep_counts) out.counts.assign(bcs.size(), std::vector<std::vector<std::uint32_t>>(nE));

  for (const auto& [L, rows] : groups) {
    std::vector<double> es;
    for (std::size_t j : rows) es.push_back(energies[j]);
    const IDSCurve part = estimate_ids(model, gs, make_grid(model.d, L, n), bcs, es, opts);
    for (std::size_t b = 0; b < bcs.size(); ++b) {
      for (std::size_t t = 0; t < rows.size(); ++t) {
        out.mean[b][rows[t]] = part.mean[b][t];
        out.se[b][rows[t]] = part.se[b][t];
        if (opts.keep_counts) out.counts[b][rows[t]] = part.counts[b][t];
      }
    }
  }
  return out;
}

bool BracketingReport::all_ok() const {
  if (pathwise_violations != 0) return false;
  for (const auto& m : monotonicity)
    if (!m.ok) return false;
  for (const auto& c : cross)
    if (!c.ok) return false;
  return true;
}

BracketingReport bracketing_report(const ModelSpec& model, const GroundStateData& gs, int n,
                                   std::vector<int> Ls, const std::vector<double>& energies,
                                   const IdsOptions& opts, double z) {
  std::sort(Ls.begin(), Ls.end());
  Ls.erase(std::unique(Ls.begin(), Ls.end()), Ls.end());
  if (Ls.size() < 2) throw InputError("bracketing needs at least two box sizes");
  BracketingReport rep;
  rep.Ls = Ls;
  rep.energies = energies;
  rep.z = z;
  IdsOptions o = opts;
  o.keep_counts = true;
  const std::vector<BoundaryKind> bcs{BoundaryKind::dirichlet, BoundaryKind::mezincescu};
  for (int L : Ls) {
    rep.curves.push_back(estimate_ids(model, gs, make_grid(model.d, L, n), bcs, energies, o));
    const IDSCurve& c = rep.curves.back();
    for (std::size_t j = 0; j < energies.size(); ++j) {
      for (std::size_t i = 0; i < c.M; ++i) {
        ++rep.pathwise_checks;
        if (c.counts[0][j][i] > c.counts[1][j][i]) ++rep.pathwise_violations;
      }
    }
  }
  for (std::size_t a = 0; a + 1 < Ls.size(); ++a) {
    const IDSCurve& s = rep.curves[a];
    const IDSCurve& l = rep.curves[a + 1];
    for (std::size_t j = 0; j < energies.size(); ++j) {
      for (std::size_t b = 0; b < 2; ++b) {
        MonotonicityCheck m;
        m.bc = bcs[b];
        m.energy = energies[j];
        m.L_small = Ls[a];
        m.L_large = Ls[a + 1];
        m.difference = l.mean[b][j] - s.mean[b][j];
        m.combined_se = std::hypot(s.se[b][j], l.se[b][j]);
        m.ok = b == 0 ? m.difference >= -z * m.combined_se : m.difference <= z * m.combined_se;
        rep.monotonicity.push_back(m);
      }
    }
  }
  for (std::size_t j = 0; j < energies.size(); ++j) {
    for (std::size_t a = 0; a < Ls.size(); ++a) {
      for (std::size_t b = 0; b < Ls.size(); ++b) {
        CrossCheck c;
        c.energy = energies[j];
        c.L_dirichlet = Ls[a];
        c.L_mezincescu = Ls[b];
        c.difference = rep.curves[b].mean[1][j] - rep.curves[a].mean[0][j];
        c.combined_se = std::hypot(rep.curves[a].se[0][j], rep.curves[b].se[1][j]);
        c.ok = c.difference >= -z * c.combined_se;
        rep.cross.push_back(c);
      }
    }
  }
  return rep;
}

LifshitzFit fit_lifshitz(const IDSCurve& curve, BoundaryKind bc, const FitOptions& opts) {
  const int b = curve.bc_index(bc);
  if (b < 0) throw InputError(std::string("curve has no ") + to_string(bc) + " estimate");
  if (!(0 < opts.n_min && opts.n_min < opts.n_max && opts.n_max < 1))
    throw InputError("fit window needs 0 < N_min < N_max < 1");

  LifshitzFit fit;
  fit.n_min = opts.n_min;
  fit.n_max = opts.n_max;
  fit.target = -0.5 * curve.d;
  std::vector<std::size_t> rows;
  for (std::size_t j = 0; j < curve.energies.size(); ++j) {
    const double N = curve.mean[b][j];
    const double E = curve.energies[j];
    if (!(E > 0) || N < opts.n_min || N > opts.n_max) continue;
    if (!(curve.se[b][j] < opts.max_relative_se * N)) continue;
    LifshitzPoint p{E, N, curve.se[b][j], curve.L[j], std::log(E), std::log(std::abs(std::log(N)))};
    fit.points.push_back(p);
    rows.push_back(j);
  }
  if (fit.points.size() < opts.min_points) {
    std::ostringstream os;
    os << "only " << fit.points.size() << " admissible points in window N in [" << opts.n_min
       << ", " << opts.n_max << "] (need " << opts.min_points << ")";
    throw InsufficientDataError(os.str());
  }
  std::vector<double> x, y;
  for (const auto& p : fit.points) {
    x.push_back(p.x);
    y.push_back(p.y);
  }
  const Ols base = ols(x, y);
  fit.slope = base.slope;
  fit.intercept = base.intercept;
  fit.e_lo = fit.points.front().energy;
  fit.e_hi = fit.points.back().energy;

  const bool have_counts = !curve.counts.empty() && curve.M > 1 && opts.bootstrap > 0;
  if (!have_counts) {
    fit.ci_method = "ols";
    fit.ci_lo = base.slope - 1.96 * base.slope_se;
    fit.ci_hi = base.slope + 1.96 * base.slope_se;
    return fit;
  }
  fit.ci_method = "bootstrap";
  const CounterRng rng(opts.seed, Stream::bootstrap);
  const std::size_t M = curve.M;
  std::vector<std::size_t> pick(M);
  std::vector<double> slopes;
  for (int r = 0; r < opts.bootstrap; ++r) {
    for (std::size_t i = 0; i < M; ++i)
      pick[i] = std::min(M - 1, static_cast<std::size_t>(rng.uniform(static_cast<std::uint64_t>(r), i) *
                                                         static_cast<double>(M)));
    std::vector<double> bx, by;
    for (std::size_t t = 0; t < rows.size(); ++t) {
      const std::size_t j = rows[t];
      const auto& c = curve.counts[b][j];
      double s = 0.0;
      for (std::size_t i : pick) s += c[i];
      const double N = s / static_cast<double>(M) / static_cast<double>(cells_of(curve.L[j], curve.d));
      if (N > 0 && N < 1) {
        bx.push_back(x[t]);
        by.push_back(std::log(std::abs(std::log(N))));
      }
    }
    if (bx.size() >= 2) slopes.push_back(ols(bx, by).slope);
  }
  if (slopes.empty()) {
    fit.ci_lo = fit.ci_hi = fit.slope;
    return fit;
  }
  std::sort(slopes.begin(), slopes.end());
  fit.ci_lo = sample_quantile(slopes, 0.025);
  fit.ci_hi = sample_quantile(slopes, 0.975);
  return fit;
}

BoxSize choose_box_size_upper(double E, const TempleConfig& cfg, int L_max) {
  if (!(E > 0)) throw DomainError("box size needs E > 0");
  const double v = std::sqrt(cfg.c2 / (2.0 * cfg.c7 * E));
  const long s = snap(v);
  return clamp_box(s >= 0 ? s : static_cast<long>(std::floor(v)), L_max);
}

BoxSize choose_box_size_lower(double E, double B2, int L_max) {
  if (!(E > 0)) throw DomainError("box size needs E > 0");
  const double v = 2.0 * std::sqrt(B2) / std::sqrt(E);
  const long s = snap(v);
  return clamp_box(s >= 0 ? s : static_cast<long>(std::ceil(v)), L_max);
}

std::vector<double> geometric_energies(double lo, double hi, int count) {
  if (!(lo > 0 && hi >= lo) || count < 1) throw InputError("geometric grid needs 0 < lo <= hi");
  std::vector<double> e(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i)
    e[i] = count == 1 ? lo : lo * std::pow(hi / lo, static_cast<double>(i) / (count - 1));
  return e;
}

IDSCurve synthetic_curve(double c, double s, const std::vector<double>& energies, int d) {
  IDSCurve curve;
  curve.d = d;
  curve.n = 0;
  curve.M = 0;
  curve.energies = energies;
  curve.L.assign(energies.size(), 0);
  curve.bcs = {BoundaryKind::dirichlet};
  curve.mean.assign(1, std::vector<double>(energies.size()));
  curve.se.assign(1, std::vector<double>(energies.size(), 0.0));
  for (std::size_t j = 0; j < energies.size(); ++j)
    curve.mean[0][j] = std::exp(-c * std::pow(energies[j], -s));
  return curve;
}

void write_ids_csv(const IDSCurve& curve, std::ostream& os) {
  const int bd = curve.bc_index(BoundaryKind::dirichlet);
  const int bm = curve.bc_index(BoundaryKind::mezincescu);
  char buf[64];
  auto num = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return std::string(buf);
  };
  os << "E,N_D,se_D,N_M,se_M,L,n,M,seed\n";
  for (std::size_t j = 0; j < curve.energies.size(); ++j) {
    os << num(curve.energies[j]) << ',';
    os << (bd >= 0 ? num(curve.mean[bd][j]) : "nan") << ',' << (bd >= 0 ? num(curve.se[bd][j]) : "nan") << ',';
    os << (bm >= 0 ? num(curve.mean[bm][j]) : "nan") << ',' << (bm >= 0 ? num(curve.se[bm][j]) : "nan") << ',';
    os << curve.L[j] << ',' << curve.n << ',' << curve.M << ',' << curve.seed << '\n';
  }
}

IDSCurve read_ids_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw InputError("empty IDS curve file");
  std::vector<std::string> header;
  {
    std::stringstream ss(line);
    std::string f;
    while (std::getline(ss, f, ',')) header.push_back(f);
  }
  auto col = [&](const char* name) -> int {
    for (std::size_t i = 0; i < header.size(); ++i)
      if (header[i] == name) return static_cast<int>(i);
    return -1;
  };
  const int cE = col("E"), cND = col("N_D"), cSD = col("se_D"), cNM = col("N_M"), cSM = col("se_M");
  const int cL = col("L"), cn = col("n"), cM = col("M"), cs = col("seed");
  if (cE < 0 || cND < 0 || cSD < 0) throw InputError("IDS curve CSV needs columns E, N_D, se_D");
  const bool has_m = cNM >= 0 && cSM >= 0;

  IDSCurve curve;
  curve.bcs = {BoundaryKind::dirichlet};
  if (has_m) curve.bcs.push_back(BoundaryKind::mezincescu);
  curve.mean.assign(curve.bcs.size(), {});
  curve.se.assign(curve.bcs.size(), {});
  int lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string v;
    while (std::getline(ss, v, ',')) f.push_back(v);
    if (f.size() < header.size()) {
      std::ostringstream os;
      os << "IDS curve CSV line " << lineno << ": expected " << header.size() << " fields";
      throw InputError(os.str());
    }
    auto get = [&](int c) {
      try {
        return std::stod(f[static_cast<std::size_t>(c)]);
      } catch (const std::exception&) {
        std::ostringstream os;
        os << "IDS curve CSV line " << lineno << ": bad number '" << f[static_cast<std::size_t>(c)] << "'";
        throw InputError(os.str());
      }
    };
    curve.energies.push_back(get(cE));
    curve.mean[0].push_back(get(cND));
    curve.se[0].push_back(get(cSD));
    if (has_m) {
      curve.mean[1].push_back(get(cNM));
      curve.se[1].push_back(get(cSM));
    }
    curve.L.push_back(cL >= 0 ? static_cast<int>(get(cL)) : 0);
    if (cn >= 0) curve.n = static_cast<int>(get(cn));
    if (cM >= 0) curve.M = static_cast<std::size_t>(get(cM));
    if (cs >= 0) curve.seed = static_cast<std::uint64_t>(std::stoull(f[static_cast<std::size_t>(cs)]));
  }
  return curve;
}

}  // namespace lifshitz
