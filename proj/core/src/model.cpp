#include "lifshitz/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include <boost/math/special_functions/beta.hpp>

#include "lifshitz/errors.hpp"

namespace lifshitz {
namespace {

double norm2(const Point& x, int d) {
  double s = 0.0;
  for (int i = 0; i < d; ++i) s += x[i] * x[i];
  return s;
}

bool outside_unit_cell(const Point& x, int d) {
  for (int i = 0; i < d; ++i) {
    if (std::abs(x[i]) > 0.5) return true;
  }
  return false;
}

double bump_sum(const std::vector<Bump>& bumps, double r2) {
  double f = 0.0;
  for (const auto& b : bumps) {
    const double t = 1.0 - r2 / (b.radius * b.radius);
    if (t > 0.0) f += b.amplitude * t * t;
  }
  return f;
}

// Index of the nearest cell-centered sample for y in [-1/2, 1/2].
int nearest_sample(double y, int n) {
  const int m = static_cast<int>(std::floor((y + 0.5) * n));
  return std::clamp(m, 0, n - 1);
}

std::size_t table_offset(const Point& x, int d, int n) {
  std::size_t idx = 0;
  std::size_t stride = 1;
  for (int i = 0; i < d; ++i) {
    idx += stride * static_cast<std::size_t>(nearest_sample(x[i], n));
    stride *= static_cast<std::size_t>(n);
  }
  return idx;
}

double tabulated_value(const TabulatedSite& t, int d, double lambda, const Point& x) {
  if (outside_unit_cell(x, d)) return 0.0;
  std::size_t block = 1;
  for (int i = 0; i < d; ++i) block *= static_cast<std::size_t>(t.n);
  const std::size_t off = table_offset(x, d, t.n);
  const auto& ls = t.lambdas;
  if (ls.size() == 1) return t.values[off];
  auto it = std::upper_bound(ls.begin(), ls.end(), lambda);
  std::size_t hi = static_cast<std::size_t>(std::distance(ls.begin(), it));
  hi = std::clamp<std::size_t>(hi, 1, ls.size() - 1);
  const std::size_t lo = hi - 1;
  const double w = (lambda - ls[lo]) / (ls[hi] - ls[lo]);
  return (1.0 - w) * t.values[lo * block + off] + w * t.values[hi * block + off];
}

void check_lambda(const ModelSpec& m, double lambda) {
  if (!(lambda >= m.dist.lambda_minus && lambda <= m.dist.lambda_plus)) {
    std::ostringstream os;
    os << "coupling " << lambda << " outside [" << m.dist.lambda_minus << ", "
       << m.dist.lambda_plus << "]";
    throw DomainError(os.str());
  }
}

double continuous_mass_near_minimum(const DistributionSpec& dist, double eps) {
  const double w = dist.lambda_plus - dist.lambda_minus;
  const double x = std::clamp(eps / w, 0.0, 1.0);
  if (x <= 0.0) return 0.0;
  if (dist.kind == DistributionKind::truncated_beta) {
    if (x >= 1.0) return 1.0;
    return boost::math::ibeta(dist.beta_a, dist.beta_b, x);
  }
  return x;
}

template <class F>
void for_each_cell_point(int d, int n, F&& f) {
  std::size_t total = 1;
  for (int i = 0; i < d; ++i) total *= static_cast<std::size_t>(n);
  Point y{0.0, 0.0, 0.0};
  for (std::size_t m = 0; m < total; ++m) {
    std::size_t r = m;
    for (int i = 0; i < d; ++i) {
      y[i] = (static_cast<double>(r % n) + 0.5) / n - 0.5;
      r /= n;
    }
    f(y);
  }
}

}  // namespace

const char* to_string(PeriodicKind kind) {
  switch (kind) {
    case PeriodicKind::zero: return "zero";
    case PeriodicKind::cosine_sum: return "cosine-sum";
    case PeriodicKind::tabulated: return "tabulated";
  }
  return "?";
}

const char* to_string(SiteKind kind) {
  switch (kind) {
    case SiteKind::alloy: return "alloy";
    case SiteKind::breather: return "breather";
    case SiteKind::tabulated: return "tabulated";
  }
  return "?";
}

const char* to_string(DistributionKind kind) {
  switch (kind) {
    case DistributionKind::uniform: return "uniform";
    case DistributionKind::truncated_beta: return "truncated-beta";
    case DistributionKind::two_point_plus_uniform: return "two-point-plus-uniform";
  }
  return "?";
}

void check_model(const ModelSpec& m) {
  auto fail = [](const std::string& msg) { throw InputError(msg); };
  if (m.d < 1 || m.d > 3) fail("d must be 1, 2 or 3");
  const auto& dist = m.dist;
  if (!std::isfinite(dist.lambda_minus) || !std::isfinite(dist.lambda_plus))
    fail("lambda bounds must be finite");
  if (!(dist.lambda_minus < dist.lambda_plus)) fail("lambda_minus must be < lambda_plus");
  if (!(dist.atom_mass_at_min >= 0.0 && dist.atom_mass_at_min <= 1.0))
    fail("atom_mass_at_min must lie in [0, 1]");
  if (dist.kind == DistributionKind::truncated_beta &&
      !(dist.beta_a > 0.0 && dist.beta_b > 0.0))
    fail("beta parameters must be positive");
  if (dist.alpha && !(*dist.alpha > 0.0)) fail("alpha must be positive");
  if (dist.kappa && !(*dist.kappa > 0.0)) fail("kappa must be positive");

  const auto& vp = m.vper;
  if (vp.kind == PeriodicKind::cosine_sum) {
    if (vp.amplitudes.size() != 1 && vp.amplitudes.size() != static_cast<std::size_t>(m.d))
      fail("cosine-sum needs 1 or d amplitudes");
  } else if (vp.kind == PeriodicKind::tabulated) {
    std::size_t expect = 1;
    for (int i = 0; i < m.d; ++i) expect *= static_cast<std::size_t>(std::max(vp.table_n, 0));
    if (vp.table_n < 1 || vp.table.size() != expect) fail("periodic table must hold table_n^d values");
  }
  for (double v : vp.amplitudes)
    if (!std::isfinite(v)) fail("periodic amplitudes must be finite");
  for (double v : vp.table)
    if (!std::isfinite(v)) fail("periodic table must be finite");

  const auto& s = m.site;
  if (s.kind == SiteKind::tabulated) {
    const auto& t = s.table;
    std::size_t block = 1;
    for (int i = 0; i < m.d; ++i) block *= static_cast<std::size_t>(std::max(t.n, 0));
    if (t.n < 1 || t.lambdas.empty() || t.values.size() != block * t.lambdas.size())
      fail("tabulated site needs lambdas.size() * n^d values");
    if (!std::is_sorted(t.lambdas.begin(), t.lambdas.end()) ||
        std::adjacent_find(t.lambdas.begin(), t.lambdas.end()) != t.lambdas.end())
      fail("tabulated site lambdas must be strictly increasing");
    if (t.lambdas.size() > 1 &&
        (t.lambdas.front() > dist.lambda_minus || t.lambdas.back() < dist.lambda_plus))
      fail("tabulated site lambdas must cover [lambda_minus, lambda_plus]");
  } else {
    if (s.bumps.empty()) fail("single-site profile needs at least one bump");
    for (const auto& b : s.bumps) {
      if (!(b.radius > 0.0) || !std::isfinite(b.radius)) fail("bump radius must be positive");
      if (!std::isfinite(b.amplitude)) fail("bump amplitude must be finite");
    }
    if (s.kind == SiteKind::breather && !(dist.lambda_minus > 0.0))
      fail("breather couplings must be positive (lambda_minus > 0)");
  }
}

double raw_site_unclipped(const ModelSpec& m, double lambda, const Point& x) {
  switch (m.site.kind) {
    case SiteKind::alloy:
      return lambda * bump_sum(m.site.bumps, norm2(x, m.d));
    case SiteKind::breather:
      return -bump_sum(m.site.bumps, lambda * lambda * norm2(x, m.d));
    case SiteKind::tabulated:
      return tabulated_value(m.site.table, m.d, lambda, x);
  }
  return 0.0;
}

double evaluate_site(const ModelSpec& m, double lambda, const Point& x) {
  check_lambda(m, lambda);
  if (outside_unit_cell(x, m.d)) return 0.0;
  double u = raw_site_unclipped(m, lambda, x);
  if (m.standardized) u -= raw_site_unclipped(m, m.dist.lambda_minus, x);
  return u;
}

double site_lambda_derivative(const ModelSpec& m, double lambda, const Point& x) {
  check_lambda(m, lambda);
  if (outside_unit_cell(x, m.d)) return 0.0;
  switch (m.site.kind) {
    case SiteKind::alloy:
      return bump_sum(m.site.bumps, norm2(x, m.d));
    case SiteKind::breather: {
      // -x . grad f(lambda x) = sum 4 a lambda |x|^2 / r^2 (1 - lambda^2 |x|^2 / r^2)_+
      const double r2 = norm2(x, m.d);
      double g = 0.0;
      for (const auto& b : m.site.bumps) {
        const double rr = b.radius * b.radius;
        const double t = 1.0 - lambda * lambda * r2 / rr;
        if (t > 0.0) g += 4.0 * b.amplitude * lambda * r2 / rr * t;
      }
      return g;
    }
    case SiteKind::tabulated: {
      const double lo = m.dist.lambda_minus;
      const double hi = m.dist.lambda_plus;
      const double step = 1e-5 * (hi - lo);
      const double a = std::max(lo, lambda - step);
      const double b = std::min(hi, lambda + step);
      return (tabulated_value(m.site.table, m.d, b, x) - tabulated_value(m.site.table, m.d, a, x)) /
             (b - a);
    }
  }
  return 0.0;
}

double evaluate_periodic(const ModelSpec& m, const Point& x) {
  Point y{0.0, 0.0, 0.0};
  for (int i = 0; i < m.d; ++i) y[i] = x[i] - std::floor(x[i] + 0.5);
  double v = m.vper.offset;
  switch (m.vper.kind) {
    case PeriodicKind::zero:
      break;
    case PeriodicKind::cosine_sum:
      for (int i = 0; i < m.d; ++i) {
        const double a = m.vper.amplitudes.size() == 1 ? m.vper.amplitudes[0] : m.vper.amplitudes[i];
        v += a * std::cos(2.0 * std::numbers::pi * y[i]);
      }
      break;
    case PeriodicKind::tabulated:
      v += m.vper.table[table_offset(y, m.d, m.vper.table_n)];
      break;
  }
  if (m.standardized) v += raw_site_unclipped(m, m.dist.lambda_minus, y);
  return v;
}

std::optional<double> analytic_kappa1(const ModelSpec& m) {
  double total = 0.0;
  for (const auto& b : m.site.bumps) total += std::abs(b.amplitude);
  switch (m.site.kind) {
    case SiteKind::alloy:
      return total;
    case SiteKind::breather:
      // 4 a t (1 - t) / lambda <= a / lambda_minus
      return total / m.dist.lambda_minus;
    case SiteKind::tabulated:
      return std::nullopt;
  }
  return std::nullopt;
}

ModelSpec standardize(const ModelSpec& model) {
  check_model(model);
  ModelSpec out = model;
  out.standardized = true;
  return out;
}

ModelSpec normalize_energy(const ModelSpec& model, double ground_energy) {
  ModelSpec out = model;
  out.vper.offset -= ground_energy;
  out.energy_shift += ground_energy;
  return out;
}

double mass_near_minimum(const DistributionSpec& dist, double eps) {
  if (!(eps > 0.0)) return 0.0;
  const double q = dist.atom_mass_at_min;
  return q + (1.0 - q) * continuous_mass_near_minimum(dist, eps);
}

double mass_at_or_above(const DistributionSpec& dist, double lambda) {
  return 1.0 - mass_near_minimum(dist, lambda - dist.lambda_minus);
}

double quantile(const DistributionSpec& dist, double u) {
  const double q = dist.atom_mass_at_min;
  if (u < q) return dist.lambda_minus;
  const double v = std::clamp((u - q) / (1.0 - q), 0.0, 1.0);
  const double w = dist.lambda_plus - dist.lambda_minus;
  double x = v;
  if (dist.kind == DistributionKind::truncated_beta) {
    x = (v <= 0.0) ? 0.0 : (v >= 1.0 ? 1.0 : boost::math::ibeta_inv(dist.beta_a, dist.beta_b, v));
  }
  return std::min(dist.lambda_minus + w * x, dist.lambda_plus);
}

double distribution_mean(const DistributionSpec& dist) {
  const double q = dist.atom_mass_at_min;
  const double w = dist.lambda_plus - dist.lambda_minus;
  const double m = dist.kind == DistributionKind::truncated_beta
                       ? dist.beta_a / (dist.beta_a + dist.beta_b)
                       : 0.5;
  return q * dist.lambda_minus + (1.0 - q) * (dist.lambda_minus + w * m);
}

SplitPoint split_point(const DistributionSpec& dist) {
  double ls = quantile(dist, 0.5);
  if (!(ls > dist.lambda_minus)) {
    const double q = dist.atom_mass_at_min;
    ls = quantile(dist, q + 0.5 * (1.0 - q));
  }
  return {ls, mass_at_or_above(dist, ls)};
}

bool AssumptionReport::all_pass() const {
  return std::all_of(verdicts.begin(), verdicts.end(),
                     [](const AssumptionVerdict& v) { return v.pass; });
}

const AssumptionVerdict* AssumptionReport::find(const std::string& id) const {
  for (const auto& v : verdicts)
    if (v.id == id) return &v;
  return nullptr;
}

AssumptionReport validate_assumptions(const ModelSpec& model, int lambda_grid_size,
                                      int x_grid_size) {
  check_model(model);
  if (lambda_grid_size < 16) throw InputError("the lambda grid needs at least 16 points");
  if (x_grid_size < 4) throw InputError("the x grid needs at least 4 points per axis");

  constexpr double tol = kAssumptionTolerance;
  const int d = model.d;
  const double lm = model.dist.lambda_minus;
  const double lp = model.dist.lambda_plus;
  std::vector<double> lambdas(static_cast<std::size_t>(lambda_grid_size));
  for (int i = 0; i < lambda_grid_size; ++i)
    lambdas[i] = (i == lambda_grid_size - 1) ? lp : lm + (lp - lm) * i / (lambda_grid_size - 1);

  AssumptionReport rep;
  rep.lambda_grid_size = lambda_grid_size;
  rep.x_grid_size = x_grid_size;

  // (i) support inside the closed unit cube: scan the outer shell [-1, 1]^d \ interior.
  {
    AssumptionVerdict v{"i", "support contained in unit cell", true, "", 0.0, {}, {}};
    const int s = d == 1 ? x_grid_size : std::min(x_grid_size, 64);
    const int per_axis = 2 * s + 2;
    auto coord = [&](int j) {
      if (j == 2 * s) return -0.5;
      if (j == 2 * s + 1) return 0.5;
      return -1.0 + (j + 0.5) / s;
    };
    std::size_t total = 1;
    for (int i = 0; i < d; ++i) total *= per_axis;
    for (double lambda : lambdas) {
      for (std::size_t m = 0; m < total; ++m) {
        Point x{0.0, 0.0, 0.0};
        std::size_t r = m;
        double sup = 0.0;
        for (int i = 0; i < d; ++i) {
          x[i] = coord(static_cast<int>(r % per_axis));
          sup = std::max(sup, std::abs(x[i]));
          r /= per_axis;
        }
        if (sup < 0.5) continue;
        const double u = std::abs(raw_site_unclipped(model, lambda, x));
        if (u > tol && u > v.worst_violation) {
          v.pass = false;
          v.worst_violation = u;
          v.location = x;
          v.at_lambda = lambda;
        }
      }
    }
    v.detail = v.pass ? "no nonzero value on or outside the cell boundary"
                      : "single-site potential nonzero on or outside the cell boundary";
    rep.verdicts.push_back(v);
  }

  // (ii), (iii) and the integral derivative for (iv).
  double kappa1 = 0.0;
  double min_deriv = std::numeric_limits<double>::infinity();
  Point min_at{0.0, 0.0, 0.0};
  double min_lambda = lm;
  bool finite = true;
  std::vector<double> integral_deriv(lambdas.size(), 0.0);
  const double cell_weight = std::pow(static_cast<double>(x_grid_size), -d);
  for (std::size_t li = 0; li < lambdas.size(); ++li) {
    const double lambda = lambdas[li];
    double acc = 0.0;
    for_each_cell_point(d, x_grid_size, [&](const Point& y) {
      const double g = site_lambda_derivative(model, lambda, y);
      if (!std::isfinite(g)) finite = false;
      kappa1 = std::max(kappa1, std::abs(g));
      if (g < min_deriv) {
        min_deriv = g;
        min_at = y;
        min_lambda = lambda;
      }
      acc += g;
    });
    integral_deriv[li] = acc * cell_weight;
  }
  rep.kappa1 = kappa1;
  const auto analytic = analytic_kappa1(model);
  rep.kappa1_bound = analytic ? std::max(*analytic, kappa1) : kappa1;
  {
    AssumptionVerdict v{"ii", "bounded lambda-derivative", finite, "", 0.0, {}, {}};
    std::ostringstream os;
    os << "kappa1 = " << kappa1;
    v.detail = os.str();
    rep.verdicts.push_back(v);
  }
  {
    AssumptionVerdict v{"iii", "monotone in lambda", min_deriv >= -tol, "", 0.0, {}, {}};
    if (!v.pass) {
      v.worst_violation = -min_deriv;
      v.location = min_at;
      v.at_lambda = min_lambda;
    }
    std::ostringstream os;
    os << "min du/dlambda = " << min_deriv;
    v.detail = os.str();
    rep.verdicts.push_back(v);
  }

  // (iv): eps2 is the largest grid offset with a positive integral derivative on
  // [lm, lm + eps2]; eps1 makes D in [eps1, 1/eps1] there.
  {
    std::size_t last = 0;
    bool any = integral_deriv[0] > tol;
    if (any) {
      while (last + 1 < lambdas.size() && integral_deriv[last + 1] > tol) ++last;
    }
    AssumptionVerdict v{"iv", "integral derivative bounded away from 0 and infinity", false, "",
                        0.0, {}, {}};
    if (any && last > 0) {
      double dmin = std::numeric_limits<double>::infinity();
      double dmax = 0.0;
      for (std::size_t i = 0; i <= last; ++i) {
        dmin = std::min(dmin, integral_deriv[i]);
        dmax = std::max(dmax, integral_deriv[i]);
      }
      rep.epsilon2 = lambdas[last] - lm;
      rep.epsilon1 = std::min(dmin, 1.0 / dmax);
      v.pass = rep.epsilon1 > 0.0 && rep.epsilon2 > 0.0 && std::isfinite(rep.epsilon1);
      std::ostringstream os;
      os << "d/dlambda int u in [" << dmin << ", " << dmax << "] on [" << lm << ", "
         << lm + rep.epsilon2 << "]";
      v.detail = os.str();
    } else {
      v.worst_violation = -integral_deriv[0];
      v.at_lambda = lm;
      v.detail = "d/dlambda int u not positive near lambda_minus";
    }
    rep.verdicts.push_back(v);
  }

  // (v): analytic tail constants of the continuous part.
  {
    const auto& dist = model.dist;
    const double q = dist.atom_mass_at_min;
    const double w = lp - lm;
    const double eps2 = rep.epsilon2 > 0.0 ? rep.epsilon2 : w;
    AssumptionVerdict v{"v", "distribution tail near lambda_minus", true, "", 0.0, {}, {}};
    double alpha = 0.0;
    double kappa = 0.0;
    std::vector<double> eps_grid;
    for (int i = 0; i <= 200; ++i) eps_grid.push_back(eps2 * std::pow(1e-8, 1.0 - i / 200.0));
    if (dist.kind == DistributionKind::truncated_beta) {
      kappa = dist.beta_a;
      const double limit = 1.0 / (dist.beta_a * boost::math::beta(dist.beta_a, dist.beta_b) *
                                  std::pow(w, dist.beta_a));
      alpha = limit;
      for (double e : eps_grid)
        alpha = std::min(alpha, continuous_mass_near_minimum(dist, e) / std::pow(e, kappa));
      alpha *= (1.0 - q);
    } else {
      kappa = 1.0;
      alpha = (1.0 - q) / w;
    }
    if (dist.alpha || dist.kappa) {
      const double ca = dist.alpha.value_or(alpha);
      const double ck = dist.kappa.value_or(kappa);
      for (double e : eps_grid) {
        const double lhs = (1.0 - q) * continuous_mass_near_minimum(dist, e);
        const double rhs = ca * std::pow(e, ck);
        if (lhs < rhs * (1.0 - 1e-12)) {
          v.pass = false;
          if (rhs - lhs > v.worst_violation) {
            v.worst_violation = rhs - lhs;
            v.at_lambda = lm + e;
          }
        }
      }
      alpha = ca;
      kappa = ck;
    }
    if (!(alpha > 0.0 && kappa > 0.0)) v.pass = false;
    rep.alpha = alpha;
    rep.kappa = kappa;
    std::ostringstream os;
    os << "mu([l-, l- + eps)) >= " << alpha << " eps^" << kappa << " for eps <= " << eps2;
    v.detail = os.str();
    rep.verdicts.push_back(v);
  }

  {
    const double q = model.dist.atom_mass_at_min;
    AssumptionVerdict v{"nondegenerate", "mu({lambda_minus}) < 1", q < 1.0, "", 0.0, {}, {}};
    std::ostringstream os;
    os << "atom mass at lambda_minus = " << q;
    v.detail = os.str();
    if (!v.pass) v.worst_violation = q;
    rep.verdicts.push_back(v);
  }
  return rep;
}

}  // namespace lifshitz
