#include "lifshitz/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "lifshitz/errors.hpp"

namespace lifshitz {
namespace {

bool leq(double a, double b) { return a <= b + 1e-12 * std::abs(b); }

std::size_t ipow(int base, int e) {
  std::size_t r = 1;
  for (int i = 0; i < e; ++i) r *= static_cast<std::size_t>(base);
  return r;
}

Eigen::Map<const Eigen::VectorXd> as_vector(const std::vector<double>& v) {
  return {v.data(), static_cast<Eigen::Index>(v.size())};
}

template <class F>
void for_each_local_point(int d, int n, F&& f) {
  const std::size_t total = ipow(n, d);
  Point y{0.0, 0.0, 0.0};
  for (std::size_t m = 0; m < total; ++m) {
    std::size_t r = m;
    for (int i = 0; i < d; ++i) {
      y[i] = (static_cast<double>(r % static_cast<std::size_t>(n)) + 0.5) / n - 0.5;
      r /= static_cast<std::size_t>(n);
    }
    f(m, y);
  }
}

std::vector<std::pair<std::string, double>> config_constants(const TempleConfig& cfg,
                                                             const ModelConstants& k) {
  return {{"L", cfg.L},
          {"c2", cfg.c2},
          {"gamma", cfg.gamma},
          {"c7", cfg.c7},
          {"energy", cfg.energy},
          {"epsilon0", k.epsilon0},
          {"epsilon1", k.epsilon1},
          {"epsilon2", k.epsilon2},
          {"kappa1", k.kappa1},
          {"c3", k.c3},
          {"c4", k.c4},
          {"lambda_star", k.lambda_star},
          {"p", k.p}};
}

}  // namespace

GapFit fit_epsilon0(const ModelSpec& model, const GroundStateData& gs, std::vector<int> Ls,
                    const SolverOptions& opts) {
  if (Ls.size() < 2) throw InputError("gap fit needs at least two box sizes");
  GapFit fit;
  fit.Ls = std::move(Ls);
  fit.epsilon0 = std::numeric_limits<double>::infinity();
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (int L : fit.Ls) {
    const GridSpec grid = make_grid(model.d, L, gs.n);
    const DiscreteHamiltonian H = assemble(model, grid, mezincescu_correction(gs, grid));
    const GapResult g = spectral_gap(H, opts);
    fit.gaps.push_back(g.gap);
    fit.epsilon0 = std::min(fit.epsilon0, static_cast<double>(L) * L * g.gap);
    const double x = std::log(static_cast<double>(L));
    const double y = std::log(std::max(g.gap, std::numeric_limits<double>::min()));
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double m = static_cast<double>(fit.Ls.size());
  fit.slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
  return fit;
}

ModelConstants measure_constants(const ModelSpec& model, const GroundStateData& gs,
                                 double epsilon0, int lambda_grid_size) {
  const AssumptionReport rep = validate_assumptions(model, lambda_grid_size, gs.n);
  ModelConstants k;
  k.kappa1 = rep.kappa1_bound;
  k.epsilon0 = epsilon0;
  k.epsilon1 = rep.epsilon1;
  k.epsilon2 = rep.epsilon2;
  k.c3 = gs.c3;
  k.c4 = gs.c4;
  k.lambda_minus = model.dist.lambda_minus;
  const SplitPoint sp = split_point(model.dist);
  k.lambda_star = sp.lambda_star;
  k.p = sp.p;
  return k;
}

std::vector<std::string> violated_hypotheses(const TempleConfig& cfg, const ModelConstants& k) {
  std::vector<std::string> out;
  const double L2 = static_cast<double>(cfg.L) * cfg.L;
  if (cfg.L < 1) out.emplace_back("L >= 1");
  if (!(k.epsilon0 > 0)) out.emplace_back("epsilon0 > 0");
  if (!(k.epsilon1 > 0)) out.emplace_back("epsilon1 > 0");
  if (!(k.epsilon2 > 0)) out.emplace_back("epsilon2 > 0");
  if (!(k.c3 > 0)) out.emplace_back("c3 > 0");
  if (!(std::isfinite(k.kappa1) && k.kappa1 >= 0)) out.emplace_back("kappa1 finite");
  if (!(cfg.c2 > 0)) out.emplace_back("c2 > 0");
  if (!leq(cfg.c2, k.epsilon2 * L2)) out.emplace_back("c2 <= epsilon2 L^2");
  if (!(4.0 * k.kappa1 * cfg.c2 / k.epsilon0 < 0.25)) out.emplace_back("4 kappa1 c2 / epsilon0 < 1/4");
  if (!leq(cfg.c2, k.epsilon0 * k.epsilon1 / (2.0 * k.c4 * k.c4)))
    out.emplace_back("c2 <= epsilon0 epsilon1 / (2 c4^2)");
  if (!(cfg.gamma > 1)) out.emplace_back("gamma > 1");
  if (!leq(2.0 * cfg.gamma / (k.epsilon1 * k.c3 * k.c3), cfg.c7))
    out.emplace_back("c7 >= 2 gamma / (epsilon1 c3^2)");
  if (!(cfg.energy > 0)) out.emplace_back("energy > 0");
  if (!leq(cfg.c7 * cfg.energy, std::min(k.epsilon2, cfg.c2 / (2.0 * L2))))
    out.emplace_back("c7 E <= min(epsilon2, c2 / (2 L^2))");
  return out;
}

TempleConfig choose_temple_config(const ModelConstants& k, int L) {
  std::vector<std::string> bad;
  if (L < 1) bad.emplace_back("L >= 1");
  if (!(k.epsilon0 > 0)) bad.emplace_back("epsilon0 > 0");
  if (!(k.epsilon1 > 0)) bad.emplace_back("epsilon1 > 0");
  if (!(k.epsilon2 > 0)) bad.emplace_back("epsilon2 > 0");
  if (!(k.c3 > 0)) bad.emplace_back("c3 > 0");
  if (!(std::isfinite(k.kappa1) && k.kappa1 >= 0)) bad.emplace_back("kappa1 finite");
  if (!(k.p > 0 && k.p < 1)) bad.emplace_back("p in (0, 1)");
  if (!bad.empty()) {
    std::ostringstream os;
    os << "no admissible Temple configuration: " << bad.front();
    throw PreconditionError(os.str(), bad);
  }
  const double L2 = static_cast<double>(L) * L;
  TempleConfig cfg;
  cfg.L = L;
  cfg.epsilon0 = k.epsilon0;
  cfg.gamma = 2.0 / k.p;
  const double by_kappa = k.kappa1 > 0 ? k.epsilon0 / (16.0 * k.kappa1)
                                       : std::numeric_limits<double>::infinity();
  cfg.c2 = 0.9 * std::min({k.epsilon2 * L2, by_kappa, k.epsilon0 * k.epsilon1 / (2.0 * k.c4 * k.c4)});
  cfg.c7 = 2.0 * cfg.gamma / (k.epsilon1 * k.c3 * k.c3);
  cfg.energy = std::min(k.epsilon2, cfg.c2 / (2.0 * L2)) / cfg.c7;
  auto violated = violated_hypotheses(cfg, k);
  if (!violated.empty()) {
    std::ostringstream os;
    os << "no admissible Temple configuration: " << violated.front();
    throw PreconditionError(os.str(), violated);
  }
  return cfg;
}

double mapped_value(const ModelSpec& model, const GroundStateData& gs, double lambda) {
  double acc = 0.0;
  for_each_local_point(gs.d, gs.n, [&](std::size_t m, const Point& y) {
    acc += gs.weights[m] * evaluate_site(model, lambda, y);
  });
  return acc;
}

double mapped_square(const ModelSpec& model, const GroundStateData& gs, double lambda) {
  double acc = 0.0;
  for_each_local_point(gs.d, gs.n, [&](std::size_t m, const Point& y) {
    const double u = evaluate_site(model, lambda, y);
    acc += gs.weights[m] * u * u;
  });
  return acc;
}

double MappedRealization::mean_xi() const {
  if (xi.empty()) return 0.0;
  double s = 0.0;
  for (double v : xi) s += v;
  return s / static_cast<double>(xi.size());
}

MappedRealization map_realization(const GroundStateData& gs, const ModelSpec& model,
                                  const GridSpec& grid, const std::vector<double>& couplings,
                                  const TempleConfig& cfg, const ModelConstants& k) {
  auto violated = violated_hypotheses(cfg, k);
  if (!violated.empty())
    throw PreconditionError("Temple configuration violates " + violated.front(), violated);
  if (cfg.L != grid.L) throw InputError("Temple configuration and grid disagree on L");
  if (gs.n != grid.n || gs.d != grid.d)
    throw InputError("ground state resolution does not match the grid");
  if (couplings.size() != grid.cell_count()) throw InputError("one coupling per cell required");

  const double cap = model.dist.lambda_minus + cfg.c2 / (static_cast<double>(cfg.L) * cfg.L);
  MappedRealization out;
  out.couplings = couplings;
  out.cutoffs.reserve(couplings.size());
  out.xi.reserve(couplings.size());
  out.xi_square.reserve(couplings.size());
  for (double lambda : couplings) {
    const double t = std::min(lambda, cap);
    out.cutoffs.push_back(t);
    out.xi.push_back(mapped_value(model, gs, t));
    out.xi_square.push_back(mapped_square(model, gs, t));
  }
  return out;
}

MomentPair first_moment(const GroundStateData& gs, const MappedRealization& mapped,
                        const DiscreteHamiltonian& H) {
  const std::vector<double> psi = box_ground_state(gs, H.grid);
  const Eigen::VectorXd Hpsi = H.matrix * as_vector(psi);
  MomentPair out;
  out.value = as_vector(psi).dot(Hpsi) * std::pow(H.grid.h(), H.grid.d);
  out.reference = mapped.mean_xi();
  return out;
}

SecondMoment second_moment(const GroundStateData& gs, const MappedRealization& mapped,
                           const DiscreteHamiltonian& H, const TempleConfig& cfg,
                           const ModelConstants& k) {
  const std::vector<double> psi = box_ground_state(gs, H.grid);
  const Eigen::VectorXd Hpsi = H.matrix * as_vector(psi);
  SecondMoment out;
  out.value = Hpsi.squaredNorm() * std::pow(H.grid.h(), H.grid.d);
  const double L2 = static_cast<double>(cfg.L) * cfg.L;
  out.bound = 2.0 * k.kappa1 * cfg.c2 / L2 * mapped.mean_xi();
  double s = 0.0;
  for (double v : mapped.xi_square) s += v;
  out.exact = mapped.xi_square.empty() ? 0.0 : s / static_cast<double>(mapped.xi_square.size());
  return out;
}

const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::pass: return "pass";
    case Verdict::fail: return "fail";
    case Verdict::boundary: return "boundary";
  }
  return "?";
}

BoundRecord compare(std::string name, double lhs, Relation rel, double rhs, double tol) {
  BoundRecord r;
  r.name = std::move(name);
  r.relation = rel;
  r.lhs = lhs;
  r.rhs = rhs;
  r.margin = rhs - lhs;
  const double slack = tol * (1.0 + std::abs(lhs) + std::abs(rhs));
  if (!std::isfinite(lhs) || !std::isfinite(rhs)) {
    r.verdict = Verdict::fail;
  } else if (rel == Relation::le) {
    r.verdict = r.margin >= -slack ? Verdict::pass : Verdict::fail;
  } else if (std::abs(r.margin) <= slack) {
    r.verdict = Verdict::boundary;
  } else {
    r.verdict = r.margin > 0 ? Verdict::pass : Verdict::fail;
  }
  return r;
}

bool BoundReport::all_pass() const { return first_failure() == nullptr; }

const BoundRecord* BoundReport::first_failure() const {
  for (const auto& r : records)
    if (r.verdict != Verdict::pass) return &r;
  return nullptr;
}

const BoundRecord* BoundReport::find(const std::string& name) const {
  for (const auto& r : records)
    if (r.name == name) return &r;
  return nullptr;
}

TempleContext make_temple_context(const ModelSpec& model, const GroundStateData& gs,
                                  const GridSpec& grid, const TempleConfig& cfg,
                                  const ModelConstants& k, const SolverOptions& opts) {
  auto violated = violated_hypotheses(cfg, k);
  if (!violated.empty())
    throw PreconditionError("Temple configuration violates " + violated.front(), violated);
  TempleContext ctx{model, gs, grid, cfg, k, mezincescu_correction(gs, grid), {}, 0.0, 0.0, opts};
  ctx.psi_L = box_ground_state(gs, grid);
  const DiscreteHamiltonian Hper = assemble(model, grid, ctx.bc);
  const SpectralResult r = lowest_eigenvalues(Hper, 2, opts);
  ctx.e1_per = r.eigenvalues[0];
  ctx.e2_per = r.eigenvalues[1];
  return ctx;
}

TempleOutcome temple_lower_bound(const TempleContext& ctx, const std::vector<double>& couplings) {
  TempleOutcome out;
  out.mapped = map_realization(ctx.gs, ctx.model, ctx.grid, couplings, ctx.cfg, ctx.constants);
  const DiscreteHamiltonian H = assemble(ctx.model, ctx.grid, ctx.bc, out.mapped.cutoffs);
  const SpectralResult r = lowest_eigenvalues(H, 2, ctx.opts);
  out.e1 = r.eigenvalues[0];
  out.e2 = r.eigenvalues[1];

  const double hd = std::pow(ctx.grid.h(), ctx.grid.d);
  const Eigen::VectorXd Hpsi = H.matrix * as_vector(ctx.psi_L);
  out.first = as_vector(ctx.psi_L).dot(Hpsi) * hd;
  out.second = Hpsi.squaredNorm() * hd;
  const double L2 = static_cast<double>(ctx.cfg.L) * ctx.cfg.L;
  out.nu = ctx.cfg.epsilon0 / (2.0 * L2) + out.first;
  const double mean_xi = out.mapped.mean_xi();
  const auto& k = ctx.constants;
  const double tol = kBoundTolerance;

  auto& rec = out.report.records;
  rec.push_back(compare("|E1(H_per)| = 0", std::abs(ctx.e1_per), Relation::le, 0.0, tol));
  rec.push_back(compare("E1(H_per) <= E1(H~)", ctx.e1_per, Relation::le, out.e1, tol));
  rec.push_back(compare("E1(H~) <= <psi,H~psi>", out.e1, Relation::le, out.first, tol));
  rec.push_back(compare("<psi,H~psi> < nu", out.first, Relation::lt, out.nu, tol));
  rec.push_back(compare("nu <= E2(H_per)", out.nu, Relation::le, ctx.e2_per, tol));
  rec.push_back(compare("E2(H_per) <= E2(H~)", ctx.e2_per, Relation::le, out.e2, tol));
  rec.push_back(compare("L^-d sum xi <= c2 c4^2 / (epsilon1 L^2)", mean_xi, Relation::le,
                        ctx.cfg.c2 * k.c4 * k.c4 / (k.epsilon1 * L2), tol));
  rec.push_back(compare("||H~psi||^2 <= 2 kappa1 c2 L^-2 L^-d sum xi", out.second, Relation::le,
                        2.0 * k.kappa1 * ctx.cfg.c2 / L2 * mean_xi, tol));
  rec.push_back(compare("temple: first - second / (nu - first) <= E1(H~)",
                        out.first - out.second / (out.nu - out.first), Relation::le, out.e1, tol));
  BoundRecord main = compare("(3/4) L^-d sum xi <= E1(H~)", 0.75 * mean_xi, Relation::le, out.e1, tol);
  main.constants = config_constants(ctx.cfg, k);
  rec.push_back(std::move(main));
  return out;
}

BoundRecord counting_corollary_check(const MappedRealization& mapped, double e1, double energy,
                                     double gamma) {
  if (!(gamma > 1)) throw InputError("counting corollary needs gamma > 1");
  const double Ld = static_cast<double>(mapped.xi.size());
  const auto small = static_cast<std::size_t>(std::count_if(
      mapped.xi.begin(), mapped.xi.end(), [&](double x) { return x < 2.0 * gamma * energy; }));
  BoundRecord r;
  r.name = "((gamma-1)/gamma) L^d < #{xi < 2 gamma E}";
  r.relation = Relation::lt;
  r.lhs = (gamma - 1.0) / gamma * Ld;
  r.rhs = static_cast<double>(small);
  r.margin = r.rhs - r.lhs;
  r.constants = {{"E1", e1}, {"energy", energy}, {"gamma", gamma}};
  if (e1 > energy) {
    r.verdict = Verdict::pass;
    r.note = "vacuous: E1 > E";
  } else {
    r.verdict = r.rhs > r.lhs ? Verdict::pass : Verdict::fail;
  }
  return r;
}

BoundRecord deviation_chain_check(const MappedRealization& mapped, const TempleConfig& cfg,
                                  const ModelConstants& k, DeviationStats* stats) {
  DeviationStats s;
  s.sites = mapped.xi.size();
  const double xi_cut = 2.0 * cfg.gamma * cfg.energy;
  const double lambda_cut = k.lambda_minus + cfg.c7 * cfg.energy;
  for (std::size_t i = 0; i < mapped.xi.size(); ++i) {
    if (mapped.xi[i] < xi_cut) {
      ++s.antecedent;
      if (!(mapped.couplings[i] < lambda_cut)) ++s.violations;
    }
  }
  BoundRecord r = compare("violations of xi < 2 gamma E => lambda < lambda_minus + c7 E",
                          static_cast<double>(s.violations), Relation::le, 0.0, 0.0);
  r.constants = {{"sites", static_cast<double>(s.sites)},
                 {"antecedent", static_cast<double>(s.antecedent)},
                 {"xi_cut", xi_cut},
                 {"lambda_cut", lambda_cut}};
  if (stats) *stats = s;
  return r;
}

BernoulliTail bernoulli_tail(double p, double gamma, long Ld) {
  if (!(p > 0 && p <= 1)) throw InputError("bernoulli_tail needs p in (0, 1]");
  if (!(gamma > 1)) throw InputError("bernoulli_tail needs gamma > 1");
  if (Ld < 1) throw InputError("bernoulli_tail needs Ld >= 1");
  const double t = static_cast<double>(Ld) / gamma;
  const long kmax = static_cast<long>(std::ceil(t)) - 1;  // k < t
  BernoulliTail out;
  out.bound = std::exp(-0.5 * p * p * static_cast<double>(Ld));
  const double lp = std::log(p);
  const double lq = std::log1p(-p);
  const double lnf = std::lgamma(static_cast<double>(Ld) + 1.0);
  for (long k = 0; k <= std::min(kmax, Ld); ++k) {
    const double tail = (Ld - k) == 0 ? 0.0 : static_cast<double>(Ld - k) * lq;
    const double lt = lnf - std::lgamma(static_cast<double>(k) + 1.0) -
                      std::lgamma(static_cast<double>(Ld - k) + 1.0) + static_cast<double>(k) * lp + tail;
    out.exact += std::exp(lt);
  }
  return out;
}

namespace {

std::vector<double> cosine_test_function(const GroundStateData& gs, const GridSpec& grid) {
  std::vector<double> phi(grid.size());
  for (std::size_t idx = 0; idx < phi.size(); ++idx) {
    const auto j = grid.unflatten(idx);
    double v = gs.psi_at(grid, idx);
    for (int i = 0; i < grid.d; ++i) v *= std::cos(std::numbers::pi * grid.coordinate(j[i]) / grid.L);
    phi[idx] = v;
  }
  return phi;
}

}  // namespace

LemmaConstants realize_lemma_constants(const ModelSpec& model, const GroundStateData& gs,
                                       const GridSpec& grid) {
  const std::vector<double> phi = cosine_test_function(gs, grid);
  const DiscreteHamiltonian H = assemble(model, grid, BoundaryCondition::dirichlet());
  const double hd = std::pow(grid.h(), grid.d);
  const Eigen::VectorXd v = as_vector(phi);
  const double norm2 = v.squaredNorm() * hd;
  LemmaConstants c;
  c.L = grid.L;
  c.B1 = v.cwiseAbs2().maxCoeff() * static_cast<double>(grid.cell_count()) / norm2;
  c.B2 = static_cast<double>(grid.L) * grid.L * v.dot(H.matrix * v) * hd / norm2;
  return c;
}

LemmaConstants realize_lemma_constants(const ModelSpec& model, const GroundStateData& gs, int n,
                                       const std::vector<int>& Ls) {
  LemmaConstants out;
  for (int L : Ls) {
    const LemmaConstants c = realize_lemma_constants(model, gs, make_grid(model.d, L, n));
    out.L = std::max(out.L, L);
    out.B1 = std::max(out.B1, c.B1);
    out.B2 = std::max(out.B2, c.B2);
  }
  return out;
}

UpperBoundOutcome dirichlet_upper_bound(const ModelSpec& model, const GroundStateData& gs,
                                        const GridSpec& grid, const std::vector<double>& couplings,
                                        const SolverOptions& opts) {
  UpperBoundOutcome out;
  out.constants = realize_lemma_constants(model, gs, grid);
  const DiscreteHamiltonian H = assemble(model, grid, BoundaryCondition::dirichlet(), couplings);
  out.e1 = lowest_eigenvalues(H, 1, opts).eigenvalues[0];

  const std::vector<double> phi = cosine_test_function(gs, grid);
  const Eigen::VectorXd v = as_vector(phi);
  out.rayleigh = v.dot(H.matrix * v) / v.squaredNorm();

  const std::vector<double> V = assemble_random_potential(model, grid, couplings);
  double integral = 0.0;
  for (double x : V) integral += x;
  integral *= std::pow(grid.h(), grid.d);
  out.mean_potential = integral / static_cast<double>(grid.cell_count());

  const double L2 = static_cast<double>(grid.L) * grid.L;
  const double rhs = out.constants.B1 * out.mean_potential + out.constants.B2 / L2;
  auto& rec = out.report.records;
  rec.push_back(compare("E1(H^D) <= Rayleigh quotient", out.e1, Relation::le, out.rayleigh,
                        kBoundTolerance));
  rec.push_back(compare("Rayleigh quotient <= B1 L^-d int V + B2 L^-2", out.rayleigh, Relation::le,
                        rhs, kBoundTolerance));
  BoundRecord main = compare("E1(H^D) <= B1 L^-d int V + B2 L^-2", out.e1, Relation::le, rhs,
                             kBoundTolerance);
  main.constants = {{"L", grid.L},
                    {"B1", out.constants.B1},
                    {"B2", out.constants.B2},
                    {"mean_potential", out.mean_potential}};
  rec.push_back(std::move(main));
  return out;
}

}  // namespace lifshitz
