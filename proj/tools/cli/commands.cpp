#include "commands.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "lifshitz/bounds.hpp"
#include "lifshitz/errors.hpp"
#include "lifshitz/ids.hpp"
#include "lifshitz/parallel.hpp"
#include "lifshitz/philox.hpp"
#include "lifshitz/spectral.hpp"

namespace lifshitz::cli {
namespace {

using nlohmann::json;

std::string num17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

json location_json(const std::optional<Point>& p, int d) {
  if (!p) return nullptr;
  json a = json::array();
  for (int i = 0; i < d; ++i) a.push_back((*p)[i]);
  return a;
}

int effective_x_grid(const RunConfig& cfg) {
  return cfg.model.d == 3 ? std::min(cfg.validate.x_grid, 64) : cfg.validate.x_grid;
}

json report_json(const AssumptionReport& rep, int d) {
  json v = json::array();
  for (const auto& a : rep.verdicts) {
    v.push_back({{"id", a.id},
                 {"name", a.name},
                 {"pass", a.pass},
                 {"detail", a.detail},
                 {"worst_violation", a.worst_violation},
                 {"location", location_json(a.location, d)},
                 {"at_lambda", a.at_lambda ? json(*a.at_lambda) : json(nullptr)}});
  }
  return {{"verdicts", v},
          {"kappa1", rep.kappa1},
          {"kappa1_bound", rep.kappa1_bound},
          {"epsilon1", rep.epsilon1},
          {"epsilon2", rep.epsilon2},
          {"alpha", rep.alpha},
          {"kappa", rep.kappa},
          {"lambda_grid_size", rep.lambda_grid_size},
          {"x_grid_size", rep.x_grid_size},
          {"all_pass", rep.all_pass()}};
}

std::string report_text(const AssumptionReport& rep) {
  std::ostringstream os;
  for (const auto& a : rep.verdicts) {
    os << "(" << a.id << ") " << a.name << ": " << (a.pass ? "PASS" : "FAIL");
    if (!a.detail.empty()) os << " - " << a.detail;
    os << "\n";
  }
  os << "kappa1 = " << num17(rep.kappa1) << " (bound " << num17(rep.kappa1_bound) << ")\n";
  os << "epsilon1 = " << num17(rep.epsilon1) << ", epsilon2 = " << num17(rep.epsilon2) << "\n";
  os << "alpha = " << num17(rep.alpha) << ", kappa = " << num17(rep.kappa) << "\n";
  os << (rep.all_pass() ? "all assumptions hold\n" : "some assumptions fail\n");
  return os.str();
}

std::vector<std::string> failed_ids(const AssumptionReport& rep) {
  std::vector<std::string> out;
  for (const auto& a : rep.verdicts)
    if (!a.pass) out.push_back(a.id);
  return out;
}

/// Shared prologue: validate, and bail out with exit 1 if anything fails.
bool model_rejected(const RunConfig& cfg, const std::string& command, CommandResult& res) {
  const AssumptionReport rep =
      validate_assumptions(cfg.model, cfg.validate.lambda_grid, effective_x_grid(cfg));
  if (rep.all_pass()) return false;
  const auto failed = failed_ids(rep);
  json j{{"command", command},
         {"config_hash", hex64(config_hash(cfg))},
         {"error", "model violates assumptions"},
         {"failed", failed},
         {"assumptions", report_json(rep, cfg.model.d)}};
  res.exit_code = kExitFailed;
  res.files.push_back({command + ".json", dump(j)});
  std::ostringstream os;
  os << command << ": model rejected, failed assumption(s):";
  for (const auto& f : failed) os << " (" << f << ")";
  os << "\n";
  res.summary = os.str();
  return true;
}

BoundaryCondition make_condition(BoundaryKind kind, const RunConfig& cfg, const GroundStateData& gs,
                                 const GridSpec& grid) {
  switch (kind) {
    case BoundaryKind::dirichlet: return BoundaryCondition::dirichlet();
    case BoundaryKind::neumann: return BoundaryCondition::neumann();
    case BoundaryKind::periodic: return BoundaryCondition::periodic();
    case BoundaryKind::robin: return BoundaryCondition::robin({cfg.spectrum.robin_rho});
    case BoundaryKind::mezincescu: return mezincescu_correction(gs, grid);
  }
  return BoundaryCondition::dirichlet();
}

std::vector<double> required_energies(const RunConfig& cfg) {
  auto e = cfg.energies.resolve();
  if (e.empty()) throw ConfigError("/experiment/energies", "this command needs an energy grid");
  return e;
}

std::string join_path(const std::string& base_file, const std::string& rel) {
  namespace fs = std::filesystem;
  const fs::path p(rel);
  if (p.is_absolute() || base_file.empty() || base_file.front() == '<') return rel;
  return (fs::path(base_file).parent_path() / p).string();
}

}  // namespace

const OutputFile* CommandResult::file(const std::string& name) const {
  for (const auto& f : files)
    if (f.name == name) return &f;
  return nullptr;
}

PreparedModel prepare_model(const ModelSpec& model, int n, const SolverOptions& opts) {
  PreparedModel out;
  const ModelSpec std_model = standardize(model);
  const GroundStateData gs0 = periodic_ground_state(std_model, n, opts);
  out.raw_ground_energy = gs0.E0 + std_model.energy_shift;
  out.model = normalize_energy(std_model, gs0.E0);
  out.gs = periodic_ground_state(out.model, n, opts);
  return out;
}

CommandResult run_validate(const RunConfig& cfg) {
  const AssumptionReport rep =
      validate_assumptions(cfg.model, cfg.validate.lambda_grid, effective_x_grid(cfg));
  json j{{"command", "validate"}, {"config_hash", hex64(config_hash(cfg))}};
  j.update(report_json(rep, cfg.model.d));
  CommandResult res;
  res.exit_code = rep.all_pass() ? kExitOk : kExitFailed;
  res.summary = report_text(rep);
  res.files.push_back({"validate.json", dump(j)});
  res.files.push_back({"validate.txt", res.summary});
  return res;
}

CommandResult run_spectrum(const RunConfig& cfg, unsigned workers) {
  CommandResult res;
  if (model_rejected(cfg, "spectrum", res)) return res;
  const PreparedModel pm = prepare_model(cfg.model, cfg.n, cfg.solver);

  struct Task {
    int L;
    BoundaryKind bc;
    long long realization;  // -1: periodic operator only
  };
  std::vector<Task> tasks;
  for (int L : cfg.Ls) {
    for (BoundaryKind bc : cfg.spectrum.boundaries) {
      if (cfg.spectrum.realizations.empty()) {
        tasks.push_back({L, bc, -1});
      } else {
        for (auto r : cfg.spectrum.realizations) tasks.push_back({L, bc, static_cast<long long>(r)});
      }
    }
  }
  struct Rows {
    std::vector<double> values;
    std::vector<double> residuals;
    std::string method;
    bool converged = true;
  };
  std::vector<Rows> rows(tasks.size());
  parallel_for(tasks.size(), workers, [&](std::size_t t) {
    const Task& task = tasks[t];
    const GridSpec grid = make_grid(cfg.model.d, task.L, cfg.n);
    const BoundaryCondition bc = make_condition(task.bc, cfg, pm.gs, grid);
    DiscreteHamiltonian H;
    if (task.realization < 0) {
      H = assemble(pm.model, grid, bc);
    } else {
      const Realization r = sample_realization(pm.model.dist, cfg.seed,
                                               static_cast<std::uint64_t>(task.realization), task.L,
                                               cfg.model.d);
      H = assemble(pm.model, grid, bc, r.couplings);
    }
    const int m = static_cast<int>(std::min<std::size_t>(static_cast<std::size_t>(cfg.spectrum.m), grid.size()));
    try {
      const SpectralResult s = lowest_eigenvalues(H, m, cfg.solver);
      rows[t] = {s.eigenvalues, s.residuals, s.method == SolverMethod::dense ? "dense" : "iterative", true};
    } catch (const ConvergenceError& e) {
      rows[t] = {e.best_values(), e.best_residuals(), "iterative", false};
    }
  });

  const std::string hash = hex64(config_hash(cfg));
  std::ostringstream csv;
  csv << "L,bc,realization,k,eigenvalue,eigenvalue_raw,residual,method,status,config_hash\n";
  bool all_converged = true;
  for (std::size_t t = 0; t < tasks.size(); ++t) {
    const auto& r = rows[t];
    all_converged = all_converged && r.converged;
    for (std::size_t k = 0; k < r.values.size(); ++k) {
      csv << tasks[t].L << ',' << tag(tasks[t].bc) << ','
          << (tasks[t].realization < 0 ? std::string("none") : std::to_string(tasks[t].realization)) << ','
          << k + 1 << ',' << num17(r.values[k]) << ',' << num17(r.values[k] + pm.model.energy_shift) << ','
          << num17(k < r.residuals.size() ? r.residuals[k] : std::numeric_limits<double>::quiet_NaN()) << ','
          << r.method << ',' << (r.converged ? "ok" : "unconverged") << ',' << hash << '\n';
    }
  }
  res.files.push_back({"spectrum.csv", csv.str()});
  res.exit_code = all_converged ? kExitOk : kExitNoConvergence;
  std::ostringstream os;
  os << "spectrum: " << tasks.size() << " operator(s), " << (all_converged ? "all converged" : "some unconverged")
     << "\n";
  res.summary = os.str();
  return res;
}

CommandResult run_ids(const RunConfig& cfg, unsigned workers) {
  CommandResult res;
  if (model_rejected(cfg, "ids", res)) return res;
  const std::vector<double> energies = required_energies(cfg);
  const PreparedModel pm = prepare_model(cfg.model, cfg.n, cfg.solver);
  IdsOptions opts;
  opts.samples = cfg.samples;
  opts.seed = cfg.seed;
  opts.workers = workers;
  opts.solver = cfg.solver;
  const std::string hash = hex64(config_hash(cfg));

  std::vector<int> Ls = cfg.Ls;
  std::sort(Ls.begin(), Ls.end());
  Ls.erase(std::unique(Ls.begin(), Ls.end()), Ls.end());
  const bool bracket = Ls.size() >= 2 && cfg.ids.boundaries.size() == 2 &&
                       cfg.ids.boundaries[0] == BoundaryKind::dirichlet &&
                       cfg.ids.boundaries[1] == BoundaryKind::mezincescu;

  std::vector<IDSCurve> curves;
  json bj;
  bool ok = true;
  if (bracket) {
    const BracketingReport rep = bracketing_report(pm.model, pm.gs, cfg.n, Ls, energies, opts, cfg.ids.z);
    curves = rep.curves;
    json mono = json::array();
    std::size_t mono_fail = 0;
    for (const auto& m : rep.monotonicity) {
      mono_fail += m.ok ? 0 : 1;
      mono.push_back({{"bc", std::string(1, tag(m.bc))},
                      {"E", m.energy},
                      {"L_small", m.L_small},
                      {"L_large", m.L_large},
                      {"difference", m.difference},
                      {"combined_se", m.combined_se},
                      {"ok", m.ok}});
    }
    std::size_t cross_fail = 0;
    for (const auto& c : rep.cross) cross_fail += c.ok ? 0 : 1;
    ok = rep.all_ok();
    bj = {{"command", "ids"},
          {"config_hash", hash},
          {"Ls", rep.Ls},
          {"energies", rep.energies},
          {"samples", cfg.samples},
          {"seed", cfg.seed},
          {"z", rep.z},
          {"pathwise_checks", rep.pathwise_checks},
          {"pathwise_violations", rep.pathwise_violations},
          {"monotonicity", mono},
          {"monotonicity_failures", mono_fail},
          {"cross_checks", rep.cross.size()},
          {"cross_failures", cross_fail},
          {"all_ok", ok}};
  } else {
    for (int L : Ls)
      curves.push_back(estimate_ids(pm.model, pm.gs, make_grid(cfg.model.d, L, cfg.n), cfg.ids.boundaries,
                                    energies, opts));
    bj = {{"command", "ids"},
          {"config_hash", hash},
          {"Ls", Ls},
          {"skipped", "bracketing needs at least two box sizes and boundaries [D, M]"},
          {"all_ok", true}};
  }

  // Nondecreasing means per boundary condition (sanity, pathwise by construction).
  for (const auto& c : curves)
    for (const auto& row : c.mean)
      ok = ok && std::is_sorted(row.begin(), row.end());

  std::ostringstream csv;
  bool first = true;
  for (const auto& c : curves) {
    std::ostringstream part;
    write_ids_csv(c, part);
    std::string text = part.str();
    if (!first) text = text.substr(text.find('\n') + 1);
    first = false;
    csv << text;
  }
  // Append the config hash as a trailing column.
  std::istringstream in(csv.str());
  std::ostringstream withhash;
  std::string line;
  bool header = true;
  while (std::getline(in, line)) {
    withhash << line << ',' << (header ? std::string("config_hash") : hash) << '\n';
    header = false;
  }
  res.files.push_back({"ids.csv", withhash.str()});
  res.files.push_back({"bracketing.json", dump(bj)});
  res.exit_code = ok ? kExitOk : kExitFailed;
  std::ostringstream os;
  os << "ids: " << curves.size() << " box size(s), " << energies.size() << " energies, M = " << cfg.samples
     << (bracket ? (ok ? ", bracketing holds" : ", bracketing FAILED") : "") << "\n";
  res.summary = os.str();
  return res;
}

CommandResult run_lifshitz(const RunConfig& cfg, unsigned workers) {
  CommandResult res;
  if (model_rejected(cfg, "lifshitz", res)) return res;
  const auto& lc = cfg.lifshitz;
  const std::string hash = hex64(config_hash(cfg));
  const int d = cfg.model.d;
  const double s_target = 0.5 * d;

  FitOptions fo;
  fo.n_min = lc.n_min;
  fo.n_max = lc.n_max;
  fo.max_relative_se = lc.max_relative_se;
  fo.min_points = static_cast<std::size_t>(lc.min_points);
  fo.bootstrap = lc.bootstrap;
  fo.seed = cfg.seed;

  // Self-test on an exact curve exp(-E^{-d/2}) inside the window.
  json self;
  bool self_ok = false;
  {
    const double e_lo = std::pow(-std::log(lc.n_min), -1.0 / s_target);
    const double e_hi = std::pow(-std::log(lc.n_max), -1.0 / s_target);
    const auto es = geometric_energies(e_lo * 1.01, e_hi * 0.99, 12);
    const LifshitzFit f = fit_lifshitz(synthetic_curve(1.0, s_target, es, d), BoundaryKind::dirichlet, fo);
    self_ok = std::abs(f.slope + s_target) <= 1e-3;
    self = {{"c", 1.0}, {"s", s_target}, {"slope", f.slope}, {"pass", self_ok}};
  }

  json j{{"command", "lifshitz"},
         {"config_hash", hash},
         {"d", d},
         {"window", {lc.n_min, lc.n_max}},
         {"band", {lc.band_lo, lc.band_hi}},
         {"target", -s_target},
         {"boundary", std::string(1, tag(lc.boundary))},
         {"self_test", self}};

  IDSCurve curve;
  if (!lc.replay.empty()) {
    const std::string path = join_path(cfg.source, lc.replay);
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("/experiment/lifshitz/replay", "cannot open " + path);
    curve = read_ids_csv(in);
    curve.d = d;
    j["mode"] = "replay";
  } else {
    const std::vector<double> energies = required_energies(cfg);
    const PreparedModel pm = prepare_model(cfg.model, cfg.n, cfg.solver);
    const LemmaConstants lemma = realize_lemma_constants(pm.model, pm.gs, cfg.n, lc.lemma_L);
    std::vector<int> Ls;
    json clamped = json::array();
    for (double E : energies) {
      const BoxSize b = choose_box_size_lower(E, lemma.B2, lc.L_max);
      Ls.push_back(b.L);
      if (b.clamped) clamped.push_back({{"E", E}, {"raw", b.raw}, {"L", b.L}});
    }
    IdsOptions opts;
    opts.samples = cfg.samples;
    opts.seed = cfg.seed;
    opts.workers = workers;
    opts.solver = cfg.solver;
    curve = estimate_ids_scaled(pm.model, pm.gs, cfg.n, energies, Ls, {lc.boundary}, opts);
    std::ostringstream csv;
    write_ids_csv(curve, csv);
    res.files.push_back({"lifshitz_curve.csv", csv.str()});
    j["mode"] = "estimate";
    j["B2"] = lemma.B2;
    j["clamped"] = clamped;
    j["samples"] = cfg.samples;
    j["seed"] = cfg.seed;
    j["n"] = cfg.n;
  }

  try {
    const LifshitzFit f = fit_lifshitz(curve, lc.boundary, fo);
    json pts = json::array();
    for (const auto& p : f.points)
      pts.push_back({{"E", p.energy}, {"N", p.N}, {"se", p.se}, {"L", p.L}, {"log_E", p.x}, {"log_abs_log_N", p.y}});
    const bool in_band = f.slope >= lc.band_lo && f.slope <= lc.band_hi;
    j["e_lo"] = f.e_lo;
    j["e_hi"] = f.e_hi;
    j["slope"] = f.slope;
    j["intercept"] = f.intercept;
    j["ci_lo"] = f.ci_lo;
    j["ci_hi"] = f.ci_hi;
    j["ci_method"] = f.ci_method;
    j["points"] = pts;
    j["pass"] = in_band && self_ok;
    j["note"] = "finite-volume estimate restricted to the window; no extrapolation to E -> 0";
    res.exit_code = (in_band && self_ok) ? kExitOk : kExitFailed;
    std::ostringstream os;
    os << "lifshitz: slope " << num17(f.slope) << " [" << num17(f.ci_lo) << ", " << num17(f.ci_hi) << "], target "
       << -s_target << ", " << (in_band ? "inside" : "outside") << " band [" << lc.band_lo << ", " << lc.band_hi
       << "]" << (self_ok ? "" : ", self-test FAILED") << "\n";
    res.summary = os.str();
  } catch (const InsufficientDataError& e) {
    j["error"] = e.what();
    j["pass"] = false;
    res.exit_code = kExitInsufficientData;
    res.summary = std::string("lifshitz: ") + e.what() + "\n";
  }
  res.files.push_back({"lifshitz.json", dump(j)});
  return res;
}

namespace {

json record_json(const BoundRecord& r) {
  json c = json::object();
  for (const auto& [k, v] : r.constants) c[k] = v;
  json j{{"name", r.name},
         {"relation", r.relation == Relation::le ? "<=" : "<"},
         {"lhs", r.lhs},
         {"rhs", r.rhs},
         {"margin", r.margin},
         {"pass", r.verdict == Verdict::pass},
         {"verdict", to_string(r.verdict)},
         {"constants", c}};
  if (!r.note.empty()) j["note"] = r.note;
  return j;
}

}  // namespace

CommandResult run_bounds(const RunConfig& cfg, unsigned workers) {
  CommandResult res;
  if (model_rejected(cfg, "bounds", res)) return res;
  const auto& bc = cfg.bounds;
  const std::string hash = hex64(config_hash(cfg));
  const PreparedModel pm = prepare_model(cfg.model, cfg.n, cfg.solver);
  const int d = cfg.model.d;

  const GapFit gap = fit_epsilon0(pm.model, pm.gs, bc.gap_L, cfg.solver);
  const ModelConstants k = measure_constants(pm.model, pm.gs, gap.epsilon0, cfg.validate.lambda_grid);

  json j{{"command", "bounds"}, {"config_hash", hash}, {"samples", cfg.samples}, {"seed", cfg.seed}};
  j["gap_fit"] = {{"Ls", gap.Ls}, {"gaps", gap.gaps}, {"slope", gap.slope}};
  j["constants"] = {
      {"epsilon0", {{"value", k.epsilon0}, {"provenance", "min over L of L^2 (E2 - E1)(H_per^{L,M}) on gap_L"}}},
      {"epsilon1", {{"value", k.epsilon1}, {"provenance", "assumption scan, infimum of d/dlambda int u at resolution n"}}},
      {"epsilon2", {{"value", k.epsilon2}, {"provenance", "assumption scan, largest resolved lambda offset"}}},
      {"kappa1", {{"value", k.kappa1}, {"provenance", "analytic sup of du/dlambda (grid value if no closed form)"}}},
      {"c3", {{"value", k.c3}, {"provenance", "min of the periodic ground state"}}},
      {"c4", {{"value", k.c4}, {"provenance", "max of the periodic ground state"}}},
      {"lambda_star", {{"value", k.lambda_star}, {"provenance", "median of mu, past any atom at lambda_minus"}}},
      {"p", {{"value", k.p}, {"provenance", "mu([lambda_star, lambda_plus])"}}},
      {"raw_ground_energy", {{"value", pm.raw_ground_energy}, {"provenance", "E1(H_per^{1,P}) before normalization"}}}};

  bool all_ok = true;
  json temple = json::array();
  std::vector<TempleConfig> configs;
  for (int L : bc.temple_L) {
    try {
      configs.push_back(choose_temple_config(k, L));
    } catch (const PreconditionError& e) {
      j["error"] = e.what();
      j["binding_constraint"] = e.violated().empty() ? std::string() : e.violated().front();
      j["violated"] = e.violated();
      res.exit_code = kExitInfeasible;
      res.files.push_back({"bounds.json", dump(j)});
      res.summary = std::string("bounds: ") + e.what() + "\n";
      return res;
    }
  }

  std::size_t dev_sites = 0, dev_antecedent = 0, dev_violations = 0;
  std::size_t cor_checks = 0, cor_nonvacuous = 0, cor_fail = 0;
  for (const TempleConfig& tc : configs) {
    const GridSpec grid = make_grid(d, tc.L, cfg.n);
    const TempleContext ctx = make_temple_context(pm.model, pm.gs, grid, tc, k, cfg.solver);
    struct Sample {
      bool chain_ok = true;
      bool main_pass = true;
      bool boundary = false;
      std::string broken;
      double moment_gap = 0.0;
      double second_margin = 0.0;
      BoundRecord corollary;
      DeviationStats dev;
    };
    std::vector<Sample> out(cfg.samples);
    parallel_for(cfg.samples, workers, [&](std::size_t i) {
      const Realization r = sample_realization(pm.model.dist, cfg.seed, i, tc.L, d);
      const TempleOutcome o = temple_lower_bound(ctx, r.couplings);
      Sample s;
      for (const auto& rec : o.report.records) {
        if (rec.verdict == Verdict::boundary) s.boundary = true;
        if (rec.verdict == Verdict::fail && s.broken.empty()) s.broken = rec.name;
      }
      s.chain_ok = s.broken.empty();
      s.main_pass = o.report.records.back().verdict == Verdict::pass;
      s.moment_gap = std::abs(o.first - o.mapped.mean_xi());
      s.second_margin = 2.0 * k.kappa1 * tc.c2 / (double(tc.L) * tc.L) * o.mapped.mean_xi() - o.second;
      s.corollary = counting_corollary_check(o.mapped, o.e1, tc.energy, tc.gamma);
      deviation_chain_check(o.mapped, tc, k, &s.dev);
      out[i] = std::move(s);
    });
    std::size_t pass = 0, chain = 0, boundary = 0;
    double max_gap = 0.0, min_second = std::numeric_limits<double>::infinity();
    json failures = json::array();
    for (std::size_t i = 0; i < out.size(); ++i) {
      const Sample& s = out[i];
      pass += s.main_pass ? 1 : 0;
      chain += s.chain_ok ? 1 : 0;
      boundary += s.boundary ? 1 : 0;
      max_gap = std::max(max_gap, s.moment_gap);
      min_second = std::min(min_second, s.second_margin);
      if (!s.chain_ok && failures.size() < 10) failures.push_back({{"realization", i}, {"broken_link", s.broken}});
      ++cor_checks;
      if (s.corollary.note.empty()) ++cor_nonvacuous;
      if (s.corollary.verdict != Verdict::pass) ++cor_fail;
      dev_sites += s.dev.sites;
      dev_antecedent += s.dev.antecedent;
      dev_violations += s.dev.violations;
    }
    all_ok = all_ok && chain == out.size();
    temple.push_back({{"L", tc.L},
                      {"c2", tc.c2},
                      {"gamma", tc.gamma},
                      {"c7", tc.c7},
                      {"energy", tc.energy},
                      {"epsilon0", tc.epsilon0},
                      {"e1_per", ctx.e1_per},
                      {"e2_per", ctx.e2_per},
                      {"samples", out.size()},
                      {"temple_pass", pass},
                      {"chain_pass", chain},
                      {"boundary", boundary},
                      {"max_first_moment_gap", max_gap},
                      {"min_second_moment_margin", out.empty() ? 0.0 : min_second},
                      {"failures", failures}});
  }
  j["temple"] = temple;
  j["corollary"] = {{"checks", cor_checks}, {"nonvacuous", cor_nonvacuous}, {"failures", cor_fail}};
  all_ok = all_ok && cor_fail == 0;

  // Site sweep for the deviation lemma with the first configuration.
  if (!configs.empty() && bc.deviation_sites > 0) {
    const TempleConfig& tc = configs.front();
    const double cap = k.lambda_minus + tc.c2 / (double(tc.L) * tc.L);
    const CounterRng rng(cfg.seed, Stream::test_data);
    std::vector<DeviationStats> sweep(bc.deviation_sites);
    parallel_for(bc.deviation_sites, workers, [&](std::size_t s) {
      MappedRealization m;
      const double lambda = quantile(pm.model.dist, rng.uniform(s, 0));
      m.couplings = {lambda};
      m.cutoffs = {std::min(lambda, cap)};
      m.xi = {mapped_value(pm.model, pm.gs, m.cutoffs[0])};
      deviation_chain_check(m, tc, k, &sweep[s]);
    });
    for (const auto& s : sweep) {
      dev_sites += s.sites;
      dev_antecedent += s.antecedent;
      dev_violations += s.violations;
    }
    const double witness_lambda = k.lambda_minus + tc.c7 * tc.energy;
    const double witness_xi = mapped_value(pm.model, pm.gs, witness_lambda);
    const BoundRecord w = compare("2 gamma E <= xi(lambda_minus + c7 E)", 2.0 * tc.gamma * tc.energy,
                                  Relation::le, witness_xi, 0.0);
    j["deviation_witness"] = record_json(w);
    all_ok = all_ok && w.verdict == Verdict::pass;
  }
  j["deviation"] = {{"sites", dev_sites}, {"antecedent", dev_antecedent}, {"violations", dev_violations}};
  all_ok = all_ok && dev_violations == 0;

  json bern = json::array();
  for (double p : bc.bernoulli_p) {
    for (long Ld : bc.bernoulli_Ld) {
      const double gamma = 2.0 / p;
      const BernoulliTail t = bernoulli_tail(p, gamma, Ld);
      const bool ok = t.exact <= t.bound;
      all_ok = all_ok && ok;
      bern.push_back({{"p", p}, {"gamma", gamma}, {"Ld", Ld}, {"exact", t.exact}, {"bound", t.bound}, {"pass", ok}});
    }
  }
  j["bernoulli"] = bern;

  json lemma = json::array();
  double B1 = 0.0, B2 = 0.0;
  for (int L : bc.lemma_L) {
    const GridSpec grid = make_grid(d, L, cfg.n);
    std::vector<UpperBoundOutcome> out(cfg.samples);
    parallel_for(cfg.samples, workers, [&](std::size_t i) {
      const Realization r = sample_realization(pm.model.dist, cfg.seed, i, L, d);
      out[i] = dirichlet_upper_bound(pm.model, pm.gs, grid, r.couplings, cfg.solver);
    });
    std::size_t pass = 0;
    double min_margin = std::numeric_limits<double>::infinity();
    for (const auto& o : out) {
      pass += o.report.all_pass() ? 1 : 0;
      min_margin = std::min(min_margin, o.report.records.back().margin);
    }
    const LemmaConstants c = realize_lemma_constants(pm.model, pm.gs, grid);
    B1 = std::max(B1, c.B1);
    B2 = std::max(B2, c.B2);
    all_ok = all_ok && pass == out.size();
    lemma.push_back({{"L", L}, {"B1", c.B1}, {"B2", c.B2}, {"samples", out.size()}, {"pass", pass},
                     {"min_margin", out.empty() ? 0.0 : min_margin}});
  }
  j["lemma"] = {{"per_L", lemma},
                {"B1", {{"value", B1}, {"provenance", "max over lemma_L of sup phi^2 L^d / ||phi||^2"}}},
                {"B2", {{"value", B2}, {"provenance", "max over lemma_L of L^2 <phi, H_per^{L,D} phi> / ||phi||^2"}}}};
  j["all_pass"] = all_ok;
  res.files.push_back({"bounds.json", dump(j)});
  res.exit_code = all_ok ? kExitOk : kExitFailed;
  std::ostringstream os;
  os << "bounds: epsilon0 = " << num17(k.epsilon0) << ", " << (all_ok ? "all checks pass" : "some checks FAIL")
     << "\n";
  for (const auto& t : temple)
    os << "  L = " << t["L"].get<int>() << ": Temple " << t["temple_pass"].get<std::size_t>() << "/"
       << t["samples"].get<std::size_t>() << ", chain " << t["chain_pass"].get<std::size_t>() << "/"
       << t["samples"].get<std::size_t>() << "\n";
  res.summary = os.str();
  return res;
}

CommandResult run_command(const std::string& command, const RunConfig& cfg, unsigned workers) {
  if (command == "validate") return run_validate(cfg);
  if (command == "spectrum") return run_spectrum(cfg, workers);
  if (command == "ids") return run_ids(cfg, workers);
  if (command == "lifshitz") return run_lifshitz(cfg, workers);
  if (command == "bounds") return run_bounds(cfg, workers);
  throw ConfigError("command", "unknown command '" + command + "'");
}

std::string external_inputs(const std::string& command, const RunConfig& cfg) {
  if (command != "lifshitz" || cfg.lifshitz.replay.empty()) return {};
  std::ifstream in(join_path(cfg.source, cfg.lifshitz.replay), std::ios::binary);
  if (!in) return "<missing>";
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace lifshitz::cli
