#include "config.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <initializer_list>
#include <limits>
#include <sstream>

#include "lifshitz/errors.hpp"
#include "lifshitz/ids.hpp"

namespace lifshitz::cli {
namespace {

using nlohmann::json;

std::string join(const std::string& path, const std::string& key) { return path + "/" + key; }

void check_keys(const json& obj, const std::string& path, std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) throw ConfigError(path.empty() ? "/" : path, "expected an object");
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || it.key() == a;
    if (!ok) throw ConfigError(join(path, it.key()), "unknown field");
  }
}

const json* find(const json& obj, const char* key) {
  auto it = obj.find(key);
  return it == obj.end() ? nullptr : &*it;
}

const json& require(const json& obj, const std::string& path, const char* key) {
  const json* v = find(obj, key);
  if (!v) throw ConfigError(join(path, key), "required field is missing");
  return *v;
}

double as_number(const json& v, const std::string& path) {
  if (!v.is_number()) throw ConfigError(path, "expected a number");
  const double x = v.get<double>();
  if (!std::isfinite(x)) throw ConfigError(path, "expected a finite number");
  return x;
}

long long as_integer(const json& v, const std::string& path) {
  if (!v.is_number_integer()) throw ConfigError(path, "expected an integer");
  return v.get<long long>();
}

std::uint64_t as_u64(const json& v, const std::string& path) {
  if (v.is_number_unsigned()) return v.get<std::uint64_t>();
  if (v.is_number_integer() && v.get<long long>() >= 0) return static_cast<std::uint64_t>(v.get<long long>());
  throw ConfigError(path, "expected a nonnegative integer");
}

std::string as_string(const json& v, const std::string& path) {
  if (!v.is_string()) throw ConfigError(path, "expected a string");
  return v.get<std::string>();
}

template <class T, class F>
std::vector<T> as_array(const json& v, const std::string& path, F&& each) {
  if (!v.is_array()) throw ConfigError(path, "expected an array");
  std::vector<T> out;
  for (std::size_t i = 0; i < v.size(); ++i) out.push_back(each(v[i], path + "/" + std::to_string(i)));
  return out;
}

std::vector<double> numbers(const json& v, const std::string& path) {
  return as_array<double>(v, path, as_number);
}

std::vector<int> positive_ints(const json& v, const std::string& path) {
  return as_array<int>(v, path, [](const json& x, const std::string& p) {
    const long long i = as_integer(x, p);
    if (i < 1 || i > (1 << 20)) throw ConfigError(p, "expected a positive integer");
    return static_cast<int>(i);
  });
}

template <class T>
void opt_number(const json& obj, const std::string& path, const char* key, T& out) {
  if (const json* v = find(obj, key)) out = static_cast<T>(as_number(*v, join(path, key)));
}

template <class T>
void opt_integer(const json& obj, const std::string& path, const char* key, T& out, long long lo,
                 long long hi = std::numeric_limits<long long>::max()) {
  if (const json* v = find(obj, key)) {
    const long long i = as_integer(*v, join(path, key));
    if (i < lo || i > hi) {
      std::ostringstream os;
      os << "must lie in [" << lo << ", " << hi << "]";
      throw ConfigError(join(path, key), os.str());
    }
    out = static_cast<T>(i);
  }
}

std::vector<BoundaryKind> boundaries(const json& v, const std::string& path) {
  return as_array<BoundaryKind>(v, path, [](const json& x, const std::string& p) {
    try {
      return parse_boundary(as_string(x, p));
    } catch (const InputError& e) {
      throw ConfigError(p, e.what());
    }
  });
}

void parse_model(const json& j, const std::string& path, ModelSpec& m) {
  check_keys(j, path, {"d", "periodic", "site", "distribution"});
  {
    const long long d = as_integer(require(j, path, "d"), join(path, "d"));
    if (d < 1 || d > 3) throw ConfigError(join(path, "d"), "must be 1, 2 or 3");
    m.d = static_cast<int>(d);
  }
  if (const json* p = find(j, "periodic")) {
    const std::string pp = join(path, "periodic");
    check_keys(*p, pp, {"kind", "amplitudes", "table_n", "table"});
    const std::string kind = as_string(require(*p, pp, "kind"), join(pp, "kind"));
    if (kind == "zero") m.vper.kind = PeriodicKind::zero;
    else if (kind == "cosine-sum") m.vper.kind = PeriodicKind::cosine_sum;
    else if (kind == "tabulated") m.vper.kind = PeriodicKind::tabulated;
    else throw ConfigError(join(pp, "kind"), "expected zero, cosine-sum or tabulated");
    if (const json* a = find(*p, "amplitudes")) m.vper.amplitudes = numbers(*a, join(pp, "amplitudes"));
    opt_integer(*p, pp, "table_n", m.vper.table_n, 1, 4096);
    if (const json* t = find(*p, "table")) m.vper.table = numbers(*t, join(pp, "table"));
  }
  {
    const std::string sp = join(path, "site");
    const json& s = require(j, path, "site");
    check_keys(s, sp, {"kind", "bumps", "table"});
    const std::string kind = as_string(require(s, sp, "kind"), join(sp, "kind"));
    if (kind == "alloy") m.site.kind = SiteKind::alloy;
    else if (kind == "breather") m.site.kind = SiteKind::breather;
    else if (kind == "tabulated") m.site.kind = SiteKind::tabulated;
    else throw ConfigError(join(sp, "kind"), "expected alloy, breather or tabulated");
    if (const json* b = find(s, "bumps")) {
      m.site.bumps = as_array<Bump>(*b, join(sp, "bumps"), [](const json& x, const std::string& p) {
        check_keys(x, p, {"amplitude", "radius"});
        Bump bump;
        opt_number(x, p, "amplitude", bump.amplitude);
        opt_number(x, p, "radius", bump.radius);
        return bump;
      });
    }
    if (const json* t = find(s, "table")) {
      const std::string tp = join(sp, "table");
      check_keys(*t, tp, {"lambdas", "n", "values"});
      m.site.table.lambdas = numbers(require(*t, tp, "lambdas"), join(tp, "lambdas"));
      opt_integer(*t, tp, "n", m.site.table.n, 1, 4096);
      m.site.table.values = numbers(require(*t, tp, "values"), join(tp, "values"));
    }
  }
  {
    const std::string dp = join(path, "distribution");
    const json& dj = require(j, path, "distribution");
    check_keys(dj, dp, {"kind", "lambda_minus", "lambda_plus", "beta_a", "beta_b", "atom_mass_at_min",
                        "alpha", "kappa"});
    const std::string kind = as_string(require(dj, dp, "kind"), join(dp, "kind"));
    if (kind == "uniform") m.dist.kind = DistributionKind::uniform;
    else if (kind == "truncated-beta") m.dist.kind = DistributionKind::truncated_beta;
    else if (kind == "two-point-plus-uniform") m.dist.kind = DistributionKind::two_point_plus_uniform;
    else throw ConfigError(join(dp, "kind"), "expected uniform, truncated-beta or two-point-plus-uniform");
    m.dist.lambda_minus = as_number(require(dj, dp, "lambda_minus"), join(dp, "lambda_minus"));
    m.dist.lambda_plus = as_number(require(dj, dp, "lambda_plus"), join(dp, "lambda_plus"));
    opt_number(dj, dp, "beta_a", m.dist.beta_a);
    opt_number(dj, dp, "beta_b", m.dist.beta_b);
    opt_number(dj, dp, "atom_mass_at_min", m.dist.atom_mass_at_min);
    if (const json* a = find(dj, "alpha")) m.dist.alpha = as_number(*a, join(dp, "alpha"));
    if (const json* k = find(dj, "kappa")) m.dist.kappa = as_number(*k, join(dp, "kappa"));
  }
  try {
    check_model(m);
  } catch (const InputError& e) {
    throw ConfigError(path, e.what());
  }
}

void parse_window(const json& v, const std::string& path, double& lo, double& hi) {
  const auto w = numbers(v, path);
  if (w.size() != 2 || !(w[0] < w[1])) throw ConfigError(path, "expected [lo, hi] with lo < hi");
  lo = w[0];
  hi = w[1];
}

void parse_experiment(const json& j, const std::string& path, RunConfig& cfg) {
  check_keys(j, path, {"seed", "samples", "energies", "validate", "spectrum", "ids", "lifshitz", "bounds"});
  if (const json* s = find(j, "seed")) cfg.seed = as_u64(*s, join(path, "seed"));
  opt_integer(j, path, "samples", cfg.samples, 1, 100000000);
  if (const json* e = find(j, "energies")) {
    const std::string ep = join(path, "energies");
    check_keys(*e, ep, {"values", "min", "max", "count"});
    if (const json* v = find(*e, "values")) {
      cfg.energies.values = numbers(*v, join(ep, "values"));
      for (std::size_t i = 1; i < cfg.energies.values.size(); ++i)
        if (cfg.energies.values[i] < cfg.energies.values[i - 1])
          throw ConfigError(join(ep, "values"), "energies must be sorted");
    } else {
      cfg.energies.min = as_number(require(*e, ep, "min"), join(ep, "min"));
      cfg.energies.max = as_number(require(*e, ep, "max"), join(ep, "max"));
      cfg.energies.count = static_cast<int>(as_integer(require(*e, ep, "count"), join(ep, "count")));
      if (!(cfg.energies.min > 0 && cfg.energies.max >= cfg.energies.min) || cfg.energies.count < 1)
        throw ConfigError(ep, "geometric grid needs 0 < min <= max and count >= 1");
    }
  }
  if (const json* v = find(j, "validate")) {
    const std::string vp = join(path, "validate");
    check_keys(*v, vp, {"lambda_grid", "x_grid"});
    opt_integer(*v, vp, "lambda_grid", cfg.validate.lambda_grid, 16, 1 << 16);
    opt_integer(*v, vp, "x_grid", cfg.validate.x_grid, 16, 1 << 16);
  }
  if (const json* s = find(j, "spectrum")) {
    const std::string sp = join(path, "spectrum");
    check_keys(*s, sp, {"m", "boundaries", "robin_rho", "realizations"});
    opt_integer(*s, sp, "m", cfg.spectrum.m, 1, 1 << 20);
    if (const json* b = find(*s, "boundaries")) cfg.spectrum.boundaries = boundaries(*b, join(sp, "boundaries"));
    opt_number(*s, sp, "robin_rho", cfg.spectrum.robin_rho);
    if (const json* r = find(*s, "realizations"))
      cfg.spectrum.realizations = as_array<std::uint64_t>(*r, join(sp, "realizations"), as_u64);
  }
  if (const json* s = find(j, "ids")) {
    const std::string ip = join(path, "ids");
    check_keys(*s, ip, {"boundaries", "z"});
    if (const json* b = find(*s, "boundaries")) cfg.ids.boundaries = boundaries(*b, join(ip, "boundaries"));
    opt_number(*s, ip, "z", cfg.ids.z);
    for (BoundaryKind k : cfg.ids.boundaries)
      if (k == BoundaryKind::robin) throw ConfigError(join(ip, "boundaries"), "Robin is not supported for IDS runs");
  }
  if (const json* s = find(j, "lifshitz")) {
    const std::string lp = join(path, "lifshitz");
    auto& l = cfg.lifshitz;
    check_keys(*s, lp, {"window", "band", "boundary", "L_max", "bootstrap", "max_relative_se", "min_points",
                        "lemma_L", "replay"});
    if (const json* w = find(*s, "window")) parse_window(*w, join(lp, "window"), l.n_min, l.n_max);
    if (!(0 < l.n_min && l.n_max < 1)) throw ConfigError(join(lp, "window"), "window must lie in (0, 1)");
    if (const json* b = find(*s, "band")) parse_window(*b, join(lp, "band"), l.band_lo, l.band_hi);
    if (const json* b = find(*s, "boundary")) {
      try {
        l.boundary = parse_boundary(as_string(*b, join(lp, "boundary")));
      } catch (const InputError& e) {
        throw ConfigError(join(lp, "boundary"), e.what());
      }
      if (l.boundary != BoundaryKind::dirichlet && l.boundary != BoundaryKind::mezincescu)
        throw ConfigError(join(lp, "boundary"), "expected D or M");
    }
    opt_integer(*s, lp, "L_max", l.L_max, 2, 1 << 20);
    opt_integer(*s, lp, "bootstrap", l.bootstrap, 0, 100000);
    opt_number(*s, lp, "max_relative_se", l.max_relative_se);
    opt_integer(*s, lp, "min_points", l.min_points, 2, 100000);
    if (const json* v = find(*s, "lemma_L")) l.lemma_L = positive_ints(*v, join(lp, "lemma_L"));
    if (const json* r = find(*s, "replay")) l.replay = as_string(*r, join(lp, "replay"));
  }
  if (const json* s = find(j, "bounds")) {
    const std::string bp = join(path, "bounds");
    auto& b = cfg.bounds;
    check_keys(*s, bp, {"gap_L", "temple_L", "lemma_L", "bernoulli_p", "bernoulli_Ld", "deviation_sites"});
    if (const json* v = find(*s, "gap_L")) b.gap_L = positive_ints(*v, join(bp, "gap_L"));
    if (b.gap_L.size() < 2) throw ConfigError(join(bp, "gap_L"), "needs at least two box sizes");
    if (const json* v = find(*s, "temple_L")) b.temple_L = positive_ints(*v, join(bp, "temple_L"));
    if (const json* v = find(*s, "lemma_L")) b.lemma_L = positive_ints(*v, join(bp, "lemma_L"));
    if (const json* v = find(*s, "bernoulli_p")) {
      b.bernoulli_p = numbers(*v, join(bp, "bernoulli_p"));
      for (double p : b.bernoulli_p)
        if (!(p > 0 && p <= 1)) throw ConfigError(join(bp, "bernoulli_p"), "probabilities must lie in (0, 1]");
    }
    if (const json* v = find(*s, "bernoulli_Ld"))
      b.bernoulli_Ld = as_array<long>(*v, join(bp, "bernoulli_Ld"), [](const json& x, const std::string& p) {
        const long long i = as_integer(x, p);
        if (i < 1) throw ConfigError(p, "expected a positive integer");
        return static_cast<long>(i);
      });
    opt_integer(*s, bp, "deviation_sites", b.deviation_sites, 0, 100000000);
  }
}

}  // namespace

std::vector<double> EnergyGrid::resolve() const {
  if (!values.empty()) return values;
  if (count < 1) return {};
  return geometric_energies(min, max, count);
}

BoundaryKind parse_boundary(const std::string& tag) {
  if (tag == "D" || tag == "dirichlet") return BoundaryKind::dirichlet;
  if (tag == "N" || tag == "neumann") return BoundaryKind::neumann;
  if (tag == "P" || tag == "periodic") return BoundaryKind::periodic;
  if (tag == "R" || tag == "robin") return BoundaryKind::robin;
  if (tag == "M" || tag == "mezincescu") return BoundaryKind::mezincescu;
  throw InputError("unknown boundary condition '" + tag + "' (expected D, N, P, R or M)");
}

RunConfig parse_config(const std::string& text, const std::string& source) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i + 1 < e.byte && i < text.size(); ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    std::string msg = e.what();
    const auto cut = msg.find("syntax error");
    if (cut != std::string::npos) msg = msg.substr(cut);
    throw ConfigError(source + ":" + std::to_string(line) + ":" + std::to_string(col), msg);
  }

  RunConfig cfg;
  cfg.source = source;
  check_keys(doc, "", {"schema_version", "model", "grid", "solve", "experiment", "output"});
  {
    const json& v = require(doc, "", "schema_version");
    if (as_integer(v, "/schema_version") != kSchemaVersion)
      throw ConfigError("/schema_version", "unsupported schema version (expected " + std::to_string(kSchemaVersion) + ")");
  }
  parse_model(require(doc, "", "model"), "/model", cfg.model);
  {
    const json& g = require(doc, "", "grid");
    check_keys(g, "/grid", {"L", "n"});
    const json& L = require(g, "/grid", "L");
    cfg.Ls = L.is_array() ? positive_ints(L, "/grid/L") : positive_ints(json::array({L}), "/grid/L");
    if (cfg.Ls.empty()) throw ConfigError("/grid/L", "needs at least one box size");
    const long long n = as_integer(require(g, "/grid", "n"), "/grid/n");
    if (n < 4 || n > 4096) throw ConfigError("/grid/n", "must lie in [4, 4096]");
    cfg.n = static_cast<int>(n);
  }
  if (const json* s = find(doc, "solve")) {
    check_keys(*s, "/solve", {"tolerance", "pivot_tolerance", "dense_threshold", "max_iterations",
                              "max_perturbations", "workers"});
    opt_number(*s, "/solve", "tolerance", cfg.solver.tolerance);
    opt_number(*s, "/solve", "pivot_tolerance", cfg.solver.pivot_tolerance);
    opt_integer(*s, "/solve", "dense_threshold", cfg.solver.dense_threshold, 1);
    opt_integer(*s, "/solve", "max_iterations", cfg.solver.max_iterations, 1, 1 << 20);
    opt_integer(*s, "/solve", "max_perturbations", cfg.solver.max_perturbations, 0, 64);
    opt_integer(*s, "/solve", "workers", cfg.workers, 0, 4096);
    if (!(cfg.solver.tolerance > 0)) throw ConfigError("/solve/tolerance", "must be positive");
    if (!(cfg.solver.pivot_tolerance > 0)) throw ConfigError("/solve/pivot_tolerance", "must be positive");
  }
  if (const json* e = find(doc, "experiment")) parse_experiment(*e, "/experiment", cfg);
  if (const json* o = find(doc, "output")) {
    check_keys(*o, "/output", {"dir", "formats"});
    if (const json* d = find(*o, "dir")) cfg.out_dir = as_string(*d, "/output/dir");
    if (const json* f = find(*o, "formats")) {
      for (const auto& s : as_array<std::string>(*f, "/output/formats", as_string))
        if (s != "json" && s != "csv") throw ConfigError("/output/formats", "expected json or csv");
    }
  }
  cfg.document = std::move(doc);
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(path, "cannot open configuration file");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path);
}

std::uint64_t config_hash(const RunConfig& cfg) {
  json doc = cfg.document;
  doc.erase("output");
  if (doc.contains("solve")) {
    doc["solve"].erase("workers");
    if (doc["solve"].empty()) doc.erase("solve");  // a lone workers key must not change the hash
  }
  doc["experiment"]["seed"] = cfg.seed;
  const std::string canon = doc.dump();
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : canon) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace lifshitz::cli
