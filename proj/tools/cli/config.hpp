#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "lifshitz/lattice.hpp"
#include "lifshitz/model.hpp"
#include "lifshitz/spectral.hpp"

namespace lifshitz::cli {

inline constexpr int kSchemaVersion = 1;

/// Parse or schema error. `where` is "line:col" for syntax errors and a JSON
/// pointer such as /model/distribution/lambda_minus for schema errors.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string where, const std::string& message)
      : std::runtime_error(where + ": " + message), where_(std::move(where)) {}
  const std::string& where() const noexcept { return where_; }

 private:
  std::string where_;
};

struct EnergyGrid {
  std::vector<double> values;  // explicit list wins when non-empty
  double min = 0.0;
  double max = 0.0;
  int count = 0;

  std::vector<double> resolve() const;
};

struct ValidateSection {
  int lambda_grid = 64;
  int x_grid = 256;
};

struct SpectrumSection {
  int m = 4;
  std::vector<BoundaryKind> boundaries{BoundaryKind::dirichlet};
  double robin_rho = 0.0;
  /// Realization indices; empty means the periodic operator alone.
  std::vector<std::uint64_t> realizations;
};

struct IdsSection {
  std::vector<BoundaryKind> boundaries{BoundaryKind::dirichlet, BoundaryKind::mezincescu};
  double z = 2.0;
};

struct LifshitzSection {
  double n_min = 1e-4;
  double n_max = 1e-1;
  double band_lo = -0.8;
  double band_hi = -0.3;
  BoundaryKind boundary = BoundaryKind::dirichlet;
  int L_max = 4096;
  int bootstrap = 200;
  double max_relative_se = 0.25;
  int min_points = 5;
  /// Box sizes for the lower-form constant B2.
  std::vector<int> lemma_L{2, 4, 8, 16, 32};
  /// When set, fit this curve CSV instead of estimating.
  std::string replay;
};

struct BoundsSection {
  std::vector<int> gap_L{2, 3, 4, 5, 6, 7, 8, 9, 10};
  std::vector<int> temple_L{4, 6, 8};
  std::vector<int> lemma_L{4, 6, 8};
  std::vector<double> bernoulli_p{0.3, 0.5, 0.8};
  std::vector<long> bernoulli_Ld{8, 27, 64};
  std::size_t deviation_sites = 10000;
};

struct RunConfig {
  ModelSpec model;
  std::vector<int> Ls{4};
  int n = 16;
  SolverOptions solver;
  unsigned workers = 0;  // 0: available parallelism
  std::uint64_t seed = 1;
  std::size_t samples = 100;
  EnergyGrid energies;
  ValidateSection validate;
  SpectrumSection spectrum;
  IdsSection ids;
  LifshitzSection lifshitz;
  BoundsSection bounds;
  std::string out_dir;
  std::string source;  // path the config came from, for relative references

  /// The input document with defaults left implicit; hashed for caching.
  nlohmann::json document;
};

/// Parses and checks a configuration document. Throws ConfigError.
RunConfig parse_config(const std::string& text, const std::string& source = "<config>");
RunConfig load_config(const std::string& path);

/// FNV-1a over the canonical JSON of everything that determines results
/// (output location and worker count excluded).
std::uint64_t config_hash(const RunConfig& cfg);
std::string hex64(std::uint64_t v);

BoundaryKind parse_boundary(const std::string& tag);

}  // namespace lifshitz::cli
