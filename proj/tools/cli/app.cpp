#include "app.hpp"

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "commands.hpp"
#include "config.hpp"
#include "lifshitz/errors.hpp"
#include "lifshitz/parallel.hpp"

namespace lifshitz::cli {
namespace {

namespace fs = std::filesystem;

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& p, const std::string& content) {
  const fs::path tmp = p.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw InputError("cannot write " + tmp.string());
    out << content;
  }
  fs::rename(tmp, p);
}

std::string utc_now() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

/// Content-addressed store of finished command results. An entry is a
/// directory holding the output files, the exit code and the summary.
class ResultCache {
 public:
  explicit ResultCache(fs::path root) : root_(std::move(root)) {}

  static std::string key(const std::string& command, const RunConfig& cfg) {
    std::uint64_t h = config_hash(cfg);
    for (unsigned char c : external_inputs(command, cfg)) {
      h ^= c;
      h *= 0x100000001b3ull;
    }
    return command + "-" + hex64(h);
  }

  std::optional<CommandResult> load(const std::string& key) const {
    const fs::path dir = root_ / key;
    if (!fs::exists(dir / "manifest.json")) return std::nullopt;
    try {
      const auto m = nlohmann::json::parse(read_file(dir / "manifest.json"));
      CommandResult r;
      r.exit_code = m.at("exit_code").get<int>();
      r.summary = m.at("summary").get<std::string>();
      for (const auto& name : m.at("files")) {
        const fs::path f = dir / name.get<std::string>();
        if (!fs::exists(f)) return std::nullopt;
        r.files.push_back({name.get<std::string>(), read_file(f)});
      }
      return r;
    } catch (const std::exception&) {
      return std::nullopt;  // damaged entry: recompute
    }
  }

  void store(const std::string& key, const CommandResult& r) const {
    const fs::path dir = root_ / key;
    fs::create_directories(dir);
    nlohmann::json names = nlohmann::json::array();
    for (const auto& f : r.files) {
      write_file(dir / f.name, f.content);
      names.push_back(f.name);
    }
    // Manifest last, so a partial entry is never read as a hit.
    write_file(dir / "manifest.json",
               nlohmann::json{{"exit_code", r.exit_code}, {"summary", r.summary}, {"files", names}}.dump(2));
  }

 private:
  fs::path root_;
};

}  // namespace

int run_app(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Numerical laboratory for Lifshitz tails of random Schroedinger operators", "lifshitz-lab"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir;
  unsigned workers = 0;
  bool no_cache = false;
  app.add_option("--config", config_path, "JSON configuration file")->required();
  app.add_option("--seed", seed, "master seed (overrides the config)");
  app.add_option("--out", out_dir, std::string("output directory (overrides ") + kOutputEnv + ")");
  app.add_option("--workers", workers, "worker threads (default: available parallelism)");
  app.add_flag("--no-cache", no_cache, "neither read nor write the result cache");

  const std::pair<const char*, const char*> commands[] = {
      {"validate", "check the model assumptions"},
      {"spectrum", "lowest eigenvalues per box size, boundary and realization"},
      {"ids", "Monte Carlo IDS with Dirichlet/Mezincescu bracketing"},
      {"lifshitz", "windowed fit of the Lifshitz exponent"},
      {"bounds", "Temple, deviation and upper-bound verification"},
  };
  for (const auto& [name, help] : commands) app.add_subcommand(name, help)->fallthrough();

  std::vector<std::string> rev(args.rbegin(), args.rend());
  try {
    app.parse(rev);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n" << app.help();
    return kExitInput;
  }
  const std::string command = app.get_subcommands().front()->get_name();

  RunConfig cfg;
  try {
    cfg = load_config(config_path);
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return kExitInput;
  } catch (const InputError& e) {
    err << "error: " << config_path << ": " << e.what() << "\n";
    return kExitInput;
  }
  if (seed) cfg.seed = *seed;
  if (workers == 0) workers = cfg.workers;
  if (workers == 0) workers = default_workers();

  fs::path dir = kDefaultOutputDir;
  if (!out_dir.empty()) {
    dir = out_dir;
  } else if (const char* env = std::getenv(kOutputEnv); env && *env) {
    dir = env;
  } else if (!cfg.out_dir.empty()) {
    dir = cfg.out_dir;
  }

  const std::string started = utc_now();
  const auto t0 = std::chrono::steady_clock::now();
  CommandResult result;
  std::string cache_state = no_cache ? "disabled" : "miss";
  try {
    fs::create_directories(dir);
    const ResultCache cache(dir / ".cache");
    const std::string key = ResultCache::key(command, cfg);
    std::optional<CommandResult> hit;
    if (!no_cache) hit = cache.load(key);
    if (hit) {
      result = std::move(*hit);
      cache_state = "hit";
    } else {
      result = run_command(command, cfg, workers);
      if (!no_cache) cache.store(key, result);
    }
    for (const auto& f : result.files) write_file(dir / f.name, f.content);
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return kExitInput;
  } catch (const InputError& e) {
    err << "error: " << e.what() << "\n";
    return kExitInput;
  } catch (const std::exception& e) {
    err << "error: " << command << ": " << e.what() << "\n";
    return kExitFailed;
  }
  const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  nlohmann::json meta{{"command", command},
                      {"config", config_path},
                      {"config_hash", hex64(config_hash(cfg))},
                      {"seed", cfg.seed},
                      {"workers", workers},
                      {"cache", cache_state},
                      {"started", started},
                      {"finished", utc_now()},
                      {"elapsed_seconds", elapsed},
                      {"exit_code", result.exit_code}};
  nlohmann::json files = nlohmann::json::array();
  for (const auto& f : result.files) files.push_back(f.name);
  meta["files"] = files;
  try {
    write_file(dir / (command + ".meta.json"), meta.dump(2) + "\n");
  } catch (const std::exception& e) {
    err << "warning: " << e.what() << "\n";
  }

  out << result.summary;
  if (cache_state == "hit") err << "(cached result " << ResultCache::key(command, cfg) << ")\n";
  return result.exit_code;
}

}  // namespace lifshitz::cli
