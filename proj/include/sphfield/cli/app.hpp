#pragma once

#include <cstdint>
#include <exception>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "sphfield/errors.hpp"
#include "sphfield/version.hpp"
#include "sphfield/cli/commands.hpp"
#include "sphfield/cli/config.hpp"

namespace sphfield::cli {

/// Parsed command line before it is merged with the configuration file.
struct CliOptions {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<int> replicates;
  std::string ells;
  std::string out;
  std::string formats;
  unsigned threads = 0;
};

namespace detail {

inline std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto b = item.find_first_not_of(" \t");
    const auto e = item.find_last_not_of(" \t");
    if (b == std::string::npos) throw ConfigError("empty entry in list '" + s + "'");
    out.push_back(item.substr(b, e - b + 1));
  }
  if (out.empty()) throw ConfigError("empty list");
  return out;
}

inline int parse_int(const std::string& s, const char* what) {
  std::size_t used = 0;
  int v = 0;
  try {
    v = std::stoi(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != s.size() || s.empty()) throw ConfigError(std::string(what) + ": '" + s + "' is not an integer");
  return v;
}

}  // namespace detail

/// Config file (or defaults) with command-line overrides applied, validated.
inline ExperimentConfig resolve_config(const CliOptions& o) {
  ExperimentConfig cfg = o.config_path.empty() ? ExperimentConfig{} : load_config(o.config_path);
  if (o.seed) cfg.mc.master_seed = *o.seed;
  if (o.replicates) cfg.mc.replicates = *o.replicates;
  if (!o.ells.empty()) {
    cfg.mc.ells.clear();
    for (const auto& e : detail::split_list(o.ells)) cfg.mc.ells.push_back(detail::parse_int(e, "--ell"));
  }
  if (!o.out.empty()) cfg.output.directory = o.out;
  if (!o.formats.empty()) cfg.output.formats = parse_formats(detail::split_list(o.formats));
  if (cfg.mc.replicates < 1) throw ConfigError("mc.replicates must be positive");
  validate(cfg);
  return cfg;
}

/// Full command-line entry point. Returns the process exit code:
/// 0 all checks pass, 1 a check failed, 2 I/O failure, 64 usage error.
inline int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Monte Carlo verification of spectral estimators for Hilbert-valued spherical random fields",
               "sphfield"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);
  app.fallthrough();

  CliOptions o;
  app.add_option("--config", o.config_path, "JSON configuration file")->check(CLI::ExistingFile);
  app.add_option("--seed", o.seed, "master seed (overrides mc.master_seed)");
  app.add_option("--replicates", o.replicates, "Monte Carlo replicates per degree");
  app.add_option("--ell", o.ells, "comma-separated degrees to verify");
  app.add_option("--out", o.out, "output directory");
  app.add_option("--format", o.formats, "comma-separated subset of csv,json,svg");
  app.add_option("--threads", o.threads, "worker threads, 0 = one per hardware thread")->capture_default_str();

  auto* selftest = app.add_subcommand("selftest", "check deterministic identities");
  auto* simulate = app.add_subcommand("simulate", "draw one realization and write it as CSV");
  auto* verify = app.add_subcommand("verify", "Monte Carlo and deterministic verification");
  verify->require_subcommand(1);
  auto* ergodicity = verify->add_subcommand("ergodicity", "sample power spectrum MSE and moments");
  auto* clt = verify->add_subcommand("clt", "d2 proxy, KS distance and fourth cumulant against bounds");
  auto* schoenberg = verify->add_subcommand("schoenberg", "covariance kernel expansion on [-1, 1]");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitPass : kExitUsage;
  }

  RunContext ctx;
  ctx.threads = o.threads;
  ctx.log = &out;
  try {
    const ExperimentConfig cfg = resolve_config(o);
    if (*selftest) {
      ctx.command = "selftest";
      return cmd_selftest(cfg, ctx);
    }
    if (*simulate) {
      ctx.command = "simulate";
      return cmd_simulate(cfg, ctx);
    }
    for (auto* sub : {ergodicity, clt, schoenberg}) {
      if (*sub) {
        ctx.command = "verify " + sub->get_name();
        return cmd_verify(cfg, sub->get_name(), ctx);
      }
    }
    err << "error: no command given\n";
    return kExitUsage;
  } catch (const ConfigError& e) {
    err << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const ResourceError& e) {
    err << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const IoError& e) {
    err << "i/o error: " << e.what() << "\n";
    return kExitIo;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "i/o error: " << e.what() << "\n";
    return kExitIo;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitCheckFailed;
  }
}

}  // namespace sphfield::cli
