#pragma once

#include <cstdint>
#include <fstream>
#include <initializer_list>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>
#include <openssl/evp.h>

#include "sphfield/spectral_model.hpp"

namespace sphfield::cli {

using json = nlohmann::json;

/// Malformed configuration or flags (exit code 64).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// File system failure (exit code 2).
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ModelConfig {
  int L_max = 64;
  int d = 6;
  double A = 1.0;
  double alpha = 3.0;
  double beta = 2.0;
  FrameMode frame_mode = FrameMode::canonical;
  std::uint64_t frame_seed = 0;
  std::optional<Eigen::MatrixXd> lambda_table;  // rows l = 0..L_max, columns j = 1..d
};

struct McConfig {
  int replicates = 20000;
  std::uint64_t master_seed = 0;
  std::vector<int> ells{4, 16, 64};
  int probes = 16;
  int batches = 100;
  double sampler_lambda_scale = 1.0;
};

struct SchoenbergConfig {
  int L_trunc = -1;  // -1: L_max / 2
  int t_points = 201;
};

struct OutputConfig {
  std::string directory = "sphfield-out";
  std::vector<std::string> formats{"csv", "json"};
};

struct SelftestConfig {
  int grid_band_deficit = 0;
  int max_degree = 64;
  int pairs = 100;
  int random_cases = 1000;
};

struct ExperimentConfig {
  ModelConfig model;
  McConfig mc;
  SchoenbergConfig schoenberg;
  OutputConfig output;
  SelftestConfig selftest;

  bool wants(const std::string& format) const {
    for (const auto& f : output.formats)
      if (f == format) return true;
    return false;
  }
};

namespace detail {

inline void require_keys(const json& obj, const std::string& where, std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) throw ConfigError(where + ": expected an object");
  const std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [key, _] : obj.items()) {
    if (!ok.count(key)) throw ConfigError("unknown config key '" + (where.empty() ? key : where + "." + key) + "'");
  }
}

template <class T>
void read(const json& obj, const char* key, const std::string& where, T& out) {
  if (!obj.contains(key)) return;
  try {
    out = obj.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(where + "." + key + ": " + e.what());
  }
}

inline void read_seed(const json& obj, const char* key, const std::string& where, std::uint64_t& out) {
  if (!obj.contains(key)) return;
  const auto& v = obj.at(key);
  if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0)) {
    throw ConfigError(where + "." + key + ": expected a nonnegative integer");
  }
  out = v.get<std::uint64_t>();
}

inline std::string frame_mode_name(FrameMode m) {
  return m == FrameMode::canonical ? "canonical" : "random_orthogonal";
}

}  // namespace detail

inline std::vector<std::string> parse_formats(const std::vector<std::string>& formats) {
  for (const auto& f : formats) {
    if (f != "csv" && f != "json" && f != "svg") throw ConfigError("unknown output format '" + f + "'");
  }
  return formats;
}

inline int configured_band_limit(const ExperimentConfig& c) {
  return c.model.lambda_table ? static_cast<int>(c.model.lambda_table->rows()) - 1 : c.model.L_max;
}

/// mc.ells must be non-empty and lie in [0, L_max]. Only the Monte Carlo
/// commands read them, so this is separate from validate().
inline void validate_ells(const ExperimentConfig& c) {
  const int L = configured_band_limit(c);
  if (c.mc.ells.empty()) throw ConfigError("mc.ells must not be empty");
  for (int ell : c.mc.ells) {
    if (ell < 0 || ell > L) {
      throw ConfigError("degree " + std::to_string(ell) + " outside [0, " + std::to_string(L) + "]");
    }
  }
}

/// Checks cross-field constraints.
inline void validate(const ExperimentConfig& c) {
  const auto& m = c.model;
  if (m.lambda_table) {
    if (m.lambda_table->rows() < 1 || m.lambda_table->cols() < 1) throw ConfigError("model.lambda_table: empty");
  } else {
    if (m.L_max < 0) throw ConfigError("model.L_max must be >= 0");
    if (m.L_max > kMaxBandLimit) throw ConfigError("model.L_max exceeds " + std::to_string(kMaxBandLimit));
    if (m.d < 1) throw ConfigError("model.d must be >= 1");
    if (!(m.A > 0.0)) throw ConfigError("model.A must be positive");
    if (!(m.alpha > 2.0)) throw ConfigError("model.alpha must exceed 2");
    if (!(m.beta > 1.0)) throw ConfigError("model.beta must exceed 1");
  }
  const int L = configured_band_limit(c);
  if (c.mc.probes < 1) throw ConfigError("mc.probes must be >= 1");
  if (c.mc.batches < 2) throw ConfigError("mc.batches must be >= 2");
  if (!(c.mc.sampler_lambda_scale > 0.0)) throw ConfigError("mc.sampler_lambda_scale must be positive");
  if (c.schoenberg.t_points < 2) throw ConfigError("schoenberg.t_points must be >= 2");
  if (c.schoenberg.L_trunc < -1 || c.schoenberg.L_trunc > L) throw ConfigError("schoenberg.L_trunc outside [0, L_max]");
  if (c.selftest.grid_band_deficit < 0) throw ConfigError("selftest.grid_band_deficit must be >= 0");
  if (c.selftest.max_degree < 0 || c.selftest.pairs < 1 || c.selftest.random_cases < 1) {
    throw ConfigError("selftest: sizes must be positive");
  }
  parse_formats(c.output.formats);
  if (c.output.directory.empty()) throw ConfigError("output.directory must not be empty");
}

inline ExperimentConfig config_from_json(const json& root) {
  ExperimentConfig c;
  detail::require_keys(root, "", {"model", "mc", "schoenberg", "output", "selftest"});
  if (root.contains("model")) {
    const auto& m = root.at("model");
    detail::require_keys(m, "model", {"L_max", "d", "A", "alpha", "beta", "frame_mode", "frame_seed", "lambda_table"});
    detail::read(m, "L_max", "model", c.model.L_max);
    detail::read(m, "d", "model", c.model.d);
    detail::read(m, "A", "model", c.model.A);
    detail::read(m, "alpha", "model", c.model.alpha);
    detail::read(m, "beta", "model", c.model.beta);
    detail::read_seed(m, "frame_seed", "model", c.model.frame_seed);
    std::string mode = detail::frame_mode_name(c.model.frame_mode);
    detail::read(m, "frame_mode", "model", mode);
    if (mode == "canonical") {
      c.model.frame_mode = FrameMode::canonical;
    } else if (mode == "random_orthogonal") {
      c.model.frame_mode = FrameMode::random_orthogonal;
    } else {
      throw ConfigError("model.frame_mode: expected 'canonical' or 'random_orthogonal'");
    }
    if (m.contains("lambda_table")) {
      for (const char* k : {"A", "alpha", "beta"}) {
        if (m.contains(k)) throw ConfigError(std::string("model.") + k + " conflicts with model.lambda_table");
      }
      std::vector<std::vector<double>> rows;
      detail::read(m, "lambda_table", "model", rows);
      if (rows.empty() || rows[0].empty()) throw ConfigError("model.lambda_table: empty");
      Eigen::MatrixXd t(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows[0].size()));
      for (std::size_t l = 0; l < rows.size(); ++l) {
        if (rows[l].size() != rows[0].size()) throw ConfigError("model.lambda_table: ragged rows");
        for (std::size_t j = 0; j < rows[l].size(); ++j) {
          if (!(rows[l][j] >= 0.0)) throw ConfigError("model.lambda_table: entries must be nonnegative");
          t(static_cast<Eigen::Index>(l), static_cast<Eigen::Index>(j)) = rows[l][j];
        }
      }
      if (m.contains("L_max") && c.model.L_max != t.rows() - 1) {
        throw ConfigError("model.L_max disagrees with model.lambda_table");
      }
      if (m.contains("d") && c.model.d != t.cols()) throw ConfigError("model.d disagrees with model.lambda_table");
      c.model.L_max = static_cast<int>(t.rows()) - 1;
      c.model.d = static_cast<int>(t.cols());
      c.model.lambda_table = std::move(t);
    }
  }
  if (root.contains("mc")) {
    const auto& m = root.at("mc");
    detail::require_keys(m, "mc", {"replicates", "master_seed", "ells", "probes", "batches", "sampler_lambda_scale"});
    detail::read(m, "replicates", "mc", c.mc.replicates);
    detail::read_seed(m, "master_seed", "mc", c.mc.master_seed);
    detail::read(m, "ells", "mc", c.mc.ells);
    detail::read(m, "probes", "mc", c.mc.probes);
    detail::read(m, "batches", "mc", c.mc.batches);
    detail::read(m, "sampler_lambda_scale", "mc", c.mc.sampler_lambda_scale);
  }
  if (root.contains("schoenberg")) {
    const auto& s = root.at("schoenberg");
    detail::require_keys(s, "schoenberg", {"L_trunc", "t_points"});
    detail::read(s, "L_trunc", "schoenberg", c.schoenberg.L_trunc);
    detail::read(s, "t_points", "schoenberg", c.schoenberg.t_points);
  }
  if (root.contains("output")) {
    const auto& o = root.at("output");
    detail::require_keys(o, "output", {"directory", "formats"});
    detail::read(o, "directory", "output", c.output.directory);
    detail::read(o, "formats", "output", c.output.formats);
  }
  if (root.contains("selftest")) {
    const auto& s = root.at("selftest");
    detail::require_keys(s, "selftest", {"grid_band_deficit", "max_degree", "pairs", "random_cases"});
    detail::read(s, "grid_band_deficit", "selftest", c.selftest.grid_band_deficit);
    detail::read(s, "max_degree", "selftest", c.selftest.max_degree);
    detail::read(s, "pairs", "selftest", c.selftest.pairs);
    detail::read(s, "random_cases", "selftest", c.selftest.random_cases);
  }
  return c;
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  json root;
  try {
    root = json::parse(in, nullptr, true, /*ignore_comments=*/true);
  } catch (const json::parse_error& e) {
    throw ConfigError("config '" + path + "': " + e.what());
  }
  return config_from_json(root);
}

/// Effective configuration as JSON; keys come out sorted, so the dump is
/// canonical.
inline json config_to_json(const ExperimentConfig& c) {
  json model{{"L_max", c.model.L_max},
             {"d", c.model.d},
             {"frame_mode", detail::frame_mode_name(c.model.frame_mode)},
             {"frame_seed", c.model.frame_seed}};
  if (c.model.lambda_table) {
    json rows = json::array();
    for (Eigen::Index l = 0; l < c.model.lambda_table->rows(); ++l) {
      json row = json::array();
      for (Eigen::Index j = 0; j < c.model.lambda_table->cols(); ++j) row.push_back((*c.model.lambda_table)(l, j));
      rows.push_back(row);
    }
    model["lambda_table"] = rows;
  } else {
    model["A"] = c.model.A;
    model["alpha"] = c.model.alpha;
    model["beta"] = c.model.beta;
  }
  return {{"model", model},
          {"mc",
           {{"replicates", c.mc.replicates},
            {"master_seed", c.mc.master_seed},
            {"ells", c.mc.ells},
            {"probes", c.mc.probes},
            {"batches", c.mc.batches},
            {"sampler_lambda_scale", c.mc.sampler_lambda_scale}}},
          {"schoenberg", {{"L_trunc", c.schoenberg.L_trunc}, {"t_points", c.schoenberg.t_points}}},
          {"output", {{"directory", c.output.directory}, {"formats", c.output.formats}}},
          {"selftest",
           {{"grid_band_deficit", c.selftest.grid_band_deficit},
            {"max_degree", c.selftest.max_degree},
            {"pairs", c.selftest.pairs},
            {"random_cases", c.selftest.random_cases}}}};
}

inline std::string sha256_hex(const std::string& data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("sha256 failed");
  }
  static constexpr char hex[] = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[digest[i] >> 4];
    out += hex[digest[i] & 15];
  }
  return out;
}

/// Hash of everything that affects results. The output block is left out so
/// that the same experiment written to two directories hashes the same.
inline std::string config_hash(const ExperimentConfig& c) {
  json j = config_to_json(c);
  j.erase("output");
  return sha256_hex(j.dump());
}

inline SpectralModel build_model(const ExperimentConfig& c) {
  const FrameSpec frames{c.model.frame_mode, c.model.frame_seed};
  if (c.model.lambda_table) return SpectralModel::from_table(*c.model.lambda_table, frames);
  return make_powerlaw_model(c.model.L_max, c.model.d, c.model.A, c.model.alpha, c.model.beta, frames);
}

/// Canonical export: eigenvalue table plus every frame, rows of e_{j;l} as
/// columns of the stored matrix.
inline json model_to_json(const SpectralModel& model) {
  json lambda = json::array(), frames = json::array();
  for (int l = 0; l <= model.band_limit(); ++l) {
    json row = json::array();
    for (int j = 1; j <= model.dim(); ++j) row.push_back(model.lambda(j, l));
    lambda.push_back(row);
    json frame = json::array();
    for (int j = 0; j < model.dim(); ++j) {
      json col = json::array();
      for (int i = 0; i < model.dim(); ++i) col.push_back(model.frame(l)(i, j));
      frame.push_back(col);
    }
    frames.push_back(frame);
  }
  return {{"L_max", model.band_limit()},
          {"d", model.dim()},
          {"basis", model.space().labels()},
          {"lambda", lambda},
          {"eigenvectors", frames}};
}

/// Inverse of model_to_json.
inline SpectralModel model_from_json(const json& j) {
  try {
    const int L = j.at("L_max").get<int>();
    const int d = j.at("d").get<int>();
    Eigen::MatrixXd lambda(L + 1, d);
    std::vector<Eigen::MatrixXd> frames;
    for (int l = 0; l <= L; ++l) {
      Eigen::MatrixXd f(d, d);
      for (int k = 0; k < d; ++k) {
        lambda(l, k) = j.at("lambda").at(l).at(k).get<double>();
        for (int i = 0; i < d; ++i) f(i, k) = j.at("eigenvectors").at(l).at(k).at(i).get<double>();
      }
      frames.push_back(std::move(f));
    }
    return SpectralModel(std::move(lambda), std::move(frames), TruncatedSpace::shifted_legendre(d));
  } catch (const json::exception& e) {
    throw ConfigError(std::string("model export: ") + e.what());
  }
}

}  // namespace sphfield::cli
