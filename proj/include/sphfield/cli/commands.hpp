#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <ostream>
#include <string>
#include <system_error>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "sphfield/clt.hpp"
#include "sphfield/errors.hpp"
#include "sphfield/harmonics.hpp"
#include "sphfield/operators.hpp"
#include "sphfield/sampler.hpp"
#include "sphfield/spectral_model.hpp"
#include "sphfield/version.hpp"
#include "sphfield/cli/config.hpp"
#include "sphfield/cli/format.hpp"
#include "sphfield/cli/selftest.hpp"

namespace sphfield::cli {

inline constexpr int kExitPass = 0;
inline constexpr int kExitCheckFailed = 1;
inline constexpr int kExitIo = 2;
inline constexpr int kExitUsage = 64;
inline constexpr int kReportSchemaVersion = 1;

/// Everything a command needs besides the configuration itself.
struct RunContext {
  unsigned threads = 0;
  std::string command;
  std::ostream* log = nullptr;
};

/// Writes report files into one output directory. Each file is written to a
/// temporary name and renamed into place, so readers never see a partial file.
class ReportWriter {
 public:
  explicit ReportWriter(std::filesystem::path dir) : dir_(std::move(dir)) {
    std::error_code ec;
    std::filesystem::create_directories(dir_, ec);
    if (ec) throw IoError("cannot create output directory " + dir_.string() + ": " + ec.message());
  }

  void write(const std::string& name, const std::string& content) {
    const auto target = dir_ / name;
    const auto tmp = dir_ / (name + ".tmp");
    {
      std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
      if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
      out << content;
      out.close();
      if (!out) throw IoError("write to " + tmp.string() + " failed");
    }
    std::error_code ec;
    std::filesystem::rename(tmp, target, ec);
    if (ec) throw IoError("cannot move " + tmp.string() + " to " + target.string() + ": " + ec.message());
    written_.push_back(name);
  }

  const std::filesystem::path& directory() const { return dir_; }
  const std::vector<std::string>& written() const { return written_; }

 private:
  std::filesystem::path dir_;
  std::vector<std::string> written_;
};

namespace detail {

inline std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

inline json report_manifest(const ExperimentConfig& cfg, const std::string& command) {
  return {{"config_hash", config_hash(cfg)},
          {"version", kVersion},
          {"master_seed", cfg.mc.master_seed},
          {"command", command}};
}

// JSON has no NaN or infinity; those become null.
inline json number(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

inline std::string dump(const json& j) { return j.dump(2) + "\n"; }

inline json theoretical_json(const TheoreticalQuantities& t) {
  return {{"ell", t.ell},
          {"hs_norm_sq", number(t.hs_norm_sq)},
          {"trace_sq", number(t.trace_sq)},
          {"s4_norm4", number(t.s4_norm4)},
          {"theo_mse", number(t.mse)},
          {"fourth_moment", number(t.fourth_moment_a)},
          {"d2_bound_exact", number(t.d2_bound_exact)},
          {"d2_bound_simplified", number(t.d2_bound_simplified)},
          {"tv_bound", number(t.tv_bound)},
          {"cum4_theo", number(t.cum4_reduced)}};
}

inline json estimate_json(const Estimate& e) { return {{"value", number(e.value)}, {"se", number(e.se)}}; }

inline std::string cell_or_empty(double v) { return std::isfinite(v) ? cell(v) : ""; }

}  // namespace detail

/// Appends one entry to run_manifest.json in the output directory. This is
/// the only file that carries wall-clock time, so the reports themselves
/// stay byte-reproducible.
inline void append_run_manifest(ReportWriter& writer, const ExperimentConfig& cfg, const std::string& command,
                                const std::string& started, int exit_status) {
  const auto path = writer.directory() / "run_manifest.json";
  json runs = json::array();
  if (std::ifstream in(path); in) {
    try {
      const json existing = json::parse(in);
      if (existing.contains("runs") && existing["runs"].is_array()) runs = existing["runs"];
    } catch (const json::exception&) {
      // unreadable manifest: start a fresh history
    }
  }
  runs.push_back({{"command", command},
                  {"config_hash", config_hash(cfg)},
                  {"version", kVersion},
                  {"master_seed", cfg.mc.master_seed},
                  {"started_utc", started},
                  {"finished_utc", detail::utc_timestamp()},
                  {"exit_status", exit_status},
                  {"artifacts", writer.written()}});
  writer.write("run_manifest.json", detail::dump({{"schema_version", kReportSchemaVersion}, {"runs", runs}}));
}

// ---------------------------------------------------------------------------
// selftest
// ---------------------------------------------------------------------------

inline int cmd_selftest(const ExperimentConfig& cfg, const RunContext& ctx) {
  const std::string started = detail::utc_timestamp();
  ReportWriter writer(cfg.output.directory);
  const auto checks = run_selftest(cfg);
  bool all = true;
  json arr = json::array();
  CsvTable csv({"check", "observed", "tolerance", "pass"});
  for (const auto& c : checks) {
    all = all && c.pass;
    json row = {{"check", c.name},
                {"identity", c.identity},
                {"observed", detail::number(c.observed)},
                {"tolerance", c.tolerance},
                {"pass", c.pass}};
    if (!c.error.empty()) row["error"] = c.error;
    arr.push_back(row);
    csv.row({c.name, c.error.empty() ? detail::cell_or_empty(c.observed) : "", cell(c.tolerance), cell(c.pass)});
    if (ctx.log) {
      *ctx.log << (c.pass ? "PASS " : "FAIL ") << c.name << "  " << c.identity;
      if (c.error.empty()) {
        *ctx.log << "  error " << format_double(c.observed) << " (tol " << format_double(c.tolerance) << ")\n";
      } else {
        *ctx.log << "  threw: " << c.error << "\n";
      }
    }
  }
  if (cfg.wants("csv")) writer.write("selftest.csv", csv.str());
  if (cfg.wants("json")) {
    writer.write("selftest.json", detail::dump({{"schema_version", kReportSchemaVersion},
                                                {"manifest", detail::report_manifest(cfg, ctx.command)},
                                                {"checks", arr},
                                                {"pass", all}}));
  }
  const int code = all ? kExitPass : kExitCheckFailed;
  append_run_manifest(writer, cfg, ctx.command, started, code);
  return code;
}

// ---------------------------------------------------------------------------
// simulate
// ---------------------------------------------------------------------------

/// One row per grid node: node_index, theta, phi, v_1..v_d.
inline std::string realization_csv(const FieldRealization& field) {
  std::vector<std::string> header{"node_index", "theta", "phi"};
  for (Eigen::Index j = 1; j <= field.values.cols(); ++j) header.push_back("v_" + std::to_string(j));
  CsvTable csv(header);
  for (std::size_t i = 0; i < field.grid.size(); ++i) {
    std::vector<std::string> row{std::to_string(i), cell(field.grid.theta(i)), cell(field.grid.phi(i))};
    for (Eigen::Index j = 0; j < field.values.cols(); ++j) {
      row.push_back(cell(field.values(static_cast<Eigen::Index>(i), j)));
    }
    csv.row(std::move(row));
  }
  return csv.str();
}

inline int cmd_simulate(const ExperimentConfig& cfg, const RunContext& ctx) {
  const std::string started = detail::utc_timestamp();
  const SpectralModel model = build_model(cfg);
  ReportWriter writer(cfg.output.directory);
  const auto coeffs = draw_coefficients(model, cfg.mc.master_seed, 0, cfg.mc.sampler_lambda_scale);
  const auto field = synthesize_field(coeffs, SphericalGrid(model.band_limit()));
  writer.write("realization.csv", realization_csv(field));
  if (cfg.wants("json")) writer.write("model.json", detail::dump(model_to_json(model)));
  if (ctx.log) {
    *ctx.log << "wrote " << field.grid.size() << " nodes x " << model.dim() << " components to "
             << (writer.directory() / "realization.csv").string() << "\n";
  }
  append_run_manifest(writer, cfg, ctx.command, started, kExitPass);
  return kExitPass;
}

// ---------------------------------------------------------------------------
// verify ergodicity / clt
// ---------------------------------------------------------------------------

/// Theoretical and Monte Carlo results for every configured degree. Degrees
/// where F_l = 0 have no defined normalized statistic and are listed apart.
struct DegreeResults {
  std::vector<TheoreticalQuantities> theory;
  std::vector<MonteCarloReport> mc;
  std::vector<int> skipped;
};

inline DegreeResults run_degrees(const SpectralModel& model, const ExperimentConfig& cfg, unsigned threads) {
  DegreeResults out;
  std::vector<int> live;
  for (int ell : cfg.mc.ells) {
    if (model.degenerate(ell)) {
      out.skipped.push_back(ell);
      continue;
    }
    out.theory.push_back(theoretical(model, ell));
    live.push_back(ell);
  }
  if (!live.empty()) {
    McOptions opt;
    opt.replicates = cfg.mc.replicates;
    opt.master_seed = cfg.mc.master_seed;
    opt.threads = threads;
    opt.probes = cfg.mc.probes;
    opt.batches = cfg.mc.batches;
    opt.sampler_lambda_scale = cfg.mc.sampler_lambda_scale;
    if (opt.replicates < 100 || opt.replicates < opt.batches) {
      throw ConfigError("mc.replicates must be at least 100 and at least mc.batches");
    }
    out.mc = run_mc(model, live, opt);
  }
  return out;
}

inline bool ergodicity_pass(const MonteCarloReport& r) { return r.mse_pass && r.fourth_moment_pass; }

inline bool clt_pass(const MonteCarloReport& r) {
  return r.cum4_pass && r.ks_pass && r.d2_pass && r.scalar_variance_pass;
}

inline int write_ergodicity(const ExperimentConfig& cfg, const RunContext& ctx, const DegreeResults& res,
                            ReportWriter& writer) {
  CsvTable csv({"ell", "theo_mse", "emp_mse", "mc_se", "replicates", "pass"});
  json theory = json::array(), mc = json::array();
  bool all = true;
  Series theo{"theoretical", {}, {}, "#1f77b4", true}, emp{"empirical", {}, {}, "#d62728", true};
  for (std::size_t i = 0; i < res.mc.size(); ++i) {
    const auto& t = res.theory[i];
    const auto& r = res.mc[i];
    const bool pass = ergodicity_pass(r);
    all = all && pass;
    csv.row({cell(r.ell), cell(t.mse), cell(r.mse.value), cell(r.mse.se), cell(r.replicates), cell(pass)});
    theory.push_back(detail::theoretical_json(t));
    const double norm = t.hs_norm_sq + t.trace_sq;
    mc.push_back({{"ell", r.ell},
                  {"replicates", r.replicates},
                  {"emp_mse", detail::number(r.mse.value)},
                  {"mc_se", detail::number(r.mse.se)},
                  {"normalized_mse", detail::number(r.mse.value * (2.0 * r.ell + 1.0) / norm)},
                  {"emp_fourth_moment", detail::estimate_json(r.fourth_moment)},
                  {"mse_pass", r.mse_pass},
                  {"fourth_moment_pass", r.fourth_moment_pass},
                  {"pass", pass}});
    theo.x.push_back(r.ell + 1.0);
    theo.y.push_back(t.mse);
    emp.x.push_back(r.ell + 1.0);
    emp.y.push_back(r.mse.value);
    if (ctx.log) {
      *ctx.log << (pass ? "PASS " : "FAIL ") << "ergodicity l=" << r.ell << "  mse " << format_double(r.mse.value)
               << " +- " << format_double(r.mse.se) << " vs " << format_double(t.mse) << "\n";
    }
  }
  if (cfg.wants("csv")) writer.write("ergodicity.csv", csv.str());
  if (cfg.wants("json")) {
    writer.write("ergodicity.json", detail::dump({{"schema_version", kReportSchemaVersion},
                                                  {"manifest", detail::report_manifest(cfg, ctx.command)},
                                                  {"theoretical", theory},
                                                  {"montecarlo", mc},
                                                  {"skipped_ells", res.skipped},
                                                  {"pass", all}}));
  }
  if (cfg.wants("svg")) {
    writer.write("ergodicity.svg",
                 render_svg({"Mean squared error of the sample power spectrum", "l + 1", "E||F_hat - F||_2^2", true,
                             true},
                            {theo, emp}));
  }
  return all ? kExitPass : kExitCheckFailed;
}

inline int write_clt(const ExperimentConfig& cfg, const RunContext& ctx, const DegreeResults& res,
                     ReportWriter& writer) {
  CsvTable csv({"ell", "d2_bound_exact", "d2_bound_simplified", "d2_proxy", "tv_bound", "ks_emp", "cum4_theo",
                "cum4_emp", "cum4_se", "pass"});
  json theory = json::array(), mc = json::array();
  bool all = true;
  Series exact{"d2 bound (exact)", {}, {}, "#1f77b4", true}, simple{"d2 bound (simplified)", {}, {}, "#9467bd", true},
      proxy{"d2 proxy", {}, {}, "#d62728", true}, tv{"TV bound", {}, {}, "#2ca02c", true},
      ks{"KS distance", {}, {}, "#ff7f0e", true};
  for (std::size_t i = 0; i < res.mc.size(); ++i) {
    const auto& t = res.theory[i];
    const auto& r = res.mc[i];
    const bool pass = clt_pass(r);
    all = all && pass;
    csv.row({cell(r.ell), cell(t.d2_bound_exact), cell(t.d2_bound_simplified), cell(r.d2_proxy), cell(t.tv_bound),
             cell(r.ks_distance), cell(t.cum4_reduced), cell(r.cum4.value), cell(r.cum4.se), cell(pass)});
    theory.push_back(detail::theoretical_json(t));
    mc.push_back({{"ell", r.ell},
                  {"replicates", r.replicates},
                  {"d2_proxy", detail::number(r.d2_proxy)},
                  {"d2_proxy_se", detail::number(r.d2_proxy_se)},
                  {"ks_emp", detail::number(r.ks_distance)},
                  {"cum4_emp", detail::number(r.cum4.value)},
                  {"cum4_se", detail::number(r.cum4.se)},
                  {"scalar_variance", detail::estimate_json(r.scalar_variance)},
                  {"d2_pass", r.d2_pass},
                  {"ks_pass", r.ks_pass},
                  {"cum4_pass", r.cum4_pass},
                  {"scalar_variance_pass", r.scalar_variance_pass},
                  {"pass", pass}});
    const double x = r.ell + 1.0;
    for (auto* s : {&exact, &simple, &proxy, &tv, &ks}) s->x.push_back(x);
    exact.y.push_back(t.d2_bound_exact);
    simple.y.push_back(t.d2_bound_simplified);
    proxy.y.push_back(r.d2_proxy);
    tv.y.push_back(t.tv_bound);
    ks.y.push_back(r.ks_distance);
    if (ctx.log) {
      *ctx.log << (pass ? "PASS " : "FAIL ") << "clt l=" << r.ell << "  d2 proxy " << format_double(r.d2_proxy)
               << " <= " << format_double(t.d2_bound_exact) << ", ks " << format_double(r.ks_distance)
               << " <= " << format_double(t.tv_bound) << ", cum4 " << format_double(r.cum4.value) << " +- "
               << format_double(r.cum4.se) << " vs " << format_double(t.cum4_reduced) << "\n";
    }
  }
  if (cfg.wants("csv")) writer.write("clt.csv", csv.str());
  if (cfg.wants("json")) {
    writer.write("clt.json", detail::dump({{"schema_version", kReportSchemaVersion},
                                           {"manifest", detail::report_manifest(cfg, ctx.command)},
                                           {"theoretical", theory},
                                           {"montecarlo", mc},
                                           {"skipped_ells", res.skipped},
                                           {"pass", all}}));
  }
  if (cfg.wants("svg")) {
    writer.write("clt.svg", render_svg({"Distance to the Gaussian limit", "l + 1", "distance", true, true},
                                       {exact, simple, proxy, tv, ks}));
  }
  return all ? kExitPass : kExitCheckFailed;
}

// ---------------------------------------------------------------------------
// verify schoenberg
// ---------------------------------------------------------------------------

struct SchoenbergRow {
  double t = 0.0;
  double trace_rt = 0.0;
  double nuclear_rt = 0.0;
  double tail_bound = 0.0;
  double truncation_error = 0.0;  // ||R_t - R_t^trunc||_1
  double exactness_error = 0.0;   // ||R_t - harmonic sum||_1
  bool pass = false;
};

/// R_t summed directly over harmonics at x = north pole and a point y with
/// <x, y> = t, independent of the Legendre reconstruction.
inline Eigen::MatrixXd kernel_by_harmonics(const SpectralModel& model, double t) {
  const int L = model.band_limit();
  const Vec3 x(0.0, 0.0, 1.0);
  const Vec3 y(std::sqrt(std::max(0.0, 1.0 - t * t)), 0.0, t);
  const Eigen::VectorXd yx = sph_harm_all(L, x), yy = sph_harm_all(L, y);
  Eigen::MatrixXd r = Eigen::MatrixXd::Zero(model.dim(), model.dim());
  for (int l = 0; l <= L; ++l) {
    double s = 0.0;
    for (int m = -l; m <= l; ++m) s += yx[harmonic_offset(l, m)] * yy[harmonic_offset(l, m)];
    const Eigen::MatrixXd& e = model.frame(l);
    r += s * (e * model.eigenvalues(l).asDiagonal() * e.transpose());
  }
  return r;
}

inline std::vector<SchoenbergRow> schoenberg_rows(const SpectralModel& model, int l_trunc, int t_points) {
  constexpr double kExactnessTol = 1e-12;
  const double r1_nuclear = nuclear_norm(kernel_reconstruct(model, 1.0));
  const double scale = std::max(1.0, r1_nuclear);
  const double tail = schoenberg_tail_bound(model, l_trunc);
  std::vector<SchoenbergRow> rows;
  for (double t : t_grid(t_points)) {
    const OperatorOnH full = kernel_reconstruct(model, t);
    const OperatorOnH trunc = kernel_reconstruct(model, t, l_trunc);
    SchoenbergRow row;
    row.t = t;
    row.trace_rt = trace(full);
    row.nuclear_rt = nuclear_norm(full);
    row.tail_bound = tail;
    row.truncation_error = nuclear_norm(full - trunc);
    row.exactness_error = nuclear_norm(full - OperatorOnH(kernel_by_harmonics(model, t)));
    row.pass = row.exactness_error <= kExactnessTol * scale && row.truncation_error <= tail + 1e-12 * scale &&
               row.nuclear_rt <= r1_nuclear * (1.0 + 1e-12) + 1e-15;
    rows.push_back(row);
  }
  return rows;
}

inline int write_schoenberg(const ExperimentConfig& cfg, const RunContext& ctx, const SpectralModel& model,
                            ReportWriter& writer) {
  const int l_trunc = cfg.schoenberg.L_trunc >= 0 ? cfg.schoenberg.L_trunc : model.band_limit() / 2;
  const auto rows = schoenberg_rows(model, l_trunc, cfg.schoenberg.t_points);
  CsvTable csv({"t", "trace_Rt", "nuclear_Rt", "tail_bound", "pass"});
  json arr = json::array();
  bool all = true;
  Series tr{"Tr R_t", {}, {}, "#1f77b4"}, nuc{"||R_t||_1", {}, {}, "#d62728"}, r1{"||R_1||_1", {}, {}, "#7f7f7f"};
  const double r1_nuclear = rows.back().nuclear_rt;
  int failures = 0;
  for (const auto& r : rows) {
    all = all && r.pass;
    failures += r.pass ? 0 : 1;
    csv.row({cell(r.t), cell(r.trace_rt), cell(r.nuclear_rt), cell(r.tail_bound), cell(r.pass)});
    arr.push_back({{"t", r.t},
                   {"trace_Rt", detail::number(r.trace_rt)},
                   {"nuclear_Rt", detail::number(r.nuclear_rt)},
                   {"tail_bound", detail::number(r.tail_bound)},
                   {"truncation_error", detail::number(r.truncation_error)},
                   {"exactness_error", detail::number(r.exactness_error)},
                   {"pass", r.pass}});
    tr.x.push_back(r.t);
    tr.y.push_back(r.trace_rt);
    nuc.x.push_back(r.t);
    nuc.y.push_back(r.nuclear_rt);
    r1.x.push_back(r.t);
    r1.y.push_back(r1_nuclear);
  }
  if (ctx.log) {
    *ctx.log << (all ? "PASS " : "FAIL ") << "schoenberg: " << rows.size() << " points, L_trunc " << l_trunc
             << ", tail bound " << format_double(rows.front().tail_bound) << ", " << failures << " failing\n";
  }
  if (cfg.wants("csv")) writer.write("schoenberg.csv", csv.str());
  if (cfg.wants("json")) {
    writer.write("schoenberg.json",
                 detail::dump({{"schema_version", kReportSchemaVersion},
                               {"manifest", detail::report_manifest(cfg, ctx.command)},
                               {"L_trunc", l_trunc},
                               {"field_variance", detail::number(r1_nuclear)},
                               {"theoretical", arr},
                               {"montecarlo", json::array()},
                               {"pass", all}}));
  }
  if (cfg.wants("svg")) {
    writer.write("schoenberg.svg",
                 render_svg({"Covariance kernel along <x, y> = t", "t", "norm", false, false}, {tr, nuc, r1}));
  }
  return all ? kExitPass : kExitCheckFailed;
}

/// which: "ergodicity", "clt" or "schoenberg".
inline int cmd_verify(const ExperimentConfig& cfg, const std::string& which, const RunContext& ctx) {
  const std::string started = detail::utc_timestamp();
  const SpectralModel model = build_model(cfg);
  ReportWriter writer(cfg.output.directory);
  int code = kExitPass;
  if (which == "schoenberg") {
    code = write_schoenberg(cfg, ctx, model, writer);
  } else if (which == "ergodicity" || which == "clt") {
    validate_ells(cfg);
    const auto res = run_degrees(model, cfg, ctx.threads);
    if (ctx.log) {
      for (int ell : res.skipped) *ctx.log << "SKIP l=" << ell << ": F_l = 0, statistic undefined\n";
    }
    code = which == "clt" ? write_clt(cfg, ctx, res, writer) : write_ergodicity(cfg, ctx, res, writer);
  } else {
    throw ConfigError("unknown verify target '" + which + "'");
  }
  append_run_manifest(writer, cfg, ctx.command, started, code);
  return code;
}

}  // namespace sphfield::cli
