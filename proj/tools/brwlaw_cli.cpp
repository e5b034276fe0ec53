// brwlaw: command-line access to the law of W, its moments, the simulator
// and the acceptance suite.

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "brwlaw/brwlaw.hpp"

namespace {

using nlohmann::ordered_json;
using namespace brwlaw;

constexpr int kExitChecksFailed = 1;
constexpr int kExitUsage = 2;

struct Options {
  double alpha = 1.0;
  std::size_t samples = 100'000;
  int generations = 12;
  double trunc_T = 25.0;
  double prune_eps = 1e-3;
  std::uint64_t seed = 0;
  std::string mode = "conditional";
  std::string format;
  std::string out;
  unsigned threads = 0;

  // constants
  double abs_tol = 1e-10;
  // mgf / laplace grids
  std::vector<double> r_values;
  double r_min = 0.0;
  double r_max = 0.0;
  std::size_t points = 0;
  bool log_grid = false;
  // moments
  std::size_t K = 10;
  // simulate
  std::string kind = "W";
  double tilt = 1.0;
  double theta = 1.0;
  double t_slice = 1.0;
  double split_s = 1.0;
  bool record_depths = false;
  bool couple_w = false;
  double bias_budget = 1e-4;
  // verify
  bool slow_suite = false;
  std::vector<int> only;
};

ModelParams model_params(const Options& o) {
  ModelParams p;
  p.alpha = o.alpha;
  p.trunc_T = o.trunc_T;
  p.prune_eps = o.prune_eps;
  p.n_generations = o.generations;
  p.seed = o.seed;
  p.mode = parse_prune_mode(o.mode);
  p.bias_budget = o.bias_budget;
  return p;
}

/// Where output goes: --out, else $BRWLAW_OUTPUT_DIR/<default_name>, else
/// stdout. Relative --out paths are taken inside $BRWLAW_OUTPUT_DIR when set.
class Sink {
 public:
  Sink(const std::string& out, const std::string& default_name, bool binary) {
    const char* dir = std::getenv("BRWLAW_OUTPUT_DIR");
    std::filesystem::path path;
    if (!out.empty() && out != "-") {
      path = out;
      if (dir && *dir && path.is_relative()) path = std::filesystem::path(dir) / path;
    } else if (out.empty() && dir && *dir) {
      path = std::filesystem::path(dir) / default_name;
    }
    if (path.empty()) return;
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    file_ = std::make_unique<std::ofstream>(path, binary ? std::ios::binary : std::ios::out);
    if (!*file_) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
    path_ = path.string();
  }

  std::ostream& stream() { return file_ ? *file_ : std::cout; }

  void finish() {
    stream().flush();
    if (file_) std::cerr << "wrote " << path_ << '\n';
  }

 private:
  std::unique_ptr<std::ofstream> file_;
  std::string path_;
};

ordered_json model_config(const Options& o) {
  ordered_json j;
  j["alpha"] = o.alpha;
  j["samples"] = o.samples;
  j["generations"] = o.generations;
  j["trunc_T"] = o.trunc_T;
  j["prune_eps"] = o.prune_eps;
  j["seed"] = o.seed;
  j["mode"] = o.mode;
  j["bias_budget"] = o.bias_budget;
  return j;
}

std::string format_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

/// Evaluation points: --r values if given, else a linear or logarithmic grid.
std::vector<double> grid(const Options& o, double lo, double hi, std::size_t n, bool log_default) {
  if (!o.r_values.empty()) return o.r_values;
  lo = o.r_min > 0.0 ? o.r_min : lo;
  hi = o.r_max > 0.0 ? o.r_max : hi;
  n = o.points > 0 ? o.points : n;
  const bool log_grid = o.log_grid || log_default;
  if (!(lo < hi)) throw DomainError("grid: need r-min < r-max");
  if (n < 2) throw DomainError("grid: need at least two points");
  if (log_grid && !(lo > 0.0)) throw DomainError("grid: a logarithmic grid needs r-min > 0");
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double f = static_cast<double>(i) / static_cast<double>(n - 1);
    out[i] = log_grid ? lo * std::pow(hi / lo, f) : lo + (hi - lo) * f;
  }
  return out;
}

/// Writes rows as CSV (with a run_config comment line) or as JSON.
void write_table(Sink& sink, const std::string& format, const ordered_json& run_config,
                 const std::vector<std::string>& columns,
                 const std::vector<std::vector<double>>& rows) {
  auto& out = sink.stream();
  if (format == "json") {
    ordered_json j;
    j["schema_version"] = kReportSchemaVersion;
    j["run_config"] = run_config;
    j["columns"] = columns;
    auto& data = j["rows"] = ordered_json::array();
    for (const auto& row : rows) {
      ordered_json r = ordered_json::array();
      for (double v : row) {
        if (std::isfinite(v)) r.push_back(v);
        else r.push_back(nullptr);
      }
      data.push_back(r);
    }
    out << j.dump(2) << '\n';
  } else {
    out << "# brwlaw run_config=" << run_config.dump() << '\n';
    for (std::size_t i = 0; i < columns.size(); ++i) out << (i ? "," : "") << columns[i];
    out << '\n';
    for (const auto& row : rows) {
      for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << format_number(row[i]);
      out << '\n';
    }
  }
  sink.finish();
}

int run_constants(const Options& o, const ordered_json& config) {
  if (!(o.abs_tol > 0.0) || o.abs_tol > 1e-3) throw DomainError("--abs-tol must lie in (0, 1e-3]");
  QuadratureSpec first;
  first.abs_tol = first.rel_tol = o.abs_tol;
  QuadratureSpec second;
  second.abs_tol = second.rel_tol = o.abs_tol / 100.0;
  const LawTables a(first);
  const LawTables b(second);
  const auto detailed = integrate_adaptive_detailed(
      [](double u) { return detail::h_integrand_regular(u); }, 0.0, 1.0, first);
  const double agreement = std::abs(a.r_star() - b.r_star());
  const int digits = std::max(1, static_cast<int>(std::ceil(-std::log10(o.abs_tol))));
  Sink sink(o.out, "constants.json", false);
  auto& out = sink.stream();
  if (o.format == "json") {
    ordered_json j;
    j["schema_version"] = kReportSchemaVersion;
    j["run_config"] = config;
    j["r_star"] = a.r_star();
    j["log_r_star"] = a.log_r_star();
    j["H_1"] = a.h_one();
    j["r_star_tighter"] = b.r_star();
    j["tighter_abs_tol"] = second.abs_tol;
    j["agreement"] = agreement;
    j["regular_part_error_estimate"] = detailed.error;
    j["regular_part_subdivisions"] = detailed.subdivisions;
    out << j.dump(2) << '\n';
  } else {
    char line[128];
    std::snprintf(line, sizeof line, "r*          = %.*f\n", digits, a.r_star());
    out << line;
    std::snprintf(line, sizeof line, "log r*      = %.*f\n", digits, a.log_r_star());
    out << line;
    std::snprintf(line, sizeof line, "H(1)        = %.*f\n", digits, a.h_one());
    out << line;
    std::snprintf(line, sizeof line, "r* (tol %.0e) = %.*f\n", second.abs_tol, digits, b.r_star());
    out << line;
    std::snprintf(line, sizeof line, "agreement   = %.3e (%s)\n", agreement,
                  agreement <= o.abs_tol ? "within tolerance" : "OUTSIDE tolerance");
    out << line;
    std::snprintf(line, sizeof line, "quadrature  : error estimate %.3e, %zu subdivisions on (0, 1)\n",
                  detailed.error, detailed.subdivisions);
    out << line;
  }
  sink.finish();
  return agreement <= o.abs_tol ? 0 : kExitChecksFailed;
}

int run_mgf(const Options& o, const ordered_json& config) {
  const auto& tables = default_law_tables();
  const auto moments = build_moment_table(1.0, 40);
  const double r_star = tables.r_star();
  const auto rs = grid(o, 0.05 * r_star, 0.95 * r_star, 19, false);
  std::vector<std::vector<double>> rows;
  for (double r : rs) {
    const double phi = mgf(r, tables);
    double series = std::numeric_limits<double>::quiet_NaN();
    if (r < 0.5 * r_star) series = mgf_series(r, moments).value;
    rows.push_back({r, phi, std::log(phi), series});
  }
  Sink sink(o.out, o.format == "json" ? "mgf.json" : "mgf.csv", false);
  write_table(sink, o.format, config, {"r", "mgf", "cgf", "series_K40"}, rows);
  return 0;
}

int run_laplace(const Options& o, const ordered_json& config) {
  const auto& tables = default_law_tables();
  const auto moments = build_moment_table(1.0, 40);
  const auto rs = grid(o, 0.01, 1e8, 21, true);
  std::vector<std::vector<double>> rows;
  for (double r : rs) {
    const double log_l = laplace_log(r, moments, tables);
    const double ratio =
        r > 1.0 ? -log_l / left_tail_asymptote(1.0 / r) : std::numeric_limits<double>::quiet_NaN();
    rows.push_back({r, std::exp(log_l), log_l, ratio});
  }
  Sink sink(o.out, o.format == "json" ? "laplace.json" : "laplace.csv", false);
  write_table(sink, o.format, config, {"r", "laplace", "log_laplace", "left_ratio"}, rows);
  return 0;
}

int run_moments(const Options& o, const ordered_json& config) {
  const auto table = build_moment_table(o.alpha, o.K);
  std::vector<std::vector<double>> rows;
  for (std::size_t k = 1; k <= table.K; ++k) {
    rows.push_back({static_cast<double>(k), table.moment(k), table.coefficient(k),
                    table.cumulant(k)});
  }
  Sink sink(o.out, o.format == "json" ? "moments.json" : "moments.csv", false);
  write_table(sink, o.format, config, {"k", "mu_k", "c_k", "kappa_k"}, rows);
  return 0;
}

int run_simulate(const Options& o, const ordered_json& config) {
  const ModelParams params = model_params(o);
  const SampleKind kind = parse_sample_kind(o.kind);
  BatchOptions opts;
  opts.threads = o.threads;
  opts.tilt = o.tilt;
  opts.theta = o.theta;
  opts.t_slice = o.t_slice;
  opts.split_s = o.split_s;
  opts.record_depths = o.record_depths;
  opts.couple_w = o.couple_w;
  SampleBatch batch;
  if (kind == SampleKind::SelfDecompLHS || kind == SampleKind::SelfDecompRHS) {
    auto pair = run_selfdecomp_batches(params, o.samples, opts);
    batch = kind == SampleKind::SelfDecompLHS ? std::move(pair.first) : std::move(pair.second);
  } else {
    batch = run_batch(kind, params, o.samples, opts);
  }
  const BatchFormat format = parse_batch_format(o.format.empty() ? "csv" : o.format);
  const char* ext = format == BatchFormat::csv ? "csv" : format == BatchFormat::json ? "json" : "bin";
  Sink sink(o.out, "simulate_" + o.kind + "." + ext, format == BatchFormat::binary);
  if (format == BatchFormat::json) {
    auto j = batch_to_json(batch);
    ordered_json wrapped;
    wrapped["schema_version"] = kReportSchemaVersion;
    wrapped["run_config"] = config;
    wrapped["batch"] = j;
    sink.stream() << wrapped.dump(2) << '\n';
  } else if (format == BatchFormat::binary) {
    write_batch_binary(sink.stream(), batch);
  } else {
    write_batch_csv(sink.stream(), batch, "brwlaw run_config=" + config.dump());
  }
  sink.finish();
  return 0;
}

int run_verify(const Options& o, const ordered_json& config) {
  VerifyConfig vc;
  vc.samples = o.samples;
  vc.params = model_params(o);
  vc.slow_suite = o.slow_suite;
  vc.only.insert(o.only.begin(), o.only.end());
  vc.threads = o.threads;
  VerificationSuite suite(vc);
  const auto report = suite.run([](const CriterionResult& r, const std::vector<Check>&) {
    if (!r.ran) return;
    std::fprintf(stderr, "criterion %2d %-4s %s\n", r.criterion, r.pass ? "PASS" : "FAIL",
                 r.title.c_str());
  });
  Sink sink(o.out, "verify.json", false);
  sink.stream() << report_to_json(report, config).dump(2) << '\n';
  sink.finish();
  return report.all_pass() ? 0 : kExitChecksFailed;
}

void add_model_options(CLI::App* cmd, Options& o) {
  cmd->add_option("--alpha", o.alpha, "Stability index alpha > 0")->capture_default_str();
  cmd->add_option("--samples", o.samples, "Number of samples")->capture_default_str();
  cmd->add_option("--generations", o.generations, "Generations to reveal")->capture_default_str();
  cmd->add_option("--trunc-T", o.trunc_T, "Truncation level T on t' + x'")->capture_default_str();
  cmd->add_option("--prune-eps", o.prune_eps, "Atoms with normalized weight below this are not revealed")
      ->capture_default_str();
  cmd->add_option("--seed", o.seed, "Master seed")->capture_default_str();
  cmd->add_option("--mode", o.mode, "Unrevealed mass: conditional (add its mean) or drop")
      ->check(CLI::IsMember({"conditional", "drop"}))
      ->capture_default_str();
  cmd->add_option("--bias-budget", o.bias_budget, "Allowed discarded mass per sample (drop mode)")
      ->capture_default_str();
  cmd->add_option("--threads", o.threads, "Worker threads (0: hardware concurrency)")
      ->capture_default_str();
}

void add_grid_options(CLI::App* cmd, Options& o) {
  cmd->add_option("--r", o.r_values, "Explicit evaluation points");
  cmd->add_option("--r-min", o.r_min, "Grid start");
  cmd->add_option("--r-max", o.r_max, "Grid end");
  cmd->add_option("--points", o.points, "Grid size");
  cmd->add_flag("--log-grid", o.log_grid, "Logarithmic grid");
}

/// The subcommands share Options::format; an unset format is filled in with
/// the subcommand's own default after parsing.
void add_output_options(CLI::App* cmd, Options& o, std::vector<std::string> formats,
                        const std::string& fallback) {
  cmd->add_option("--format", o.format, "Output format")
      ->check(CLI::IsMember(formats))
      ->default_str(fallback);
  cmd->add_option("--out", o.out,
                  "Output file ('-' for stdout); default $BRWLAW_OUTPUT_DIR/<command>.<ext> or stdout");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Terminal value W of the branching-stable random walk: law, moments, simulation "
               "and verification"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "brwlaw 1.0");
  Options o;

  auto* constants = app.add_subcommand("constants", "Print r*, log r*, H(1) and quadrature diagnostics");
  constants->add_option("--abs-tol", o.abs_tol, "Quadrature tolerance; r* printed to matching digits")
      ->capture_default_str();
  add_output_options(constants, o, {"text", "json"}, "text");

  auto* mgf_cmd = app.add_subcommand("mgf", "Tabulate E e^{rW} on (0, r*) (alpha = 1)");
  add_grid_options(mgf_cmd, o);
  add_output_options(mgf_cmd, o, {"csv", "json"}, "csv");

  auto* laplace_cmd = app.add_subcommand("laplace", "Tabulate E e^{-rW} (alpha = 1)");
  add_grid_options(laplace_cmd, o);
  add_output_options(laplace_cmd, o, {"csv", "json"}, "csv");

  auto* moments_cmd = app.add_subcommand("moments", "Moment table mu_k, c_k, kappa_k");
  moments_cmd->add_option("--alpha", o.alpha, "Stability index alpha > 0")->capture_default_str();
  moments_cmd->add_option("-K", o.K, "Number of moments")->capture_default_str();
  add_output_options(moments_cmd, o, {"csv", "json"}, "csv");

  auto* simulate = app.add_subcommand("simulate", "Simulate a sample batch");
  add_model_options(simulate, o);
  simulate->add_option("--kind", o.kind, "W, W1, Yule, Vt, SelfDecompLHS or SelfDecompRHS")
      ->check(CLI::IsMember({"W", "W1", "Yule", "Vt", "SelfDecompLHS", "SelfDecompRHS"}))
      ->capture_default_str();
  simulate->add_option("--tilt", o.tilt, "Tilt c of the weights e^{-ct - x/c} (W)")->capture_default_str();
  simulate->add_option("--theta", o.theta, "theta for V_t")->capture_default_str();
  simulate->add_option("--t-slice", o.t_slice, "Time t for V_t")->capture_default_str();
  simulate->add_option("--s", o.split_s, "Split point s of the self-decomposition")->capture_default_str();
  simulate->add_flag("--record-depths", o.record_depths, "Keep per-depth values of W_n (W)");
  simulate->add_flag("--couple-w", o.couple_w, "Also record W on the same tree (Vt)");
  add_output_options(simulate, o, {"csv", "json", "bin"}, "csv");

  auto* verify = app.add_subcommand("verify", "Run the acceptance suite and write a JSON report");
  add_model_options(verify, o);
  verify->get_option("--samples")->default_val(1'000'000)->description(
      "Main W batch size; other batch sizes scale with it");
  verify->add_flag("--slow-suite", o.slow_suite, "Include the slow left-tail criterion");
  verify->add_option("--only", o.only, "Run only these criteria (1-15)")->delimiter(',');
  add_output_options(verify, o, {"json"}, "json");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  ordered_json config;
  std::string command;
  for (auto* sub : app.get_subcommands()) command = sub->get_name();
  if (o.format.empty()) {
    o.format = command == "constants" ? "text" : (command == "verify" ? "json" : "csv");
  }
  config["command"] = command;
  try {
    if (command == "constants") {
      config["abs_tol"] = o.abs_tol;
      config["format"] = o.format;
      return run_constants(o, config);
    }
    if (command == "mgf" || command == "laplace") {
      config["r"] = o.r_values;
      config["r_min"] = o.r_min;
      config["r_max"] = o.r_max;
      config["points"] = o.points;
      config["log_grid"] = o.log_grid;
      config["format"] = o.format;
      return command == "mgf" ? run_mgf(o, config) : run_laplace(o, config);
    }
    if (command == "moments") {
      config["alpha"] = o.alpha;
      config["K"] = o.K;
      config["format"] = o.format;
      return run_moments(o, config);
    }
    config.update(model_config(o));
    config["format"] = o.format;
    if (command == "simulate") {
      config["kind"] = o.kind;
      config["tilt"] = o.tilt;
      config["theta"] = o.theta;
      config["t_slice"] = o.t_slice;
      config["s"] = o.split_s;
      config["record_depths"] = o.record_depths;
      config["couple_w"] = o.couple_w;
      return run_simulate(o, config);
    }
    config["slow_suite"] = o.slow_suite;
    config["only"] = o.only;
    return run_verify(o, config);
  } catch (const DomainError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitChecksFailed;
  }
}
