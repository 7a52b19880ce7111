// explosion-lab: command-line front end for the explosion-test toolkit.
//
// Subcommands map one-to-one onto library modules: feller and sweep run the
// analytic explosion test, simulate runs Monte Carlo first-exit ensembles,
// lipschitz reports drift regularity, xode integrates the deterministic X
// equation and validate-noise sanity-checks the Wiener increment generator.
//
// Exit codes: 0 success, 2 verdict undetermined, 64 usage error, 70 internal
// numeric error.
//
// Outputs are deterministic for a fixed configuration and seed: no
// timestamps, doubles printed shortest-round-trip, --workers never echoed
// into metadata (it changes scheduling, never results).

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "explab/explab.hpp"

namespace {

using nlohmann::ordered_json;
using namespace explab;

constexpr int kExitOk = 0;
constexpr int kExitUndetermined = 2;
constexpr int kExitUsage = 64;
constexpr int kExitInternal = 70;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Shortest round-trip decimal form; locale-independent.
std::string fmt(double x) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

std::string fmt(std::uint64_t x) { return std::to_string(x); }

/// Writes content to path, or to stdout when path is empty. Binary mode so
/// line endings are LF on every platform.
void write_text(const std::string& path, const std::string& content) {
  if (path.empty()) {
    std::fwrite(content.data(), 1, content.size(), stdout);
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open output file: " + path);
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw std::runtime_error("failed writing output file: " + path);
}

/// Flat "key = value" file: full-line # or ; comments, no sections. Keys may
/// use - or _ interchangeably and match the long option names.
std::vector<std::pair<std::string, std::string>> read_flat_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot read config file: " + path);
  std::vector<std::pair<std::string, std::string>> entries;
  std::string line;
  const auto trim = [](std::string s) {
    const char* ws = " \t\r\n";
    const auto from = s.find_first_not_of(ws);
    if (from == std::string::npos) return std::string();
    return s.substr(from, s.find_last_not_of(ws) - from + 1);
  };
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string stripped = trim(line);
    if (stripped.empty() || stripped[0] == '#' || stripped[0] == ';') continue;
    const auto at = [&] { return path + ":" + std::to_string(lineno); };
    if (stripped[0] == '[') throw UsageError("config sections are not supported (" + at() + ")");
    const auto eq = stripped.find('=');
    if (eq == std::string::npos) throw UsageError("expected key=value in config (" + at() + ")");
    std::string key = trim(stripped.substr(0, eq));
    std::string value = trim(stripped.substr(eq + 1));
    for (char& ch : key) {
      if (ch == '_') ch = '-';
    }
    if (key.empty()) throw UsageError("empty key in config (" + at() + ")");
    if (key == "config") throw UsageError("config files cannot nest (" + at() + ")");
    if (value.size() >= 2 && (value.front() == '"' || value.front() == '\'') &&
        value.back() == value.front()) {
      value = value.substr(1, value.size() - 2);
    }
    entries.emplace_back(std::move(key), std::move(value));
  }
  return entries;
}

/// Pulls --config FILE out of the raw arguments and splices the file's
/// entries in right after the subcommand name, as --key=value tokens.
/// Explicit command-line flags come later in the stream, so with last-wins
/// option policy they override the file. Precedence: flag > config > env.
void splice_config_tokens(std::vector<std::string>& args,
                          const std::vector<std::string>& subcommands) {
  std::string config_path;
  for (std::size_t i = 0; i < args.size();) {
    std::string found;
    if (args[i] == "--config") {
      if (i + 1 >= args.size()) throw UsageError("--config needs a file argument");
      found = args[i + 1];
      args.erase(args.begin() + static_cast<std::ptrdiff_t>(i),
                 args.begin() + static_cast<std::ptrdiff_t>(i) + 2);
    } else if (args[i].rfind("--config=", 0) == 0) {
      found = args[i].substr(9);
      args.erase(args.begin() + static_cast<std::ptrdiff_t>(i));
    } else {
      ++i;
      continue;
    }
    if (!config_path.empty()) throw UsageError("at most one --config is allowed");
    if (found.empty()) throw UsageError("--config needs a file argument");
    config_path = std::move(found);
  }
  if (config_path.empty()) return;

  std::size_t insert_at = args.size();
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (std::find(subcommands.begin(), subcommands.end(), args[i]) != subcommands.end()) {
      insert_at = i + 1;
      break;
    }
  }
  if (insert_at > args.size()) insert_at = args.size();

  std::vector<std::string> tokens;
  for (const auto& [key, value] : read_flat_config(config_path)) {
    tokens.push_back("--" + key + "=" + value);
  }
  args.insert(args.begin() + static_cast<std::ptrdiff_t>(insert_at), tokens.begin(),
              tokens.end());
}

ordered_json make_meta(const std::string& command, ordered_json config) {
  ordered_json meta;
  meta["tool"] = kProjectName;
  meta["version"] = kVersion;
  meta["command"] = command;
  meta["quadrature_rule"] = std::string(kQuadratureRuleName);
  meta["config"] = std::move(config);
  return meta;
}

/// Comment block shared by all CSV outputs; one "# key = value" line per
/// config entry keeps the files self-describing and diffable.
std::string csv_header(const std::string& command, const ordered_json& config,
                       const std::vector<std::string>& extra = {}) {
  std::ostringstream out;
  out << "# " << kProjectName << " " << kVersion << "\n";
  out << "# command = " << command << "\n";
  out << "# quadrature_rule = " << kQuadratureRuleName << "\n";
  for (const auto& [key, value] : config.items()) {
    out << "# " << key << " = "
        << (value.is_string() ? value.get<std::string>() : value.dump()) << "\n";
  }
  for (const auto& line : extra) out << "# " << line << "\n";
  return out.str();
}

/// (sign, log10 magnitude) pair, plus the plain value when it fits in a
/// double. Large magnitudes are never squeezed into overflowing floats.
ordered_json log_value_json(const LogValue& v) {
  ordered_json j;
  j["sign"] = v.sign();
  if (v.is_zero()) {
    j["log10_magnitude"] = nullptr;
    j["value"] = 0.0;
  } else {
    j["log10_magnitude"] = v.log10_magnitude();
    if (v.representable()) {
      j["value"] = v.to_double();
    } else {
      j["value"] = nullptr;
    }
  }
  return j;
}

ordered_json boundary_limit_json(const BoundaryLimit& b, bool with_evidence) {
  ordered_json j;
  j["classification"] = to_string(b.verdict);
  j["divergence_sign"] = b.divergence_sign;
  j["limit"] = log_value_json(b.limit_value);
  if (with_evidence) {
    ordered_json ev = ordered_json::array();
    for (const auto& pt : b.evidence) {
      ordered_json row;
      row["k"] = pt.k;
      row["x"] = pt.x;
      row["sign"] = pt.value.sign();
      row["log10_magnitude"] =
          pt.value.is_zero() ? ordered_json(nullptr) : ordered_json(pt.value.log10_magnitude());
      row["ok"] = pt.ok;
      ev.push_back(std::move(row));
    }
    j["evidence"] = std::move(ev);
  }
  return j;
}

ordered_json verdict_json(const FellerVerdict& v, bool with_evidence) {
  ordered_json j;
  j["lambda"] = v.config.lambda;
  j["condition"] = to_string(v.condition_met);
  if (v.explodes_wp1.has_value()) {
    j["explodes_wp1"] = *v.explodes_wp1;
  } else {
    j["explodes_wp1"] = nullptr;
  }
  j["limits"]["v_left"] = boundary_limit_json(v.v_left, with_evidence);
  j["limits"]["v_right"] = boundary_limit_json(v.v_right, with_evidence);
  j["limits"]["p_left"] = boundary_limit_json(v.p_left, with_evidence);
  j["limits"]["p_right"] = boundary_limit_json(v.p_right, with_evidence);
  j["analytic_note"] =
      "p and v are finite at every interior point for every finite lambda; "
      "'divergent' reports a boundary limit whose magnitude exceeds "
      "exp(divergence_log_threshold), i.e. infinite at working precision.";
  return j;
}

/// Options shared by the feller and sweep subcommands.
struct FellerOptions {
  double zeta = 0.0;
  std::string convention = "definition";
  int kmax = 40;
  double divergence_log_threshold = 500.0;
  double cauchy_rel_tol = 1e-3;
  double quad_rel_tol = 1e-8;
  std::uint64_t quad_max_panels = 1000000;
  bool no_evidence = false;
  std::string out;

  void add_to(CLI::App* cmd) {
    cmd->add_option("--zeta", zeta, "Interior anchor point of the scale/speed integrals")
        ->capture_default_str()
        ->take_last();
    cmd->add_option("--convention", convention, "Drift antiderivative convention")
        ->check(CLI::IsMember({"definition", "paper_expanded"}))
        ->capture_default_str()
        ->take_last();
    cmd->add_option("--kmax", kmax, "Boundary march depth: x_k = +/-(1 - 2^-k)")
        ->capture_default_str()
        ->take_last();
    cmd->add_option("--divergence-log-threshold", divergence_log_threshold,
                    "Natural-log magnitude read as numerically infinite")
        ->capture_default_str()
        ->take_last();
    cmd->add_option("--cauchy-rel-tol", cauchy_rel_tol,
                    "Relative stall tolerance for a convergent tail")
        ->capture_default_str()
        ->take_last();
    cmd->add_option("--quad-rel-tol", quad_rel_tol, "Quadrature relative tolerance")
        ->capture_default_str()
        ->take_last();
    cmd->add_option("--quad-max-panels", quad_max_panels, "Adaptive panel budget")
        ->capture_default_str()
        ->take_last();
    cmd->add_flag("--no-evidence", no_evidence, "Omit per-k evidence tables from the output");
    cmd->add_option("--out", out, "Write JSON here instead of stdout")->take_last();
  }

  ScaleSpeedConfig to_config(double lambda) const {
    ScaleSpeedConfig cfg;
    cfg.lambda = lambda;
    cfg.zeta = zeta;
    cfg.convention = scale_convention_from_string(convention);
    cfg.k_max = kmax;
    cfg.divergence_log_threshold = divergence_log_threshold;
    cfg.cauchy_rel_tol = cauchy_rel_tol;
    cfg.quad_rel_tol = quad_rel_tol;
    cfg.quad_max_panels = static_cast<std::size_t>(quad_max_panels);
    return cfg;
  }

  ordered_json config_json() const {
    ordered_json c;
    c["zeta"] = zeta;
    c["convention"] = convention;
    c["kmax"] = kmax;
    c["divergence_log_threshold"] = divergence_log_threshold;
    c["cauchy_rel_tol"] = cauchy_rel_tol;
    c["quad_rel_tol"] = quad_rel_tol;
    c["quad_max_panels"] = quad_max_panels;
    return c;
  }

  void validate() const {
    ScaleSpeedConfig probe = to_config(0.0);
    try {
      probe.validate();
    } catch (const std::invalid_argument& e) {
      throw UsageError(e.what());
    }
  }
};

int run_feller(double lambda, const FellerOptions& opt) {
  opt.validate();
  if (!std::isfinite(lambda)) throw UsageError("--lambda must be finite");

  const FellerVerdict verdict = feller_test(lambda, opt.to_config(lambda));

  ordered_json config = opt.config_json();
  config["lambda"] = lambda;
  ordered_json j;
  j["meta"] = make_meta("feller", std::move(config));
  j["verdict"] = verdict_json(verdict, !opt.no_evidence);
  write_text(opt.out, j.dump(2) + "\n");
  return verdict.explodes_wp1.has_value() ? kExitOk : kExitUndetermined;
}

/// Grid spec "start:stop:count". Count 1 collapses to {start}; otherwise the
/// grid is log-spaced, which requires positive endpoints.
std::vector<double> parse_grid(const std::string& spec) {
  std::vector<std::string> parts;
  std::string cur;
  for (char ch : spec) {
    if (ch == ':') {
      parts.push_back(cur);
      cur.clear();
    } else {
      cur += ch;
    }
  }
  parts.push_back(cur);
  if (parts.size() != 3) throw UsageError("--grid expects start:stop:count, got '" + spec + "'");

  double start = 0.0, stop = 0.0;
  long count = 0;
  try {
    start = std::stod(parts[0]);
    stop = std::stod(parts[1]);
    count = std::stol(parts[2]);
  } catch (const std::exception&) {
    throw UsageError("--grid has non-numeric fields: '" + spec + "'");
  }
  if (count < 1) throw UsageError("--grid count must be >= 1");
  if (count == 1) return {start};
  if (!(start > 0.0) || !(stop > 0.0)) {
    throw UsageError("--grid with count > 1 is log-spaced and needs positive endpoints");
  }
  std::vector<double> grid(static_cast<std::size_t>(count));
  const double la = std::log(start), lb = std::log(stop);
  for (long i = 0; i < count; ++i) {
    grid[static_cast<std::size_t>(i)] =
        std::exp(la + (lb - la) * static_cast<double>(i) / static_cast<double>(count - 1));
  }
  grid.front() = start;
  grid.back() = stop;
  return grid;
}

int run_sweep(const std::string& grid_spec, const FellerOptions& opt,
              const std::string& fig_data, unsigned workers, bool verbose) {
  opt.validate();
  const std::vector<double> grid = parse_grid(grid_spec);

  const ScaleSpeedConfig base = opt.to_config(0.0);
  const std::vector<SweepRow> rows = lambda_sweep(grid, base, workers);
  if (verbose) {
    for (const auto& row : rows) {
      std::cerr << "lambda = " << fmt(row.lambda) << ": "
                << (row.verdict ? to_string(row.verdict->condition_met) : "error") << "\n";
    }
  }

  ordered_json config = opt.config_json();
  config["grid"] = grid_spec;

  bool any_error = false;
  bool any_undetermined = false;
  ordered_json jrows = ordered_json::array();
  for (const auto& row : rows) {
    ordered_json r;
    r["lambda"] = row.lambda;
    if (row.verdict) {
      r["verdict"] = verdict_json(*row.verdict, !opt.no_evidence);
      any_undetermined = any_undetermined || !row.verdict->explodes_wp1.has_value();
    } else {
      r["error"] = row.error;
      any_error = true;
    }
    jrows.push_back(std::move(r));
  }
  ordered_json j;
  j["meta"] = make_meta("sweep", config);
  j["rows"] = std::move(jrows);
  write_text(opt.out, j.dump(2) + "\n");

  if (!fig_data.empty()) {
    // Long-format evidence table: one row per (lambda, boundary side, k).
    std::ostringstream csv;
    csv << csv_header("sweep", config);
    csv << "lambda,side,k,x,p_sign,p_log10,v_sign,v_log10\n";
    for (const auto& row : rows) {
      if (!row.verdict) continue;
      const auto emit_side = [&](const char* side, const BoundaryLimit& p,
                                 const BoundaryLimit& v) {
        const std::size_t n = std::min(p.evidence.size(), v.evidence.size());
        for (std::size_t i = 0; i < n; ++i) {
          const auto& pe = p.evidence[i];
          const auto& ve = v.evidence[i];
          csv << fmt(row.lambda) << ',' << side << ',' << pe.k << ',' << fmt(pe.x) << ','
              << pe.value.sign() << ','
              << (pe.value.is_zero() ? "" : fmt(pe.value.log10_magnitude())) << ','
              << ve.value.sign() << ','
              << (ve.value.is_zero() ? "" : fmt(ve.value.log10_magnitude())) << "\n";
        }
      };
      emit_side("left", row.verdict->p_left, row.verdict->v_left);
      emit_side("right", row.verdict->p_right, row.verdict->v_right);
    }
    write_text(fig_data, csv.str());
  }

  if (any_error) return kExitInternal;
  return any_undetermined ? kExitUndetermined : kExitOk;
}

struct SimulateOptions {
  double lambda = 0.0;
  double y0 = 0.0;
  std::uint64_t paths = 0;
  double dtau = 1e-4;
  double tau_max = 50.0;
  double eps = 1e-6;
  bool no_drift = false;
  std::uint64_t seed = 0;
  unsigned workers = 1;
  std::uint64_t bins = 50;
  std::string out;
  std::string histogram;
};

int run_simulate(const SimulateOptions& o) {
  PathConfig cfg;
  cfg.y0 = o.y0;
  cfg.lambda = o.lambda;
  cfg.dtau = o.dtau;
  cfg.tau_max = o.tau_max;
  cfg.exit_band = o.eps;
  cfg.drift_enabled = !o.no_drift;
  try {
    cfg.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  if (o.paths == 0) throw UsageError("--paths must be >= 1");
  if (o.bins == 0) throw UsageError("--bins must be >= 1");

  const NoiseProcess base{o.seed, o.dtau, 0};
  const PathEnsembleStats st =
      simulate_ensemble(cfg, static_cast<std::size_t>(o.paths), base, o.workers);

  ordered_json config;
  config["lambda"] = o.lambda;
  config["y0"] = o.y0;
  config["paths"] = o.paths;
  config["dtau"] = o.dtau;
  config["tau_max"] = o.tau_max;
  config["eps"] = o.eps;
  config["drift"] = !o.no_drift;
  config["seed"] = o.seed;

  ordered_json j;
  j["meta"] = make_meta("simulate", config);
  ordered_json& s = j["stats"];
  s["n_paths"] = st.n_paths;
  s["n_exited"] = st.n_exited;
  s["exited_left"] = st.exited_left;
  s["exited_right"] = st.exited_right;
  s["n_censored"] = st.n_censored;
  s["n_errors"] = st.n_errors;
  s["exit_fraction"] = st.exit_fraction;
  s["mean_exit_time"] = st.mean_defined ? ordered_json(st.mean_exit_time) : ordered_json(nullptr);
  s["exit_time_std_error"] =
      st.std_error_defined ? ordered_json(st.exit_time_std_error) : ordered_json(nullptr);
  s["median_exit_time"] =
      st.mean_defined ? ordered_json(st.median_exit_time) : ordered_json(nullptr);
  write_text(o.out, j.dump(2) + "\n");

  if (!o.histogram.empty()) {
    // Fixed bins over [0, tau_max] so histograms from equal configs are
    // byte-identical regardless of which bins happen to be hit.
    const std::size_t nb = static_cast<std::size_t>(o.bins);
    std::vector<std::uint64_t> counts(nb, 0);
    for (double t : st.exit_times) {
      std::size_t idx = static_cast<std::size_t>(t / o.tau_max * static_cast<double>(nb));
      if (idx >= nb) idx = nb - 1;
      ++counts[idx];
    }
    std::ostringstream csv;
    csv << csv_header("simulate", config,
                      {"columns: exit-time histogram over [0, tau_max], " + fmt(o.bins) +
                       " bins"});
    csv << "bin_lo,bin_hi,count\n";
    for (std::size_t i = 0; i < nb; ++i) {
      const double lo = o.tau_max * static_cast<double>(i) / static_cast<double>(nb);
      const double hi = o.tau_max * static_cast<double>(i + 1) / static_cast<double>(nb);
      csv << fmt(lo) << ',' << fmt(hi) << ',' << counts[i] << "\n";
    }
    write_text(o.histogram, csv.str());
  }
  return kExitOk;
}

struct LipschitzOptions {
  double lambda = 0.0;
  std::vector<double> interval;
  std::uint64_t samples = 10000;
  std::uint64_t seed = 20260814;
  bool falsify = false;
  double k = 0.0;
  bool x_report = false;
  std::vector<double> sub_interval;
  int x_kmax = 30;
  std::string out;
};

int run_lipschitz(const LipschitzOptions& o) {
  ordered_json config;
  config["lambda"] = o.lambda;
  ordered_json j;

  if (o.falsify && o.x_report) {
    throw UsageError("choose one of --falsify / --x-report");
  }

  if (o.falsify) {
    if (!(o.k > 0.0)) throw UsageError("--falsify requires --K > 0");
    config["K"] = o.k;
    j["meta"] = make_meta("lipschitz", config);
    const FalsificationWitness w = global_lipschitz_falsify(o.lambda, o.k);
    ordered_json& r = j["falsification"];
    r["mode"] = "falsify";
    r["K"] = w.k;
    r["x"] = w.x;
    r["y"] = w.y;
    r["quotient"] = w.quotient;
    r["violates"] = true;  // by construction; the quotient exceeds K
  } else if (o.x_report) {
    double sub_a = -0.9, sub_b = 0.9;
    if (!o.sub_interval.empty()) {
      sub_a = o.sub_interval.at(0);
      sub_b = o.sub_interval.at(1);
    }
    if (!(sub_a <= sub_b)) throw UsageError("--sub-interval must be ordered: a <= b");
    if (std::fabs(sub_a) >= 1.0 || std::fabs(sub_b) >= 1.0) {
      throw UsageError("--sub-interval must lie inside (-1, 1)");
    }
    config["sub_interval"] = {sub_a, sub_b};
    config["x_kmax"] = o.x_kmax;
    j["meta"] = make_meta("lipschitz", config);
    const XExistenceReport rep = x_existence_report(o.lambda, sub_a, sub_b, o.x_kmax);
    ordered_json& r = j["x_existence"];
    r["mode"] = "x_report";
    r["sub_interval"] = {rep.sub_a, rep.sub_b};
    r["sup_abs_derivative_on_sub"] = rep.sup_abs_derivative_on_sub;
    r["derivative_bounded_at_boundary"] = rep.derivative_bounded_at_boundary;
    ordered_json samples = ordered_json::array();
    for (const auto& [x, d] : rep.divergence_samples) {
      samples.push_back(ordered_json{{"x", x}, {"abs_derivative", d}});
    }
    r["boundary_samples"] = std::move(samples);
  } else {
    if (o.interval.size() != 2) throw UsageError("local mode requires --interval A B");
    const double a = o.interval[0], b = o.interval[1];
    if (!(a <= b)) throw UsageError("--interval must be ordered: a <= b");
    config["interval"] = {a, b};
    config["samples"] = o.samples;
    config["seed"] = o.seed;
    j["meta"] = make_meta("lipschitz", config);
    const LipschitzReport rep = local_lipschitz_constant(
        a, b, o.lambda, static_cast<std::size_t>(o.samples), o.seed);
    ordered_json& r = j["local"];
    r["mode"] = "local";
    r["interval"] = {rep.a, rep.b};
    r["analytic_constant"] = rep.analytic_constant;
    r["sampled_constant"] = rep.sampled_constant;
    r["witness"] = {rep.witness.first, rep.witness.second};
    r["sample_pairs"] = rep.sample_pairs;
  }

  write_text(o.out, j.dump(2) + "\n");
  return kExitOk;
}

struct XOdeOptions {
  double x0 = 0.0;
  double lambda = 0.0;
  double dtau = 1e-3;
  double tau_max = 50.0;
  std::string out;
};

int run_xode(const XOdeOptions& o) {
  if (!(std::fabs(o.x0) <= 1.0)) throw UsageError("--x0 must lie in [-1, 1]");
  if (!(o.dtau > 0.0)) throw UsageError("--dtau must be > 0");
  if (!(o.tau_max > 0.0)) throw UsageError("--tau-max must be > 0");

  const XOdeResult r = integrate_x_ode(o.x0, o.lambda, o.dtau, o.tau_max);

  ordered_json config;
  config["x0"] = o.x0;
  config["lambda"] = o.lambda;
  config["dtau"] = o.dtau;
  config["tau_max"] = o.tau_max;

  const char* term = r.termination == XOdeTermination::BoundarySingularity
                         ? "boundary_singularity"
                         : "horizon_reached";
  std::ostringstream csv;
  csv << csv_header("xode", config,
                    {std::string("termination = ") + term,
                     "final_tau = " + fmt(r.final_tau), "final_x = " + fmt(r.final_x)});
  csv << "tau,x\n";
  for (const auto& [tau, x] : r.trajectory) {
    csv << fmt(tau) << ',' << fmt(x) << "\n";
  }
  write_text(o.out, csv.str());
  return kExitOk;
}

struct NoiseOptions {
  std::uint64_t seed = 0;
  std::uint64_t increments = 1000000;
  double dtau = 1.0;
  double qv_horizon = 10.0;
  double qv_dtau = 1e-4;
  std::vector<double> n_values{1e2, 1e4, 1e6};
  std::uint64_t samples_per_n = 10000;
  std::string out;
};

int run_validate_noise(const NoiseOptions& o) {
  if (o.increments == 0) throw UsageError("--increments must be >= 1");
  if (!(o.dtau > 0.0) || !(o.qv_dtau > 0.0)) throw UsageError("step sizes must be > 0");
  if (!(o.qv_horizon > 0.0)) throw UsageError("--qv-horizon must be > 0");
  if (o.n_values.size() < 2) throw UsageError("--n-values needs at least two entries");

  ordered_json config;
  config["seed"] = o.seed;
  config["increments"] = o.increments;
  config["dtau"] = o.dtau;
  config["qv_horizon"] = o.qv_horizon;
  config["qv_dtau"] = o.qv_dtau;
  config["n_values"] = o.n_values;
  config["samples_per_n"] = o.samples_per_n;

  ordered_json j;
  j["meta"] = make_meta("validate-noise", config);

  // Moments of raw increments on stream 0.
  {
    const auto w = wiener_increments(NoiseProcess{o.seed, o.dtau, 0},
                                     static_cast<std::size_t>(o.increments));
    double sum = 0.0, sumsq = 0.0;
    for (double x : w) {
      sum += x;
      sumsq += x * x;
    }
    const double n = static_cast<double>(w.size());
    const double mean = sum / n;
    const double var = (sumsq - n * mean * mean) / (n - 1.0);
    ordered_json& m = j["increments"];
    m["n"] = o.increments;
    m["dtau"] = o.dtau;
    m["mean"] = mean;
    m["sample_var"] = var;
    m["expected_mean"] = 0.0;
    m["expected_var"] = o.dtau;
    m["mean_se"] = std::sqrt(o.dtau / n);
  }

  // Quadratic variation over [0, horizon] on stream 1.
  {
    const std::size_t n = static_cast<std::size_t>(std::llround(o.qv_horizon / o.qv_dtau));
    const auto w = wiener_increments(NoiseProcess{o.seed, o.qv_dtau, 1}, n);
    double qv = 0.0;
    for (double x : w) qv += x * x;
    ordered_json& m = j["quadratic_variation"];
    m["horizon"] = o.qv_horizon;
    m["dtau"] = o.qv_dtau;
    m["qv"] = qv;
    m["expected"] = o.qv_horizon;
  }

  // Difference-quotient growth on stream 2.
  {
    const DiffQuotientReport rep =
        diff_quotient_stat(NoiseProcess{o.seed, o.dtau, 2}, o.n_values,
                           static_cast<std::size_t>(o.samples_per_n));
    ordered_json& m = j["difference_quotients"];
    m["samples_per_n"] = rep.samples_per_n;
    ordered_json rows = ordered_json::array();
    for (const auto& row : rep.rows) {
      rows.push_back(ordered_json{{"n", row.n},
                                  {"sample_std", row.sample_std},
                                  {"std_over_sqrt_n", row.std_over_sqrt_n}});
    }
    m["rows"] = std::move(rows);
    m["slope"] = rep.slope;
    m["expected_slope"] = 0.5;
  }

  write_text(o.out, j.dump(2) + "\n");
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Analytic and Monte Carlo explosion tests for the field-velocity SDE "
               "dY = (Y^2-1)(3Y+lambda) dtau + dW",
               "explosion-lab"};
  app.set_version_flag("--version", std::string(kProjectName) + " " + kVersion);
  app.require_subcommand(1);

  // The --config option is handled before CLI11 parsing (the file's entries
  // are spliced into the token stream); this registration only provides help
  // text and, combined with take_last on the scalar options, gives explicit
  // flags precedence over the file.
  std::string config_help_dummy;
  const auto add_config_help = [&](CLI::App* cmd) {
    cmd->add_option("--config", config_help_dummy,
                    "Flat key=value file supplying any of this subcommand's options");
  };

  // feller
  auto* feller_cmd = app.add_subcommand("feller", "Explosion verdict at one lambda");
  double feller_lambda = 0.0;
  FellerOptions feller_opt;
  feller_cmd->add_option("--lambda", feller_lambda, "Model parameter")
      ->required()
      ->take_last();
  feller_opt.add_to(feller_cmd);
  add_config_help(feller_cmd);

  // sweep
  auto* sweep_cmd = app.add_subcommand("sweep", "Explosion verdicts over a lambda grid");
  std::string sweep_grid;
  std::string sweep_fig;
  unsigned sweep_workers = 1;
  bool sweep_verbose = false;
  FellerOptions sweep_opt;
  sweep_cmd->add_option("--grid", sweep_grid, "start:stop:count, log-spaced (count 1: single)")
      ->required()
      ->take_last();
  sweep_opt.add_to(sweep_cmd);
  sweep_cmd->add_option("--fig-data", sweep_fig, "Write per-k evidence CSV here")->take_last();
  sweep_cmd->add_option("--workers", sweep_workers, "Threads (never affects results)")
      ->capture_default_str()
      ->take_last();
  sweep_cmd->add_flag("--verbose", sweep_verbose, "Progress to stderr");
  add_config_help(sweep_cmd);

  // simulate
  auto* sim_cmd = app.add_subcommand("simulate", "Monte Carlo first-exit ensemble");
  SimulateOptions sim;
  sim_cmd->add_option("--lambda", sim.lambda, "Model parameter")
      ->capture_default_str()
      ->take_last();
  sim_cmd->add_option("--y0", sim.y0, "Initial value, |y0| < 1 - eps")
      ->capture_default_str()
      ->take_last();
  sim_cmd->add_option("--paths", sim.paths, "Number of independent paths")
      ->required()
      ->take_last();
  sim_cmd->add_option("--dtau", sim.dtau, "Euler-Maruyama step")
      ->capture_default_str()
      ->take_last();
  sim_cmd->add_option("--tau-max", sim.tau_max, "Censoring horizon")
      ->capture_default_str()
      ->take_last();
  sim_cmd->add_option("--eps", sim.eps, "Exit band shrinking (-1, 1)")
      ->capture_default_str()
      ->take_last();
  sim_cmd->add_flag("--no-drift", sim.no_drift, "Pure Brownian motion (validation mode)");
  sim_cmd->add_option("--seed", sim.seed, "Master seed")
      ->envname("EXPLOSION_LAB_SEED")
      ->capture_default_str()
      ->take_last();
  sim_cmd->add_option("--workers", sim.workers, "Threads (never affects results)")
      ->capture_default_str()
      ->take_last();
  sim_cmd->add_option("--histogram", sim.histogram, "Write exit-time histogram CSV here")
      ->take_last();
  sim_cmd->add_option("--bins", sim.bins, "Histogram bin count")
      ->capture_default_str()
      ->take_last();
  sim_cmd->add_option("--out", sim.out, "Write JSON here instead of stdout")->take_last();
  add_config_help(sim_cmd);

  // lipschitz
  auto* lip_cmd = app.add_subcommand("lipschitz", "Drift regularity reports");
  LipschitzOptions lip;
  lip_cmd->add_option("--lambda", lip.lambda, "Model parameter")
      ->capture_default_str()
      ->take_last();
  lip_cmd->add_option("--interval", lip.interval, "Closed interval [A, B] for the local mode")
      ->expected(2)
      ->delimiter(',');
  lip_cmd->add_option("--samples", lip.samples, "Difference-quotient sample pairs")
      ->capture_default_str()
      ->take_last();
  lip_cmd->add_option("--seed", lip.seed, "Sampling seed")
      ->envname("EXPLOSION_LAB_SEED")
      ->capture_default_str()
      ->take_last();
  lip_cmd->add_flag("--falsify", lip.falsify, "Produce a witness against a global constant");
  lip_cmd->add_option("--K", lip.k, "Candidate global constant for --falsify")->take_last();
  lip_cmd->add_flag("--x-report", lip.x_report, "Existence/uniqueness report for the X equation");
  lip_cmd->add_option("--sub-interval", lip.sub_interval,
                      "Closed sub-interval of (-1, 1) for --x-report")
      ->expected(2)
      ->delimiter(',');
  lip_cmd->add_option("--x-kmax", lip.x_kmax, "Boundary sample depth for --x-report")
      ->capture_default_str()
      ->take_last();
  lip_cmd->add_option("--out", lip.out, "Write JSON here instead of stdout")->take_last();
  add_config_help(lip_cmd);

  // xode
  auto* xode_cmd = app.add_subcommand("xode", "Integrate the deterministic X equation");
  XOdeOptions xo;
  xode_cmd->add_option("--x0", xo.x0, "Initial X in [-1, 1]")->required()->take_last();
  xode_cmd->add_option("--lambda", xo.lambda, "Model parameter")
      ->capture_default_str()
      ->take_last();
  xode_cmd->add_option("--dtau", xo.dtau, "Nominal RK4 step")
      ->capture_default_str()
      ->take_last();
  xode_cmd->add_option("--tau-max", xo.tau_max, "Horizon")->capture_default_str()->take_last();
  xode_cmd->add_option("--out", xo.out, "Write trajectory CSV here instead of stdout")
      ->take_last();
  add_config_help(xode_cmd);

  // validate-noise
  auto* noise_cmd = app.add_subcommand("validate-noise", "Wiener increment diagnostics");
  NoiseOptions no;
  noise_cmd->add_option("--seed", no.seed, "Master seed")
      ->envname("EXPLOSION_LAB_SEED")
      ->capture_default_str()
      ->take_last();
  noise_cmd->add_option("--increments", no.increments, "Sample size for the moment checks")
      ->capture_default_str()
      ->take_last();
  noise_cmd->add_option("--dtau", no.dtau, "Increment variance (time step)")
      ->capture_default_str()
      ->take_last();
  noise_cmd->add_option("--qv-horizon", no.qv_horizon, "Quadratic variation horizon")
      ->capture_default_str()
      ->take_last();
  noise_cmd->add_option("--qv-dtau", no.qv_dtau, "Quadratic variation step")
      ->capture_default_str()
      ->take_last();
  noise_cmd->add_option("--n-values", no.n_values,
                        "Mesh densities for the difference-quotient growth check")
      ->expected(-2)
      ->delimiter(',');
  noise_cmd->add_option("--samples-per-n", no.samples_per_n, "Samples per mesh density")
      ->capture_default_str()
      ->take_last();
  noise_cmd->add_option("--out", no.out, "Write JSON here instead of stdout")->take_last();
  add_config_help(noise_cmd);

  std::vector<std::string> args(argv + 1, argv + argc);
  try {
    splice_config_tokens(args, {"feller", "sweep", "simulate", "lipschitz", "xode",
                                "validate-noise"});
  } catch (const UsageError& e) {
    std::cerr << "explosion-lab: " << e.what() << "\n";
    return kExitUsage;
  }
  std::reverse(args.begin(), args.end());

  try {
    app.parse(args);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (*feller_cmd) return run_feller(feller_lambda, feller_opt);
    if (*sweep_cmd) return run_sweep(sweep_grid, sweep_opt, sweep_fig, sweep_workers,
                                     sweep_verbose);
    if (*sim_cmd) return run_simulate(sim);
    if (*lip_cmd) return run_lipschitz(lip);
    if (*xode_cmd) return run_xode(xo);
    if (*noise_cmd) return run_validate_noise(no);
  } catch (const UsageError& e) {
    std::cerr << "explosion-lab: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "explosion-lab: internal error: " << e.what() << "\n";
    return kExitInternal;
  }
  return kExitUsage;
}
