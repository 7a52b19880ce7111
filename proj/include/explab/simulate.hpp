#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "explab/model.hpp"
#include "explab/wiener.hpp"

namespace explab {

/// Parameters of one first-exit experiment for dY = b(Y) dtau + dW on the
/// band |Y| < 1 - exit_band.
struct PathConfig {
  double y0 = 0.0;
  double lambda = 0.0;
  double dtau = 1e-4;
  double tau_max = 50.0;
  double exit_band = 1e-6;        // epsilon pulled in from the singular endpoints
  bool drift_enabled = true;      // false: pure Brownian motion (validation mode)
  bool record_trajectory = false;

  void validate() const {
    if (!(dtau > 0.0)) throw std::invalid_argument("PathConfig: dtau must be > 0");
    if (!(tau_max > 0.0)) throw std::invalid_argument("PathConfig: tau_max must be > 0");
    if (!(exit_band > 0.0 && exit_band < 1.0)) {
      throw std::invalid_argument("PathConfig: exit_band must lie in (0, 1)");
    }
    if (!(std::fabs(y0) < 1.0 - exit_band)) {
      throw std::invalid_argument("PathConfig: y0 must satisfy |y0| < 1 - exit_band");
    }
    if (!std::isfinite(lambda)) throw std::invalid_argument("PathConfig: lambda must be finite");
  }
};

/// Raised when a path leaves the representable range, which indicates a
/// misconfigured step or band rather than physics.
class InvalidPathError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class PathOutcome { Exited, Censored };

struct PathResult {
  PathOutcome outcome = PathOutcome::Censored;
  int exit_side = 0;       // -1 or +1 when outcome == Exited
  double exit_time = 0.0;  // first time |Y| >= 1 - exit_band; tau_max if censored
  double y_final = 0.0;
  std::size_t steps = 0;
  std::vector<std::pair<double, double>> trajectory;  // (tau, y), only if recorded
};

/// One explicit step: y + b(y) dtau + dW. The noise increment arrives
/// pre-scaled, so the step itself is deterministic and unit-testable.
inline double euler_maruyama_step(double y, double lambda, double dw, double dtau,
                                  bool drift_enabled = true) {
  const double b = drift_enabled ? drift(y, lambda) : 0.0;
  return y + b * dtau + dispersion() * dw;
}

/// Simulates one path until first exit or censoring at tau_max.
inline PathResult simulate_path(const PathConfig& cfg, const NoiseProcess& noise) {
  cfg.validate();
  std::mt19937_64 eng = make_stream_engine(noise.master_seed, noise.stream_id);
  std::normal_distribution<double> gauss(0.0, std::sqrt(cfg.dtau));

  const double barrier = 1.0 - cfg.exit_band;
  const std::size_t max_steps = static_cast<std::size_t>(std::ceil(cfg.tau_max / cfg.dtau));

  PathResult res;
  double y = cfg.y0;
  if (cfg.record_trajectory) {
    res.trajectory.reserve(std::min<std::size_t>(max_steps + 1, 1u << 20));
    res.trajectory.emplace_back(0.0, y);
  }

  for (std::size_t i = 1; i <= max_steps; ++i) {
    y = euler_maruyama_step(y, cfg.lambda, gauss(eng), cfg.dtau, cfg.drift_enabled);
    if (!std::isfinite(y)) {
      throw InvalidPathError("simulate_path: Y became non-finite at step " + std::to_string(i));
    }
    const double tau = static_cast<double>(i) * cfg.dtau;
    if (cfg.record_trajectory) res.trajectory.emplace_back(tau, y);
    if (std::fabs(y) >= barrier) {
      res.outcome = PathOutcome::Exited;
      res.exit_side = y > 0.0 ? 1 : -1;
      res.exit_time = tau;
      res.y_final = y;
      res.steps = i;
      return res;
    }
  }

  res.outcome = PathOutcome::Censored;
  res.exit_time = cfg.tau_max;
  res.y_final = y;
  res.steps = max_steps;
  return res;
}

struct PathEnsembleStats {
  std::size_t n_paths = 0;
  std::size_t n_exited = 0;
  std::size_t exited_left = 0;
  std::size_t exited_right = 0;
  std::size_t n_censored = 0;
  std::size_t n_errors = 0;           // invalid paths, excluded from statistics
  double exit_fraction = 0.0;
  double mean_exit_time = std::numeric_limits<double>::quiet_NaN();
  double exit_time_std_error = std::numeric_limits<double>::quiet_NaN();
  double median_exit_time = std::numeric_limits<double>::quiet_NaN();
  bool mean_defined = false;
  bool std_error_defined = false;
  std::vector<double> exit_times;  // sorted ascending, exited paths only
};

/// Runs n_paths independent paths on stream ids base.stream_id + i. The
/// stream mapping, not the scheduler, owns the randomness: any worker count
/// produces bit-identical statistics.
inline PathEnsembleStats simulate_ensemble(const PathConfig& cfg, std::size_t n_paths,
                                           const NoiseProcess& base, unsigned workers = 1) {
  cfg.validate();
  if (n_paths == 0) throw std::invalid_argument("simulate_ensemble: n_paths must be >= 1");
  if (workers == 0) workers = 1;

  PathConfig path_cfg = cfg;
  path_cfg.record_trajectory = false;  // ensembles only keep summary data

  struct Slot {
    PathOutcome outcome;
    int exit_side;
    double exit_time;
    bool error;
  };
  std::vector<Slot> slots(n_paths);

  const auto run_range = [&](std::size_t lo, std::size_t hi) {
    for (std::size_t i = lo; i < hi; ++i) {
      NoiseProcess noise = base;
      noise.dtau = cfg.dtau;
      noise.stream_id = base.stream_id + i;
      try {
        PathResult r = simulate_path(path_cfg, noise);
        slots[i] = Slot{r.outcome, r.exit_side, r.exit_time, false};
      } catch (const InvalidPathError&) {
        slots[i] = Slot{PathOutcome::Censored, 0, 0.0, true};
      }
    }
  };

  const unsigned n_workers = static_cast<unsigned>(
      std::min<std::size_t>(workers, n_paths));
  if (n_workers <= 1) {
    run_range(0, n_paths);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(n_workers);
    const std::size_t chunk = (n_paths + n_workers - 1) / n_workers;
    for (unsigned w = 0; w < n_workers; ++w) {
      const std::size_t lo = static_cast<std::size_t>(w) * chunk;
      const std::size_t hi = std::min(n_paths, lo + chunk);
      if (lo >= hi) break;
      pool.emplace_back(run_range, lo, hi);
    }
    for (auto& t : pool) t.join();
  }

  // Aggregate in index order; nothing below depends on thread timing.
  PathEnsembleStats st;
  st.n_paths = n_paths;
  for (const Slot& s : slots) {
    if (s.error) {
      ++st.n_errors;
      continue;
    }
    if (s.outcome == PathOutcome::Exited) {
      ++st.n_exited;
      (s.exit_side > 0 ? st.exited_right : st.exited_left)++;
      st.exit_times.push_back(s.exit_time);
    } else {
      ++st.n_censored;
    }
  }
  st.exit_fraction = static_cast<double>(st.n_exited) / static_cast<double>(n_paths);
  std::sort(st.exit_times.begin(), st.exit_times.end());

  if (st.n_exited > 0) {
    double sum = 0.0;
    for (double t : st.exit_times) sum += t;
    st.mean_exit_time = sum / static_cast<double>(st.n_exited);
    st.mean_defined = true;
    const std::size_t m = st.n_exited;
    st.median_exit_time = (m % 2 == 1)
                              ? st.exit_times[m / 2]
                              : 0.5 * (st.exit_times[m / 2 - 1] + st.exit_times[m / 2]);
    if (m >= 2) {
      double ss = 0.0;
      for (double t : st.exit_times) {
        const double d = t - st.mean_exit_time;
        ss += d * d;
      }
      st.exit_time_std_error = std::sqrt(ss / static_cast<double>(m - 1)) /
                               std::sqrt(static_cast<double>(m));
      st.std_error_defined = true;
    }
  }
  return st;
}

}  // namespace explab
