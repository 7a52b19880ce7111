#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <vector>

namespace explab {

namespace detail {

/// splitmix64 step. Used only to spread (seed, stream) pairs over 64 bits
/// before seeding the per-stream engine, which keeps streams decorrelated
/// even for adjacent ids.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9E3779B97F4A7C15ull;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

}  // namespace detail

/// Engine for stream `stream_id` of master seed `master_seed`. The mapping is
/// pure, so any worker can rebuild any stream: results never depend on how
/// paths are distributed over threads.
inline std::mt19937_64 make_stream_engine(std::uint64_t master_seed, std::uint64_t stream_id) {
  std::uint64_t s = master_seed;
  std::uint64_t mixed = detail::splitmix64(s);
  s ^= stream_id * 0xBF58476D1CE4E5B9ull + 0x94D049BB133111EBull;
  mixed ^= detail::splitmix64(s);
  return std::mt19937_64(mixed);
}

/// Identifies one reproducible realization of the driving noise.
struct NoiseProcess {
  std::uint64_t master_seed = 0;
  double dtau = 1e-4;
  std::uint64_t stream_id = 0;
};

/// n independent increments dW ~ N(0, dtau).
inline std::vector<double> wiener_increments(const NoiseProcess& proc, std::size_t n) {
  if (n == 0) throw std::invalid_argument("wiener_increments: n must be >= 1");
  if (!(proc.dtau > 0.0)) throw std::invalid_argument("wiener_increments: dtau must be > 0");
  std::mt19937_64 eng = make_stream_engine(proc.master_seed, proc.stream_id);
  std::normal_distribution<double> gauss(0.0, std::sqrt(proc.dtau));
  std::vector<double> out(n);
  for (double& w : out) w = gauss(eng);
  return out;
}

struct DiffQuotientRow {
  double n;                 // increments per unit time
  double sample_std;        // std of n * (W(t + 1/n) - W(t)) over the samples
  double std_over_sqrt_n;   // should hover near 1
};

struct DiffQuotientReport {
  std::vector<DiffQuotientRow> rows;
  double slope = 0.0;  // log-log regression slope of std vs n; 1/2 for white noise
  std::size_t samples_per_n = 0;
};

/// Samples the scaled difference quotient n * (W(t + 1/n) - W(t)), whose
/// standard deviation grows like sqrt(n). The unbounded growth is the
/// numerical counterpart of nowhere-differentiability: the "derivative" of
/// the paths diverges as the mesh refines.
inline DiffQuotientReport diff_quotient_stat(const NoiseProcess& proc,
                                             std::span<const double> n_values,
                                             std::size_t samples_per_n = 10000) {
  std::size_t distinct = 0;
  for (std::size_t i = 0; i < n_values.size(); ++i) {
    if (!(n_values[i] > 0.0)) {
      throw std::invalid_argument("diff_quotient_stat: n values must be positive");
    }
    bool seen = false;
    for (std::size_t j = 0; j < i; ++j) seen = seen || n_values[j] == n_values[i];
    if (!seen) ++distinct;
  }
  if (distinct < 2) {
    throw std::invalid_argument("diff_quotient_stat: need at least 2 distinct n values");
  }
  if (samples_per_n < 2) {
    throw std::invalid_argument("diff_quotient_stat: need at least 2 samples per n");
  }

  std::mt19937_64 eng = make_stream_engine(proc.master_seed, proc.stream_id);
  std::normal_distribution<double> unit(0.0, 1.0);

  DiffQuotientReport rep;
  rep.samples_per_n = samples_per_n;
  for (double n : n_values) {
    // W(t + 1/n) - W(t) ~ N(0, 1/n), so the quotient is sqrt(n) * N(0,1).
    const double scale = std::sqrt(n);
    double sum = 0.0;
    double sumsq = 0.0;
    for (std::size_t s = 0; s < samples_per_n; ++s) {
      const double q = scale * unit(eng);
      sum += q;
      sumsq += q * q;
    }
    const double mean = sum / static_cast<double>(samples_per_n);
    const double var =
        (sumsq - static_cast<double>(samples_per_n) * mean * mean) /
        static_cast<double>(samples_per_n - 1);
    const double sd = std::sqrt(std::max(var, 0.0));
    rep.rows.push_back(DiffQuotientRow{n, sd, sd / scale});
  }

  // Least-squares slope of log(std) against log(n).
  double sx = 0.0, sy = 0.0;
  for (const auto& r : rep.rows) {
    sx += std::log(r.n);
    sy += std::log(r.sample_std);
  }
  const double mx = sx / static_cast<double>(rep.rows.size());
  const double my = sy / static_cast<double>(rep.rows.size());
  double num = 0.0, den = 0.0;
  for (const auto& r : rep.rows) {
    const double dx = std::log(r.n) - mx;
    num += dx * (std::log(r.sample_std) - my);
    den += dx * dx;
  }
  rep.slope = num / den;
  return rep;
}

}  // namespace explab
