#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "explab/model.hpp"
#include "explab/wiener.hpp"

namespace explab {

/// Distance from |X| = 1 at which the X integration stops: inside this band
/// the sqrt(1 - X^2) factor has an unbounded derivative and step control just
/// burns steps to no purpose.
inline constexpr double kXBoundaryBand = 1e-9;

enum class XOdeTermination { BoundarySingularity, HorizonReached };

struct XOdeResult {
  std::vector<std::pair<double, double>> trajectory;  // (tau, x)
  XOdeTermination termination = XOdeTermination::HorizonReached;
  double final_tau = 0.0;
  double final_x = 0.0;
};

namespace detail {

/// RK4 stage evaluation for x' = x_rhs(x, lambda). Returns nothing when a
/// stage or the result leaves [-1, 1]; the caller halves the step.
inline std::optional<double> rk4_x_step(double x, double lambda, double h) {
  const auto f = [lambda](double u) -> std::optional<double> {
    if (std::fabs(u) > 1.0) return std::nullopt;
    return x_rhs(u, lambda);
  };
  const auto k1 = f(x);
  if (!k1) return std::nullopt;
  const auto k2 = f(x + 0.5 * h * *k1);
  if (!k2) return std::nullopt;
  const auto k3 = f(x + 0.5 * h * *k2);
  if (!k3) return std::nullopt;
  const auto k4 = f(x + h * *k3);
  if (!k4) return std::nullopt;
  const double next = x + h / 6.0 * (*k1 + 2.0 * *k2 + 2.0 * *k3 + *k4);
  if (std::fabs(next) > 1.0) return std::nullopt;
  return next;
}

}  // namespace detail

/// Integrates x' = 3x - 3x^3 + lambda x sqrt(1-x^2) by classical RK4 with
/// step rejection: a step whose stages would leave [-1, 1] is retried at half
/// size. Stops either at the horizon tau_max or when x enters the boundary
/// band, where the right-hand side stops being Lipschitz and the notion of a
/// unique solution gives out.
inline XOdeResult integrate_x_ode(double x0, double lambda, double dtau = 1e-3,
                                  double tau_max = 50.0) {
  if (!(std::fabs(x0) <= 1.0)) throw std::invalid_argument("integrate_x_ode: |x0| must be <= 1");
  if (!(dtau > 0.0)) throw std::invalid_argument("integrate_x_ode: dtau must be > 0");
  if (!(tau_max > 0.0)) throw std::invalid_argument("integrate_x_ode: tau_max must be > 0");

  XOdeResult res;
  double tau = 0.0;
  double x = x0;
  res.trajectory.emplace_back(tau, x);

  const double h_min = dtau * 0x1p-60;
  while (tau < tau_max) {
    if (1.0 - std::fabs(x) <= kXBoundaryBand) {
      res.termination = XOdeTermination::BoundarySingularity;
      res.final_tau = tau;
      res.final_x = x;
      return res;
    }
    double h = std::min(dtau, tau_max - tau);
    std::optional<double> next = detail::rk4_x_step(x, lambda, h);
    while (!next && h > h_min) {
      h *= 0.5;
      next = detail::rk4_x_step(x, lambda, h);
    }
    if (!next) {
      // Even the tiniest step escapes [-1, 1]: we are pinned at the boundary.
      res.termination = XOdeTermination::BoundarySingularity;
      res.final_tau = tau;
      res.final_x = x;
      return res;
    }
    tau += h;
    x = *next;
    res.trajectory.emplace_back(tau, x);
  }

  res.termination = XOdeTermination::HorizonReached;
  res.final_tau = tau;
  res.final_x = x;
  return res;
}

/// Independent variable for the raw system: cosmic time t, or the
/// dimensionless tau with dt/dtau = 1/H (the clock the normalized variables
/// evolve in).
enum class TimeVariable { CosmicTime, EFoldTime };

enum class RawTermination { HorizonReached, ModelBreakdown };

struct RawSample {
  double time = 0.0;
  double phi = 0.0;
  double hubble = 0.0;
  double phi_dot = 0.0;
  double residual = 0.0;  // Friedmann constraint residual at this sample
};

struct RawTrajectory {
  std::vector<RawSample> samples;
  RawTermination termination = RawTermination::HorizonReached;
  TimeVariable time_variable = TimeVariable::CosmicTime;
  bool noise_enabled = false;
};

/// Integrates the raw (phi, H, f) system. Deterministic runs use RK4 in
/// either time variable; noisy runs use Euler-Maruyama in cosmic time with
/// the Langevin forcing H^(5/2) dW applied to f only. H crossing zero is a
/// breakdown of the expanding-universe model: the run stops there with the
/// flag set instead of integrating nonsense.
inline RawTrajectory integrate_raw_system(const RawState& initial, const PowerLawPotential& pot,
                                          bool noise_enabled, double dt, double t_max,
                                          const NoiseProcess& noise = NoiseProcess{},
                                          TimeVariable time_var = TimeVariable::CosmicTime) {
  if (!(dt > 0.0)) throw std::invalid_argument("integrate_raw_system: dt must be > 0");
  if (!(t_max > 0.0)) throw std::invalid_argument("integrate_raw_system: t_max must be > 0");
  if (noise_enabled && time_var != TimeVariable::CosmicTime) {
    throw std::invalid_argument(
        "integrate_raw_system: Langevin forcing is defined in cosmic time only");
  }

  struct V3 {
    double phi, h, f;
  };
  // RHS in cosmic time; EFoldTime divides by H (dt/dtau = 1/H).
  const auto rhs = [&pot, time_var](const V3& s) -> std::optional<V3> {
    if (!(s.h > 0.0)) return std::nullopt;
    const double v = pot.value(s.phi);
    V3 d{s.f, -s.h * s.h + (v - s.f * s.f) / 3.0, -3.0 * s.h * s.f - pot.slope(s.phi)};
    if (time_var == TimeVariable::EFoldTime) {
      d.phi /= s.h;
      d.h /= s.h;
      d.f /= s.h;
    }
    return d;
  };

  RawTrajectory out;
  out.time_variable = time_var;
  out.noise_enabled = noise_enabled;

  V3 s{initial.phi(), initial.hubble(), initial.phi_dot()};
  const auto residual_at = [&pot](const V3& u) {
    return 3.0 * u.h * u.h - pot.value(u.phi) - 0.5 * u.f * u.f;
  };
  out.samples.push_back(RawSample{0.0, s.phi, s.h, s.f, residual_at(s)});

  std::mt19937_64 eng = make_stream_engine(noise.master_seed, noise.stream_id);
  std::normal_distribution<double> gauss(0.0, std::sqrt(dt));

  // Fixed-size steps; sample times are i * dt so they carry no accumulated
  // rounding. The last step may overshoot t_max by less than dt.
  const std::size_t max_steps = static_cast<std::size_t>(std::ceil(t_max / dt));
  for (std::size_t i = 1; i <= max_steps; ++i) {
    const double h = dt;
    std::optional<V3> next;
    if (noise_enabled) {
      const auto d = rhs(s);
      if (d) {
        const double dw = gauss(eng);
        next = V3{s.phi + h * d->phi, s.h + h * d->h,
                  s.f + h * d->f + std::pow(s.h, 2.5) * dw};
      }
    } else {
      const auto at = [&](double c, const V3& k) {
        return V3{s.phi + c * h * k.phi, s.h + c * h * k.h, s.f + c * h * k.f};
      };
      const auto k1 = rhs(s);
      std::optional<V3> k2, k3, k4;
      if (k1) k2 = rhs(at(0.5, *k1));
      if (k2) k3 = rhs(at(0.5, *k2));
      if (k3) k4 = rhs(at(1.0, *k3));
      if (k4) {
        next = V3{s.phi + h / 6.0 * (k1->phi + 2.0 * k2->phi + 2.0 * k3->phi + k4->phi),
                  s.h + h / 6.0 * (k1->h + 2.0 * k2->h + 2.0 * k3->h + k4->h),
                  s.f + h / 6.0 * (k1->f + 2.0 * k2->f + 2.0 * k3->f + k4->f)};
      }
    }
    if (!next || !(next->h > 0.0) || !std::isfinite(next->h) || !std::isfinite(next->phi) ||
        !std::isfinite(next->f)) {
      out.termination = RawTermination::ModelBreakdown;
      return out;
    }
    s = *next;
    out.samples.push_back(
        RawSample{static_cast<double>(i) * dt, s.phi, s.h, s.f, residual_at(s)});
  }

  out.termination = RawTermination::HorizonReached;
  return out;
}

}  // namespace explab
