#include "explab/ode.hpp"

#include <catch2/catch_amalgamated.hpp>
#include <cmath>
#include <vector>

using namespace explab;
using Catch::Approx;

TEST_CASE("x ode hits the boundary singularity in finite time for lambda = 1") {
  const XOdeResult r = integrate_x_ode(0.5, 1.0, 1e-3, 50.0);
  REQUIRE(r.termination == XOdeTermination::BoundarySingularity);
  REQUIRE(r.final_x >= 1.0 - 1e-9 - 1e-12);
  REQUIRE(r.final_x <= 1.0);
  // time to reach 1 - 1e-9 from the 30-digit reference solution
  REQUIRE(r.final_tau == Approx(0.5754154811).margin(2e-3));
  REQUIRE(r.trajectory.front().second == 0.5);
  for (std::size_t i = 1; i < r.trajectory.size(); ++i) {
    REQUIRE(r.trajectory[i].second >= r.trajectory[i - 1].second);
    REQUIRE(r.trajectory[i].first > r.trajectory[i - 1].first);
  }
}

TEST_CASE("x ode reaches the horizon when lambda = 0 keeps the flow regular") {
  const XOdeResult r = integrate_x_ode(0.5, 0.0, 1e-3, 2.0);
  REQUIRE(r.termination == XOdeTermination::HorizonReached);
  REQUIRE(r.final_tau == Approx(2.0).margin(1e-12));
  // closed form: x(tau) = (1 + (1/x0^2 - 1) e^(-6 tau))^(-1/2)
  const double expect = 1.0 / std::sqrt(1.0 + 3.0 * std::exp(-12.0));
  REQUIRE(r.final_x == Approx(expect).epsilon(1e-9));
}

TEST_CASE("x ode fixed points and mirrored flow") {
  const XOdeResult at_zero = integrate_x_ode(0.0, 5.0, 1e-3, 1.0);
  REQUIRE(at_zero.termination == XOdeTermination::HorizonReached);
  REQUIRE(at_zero.final_x == 0.0);

  const XOdeResult at_boundary = integrate_x_ode(1.0, 5.0, 1e-3, 1.0);
  REQUIRE(at_boundary.termination == XOdeTermination::BoundarySingularity);
  REQUIRE(at_boundary.final_tau == 0.0);

  // x_rhs is odd in x at fixed lambda: the mirrored run lands at -x
  const XOdeResult pos = integrate_x_ode(0.5, 1.0, 1e-3, 50.0);
  const XOdeResult neg = integrate_x_ode(-0.5, 1.0, 1e-3, 50.0);
  REQUIRE(neg.termination == XOdeTermination::BoundarySingularity);
  REQUIRE(neg.final_x == Approx(-pos.final_x).margin(1e-12));
  REQUIRE(neg.final_tau == Approx(pos.final_tau).margin(1e-9));
}

TEST_CASE("x ode input validation") {
  REQUIRE_THROWS_AS(integrate_x_ode(1.5, 0.0), std::invalid_argument);
  REQUIRE_THROWS_AS(integrate_x_ode(0.5, 0.0, -1e-3), std::invalid_argument);
  REQUIRE_THROWS_AS(integrate_x_ode(0.5, 0.0, 1e-3, 0.0), std::invalid_argument);
}

namespace {
RawState oscillator_state() {
  // phi = 1, f = 0.5, H chosen so the constraint holds exactly
  static const PowerLawPotential pot(2.0, 1.0);
  const double h0 = std::sqrt((pot.value(1.0) + 0.5 * 0.5 * 0.5) / 3.0);
  return RawState(1.0, h0, 0.5, pot);
}
}  // namespace

TEST_CASE("raw integration preserves the Friedmann constraint to machine-ish level") {
  const PowerLawPotential pot(2.0, 1.0);
  const RawTrajectory tr = integrate_raw_system(oscillator_state(), pot, false, 1e-3, 5.0);
  REQUIRE(tr.termination == RawTermination::HorizonReached);
  REQUIRE(tr.samples.size() == 5001);
  double worst = 0.0;
  for (const auto& s : tr.samples) worst = std::max(worst, std::fabs(s.residual));
  REQUIRE(worst < 1e-8);
  // on the constraint surface dH/dt = -f^2/2 <= 0
  for (std::size_t i = 1; i < tr.samples.size(); ++i) {
    REQUIRE(tr.samples[i].hubble <= tr.samples[i - 1].hubble + 1e-12);
  }
}

TEST_CASE("raw integration runs in the normalized clock too") {
  const PowerLawPotential pot(2.0, 1.0);
  const RawTrajectory tr = integrate_raw_system(oscillator_state(), pot, false, 1e-3, 3.0,
                                                NoiseProcess{}, TimeVariable::EFoldTime);
  REQUIRE(tr.termination == RawTermination::HorizonReached);
  REQUIRE(tr.time_variable == TimeVariable::EFoldTime);
  double worst = 0.0;
  for (const auto& s : tr.samples) worst = std::max(worst, std::fabs(s.residual));
  REQUIRE(worst < 1e-8);
}

TEST_CASE("H crossing zero stops the run with a breakdown flag") {
  const PowerLawPotential none(2.0, 0.0);
  // Deliberately far off the constraint surface (declared tolerance makes it
  // legal): dH/dt = -H^2 - f^2/3 drives H through zero almost immediately.
  const RawState s(0.0, 0.1, 10.0, none, 1e6);
  const RawTrajectory tr = integrate_raw_system(s, none, false, 1e-3, 1.0);
  REQUIRE(tr.termination == RawTermination::ModelBreakdown);
  REQUIRE(tr.samples.size() < 1001);
  for (const auto& smp : tr.samples) REQUIRE(smp.hubble > 0.0);
}

TEST_CASE("noisy runs are reproducible and need cosmic time") {
  const PowerLawPotential pot(2.0, 1.0);
  const NoiseProcess noise{888, 1e-3, 0};
  const RawTrajectory a = integrate_raw_system(oscillator_state(), pot, true, 1e-3, 1.0, noise);
  const RawTrajectory b = integrate_raw_system(oscillator_state(), pot, true, 1e-3, 1.0, noise);
  REQUIRE(a.samples.size() == b.samples.size());
  for (std::size_t i = 0; i < a.samples.size(); i += 100) {
    REQUIRE(a.samples[i].phi == b.samples[i].phi);
    REQUIRE(a.samples[i].hubble == b.samples[i].hubble);
    REQUIRE(a.samples[i].phi_dot == b.samples[i].phi_dot);
  }
  // the forcing actually moved the field velocity
  const RawTrajectory det = integrate_raw_system(oscillator_state(), pot, false, 1e-3, 1.0);
  REQUIRE(a.samples.back().phi_dot != det.samples.back().phi_dot);

  REQUIRE_THROWS_AS(integrate_raw_system(oscillator_state(), pot, true, 1e-3, 1.0, noise,
                                         TimeVariable::EFoldTime),
                    std::invalid_argument);
}

TEST_CASE("raw integration input validation") {
  const PowerLawPotential pot(2.0, 1.0);
  REQUIRE_THROWS_AS(integrate_raw_system(oscillator_state(), pot, false, 0.0, 1.0),
                    std::invalid_argument);
  REQUIRE_THROWS_AS(integrate_raw_system(oscillator_state(), pot, false, 1e-3, -1.0),
                    std::invalid_argument);
}

TEST_CASE("normalized velocity from the raw run obeys the decoupled drift") {
  // Integrate the raw system in the normalized clock, then compare
  // Y = f / (sqrt(6) H) against a direct RK4 integration of
  //   Y' = (Y^2 - 1)(3 Y + lambda(phi)),  phi' = sqrt(6) Y,
  // on the same grid. This pins the sign conventions of the change of
  // variables; a wrong sign in the lambda term drifts apart within a few
  // hundred steps.
  const double h0 = 1.0;
  const double y0 = -0.3;
  const double phi0 = 2.0;
  const double amp = 0.91 * 3.0 / 4.0;  // makes X0^2 = 0.91 at phi = 2, H = 1
  const PowerLawPotential pot(2.0, amp);
  const double f0 = y0 * std::sqrt(6.0) * h0;
  const RawState init(phi0, h0, f0, pot);

  const double h = 1e-3;
  const double horizon = 1.0;
  const RawTrajectory raw = integrate_raw_system(init, pot, false, h, horizon, NoiseProcess{},
                                                 TimeVariable::EFoldTime);
  REQUIRE(raw.termination == RawTermination::HorizonReached);

  double y = y0, phi = phi0;
  double worst = 0.0;
  for (std::size_t i = 1; i < raw.samples.size(); ++i) {
    const auto fy = [&pot](double yy, double pp) {
      return drift(yy, pot.lambda_param(pp));
    };
    const auto fphi = [](double yy) { return std::sqrt(6.0) * yy; };
    const double k1y = fy(y, phi), k1p = fphi(y);
    const double k2y = fy(y + 0.5 * h * k1y, phi + 0.5 * h * k1p),
                 k2p = fphi(y + 0.5 * h * k1y);
    const double k3y = fy(y + 0.5 * h * k2y, phi + 0.5 * h * k2p),
                 k3p = fphi(y + 0.5 * h * k2y);
    const double k4y = fy(y + h * k3y, phi + h * k3p), k4p = fphi(y + h * k3y);
    y += h / 6.0 * (k1y + 2.0 * k2y + 2.0 * k3y + k4y);
    phi += h / 6.0 * (k1p + 2.0 * k2p + 2.0 * k3p + k4p);

    const auto& s = raw.samples[i];
    const double y_raw = s.phi_dot / (std::sqrt(6.0) * s.hubble);
    worst = std::max(worst, std::fabs(y_raw - y));
  }
  REQUIRE(worst < 1e-8);
}
