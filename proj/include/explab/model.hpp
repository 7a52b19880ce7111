#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

namespace explab {

/// Default relative tolerance for the Friedmann constraint check.
inline constexpr double kDefaultConstraintRelTol = 1e-10;

/// Drift of the expansion-normalized field velocity Y:
///   b(y) = (y^2 - 1)(3y + lambda).
inline double drift(double y, double lambda) { return (y * y - 1.0) * (3.0 * y + lambda); }

/// The noise enters with unit dispersion; kept as a named function so the
/// simulator reads like the SDE it integrates.
inline constexpr double dispersion() { return 1.0; }

/// db/dy = 9y^2 + 2*lambda*y - 3.
inline double drift_derivative(double y, double lambda) {
  return 9.0 * y * y + 2.0 * lambda * y - 3.0;
}

/// Right-hand side of the decoupled equation for X = sqrt(V/3)/H:
///   f(x) = 3x - 3x^3 + lambda * x * sqrt(1 - x^2).
/// Defined on [-1, 1] only; the square root makes it non-Lipschitz at the ends.
inline double x_rhs(double x, double lambda) {
  if (std::fabs(x) > 1.0) {
    throw std::domain_error("x_rhs: |x| > 1 (x = " + std::to_string(x) + ")");
  }
  return 3.0 * x - 3.0 * x * x * x + lambda * x * std::sqrt(1.0 - x * x);
}

/// Noise amplitude mapping the raw Langevin forcing onto the normalized
/// variables: eta = sqrt(6/H) * N.
inline double noise_rescale(double hubble) {
  if (!(hubble > 0.0)) {
    throw std::domain_error("noise_rescale: requires H > 0");
  }
  return std::sqrt(6.0 / hubble);
}

/// Monomial inflaton potential V(phi) = amplitude * phi^n.
class PowerLawPotential {
 public:
  PowerLawPotential(double exponent, double amplitude) : n_(exponent), amp_(amplitude) {
    if (!(std::isfinite(exponent) && std::isfinite(amplitude))) {
      throw std::invalid_argument("PowerLawPotential: non-finite parameter");
    }
    if (amplitude < 0.0) {
      throw std::invalid_argument("PowerLawPotential: amplitude must be >= 0");
    }
  }

  double exponent() const { return n_; }
  double amplitude() const { return amp_; }

  bool integer_exponent() const { return n_ == std::floor(n_); }

  double value(double phi) const {
    check_domain(phi);
    if (n_ == 0.0) return amp_;  // pow(0, 0) pitfalls
    return amp_ * std::pow(phi, n_);
  }

  /// dV/dphi = n * amplitude * phi^(n-1).
  double slope(double phi) const {
    check_domain(phi);
    if (n_ == 0.0) return 0.0;
    return n_ * amp_ * std::pow(phi, n_ - 1.0);
  }

  /// Steepness parameter lambda(phi) = sqrt(3/2) * V'/V = sqrt(3) n / (sqrt(2) phi).
  double lambda_param(double phi) const {
    check_domain(phi);
    if (n_ == 0.0) return 0.0;
    const double v = value(phi);
    if (v == 0.0) {
      throw std::domain_error("lambda_param: V(phi) = 0");
    }
    return std::sqrt(1.5) * slope(phi) / v;
  }

 private:
  void check_domain(double phi) const {
    if (phi < 0.0 && !integer_exponent()) {
      throw std::domain_error("PowerLawPotential: phi < 0 with non-integer exponent");
    }
  }

  double n_;
  double amp_;
};

/// Raw Friedmann-Langevin state (phi, H, f = phi_dot) on a spatially flat
/// slicing. Construction enforces H > 0 and the Friedmann constraint
///   3 H^2 = V(phi) + f^2/2 + ricci3/2
/// to the given relative tolerance, so downstream code can assume a
/// physically consistent state.
class RawState {
 public:
  RawState(double phi, double hubble, double phi_dot, const PowerLawPotential& pot,
           double rel_tol = kDefaultConstraintRelTol)
      : phi_(phi), hubble_(hubble), phi_dot_(phi_dot) {
    if (!(hubble > 0.0)) {
      throw std::invalid_argument("RawState: requires H > 0");
    }
    const double lhs = 3.0 * hubble * hubble;
    const double res = friedmann_residual(pot);
    if (!(std::fabs(res) <= rel_tol * lhs)) {
      throw std::invalid_argument("RawState: Friedmann constraint violated (residual " +
                                  std::to_string(res) + ", bound " +
                                  std::to_string(rel_tol * lhs) + ")");
    }
  }

  double phi() const { return phi_; }
  double hubble() const { return hubble_; }
  double phi_dot() const { return phi_dot_; }

  /// Spatial curvature term. Identically zero here; kept so the constraint
  /// formula below matches the general form.
  double ricci3() const { return ricci3_; }

  /// 3H^2 - V - f^2/2 - ricci3/2. Zero on the constraint surface.
  double friedmann_residual(const PowerLawPotential& pot) const {
    return 3.0 * hubble_ * hubble_ - pot.value(phi_) - 0.5 * phi_dot_ * phi_dot_ - 0.5 * ricci3_;
  }

 private:
  double phi_;
  double hubble_;
  double phi_dot_;
  double ricci3_ = 0.0;
};

struct RawDerivative {
  double dphi;
  double dhubble;
  double dphi_dot;
};

/// Deterministic part of the raw system:
///   phi' = f,  H' = -H^2 + (V - f^2)/3,  f' = -3 H f - V'(phi).
inline RawDerivative raw_rhs(const RawState& s, const PowerLawPotential& pot) {
  const double v = pot.value(s.phi());
  const double f = s.phi_dot();
  return RawDerivative{f, -s.hubble() * s.hubble() + (v - f * f) / 3.0,
                       -3.0 * s.hubble() * f - pot.slope(s.phi())};
}

/// Expansion-normalized state X = sqrt(V/3)/H, Y = f/(sqrt(6) H), constrained
/// to the unit circle X^2 + Y^2 = 1 within `tol`.
class NormalizedState {
 public:
  NormalizedState(double x, double y, double tol = 1e-10) : x_(x), y_(y) {
    if (!(tol >= 0.0)) throw std::invalid_argument("NormalizedState: tol must be >= 0");
    if (x < 0.0) {
      throw std::invalid_argument("NormalizedState: X must be >= 0 (V >= 0)");
    }
    if (std::fabs(y) > 1.0 + tol) {
      throw std::invalid_argument("NormalizedState: |Y| > 1");
    }
    if (std::fabs(x * x + y * y - 1.0) > tol) {
      throw std::invalid_argument("NormalizedState: X^2 + Y^2 != 1 (got " +
                                  std::to_string(x * x + y * y) + ")");
    }
  }

  double x() const { return x_; }
  double y() const { return y_; }

  /// Deceleration parameter q = 2Y^2 - X^2, recomputed on demand.
  double deceleration() const { return 2.0 * y_ * y_ - x_ * x_; }

 private:
  double x_;
  double y_;
};

inline NormalizedState normalize(const RawState& s, const PowerLawPotential& pot,
                                 double tol = 1e-10) {
  const double v = pot.value(s.phi());
  if (v < 0.0) throw std::domain_error("normalize: V(phi) < 0");
  return NormalizedState(std::sqrt(v / 3.0) / s.hubble(),
                         s.phi_dot() / (std::sqrt(6.0) * s.hubble()), tol);
}

inline double deceleration(const NormalizedState& s) { return s.deceleration(); }

/// Effective perfect-fluid view of the scalar field.
struct FluidState {
  double mu;  // energy density f^2/2 + V
  double p;   // pressure       f^2/2 - V

  static FluidState from_field(double phi_dot, double potential) {
    const double kin = 0.5 * phi_dot * phi_dot;
    return FluidState{kin + potential, kin - potential};
  }
};

/// Equation-of-state ratio p/mu. Degenerate (mu == 0) states are rejected.
inline double eos_ratio(double phi_dot, double potential) {
  const FluidState fl = FluidState::from_field(phi_dot, potential);
  if (fl.mu == 0.0) throw std::domain_error("eos_ratio: zero energy density");
  return fl.p / fl.mu;
}

/// Bundles the SDE dY = drift(Y) dtau + dW for a fixed steepness lambda.
struct SdeCoefficients {
  double lambda = 0.0;

  double drift(double y) const { return explab::drift(y, lambda); }
  double dispersion() const { return explab::dispersion(); }
};

}  // namespace explab
