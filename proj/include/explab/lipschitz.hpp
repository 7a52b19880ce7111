#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <utility>
#include <vector>

#include "explab/model.hpp"
#include "explab/wiener.hpp"

namespace explab {

/// Half-width of the band around |X| = 1 where x_rhs_derivative refuses to
/// evaluate: there 1/sqrt(1 - X^2) exceeds ~1e6 and the derivative is no
/// longer numerically meaningful.
inline constexpr double kXDerivativeSingularBand = 1e-12;

struct LipschitzReport {
  double a = 0.0;
  double b = 0.0;
  double lambda = 0.0;
  double analytic_constant = 0.0;   // sup |b'| over [a, b], closed form
  double sampled_constant = 0.0;    // max difference quotient over random pairs
  std::pair<double, double> witness{0.0, 0.0};  // pair attaining the sampled max
  std::size_t sample_pairs = 0;
};

/// Local Lipschitz constant of the drift on [a, b]. The derivative
/// 9y^2 + 2 lambda y - 3 is a parabola, so the sup of |b'| sits at an
/// endpoint or at the vertex y = -lambda/9; sampling difference quotients
/// cross-checks the closed form.
inline LipschitzReport local_lipschitz_constant(double a, double b, double lambda,
                                                std::size_t sample_pairs = 10000,
                                                std::uint64_t seed = 20260814) {
  if (!(a <= b)) throw std::invalid_argument("local_lipschitz_constant: requires a <= b");
  if (!std::isfinite(a) || !std::isfinite(b) || !std::isfinite(lambda)) {
    throw std::invalid_argument("local_lipschitz_constant: non-finite input");
  }

  LipschitzReport rep;
  rep.a = a;
  rep.b = b;
  rep.lambda = lambda;

  double sup = std::max(std::fabs(drift_derivative(a, lambda)),
                        std::fabs(drift_derivative(b, lambda)));
  const double vertex = -lambda / 9.0;
  if (vertex > a && vertex < b) {
    sup = std::max(sup, std::fabs(drift_derivative(vertex, lambda)));
  }
  rep.analytic_constant = sup;

  if (a == b || sample_pairs == 0) {
    rep.witness = {a, b};
    return rep;
  }

  std::mt19937_64 eng = make_stream_engine(seed, 0);
  std::uniform_real_distribution<double> uni(a, b);
  double best = 0.0;
  std::pair<double, double> best_pair{a, b};
  std::size_t used = 0;
  for (std::size_t i = 0; i < sample_pairs; ++i) {
    const double x = uni(eng);
    const double y = uni(eng);
    if (x == y) continue;
    const double q = std::fabs(drift(x, lambda) - drift(y, lambda)) / std::fabs(x - y);
    ++used;
    if (q > best) {
      best = q;
      best_pair = {x, y};
    }
  }
  rep.sampled_constant = best;
  rep.witness = best_pair;
  rep.sample_pairs = used;
  return rep;
}

struct FalsificationWitness {
  double x = 0.0;
  double y = 0.0;
  double quotient = 0.0;  // |b(x) - b(y)| / |x - y|
  double k = 0.0;         // the candidate constant it beats
};

/// Produces a concrete pair violating |b(x) - b(y)| <= K |x - y| for any
/// proposed K > 0: the cubic drift grows like 3y^3, so quotients at unit
/// separation grow quadratically and overtake every candidate constant.
inline FalsificationWitness global_lipschitz_falsify(double lambda, double k) {
  if (!(k > 0.0)) throw std::invalid_argument("global_lipschitz_falsify: requires K > 0");
  if (!std::isfinite(lambda)) {
    throw std::invalid_argument("global_lipschitz_falsify: lambda must be finite");
  }

  // |b(x+1) - b(x)| ~ 9x^2 for large x, so sqrt(K) sets the scale; the
  // doubling loop mops up modest-lambda corrections.
  double x = std::max({4.0, std::sqrt(k), std::fabs(lambda)});
  for (int attempt = 0; attempt < 64; ++attempt) {
    const double y = x + 1.0;
    const double q = std::fabs(drift(x, lambda) - drift(y, lambda));  // |x - y| = 1
    if (q > k && std::isfinite(q)) {
      return FalsificationWitness{x, y, q, k};
    }
    x *= 2.0;
  }
  // Unreachable for finite inputs; kept as a hard failure rather than a lie.
  throw std::logic_error("global_lipschitz_falsify: no witness found");
}

/// d/dx of x_rhs: 3 - 9x^2 + lambda (1 - 2x^2) / sqrt(1 - x^2). Refuses the
/// band |x| > 1 - kXDerivativeSingularBand where the final term blows up.
inline double x_rhs_derivative(double x, double lambda) {
  if (std::fabs(x) > 1.0 - kXDerivativeSingularBand) {
    throw std::domain_error("x_rhs_derivative: |x| too close to 1 (non-Lipschitz band)");
  }
  const double root = std::sqrt(1.0 - x * x);
  return 3.0 - 9.0 * x * x + lambda * (1.0 - 2.0 * x * x) / root;
}

struct XExistenceReport {
  double lambda = 0.0;
  double sub_a = 0.0;
  double sub_b = 0.0;
  double sup_abs_derivative_on_sub = 0.0;  // finite: unique local solutions inside
  // |f'(x_k)| along x_k = 1 - 2^-k, marching into the boundary.
  std::vector<std::pair<double, double>> divergence_samples;
  bool derivative_bounded_at_boundary = false;
};

/// Existence/uniqueness picture for the X equation: Lipschitz on any closed
/// sub-interval of (-1, 1) (Picard applies locally), derivative blowing up at
/// the endpoints whenever lambda != 0 (so uniqueness arguments stop at the
/// boundary). For lambda == 0 the square-root term is absent and the
/// derivative stays bounded all the way in.
inline XExistenceReport x_existence_report(double lambda, double sub_a = -0.9, double sub_b = 0.9,
                                           int k_max = 30) {
  if (!(sub_a <= sub_b) || std::fabs(sub_a) >= 1.0 || std::fabs(sub_b) >= 1.0) {
    throw std::invalid_argument("x_existence_report: need -1 < sub_a <= sub_b < 1");
  }
  if (k_max < 2) throw std::invalid_argument("x_existence_report: k_max must be >= 2");
  if (1.0 - std::pow(2.0, -k_max) > 1.0 - kXDerivativeSingularBand) {
    throw std::invalid_argument("x_existence_report: k_max reaches the singular band");
  }

  XExistenceReport rep;
  rep.lambda = lambda;
  rep.sub_a = sub_a;
  rep.sub_b = sub_b;

  // Dense scan; the derivative is smooth on the closed sub-interval so this
  // nails the sup to plotting accuracy, which is all the report claims.
  const int n = 20000;
  double sup = 0.0;
  for (int i = 0; i <= n; ++i) {
    const double x = sub_a + (sub_b - sub_a) * static_cast<double>(i) / n;
    sup = std::max(sup, std::fabs(x_rhs_derivative(x, lambda)));
  }
  rep.sup_abs_derivative_on_sub = sup;

  for (int k = 1; k <= k_max; ++k) {
    const double x = 1.0 - std::pow(2.0, -k);
    rep.divergence_samples.emplace_back(x, std::fabs(x_rhs_derivative(x, lambda)));
  }

  // The sqrt term carries the only unbounded piece: lambda != 0 grows like
  // 2^(k/2) along the samples, lambda == 0 leaves the polynomial 3 - 9x^2
  // which tends to -6. This is exact, so no tail heuristic is needed.
  rep.derivative_bounded_at_boundary = (lambda == 0.0);
  return rep;
}

}  // namespace explab
