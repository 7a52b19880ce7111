#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string_view>
#include <vector>

#include "explab/log_value.hpp"

namespace explab {

inline constexpr std::string_view kQuadratureRuleName = "gauss-kronrod-15(7)";

namespace detail {

// 15-point Kronrod extension of the 7-point Gauss rule on [-1, 1].
// Abscissae are the positive half in descending order, xk[7] = 0; the even
// indices interleave the Gauss-7 points which sit at xk[1], xk[3], xk[5].
inline constexpr std::array<double, 8> kGk15Nodes = {
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144838258730,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000};

inline constexpr std::array<double, 8> kGk15KronrodWeights = {
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714};

inline constexpr std::array<double, 4> kGk15GaussWeights = {
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327};

/// Evaluates p(x) = coeffs[0] + coeffs[1] x + ... by Horner's scheme.
inline double horner(std::span<const double> coeffs, double x) {
  double acc = 0.0;
  for (std::size_t i = coeffs.size(); i-- > 0;) acc = acc * x + coeffs[i];
  return acc;
}

}  // namespace detail

struct QuadratureResult {
  LogValue value;
  LogValue abs_error_estimate;
  std::size_t panels = 0;
  bool converged = false;
};

namespace detail {

struct Panel {
  double a;
  double b;
  double log_value;  // log of the (nonnegative) Kronrod estimate over [a, b]
  double log_error;  // log |kronrod - gauss|
};

/// One Gauss-Kronrod pass over [a, b] for integrand exp(log_f). All sums are
/// taken relative to the largest sampled log so a panel never overflows no
/// matter how large log_f gets.
template <typename LogF>
Panel gk15_log_panel(LogF&& log_f, double a, double b) {
  const double c = 0.5 * (a + b);
  const double h = 0.5 * (b - a);

  std::array<double, 15> g{};
  for (int i = 0; i < 7; ++i) {
    g[i] = log_f(c - h * kGk15Nodes[i]);
    g[14 - i] = log_f(c + h * kGk15Nodes[i]);
  }
  g[7] = log_f(c);

  double gmax = -std::numeric_limits<double>::infinity();
  for (double v : g) {
    if (std::isnan(v) || v == std::numeric_limits<double>::infinity()) {
      throw std::domain_error("log_integrate: integrand returned " + std::to_string(v) +
                              " near x = " + std::to_string(c));
    }
    gmax = std::max(gmax, v);
  }
  if (gmax == -std::numeric_limits<double>::infinity()) {
    // Integrand is zero on every node of this panel.
    return Panel{a, b, gmax, gmax};
  }

  double kron = 0.0;
  for (int i = 0; i < 7; ++i) {
    kron += kGk15KronrodWeights[i] * (std::exp(g[i] - gmax) + std::exp(g[14 - i] - gmax));
  }
  kron += kGk15KronrodWeights[7] * std::exp(g[7] - gmax);

  double gauss = 0.0;
  for (int i = 0; i < 3; ++i) {
    const int j = 2 * i + 1;  // Gauss points live at odd Kronrod indices
    gauss += kGk15GaussWeights[i] * (std::exp(g[j] - gmax) + std::exp(g[14 - j] - gmax));
  }
  gauss += kGk15GaussWeights[3] * std::exp(g[7] - gmax);

  const double log_h = std::log(h);
  const double diff = std::fabs(kron - gauss);
  return Panel{a, b,
               gmax + std::log(kron) + log_h,
               diff > 0.0 ? gmax + std::log(diff) + log_h
                          : -std::numeric_limits<double>::infinity()};
}

inline double log_add(double la, double lb) {
  if (la == -std::numeric_limits<double>::infinity()) return lb;
  if (lb == -std::numeric_limits<double>::infinity()) return la;
  const double m = std::max(la, lb);
  return m + std::log1p(std::exp(std::min(la, lb) - m));
}

}  // namespace detail

/// Adaptive Gauss-Kronrod integration of exp(log_f) over [a, b], carried out
/// entirely in the log domain. Returns log(integral) as a LogValue together
/// with an error estimate and an honest convergence flag: hitting max_panels
/// before err <= rel_tol * value reports converged = false rather than a
/// pretty number.
template <typename LogF>
QuadratureResult log_integrate(LogF&& log_f, double a, double b, double rel_tol = 1e-8,
                               std::size_t max_panels = 1000000) {
  if (!(a <= b)) throw std::invalid_argument("log_integrate: requires a <= b");
  if (!(rel_tol > 0.0)) throw std::invalid_argument("log_integrate: rel_tol must be positive");
  if (max_panels == 0) throw std::invalid_argument("log_integrate: max_panels must be >= 1");
  if (a == b) return QuadratureResult{LogValue::zero(), LogValue::zero(), 0, true};

  const double log_tol = std::log(rel_tol);
  // Absolute floor so a genuinely zero integral can still converge.
  const double log_floor = std::log(std::numeric_limits<double>::min());

  std::vector<detail::Panel> heap;  // max-heap on log_error
  heap.reserve(64);
  const auto err_less = [](const detail::Panel& p, const detail::Panel& q) {
    return p.log_error < q.log_error;
  };
  heap.push_back(detail::gk15_log_panel(log_f, a, b));

  std::vector<detail::Panel> settled;  // panels too narrow to split further

  const auto totals = [&]() {
    double lv = -std::numeric_limits<double>::infinity();
    double le = lv;
    for (const auto& p : heap) {
      lv = detail::log_add(lv, p.log_value);
      le = detail::log_add(le, p.log_error);
    }
    for (const auto& p : settled) {
      lv = detail::log_add(lv, p.log_value);
      le = detail::log_add(le, p.log_error);
    }
    return std::pair<double, double>(lv, le);
  };

  const auto done = [&](double lv, double le) {
    return le <= log_tol + std::max(lv, log_floor);
  };

  std::size_t since_check = 0;
  bool tol_met = false;
  while (!heap.empty()) {
    if (heap.size() + settled.size() >= max_panels) break;

    // Re-checking the global tolerance costs a full pass, so amortize it.
    if (since_check++ >= (heap.size() + settled.size()) / 64) {
      since_check = 0;
      const auto [lv, le] = totals();
      if (done(lv, le)) {
        tol_met = true;
        break;
      }
    }

    std::pop_heap(heap.begin(), heap.end(), err_less);
    detail::Panel worst = heap.back();
    heap.pop_back();

    const double mid = 0.5 * (worst.a + worst.b);
    const double min_width =
        std::numeric_limits<double>::epsilon() * std::max({std::fabs(worst.a), std::fabs(worst.b), 1.0});
    if (worst.log_error == -std::numeric_limits<double>::infinity() ||
        worst.b - worst.a <= min_width || mid <= worst.a || mid >= worst.b) {
      settled.push_back(worst);
      continue;
    }

    heap.push_back(detail::gk15_log_panel(log_f, worst.a, mid));
    std::push_heap(heap.begin(), heap.end(), err_less);
    heap.push_back(detail::gk15_log_panel(log_f, mid, worst.b));
    std::push_heap(heap.begin(), heap.end(), err_less);
  }

  // Final accumulation in a canonical order (left to right) so the result is
  // independent of heap internals.
  std::vector<detail::Panel> leaves;
  leaves.reserve(heap.size() + settled.size());
  leaves.insert(leaves.end(), heap.begin(), heap.end());
  leaves.insert(leaves.end(), settled.begin(), settled.end());
  std::sort(leaves.begin(), leaves.end(),
            [](const detail::Panel& p, const detail::Panel& q) { return p.a < q.a; });

  double lv = -std::numeric_limits<double>::infinity();
  double le = lv;
  for (const auto& p : leaves) {
    lv = detail::log_add(lv, p.log_value);
    le = detail::log_add(le, p.log_error);
  }

  QuadratureResult out;
  out.value = LogValue::from_log(lv);
  out.abs_error_estimate = LogValue::from_log(le);
  out.panels = leaves.size();
  out.converged = tol_met || done(lv, le);
  return out;
}

/// Integral of exp(polynomial) with coefficients in ascending order, degree
/// at most 8. This is the only integrand shape the explosion test needs.
inline QuadratureResult integrate_exp_poly(std::span<const double> coeffs, double a, double b,
                                           double rel_tol = 1e-8,
                                           std::size_t max_panels = 1000000) {
  if (coeffs.empty() || coeffs.size() > 9) {
    throw std::invalid_argument("integrate_exp_poly: need 1..9 coefficients (degree <= 8)");
  }
  for (double c : coeffs) {
    if (!std::isfinite(c)) throw std::invalid_argument("integrate_exp_poly: non-finite coefficient");
  }
  return log_integrate([coeffs](double s) { return detail::horner(coeffs, s); }, a, b, rel_tol,
                       max_panels);
}

}  // namespace explab
