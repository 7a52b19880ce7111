#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <thread>
#include <type_traits>
#include <vector>

#include "explab/log_value.hpp"
#include "explab/quadrature.hpp"

namespace explab {

/// Two antiderivative conventions for the drift (y^2-1)(3y+lambda). They
/// differ by lambda -> -lambda in the odd terms, so results under one map to
/// the other by flipping the sign of lambda; keeping both makes that symmetry
/// directly testable instead of folklore.
enum class ScaleConvention { Definition, PaperExpanded };

inline const char* to_string(ScaleConvention c) {
  return c == ScaleConvention::Definition ? "definition" : "paper_expanded";
}

inline ScaleConvention scale_convention_from_string(const std::string& s) {
  if (s == "definition") return ScaleConvention::Definition;
  if (s == "paper_expanded") return ScaleConvention::PaperExpanded;
  throw std::invalid_argument("unknown scale convention: " + s);
}

/// Everything the explosion test needs to know: model parameter, anchor
/// point, convention, boundary-march depth and the thresholds that turn raw
/// magnitudes into Finite/Divergent calls.
struct ScaleSpeedConfig {
  double lambda = 0.0;
  double zeta = 0.0;  // interior anchor of the scale/speed integrals
  ScaleConvention convention = ScaleConvention::Definition;
  int k_max = 40;  // evidence points x_k = +/-(1 - 2^-k), k = 1..k_max
  // Natural-log magnitude above which a monotone tail is declared numerically
  // divergent (500 corresponds to about 10^217).
  double divergence_log_threshold = 500.0;
  double cauchy_rel_tol = 1e-3;   // relative stall defining a convergent tail
  double quad_rel_tol = 1e-8;
  std::size_t quad_max_panels = 1000000;

  void validate() const {
    if (!std::isfinite(lambda)) throw std::invalid_argument("ScaleSpeedConfig: non-finite lambda");
    if (!(std::fabs(zeta) < 1.0)) {
      throw std::invalid_argument("ScaleSpeedConfig: zeta must lie in (-1, 1)");
    }
    if (k_max < 4 || k_max > 100) {
      throw std::invalid_argument("ScaleSpeedConfig: k_max must be in [4, 100]");
    }
    if (!(divergence_log_threshold > 0.0)) {
      throw std::invalid_argument("ScaleSpeedConfig: divergence_log_threshold must be > 0");
    }
    if (!(cauchy_rel_tol > 0.0 && cauchy_rel_tol < 1.0)) {
      throw std::invalid_argument("ScaleSpeedConfig: cauchy_rel_tol must be in (0, 1)");
    }
    if (!(quad_rel_tol > 0.0)) {
      throw std::invalid_argument("ScaleSpeedConfig: quad_rel_tol must be > 0");
    }
    if (quad_max_panels == 0) {
      throw std::invalid_argument("ScaleSpeedConfig: quad_max_panels must be >= 1");
    }
  }
};

/// Antiderivative A of the drift under the chosen convention:
///   Definition:    3x^4/4 + lambda x^3/3 - 3x^2/2 - lambda x
///   PaperExpanded: 3x^4/4 - lambda x^3/3 - 3x^2/2 + lambda x
/// The two evaluate term-for-term identically under lambda -> -lambda, which
/// downstream tests rely on to the last bit.
inline double drift_antiderivative(double x, double lambda, ScaleConvention c) {
  const double x2 = x * x;
  const double quart = 0.75 * x2 * x2;
  const double cub = lambda * x2 * x / 3.0;
  const double sq = 1.5 * x2;
  const double lin = lambda * x;
  if (c == ScaleConvention::Definition) return quart + cub - sq - lin;
  return quart - cub - sq + lin;
}

/// log p'(x) = -2 (A(x) - A(zeta)).
inline double log_scale_density(double x, const ScaleSpeedConfig& cfg) {
  return -2.0 * (drift_antiderivative(x, cfg.lambda, cfg.convention) -
                 drift_antiderivative(cfg.zeta, cfg.lambda, cfg.convention));
}

/// Ascending coefficients of the quartic polynomial equal to
/// log_scale_density; this is the exact integrand handed to the quadrature.
inline std::array<double, 5> log_scale_density_poly(const ScaleSpeedConfig& cfg) {
  const double sgn = cfg.convention == ScaleConvention::Definition ? 1.0 : -1.0;
  return {2.0 * drift_antiderivative(cfg.zeta, cfg.lambda, cfg.convention),
          sgn * 2.0 * cfg.lambda, 3.0, -sgn * 2.0 * cfg.lambda / 3.0, -1.5};
}

namespace detail {

inline void check_eval_point(double x) {
  if (!(std::fabs(x) <= 1.0)) {
    throw std::invalid_argument("scale/speed evaluation point must lie in [-1, 1]");
  }
}

/// Inner speed integrand coefficients: 2 / p'(z) = exp(ln 2 - log p'(z)).
inline std::array<double, 5> speed_inner_poly(const std::array<double, 5>& scale_poly) {
  constexpr double kLn2 = 0.6931471805599453094;
  return {kLn2 - scale_poly[0], -scale_poly[1], -scale_poly[2], -scale_poly[3], -scale_poly[4]};
}

}  // namespace detail

/// Scale function p(x) = integral from zeta to x of exp(log_scale_density).
/// Negative for x < zeta, zero at zeta. The value rides in log space, so
/// lambda in the thousands (where p tops exp(10^4)) is business as usual.
inline QuadratureResult scale_function_quad(double x, const ScaleSpeedConfig& cfg) {
  cfg.validate();
  detail::check_eval_point(x);
  if (x == cfg.zeta) return QuadratureResult{LogValue::zero(), LogValue::zero(), 0, true};
  const auto poly = log_scale_density_poly(cfg);
  QuadratureResult r = integrate_exp_poly(poly, std::min(x, cfg.zeta), std::max(x, cfg.zeta),
                                          cfg.quad_rel_tol, cfg.quad_max_panels);
  if (x < cfg.zeta) r.value = -r.value;
  return r;
}

inline LogValue scale_function(double x, const ScaleSpeedConfig& cfg) {
  return scale_function_quad(x, cfg).value;
}

namespace detail {

/// Outer speed integrand at y, as a log magnitude:
///   log p'(y) + log | integral from zeta to y of 2/p'(z) dz |.
/// The inner integral is re-anchored at zeta for every y; convergence
/// failures are accumulated into *inner_ok rather than silently dropped.
template <typename PolyT>
double log_speed_outer(double y, const PolyT& scale_poly, const PolyT& inner_poly, double zeta,
                       double rel_tol, std::size_t max_panels, bool* inner_ok) {
  const QuadratureResult inner =
      integrate_exp_poly(std::span<const double>(inner_poly.data(), inner_poly.size()),
                         std::min(y, zeta), std::max(y, zeta), rel_tol, max_panels);
  if (!inner.converged) *inner_ok = false;
  return horner(std::span<const double>(scale_poly.data(), scale_poly.size()), y) +
         inner.value.log_magnitude();
}

/// Speed measure of [lo, hi] on one side of zeta: integral of
/// p'(y) |I(y)| dy, always nonnegative.
inline QuadratureResult speed_segment(double lo, double hi, const std::array<double, 5>& scale_poly,
                                      const ScaleSpeedConfig& cfg) {
  const auto inner_poly = speed_inner_poly(scale_poly);
  bool inner_ok = true;
  QuadratureResult r = log_integrate(
      [&](double y) {
        return log_speed_outer(y, scale_poly, inner_poly, cfg.zeta, cfg.quad_rel_tol,
                               cfg.quad_max_panels, &inner_ok);
      },
      lo, hi, cfg.quad_rel_tol, cfg.quad_max_panels);
  r.converged = r.converged && inner_ok;
  return r;
}

}  // namespace detail

/// Speed-style repeated integral
///   v(x) = integral zeta..x of p'(y) [ integral zeta..y of 2/p'(z) dz ] dy,
/// which is nonnegative on both sides of zeta. Feller's test reads explosion
/// off the boundary limits of this function and of p.
inline QuadratureResult speed_integral_quad(double x, const ScaleSpeedConfig& cfg) {
  cfg.validate();
  detail::check_eval_point(x);
  if (x == cfg.zeta) return QuadratureResult{LogValue::zero(), LogValue::zero(), 0, true};
  const auto poly = log_scale_density_poly(cfg);
  return detail::speed_segment(std::min(x, cfg.zeta), std::max(x, cfg.zeta), poly, cfg);
}

inline LogValue speed_integral(double x, const ScaleSpeedConfig& cfg) {
  return speed_integral_quad(x, cfg).value;
}

enum class LimitClass { Finite, Divergent, Undetermined };

inline const char* to_string(LimitClass c) {
  switch (c) {
    case LimitClass::Finite: return "finite";
    case LimitClass::Divergent: return "divergent";
    default: return "undetermined";
  }
}

enum class BoundarySide { Left = -1, Right = 1 };

struct BoundaryPoint {
  int k = 0;
  double x = 0.0;
  LogValue value;
  bool ok = true;  // quadrature for this point converged
};

/// Numeric limit classification at one boundary. `evidence` holds the whole
/// march so reports and plots can show their work.
struct BoundaryLimit {
  LimitClass verdict = LimitClass::Undetermined;
  LogValue limit_value;      // last stable value when verdict == Finite
  int divergence_sign = 0;   // sign of the blow-up when verdict == Divergent
  std::vector<BoundaryPoint> evidence;
};

namespace detail {

struct LimitEval {
  LogValue value;
  bool ok = true;
};

template <typename Fn>
LimitEval invoke_limit_fn(Fn&& fn, double x) {
  using R = std::decay_t<std::invoke_result_t<Fn&, double>>;
  if constexpr (std::is_same_v<R, LimitEval>) {
    return fn(x);
  } else if constexpr (std::is_same_v<R, LogValue>) {
    return LimitEval{fn(x), true};
  } else {
    return LimitEval{LogValue::from_double(fn(x)), true};
  }
}

}  // namespace detail

/// Evaluates fn along x_k = side * (1 - 2^-k), k = 1..k_max, and classifies
/// the tail. Divergence is checked first: a magnitude beyond the threshold
/// with a nondecreasing tail reads as numerically infinite even when the
/// march has saturated (for large lambda the values stall at exp(10^3) and
/// beyond, which is still infinity for every purpose this test has). A tail
/// that is Cauchy at cauchy_rel_tol without crossing the threshold is Finite;
/// anything else, including quadrature failures, stays Undetermined with the
/// partial evidence attached.
template <typename Fn>
BoundaryLimit boundary_limit(Fn&& fn, BoundarySide side, const ScaleSpeedConfig& cfg) {
  cfg.validate();
  const double sgn = side == BoundarySide::Right ? 1.0 : -1.0;

  BoundaryLimit out;
  bool failed = false;
  for (int k = 1; k <= cfg.k_max; ++k) {
    const double x = sgn * (1.0 - std::pow(2.0, -k));
    BoundaryPoint pt;
    pt.k = k;
    pt.x = x;
    try {
      const detail::LimitEval e = detail::invoke_limit_fn(fn, x);
      pt.value = e.value;
      pt.ok = e.ok;
    } catch (const std::exception&) {
      pt.ok = false;
    }
    out.evidence.push_back(pt);
    if (!pt.ok) {
      failed = true;
      break;
    }
  }
  if (failed) {
    out.verdict = LimitClass::Undetermined;
    return out;
  }

  const auto& ev = out.evidence;
  const std::size_t n = ev.size();
  const LogValue last = ev.back().value;

  // Tail must not lose magnitude (beyond the stall tolerance) for a
  // divergence call; log1p(-tol) is the allowed per-step slack.
  const std::size_t tail = std::min<std::size_t>(5, n - 1);
  bool nondecreasing = true;
  for (std::size_t i = n - tail; i < n; ++i) {
    nondecreasing = nondecreasing &&
                    ev[i].value.log_magnitude() >=
                        ev[i - 1].value.log_magnitude() + std::log1p(-cfg.cauchy_rel_tol);
  }
  if (last.log_magnitude() > cfg.divergence_log_threshold && nondecreasing) {
    out.verdict = LimitClass::Divergent;
    out.divergence_sign = last.sign();
    out.limit_value = last;
    return out;
  }

  // Cauchy tail: the final three increments are small relative to the value.
  bool cauchy = true;
  for (std::size_t i = n - std::min<std::size_t>(3, n - 1); i < n; ++i) {
    const LogValue diff = ev[i].value - ev[i - 1].value;
    const double scale = std::max(ev[i].value.log_magnitude(),
                                  std::log(std::numeric_limits<double>::min()));
    cauchy = cauchy && diff.log_magnitude() <= std::log(cfg.cauchy_rel_tol) + scale;
  }
  if (cauchy) {
    out.verdict = LimitClass::Finite;
    out.limit_value = last;
    return out;
  }

  out.verdict = LimitClass::Undetermined;
  return out;
}

/// Which disjunct of the explosion criterion fired.
enum class ExplosionCondition { Cond1, Cond2, Cond3, None, Undetermined };

inline const char* to_string(ExplosionCondition c) {
  switch (c) {
    case ExplosionCondition::Cond1: return "cond1";
    case ExplosionCondition::Cond2: return "cond2";
    case ExplosionCondition::Cond3: return "cond3";
    case ExplosionCondition::None: return "none";
    default: return "undetermined";
  }
}

struct FellerVerdict {
  ScaleSpeedConfig config;
  BoundaryLimit v_left;
  BoundaryLimit v_right;
  BoundaryLimit p_left;
  BoundaryLimit p_right;
  ExplosionCondition condition_met = ExplosionCondition::Undetermined;
  // Unset when the numerics could not resolve a condition either way; this is
  // deliberately not the same thing as "false".
  std::optional<bool> explodes_wp1;
};

namespace detail {

enum class Tri { True, False, Unknown };

inline Tri tri_and(Tri a, Tri b) {
  if (a == Tri::False || b == Tri::False) return Tri::False;
  if (a == Tri::Unknown || b == Tri::Unknown) return Tri::Unknown;
  return Tri::True;
}

inline Tri finite_limit(const BoundaryLimit& b) {
  switch (b.verdict) {
    case LimitClass::Finite: return Tri::True;
    case LimitClass::Divergent: return Tri::False;
    default: return Tri::Unknown;
  }
}

inline Tri divergent_limit(const BoundaryLimit& b, int want_sign) {
  switch (b.verdict) {
    case LimitClass::Divergent: return b.divergence_sign == want_sign ? Tri::True : Tri::False;
    case LimitClass::Finite: return Tri::False;
    default: return Tri::Unknown;
  }
}

/// Marches p or v outward from zeta, reusing the already-accumulated value so
/// each evidence point costs one segment integral instead of an integral over
/// the whole range. `speed` selects the repeated integral; otherwise plain p.
class IncrementalBoundaryEval {
 public:
  IncrementalBoundaryEval(const ScaleSpeedConfig& cfg, bool speed)
      : cfg_(cfg), poly_(log_scale_density_poly(cfg)), speed_(speed), prev_(cfg.zeta) {}

  LimitEval operator()(double x) {
    if (x == prev_) return LimitEval{acc_, ok_};
    const double zeta = cfg_.zeta;
    QuadratureResult seg;
    if (speed_) {
      if ((prev_ - zeta) * (x - zeta) < 0.0) {
        // Crossed the anchor: restart the accumulation from zeta.
        acc_ = LogValue::zero();
        seg = speed_segment(std::min(x, zeta), std::max(x, zeta), poly_, cfg_);
        acc_ = seg.value;
      } else {
        seg = speed_segment(std::min(x, prev_), std::max(x, prev_), poly_, cfg_);
        // v grows away from zeta on both sides; marching back toward zeta
        // (possible when |zeta| > 1/2 puts early evidence points behind it)
        // subtracts the segment instead.
        const bool outward = std::fabs(x - zeta) >= std::fabs(prev_ - zeta);
        acc_ = outward ? acc_ + seg.value : acc_ - seg.value;
      }
    } else {
      seg = integrate_exp_poly(std::span<const double>(poly_.data(), poly_.size()),
                               std::min(x, prev_), std::max(x, prev_), cfg_.quad_rel_tol,
                               cfg_.quad_max_panels);
      acc_ = x > prev_ ? acc_ + seg.value : acc_ - seg.value;
    }
    ok_ = ok_ && seg.converged;
    prev_ = x;
    return LimitEval{acc_, ok_};
  }

 private:
  ScaleSpeedConfig cfg_;
  std::array<double, 5> poly_;
  bool speed_;
  double prev_;
  LogValue acc_;
  bool ok_ = true;
};

}  // namespace detail

/// Full explosion test at one lambda: classify v and p at both boundaries,
/// then evaluate the three-condition disjunction in three-valued logic so an
/// Undetermined limit never silently becomes a "no".
inline FellerVerdict feller_test(double lambda, ScaleSpeedConfig cfg) {
  cfg.lambda = lambda;
  cfg.validate();

  FellerVerdict verdict;
  verdict.config = cfg;

  detail::IncrementalBoundaryEval p_left_eval(cfg, false);
  detail::IncrementalBoundaryEval p_right_eval(cfg, false);
  detail::IncrementalBoundaryEval v_left_eval(cfg, true);
  detail::IncrementalBoundaryEval v_right_eval(cfg, true);

  verdict.p_left = boundary_limit(p_left_eval, BoundarySide::Left, cfg);
  verdict.p_right = boundary_limit(p_right_eval, BoundarySide::Right, cfg);
  verdict.v_left = boundary_limit(v_left_eval, BoundarySide::Left, cfg);
  verdict.v_right = boundary_limit(v_right_eval, BoundarySide::Right, cfg);

  using detail::Tri;
  const Tri cond1 = detail::tri_and(detail::finite_limit(verdict.v_right),
                                    detail::finite_limit(verdict.v_left));
  const Tri cond2 = detail::tri_and(detail::finite_limit(verdict.v_right),
                                    detail::divergent_limit(verdict.p_left, -1));
  const Tri cond3 = detail::tri_and(detail::finite_limit(verdict.v_left),
                                    detail::divergent_limit(verdict.p_right, 1));

  if (cond1 == Tri::True) {
    verdict.condition_met = ExplosionCondition::Cond1;
    verdict.explodes_wp1 = true;
  } else if (cond2 == Tri::True) {
    verdict.condition_met = ExplosionCondition::Cond2;
    verdict.explodes_wp1 = true;
  } else if (cond3 == Tri::True) {
    verdict.condition_met = ExplosionCondition::Cond3;
    verdict.explodes_wp1 = true;
  } else if (cond1 == Tri::Unknown || cond2 == Tri::Unknown || cond3 == Tri::Unknown) {
    verdict.condition_met = ExplosionCondition::Undetermined;
    verdict.explodes_wp1.reset();
  } else {
    verdict.condition_met = ExplosionCondition::None;
    verdict.explodes_wp1 = false;
  }
  return verdict;
}

struct SweepRow {
  double lambda = 0.0;
  std::optional<FellerVerdict> verdict;
  std::string error;  // non-empty when the test threw for this lambda
};

/// Runs feller_test over a lambda grid. Each row is independent; a failure in
/// one lambda is recorded in its row and the sweep carries on. Rows are
/// computed (possibly in parallel) and reported in grid order.
inline std::vector<SweepRow> lambda_sweep(std::span<const double> grid,
                                          const ScaleSpeedConfig& base, unsigned workers = 1) {
  std::vector<SweepRow> rows(grid.size());
  if (workers == 0) workers = 1;

  const auto run_range = [&](std::size_t lo, std::size_t hi) {
    for (std::size_t i = lo; i < hi; ++i) {
      rows[i].lambda = grid[i];
      try {
        rows[i].verdict = feller_test(grid[i], base);
      } catch (const std::exception& e) {
        rows[i].error = e.what();
      }
    }
  };

  const unsigned n_workers =
      static_cast<unsigned>(std::min<std::size_t>(workers, grid.size() == 0 ? 1 : grid.size()));
  if (n_workers <= 1) {
    run_range(0, grid.size());
  } else {
    std::vector<std::thread> pool;
    const std::size_t chunk = (grid.size() + n_workers - 1) / n_workers;
    for (unsigned w = 0; w < n_workers; ++w) {
      const std::size_t lo = static_cast<std::size_t>(w) * chunk;
      const std::size_t hi = std::min(grid.size(), lo + chunk);
      if (lo >= hi) break;
      pool.emplace_back(run_range, lo, hi);
    }
    for (auto& t : pool) t.join();
  }
  return rows;
}

}  // namespace explab
