#include "explab/feller.hpp"

#include <catch2/catch_amalgamated.hpp>

#include "explab/model.hpp"
#include <cmath>
#include <random>
#include <vector>

#include "oracles.hpp"

using namespace explab;
using Catch::Approx;

namespace {
ScaleSpeedConfig cfg_at(double lambda, double zeta = 0.0,
                        ScaleConvention conv = ScaleConvention::Definition) {
  ScaleSpeedConfig cfg;
  cfg.lambda = lambda;
  cfg.zeta = zeta;
  cfg.convention = conv;
  return cfg;
}
}  // namespace

TEST_CASE("drift antiderivative under both conventions") {
  REQUIRE(drift_antiderivative(1.0, 3.0, ScaleConvention::Definition) ==
          Approx(-2.75).epsilon(1e-15));
  REQUIRE(drift_antiderivative(1.0, 3.0, ScaleConvention::PaperExpanded) ==
          Approx(1.25).epsilon(1e-15));

  // d/dx of the Definition form is the drift itself; the PaperExpanded form
  // differentiates to the drift with lambda negated.
  const double h = 1e-6;
  for (double x : {-0.8, 0.3, 0.9}) {
    for (double l : {0.0, 7.5, -4.0}) {
      const double fd_def = (drift_antiderivative(x + h, l, ScaleConvention::Definition) -
                             drift_antiderivative(x - h, l, ScaleConvention::Definition)) /
                            (2.0 * h);
      REQUIRE(fd_def == Approx(drift(x, l)).margin(2e-8));
      const double fd_pe = (drift_antiderivative(x + h, l, ScaleConvention::PaperExpanded) -
                            drift_antiderivative(x - h, l, ScaleConvention::PaperExpanded)) /
                           (2.0 * h);
      REQUIRE(fd_pe == Approx(drift(x, -l)).margin(2e-8));
    }
  }
}

TEST_CASE("log scale density values") {
  REQUIRE(log_scale_density(1.0, cfg_at(100.0)) == Approx(134.833333333333).epsilon(1e-12));
  REQUIRE(log_scale_density(1.0, cfg_at(100.0, 0.0, ScaleConvention::PaperExpanded)) ==
          Approx(-131.833333333333).epsilon(1e-12));
  // zero at the anchor by construction
  REQUIRE(log_scale_density(0.37, cfg_at(5.0, 0.37)) == 0.0);
}

TEST_CASE("convention duality: paper_expanded(lambda) equals definition(-lambda) bit for bit") {
  std::mt19937_64 eng(99);
  std::uniform_real_distribution<double> ux(-0.99, 0.99);
  std::uniform_real_distribution<double> umag(-2.0, 6.0);
  std::bernoulli_distribution coin;
  for (int i = 0; i < 1000; ++i) {
    const double x = ux(eng);
    const double zeta = ux(eng);
    const double lambda = (coin(eng) ? 1.0 : -1.0) * std::pow(10.0, umag(eng));
    const double pe = log_scale_density(x, cfg_at(lambda, zeta, ScaleConvention::PaperExpanded));
    const double def = log_scale_density(x, cfg_at(-lambda, zeta, ScaleConvention::Definition));
    REQUIRE(pe == def);  // exact: the two paths perform identical operations
  }
}

TEST_CASE("scale function against frozen references") {
  REQUIRE(scale_function(0.5, cfg_at(0.0)).to_double() == Approx(0.643207618529).epsilon(1e-9));
  REQUIRE(scale_function(1.0, cfg_at(0.0)).to_double() == Approx(2.30663001256).epsilon(1e-9));
  REQUIRE(scale_function(-0.5, cfg_at(0.0)).to_double() ==
          Approx(-0.643207618529).epsilon(1e-9));
  REQUIRE(scale_function(0.8, cfg_at(1.0)).to_double() == Approx(3.68837431575).epsilon(1e-9));
  REQUIRE(scale_function(-0.75, cfg_at(10.0)).to_double() ==
          Approx(-0.0510860189412).epsilon(1e-9));
  REQUIRE(scale_function(0.4, cfg_at(10.0)).to_double() == Approx(156.437378046).epsilon(1e-9));
  REQUIRE(scale_function(0.0, cfg_at(17.0)).is_zero());
}

TEST_CASE("scale function against an independent trapezoid oracle") {
  for (double lambda : {0.0, 1.0, 10.0}) {
    for (double x : {-0.75, 0.4, 0.8}) {
      const double mine = scale_function(x, cfg_at(lambda)).to_double();
      const double ref = oracle::scale_fn(x, 0.0, lambda, 1000000);
      REQUIRE(mine == Approx(ref).epsilon(1e-8));
    }
  }
  // off-center anchor
  const double mine = scale_function(0.9, cfg_at(2.0, -0.3)).to_double();
  REQUIRE(mine == Approx(oracle::scale_fn(0.9, -0.3, 2.0, 1000000)).epsilon(1e-8));
}

TEST_CASE("scale function quadrature metadata") {
  const QuadratureResult r = scale_function_quad(0.8, cfg_at(1.0));
  REQUIRE(r.converged);
  REQUIRE(r.panels >= 1);
  REQUIRE(r.abs_error_estimate.log_magnitude() <= std::log(1e-7) + r.value.log_magnitude());
  REQUIRE_THROWS_AS(scale_function(1.5, cfg_at(0.0)), std::invalid_argument);
}

TEST_CASE("scale function far beyond double range") {
  // lambda = 1000 at the k = 40 evidence point: log around 1330.9, i.e. 1e578
  const double x40 = 1.0 - std::pow(2.0, -40);
  const LogValue p = scale_function(x40, cfg_at(1000.0));
  REQUIRE(p.sign() == 1);
  REQUIRE_FALSE(p.representable());
  REQUIRE(p.log_magnitude() == Approx(1330.91487027).margin(2e-5));
  REQUIRE(p.log_magnitude() > 230.0 * std::log(10.0));
}

TEST_CASE("speed integral against frozen references") {
  REQUIRE(speed_integral(0.5, cfg_at(0.0)).to_double() == Approx(0.317826483071).epsilon(1e-7));
  REQUIRE(speed_integral(0.8, cfg_at(1.0)).to_double() == Approx(1.97998077888).epsilon(1e-7));
  REQUIRE(speed_integral(-0.75, cfg_at(10.0)).to_double() ==
          Approx(0.095671197671).epsilon(1e-7));
  REQUIRE(speed_integral(0.4, cfg_at(10.0)).to_double() == Approx(15.4527880564).epsilon(1e-7));
  REQUIRE(speed_integral(0.0, cfg_at(17.0)).is_zero());
}

TEST_CASE("speed integral is positive on both sides and matches the grid oracle") {
  for (double lambda : {0.0, 1.0, 10.0}) {
    for (double x : {-0.75, 0.4, 0.8}) {
      const LogValue v = speed_integral(x, cfg_at(lambda));
      REQUIRE(v.sign() == 1);
      REQUIRE(v.to_double() == Approx(oracle::speed_fn(x, 0.0, lambda, 2000)).epsilon(1e-4));
    }
  }
}

TEST_CASE("boundary_limit classifies a constant tail as finite") {
  const auto fn = [](double) { return 2.0; };
  const BoundaryLimit b = boundary_limit(fn, BoundarySide::Right, cfg_at(0.0));
  REQUIRE(b.verdict == LimitClass::Finite);
  REQUIRE(b.limit_value.to_double() == Approx(2.0));
  REQUIRE(b.evidence.size() == 40);
  REQUIRE(b.evidence.front().x == Approx(0.5));
}

TEST_CASE("boundary_limit classifies a converging tail as finite") {
  const auto fn = [](double x) { return 2.0 + (1.0 - x); };
  const BoundaryLimit b = boundary_limit(fn, BoundarySide::Right, cfg_at(0.0));
  REQUIRE(b.verdict == LimitClass::Finite);
  REQUIRE(b.limit_value.to_double() == Approx(2.0).margin(1e-9));
}

TEST_CASE("boundary_limit flags geometric growth past the threshold as divergent") {
  ScaleSpeedConfig cfg = cfg_at(0.0);
  cfg.divergence_log_threshold = 20.0;  // 1/(1-x) tops out at 2^40, log about 27.7
  const auto fn = [](double x) { return 1.0 / (1.0 - x); };
  const BoundaryLimit b = boundary_limit(fn, BoundarySide::Right, cfg);
  REQUIRE(b.verdict == LimitClass::Divergent);
  REQUIRE(b.divergence_sign == 1);

  const auto neg = [](double x) { return -1.0 / (1.0 - x); };
  const BoundaryLimit bn = boundary_limit(neg, BoundarySide::Right, cfg);
  REQUIRE(bn.verdict == LimitClass::Divergent);
  REQUIRE(bn.divergence_sign == -1);
}

TEST_CASE("boundary_limit stays undetermined when growth has not cleared the threshold") {
  // Same 1/(1-x) march, default threshold 500: still growing at k_max, far
  // below the divergence bar, not Cauchy either.
  const auto fn = [](double x) { return 1.0 / (1.0 - x); };
  const BoundaryLimit b = boundary_limit(fn, BoundarySide::Right, cfg_at(0.0));
  REQUIRE(b.verdict == LimitClass::Undetermined);
}

TEST_CASE("boundary_limit accepts log-domain values beyond double range") {
  const auto fn = [](double x) { return LogValue::from_log(2.0 / (1.0 - x)); };
  const BoundaryLimit b = boundary_limit(fn, BoundarySide::Right, cfg_at(0.0));
  REQUIRE(b.verdict == LimitClass::Divergent);
  REQUIRE(b.divergence_sign == 1);
  REQUIRE_FALSE(b.limit_value.representable());
}

TEST_CASE("boundary_limit keeps partial evidence when evaluation fails") {
  const auto fn = [](double x) -> double {
    if (x > 0.9) throw std::runtime_error("synthetic failure");
    return 1.0;
  };
  const BoundaryLimit b = boundary_limit(fn, BoundarySide::Right, cfg_at(0.0));
  REQUIRE(b.verdict == LimitClass::Undetermined);
  REQUIRE(b.evidence.size() == 4);  // fails at x_4 = 0.9375
  REQUIRE_FALSE(b.evidence.back().ok);
  REQUIRE(b.evidence.front().ok);
}

TEST_CASE("feller verdict at lambda = 0: both speed limits finite, explosion via cond1") {
  const FellerVerdict v = feller_test(0.0, cfg_at(0.0));
  REQUIRE(v.condition_met == ExplosionCondition::Cond1);
  REQUIRE(v.explodes_wp1.has_value());
  REQUIRE(v.explodes_wp1.value());
  REQUIRE(v.v_left.verdict == LimitClass::Finite);
  REQUIRE(v.v_right.verdict == LimitClass::Finite);
  // v(+/-1) = 2.009388718 from the high-precision reference
  REQUIRE(v.v_right.limit_value.to_double() == Approx(2.009388718).epsilon(1e-5));
  REQUIRE(v.v_left.limit_value.to_double() == Approx(2.009388718).epsilon(1e-5));
  REQUIRE(v.p_right.verdict == LimitClass::Finite);
  REQUIRE(v.p_right.limit_value.to_double() == Approx(2.30663001256).epsilon(1e-6));
}

TEST_CASE("feller verdict at lambda = 1000: scale blows up on the right, cond3") {
  const FellerVerdict v = feller_test(1000.0, cfg_at(0.0));
  REQUIRE(v.explodes_wp1.has_value());
  REQUIRE(v.explodes_wp1.value());
  REQUIRE(v.condition_met == ExplosionCondition::Cond3);
  REQUIRE(v.p_right.verdict == LimitClass::Divergent);
  REQUIRE(v.p_right.divergence_sign == 1);
  REQUIRE(v.p_right.limit_value.log10_magnitude() > 230.0);
  REQUIRE(v.v_left.verdict == LimitClass::Finite);
  // the speed measure inherits the blow-up on the right
  REQUIRE(v.v_right.verdict == LimitClass::Divergent);
}

TEST_CASE("feller verdict mirrors under lambda -> -lambda") {
  const FellerVerdict v = feller_test(-1000.0, cfg_at(0.0));
  REQUIRE(v.explodes_wp1.has_value());
  REQUIRE(v.explodes_wp1.value());
  REQUIRE(v.condition_met == ExplosionCondition::Cond2);
  REQUIRE(v.p_left.verdict == LimitClass::Divergent);
  REQUIRE(v.p_left.divergence_sign == -1);
  REQUIRE(v.v_right.verdict == LimitClass::Finite);
}

TEST_CASE("verdicts under paper_expanded equal definition with lambda negated") {
  const FellerVerdict pe = feller_test(37.0, cfg_at(37.0, 0.1, ScaleConvention::PaperExpanded));
  const FellerVerdict def = feller_test(-37.0, cfg_at(-37.0, 0.1, ScaleConvention::Definition));
  REQUIRE(pe.condition_met == def.condition_met);
  REQUIRE(pe.explodes_wp1 == def.explodes_wp1);
  REQUIRE(pe.p_right.verdict == def.p_right.verdict);
  REQUIRE(pe.v_left.verdict == def.v_left.verdict);
  // the integrands are bitwise identical, so the evidence is too
  for (std::size_t k = 0; k < pe.p_right.evidence.size(); ++k) {
    REQUIRE(pe.p_right.evidence[k].value == def.p_right.evidence[k].value);
  }
}

TEST_CASE("incremental boundary march agrees with direct evaluation") {
  const ScaleSpeedConfig cfg = cfg_at(10.0);
  const FellerVerdict v = feller_test(10.0, cfg);
  // evidence point k = 3 is x = 0.875
  const BoundaryPoint& p3 = v.p_right.evidence.at(2);
  REQUIRE(p3.x == Approx(0.875));
  const LogValue direct = scale_function(0.875, cfg);
  REQUIRE(p3.value.log_magnitude() ==
          Approx(direct.log_magnitude()).margin(1e-9));
  REQUIRE(p3.value.sign() == direct.sign());

  const BoundaryPoint& v3 = v.v_right.evidence.at(2);
  const LogValue vdirect = speed_integral(0.875, cfg);
  REQUIRE(v3.value.log_magnitude() == Approx(vdirect.log_magnitude()).margin(1e-6));

  const BoundaryPoint& pl3 = v.p_left.evidence.at(2);
  const LogValue ldirect = scale_function(-0.875, cfg);
  REQUIRE(pl3.value.sign() == -1);
  REQUIRE(pl3.value.log_magnitude() == Approx(ldirect.log_magnitude()).margin(1e-9));
}

TEST_CASE("off-center anchor: early evidence points behind zeta are handled") {
  const ScaleSpeedConfig cfg = cfg_at(1.0, 0.6);
  const FellerVerdict v = feller_test(1.0, cfg);
  // x_1 = 0.5 sits between zeta and the left boundary; v must still be
  // nonnegative there and match the direct evaluation.
  const BoundaryPoint& first = v.v_right.evidence.front();
  REQUIRE(first.x == Approx(0.5));
  REQUIRE(first.value.sign() >= 0);
  const LogValue direct = speed_integral(0.5, cfg);
  REQUIRE(first.value.log_magnitude() == Approx(direct.log_magnitude()).margin(1e-6));
  const BoundaryPoint& second = v.v_right.evidence.at(1);
  const LogValue direct2 = speed_integral(0.75, cfg);
  REQUIRE(second.value.log_magnitude() == Approx(direct2.log_magnitude()).margin(1e-6));
  REQUIRE(v.explodes_wp1.has_value());
}

TEST_CASE("lambda_sweep carries per-row errors without aborting the grid") {
  const std::vector<double> grid{0.0, 1000.0};
  const auto rows = lambda_sweep(grid, cfg_at(0.0));
  REQUIRE(rows.size() == 2);
  REQUIRE(rows[0].verdict.has_value());
  REQUIRE(rows[0].error.empty());
  REQUIRE(rows[0].verdict->explodes_wp1.value());
  REQUIRE(rows[1].verdict->explodes_wp1.value());
  REQUIRE(rows[1].verdict->condition_met == ExplosionCondition::Cond3);

  const std::vector<double> bad_grid{1.0, std::nan("")};
  const auto rows2 = lambda_sweep(bad_grid, cfg_at(0.0));
  REQUIRE(rows2[0].verdict.has_value());
  REQUIRE_FALSE(rows2[1].verdict.has_value());
  REQUIRE_FALSE(rows2[1].error.empty());
}

TEST_CASE("config validation") {
  REQUIRE_THROWS_AS(feller_test(0.0, cfg_at(0.0, 1.0)), std::invalid_argument);
  ScaleSpeedConfig bad = cfg_at(0.0);
  bad.k_max = 2;
  REQUIRE_THROWS_AS(feller_test(0.0, bad), std::invalid_argument);
  bad = cfg_at(0.0);
  bad.cauchy_rel_tol = 2.0;
  REQUIRE_THROWS_AS(feller_test(0.0, bad), std::invalid_argument);
  bad = cfg_at(0.0);
  bad.divergence_log_threshold = -5.0;
  REQUIRE_THROWS_AS(feller_test(0.0, bad), std::invalid_argument);
}
