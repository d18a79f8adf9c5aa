#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include <boost/math/quadrature/tanh_sinh.hpp>
#include <doctest.h>

#include "tpiston/classical_cd.hpp"

using namespace tpiston;

namespace {

PistonParams small_box() {
  PistonParams p;
  p.mass = 0.5;
  p.slope = 1.5;
  p.length = 5.0;
  return p;
}

PistonParams compression_start() {
  PistonParams p;
  p.mass = 1.0;
  p.hbar = 2.0;
  p.slope = 3.0;
  p.length = 25.0;
  return p;
}

PhasePoint on_shell(double e, double q, double sign, const PistonParams& p) {
  return {q, sign * std::sqrt(std::max(0.0, 2.0 * p.mass * (e - p.slope * q)))};
}

// Orbit time average of xi: both momentum branches weighted by dt = dq / |v|.
double orbit_average_xi(double e, const PistonParams& p, Parameter which) {
  boost::math::quadrature::tanh_sinh<double> ts;
  const double top = std::min(e / p.slope, p.length);
  auto inv_speed = [&](double q) { return p.mass / std::sqrt(std::max(1e-300, 2.0 * p.mass * (e - p.slope * q))); };
  const double num = ts.integrate(
      [&](double q) {
        return (xi_classical(on_shell(e, q, 1.0, p), p, which) + xi_classical(on_shell(e, q, -1.0, p), p, which)) *
               inv_speed(q);
      },
      0.0, top);
  const double den = 2.0 * ts.integrate(inv_speed, 0.0, top);
  return num / den;
}

double max_abs_xi(double e, const PistonParams& p, Parameter which) {
  const double top = std::min(e / p.slope, p.length);
  double worst = 0.0;
  for (int i = 0; i <= 400; ++i) {
    const double q = top * i / 400.0;
    for (double sg : {1.0, -1.0}) worst = std::max(worst, std::abs(xi_classical(on_shell(e, q, sg, p), p, which)));
  }
  return worst;
}

}  // namespace

TEST_SUITE("classical") {

TEST_CASE("generator examples") {
  PistonParams p = small_box();
  p.mass = 1.0;
  p.length = 10.0;
  CHECK(xi_classical({2.0, 3.0}, p, Parameter::Slope) == doctest::Approx(-4.0 / 3.0).epsilon(1e-14));
  CHECK(xi_classical({2.0, 3.0}, p, Parameter::Length) == 0.0);

  const PistonParams b = small_box();
  // On the critical shell the above-critical form collapses to -qp/3s.
  const PhasePoint zc = on_shell(critical_energy(b), 2.0, 1.0, b);
  CHECK(xi_classical(zc, b, Parameter::Slope) == doctest::Approx(-zc.q * zc.p / (3.0 * b.slope)));

  const PhasePoint z{1.0, 2.2};
  const double xs = xi_classical(z, b, Parameter::Slope);
  const double xl = xi_classical(z, b, Parameter::Length);
  CHECK(std::abs(xs + z.q * z.p / (3.0 * b.slope) - b.length / (3.0 * b.slope) * xl) < 1e-12);
}

TEST_CASE("above-critical closed forms") {
  // Direct transcription with independent arithmetic.
  const PistonParams b = small_box();
  const PhasePoint z{1.0, 3.0};
  const double e = z.p * z.p / (2 * b.mass) + b.slope * z.q;
  const double sl = b.slope * b.length;
  REQUIRE(e > sl);
  const double f = e - sl + std::sqrt(e * (e - sl));
  const double g = std::sqrt(2 * b.mass) * (e * std::sqrt(e - sl) + std::sqrt(e) * (e - sl));
  const double xi_s = (-z.p * f + g) / (3 * b.slope * b.slope) - z.q * z.p / (3 * b.slope);
  const double xi_l = (-z.p * f + g) / sl;
  CHECK(xi_classical(z, b, Parameter::Slope) == doctest::Approx(xi_s).epsilon(1e-13));
  CHECK(xi_classical(z, b, Parameter::Length) == doctest::Approx(xi_l).epsilon(1e-13));
  const PhasePoint zm{1.0, -3.0};
  CHECK(xi_classical(zm, b, Parameter::Length) == doctest::Approx((z.p * f - g) / sl).epsilon(1e-13));
}

TEST_CASE("relation residual below and above E_c") {
  const PistonParams b = small_box();
  CHECK(generator_relation_residual({1.0, 1.0}, b) == 0.0);
  CHECK(generator_relation_residual({1.0, 2.2}, b) < 1e-12);

  const PistonParams c = compression_start();
  const double ec = critical_energy(c);
  std::mt19937_64 rng(20240601);
  std::uniform_real_distribution<double> ue(ec, 5.0 * ec), uq(0.0, 1.0), us(0.0, 1.0);
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const double e = ue(rng);
    const double q = uq(rng) * c.length;
    const PhasePoint z = on_shell(e, q, us(rng) < 0.5 ? -1.0 : 1.0, c);
    const double scale = std::max({1.0, std::abs(xi_classical(z, c, Parameter::Slope)),
                                   std::abs(z.q * z.p / (3 * c.slope))});
    worst = std::max(worst, generator_relation_residual(z, c) / scale);
  }
  CHECK(worst < 1e-12);
}

TEST_CASE("gradients match finite differences") {
  const PistonParams b = small_box();
  for (PhasePoint z : {PhasePoint{1.0, 2.2}, PhasePoint{1.0, 3.0}, PhasePoint{3.0, -2.5}}) {
    for (Parameter w : {Parameter::Slope, Parameter::Length}) {
      const XiGradient g = xi_gradients(z, b, w);
      const double h = 1e-6;
      const double dq = (xi_classical({z.q + h, z.p}, b, w) - xi_classical({z.q - h, z.p}, b, w)) / (2 * h);
      const double dp = (xi_classical({z.q, z.p + h}, b, w) - xi_classical({z.q, z.p - h}, b, w)) / (2 * h);
      CHECK(g.dq == doctest::Approx(dq).epsilon(1e-6).scale(1e-3));
      CHECK(g.dp == doctest::Approx(dp).epsilon(1e-6).scale(1e-3));
    }
  }
  const XiGradient below = xi_gradients({1.0, 2.2}, b, Parameter::Slope);
  CHECK(below.dq == doctest::Approx(-2.2 / 4.5));
  CHECK(below.dp == doctest::Approx(-1.0 / 4.5));
  const XiGradient none = xi_gradients({1.0, 2.2}, b, Parameter::Length);
  CHECK(none.dq == 0.0);
  CHECK(none.dp == 0.0);
  // p = 0 above E_c needs a point outside the box.
  CHECK_THROWS_AS(xi_gradients({6.0, 0.0}, b, Parameter::Slope), std::domain_error);
}

TEST_CASE("generator is continuous at the critical shell") {
  const PistonParams b = small_box();
  const double ec = critical_energy(b);
  for (double q : {0.5, 2.0, 4.0}) {
    for (double sg : {1.0, -1.0}) {
      for (Parameter w : {Parameter::Slope, Parameter::Length}) {
        double prev = std::numeric_limits<double>::infinity();
        for (double eps : {1e-3, 1e-5, 1e-7, 1e-9}) {
          const double jump = std::abs(xi_classical(on_shell(ec * (1 + eps), q, sg, b), b, w) -
                                       xi_classical(on_shell(ec * (1 - eps), q, sg, b), b, w));
          CHECK(jump < prev);
          CHECK(jump < 10.0 * std::sqrt(eps));
          prev = jump;
        }
      }
    }
  }
}

TEST_CASE("orbit average of the generator vanishes") {
  for (const PistonParams& p : {small_box(), compression_start()}) {
    const double ec = critical_energy(p);
    for (double e : {0.5 * ec, 0.9 * ec, 1.1 * ec, 2.0 * ec, 4.0 * ec}) {
      for (Parameter w : {Parameter::Slope, Parameter::Length}) {
        const double scale = std::max(max_abs_xi(e, p, w), 1e-300);
        CHECK(std::abs(orbit_average_xi(e, p, w)) < 1e-6 * scale);
      }
    }
  }
}

TEST_CASE("generating property along a frozen orbit") {
  // Free fall between walls: q(t) = q0 + v0 t - s t^2 / 2m, p(t) = p0 - s t.
  for (const PistonParams& p : {small_box(), compression_start()}) {
    const double ec = critical_energy(p);
    for (double e : {0.6 * ec, 1.7 * ec}) {
      const PhasePoint z0 = on_shell(e, 0.0, 1.0, p);
      const double v0 = z0.p / p.mass;
      const double a = p.slope / p.mass;
      // Time at which the particle reaches its apex or the far wall, whichever comes first.
      const double apex = v0 / a;
      const double reach = std::min(e / p.slope, p.length);
      const double t_end = 0.999 * (reach < e / p.slope ? (v0 - std::sqrt(v0 * v0 - 2 * a * reach)) / a : apex);
      for (double ta : {0.1 * t_end, 0.3 * t_end}) {
        const double tb = t_end;
        auto at = [&](double t) { return PhasePoint{v0 * t - 0.5 * a * t * t, z0.p - p.slope * t}; };
        auto q_int = [&](double t) { return 0.5 * v0 * t * t - a * t * t * t / 6.0; };
        const double avg = micro_avg_grad(e, p, Parameter::Slope);
        const double rhs = q_int(tb) - q_int(ta) - avg * (tb - ta);
        const double lhs = xi_classical(at(tb), p, Parameter::Slope) - xi_classical(at(ta), p, Parameter::Slope);
        CHECK(lhs == doctest::Approx(rhs).epsilon(1e-6));
      }
    }
  }
}

TEST_CASE("static protocol conserves energy") {
  const PistonParams p = compression_start();
  for (double e : {40.0, 80.0}) {
    const double t = period(e, p);
    const DrivingCase hold = DrivingCase::frozen(Parameter::Length, p.length, 50.0 * t);
    for (bool cd : {true, false}) {
      const auto rec = integrate_trajectory({0.0, std::sqrt(2 * p.mass * e)}, p, hold, cd, {t / 2000.0, 50, 1e-12});
      double worst = 0.0;
      for (const auto& s : rec.samples) worst = std::max(worst, std::abs(s.energy - e) / e);
      CHECK(worst < 1e-8);
      CHECK(rec.max_relative_action_drift() < 1e-8);
      CHECK(rec.wall_events.size() >= 50);
    }
  }
}

TEST_CASE("compression: action drift with and without the generator") {
  const PistonParams p = compression_start();
  const DrivingCase comp{Parameter::Length, -0.5, 25.0, 15.0, 0.0};
  const double e0 = 79.52;
  const double dt = period(e0, p) / 2000.0;
  const PhasePoint z0{0.0, std::sqrt(2 * p.mass * e0)};
  const auto with = integrate_trajectory(z0, p, comp, true, {dt, 1, 1e-12});
  const auto half = integrate_trajectory(z0, p, comp, true, {dt / 2, 1, 1e-12});
  const auto without = integrate_trajectory(z0, p, comp, false, {dt, 1, 1e-12});
  CHECK(with.max_relative_action_drift() < 1e-3);
  CHECK(half.max_relative_action_drift() < 1e-3);
  CHECK(without.max_relative_action_drift() > 100 * with.max_relative_action_drift());

  for (const auto* rec : {&with, &without}) {
    for (std::size_t i = 1; i < rec->samples.size(); ++i) {
      const auto& s = rec->samples[i];
      CHECK(s.t > rec->samples[i - 1].t);
      CHECK(s.q >= 0.0);
      CHECK(s.q <= comp.lambda_at(s.t) + 1e-12);
    }
  }
}

TEST_CASE("reversing the protocol restores the action") {
  const PistonParams p = compression_start();
  const DrivingCase comp{Parameter::Length, -0.5, 25.0, 15.0, 0.0};
  const DrivingCase back{Parameter::Length, 0.5, 15.0, 25.0, 0.0};
  const double e0 = 79.52;
  const double dt = period(e0, p) / 4000.0;
  const PhasePoint z0{0.0, std::sqrt(2 * p.mass * e0)};
  const auto fwd = integrate_trajectory(z0, p, comp, true, {dt, 100, 1e-12});
  const auto& end = fwd.samples.back();
  const auto rev = integrate_trajectory({end.q, end.p}, p.with(Parameter::Length, 15.0), back, true, {dt, 100, 1e-12});
  const double i0 = fwd.samples.front().action;
  CHECK(std::abs(rev.samples.back().action - i0) / i0 < 1e-6);
}

TEST_CASE("slope protocol keeps the action with the generator") {
  PistonParams p = compression_start();
  p.length = 15.0;
  p.slope = 13.0;
  const DrivingCase down{Parameter::Slope, -0.5, 13.0, 3.0, 0.0};
  const double e0 = 80.0;
  const auto rec = integrate_trajectory({0.0, std::sqrt(2 * p.mass * e0)}, p, down, true, {period(e0, p) / 2000.0, 10, 1e-12});
  CHECK(rec.max_relative_action_drift() < 1e-3);
}

TEST_CASE("invalid input") {
  const PistonParams p = compression_start();
  const DrivingCase comp{Parameter::Length, -0.5, 25.0, 15.0, 0.0};
  CHECK_THROWS_AS(integrate_trajectory({0.0, 1.0}, p, comp, true, {0.0, 1, 1e-12}), std::invalid_argument);
  CHECK_THROWS_AS(integrate_trajectory({30.0, 1.0}, p, comp, true, {0.01, 1, 1e-12}), std::invalid_argument);
  const DrivingCase bad{Parameter::Length, 0.5, 25.0, 15.0, 0.0};
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("trajectory csv") {
  TrajectoryRecord rec;
  rec.samples.push_back({0.0, 0.0, 1.5, 2.0, 3.0});
  rec.samples.push_back({0.1, 0.25, -1.0, 2.0, 3.0});
  std::ostringstream out;
  write_trajectory_csv(out, rec);
  CHECK(out.str() == "t,q,p,E,action\n0,0,1.5,2,3\n0.1,0.25,-1,2,3\n");
}

}  // TEST_SUITE
