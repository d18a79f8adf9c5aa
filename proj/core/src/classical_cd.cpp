#include "tpiston/classical_cd.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <string>

#include "tpiston/csv.hpp"

namespace tpiston {

namespace {

double sign_of(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

// Energy-dependent pieces of the above-critical generators and their E-derivatives:
//   F(E) = E - sL + sqrt(E (E - sL))
//   G(E) = E sqrt(E - sL) + sqrt(E) (E - sL)
struct ShellFunctions {
  double f, g, df, dg;
};

ShellFunctions shell_functions(double energy, double ec) {
  const double w = energy - ec;
  const double sw = std::sqrt(w);
  const double se = std::sqrt(energy);
  ShellFunctions out{};
  out.f = w + se * sw;
  out.g = energy * sw + se * w;
  out.df = 1.0 + (energy + w) / (2.0 * se * sw);
  out.dg = sw + energy / (2.0 * sw) + w / (2.0 * se) + se;
  return out;
}

}  // namespace

double xi_classical(PhasePoint z, const PistonParams& params, Parameter which) {
  const double s = params.slope;
  const double ec = critical_energy(params);
  const double energy = hamiltonian(z, params);
  const double qp = z.q * z.p;
  if (energy <= ec) {
    return which == Parameter::Slope ? -qp / (3.0 * s) : 0.0;
  }
  const auto sf = shell_functions(energy, ec);
  const double core = -z.p * sf.f + sign_of(z.p) * std::sqrt(2.0 * params.mass) * sf.g;
  if (which == Parameter::Slope) return core / (3.0 * s * s) - qp / (3.0 * s);
  return core / ec;
}

double generator_relation_residual(PhasePoint z, const PistonParams& params) {
  const double s = params.slope;
  const double xs = xi_classical(z, params, Parameter::Slope);
  const double xl = xi_classical(z, params, Parameter::Length);
  return std::abs(xs + z.q * z.p / (3.0 * s) - params.length / (3.0 * s) * xl);
}

XiGradient xi_gradients(PhasePoint z, const PistonParams& params, Parameter which) {
  const double s = params.slope;
  const double m = params.mass;
  const double ec = critical_energy(params);
  const double energy = hamiltonian(z, params);
  if (energy <= ec) {
    if (which == Parameter::Length) return {};
    return {-z.p / (3.0 * s), -z.q / (3.0 * s)};
  }
  if (z.p == 0.0) {
    throw std::domain_error("xi_gradients: sign(p) undefined at p = 0 above the critical energy");
  }
  const auto sf = shell_functions(energy, ec);
  const double sigma_root = sign_of(z.p) * std::sqrt(2.0 * m);
  // d(core)/dE where core = -p F(E) + sign(p) sqrt(2m) G(E), with E = p^2/2m + s q.
  const double dcore_de = -z.p * sf.df + sigma_root * sf.dg;
  const double dcore_dq = dcore_de * s;
  const double dcore_dp = -sf.f + dcore_de * z.p / m;
  if (which == Parameter::Slope) {
    const double scale = 1.0 / (3.0 * s * s);
    return {dcore_dq * scale - z.p / (3.0 * s), dcore_dp * scale - z.q / (3.0 * s)};
  }
  return {dcore_dq / ec, dcore_dp / ec};
}

double DrivingCase::duration() const {
  if (rate == 0.0) return hold_duration;
  return (lambda_end - lambda_start) / rate;
}

double DrivingCase::lambda_at(double t) const { return lambda_start + rate * t; }

PistonParams DrivingCase::params_at(const PistonParams& base, double t) const {
  return base.with(which, lambda_at(t));
}

void DrivingCase::validate() const {
  const double d = duration();
  if (!(d > 0.0) || !std::isfinite(d)) {
    throw std::invalid_argument("protocol duration must be positive: lambda_end is not reachable "
                                "from lambda_start at the given rate");
  }
  if (!(lambda_start > 0.0) || !(lambda_at(d) > 0.0)) {
    throw std::invalid_argument("driven parameter must stay positive");
  }
}

DrivingCase DrivingCase::frozen(Parameter which, double lambda, double duration) {
  return {which, 0.0, lambda, lambda, duration};
}

double TrajectoryRecord::max_relative_action_drift() const {
  if (samples.empty()) return 0.0;
  const double i0 = samples.front().action;
  double worst = 0.0;
  for (const auto& s : samples) worst = std::max(worst, std::abs(s.action - i0) / i0);
  return worst;
}

double TrajectoryRecord::final_relative_action_change() const {
  if (samples.empty()) return 0.0;
  return std::abs(samples.back().action - samples.front().action) / samples.front().action;
}

namespace {

struct State {
  double q, p;
};

class HamiltonFlow {
 public:
  HamiltonFlow(const PistonParams& base, const DrivingCase& driving, bool with_cd)
      : base_(base), driving_(driving), with_cd_(with_cd) {}

  State derivative(double t, State y) const {
    const PistonParams at = driving_.params_at(base_, t);
    State d{y.p / at.mass, -at.slope};
    if (with_cd_ && driving_.rate != 0.0) {
      const auto grad = xi_gradients({y.q, y.p}, at, driving_.which);
      d.q += driving_.rate * grad.dp;
      d.p -= driving_.rate * grad.dq;
    }
    return d;
  }

  State rk4(double t, State y, double h) const {
    const State k1 = derivative(t, y);
    const State k2 = derivative(t + 0.5 * h, {y.q + 0.5 * h * k1.q, y.p + 0.5 * h * k1.p});
    const State k3 = derivative(t + 0.5 * h, {y.q + 0.5 * h * k2.q, y.p + 0.5 * h * k2.p});
    const State k4 = derivative(t + h, {y.q + h * k3.q, y.p + h * k3.p});
    return {y.q + h / 6.0 * (k1.q + 2.0 * k2.q + 2.0 * k3.q + k4.q),
            y.p + h / 6.0 * (k1.p + 2.0 * k2.p + 2.0 * k3.p + k4.p)};
  }

  double right_wall(double t) const { return driving_.params_at(base_, t).length; }

  double wall_velocity(Wall wall) const {
    if (wall == Wall::Right && driving_.which == Parameter::Length) return driving_.rate;
    return 0.0;
  }

  State reflect(State y, Wall wall) const {
    // With the generator active the transport velocity at either wall equals
    // the wall velocity, so p/m is already the velocity relative to the wall.
    if (with_cd_) return {y.q, -y.p};
    return {y.q, -y.p + 2.0 * base_.mass * wall_velocity(wall)};
  }

 private:
  PistonParams base_;
  DrivingCase driving_;
  bool with_cd_;
};

TrajectorySample make_sample(double t, State y, const PistonParams& base,
                             const DrivingCase& driving) {
  const PistonParams at = driving.params_at(base, t);
  const double e = hamiltonian({y.q, y.p}, at);
  return {t, y.q, y.p, e, phase_volume(e, at)};
}

}  // namespace

TrajectoryRecord integrate_trajectory(PhasePoint z0, const PistonParams& params,
                                      const DrivingCase& driving, bool with_cd,
                                      const TrajectoryOptions& options) {
  params.validate();
  driving.validate();
  if (!(options.dt > 0.0)) throw std::invalid_argument("dt must be positive");
  if (options.sample_stride < 1) throw std::invalid_argument("sample_stride must be >= 1");
  const PistonParams start = driving.params_at(params, 0.0);
  if (z0.q < 0.0 || z0.q > start.length) {
    throw std::invalid_argument("initial point lies outside the box");
  }

  const HamiltonFlow flow(params, driving, with_cd);
  const double duration = driving.duration();
  const auto steps = static_cast<long long>(std::ceil(duration / options.dt - 1e-9));
  const double dt = duration / static_cast<double>(steps);

  TrajectoryRecord record;
  State y{z0.q, z0.p};
  record.samples.push_back(make_sample(0.0, y, params, driving));

  for (long long step = 0; step < steps; ++step) {
    const double t0 = static_cast<double>(step) * dt;
    double t = t0;
    double remaining = dt;
    // A step may contain several collisions near a corner; bound the loop.
    for (int guard = 0; remaining > 0.0; ++guard) {
      if (guard > 16) {
        throw NumericalError("integrate_trajectory: too many wall events in one step at t = " +
                             std::to_string(t));
      }
      const State trial = flow.rk4(t, y, remaining);
      const double wall_end = flow.right_wall(t + remaining);
      const bool out_left = trial.q < 0.0;
      const bool out_right = trial.q > wall_end;
      if (!out_left && !out_right) {
        y = trial;
        t += remaining;
        remaining = 0.0;
        break;
      }
      const Wall wall = out_left ? Wall::Left : Wall::Right;
      auto overshoot = [&](double h) {
        const State s = flow.rk4(t, y, h);
        return wall == Wall::Left ? -s.q : s.q - flow.right_wall(t + h);
      };
      double lo = 0.0;
      double hi = remaining;
      if (overshoot(lo) > options.event_tolerance) {
        throw NumericalError("integrate_trajectory: particle escaped the box at t = " +
                             std::to_string(t));
      }
      State hit{};
      for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double g = overshoot(mid);
        if (g > 0.0) {
          hi = mid;
        } else {
          lo = mid;
        }
        hit = flow.rk4(t, y, lo);
        const double gap = wall == Wall::Left ? hit.q : flow.right_wall(t + lo) - hit.q;
        if (std::abs(gap) <= options.event_tolerance || hi - lo <= 1e-15 * dt) break;
      }
      const double t_hit = t + lo;
      hit.q = wall == Wall::Left ? 0.0 : flow.right_wall(t_hit);
      y = flow.reflect(hit, wall);
      record.wall_events.push_back({t_hit, wall});
      remaining -= lo;
      t = t_hit;
      if (lo == 0.0 && guard > 0 && remaining > 0.0) {
        // Reflected point still heading outwards: the step is too coarse.
        const State probe = flow.rk4(t, y, remaining);
        if (probe.q < 0.0 || probe.q > flow.right_wall(t + remaining)) {
          throw NumericalError("integrate_trajectory: step size too large near wall at t = " +
                               std::to_string(t));
        }
      }
    }
    const bool last = step + 1 == steps;
    if (last || (step + 1) % options.sample_stride == 0) {
      record.samples.push_back(make_sample(last ? duration : t0 + dt, y, params, driving));
    }
  }
  return record;
}

void write_trajectory_csv(std::ostream& out, const TrajectoryRecord& record) {
  out << "t,q,p,E,action\n";
  for (const auto& s : record.samples) {
    CsvRow(out) << s.t << s.q << s.p << s.energy << s.action;
  }
}

}  // namespace tpiston
