#pragma once

#include <iosfwd>
#include <vector>

#include "tpiston/model.hpp"

namespace tpiston {

/// Closed-form classical counterdiabatic generator xi(q, p; lambda) for the
/// requested driving parameter. The energy E = H0(z) selects the branch.
double xi_classical(PhasePoint z, const PistonParams& params, Parameter which);

/// |xi_s + q p / 3s - (L / 3s) xi_L|; vanishes identically for the exact generators.
double generator_relation_residual(PhasePoint z, const PistonParams& params);

struct XiGradient {
  double dq = 0.0;
  double dp = 0.0;
};

/// Analytic phase-space gradient of xi_classical, holding sign(p) fixed.
/// Throws std::domain_error for p == 0 above the critical energy.
XiGradient xi_gradients(PhasePoint z, const PistonParams& params, Parameter which);

/// Linear protocol lambda(t) = lambda_start + rate * t on one parameter; the
/// other parameter stays at its PistonParams value.
struct DrivingCase {
  Parameter which = Parameter::Length;
  double rate = 0.0;
  double lambda_start = 0.0;
  double lambda_end = 0.0;
  /// Duration used when rate == 0 (a frozen protocol).
  double hold_duration = 0.0;

  double duration() const;
  double lambda_at(double t) const;
  PistonParams params_at(const PistonParams& base, double t) const;
  /// Throws std::invalid_argument unless the duration is positive and finite.
  void validate() const;

  static DrivingCase frozen(Parameter which, double lambda, double duration);
};

enum class Wall { Left, Right };

struct TrajectorySample {
  double t = 0.0;
  double q = 0.0;
  double p = 0.0;
  double energy = 0.0;
  double action = 0.0;
};

struct WallEvent {
  double t = 0.0;
  Wall wall = Wall::Left;
};

struct TrajectoryRecord {
  std::vector<TrajectorySample> samples;
  std::vector<WallEvent> wall_events;

  /// max_t |I0(t) - I0(0)| / I0(0) over the recorded samples.
  double max_relative_action_drift() const;
  double final_relative_action_change() const;
};

struct TrajectoryOptions {
  double dt = 0.0;
  /// Record every n-th step (the first and last states are always recorded).
  int sample_stride = 1;
  /// Absolute tolerance on the wall position when locating a collision.
  double event_tolerance = 1e-12;
};

/// Fixed-step RK4 integration of Hamilton's equations for H0 + rate * xi
/// (or H0 alone), with wall collisions located by bisection inside the step.
/// Collisions reverse the momentum relative to the wall: p -> -p with the
/// generator active, p -> -p + 2 m v_wall for bare driving.
TrajectoryRecord integrate_trajectory(PhasePoint z0, const PistonParams& params,
                                      const DrivingCase& driving, bool with_cd,
                                      const TrajectoryOptions& options);

/// Header `t,q,p,E,action`, shortest round-trip decimal formatting.
void write_trajectory_csv(std::ostream& out, const TrajectoryRecord& record);

}  // namespace tpiston
