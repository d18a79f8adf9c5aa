#pragma once

#include <functional>
#include <iosfwd>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "tpiston/cd_operators.hpp"
#include "tpiston/classical_cd.hpp"

namespace tpiston {

/// Driving matrices at one lambda snapshot, both real antisymmetric:
///   m0  = -<m|d_lambda n>
///   mcd = <m|xi_SC|n> / (i hbar)
/// so that M = m0 + mcd. `mcd` is empty when the CD terms were not built.
struct PropagatorTerms {
  Eigen::MatrixXd m0;
  Eigen::MatrixXd mcd;
  Eigen::VectorXd eigenvalues;

  bool has_cd() const { return mcd.size() != 0; }
  Eigen::MatrixXd coupling(bool with_cd) const;
};

PropagatorTerms build_propagator_terms(const SpectralData& spectral, const PistonParams& params,
                                       Parameter which, bool with_cd_terms);

/// Expansion coefficients a_n over the instantaneous eigenbasis together with
/// the accumulated dynamical phases Phi_n = int_0^t E_n dt'.
struct QuantumState {
  Eigen::VectorXcd coefficients;
  Eigen::VectorXd phases;
  double time = 0.0;

  static QuantumState eigenstate(int size, int n_init);
  double norm_squared() const { return coefficients.squaredNorm(); }
};

/// Fixed-step Runge-Kutta-Gill integrator for complex vector fields
/// dy/dt = f(t, y). Holds the stage buffers between steps.
class GillStepper {
 public:
  using Field = std::function<void(double t, const Eigen::VectorXcd& y, Eigen::VectorXcd& dydt)>;

  void step(const Field& f, double t, double h, Eigen::VectorXcd& y);

 private:
  Eigen::VectorXcd k1_, k2_, k3_, k4_, stage_;
};

/// da_m/dt = rate * sum_n exp(-i (Phi_n - Phi_m) / hbar) M_mn a_n.
Eigen::VectorXcd rhs(const QuantumState& state, const PropagatorTerms& terms, double rate,
                     double hbar, bool with_cd = true);

struct FidelitySample {
  double t = 0.0;
  double lambda = 0.0;
  double fidelity = 0.0;
  double norm = 0.0;
  double energy = 0.0;  ///< sum_n |a_n|^2 E_n(t)
};

struct FidelityTrace {
  std::vector<FidelitySample> samples;
  /// Minimum of |a_n_init| over every integrator step (not only the recorded samples).
  double f_min = 1.0;
};

struct DensitySnapshot {
  double t = 0.0;
  std::vector<double> q;
  std::vector<double> density;
};

/// Variables the integrator advances. Rotating: a_n with the dynamical
/// phases inside the coupling. CoRotating: c_n = a_n exp(-i Phi_n / hbar),
/// with -i E_n / hbar on the diagonal. |a_n| = |c_n| either way.
enum class Frame { Rotating, CoRotating };

struct PropagationOptions {
  /// Number of sine modes; 0 selects default_basis_size().
  int basis_size = 0;
  /// Uniform lambda snapshots across the protocol, including both ends.
  int grid_points = 2001;
  /// Keep every n-th step in the trace (f_min always uses every step).
  int sample_stride = 1;
  std::vector<double> snapshot_times;
  int q_grid_points = 2001;
  /// Abort once | sum |a|^2 - 1 | exceeds this.
  double norm_abort = 1e-4;
  Frame frame = Frame::Rotating;
};

/// One trajectory inside a batch; all members share the lambda grid.
struct RunRequest {
  bool with_cd = true;
  /// Requested step; 0 selects default_time_step(). Rounded down so that each
  /// grid interval contains a whole number of steps.
  double dt = 0.0;
};

struct PropagationResult {
  FidelityTrace trace;
  std::vector<DensitySnapshot> snapshots;
  QuantumState final_state;
  double dt = 0.0;
  long long steps = 0;
  double max_norm_drift = 0.0;
  int basis_size = 0;
  double initial_energy = 0.0;
};

/// Fewest sine modes that always enter a propagation. The counterdiabatic
/// coupling to high modes grows without bound, so with-CD fidelities depend
/// on the truncation; this floor fixes that choice (see README).
inline constexpr int kDynamicalBasisFloor = 88;

/// Smallest basis (in steps of 4) for which E_n changes by less than
/// `rel_tol` when the basis is doubled.
int spectral_basis_size(const PistonParams& params, int n, double rel_tol = 1e-8);

/// max(kDynamicalBasisFloor, spectral_basis_size) over both protocol ends.
int default_basis_size(int n_init, const PistonParams& params, const DrivingCase& driving);

/// min(duration / 20000, 0.2 hbar / E_max), E_max being the top basis level
/// over both protocol ends. Keeps h E_max / hbar inside the accurate range of
/// the fourth-order step.
double default_time_step(const PistonParams& params, const DrivingCase& driving, int basis_size);

/// Propagates every request over the same gauge-chained lambda grid; the
/// spectral work per grid point is done once for the whole batch.
std::vector<PropagationResult> propagate_batch(int n_init, const PistonParams& params,
                                               const DrivingCase& driving,
                                               std::span<const RunRequest> runs,
                                               const PropagationOptions& options);

FidelityTrace propagate(int n_init, const PistonParams& params, const DrivingCase& driving,
                        bool with_cd, double dt, int grid_points);

/// |psi(q, t)|^2 on `q_grid` (which must lie in [0, L]).
std::vector<double> reconstruct_density(const QuantumState& state, const SpectralData& spectral,
                                        std::span<const double> q_grid, double hbar);

/// |u_n(q)|^2 for the 1-based level n.
std::vector<double> eigenstate_density(const SpectralData& spectral, int n,
                                       std::span<const double> q_grid);

std::vector<double> uniform_grid(double lo, double hi, int points);

/// Header `t,lambda,fidelity,norm,energy_expectation`.
void write_fidelity_csv(std::ostream& out, const FidelityTrace& trace);
/// Header `t,q,density`.
void write_density_csv(std::ostream& out, const DensitySnapshot& snapshot);

}  // namespace tpiston
