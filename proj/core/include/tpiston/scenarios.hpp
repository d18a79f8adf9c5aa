#pragma once

#include <optional>
#include <string>
#include <vector>

#include "tpiston/config.hpp"
#include "tpiston/tdse.hpp"

namespace tpiston {

/// Changes in F_min under the three refinement checks of a quantum run.
struct ConvergenceDeltas {
  std::optional<double> dt_half;
  std::optional<double> grid_double;
  std::optional<double> basis_plus_half;
};

struct QuantumReport {
  int n_init = 0;
  bool with_cd = true;
  int basis_size = 0;
  double dt = 0.0;
  int lambda_grid = 0;
  double initial_energy = 0.0;
  double f_min = 0.0;
  double max_norm_drift = 0.0;
  ConvergenceDeltas convergence;
};

/// Level nearest `target` at the protocol start, using a basis large enough
/// to resolve levels around it.
int select_initial_level(const PistonParams& params, double target);

/// Writes fidelity.csv, density_t{T}.csv and summary.json under output_dir.
QuantumReport run_quantum(const RunConfig& config);

struct SweepRow {
  double hbar = 0.0;
  int n = 0;
  int basis_size = 0;
  double dt = 0.0;
  double initial_energy = 0.0;
  double f_min_wcd = 0.0;
  double f_min_wocd = 0.0;
  ConvergenceDeltas convergence_wcd;
  ConvergenceDeltas convergence_wocd;
  std::optional<std::string> error;
};

struct SweepReport {
  std::vector<SweepRow> rows;
  double seconds = 0.0;
  bool all_rows_ok() const;
};

/// Table of F_min with and without CD over config.sweep_hbars. Rows run in
/// parallel; a failing row is recorded and the others continue. Writes
/// table1.csv, per-row fidelity traces and sweep_summary.json.
SweepReport run_hbar_sweep(const RunConfig& config);

struct ClassicalReport {
  bool with_cd = true;
  double initial_energy = 0.0;
  double dt = 0.0;
  double max_relative_action_drift = 0.0;
  double final_relative_action_change = 0.0;
  std::size_t wall_events = 0;
  std::optional<double> drift_change_dt_half;
};

/// Writes trajectory.csv and summary.json.
ClassicalReport run_classical(const RunConfig& config);

struct ValidationCheck {
  std::string name;
  double value = 0.0;
  double threshold = 0.0;
  bool passed = false;
  std::string detail;
};

struct ValidationReport {
  std::vector<ValidationCheck> checks;
  bool passed() const;
};

/// Residual and oracle checks on the operator algebra; writes validation.json.
ValidationReport run_validate(const RunConfig& config);

// Individual validation checks, shared with the tests.
namespace checks {

/// max over odd gamma <= 9 of | |eta_{a,a+gamma}|^2 - 4/(pi^2 gamma^2) |, and
/// the largest even-gamma weight.
ValidationCheck eta_odd_weights(int basis_size);
ValidationCheck eta_even_weights(int basis_size);
/// max(|<eta> - 1| at k = 20, |<eta> + 1| at k = -20).
ValidationCheck boosted_sign(int k);
/// Relative residual of the classical generator relation on random points.
ValidationCheck classical_relation(const PistonParams& params, int samples, unsigned seed);
/// xi_SC(s) + xi2/(3s) - (L/3s) xi_SC(L) on the interior block.
ValidationCheck semiclassical_relation(const PistonParams& params, int basis_size);
/// <m|d_L n> from the identity against a finite-difference derivative of the
/// eigenvectors in the dilated frame plus the dilation term.
ValidationCheck gradient_identity(const PistonParams& params, int basis_size);
/// Band deviation of xi_SC from the exact generator at each hbar, which must
/// strictly decrease along the list.
ValidationCheck oracle_trend(const PistonParams& params, const std::vector<double>& hbars,
                             double target_energy, int half_width, std::vector<double>* deviations = nullptr);

}  // namespace checks

/// spectrum.csv (`n,energy`) at lambda_start plus basis convergence of the
/// initial level in spectrum.json.
BasisConvergence run_spectrum(const RunConfig& config);

}  // namespace tpiston
