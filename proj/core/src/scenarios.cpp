#include "tpiston/scenarios.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <numbers>
#include <ostream>
#include <random>
#include <thread>

#include <json.hpp>

#include "tpiston/cd_operators.hpp"
#include "tpiston/csv.hpp"
#include "tpiston/eta_validation.hpp"

namespace tpiston {

namespace {

using nlohmann::json;

json optional_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

json convergence_json(const ConvergenceDeltas& c) {
  return {{"dt_half", optional_json(c.dt_half)},
          {"grid_double", optional_json(c.grid_double)},
          {"basis_plus_half", optional_json(c.basis_plus_half)}};
}

json params_json(const PistonParams& p) {
  return {{"mass", p.mass}, {"hbar", p.hbar}, {"slope", p.slope}, {"length", p.length}};
}

json protocol_json(const DrivingCase& d) {
  return {{"parameter", to_string(d.which)},
          {"lambda_start", d.lambda_start},
          {"lambda_end", d.lambda_end},
          {"rate", d.rate},
          {"duration", d.duration()}};
}

void write_json(const std::filesystem::path& path, const json& doc) {
  write_file_atomically(path, [&](std::ostream& out) { out << doc.dump(2) << '\n'; });
}

double f_min_of(int n, const PistonParams& params, const DrivingCase& driving, bool with_cd, double dt,
                const PropagationOptions& options) {
  const RunRequest run{with_cd, dt};
  return propagate_batch(n, params, driving, std::span<const RunRequest>(&run, 1), options).front().trace.f_min;
}

// Grid doubling and +50% basis checks; the dt-halving check rides along in the main batch.
void refine(ConvergenceDeltas& deltas, double f_min, int n, const PistonParams& params,
            const DrivingCase& driving, bool with_cd, double dt, bool dt_was_default,
            PropagationOptions options) {
  options.snapshot_times.clear();
  options.sample_stride = std::numeric_limits<int>::max();
  PropagationOptions fine_grid = options;
  fine_grid.grid_points = 2 * options.grid_points - 1;
  deltas.grid_double = std::abs(f_min_of(n, params, driving, with_cd, dt, fine_grid) - f_min);
  PropagationOptions bigger = options;
  bigger.basis_size = (3 * options.basis_size + 1) / 2;
  const double dt_big = dt_was_default ? default_time_step(params, driving, bigger.basis_size) : dt;
  deltas.basis_plus_half = std::abs(f_min_of(n, params, driving, with_cd, dt_big, bigger) - f_min);
}

PropagationOptions options_from(const RunConfig& config, int size) {
  PropagationOptions o;
  o.basis_size = size;
  o.grid_points = config.numerics.lambda_grid;
  o.sample_stride = config.numerics.sample_stride;
  o.snapshot_times = config.numerics.snapshot_times;
  o.q_grid_points = config.numerics.q_grid_points;
  return o;
}

std::string hbar_tag(double hbar) { return format_double(hbar); }

}  // namespace

int select_initial_level(const PistonParams& params, double target) {
  int size = 200;
  for (;;) {
    const SpectralData s = diagonalize(params, size);
    const int n = nearest_level(s, target);
    if (4 * n <= size) return nearest_level(diagonalize(params, std::max(2 * size, 4 * n)), target);
    size = 4 * n;
  }
}

QuantumReport run_quantum(const RunConfig& config) {
  config.validate();
  const PistonParams& params = config.params;
  const DrivingCase& driving = config.driving;
  QuantumReport report;
  report.n_init = config.n_init > 0 ? config.n_init : select_initial_level(params, config.target_energy);
  report.with_cd = config.with_cd;
  report.basis_size = config.numerics.basis_size > 0 ? config.numerics.basis_size
                                                     : default_basis_size(report.n_init, params, driving);
  if (report.n_init > report.basis_size) throw ConfigError("initial level exceeds the basis size");
  const bool dt_default = config.numerics.dt <= 0.0;
  const double dt = dt_default ? default_time_step(params, driving, report.basis_size) : config.numerics.dt;
  report.lambda_grid = config.numerics.lambda_grid;

  const PropagationOptions options = options_from(config, report.basis_size);
  std::vector<RunRequest> runs{{config.with_cd, dt}};
  if (config.numerics.convergence_checks) runs.push_back({config.with_cd, 0.5 * dt});
  auto results = propagate_batch(report.n_init, params, driving, runs, options);
  const PropagationResult& main = results.front();
  report.dt = main.dt;
  report.initial_energy = main.initial_energy;
  report.f_min = main.trace.f_min;
  report.max_norm_drift = main.max_norm_drift;
  if (config.numerics.convergence_checks) {
    report.convergence.dt_half = std::abs(results[1].trace.f_min - report.f_min);
    refine(report.convergence, report.f_min, report.n_init, params, driving, config.with_cd, dt, dt_default,
           options);
  }

  const auto& dir = config.output_dir;
  write_file_atomically(dir / "fidelity.csv", [&](std::ostream& out) { write_fidelity_csv(out, main.trace); });
  for (const auto& snap : main.snapshots) {
    write_file_atomically(dir / ("density_t" + format_double(snap.t) + ".csv"),
                          [&](std::ostream& out) { write_density_csv(out, snap); });
  }
  write_json(dir / "summary.json",
             {{"f_min", report.f_min},
              {"max_norm_drift", report.max_norm_drift},
              {"E_init", report.initial_energy},
              {"n_init", report.n_init},
              {"with_cd", report.with_cd},
              {"basis_size", report.basis_size},
              {"dt", report.dt},
              {"lambda_grid", report.lambda_grid},
              {"steps", main.steps},
              {"physics", params_json(params)},
              {"protocol", protocol_json(driving)},
              {"convergence", convergence_json(report.convergence)}});
  return report;
}

bool SweepReport::all_rows_ok() const {
  return std::all_of(rows.begin(), rows.end(), [](const SweepRow& r) { return !r.error; });
}

namespace {

SweepRow sweep_row(const RunConfig& config, std::size_t index) {
  SweepRow row;
  row.hbar = config.sweep_hbars[index];
  PistonParams params = config.params;
  params.hbar = row.hbar;
  const DrivingCase& driving = config.driving;
  row.n = config.sweep_levels.empty() ? select_initial_level(params, config.target_energy)
                                      : config.sweep_levels[index];
  row.basis_size = config.numerics.basis_size > 0 ? config.numerics.basis_size
                                                  : default_basis_size(row.n, params, driving);
  const bool dt_default = config.numerics.dt <= 0.0;
  const double dt = dt_default ? default_time_step(params, driving, row.basis_size) : config.numerics.dt;
  PropagationOptions options = options_from(config, row.basis_size);
  options.snapshot_times.clear();

  std::vector<RunRequest> runs{{true, dt}, {false, dt}};
  if (config.numerics.convergence_checks) {
    runs.push_back({true, 0.5 * dt});
    runs.push_back({false, 0.5 * dt});
  }
  auto results = propagate_batch(row.n, params, driving, runs, options);
  row.dt = results[0].dt;
  row.initial_energy = results[0].initial_energy;
  row.f_min_wcd = results[0].trace.f_min;
  row.f_min_wocd = results[1].trace.f_min;
  if (config.numerics.convergence_checks) {
    row.convergence_wcd.dt_half = std::abs(results[2].trace.f_min - row.f_min_wcd);
    row.convergence_wocd.dt_half = std::abs(results[3].trace.f_min - row.f_min_wocd);
    refine(row.convergence_wcd, row.f_min_wcd, row.n, params, driving, true, dt, dt_default, options);
    refine(row.convergence_wocd, row.f_min_wocd, row.n, params, driving, false, dt, dt_default, options);
  }

  const std::string tag = hbar_tag(row.hbar);
  write_file_atomically(config.output_dir / ("fidelity_hbar" + tag + "_wcd.csv"),
                        [&](std::ostream& out) { write_fidelity_csv(out, results[0].trace); });
  write_file_atomically(config.output_dir / ("fidelity_hbar" + tag + "_wocd.csv"),
                        [&](std::ostream& out) { write_fidelity_csv(out, results[1].trace); });
  return row;
}

}  // namespace

SweepReport run_hbar_sweep(const RunConfig& config) {
  config.validate();
  const auto start = std::chrono::steady_clock::now();
  const std::size_t count = config.sweep_hbars.size();
  SweepReport report;
  report.rows.resize(count);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < count; i = next++) {
      try {
        report.rows[i] = sweep_row(config, i);
      } catch (const std::exception& e) {
        SweepRow failed;
        failed.hbar = config.sweep_hbars[i];
        failed.n = config.sweep_levels.empty() ? 0 : config.sweep_levels[i];
        failed.f_min_wcd = failed.f_min_wocd = std::numeric_limits<double>::quiet_NaN();
        failed.error = e.what();
        report.rows[i] = failed;
      }
    }
  };
  const std::size_t threads =
      std::clamp<std::size_t>(std::thread::hardware_concurrency(), 1, count);
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  report.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  write_file_atomically(config.output_dir / "table1.csv", [&](std::ostream& out) {
    out << "hbar,n,f_min_wcd,f_min_wocd\n";
    for (const auto& r : report.rows) CsvRow(out) << r.hbar << r.n << r.f_min_wcd << r.f_min_wocd;
  });
  json rows = json::array();
  for (const auto& r : report.rows) {
    json row = {{"hbar", r.hbar}, {"n", r.n}};
    if (r.error) {
      row["error"] = *r.error;
    } else {
      row.update({{"basis_size", r.basis_size},
                  {"dt", r.dt},
                  {"E_init", r.initial_energy},
                  {"f_min_wcd", r.f_min_wcd},
                  {"f_min_wocd", r.f_min_wocd},
                  {"convergence_wcd", convergence_json(r.convergence_wcd)},
                  {"convergence_wocd", convergence_json(r.convergence_wocd)}});
    }
    rows.push_back(row);
  }
  write_json(config.output_dir / "sweep_summary.json",
             {{"physics", params_json(config.params)},
              {"protocol", protocol_json(config.driving)},
              {"lambda_grid", config.numerics.lambda_grid},
              {"rows", rows}});
  return report;
}

ClassicalReport run_classical(const RunConfig& config) {
  config.validate();
  ClassicalReport report;
  report.with_cd = config.with_cd;
  report.initial_energy = config.initial_energy > 0.0 ? config.initial_energy : config.target_energy;
  report.dt = config.numerics.dt > 0.0            ? config.numerics.dt
              : config.numerics.classical_dt > 0.0 ? config.numerics.classical_dt
                                                   : period(report.initial_energy, config.params) / 2000.0;
  const PhasePoint z0{0.0, std::sqrt(2.0 * config.params.mass * report.initial_energy)};
  TrajectoryOptions options;
  options.dt = report.dt;
  options.sample_stride = config.numerics.classical_sample_stride;
  const TrajectoryRecord record = integrate_trajectory(z0, config.params, config.driving, config.with_cd, options);
  report.max_relative_action_drift = record.max_relative_action_drift();
  report.final_relative_action_change = record.final_relative_action_change();
  report.wall_events = record.wall_events.size();
  if (config.numerics.convergence_checks) {
    TrajectoryOptions half = options;
    half.dt = 0.5 * options.dt;
    half.sample_stride = 2 * options.sample_stride;
    const TrajectoryRecord fine = integrate_trajectory(z0, config.params, config.driving, config.with_cd, half);
    report.drift_change_dt_half = std::abs(fine.max_relative_action_drift() - report.max_relative_action_drift);
  }

  write_file_atomically(config.output_dir / "trajectory.csv",
                        [&](std::ostream& out) { write_trajectory_csv(out, record); });
  write_json(config.output_dir / "summary.json",
             {{"with_cd", report.with_cd},
              {"E_init", report.initial_energy},
              {"dt", report.dt},
              {"max_relative_action_drift", report.max_relative_action_drift},
              {"final_relative_action_change", report.final_relative_action_change},
              {"wall_events", report.wall_events},
              {"physics", params_json(config.params)},
              {"protocol", protocol_json(config.driving)},
              {"convergence", {{"drift_change_dt_half", optional_json(report.drift_change_dt_half)}}}});
  return report;
}

bool ValidationReport::passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const ValidationCheck& c) { return c.passed; });
}

namespace checks {

namespace {

ValidationCheck below(std::string name, double value, double threshold, std::string detail = {}) {
  return {std::move(name), value, threshold, value < threshold, std::move(detail)};
}

int interior(int size) { return static_cast<int>(0.8 * size); }

}  // namespace

ValidationCheck eta_odd_weights(int basis_size) {
  const Eigen::MatrixXd eta = detail::eta_sine_imag(basis_size);
  double worst = 0.0;
  for (int a = 0; a < basis_size; ++a) {
    for (int gamma = 1; gamma <= 9 && a + gamma < basis_size; gamma += 2) {
      const double w = eta(a, a + gamma) * eta(a, a + gamma);
      worst = std::max(worst, std::abs(w - classical_sign_weight(gamma)));
    }
  }
  return below("eta_odd_weights", worst, 1e-10, "max |weight - 4/(pi^2 gamma^2)|, odd gamma <= 9");
}

ValidationCheck eta_even_weights(int basis_size) {
  const Eigen::MatrixXd eta = detail::eta_sine_imag(basis_size);
  double worst = 0.0;
  for (int a = 0; a < basis_size; ++a) {
    for (int b = a + 2; b < basis_size; b += 2) worst = std::max(worst, eta(a, b) * eta(a, b));
  }
  return {"eta_even_weights", worst, 0.0, worst == 0.0, "largest even-difference weight, must be exactly 0"};
}

ValidationCheck boosted_sign(int k) {
  const BasisSpec spec{std::abs(k) + 50, 1.0};
  const double up = boosted_sign_expectation(spec, std::abs(k));
  const double down = boosted_sign_expectation(spec, -std::abs(k));
  return below("boosted_sign", std::max(std::abs(up - 1.0), std::abs(down + 1.0)), 0.05,
               "<eta> = " + format_double(up) + " at k=+" + std::to_string(std::abs(k)) + ", " +
                   format_double(down) + " at k=-" + std::to_string(std::abs(k)));
}

ValidationCheck classical_relation(const PistonParams& params, int samples, unsigned seed) {
  std::mt19937_64 rng(seed);
  const double p_max = std::sqrt(2.0 * params.mass * 4.0 * critical_energy(params));
  std::uniform_real_distribution<double> uq(0.0, params.length);
  std::uniform_real_distribution<double> up(-p_max, p_max);
  double worst = 0.0;
  for (int i = 0; i < samples; ++i) {
    PhasePoint z{uq(rng), up(rng)};
    if (z.p == 0.0) z.p = 1.0;
    const double xs = xi_classical(z, params, Parameter::Slope);
    const double xl = xi_classical(z, params, Parameter::Length);
    const double scale = std::max({1.0, std::abs(xs), std::abs(z.q * z.p / (3.0 * params.slope)),
                                   std::abs(params.length * xl / (3.0 * params.slope))});
    worst = std::max(worst, generator_relation_residual(z, params) / scale);
  }
  return below("classical_relation", worst, 1e-12, "relative residual over " + std::to_string(samples) + " points");
}

ValidationCheck semiclassical_relation(const PistonParams& params, int basis_size) {
  const SpectralData spectral = diagonalize(params, basis_size);
  const EnergyOperators ops = transform_operators(spectral, params, true);
  const Eigen::MatrixXd xs = detail::xi_sc_imag(ops, spectral, params, Parameter::Slope);
  const Eigen::MatrixXd xl = detail::xi_sc_imag(ops, spectral, params, Parameter::Length);
  const double s = params.slope;
  const Eigen::MatrixXd r = xs + ops.xi2_imag / (3.0 * s) - (params.length / (3.0 * s)) * xl;
  const int m = interior(basis_size);
  const double value = r.topLeftCorner(m, m).cwiseAbs().maxCoeff() / xs.topLeftCorner(m, m).cwiseAbs().maxCoeff();
  return below("semiclassical_relation", value, 1e-10, "relative max entry on the interior block");
}

ValidationCheck gradient_identity(const PistonParams& params, int basis_size) {
  const SpectralData centre = diagonalize(params, basis_size);
  const EnergyOperators ops = transform_operators(centre, params, false);
  const Eigen::MatrixXd identity = detail::derivative_coupling(ops, centre, params, Parameter::Length);
  // The sine-basis Hamiltonian matrix is the unit-box Hamiltonian in the
  // dilated coordinate, so the eigenvector columns differentiate directly.
  const double delta = 1e-3;
  auto z_at = [&](double offset) {
    return diagonalize(params.with(Parameter::Length, params.length + offset), basis_size, &centre).transform;
  };
  const Eigen::MatrixXd dz = (8.0 * (z_at(delta) - z_at(-delta)) - (z_at(2 * delta) - z_at(-2 * delta))) / (12.0 * delta);
  Eigen::MatrixXd fd = centre.transform.transpose() * dz + ops.xi2_imag / (params.hbar * params.length);
  fd.diagonal().setZero();
  const int m = interior(basis_size);
  const double value = (identity - fd).topLeftCorner(m, m).cwiseAbs().maxCoeff() /
                       identity.topLeftCorner(m, m).cwiseAbs().maxCoeff();
  return below("gradient_identity", value, 1e-8, "relative max entry against a five-point derivative");
}

ValidationCheck oracle_trend(const PistonParams& params, const std::vector<double>& hbars, double target_energy,
                             int half_width, std::vector<double>* deviations) {
  std::vector<double> dev;
  std::string detail;
  for (double h : hbars) {
    PistonParams p = params;
    p.hbar = h;
    const int n = select_initial_level(p, target_energy);
    const int size = std::max(kDynamicalBasisFloor, spectral_basis_size(p, n));
    const SpectralData spectral = diagonalize(p, size);
    const EnergyOperators ops = transform_operators(spectral, p, true);
    const OperatorMatrix sc = assemble_xi_sc(ops, spectral, p, Parameter::Length);
    const OperatorMatrix exact = exact_cd_matrix(ops, spectral, p, Parameter::Length);
    dev.push_back(band_deviation(sc, exact, n - 1, half_width));
    detail += (detail.empty() ? "" : ", ") + std::string("hbar=") + format_double(h) + ": " + format_double(dev.back());
  }
  double worst_ratio = 0.0;
  for (std::size_t i = 1; i < dev.size(); ++i) worst_ratio = std::max(worst_ratio, dev[i] / dev[i - 1]);
  if (deviations) *deviations = dev;
  return below("oracle_trend", worst_ratio, 1.0, "largest successive deviation ratio; " + detail);
}

}  // namespace checks

ValidationReport run_validate(const RunConfig& config) {
  config.validate();
  const PistonParams& p = config.params;
  const int size = config.numerics.basis_size > 0 ? config.numerics.basis_size : 200;
  ValidationReport report;
  report.checks.push_back(checks::eta_odd_weights(size));
  report.checks.push_back(checks::eta_even_weights(size));
  report.checks.push_back(checks::boosted_sign(20));
  report.checks.push_back(checks::classical_relation(p, 1000, 20240601u));
  report.checks.push_back(checks::semiclassical_relation(p, size));
  report.checks.push_back(checks::gradient_identity(p, size));
  report.checks.push_back(checks::oracle_trend(p, {4.0, 2.0, 1.0}, config.target_energy, 5));

  json list = json::array();
  for (const auto& c : report.checks) {
    list.push_back({{"name", c.name},
                    {"value", c.value},
                    {"threshold", c.threshold},
                    {"passed", c.passed},
                    {"detail", c.detail}});
  }
  write_json(config.output_dir / "validation.json",
             {{"passed", report.passed()}, {"basis_size", size}, {"physics", params_json(p)}, {"checks", list}});
  return report;
}

BasisConvergence run_spectrum(const RunConfig& config) {
  config.validate();
  const PistonParams& p = config.params;
  const int n = config.n_init > 0 ? config.n_init : select_initial_level(p, config.target_energy);
  const int initial = std::max(config.numerics.basis_size > 0 ? config.numerics.basis_size : 200, n);
  const BasisConvergence conv = converge_level(p, n, initial);
  const SpectralData spectral = diagonalize(p, conv.size);
  write_file_atomically(config.output_dir / "spectrum.csv", [&](std::ostream& out) {
    out << "n,energy\n";
    for (Eigen::Index k = 0; k < spectral.size(); ++k) CsvRow(out) << static_cast<int>(k + 1) << spectral.eigenvalues(k);
  });
  write_json(config.output_dir / "spectrum.json",
             {{"n", n},
              {"energy", conv.energy},
              {"basis_size", conv.size},
              {"relative_change_on_doubling", conv.relative_change},
              {"critical_energy", critical_energy(p)},
              {"physics", params_json(p)}});
  return conv;
}

}  // namespace tpiston
