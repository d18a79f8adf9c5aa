#include "tpiston/tdse.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <memory>
#include <numbers>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>

#include "tpiston/csv.hpp"

namespace tpiston {

namespace {

using cd = std::complex<double>;
constexpr cd kI{0.0, 1.0};

// Real N x N matrix times a complex vector, treating the vector as a 2 x N
// real block (re/im interleaved) so Eigen runs one real product.
void real_times_complex(const Eigen::MatrixXd& m, const Eigen::VectorXcd& x, Eigen::VectorXcd& out) {
  const Eigen::Index n = x.size();
  out.resize(n);
  Eigen::Map<const Eigen::Matrix<double, 2, Eigen::Dynamic>> xin(reinterpret_cast<const double*>(x.data()), 2, n);
  Eigen::Map<Eigen::Matrix<double, 2, Eigen::Dynamic>> xout(reinterpret_cast<double*>(out.data()), 2, n);
  xout.noalias() = xin * m.transpose();
}

}  // namespace

Eigen::MatrixXd PropagatorTerms::coupling(bool with_cd) const {
  if (!with_cd) return m0;
  if (!has_cd()) throw std::logic_error("PropagatorTerms: CD terms were not built");
  return m0 + mcd;
}

PropagatorTerms build_propagator_terms(const SpectralData& spectral, const PistonParams& params,
                                       Parameter which, bool with_cd_terms) {
  const EnergyOperators ops = transform_operators(spectral, params, with_cd_terms);
  PropagatorTerms terms;
  terms.m0 = -detail::derivative_coupling(ops, spectral, params, which);
  if (with_cd_terms) terms.mcd = detail::xi_sc_imag(ops, spectral, params, which) / params.hbar;
  terms.eigenvalues = spectral.eigenvalues;
  return terms;
}

QuantumState QuantumState::eigenstate(int size, int n_init) {
  if (n_init < 1 || n_init > size) throw std::invalid_argument("QuantumState: n_init outside the basis");
  QuantumState s;
  s.coefficients = Eigen::VectorXcd::Zero(size);
  s.coefficients(n_init - 1) = 1.0;
  s.phases = Eigen::VectorXd::Zero(size);
  return s;
}

void GillStepper::step(const Field& f, double t, double h, Eigen::VectorXcd& y) {
  static const double r2 = std::sqrt(2.0);
  f(t, y, k1_);
  k1_ *= h;
  stage_ = y + 0.5 * k1_;
  f(t + 0.5 * h, stage_, k2_);
  k2_ *= h;
  stage_ = y + (-0.5 + 1.0 / r2) * k1_ + (1.0 - 1.0 / r2) * k2_;
  f(t + 0.5 * h, stage_, k3_);
  k3_ *= h;
  stage_ = y - (1.0 / r2) * k2_ + (1.0 + 1.0 / r2) * k3_;
  f(t + h, stage_, k4_);
  k4_ *= h;
  y += (k1_ + (2.0 - r2) * k2_ + (2.0 + r2) * k3_ + k4_) / 6.0;
}

Eigen::VectorXcd rhs(const QuantumState& state, const PropagatorTerms& terms, double rate,
                     double hbar, bool with_cd) {
  const Eigen::Index n = state.coefficients.size();
  if (rate == 0.0) return Eigen::VectorXcd::Zero(n);
  Eigen::VectorXcd rot(n);
  for (Eigen::Index k = 0; k < n; ++k) rot(k) = std::polar(1.0, -state.phases(k) / hbar);
  Eigen::VectorXcd u = rot.cwiseProduct(state.coefficients);
  Eigen::VectorXcd v;
  real_times_complex(terms.coupling(with_cd), u, v);
  return rate * rot.conjugate().cwiseProduct(v);
}

int spectral_basis_size(const PistonParams& params, int n, double rel_tol) {
  if (n < 1) throw std::invalid_argument("spectral_basis_size: level must be >= 1");
  for (int size = n + 8; size <= 4096; size += 4) {
    const double e1 = diagonalize(params, size).eigenvalues(n - 1);
    const double e2 = diagonalize(params, 2 * size).eigenvalues(n - 1);
    if (std::abs(e1 - e2) <= rel_tol * std::abs(e2)) return size;
  }
  throw NumericalError("spectral_basis_size: level " + std::to_string(n) + " did not converge");
}

namespace {

std::pair<PistonParams, PistonParams> protocol_ends(const PistonParams& params, const DrivingCase& driving) {
  const double end = driving.rate == 0.0 ? driving.lambda_start : driving.lambda_end;
  return {params.with(driving.which, driving.lambda_start), params.with(driving.which, end)};
}

}  // namespace

int default_basis_size(int n_init, const PistonParams& params, const DrivingCase& driving) {
  const auto [first, last] = protocol_ends(params, driving);
  return std::max({kDynamicalBasisFloor, spectral_basis_size(first, n_init), spectral_basis_size(last, n_init)});
}

double default_time_step(const PistonParams& params, const DrivingCase& driving, int basis_size) {
  const auto [first, last] = protocol_ends(params, driving);
  const double e_max = std::max(diagonalize(first, basis_size).eigenvalues.maxCoeff(),
                                diagonalize(last, basis_size).eigenvalues.maxCoeff());
  return std::min(driving.duration() / 20000.0, 0.2 * params.hbar / e_max);
}

std::vector<double> uniform_grid(double lo, double hi, int points) {
  if (points < 2) throw std::invalid_argument("uniform_grid: need at least two points");
  std::vector<double> g(static_cast<std::size_t>(points));
  for (int i = 0; i < points; ++i) g[static_cast<std::size_t>(i)] = lo + (hi - lo) * i / (points - 1);
  g.back() = hi;
  return g;
}

namespace {

Eigen::VectorXcd position_amplitudes(const Eigen::VectorXcd& sine_coeffs, double length,
                                     std::span<const double> q_grid) {
  const Eigen::Index n = sine_coeffs.size();
  const double norm = std::sqrt(2.0 / length);
  Eigen::VectorXcd psi(static_cast<Eigen::Index>(q_grid.size()));
  for (std::size_t i = 0; i < q_grid.size(); ++i) {
    const double q = q_grid[i];
    if (q < -1e-12 * length || q > length * (1.0 + 1e-12)) {
      throw std::invalid_argument("reconstruct_density: q outside [0, L]");
    }
    // sin(b x) by the Chebyshev recurrence sin((b+1)x) = 2 cos x sin(bx) - sin((b-1)x).
    const double x = std::numbers::pi * q / length;
    const double c2 = 2.0 * std::cos(x);
    double prev = 0.0;
    double cur = std::sin(x);
    cd acc = 0.0;
    for (Eigen::Index b = 0; b < n; ++b) {
      acc += sine_coeffs(b) * cur;
      const double next = c2 * cur - prev;
      prev = cur;
      cur = next;
    }
    psi(static_cast<Eigen::Index>(i)) = norm * acc;
  }
  return psi;
}

}  // namespace

std::vector<double> reconstruct_density(const QuantumState& state, const SpectralData& spectral,
                                        std::span<const double> q_grid, double hbar) {
  const Eigen::Index n = state.coefficients.size();
  if (n != spectral.size()) throw std::invalid_argument("reconstruct_density: size mismatch");
  Eigen::VectorXcd weighted(n);
  for (Eigen::Index k = 0; k < n; ++k) {
    weighted(k) = state.coefficients(k) * std::polar(1.0, -state.phases(k) / hbar);
  }
  const Eigen::VectorXcd sine = spectral.transform.cast<cd>() * weighted;
  const Eigen::VectorXcd psi = position_amplitudes(sine, spectral.length, q_grid);
  std::vector<double> out(q_grid.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::norm(psi(static_cast<Eigen::Index>(i)));
  return out;
}

std::vector<double> eigenstate_density(const SpectralData& spectral, int n,
                                       std::span<const double> q_grid) {
  if (n < 1 || n > spectral.size()) throw std::invalid_argument("eigenstate_density: level out of range");
  const Eigen::VectorXcd sine = spectral.transform.col(n - 1).cast<cd>();
  const Eigen::VectorXcd psi = position_amplitudes(sine, spectral.length, q_grid);
  std::vector<double> out(q_grid.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::norm(psi(static_cast<Eigen::Index>(i)));
  return out;
}

namespace {

struct Snapshot {
  double t = 0.0;
  double lambda = 0.0;
  PistonParams params;
  SpectralData spectral;
  Eigen::MatrixXd m_wocd;
  Eigen::MatrixXd m_wcd;  // empty unless a run needs it

  const Eigen::MatrixXd& coupling(bool with_cd) const { return with_cd ? m_wcd : m_wocd; }
};

Snapshot make_snapshot(const PistonParams& base, const DrivingCase& driving, double t, double lambda,
                       int size, bool need_cd, const Snapshot* previous) {
  Snapshot s;
  s.t = t;
  s.lambda = lambda;
  s.params = base.with(driving.which, lambda);
  s.spectral = diagonalize(s.params, size, previous ? &previous->spectral : nullptr);
  PropagatorTerms terms = build_propagator_terms(s.spectral, s.params, driving.which, need_cd);
  s.m_wocd = std::move(terms.m0);
  if (need_cd) s.m_wcd = s.m_wocd + terms.mcd;
  return s;
}

// Linear blend of the two interval end matrices, cached on the weight.
class CouplingBlend {
 public:
  const Eigen::MatrixXd& at(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, double w) {
    if (w == 0.0) return a;
    if (w == 1.0) return b;
    Slot& slot = (slots_[0].w == w) ? slots_[0] : (slots_[1].w == w) ? slots_[1] : slots_[next_++ & 1];
    if (slot.w != w) {
      slot.m.noalias() = (1.0 - w) * a + w * b;
      slot.w = w;
    }
    return slot.m;
  }
  void reset() {
    slots_[0].w = slots_[1].w = std::numeric_limits<double>::quiet_NaN();
  }

 private:
  struct Slot {
    double w = std::numeric_limits<double>::quiet_NaN();
    Eigen::MatrixXd m;
  };
  Slot slots_[2];
  unsigned next_ = 0;
};

struct Run {
  RunRequest request;
  int steps_per_interval = 1;
  double h = 0.0;
  Eigen::VectorXcd y;  // coefficients in the integration frame
  PropagationResult result;
  std::size_t next_snapshot = 0;
  CouplingBlend blend;
};

class Stepper {
 public:
  Stepper(const Snapshot& a, const Snapshot& b, double rate, double hbar, Frame frame,
          const Eigen::VectorXd& phases_a)
      : a_(a), b_(b), rate_(rate), hbar_(hbar), frame_(frame), phases_a_(phases_a),
        span_(b.t - a.t) {}

  // Phases at offset tau into the interval: exact integral of the linear E_n(t).
  Eigen::VectorXd phases(double tau) const {
    const auto& ea = a_.spectral.eigenvalues;
    const auto& eb = b_.spectral.eigenvalues;
    return phases_a_ + tau * ea + (tau * tau / (2.0 * span_)) * (eb - ea);
  }

  Eigen::VectorXd energies(double tau) const {
    const double w = tau / span_;
    return (1.0 - w) * a_.spectral.eigenvalues + w * b_.spectral.eigenvalues;
  }

  void eval(Run& run, double tau, const Eigen::VectorXcd& y, Eigen::VectorXcd& out) {
    const double w = std::clamp(tau / span_, 0.0, 1.0);
    const Eigen::MatrixXd& m = run.blend.at(a_.coupling(run.request.with_cd), b_.coupling(run.request.with_cd), w);
    const Eigen::Index n = y.size();
    if (frame_ == Frame::Rotating) {
      const Eigen::VectorXd ph = phases(tau);
      rot_.resize(n);
      for (Eigen::Index k = 0; k < n; ++k) rot_(k) = std::polar(1.0, -ph(k) / hbar_);
      tmp_ = rot_.cwiseProduct(y);
      real_times_complex(m, tmp_, out);
      out = rate_ * rot_.conjugate().cwiseProduct(out);
    } else {
      real_times_complex(m, y, out);
      out *= rate_;
      const Eigen::VectorXd e = energies(tau);
      out.noalias() -= (kI / hbar_) * e.cast<cd>().cwiseProduct(y);
    }
  }

  void step(Run& run, double tau, double h) {
    const GillStepper::Field f = [&](double t, const Eigen::VectorXcd& y, Eigen::VectorXcd& dydt) {
      eval(run, t, y, dydt);
    };
    gill_.step(f, tau, h, run.y);
  }

 private:
  const Snapshot& a_;
  const Snapshot& b_;
  double rate_;
  double hbar_;
  Frame frame_;
  const Eigen::VectorXd& phases_a_;
  double span_;
  Eigen::VectorXcd rot_, tmp_;
  GillStepper gill_;
};

// Coefficients a_n from the integration-frame vector.
Eigen::VectorXcd to_expansion(const Eigen::VectorXcd& y, const Eigen::VectorXd& phases, double hbar,
                              Frame frame) {
  if (frame == Frame::Rotating) return y;
  Eigen::VectorXcd a(y.size());
  for (Eigen::Index k = 0; k < y.size(); ++k) a(k) = y(k) * std::polar(1.0, phases(k) / hbar);
  return a;
}

void record(Run& run, int n_init, double t, double lambda, const Eigen::VectorXd& energies,
            bool keep_sample) {
  const double f = std::abs(run.y(n_init - 1));
  const double norm2 = run.y.squaredNorm();
  run.result.trace.f_min = std::min(run.result.trace.f_min, f);
  run.result.max_norm_drift = std::max(run.result.max_norm_drift, std::abs(norm2 - 1.0));
  if (keep_sample) {
    const double energy = run.y.cwiseAbs2().dot(energies);
    run.result.trace.samples.push_back({t, lambda, f, std::sqrt(norm2), energy});
  }
}

void take_snapshot(Run& run, double t, const Snapshot& grid, const Eigen::VectorXd& phases,
                   double hbar, Frame frame, const std::vector<double>& q_grid) {
  QuantumState state;
  state.coefficients = to_expansion(run.y, phases, hbar, frame);
  state.phases = phases;
  state.time = t;
  run.result.snapshots.push_back({t, q_grid, reconstruct_density(state, grid.spectral, q_grid, hbar)});
}

}  // namespace

std::vector<PropagationResult> propagate_batch(int n_init, const PistonParams& params,
                                               const DrivingCase& driving,
                                               std::span<const RunRequest> runs,
                                               const PropagationOptions& options) {
  params.validate();
  driving.validate();
  if (runs.empty()) return {};
  if (options.grid_points < 2) throw std::invalid_argument("propagate: grid_points must be >= 2");
  if (options.sample_stride < 1) throw std::invalid_argument("propagate: sample_stride must be >= 1");
  const int size = options.basis_size > 0 ? options.basis_size : default_basis_size(n_init, params, driving);
  if (n_init < 1 || n_init > size) throw std::invalid_argument("propagate: n_init outside the basis");

  const double duration = driving.duration();
  const int intervals = options.grid_points - 1;
  const double span = duration / intervals;
  const std::vector<double> lambdas = uniform_grid(driving.lambda_start,
                                                   driving.rate == 0.0 ? driving.lambda_start : driving.lambda_end,
                                                   options.grid_points);
  const bool frozen = driving.rate == 0.0;
  bool need_cd = false;
  for (const auto& r : runs) need_cd = need_cd || r.with_cd;

  std::vector<double> snapshot_times = options.snapshot_times;
  std::sort(snapshot_times.begin(), snapshot_times.end());
  for (double t : snapshot_times) {
    if (t < -1e-12 || t > duration * (1.0 + 1e-12)) {
      throw std::invalid_argument("propagate: snapshot time outside the protocol");
    }
  }

  std::vector<Run> state(runs.size());
  double default_dt = 0.0;
  for (std::size_t i = 0; i < runs.size(); ++i) {
    Run& r = state[i];
    r.request = runs[i];
    if (r.request.dt <= 0.0 && default_dt == 0.0) default_dt = default_time_step(params, driving, size);
    const double dt = r.request.dt > 0.0 ? r.request.dt : default_dt;
    if (!(dt > 0.0) || !std::isfinite(dt)) throw std::invalid_argument("propagate: dt must be positive");
    r.steps_per_interval = std::max(1, static_cast<int>(std::ceil(span / dt * (1.0 - 1e-12))));
    r.h = span / r.steps_per_interval;
    r.y = Eigen::VectorXcd::Zero(size);
    r.y(n_init - 1) = 1.0;
    r.result.dt = r.h;
    r.result.basis_size = size;
  }

  auto snap_a = std::make_unique<Snapshot>(
      make_snapshot(params, driving, 0.0, lambdas.front(), size, need_cd, nullptr));
  Eigen::VectorXd phases = Eigen::VectorXd::Zero(size);
  const double hbar = params.hbar;
  const std::vector<double> q_grid =
      snapshot_times.empty() ? std::vector<double>{} : uniform_grid(0.0, 1.0, options.q_grid_points);
  auto scaled_q = [&](const Snapshot& s) {
    std::vector<double> q(q_grid);
    for (double& v : q) v *= s.params.length;
    q.back() = s.params.length;
    return q;
  };

  for (auto& r : state) {
    r.result.initial_energy = snap_a->spectral.eigenvalues(n_init - 1);
    record(r, n_init, 0.0, snap_a->lambda, snap_a->spectral.eigenvalues, true);
  }

  for (int k = 0; k < intervals; ++k) {
    const double t_b = (k + 1 == intervals) ? duration : duration * (k + 1) / intervals;
    std::unique_ptr<Snapshot> snap_b;
    if (frozen) {
      snap_b = std::make_unique<Snapshot>(*snap_a);
      snap_b->t = t_b;
    } else {
      snap_b = std::make_unique<Snapshot>(
          make_snapshot(params, driving, t_b, lambdas[static_cast<std::size_t>(k + 1)], size, need_cd, snap_a.get()));
    }
    const double real_span = snap_b->t - snap_a->t;

    for (auto& r : state) {
      Stepper stepper(*snap_a, *snap_b, driving.rate, hbar, options.frame, phases);
      r.blend.reset();
      const int steps = r.steps_per_interval;
      const double h = real_span / steps;
      // Snapshots land on the grid point nearest the requested time.
      while (r.next_snapshot < snapshot_times.size() &&
             snapshot_times[r.next_snapshot] < snap_a->t + 0.5 * real_span) {
        take_snapshot(r, snapshot_times[r.next_snapshot], *snap_a, phases, hbar, options.frame,
                      scaled_q(*snap_a));
        ++r.next_snapshot;
      }
      for (int j = 0; j < steps; ++j) {
        const double tau0 = j * h;
        stepper.step(r, tau0, h);
        ++r.result.steps;
        const double tau = (j + 1 == steps) ? real_span : tau0 + h;
        const double t = snap_a->t + tau;
        const double w = tau / real_span;
        const double lambda = (1.0 - w) * snap_a->lambda + w * snap_b->lambda;
        const bool keep = (r.result.steps % options.sample_stride == 0) || (k + 1 == intervals && j + 1 == steps);
        record(r, n_init, t, lambda, stepper.energies(tau), keep);
        if (r.result.max_norm_drift > options.norm_abort) {
          std::ostringstream msg;
          msg << "propagate: norm drift " << r.result.max_norm_drift << " exceeds " << options.norm_abort
              << " at t=" << t << " (N=" << size << ", dt=" << h << ", with_cd=" << r.request.with_cd
              << ")";
          throw NumericalError(msg.str());
        }
      }
    }
    // Trapezoid of the linearly interpolated E_n over the interval.
    phases += 0.5 * real_span * (snap_a->spectral.eigenvalues + snap_b->spectral.eigenvalues);
    snap_a = std::move(snap_b);
  }

  for (auto& r : state) {
    while (r.next_snapshot < snapshot_times.size()) {
      take_snapshot(r, snapshot_times[r.next_snapshot], *snap_a, phases, hbar, options.frame, scaled_q(*snap_a));
      ++r.next_snapshot;
    }
    r.result.final_state.coefficients = to_expansion(r.y, phases, hbar, options.frame);
    r.result.final_state.phases = phases;
    r.result.final_state.time = duration;
  }

  std::vector<PropagationResult> out;
  out.reserve(state.size());
  for (auto& r : state) out.push_back(std::move(r.result));
  return out;
}

FidelityTrace propagate(int n_init, const PistonParams& params, const DrivingCase& driving,
                        bool with_cd, double dt, int grid_points) {
  PropagationOptions options;
  options.grid_points = grid_points;
  const RunRequest run{with_cd, dt};
  return propagate_batch(n_init, params, driving, std::span<const RunRequest>(&run, 1), options)
      .front()
      .trace;
}

void write_fidelity_csv(std::ostream& out, const FidelityTrace& trace) {
  out << "t,lambda,fidelity,norm,energy_expectation\n";
  for (const auto& s : trace.samples) CsvRow(out) << s.t << s.lambda << s.fidelity << s.norm << s.energy;
}

void write_density_csv(std::ostream& out, const DensitySnapshot& snapshot) {
  out << "t,q,density\n";
  for (std::size_t i = 0; i < snapshot.q.size(); ++i) {
    CsvRow(out) << snapshot.t << snapshot.q[i] << snapshot.density[i];
  }
}

}  // namespace tpiston
