#include <algorithm>
#include <cmath>
#include <complex>
#include <random>
#include <sstream>

#include <doctest.h>

#include "tpiston/tdse.hpp"

using namespace tpiston;
using cd = std::complex<double>;

namespace {

PistonParams reference_params() {
  PistonParams p;
  p.mass = 1.0;
  p.hbar = 2.0;
  p.slope = 3.0;
  p.length = 25.0;
  return p;
}

const DrivingCase kCompression{Parameter::Length, -0.5, 25.0, 15.0, 0.0};

// exp(A) for a 2x2 complex matrix: e^{tr/2} (cosh(mu) I + sinh(mu)/mu B), B = A - tr/2 I, mu^2 = -det B.
Eigen::Matrix2cd expm2(const Eigen::Matrix2cd& a) {
  const cd half = 0.5 * a.trace();
  const Eigen::Matrix2cd b = a - half * Eigen::Matrix2cd::Identity();
  const cd mu = std::sqrt(-b.determinant());
  const cd shc = std::abs(mu) < 1e-12 ? cd(1.0) : std::sinh(mu) / mu;
  return std::exp(half) * (std::cosh(mu) * Eigen::Matrix2cd::Identity() + shc * b);
}

double trapezoid(const std::vector<double>& x, const std::vector<double>& y) {
  double s = 0.0;
  for (std::size_t i = 1; i < x.size(); ++i) s += 0.5 * (x[i] - x[i - 1]) * (y[i] + y[i - 1]);
  return s;
}

// Shared ħ=2 compression runs, computed once per process.
struct CompressionRuns {
  std::vector<PropagationResult> base;     // wcd, wocd, wcd dt/2, wocd dt/2
  std::vector<PropagationResult> fine;     // wcd, wocd on a doubled grid
  std::vector<PropagationResult> rotated;  // wcd in the co-rotating frame
  int basis = 0;
};

const CompressionRuns& compression_runs() {
  static const CompressionRuns runs = [] {
    CompressionRuns out;
    const PistonParams p = reference_params();
    out.basis = default_basis_size(35, p, kCompression);
    const double dt = default_time_step(p, kCompression, out.basis);
    PropagationOptions opt;
    opt.basis_size = out.basis;
    opt.snapshot_times = {0.0, 5.0, 10.0, 15.0, 20.0};
    const RunRequest req[] = {{true, dt}, {false, dt}, {true, dt / 2}, {false, dt / 2}};
    out.base = propagate_batch(35, p, kCompression, req, opt);
    opt.snapshot_times.clear();
    opt.grid_points = 2 * opt.grid_points - 1;
    const RunRequest pair[] = {{true, dt}, {false, dt}};
    out.fine = propagate_batch(35, p, kCompression, pair, opt);
    opt.grid_points = 2001;
    opt.frame = Frame::CoRotating;
    const RunRequest one[] = {{true, dt}};
    out.rotated = propagate_batch(35, p, kCompression, one, opt);
    return out;
  }();
  return runs;
}

std::vector<double> local_minima_times(const FidelityTrace& trace) {
  std::vector<double> t;
  const auto& s = trace.samples;
  for (std::size_t i = 1; i + 1 < s.size(); ++i) {
    if (s[i].fidelity < s[i - 1].fidelity && s[i].fidelity <= s[i + 1].fidelity) t.push_back(s[i].t);
  }
  return t;
}

}  // namespace

TEST_SUITE("tdse") {

TEST_CASE("right-hand side") {
  const PistonParams p = reference_params();
  const SpectralData d = diagonalize(p, 60);
  const PropagatorTerms terms = build_propagator_terms(d, p, Parameter::Length, true);
  CHECK(terms.has_cd());
  CHECK((terms.m0 + terms.m0.transpose()).cwiseAbs().maxCoeff() == 0.0);
  CHECK(terms.m0.diagonal().cwiseAbs().maxCoeff() == 0.0);
  CHECK((terms.mcd + terms.mcd.transpose()).cwiseAbs().maxCoeff() < 1e-12 * terms.mcd.cwiseAbs().maxCoeff());
  CHECK((terms.coupling(true) - terms.m0 - terms.mcd).norm() < 1e-14 * terms.coupling(true).norm());
  CHECK((terms.coupling(false) - terms.m0).norm() == 0.0);

  std::mt19937_64 rng(11);
  std::normal_distribution<double> g;
  QuantumState st;
  st.coefficients = Eigen::VectorXcd(60);
  st.phases = Eigen::VectorXd(60);
  for (int k = 0; k < 60; ++k) {
    st.coefficients(k) = {g(rng), g(rng)};
    st.phases(k) = 10.0 * g(rng);
  }
  st.coefficients.normalize();
  CHECK(rhs(st, terms, 0.0, p.hbar).cwiseAbs().maxCoeff() == 0.0);
  for (bool cdterm : {true, false}) {
    const Eigen::VectorXcd dot = rhs(st, terms, -0.5, p.hbar, cdterm);
    CHECK(std::abs(2.0 * st.coefficients.dot(dot).real()) < 1e-12);
  }
  // Direct sum as an oracle.
  const Eigen::VectorXcd dot = rhs(st, terms, -0.5, p.hbar, true);
  const Eigen::MatrixXd m = terms.coupling(true);
  for (int row : {0, 17, 59}) {
    cd acc = 0.0;
    for (int n = 0; n < 60; ++n) {
      acc += std::polar(1.0, -(st.phases(n) - st.phases(row)) / p.hbar) * m(row, n) * st.coefficients(n);
    }
    CHECK(std::abs(-0.5 * acc - dot(row)) < 1e-12);
  }
}

TEST_CASE("two-level system against the closed form") {
  const double hbar = 1.3, rate = 0.7, w = 2.0, gap = 3.0;
  PropagatorTerms terms;
  terms.m0 = (Eigen::Matrix2d() << 0.0, -w, w, 0.0).finished();
  terms.eigenvalues = Eigen::Vector2d(0.5, 0.5 + gap);
  GillStepper gill;
  Eigen::VectorXcd a = Eigen::Vector2cd(1.0, 0.0);
  const double h = 1e-3;
  const int steps = 5000;
  const GillStepper::Field f = [&](double t, const Eigen::VectorXcd& y, Eigen::VectorXcd& out) {
    QuantumState st{y, terms.eigenvalues * t, t};
    out = rhs(st, terms, rate, hbar, false);
  };
  for (int k = 0; k < steps; ++k) gill.step(f, k * h, h, a);
  const double t = steps * h;
  Eigen::Matrix2cd gen = rate * terms.m0.cast<cd>();
  gen(0, 0) += cd(0.0, -terms.eigenvalues(0) / hbar);
  gen(1, 1) += cd(0.0, -terms.eigenvalues(1) / hbar);
  const Eigen::Vector2cd c = expm2(t * gen) * Eigen::Vector2cd(1.0, 0.0);
  for (int k = 0; k < 2; ++k) {
    const cd expected = c(k) * std::polar(1.0, terms.eigenvalues(k) * t / hbar);
    CHECK(std::abs(a(k) - expected) < 1e-8);
  }
  CHECK(std::abs(a.squaredNorm() - 1.0) < 1e-8);
}

TEST_CASE("Gill step is fourth order") {
  // y' = i y on [0, 1].
  auto err = [](double h) {
    GillStepper gill;
    Eigen::VectorXcd y = Eigen::VectorXcd::Ones(1);
    const GillStepper::Field f = [](double, const Eigen::VectorXcd& v, Eigen::VectorXcd& out) { out = cd(0, 1) * v; };
    const int n = static_cast<int>(std::lround(1.0 / h));
    for (int k = 0; k < n; ++k) gill.step(f, k * h, h, y);
    return std::abs(y(0) - std::polar(1.0, 1.0));
  };
  const double ratio = err(0.02) / err(0.01);
  CHECK(ratio == doctest::Approx(16.0).epsilon(0.05));
}

TEST_CASE("eigenstate and grid helpers") {
  const QuantumState s = QuantumState::eigenstate(10, 3);
  CHECK(s.coefficients(2) == cd(1.0, 0.0));
  CHECK(s.norm_squared() == 1.0);
  CHECK(s.phases.isZero(0.0));
  CHECK_THROWS_AS(QuantumState::eigenstate(10, 11), std::invalid_argument);
  const auto g = uniform_grid(0.0, 2.0, 5);
  CHECK(g == std::vector<double>{0.0, 0.5, 1.0, 1.5, 2.0});
}

TEST_CASE("basis and step policy") {
  const PistonParams p = reference_params();
  const int n35 = spectral_basis_size(p, 35);
  CHECK(n35 >= 43);
  const SpectralData a = diagonalize(p, n35);
  const SpectralData b = diagonalize(p, 2 * n35);
  CHECK(std::abs(a.eigenvalues(34) - b.eigenvalues(34)) < 1e-8 * b.eigenvalues(34));
  CHECK(default_basis_size(35, p, kCompression) >= kDynamicalBasisFloor);
  const int size = default_basis_size(35, p, kCompression);
  const double dt = default_time_step(p, kCompression, size);
  CHECK(dt <= kCompression.duration() / 20000.0);
  const double emax = std::max(diagonalize(p, size).eigenvalues.maxCoeff(),
                               diagonalize(p.with(Parameter::Length, 15.0), size).eigenvalues.maxCoeff());
  CHECK(dt * emax / p.hbar <= 0.2 + 1e-12);
}

TEST_CASE("static protocol keeps the eigenstate") {
  const PistonParams p = reference_params();
  const auto trace = propagate(35, p, DrivingCase::frozen(Parameter::Length, 25.0, 2.0), true, 0.0, 11);
  for (const auto& s : trace.samples) {
    CHECK(s.fidelity == 1.0);
    CHECK(s.norm == doctest::Approx(1.0).epsilon(1e-15));
  }
  CHECK(trace.f_min == 1.0);
}

TEST_CASE("compression with and without CD at hbar=2") {
  const auto& runs = compression_runs();
  const auto& wcd = runs.base[0];
  const auto& wocd = runs.base[1];
  CHECK(wcd.trace.f_min == doctest::Approx(0.999).epsilon(0.02 / 0.999));
  CHECK(wocd.trace.f_min == doctest::Approx(0.641).epsilon(0.02 / 0.641));
  CHECK(wcd.initial_energy == doctest::Approx(79.52).epsilon(0.05 / 79.52));
  for (const auto* r : {&wcd, &wocd}) {
    CHECK(r->max_norm_drift < 1e-6);
    for (const auto& s : r->trace.samples) {
      CHECK(s.fidelity >= 0.0);
      CHECK(s.fidelity <= 1.0 + 1e-9);
      CHECK(s.fidelity >= r->trace.f_min);
    }
    CHECK(r->trace.samples.back().t == doctest::Approx(20.0));
    CHECK(r->trace.samples.back().lambda == doctest::Approx(15.0));
  }
}

TEST_CASE("step and grid convergence") {
  const auto& runs = compression_runs();
  for (int k = 0; k < 2; ++k) {
    CHECK(std::abs(runs.base[k].trace.f_min - runs.base[k + 2].trace.f_min) < 1e-4);
    CHECK(std::abs(runs.base[k].trace.f_min - runs.fine[k].trace.f_min) < 1e-4);
  }
}

TEST_CASE("co-rotating frame agrees with the rotating frame") {
  const auto& runs = compression_runs();
  CHECK(std::abs(runs.rotated[0].trace.f_min - runs.base[0].trace.f_min) < 1e-6);
}

TEST_CASE("basis growth at hbar=2") {
  const PistonParams p = reference_params();
  const auto& runs = compression_runs();
  PropagationOptions opt;
  opt.basis_size = runs.basis + runs.basis / 2;
  const RunRequest req[] = {{true, 0.0}, {false, 0.0}};
  const auto big = propagate_batch(35, p, kCompression, req, opt);
  CHECK(std::abs(big[0].trace.f_min - runs.base[0].trace.f_min) < 1e-3);
  CHECK(std::abs(big[1].trace.f_min - runs.base[1].trace.f_min) < 1e-3);
}

TEST_CASE("bare oscillations speed up during compression") {
  const auto minima = local_minima_times(compression_runs().base[1].trace);
  REQUIRE(minima.size() >= 4);
  std::vector<double> gaps;
  for (std::size_t i = 1; i < minima.size(); ++i) gaps.push_back(minima[i] - minima[i - 1]);
  std::size_t shrinking = 0;
  for (std::size_t i = 1; i < gaps.size(); ++i) shrinking += gaps[i] < gaps[i - 1] ? 1 : 0;
  MESSAGE("minima " << minima.size() << ", shrinking gaps " << shrinking << " of " << gaps.size() - 1);
  CHECK(2 * shrinking > gaps.size() - 1);
  CHECK(gaps.back() < gaps.front());
}

TEST_CASE("density snapshots follow the instantaneous eigenstate") {
  const auto& wcd = compression_runs().base[0];
  REQUIRE(wcd.snapshots.size() == 5);
  const PistonParams p = reference_params();
  for (const auto& snap : wcd.snapshots) {
    CHECK(snap.q.front() == 0.0);
    CHECK(snap.q.back() == doctest::Approx(kCompression.lambda_at(snap.t)).epsilon(1e-12));
    CHECK(snap.q.size() >= 2000);
    CHECK(std::abs(trapezoid(snap.q, snap.density) - 1.0) < 1e-4);
    CHECK(snap.density.front() < 1e-20);
    CHECK(snap.density.back() < 1e-20);
    const SpectralData d = diagonalize(kCompression.params_at(p, snap.t), 400);
    const auto ref = eigenstate_density(d, 35, snap.q);
    std::vector<double> diff2(snap.q.size());
    for (std::size_t i = 0; i < diff2.size(); ++i) diff2[i] = std::pow(snap.density[i] - ref[i], 2);
    const double l2 = std::sqrt(trapezoid(snap.q, diff2));
    MESSAGE("t=" << snap.t << " L2 distance " << l2);
    CHECK(l2 < 1e-2);
  }
}

TEST_CASE("eigenstate density") {
  const PistonParams p = reference_params();
  const SpectralData d = diagonalize(p, 120);
  const auto q = uniform_grid(0.0, p.length, 4001);
  const auto rho = eigenstate_density(d, 35, q);
  CHECK(std::abs(trapezoid(q, rho) - 1.0) < 1e-4);
  CHECK(rho.front() < 1e-25);
  CHECK(rho.back() < 1e-25);
  QuantumState st = QuantumState::eigenstate(120, 35);
  st.phases.setConstant(3.7);
  const auto again = reconstruct_density(st, d, q, p.hbar);
  double worst = 0.0;
  for (std::size_t i = 0; i < q.size(); ++i) worst = std::max(worst, std::abs(again[i] - rho[i]));
  CHECK(worst < 1e-12);
  // Direct sum over the sine modes.
  const double x = 7.3;
  double amp = 0.0;
  for (int b = 0; b < 120; ++b) amp += d.transform(b, 34) * std::sqrt(2.0 / p.length) * std::sin((b + 1) * M_PI * x / p.length);
  const std::vector<double> one{x};
  CHECK(eigenstate_density(d, 35, one)[0] == doctest::Approx(amp * amp).epsilon(1e-10));
  const std::vector<double> outside{p.length + 1.0};
  CHECK_THROWS_AS(reconstruct_density(st, d, outside, p.hbar), std::invalid_argument);
}

TEST_CASE("bare compression at hbar=1") {
  PistonParams p = reference_params();
  p.hbar = 1.0;
  const auto trace = propagate(70, p, kCompression, false, 0.0, 2001);
  CHECK(trace.f_min == doctest::Approx(0.092).epsilon(0.02 / 0.092));
}

TEST_CASE("expansion keeps the fidelity with CD") {
  PistonParams p = reference_params();
  p.length = 15.0;
  const DrivingCase expand{Parameter::Length, 0.5, 15.0, 25.0, 0.0};
  const auto trace = propagate(35, p, expand, true, 0.0, 2001);
  CHECK(trace.f_min >= 0.99);
}

TEST_CASE("norm abort") {
  const PistonParams p = reference_params();
  PropagationOptions opt;
  opt.basis_size = 60;
  opt.grid_points = 11;
  const RunRequest req[] = {{true, 0.05}};
  CHECK_THROWS_AS(propagate_batch(35, p, kCompression, req, opt), NumericalError);
}

TEST_CASE("csv writers") {
  FidelityTrace tr;
  tr.samples.push_back({0.0, 25.0, 1.0, 1.0, 79.5});
  tr.samples.push_back({0.5, 24.75, 0.25, 1.0, 80.0});
  std::ostringstream a;
  write_fidelity_csv(a, tr);
  CHECK(a.str() == "t,lambda,fidelity,norm,energy_expectation\n0,25,1,1,79.5\n0.5,24.75,0.25,1,80\n");
  std::ostringstream b;
  write_density_csv(b, {5.0, {0.0, 1.5}, {0.0, 0.125}});
  CHECK(b.str() == "t,q,density\n5,0,0\n5,1.5,0.125\n");
}

}  // TEST_SUITE
