#include <benchmark/benchmark.h>

#include "tpiston/cd_operators.hpp"
#include "tpiston/tdse.hpp"

using namespace tpiston;

namespace {

PistonParams reference_params() {
  PistonParams p;
  p.mass = 1.0;
  p.hbar = 2.0;
  p.slope = 3.0;
  p.length = 25.0;
  return p;
}

void BM_Diagonalize(benchmark::State& state) {
  const PistonParams p = reference_params();
  const int n = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(diagonalize(p, n));
}
BENCHMARK(BM_Diagonalize)->Arg(88)->Arg(150)->Arg(300)->Unit(benchmark::kMicrosecond);

void BM_TransformOperators(benchmark::State& state) {
  const PistonParams p = reference_params();
  const SpectralData d = diagonalize(p, static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(transform_operators(d, p));
}
BENCHMARK(BM_TransformOperators)->Arg(88)->Arg(150)->Arg(300)->Unit(benchmark::kMicrosecond);

void BM_PropagatorTerms(benchmark::State& state) {
  const PistonParams p = reference_params();
  const SpectralData d = diagonalize(p, static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(build_propagator_terms(d, p, Parameter::Length, true));
}
BENCHMARK(BM_PropagatorTerms)->Arg(88)->Arg(150)->Unit(benchmark::kMicrosecond);

// One Gill step of the rotating-frame equation with frozen coupling.
void BM_GillStep(benchmark::State& state) {
  const PistonParams p = reference_params();
  const int n = static_cast<int>(state.range(0));
  const SpectralData d = diagonalize(p, n);
  const PropagatorTerms terms = build_propagator_terms(d, p, Parameter::Length, true);
  QuantumState s = QuantumState::eigenstate(n, 35);
  s.phases = d.eigenvalues * 0.1;
  GillStepper stepper;
  const GillStepper::Field f = [&](double, const Eigen::VectorXcd& y, Eigen::VectorXcd& dydt) {
    QuantumState tmp{y, s.phases, 0.0};
    dydt = rhs(tmp, terms, -0.5, p.hbar);
  };
  Eigen::VectorXcd y = s.coefficients;
  for (auto _ : state) {
    stepper.step(f, 0.0, 1e-3, y);
    benchmark::DoNotOptimize(y.data());
  }
}
BENCHMARK(BM_GillStep)->Arg(88)->Arg(150)->Unit(benchmark::kMicrosecond);

void BM_CompressionRun(benchmark::State& state) {
  const PistonParams p = reference_params();
  const DrivingCase drive{Parameter::Length, -0.5, 25.0, 24.0, 0.0};
  for (auto _ : state) benchmark::DoNotOptimize(propagate(35, p, drive, true, 0.0, 201));
}
BENCHMARK(BM_CompressionRun)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
