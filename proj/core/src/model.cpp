#include "tpiston/model.hpp"

#include <boost/math/tools/toms748_solve.hpp>

#include <cmath>
#include <cstdint>

namespace tpiston {

std::string to_string(Parameter which) {
  return which == Parameter::Slope ? "slope" : "length";
}

Parameter parameter_from_string(const std::string& name) {
  if (name == "slope" || name == "s") return Parameter::Slope;
  if (name == "length" || name == "L") return Parameter::Length;
  throw std::invalid_argument("unknown parameter '" + name + "' (expected slope or length)");
}

void PistonParams::validate() const {
  if (!(mass > 0.0)) throw std::invalid_argument("mass must be positive");
  if (!(hbar > 0.0)) throw std::invalid_argument("hbar must be positive");
  if (!(slope > 0.0)) throw std::invalid_argument("slope must be positive");
  if (!(length > 0.0)) throw std::invalid_argument("length must be positive");
}

PistonParams PistonParams::with(Parameter which, double value) const {
  PistonParams out = *this;
  (which == Parameter::Slope ? out.slope : out.length) = value;
  return out;
}

double PistonParams::get(Parameter which) const {
  return which == Parameter::Slope ? slope : length;
}

double hamiltonian(PhasePoint z, const PistonParams& params) {
  return z.p * z.p / (2.0 * params.mass) + params.slope * z.q;
}

double critical_energy(const PistonParams& params) {
  return params.slope * params.length;
}

Regime classify(double energy, const PistonParams& params) {
  const double ec = critical_energy(params);
  if (std::abs(energy - ec) <= kCriticalRelTol * ec) return Regime::AtCritical;
  return energy < ec ? Regime::BelowCritical : Regime::AboveCritical;
}

namespace {

// 4 sqrt(2m) / (3 s), the common prefactor of both volume branches.
double volume_prefactor(const PistonParams& params) {
  return 4.0 * std::sqrt(2.0 * params.mass) / (3.0 * params.slope);
}

void require_positive_energy(double energy) {
  if (!(energy > 0.0)) throw std::invalid_argument("energy must be positive");
}

}  // namespace

double phase_volume(double energy, const PistonParams& params) {
  require_positive_energy(energy);
  const double k = volume_prefactor(params);
  const double ec = critical_energy(params);
  if (energy <= ec) return k * std::pow(energy, 1.5);
  return k * (std::pow(energy, 1.5) - std::pow(energy - ec, 1.5));
}

double energy_from_volume(double omega, const PistonParams& params) {
  if (!(omega > 0.0)) throw std::invalid_argument("phase volume must be positive");
  const double k = volume_prefactor(params);
  const double ec = critical_energy(params);
  const double below = std::pow(omega / k, 2.0 / 3.0);
  if (below <= ec) return below;

  // Above E_c the volume grows like sqrt(E); E^{3/2} - (E-sL)^{3/2} >= 1.5 sL sqrt(E - sL)
  // gives an upper bracket.
  const double lo = ec;
  const double hi = ec + std::pow(omega / (1.5 * k * ec), 2.0);
  auto residual = [&](double e) {
    return k * (std::pow(e, 1.5) - std::pow(e - ec, 1.5)) - omega;
  };
  const double flo = residual(lo);
  const double fhi = residual(hi);
  if (flo > 0.0 || fhi < 0.0) {
    throw NumericalError("energy_from_volume: root not bracketed on [" + std::to_string(lo) +
                         ", " + std::to_string(hi) + "]");
  }
  if (fhi == 0.0) return hi;
  const double abs_tol = 1e-13 * ec;
  auto tol = [abs_tol](double a, double b) { return std::abs(b - a) <= abs_tol; };
  std::uintmax_t max_iter = 200;
  const auto [a, b] = boost::math::tools::toms748_solve(residual, lo, hi, flo, fhi, tol, max_iter);
  if (max_iter >= 200) throw NumericalError("energy_from_volume: root solve did not converge");
  return 0.5 * (a + b);
}

double micro_avg_grad(double energy, const PistonParams& params, Parameter which) {
  require_positive_energy(energy);
  const double s = params.slope;
  const double ec = critical_energy(params);
  if (energy <= ec) {
    return which == Parameter::Slope ? 2.0 * energy / (3.0 * s) : 0.0;
  }
  const double root = std::sqrt(energy * (energy - ec));
  if (which == Parameter::Slope) return (energy + ec - root) / (3.0 * s);
  return -(energy - ec + root) / params.length;
}

double period(double energy, const PistonParams& params) {
  require_positive_energy(energy);
  const double pref = 2.0 * std::sqrt(2.0 * params.mass) / params.slope;
  const double ec = critical_energy(params);
  if (energy <= ec) return pref * std::sqrt(energy);
  return pref * (std::sqrt(energy) - std::sqrt(energy - ec));
}

double action(PhasePoint z, const PistonParams& params) {
  return phase_volume(hamiltonian(z, params), params);
}

EnergyShell energy_shell(double energy, const PistonParams& params) {
  return {energy, phase_volume(energy, params), period(energy, params), classify(energy, params)};
}

}  // namespace tpiston
