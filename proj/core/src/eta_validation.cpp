#include "tpiston/eta_validation.hpp"

#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>

namespace tpiston {

using std::numbers::pi;

double flat_box_energy(int alpha, const PistonParams& params, double length) {
  const double k = alpha * pi * params.hbar;
  return k * k / (2.0 * params.mass * length * length);
}

double flat_box_period(double energy, double mass, double length) {
  if (!(energy > 0.0)) throw std::invalid_argument("flat_box_period: energy must be positive");
  return 2.0 * length / std::sqrt(2.0 * energy / mass);
}

double classical_sign_weight(int gamma) {
  if (gamma % 2 == 0) return 0.0;
  return 4.0 / (pi * pi * static_cast<double>(gamma) * static_cast<double>(gamma));
}

std::vector<SpectralLine> eta_autocorrelation(const BasisSpec& spec, const PistonParams& params,
                                              int alpha) {
  spec.validate();
  if (alpha < 1 || alpha > spec.size) throw std::invalid_argument("eta_autocorrelation: alpha out of range");
  const Eigen::MatrixXd eta = detail::eta_sine_imag(spec.size);
  const double ea = flat_box_energy(alpha, params, spec.length);
  std::vector<SpectralLine> lines;
  lines.reserve(static_cast<std::size_t>(spec.size - 1));
  for (int beta = 1; beta <= spec.size; ++beta) {
    if (beta == alpha) continue;
    const double v = eta(alpha - 1, beta - 1);
    lines.push_back({beta, (flat_box_energy(beta, params, spec.length) - ea) / params.hbar, v * v});
  }
  return lines;
}

namespace {

// Integral over [0, pi] of exp(i a x) for integer a.
std::complex<double> unit_phase_integral(long a) {
  if (a == 0) return {pi, 0.0};
  const double sign = (a % 2 == 0) ? 1.0 : -1.0;
  return (sign - 1.0) / std::complex<double>(0.0, static_cast<double>(a));
}

}  // namespace

double boosted_sign_expectation(const BasisSpec& spec, int k) {
  spec.validate();
  const int n = spec.size;
  Eigen::VectorXcd c(n);
  for (int beta = 1; beta <= n; ++beta) {
    const long b = beta;
    c(beta - 1) = (unit_phase_integral(k + b - 1) + unit_phase_integral(k - b + 1) -
                   unit_phase_integral(k + b + 1) - unit_phase_integral(k - b - 1)) /
                  (2.0 * pi);
  }
  Eigen::MatrixXcd eta(n, n);
  eta.real().setZero();
  eta.imag() = detail::eta_sine_imag(n);
  const std::complex<double> num = c.dot(eta * c);
  const double den = c.squaredNorm();
  return num.real() / den;
}

}  // namespace tpiston
