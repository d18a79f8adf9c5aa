#include "tpiston/cd_operators.hpp"

#include <cmath>
#include <complex>
#include <stdexcept>

namespace tpiston {

FGDiagonal build_fg_diagonal(const SpectralData& spectral, const PistonParams& params) {
  const double ec = critical_energy(params);
  const double root2m = std::sqrt(2.0 * params.mass);
  const Eigen::Index n = spectral.size();
  FGDiagonal out{Eigen::VectorXd::Zero(n), Eigen::VectorXd::Zero(n)};
  for (Eigen::Index k = 0; k < n; ++k) {
    const double e = spectral.eigenvalues(k);
    if (e <= ec) continue;
    const double w = e - ec;
    out.f(k) = w + std::sqrt(e * w);
    out.g(k) = root2m * (e * std::sqrt(w) + std::sqrt(e) * w);
  }
  return out;
}

EnergyOperators transform_operators(const SpectralData& spectral, const PistonParams& params,
                                    bool with_cd_terms) {
  const int n = static_cast<int>(spectral.size());
  const Eigen::MatrixXd& z = spectral.transform;
  EnergyOperators ops;
  ops.q = detail::similarity(z, detail::q_sine_real(params.length, n));
  ops.xi2_imag = detail::similarity(z, detail::xi2_sine_imag(params.hbar, n));
  if (with_cd_terms) {
    ops.p_imag = detail::similarity(z, detail::p_sine_imag(params.hbar, params.length, n));
    ops.eta_imag = detail::similarity(z, detail::eta_sine_imag(n));
    ops.has_cd_terms = true;
  }
  return ops;
}

namespace detail {

Eigen::MatrixXd derivative_coupling(const EnergyOperators& ops, const SpectralData& spectral,
                                    const PistonParams& params, Parameter which) {
  const Eigen::VectorXd& e = spectral.eigenvalues;
  const Eigen::Index n = e.size();
  const double floor = 1e-10 * e.cwiseAbs().maxCoeff();
  Eigen::MatrixXd d(n, n);
  for (Eigen::Index col = 0; col < n; ++col) {
    for (Eigen::Index row = 0; row < n; ++row) {
      if (row == col) {
        d(row, col) = 0.0;
        continue;
      }
      const double gap = e(col) - e(row);
      if (std::abs(gap) < floor) {
        throw NumericalError("derivative_coupling: near-degenerate levels " + std::to_string(row + 1) +
                             " and " + std::to_string(col + 1));
      }
      d(row, col) = ops.q(row, col) / gap;
    }
  }
  if (which == Parameter::Slope) return d;
  // (1 / i hbar) * (i X) = X / hbar.
  Eigen::MatrixXd dl = (3.0 * params.slope / params.length) * d +
                       ops.xi2_imag / (params.hbar * params.length);
  dl.diagonal().setZero();
  return dl;
}

Eigen::MatrixXd xi_sc_imag(const EnergyOperators& ops, const SpectralData& spectral,
                           const PistonParams& params, Parameter which) {
  if (!ops.has_cd_terms) throw std::invalid_argument("xi_sc requires transformed p and eta");
  const auto fg = build_fg_diagonal(spectral, params);
  const Eigen::Index n = spectral.size();
  // Symmetrized products with a diagonal: (A F + F A)/2 has entries A_mn (F_m + F_n)/2.
  Eigen::MatrixXd xi1(n, n);
  Eigen::MatrixXd xi3(n, n);
  for (Eigen::Index col = 0; col < n; ++col) {
    for (Eigen::Index row = 0; row < n; ++row) {
      xi1(row, col) = 0.5 * ops.p_imag(row, col) * (fg.f(row) + fg.f(col));
      xi3(row, col) = 0.5 * ops.eta_imag(row, col) * (fg.g(row) + fg.g(col));
    }
  }
  const double s = params.slope;
  if (which == Parameter::Slope) {
    return (xi3 - xi1) / (3.0 * s * s) - ops.xi2_imag / (3.0 * s);
  }
  return (xi3 - xi1) / (s * params.length);
}

}  // namespace detail

namespace {

OperatorMatrix energy_operator_from_imag(const Eigen::MatrixXd& x) {
  Eigen::MatrixXcd c(x.rows(), x.cols());
  c.real().setZero();
  c.imag() = x;
  return {std::move(c), Basis::Energy, true};
}

OperatorMatrix energy_operator_from_real(const Eigen::MatrixXd& x, bool hermitian) {
  return {x.cast<std::complex<double>>(), Basis::Energy, hermitian};
}

}  // namespace

OperatorMatrix assemble_xi_sc(const EnergyOperators& ops, const SpectralData& spectral,
                              const PistonParams& params, Parameter which) {
  return energy_operator_from_imag(detail::xi_sc_imag(ops, spectral, params, which));
}

OperatorMatrix grad_s_matrix(const EnergyOperators& ops, const SpectralData& spectral) {
  PistonParams unused;
  return energy_operator_from_real(-detail::derivative_coupling(ops, spectral, unused, Parameter::Slope),
                                   false);
}

OperatorMatrix grad_L_matrix(const EnergyOperators& ops, const SpectralData& spectral,
                             const PistonParams& params) {
  return energy_operator_from_real(-detail::derivative_coupling(ops, spectral, params, Parameter::Length),
                                   false);
}

OperatorMatrix exact_cd_matrix(const EnergyOperators& ops, const SpectralData& spectral,
                               const PistonParams& params, Parameter which) {
  return energy_operator_from_imag(params.hbar *
                                   detail::derivative_coupling(ops, spectral, params, which));
}

double band_deviation(const OperatorMatrix& semiclassical, const OperatorMatrix& exact,
                      int center, int half_width) {
  const auto n = static_cast<int>(exact.size());
  const int lo = std::max(0, center - half_width);
  const int hi = std::min(n - 1, center + half_width);
  const int w = hi - lo + 1;
  const auto a = semiclassical.entries.block(lo, lo, w, w);
  const auto b = exact.entries.block(lo, lo, w, w);
  const double denom = b.norm();
  if (denom == 0.0) throw std::invalid_argument("band_deviation: exact block vanishes");
  return (a - b).norm() / denom;
}

}  // namespace tpiston
