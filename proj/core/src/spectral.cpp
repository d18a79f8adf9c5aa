#include "tpiston/spectral.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include <Eigen/Eigenvalues>

namespace tpiston {

namespace detail {

SpectralData diagonalize_real(const Eigen::MatrixXd& h0, double slope, double length,
                              const SpectralData* previous) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(h0, Eigen::ComputeEigenvectors);
  if (solver.info() != Eigen::Success) {
    throw NumericalError("diagonalize: eigensolver did not converge");
  }
  SpectralData out;
  out.eigenvalues = solver.eigenvalues();
  out.transform = solver.eigenvectors();
  out.slope = slope;
  out.length = length;

  const Eigen::Index n = out.transform.cols();
  if (previous != nullptr && previous->transform.cols() == n && previous->transform.rows() == n) {
    const Eigen::RowVectorXd overlaps =
        (previous->transform.array() * out.transform.array()).colwise().sum();
    for (Eigen::Index k = 0; k < n; ++k) {
      if (overlaps(k) < 0.0) out.transform.col(k) *= -1.0;
    }
  } else {
    for (Eigen::Index k = 0; k < n; ++k) {
      Eigen::Index arg = 0;
      out.transform.col(k).cwiseAbs().maxCoeff(&arg);
      if (out.transform(arg, k) < 0.0) out.transform.col(k) *= -1.0;
    }
  }
  return out;
}

Eigen::MatrixXd similarity(const Eigen::MatrixXd& z, const Eigen::MatrixXd& a) {
  Eigen::MatrixXd az = a * z;
  Eigen::MatrixXd out = z.transpose() * az;
  // Rounding in the products breaks exact (anti)symmetry; restore it.
  if (a == a.transpose()) {
    out = 0.5 * (out + out.transpose()).eval();
  } else if (a == -a.transpose()) {
    out = 0.5 * (out - out.transpose()).eval();
  }
  return out;
}

}  // namespace detail

SpectralData diagonalize(const OperatorMatrix& h0_sine, const SpectralData* previous) {
  if (h0_sine.basis != Basis::Sine) throw std::invalid_argument("diagonalize expects a sine-basis H0");
  if (h0_sine.entries.imag().cwiseAbs().maxCoeff() != 0.0) {
    throw std::invalid_argument("diagonalize expects a real symmetric matrix");
  }
  const double nan = std::numeric_limits<double>::quiet_NaN();
  return detail::diagonalize_real(h0_sine.entries.real(), nan, nan, previous);
}

SpectralData diagonalize(const PistonParams& params, int size, const SpectralData* previous) {
  params.validate();
  return detail::diagonalize_real(detail::h0_sine_real(params, size), params.slope, params.length,
                                  previous);
}

OperatorMatrix to_energy_basis(const OperatorMatrix& op, const SpectralData& spectral) {
  if (op.basis != Basis::Sine) throw std::invalid_argument("to_energy_basis expects a sine-basis operator");
  if (op.entries.rows() != spectral.transform.rows() || op.entries.cols() != spectral.transform.rows()) {
    throw std::invalid_argument("to_energy_basis: dimension mismatch");
  }
  const Eigen::MatrixXd re = op.entries.real();
  const Eigen::MatrixXd im = op.entries.imag();
  const Eigen::Index n = spectral.transform.cols();
  Eigen::MatrixXcd out(n, n);
  out.real() = re.isZero(0.0) ? Eigen::MatrixXd::Zero(n, n)
                              : detail::similarity(spectral.transform, re);
  out.imag() = im.isZero(0.0) ? Eigen::MatrixXd::Zero(n, n)
                              : detail::similarity(spectral.transform, im);
  return {std::move(out), Basis::Energy, op.hermitian};
}

int nearest_level(const SpectralData& spectral, double target) {
  Eigen::Index best = 0;
  (spectral.eigenvalues.array() - target).abs().minCoeff(&best);
  return static_cast<int>(best) + 1;
}

BasisConvergence converge_level(const PistonParams& params, int n, int initial_size,
                                double rel_tol, int max_size) {
  if (n < 1 || initial_size < n) throw std::invalid_argument("converge_level: basis too small for level");
  int size = initial_size;
  double previous = diagonalize(params, size).eigenvalues(n - 1);
  double change = std::numeric_limits<double>::infinity();
  while (size * 2 <= max_size) {
    size *= 2;
    const double current = diagonalize(params, size).eigenvalues(n - 1);
    change = std::abs(current - previous) / std::abs(current);
    previous = current;
    if (change < rel_tol) return {size / 2, current, change};
  }
  throw NumericalError("converge_level: level " + std::to_string(n) +
                       " not converged below basis size " + std::to_string(max_size));
}

}  // namespace tpiston
