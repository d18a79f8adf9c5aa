#include "tpiston/sine_basis.hpp"

#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>

namespace tpiston {

using std::numbers::pi;

void BasisSpec::validate() const {
  if (size < 1) throw std::invalid_argument("basis size must be >= 1");
  if (!(length > 0.0)) throw std::invalid_argument("basis length must be positive");
}

bool OperatorMatrix::is_hermitian(double rel_tol) const {
  if (entries.rows() != entries.cols()) return false;
  const double scale = entries.cwiseAbs().maxCoeff();
  if (scale == 0.0) return true;
  const double defect = (entries - entries.adjoint()).cwiseAbs().maxCoeff();
  return defect <= rel_tol * scale;
}

namespace detail {

namespace {

bool odd(long d) { return (d % 2) != 0; }

}  // namespace

Eigen::MatrixXd h0_sine_real(const PistonParams& params, int size) {
  const double s = params.slope;
  const double len = params.length;
  Eigen::MatrixXd h(size, size);
  for (int i = 0; i < size; ++i) {
    const double a = i + 1;
    for (int j = 0; j < size; ++j) {
      const double b = j + 1;
      if (i == j) {
        const double k = a * pi * params.hbar;
        h(i, j) = k * k / (2.0 * params.mass * len * len) + s * len / 2.0;
      } else if (odd(i - j)) {
        const double d = a * a - b * b;
        h(i, j) = -8.0 * a * b * s * len / (d * d * pi * pi);
      } else {
        h(i, j) = 0.0;
      }
    }
  }
  return h;
}

Eigen::MatrixXd q_sine_real(double length, int size) {
  Eigen::MatrixXd q(size, size);
  for (int i = 0; i < size; ++i) {
    const double a = i + 1;
    for (int j = 0; j < size; ++j) {
      const double b = j + 1;
      if (i == j) {
        q(i, j) = length / 2.0;
      } else if (odd(i - j)) {
        const double d = a * a - b * b;
        q(i, j) = -8.0 * a * b * length / (d * d * pi * pi);
      } else {
        q(i, j) = 0.0;
      }
    }
  }
  return q;
}

Eigen::MatrixXd p_sine_imag(double hbar, double length, int size) {
  Eigen::MatrixXd p = Eigen::MatrixXd::Zero(size, size);
  for (int i = 0; i < size; ++i) {
    const double a = i + 1;
    for (int j = 0; j < size; ++j) {
      if (!odd(i - j)) continue;
      const double b = j + 1;
      p(i, j) = 4.0 * hbar * a * b / (length * (b * b - a * a));
    }
  }
  return p;
}

Eigen::MatrixXd xi2_sine_imag(double hbar, int size) {
  Eigen::MatrixXd x = Eigen::MatrixXd::Zero(size, size);
  for (int i = 0; i < size; ++i) {
    const double a = i + 1;
    for (int j = 0; j < size; ++j) {
      if (i == j) continue;
      const double b = j + 1;
      const double v = 2.0 * hbar * a * b / (b * b - a * a);
      x(i, j) = odd(i - j) ? v : -v;
    }
  }
  return x;
}

Eigen::MatrixXd eta_sine_imag(int size) {
  Eigen::MatrixXd e = Eigen::MatrixXd::Zero(size, size);
  for (int i = 0; i < size; ++i) {
    for (int j = 0; j < size; ++j) {
      if (!odd(i - j)) continue;
      e(i, j) = 2.0 / (static_cast<double>(j - i) * pi);
    }
  }
  return e;
}

}  // namespace detail

namespace {

OperatorMatrix real_operator(Eigen::MatrixXd m) {
  return {m.cast<std::complex<double>>(), Basis::Sine, true};
}

OperatorMatrix imaginary_operator(const Eigen::MatrixXd& m) {
  Eigen::MatrixXcd c(m.rows(), m.cols());
  c.real().setZero();
  c.imag() = m;
  return {std::move(c), Basis::Sine, true};
}

}  // namespace

OperatorMatrix build_h0_sine(const PistonParams& params, const BasisSpec& spec) {
  spec.validate();
  PistonParams at = params;
  at.length = spec.length;
  return real_operator(detail::h0_sine_real(at, spec.size));
}

OperatorMatrix build_q_sine(const PistonParams& /*params*/, const BasisSpec& spec) {
  spec.validate();
  return real_operator(detail::q_sine_real(spec.length, spec.size));
}

OperatorMatrix build_p_sine(const PistonParams& params, const BasisSpec& spec) {
  spec.validate();
  return imaginary_operator(detail::p_sine_imag(params.hbar, spec.length, spec.size));
}

OperatorMatrix build_xi2_sine(const BasisSpec& spec, double hbar) {
  spec.validate();
  return imaginary_operator(detail::xi2_sine_imag(hbar, spec.size));
}

OperatorMatrix build_eta_sine(const BasisSpec& spec) {
  spec.validate();
  return imaginary_operator(detail::eta_sine_imag(spec.size));
}

}  // namespace tpiston
