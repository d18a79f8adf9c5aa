#pragma once

#include <Eigen/Dense>

#include "tpiston/model.hpp"

namespace tpiston {

/// Sine modes sqrt(2/L) sin(alpha pi q / L), alpha = 1..size.
struct BasisSpec {
  int size = 200;
  double length = 25.0;

  void validate() const;
};

enum class Basis { Sine, Energy };

struct OperatorMatrix {
  Eigen::MatrixXcd entries;
  Basis basis = Basis::Sine;
  bool hermitian = true;

  Eigen::Index size() const { return entries.rows(); }
  /// max |A - A^H| <= rel_tol * max |A|.
  bool is_hermitian(double rel_tol = 1e-13) const;
};

// Matrices in the sine basis. Indices are zero-based in storage; the mode
// number is index + 1. The box length always comes from BasisSpec.

OperatorMatrix build_h0_sine(const PistonParams& params, const BasisSpec& spec);
OperatorMatrix build_q_sine(const PistonParams& params, const BasisSpec& spec);
OperatorMatrix build_p_sine(const PistonParams& params, const BasisSpec& spec);
/// Symmetrized (q p + p q) / 2.
OperatorMatrix build_xi2_sine(const BasisSpec& spec, double hbar);
/// Semiclassical sign(p) operator; independent of L and hbar.
OperatorMatrix build_eta_sine(const BasisSpec& spec);

namespace detail {

// Real-valued kernels used on hot paths. H0 and Q are real symmetric; p, xi2
// and eta are i times a real antisymmetric matrix, and only that real factor
// is returned.
Eigen::MatrixXd h0_sine_real(const PistonParams& params, int size);
Eigen::MatrixXd q_sine_real(double length, int size);
Eigen::MatrixXd p_sine_imag(double hbar, double length, int size);
Eigen::MatrixXd xi2_sine_imag(double hbar, int size);
Eigen::MatrixXd eta_sine_imag(int size);

}  // namespace detail

}  // namespace tpiston
