#pragma once

#include <Eigen/Dense>

#include "tpiston/spectral.hpp"

namespace tpiston {

/// Diagonals of f(H0) and g(H0) in the energy basis. Levels with E_m <= sL
/// get f = g = 0, which reduces the semiclassical generators to their
/// below-critical forms.
struct FGDiagonal {
  Eigen::VectorXd f;
  Eigen::VectorXd g;
};
FGDiagonal build_fg_diagonal(const SpectralData& spectral, const PistonParams& params);

/// Energy-basis images of the sine-basis operators needed for the driving
/// matrices. q is real symmetric; p, xi2 and eta are stored as the real
/// antisymmetric factor X of the purely imaginary matrix i X.
struct EnergyOperators {
  Eigen::MatrixXd q;
  Eigen::MatrixXd p_imag;
  Eigen::MatrixXd xi2_imag;
  Eigen::MatrixXd eta_imag;
  bool has_cd_terms = false;
};

/// Builds and transforms Q, xi2 and (when `with_cd_terms`) p and eta.
EnergyOperators transform_operators(const SpectralData& spectral, const PistonParams& params,
                                    bool with_cd_terms = true);

/// Semiclassical generator xi_SC for the given parameter, as a Hermitian
/// energy-basis matrix.
OperatorMatrix assemble_xi_sc(const EnergyOperators& ops, const SpectralData& spectral,
                              const PistonParams& params, Parameter which);

/// -<m|d_s n> = -Qbar_mn / (E_n - E_m), zero diagonal.
OperatorMatrix grad_s_matrix(const EnergyOperators& ops, const SpectralData& spectral);

/// -<m|d_L n>, obtained from the slope coupling and xi2 through the
/// scale-invariance identity <m|d_L n> = (3s/L) <m|d_s n> + xi2_mn / (i hbar L).
OperatorMatrix grad_L_matrix(const EnergyOperators& ops, const SpectralData& spectral,
                             const PistonParams& params);

/// Exact transitionless-driving generator: i hbar <m|d_lambda n> off the
/// diagonal, zero on it.
OperatorMatrix exact_cd_matrix(const EnergyOperators& ops, const SpectralData& spectral,
                               const PistonParams& params, Parameter which);

/// Relative Frobenius deviation of xi_SC from the exact generator on the
/// block |m - center|, |n - center| <= half_width (0-based center).
double band_deviation(const OperatorMatrix& semiclassical, const OperatorMatrix& exact,
                      int center, int half_width);

namespace detail {

/// <m|d_lambda n> as a real antisymmetric matrix. Throws NumericalError on a
/// near-degenerate pair (|E_n - E_m| < 1e-10 max|E|).
Eigen::MatrixXd derivative_coupling(const EnergyOperators& ops, const SpectralData& spectral,
                                    const PistonParams& params, Parameter which);

/// Real factor X of xi_SC = i X.
Eigen::MatrixXd xi_sc_imag(const EnergyOperators& ops, const SpectralData& spectral,
                           const PistonParams& params, Parameter which);

}  // namespace detail

}  // namespace tpiston
