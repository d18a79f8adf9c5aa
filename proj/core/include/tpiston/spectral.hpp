#pragma once

#include <optional>

#include <Eigen/Dense>

#include "tpiston/sine_basis.hpp"

namespace tpiston {

/// Eigen-decomposition of H0 in the sine basis at one (s, L) snapshot.
/// Column n of `transform` holds <beta|n>; eigenvalues ascend.
struct SpectralData {
  Eigen::VectorXd eigenvalues;
  Eigen::MatrixXd transform;
  double slope = 0.0;
  double length = 0.0;

  Eigen::Index size() const { return eigenvalues.size(); }
};

/// Diagonalizes a real symmetric sine-basis H0. With `previous`, each
/// eigenvector's sign is chosen to overlap positively with the previous
/// eigenvector of the same index; otherwise its largest-magnitude component
/// is made positive. Throws NumericalError if the eigensolver fails.
SpectralData diagonalize(const OperatorMatrix& h0_sine, const SpectralData* previous = nullptr);

/// Convenience: builds H0 at `params` with `size` modes and diagonalizes it.
SpectralData diagonalize(const PistonParams& params, int size,
                         const SpectralData* previous = nullptr);

/// Z^T O Z. Throws std::invalid_argument on dimension or basis mismatch.
OperatorMatrix to_energy_basis(const OperatorMatrix& op, const SpectralData& spectral);

/// 1-based index of the eigenvalue closest to `target`.
int nearest_level(const SpectralData& spectral, double target);

/// Repeats the diagonalization with doubled basis sizes until the 1-based
/// level `n` changes by less than `rel_tol`. Returns the accepted basis size
/// and the last relative change.
struct BasisConvergence {
  int size = 0;
  double energy = 0.0;
  double relative_change = 0.0;
};
BasisConvergence converge_level(const PistonParams& params, int n, int initial_size,
                                double rel_tol = 1e-8, int max_size = 4096);

namespace detail {

SpectralData diagonalize_real(const Eigen::MatrixXd& h0, double slope, double length,
                              const SpectralData* previous);
/// Z^T A Z; exact symmetry or antisymmetry of A carries over to the result.
Eigen::MatrixXd similarity(const Eigen::MatrixXd& z, const Eigen::MatrixXd& a);

}  // namespace detail

}  // namespace tpiston
