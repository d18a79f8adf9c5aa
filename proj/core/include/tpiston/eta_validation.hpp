#pragma once

#include <vector>

#include "tpiston/sine_basis.hpp"

namespace tpiston {

/// One delta peak of the quantum autocorrelation spectrum of eta in the flat
/// box: weight |eta_{alpha beta}|^2 at omega = (E_beta - E_alpha) / hbar.
struct SpectralLine {
  int beta = 0;        ///< 1-based partner mode
  double omega = 0.0;
  double weight = 0.0;
};

/// Lines of the eta autocorrelation for flat-box mode `alpha` (1-based),
/// over every partner beta != alpha in the basis. Only mass and hbar are
/// taken from params; the slope is ignored (flat base).
std::vector<SpectralLine> eta_autocorrelation(const BasisSpec& spec, const PistonParams& params,
                                              int alpha);

/// Flat-box eigenvalue (alpha pi hbar)^2 / (2 m L^2).
double flat_box_energy(int alpha, const PistonParams& params, double length);

/// Classical flat-box bounce period 2 L / v at energy E.
double flat_box_period(double energy, double mass, double length);

/// Weight 4 / (pi^2 gamma^2) of the classical square-wave autocorrelation at
/// harmonic gamma; zero for even gamma.
double classical_sign_weight(int gamma);

/// <psi|eta|psi> for the ground mode boosted by momentum pi k / L, expanded
/// in the first spec.size sine modes.
double boosted_sign_expectation(const BasisSpec& spec, int k);

}  // namespace tpiston
