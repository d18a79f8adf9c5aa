#pragma once

#include <stdexcept>
#include <string>

namespace tpiston {

/// Raised when a numerical procedure cannot deliver a result that meets its
/// contract (failed bracket, norm drift, near-degenerate spectrum, ...).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Which control parameter a protocol or generator refers to.
enum class Parameter { Slope, Length };

std::string to_string(Parameter which);
Parameter parameter_from_string(const std::string& name);

/// Physical configuration of the tilted piston: a particle of mass m in a box
/// [0, L] with hard walls and a linear base potential s*q. All quantities are
/// in bare model units.
struct PistonParams {
  double mass = 1.0;
  double hbar = 2.0;
  double slope = 3.0;
  double length = 25.0;

  /// Throws std::invalid_argument unless every field is strictly positive.
  void validate() const;

  /// Copy with the given parameter replaced.
  PistonParams with(Parameter which, double value) const;
  double get(Parameter which) const;
};

struct PhasePoint {
  double q = 0.0;
  double p = 0.0;
};

enum class Regime { BelowCritical, AtCritical, AboveCritical };

struct EnergyShell {
  double energy = 0.0;
  double omega = 0.0;   ///< enclosed phase-space volume, equal to the action
  double period = 0.0;
  Regime regime = Regime::BelowCritical;
};

/// Relative tolerance used to classify an energy as lying on the critical shell.
inline constexpr double kCriticalRelTol = 1e-12;

/// Kinetic plus base potential, p^2/2m + s q. The walls are not included.
double hamiltonian(PhasePoint z, const PistonParams& params);

/// E_c = s L: below it the particle only touches the wall at q = 0.
double critical_energy(const PistonParams& params);

Regime classify(double energy, const PistonParams& params);

/// Phase-space volume enclosed by the shell H0 = E. Throws for E <= 0.
double phase_volume(double energy, const PistonParams& params);

/// Inverse of phase_volume. Closed form below the critical volume and a
/// bracketed root solve above it; throws NumericalError if the solve fails.
double energy_from_volume(double omega, const PistonParams& params);

/// Microcanonical average of dH0/dlambda on the shell E.
double micro_avg_grad(double energy, const PistonParams& params, Parameter which);

/// Orbit period dOmega/dE.
double period(double energy, const PistonParams& params);

/// Action I0 = Omega(H0(z)).
double action(PhasePoint z, const PistonParams& params);

EnergyShell energy_shell(double energy, const PistonParams& params);

}  // namespace tpiston
