#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace graphcarve {

using complex = std::complex<double>;

/// One trapped atom next to the cavity.
///
/// `phase_arg` is the dimensionless position k_s x along the standing-wave
/// profile, so the effective coupling is g cos(phase_arg). `coupled` marks
/// whether the atom currently sits in the cavity-coupled qubit level.
struct AtomSite {
  double g = 0.0;
  double phase_arg = 0.0;
  bool coupled = false;

  /// g cos(phase_arg), snapped to exactly zero at the nodes of the profile.
  double effective_coupling() const;
};

/// Rates of a single-sided cavity with its atoms. All rates are in the same
/// units; the library conventionally takes gamma = 1.
struct CavityParams {
  double gamma = 1.0;
  double kappa_wg = 0.0;
  double kappa_sc = 0.0;
  std::vector<AtomSite> atoms;

  double kappa() const { return kappa_wg + kappa_sc; }

  /// Throws InvalidArgument unless gamma > 0, both kappas >= 0, kappa > 0
  /// and every g >= 0.
  void validate() const;

  /// `n_atoms` identical atoms, none flagged coupled.
  static CavityParams uniform(std::size_t n_atoms, double g, double phase_arg,
                              double kappa_wg, double kappa_sc,
                              double gamma = 1.0);

  /// Coupling g at the given position that yields effective cooperativity C.
  static double coupling_for_cooperativity(double cooperativity, double kappa,
                                           double gamma = 1.0,
                                           double phase_arg = 0.0);
};

struct ReflectionPoint {
  double delta = 0.0;
  complex r;
  double R = 0.0;
};

/// 4 g_eff^2 / (kappa gamma) for one atom, regardless of its coupled flag.
double cooperativity(const CavityParams& params, std::size_t atom_index);

/// Sum of the effective cooperativities of the atoms flagged coupled.
double total_cooperativity(const CavityParams& params);

/// a_out / a_in for a weak probe at detuning delta = omega - omega_c.
///
/// Steady state of the linearized cavity and dipole equations in the
/// weak-excitation limit (ground-state population ~ 1), with the output
/// relation a_out + a_in = sqrt(kappa_wg) a. Only atoms flagged `coupled`
/// contribute.
complex reflection_coefficient(const CavityParams& params, double delta);

std::vector<ReflectionPoint> reflectivity_spectrum(
    const CavityParams& params, std::span<const double> delta_grid);

/// Evenly spaced grid with `points` samples over [lo, hi].
std::vector<double> linear_grid(double lo, double hi, std::size_t points);

}  // namespace graphcarve
