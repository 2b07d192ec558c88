#include "graphcarve/cavity.hpp"

#include <cmath>
#include <string>

#include "graphcarve/errors.hpp"

namespace graphcarve {

namespace {

// cos at an exact node evaluates to ~6e-17 in double precision.
constexpr double kNodeSnap = 1e-15;

}  // namespace

double AtomSite::effective_coupling() const {
  const double c = std::cos(phase_arg);
  return std::abs(c) < kNodeSnap ? 0.0 : g * c;
}

void CavityParams::validate() const {
  if (!(gamma > 0.0)) throw InvalidArgument("gamma must be positive");
  if (!(kappa_wg >= 0.0)) throw InvalidArgument("kappa_wg must be non-negative");
  if (!(kappa_sc >= 0.0)) throw InvalidArgument("kappa_sc must be non-negative");
  if (!(kappa() > 0.0)) throw InvalidArgument("kappa_wg + kappa_sc must be positive");
  for (std::size_t i = 0; i < atoms.size(); ++i) {
    if (!(atoms[i].g >= 0.0) || !std::isfinite(atoms[i].g))
      throw InvalidArgument("atom " + std::to_string(i) + ": g must be finite and non-negative");
    if (!std::isfinite(atoms[i].phase_arg))
      throw InvalidArgument("atom " + std::to_string(i) + ": phase_arg must be finite");
  }
}

CavityParams CavityParams::uniform(std::size_t n_atoms, double g, double phase_arg,
                                   double kappa_wg, double kappa_sc, double gamma) {
  CavityParams p;
  p.gamma = gamma;
  p.kappa_wg = kappa_wg;
  p.kappa_sc = kappa_sc;
  p.atoms.assign(n_atoms, AtomSite{g, phase_arg, false});
  return p;
}

double CavityParams::coupling_for_cooperativity(double cooperativity, double kappa,
                                                double gamma, double phase_arg) {
  if (cooperativity < 0.0) throw InvalidArgument("cooperativity must be non-negative");
  const double c = std::abs(std::cos(phase_arg));
  if (c < kNodeSnap) {
    if (cooperativity == 0.0) return 0.0;
    throw InvalidArgument("no finite coupling reaches a nonzero cooperativity at a node");
  }
  return std::sqrt(cooperativity * kappa * gamma / 4.0) / c;
}

double cooperativity(const CavityParams& params, std::size_t atom_index) {
  params.validate();
  if (atom_index >= params.atoms.size())
    throw InvalidArgument("atom index " + std::to_string(atom_index) + " out of range");
  const double ge = params.atoms[atom_index].effective_coupling();
  return 4.0 * ge * ge / (params.kappa() * params.gamma);
}

double total_cooperativity(const CavityParams& params) {
  double sum = 0.0;
  for (std::size_t i = 0; i < params.atoms.size(); ++i)
    if (params.atoms[i].coupled) sum += cooperativity(params, i);
  return sum;
}

complex reflection_coefficient(const CavityParams& params, double delta) {
  params.validate();
  const complex i{0.0, 1.0};
  // Eliminating each dipole, sigma = i g a / (i delta - gamma/2), folds the
  // atoms into a self-energy on the cavity mode.
  const complex dipole_denominator = i * delta - params.gamma / 2.0;
  complex self_energy = 0.0;
  for (const auto& atom : params.atoms) {
    if (!atom.coupled) continue;
    const double ge = atom.effective_coupling();
    if (ge == 0.0) continue;
    self_energy += ge * ge / dipole_denominator;
  }
  const complex cavity_denominator = i * delta - params.kappa() / 2.0 + self_energy;
  // a / a_in = -sqrt(kappa_wg) / cavity_denominator.
  return -params.kappa_wg / cavity_denominator - 1.0;
}

std::vector<ReflectionPoint> reflectivity_spectrum(const CavityParams& params,
                                                   std::span<const double> delta_grid) {
  std::vector<ReflectionPoint> out;
  out.reserve(delta_grid.size());
  for (double delta : delta_grid) {
    const complex r = reflection_coefficient(params, delta);
    out.push_back({delta, r, std::norm(r)});
  }
  return out;
}

std::vector<double> linear_grid(double lo, double hi, std::size_t points) {
  std::vector<double> grid;
  if (points == 0) return grid;
  if (points == 1) return {lo};
  grid.reserve(points);
  const double step = (hi - lo) / static_cast<double>(points - 1);
  for (std::size_t k = 0; k < points; ++k) grid.push_back(lo + step * static_cast<double>(k));
  grid.back() = hi;
  return grid;
}

}  // namespace graphcarve
