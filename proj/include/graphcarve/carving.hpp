#pragma once

#include <complex>
#include <cstdint>
#include <map>
#include <string>
#include <variant>
#include <vector>

#include "graphcarve/cavity.hpp"
#include "graphcarve/qstate.hpp"

namespace graphcarve {

/// Source of the reflection coefficient for a given set of coupled atoms.
///
/// `Cavity` evaluates the steady-state cavity response, with atom q of the
/// parameter set sitting at register qubit q. `Table` looks r up by the
/// number of coupled atoms (the last entry repeats for larger counts); the
/// ideal limit is the table {0, -1}.
class ReflectionModel {
 public:
  static ReflectionModel cavity(CavityParams params);
  static ReflectionModel table(std::vector<complex> r_by_count);
  static ReflectionModel ideal();

  bool is_cavity() const { return std::holds_alternative<CavityParams>(source_); }
  const CavityParams& cavity_params() const;
  const std::vector<complex>& table_values() const;

  /// r with exactly the qubits in `coupled` (basis-index bits) in the coupled
  /// level; all other atoms are treated as decoupled.
  complex reflection(std::uint32_t coupled, int num_qubits, double delta = 0.0) const;

  /// Physically degenerate settings worth surfacing in reports.
  std::vector<std::string> warnings() const;

 private:
  explicit ReflectionModel(std::variant<CavityParams, std::vector<complex>> source)
      : source_(std::move(source)) {}
  std::variant<CavityParams, std::vector<complex>> source_;
};

struct CarveSpec {
  QubitMask subset;
  ReflectionModel model = ReflectionModel::ideal();
  double delta = 0.0;
};

enum class NoClickModel { Coherent, Dephased };

struct ProbePolicy {
  int n_photons = 1;
  NoClickModel no_click = NoClickModel::Coherent;
  double delta = 0.0;  // probe detuning from the cavity resonance
};

std::string to_string(NoClickModel m);
NoClickModel no_click_model_from_string(const std::string& s);

/// Reflection coefficient for every pattern on the carving subset.
/// Keys are basis-index bits restricted to the subset.
using FactorLedger = std::map<std::uint32_t, complex>;

struct CarveResult {
  BranchMix heralded;
  double p_click = 0.0;
  FactorLedger factor_ledger;
};

/// Pattern key rendered as a bit string over the subset's qubits in
/// increasing qubit order, e.g. "01".
std::string pattern_string(std::uint32_t pattern, const QubitMask& subset);

FactorLedger carving_reflections(const CarveSpec& spec, int num_qubits);

/// Heralds on a single reflected photon. Throws HeraldImpossible when the
/// click probability is below 1e-15.
CarveResult carve_click(const PureState& state, const CarveSpec& spec);

/// The branch(es) left when the photon is not reflected. Weights sum to
/// 1 - p_click; zero-weight branches are omitted.
BranchMix carve_no_click(const PureState& state, const CarveSpec& spec, NoClickModel model);

/// Up to n_photons probes, heralding on the first click.
CarveResult carve_sequential(const PureState& state, const CarveSpec& spec,
                             const ProbePolicy& policy);

// In-place heralding used by the protocol executor. Both leave the state
// normalized and return the conditional click probability.
double carve_click_inplace(PureState& state, const CarveSpec& spec);
double carve_sequential_inplace(DensityMatrix& rho, const CarveSpec& spec,
                                const ProbePolicy& policy);

/// Capture probability of a component with reflectivity R under N_p probes.
double capture_probability(double reflectivity, int n_photons);

}  // namespace graphcarve
