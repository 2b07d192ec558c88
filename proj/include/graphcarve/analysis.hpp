#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "graphcarve/carving.hpp"
#include "graphcarve/protocol.hpp"
#include "json.hpp"

namespace graphcarve {

enum class GraphFamily { Path, Square, Grid };

struct GraphFamilySpec {
  GraphFamily family = GraphFamily::Path;
  int n_min = 2;
  int n_max = 2;
  int w = 0;
  int h = 0;

  struct Member {
    std::string label;
    GraphSpec graph;
  };
  std::vector<Member> members() const;
};

/// Physical operating point. Rates are multiples of gamma; the per-atom
/// coupling is derived from the effective cooperativity.
struct PhysicalPoint {
  bool ideal = false;
  double cooperativity = 20.0;
  double kappa_wg_ratio = 0.5;  // kappa_wg / kappa
  double kappa = 400.0;
  double gamma = 1.0;
  double phase_arg = 3.141592653589793;
  double jitter = 0.0;  // g_i uniform in g (1 +/- jitter)
  std::uint64_t seed = 0;
};

/// Rescales every atom's g by an independent factor uniform in
/// [1 - jitter, 1 + jitter], drawn from mt19937_64(seed).
void apply_coupling_jitter(CavityParams& params, double jitter, std::uint64_t seed);

CavityParams cavity_params_for(const PhysicalPoint& point, int n_atoms);
ReflectionModel reflection_model_for(const PhysicalPoint& point, int n_atoms);

/// Reflectivity of one coupled atom with the un-jittered coupling.
double single_atom_reflectivity(const PhysicalPoint& point);

struct SweepSpec {
  GraphFamilySpec graphs;
  Strategy strategy = Strategy::TwoAtom;
  PhysicalPoint base;
  std::vector<double> cooperativities;  // empty: base value only
  std::vector<double> kappa_wg_ratios;  // empty: base value only
  std::vector<int> n_photons{1};
  NoClickModel no_click = NoClickModel::Coherent;
};

struct SweepRow {
  std::string graph;
  int n_vertices = 0;
  Strategy strategy = Strategy::TwoAtom;
  PhysicalPoint point;
  ProbePolicy policy;
  std::optional<RunReport> report;
  double approx_probability = 0.0;
  std::string error;  // empty on success
};

/// One row per (graph, cooperativity, kappa ratio, N_p) in that nesting
/// order. Rows run on up to `threads` workers (0: hardware concurrency) and
/// come back in spec order; a failing row records its error and the sweep
/// continues.
std::vector<SweepRow> sweep(const SweepSpec& spec, unsigned threads = 0);

/// Number of carvings a compiled linear graph of N vertices uses.
int linear_carving_count(int n_vertices, Strategy strategy);

/// Closed-form estimate: ideal probability times R^{N_SC}.
double approx_probability_formula(int n_vertices, double reflectivity, Strategy strategy);

/// sweep() with base.jitter and base.seed replaced, at the base point's
/// kappa ratio.
std::vector<SweepRow> robustness_uneven(SweepSpec spec, double jitter, std::uint64_t seed);

inline constexpr const char* kSweepCsvVersion = "# graphcarve sweep csv v1 (rates in units of gamma)";

std::string sweep_csv(const std::vector<SweepRow>& rows);
nlohmann::json to_json(const std::vector<SweepRow>& rows);
SweepSpec sweep_spec_from_json(const nlohmann::json& j);

inline constexpr const char* kSpectrumCsvVersion = "# graphcarve spectrum csv v1 (rates in units of gamma)";

std::string spectrum_csv(const std::vector<ReflectionPoint>& points);

}  // namespace graphcarve
