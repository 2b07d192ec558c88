#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "graphcarve/carving.hpp"

namespace graphcarve {

/// Flat `key = value` run configuration. Lines starting with '#' are
/// comments. All rates are dimensionless multiples of gamma.
///
///   model          cavity | ideal | table
///   gamma kappa_wg kappa_sc g phase_arg
///   cooperativity  effective C per atom; replaces g when present
///   atom.<i>.g, atom.<i>.phase_arg   per-atom overrides
///   jitter seed    uniform g_i in g (1 +/- jitter) from the seed
///   r_table        comma-separated real r by coupled-atom count
///   n_photons no_click delta
///
/// Defaults are (g, kappa_wg, kappa_sc) = (20, 200, 200), phase_arg = pi.
struct Config {
  struct AtomOverride {
    std::optional<double> g;
    std::optional<double> phase_arg;
  };

  std::string model = "cavity";
  double gamma = 1.0;
  double kappa_wg = 200.0;
  double kappa_sc = 200.0;
  double g = 20.0;
  double phase_arg = 3.141592653589793;
  std::optional<double> cooperativity;
  std::map<int, AtomOverride> atoms;
  double jitter = 0.0;
  std::uint64_t seed = 0;
  std::vector<double> r_table;
  int n_photons = 1;
  NoClickModel no_click = NoClickModel::Coherent;
  double delta = 0.0;

  /// `n_atoms` atoms with overrides and jitter applied, none flagged coupled.
  CavityParams cavity_params(int n_atoms) const;
  ReflectionModel reflection_model(int n_atoms) const;
  ProbePolicy probe_policy() const { return {n_photons, no_click, delta}; }
};

/// Throws ParseError naming `source` and the line number.
Config parse_config(std::string_view text, const std::string& source = "<config>");
Config load_config(const std::string& path);

}  // namespace graphcarve
