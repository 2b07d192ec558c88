#include "graphcarve/carving.hpp"

#include <algorithm>
#include <bit>
#include <cmath>

#include "graphcarve/errors.hpp"

namespace graphcarve {

namespace {

constexpr double kHeraldFloor = 1e-15;
constexpr double kClassTolerance = 1e-12;

void check_spec(const CarveSpec& spec, int num_qubits) {
  if (spec.subset.num_qubits() != num_qubits)
    throw InvalidArgument("carving subset width differs from register");
  if (spec.subset.empty()) throw InvalidArgument("carving subset is empty");
}

void check_policy(const ProbePolicy& policy) {
  if (policy.n_photons < 1) throw InvalidArgument("n_photons must be at least 1");
}

// Per-basis-index reflection factor, expanded from the subset patterns.
std::vector<complex> expand_factors(const FactorLedger& ledger, std::uint32_t subset,
                                    std::size_t dim) {
  std::vector<complex> out(dim);
  for (std::size_t i = 0; i < dim; ++i) out[i] = ledger.at(static_cast<std::uint32_t>(i) & subset);
  return out;
}

// Class index of each |r| value, classes ordered by increasing |r|.
std::map<std::uint32_t, int> reflectivity_classes(const FactorLedger& ledger) {
  std::vector<double> levels;
  for (const auto& [pattern, r] : ledger) levels.push_back(std::abs(r));
  std::sort(levels.begin(), levels.end());
  std::vector<double> unique;
  for (double v : levels)
    if (unique.empty() || v - unique.back() > kClassTolerance) unique.push_back(v);
  std::map<std::uint32_t, int> out;
  for (const auto& [pattern, r] : ledger) {
    const double a = std::abs(r);
    int best = 0;
    for (int k = 0; k < static_cast<int>(unique.size()); ++k)
      if (std::abs(unique[static_cast<std::size_t>(k)] - a) <
          std::abs(unique[static_cast<std::size_t>(best)] - a))
        best = k;
    out[pattern] = best;
  }
  return out;
}

void herald_or_throw(double p_click) {
  if (!(p_click >= kHeraldFloor))
    throw HeraldImpossible("click probability " + std::to_string(p_click) +
                           " is below the herald floor");
}

}  // namespace

// ----------------------------------------------------------- ReflectionModel

ReflectionModel ReflectionModel::cavity(CavityParams params) {
  params.validate();
  return ReflectionModel(std::move(params));
}

ReflectionModel ReflectionModel::table(std::vector<complex> r_by_count) {
  if (r_by_count.empty()) throw InvalidArgument("reflection table is empty");
  for (const auto& r : r_by_count)
    if (std::abs(r) > 1.0 + 1e-12) throw InvalidArgument("table reflection exceeds unit modulus");
  return ReflectionModel(std::move(r_by_count));
}

ReflectionModel ReflectionModel::ideal() { return table({0.0, -1.0}); }

const CavityParams& ReflectionModel::cavity_params() const {
  if (!is_cavity()) throw InvalidArgument("reflection model is tabulated");
  return std::get<CavityParams>(source_);
}

const std::vector<complex>& ReflectionModel::table_values() const {
  if (is_cavity()) throw InvalidArgument("reflection model is a cavity");
  return std::get<std::vector<complex>>(source_);
}

complex ReflectionModel::reflection(std::uint32_t coupled, int num_qubits, double delta) const {
  if (const auto* table = std::get_if<std::vector<complex>>(&source_)) {
    const auto n = static_cast<std::size_t>(std::popcount(coupled));
    return (*table)[std::min(n, table->size() - 1)];
  }
  CavityParams p = std::get<CavityParams>(source_);
  if (static_cast<int>(p.atoms.size()) < num_qubits)
    throw InvalidArgument("cavity model has " + std::to_string(p.atoms.size()) +
                          " atoms for a register of " + std::to_string(num_qubits));
  for (std::size_t q = 0; q < p.atoms.size(); ++q)
    p.atoms[q].coupled = static_cast<int>(q) < num_qubits &&
                         (coupled & qubit_bit(num_qubits, static_cast<int>(q))) != 0;
  return reflection_coefficient(p, delta);
}

std::vector<std::string> ReflectionModel::warnings() const {
  std::vector<std::string> out;
  if (is_cavity() && cavity_params().kappa_wg == 0.0)
    out.emplace_back("kappa_wg = 0: no extraction port, r = -1 for every configuration");
  return out;
}

std::string to_string(NoClickModel m) { return m == NoClickModel::Coherent ? "coherent" : "dephased"; }

NoClickModel no_click_model_from_string(const std::string& s) {
  if (s == "coherent") return NoClickModel::Coherent;
  if (s == "dephased") return NoClickModel::Dephased;
  throw InvalidArgument("no-click model must be 'coherent' or 'dephased', got '" + s + "'");
}

std::string pattern_string(std::uint32_t pattern, const QubitMask& subset) {
  std::string out;
  for (int q : subset.qubits()) out += (pattern & qubit_bit(subset.num_qubits(), q)) ? '1' : '0';
  return out;
}

double capture_probability(double reflectivity, int n_photons) {
  return 1.0 - std::pow(1.0 - reflectivity, n_photons);
}

// ------------------------------------------------------------------ carving

FactorLedger carving_reflections(const CarveSpec& spec, int num_qubits) {
  check_spec(spec, num_qubits);
  FactorLedger ledger;
  const std::uint32_t subset = spec.subset.bits();
  // Walk every submask of the subset, including zero.
  std::uint32_t p = subset;
  while (true) {
    ledger[p] = spec.model.reflection(p, num_qubits, spec.delta);
    if (p == 0) break;
    p = (p - 1) & subset;
  }
  return ledger;
}

double carve_click_inplace(PureState& state, const CarveSpec& spec) {
  const auto ledger = carving_reflections(spec, state.num_qubits());
  const auto factors = expand_factors(ledger, spec.subset.bits(), state.dim());
  double p = 0.0;
  for (std::size_t i = 0; i < state.dim(); ++i) {
    state[i] *= factors[i];
    p += std::norm(state[i]);
  }
  herald_or_throw(p);
  const double n = std::sqrt(p);
  for (auto& a : state.amps()) a /= n;
  return p;
}

CarveResult carve_click(const PureState& state, const CarveSpec& spec) {
  CarveResult out;
  out.factor_ledger = carving_reflections(spec, state.num_qubits());
  PureState projected = state;
  out.p_click = carve_click_inplace(projected, spec);
  out.heralded.branches.push_back({out.p_click, std::move(projected), {{true, 1, -1}}});
  return out;
}

BranchMix carve_no_click(const PureState& state, const CarveSpec& spec, NoClickModel model) {
  const auto ledger = carving_reflections(spec, state.num_qubits());
  const std::uint32_t subset = spec.subset.bits();
  BranchMix out;
  if (model == NoClickModel::Coherent) {
    PureState s = state;
    for (std::size_t i = 0; i < s.dim(); ++i)
      s[i] *= std::sqrt(std::max(0.0, 1.0 - std::norm(ledger.at(static_cast<std::uint32_t>(i) & subset))));
    const double w = s.norm_squared();
    if (w > 0.0) {
      s.normalize();
      out.branches.push_back({w, std::move(s), {{false, 1, -1}}});
    }
    return out;
  }
  const auto classes = reflectivity_classes(ledger);
  int n_classes = 0;
  for (const auto& [pattern, k] : classes) n_classes = std::max(n_classes, k + 1);
  for (int k = 0; k < n_classes; ++k) {
    PureState s = state;
    for (std::size_t i = 0; i < s.dim(); ++i) {
      const auto pattern = static_cast<std::uint32_t>(i) & subset;
      if (classes.at(pattern) != k) {
        s[i] = 0.0;
      } else {
        s[i] *= std::sqrt(std::max(0.0, 1.0 - std::norm(ledger.at(pattern))));
      }
    }
    const double w = s.norm_squared();
    if (w > 0.0) {
      s.normalize();
      out.branches.push_back({w, std::move(s), {{false, 1, k}}});
    }
  }
  return out;
}

CarveResult carve_sequential(const PureState& state, const CarveSpec& spec,
                             const ProbePolicy& policy) {
  check_policy(policy);
  CarveResult out;
  out.factor_ledger = carving_reflections(spec, state.num_qubits());
  const auto factors = expand_factors(out.factor_ledger, spec.subset.bits(), state.dim());

  std::vector<Branch> live{{1.0, state, {}}};
  for (int round = 1; round <= policy.n_photons && !live.empty(); ++round) {
    std::vector<Branch> next;
    for (const auto& branch : live) {
      PureState clicked = branch.state;
      for (std::size_t i = 0; i < clicked.dim(); ++i) clicked[i] *= factors[i];
      const double pc = clicked.norm_squared();
      if (pc > 0.0) {
        clicked.normalize();
        auto record = branch.record;
        record.push_back({true, round, -1});
        out.heralded.branches.push_back({branch.weight * pc, std::move(clicked), std::move(record)});
      }
      if (round == policy.n_photons) continue;
      for (auto& nc : carve_no_click(branch.state, spec, policy.no_click).branches) {
        auto record = branch.record;
        record.push_back({false, round, nc.record.front().r_class});
        next.push_back({branch.weight * nc.weight, std::move(nc.state), std::move(record)});
      }
    }
    live = std::move(next);
  }
  out.p_click = out.heralded.total_weight();
  herald_or_throw(out.p_click);
  return out;
}

double carve_sequential_inplace(DensityMatrix& rho, const CarveSpec& spec,
                                const ProbePolicy& policy) {
  check_policy(policy);
  const auto ledger = carving_reflections(spec, rho.num_qubits());
  const auto classes = reflectivity_classes(ledger);
  const std::uint32_t subset = spec.subset.bits();

  // A heralded ensemble stays diagonal-Kraus: each entry rho[s][t] picks up
  // sum over click rounds of f_s conj(f_t), a function of the two patterns.
  std::vector<std::uint32_t> patterns;
  for (const auto& [pattern, r] : ledger) patterns.push_back(pattern);
  const std::size_t np = patterns.size();
  std::vector<complex> kernel(np * np);
  for (std::size_t a = 0; a < np; ++a) {
    for (std::size_t b = 0; b < np; ++b) {
      const complex rs = ledger.at(patterns[a]);
      const complex rt = ledger.at(patterns[b]);
      const double survive = std::sqrt(std::max(0.0, (1.0 - std::norm(rs)) * (1.0 - std::norm(rt))));
      const bool coherent_pair = policy.no_click == NoClickModel::Coherent ||
                                 classes.at(patterns[a]) == classes.at(patterns[b]);
      double rounds = 1.0;
      double carry = 1.0;
      for (int j = 2; j <= policy.n_photons && coherent_pair; ++j) {
        carry *= survive;
        rounds += carry;
      }
      kernel[a * np + b] = rs * std::conj(rt) * rounds;
    }
  }
  std::vector<std::size_t> slot(rho.dim());
  for (std::size_t i = 0; i < rho.dim(); ++i) {
    const auto pattern = static_cast<std::uint32_t>(i) & subset;
    slot[i] = static_cast<std::size_t>(
        std::lower_bound(patterns.begin(), patterns.end(), pattern) - patterns.begin());
  }
  for (std::size_t i = 0; i < rho.dim(); ++i)
    for (std::size_t j = 0; j < rho.dim(); ++j) rho.at(i, j) *= kernel[slot[i] * np + slot[j]];
  const double p = rho.trace();
  herald_or_throw(p);
  rho.scale(1.0 / p);
  return p;
}

}  // namespace graphcarve
