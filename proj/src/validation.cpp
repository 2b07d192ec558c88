#include "graphcarve/validation.hpp"

#include <bit>
#include <cmath>
#include <random>
#include <sstream>

#include "graphcarve/analysis.hpp"
#include "graphcarve/carving.hpp"
#include "graphcarve/errors.hpp"
#include "graphcarve/protocol.hpp"

namespace graphcarve {

std::vector<GraphSpec> connected_graphs(int n) {
  std::vector<std::pair<int, int>> slots;
  for (int u = 0; u < n; ++u)
    for (int v = u + 1; v < n; ++v) slots.emplace_back(u, v);
  std::vector<GraphSpec> out;
  for (std::uint32_t sel = 0; sel < (std::uint32_t{1} << slots.size()); ++sel) {
    std::vector<std::pair<int, int>> edges;
    for (std::size_t i = 0; i < slots.size(); ++i)
      if (sel & (std::uint32_t{1} << i)) edges.push_back(slots[i]);
    GraphSpec g(n, std::move(edges));
    if (g.is_connected()) out.push_back(std::move(g));
  }
  return out;
}

int max_back_degree(const GraphSpec& g) {
  int k = 0;
  for (const auto& [v, back] : attach_order(g)) k = std::max(k, static_cast<int>(back.size()));
  return k;
}

namespace {

PureState random_state(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> gauss;
  std::vector<complex> amps(std::size_t{1} << n);
  for (auto& a : amps) a = {gauss(rng), gauss(rng)};
  PureState s(n, std::move(amps));
  s.normalize();
  return s;
}

CheckResult check_graph_oracle(int max_vertices) {
  int checked = 0;
  for (int n = 1; n <= max_vertices; ++n) {
    for (const auto& g : connected_graphs(n)) {
      if (max_back_degree(g) > 3) continue;
      const auto prog = compile_graph(g, Strategy::TwoAtom);
      const auto rep = run_program(prog, ReflectionModel::ideal(), ProbePolicy{});
      const double expected = std::ldexp(1.0, -static_cast<int>(prog.blocks.size()));
      if (rep.fidelity < 1.0 - 1e-10 || std::abs(rep.probability - expected) > 1e-12) {
        std::ostringstream msg;
        msg << "graph " << to_json(g).dump() << ": fidelity " << rep.fidelity << ", probability "
            << rep.probability;
        return {"graph oracle equivalence", false, msg.str()};
      }
      ++checked;
    }
  }
  return {"graph oracle equivalence", true, std::to_string(checked) + " graphs"};
}

CheckResult check_ideal_projector() {
  std::mt19937_64 rng(7);
  for (int n = 1; n <= 4; ++n) {
    for (std::uint32_t subset = 1; subset < (std::uint32_t{1} << n); ++subset) {
      CarveSpec spec{QubitMask(n, subset), ReflectionModel::ideal(), 0.0};
      const PureState in = random_state(n, rng);
      const auto res = carve_click(in, spec);
      PureState expected = in;
      for (std::size_t i = 0; i < expected.dim(); ++i)
        if ((i & subset) == 0) expected[i] = 0.0;
      const double p = expected.norm_squared();
      expected.normalize();
      if (std::abs(res.p_click - p) > 1e-12 || fidelity(res.heralded.branches[0].state, expected) < 1 - 1e-12)
        return {"ideal carving projector", false, "n=" + std::to_string(n) + " subset=" + std::to_string(subset)};
    }
  }
  return {"ideal carving projector", true, "n <= 4, every subset"};
}

CheckResult check_click_accumulation() {
  std::mt19937_64 rng(11);
  const auto params = cavity_params_for(PhysicalPoint{false, 20.0, 0.4, 400.0, 1.0, 3.141592653589793, 0.2, 3}, 4);
  const auto model = ReflectionModel::cavity(params);
  for (std::uint32_t subset = 1; subset < 16; ++subset) {
    CarveSpec spec{QubitMask(4, subset), model, 0.0};
    const PureState in = random_state(4, rng);
    double expected = 0.0;
    for (std::size_t i = 0; i < in.dim(); ++i) {
      CavityParams p = params;
      for (int q = 0; q < 4; ++q) p.atoms[static_cast<std::size_t>(q)].coupled = (i & subset & qubit_bit(4, q)) != 0;
      expected += std::norm(in[i]) * std::norm(reflection_coefficient(p, 0.0));
    }
    const double got = carve_click(in, spec).p_click;
    if (std::abs(got - expected) > 1e-12)
      return {"click probability accumulation", false, "subset " + std::to_string(subset)};
  }
  return {"click probability accumulation", true, "4 atoms, every subset"};
}

CheckResult check_mask_conjugation() {
  std::mt19937_64 rng(5);
  const auto model = ReflectionModel::cavity(
      cavity_params_for(PhysicalPoint{false, 5.0, 0.45, 400.0, 1.0, 3.141592653589793, 0.3, 9}, 3));
  for (std::uint32_t subset = 1; subset < 8; ++subset) {
    for (std::uint32_t mask = 0; mask < 8; ++mask) {
      const PureState in = random_state(3, rng);
      CarveSpec spec{QubitMask(3, subset), model, 0.0};
      // X_m then carve equals carve with the reflection table relabelled by m, then X_m.
      PureState a = apply_x_mask(in, QubitMask(3, mask));
      carve_click_inplace(a, spec);
      PureState b = in;
      const auto ledger = carving_reflections(spec, 3);
      for (std::size_t i = 0; i < b.dim(); ++i) b[i] *= ledger.at((static_cast<std::uint32_t>(i) ^ mask) & subset);
      b.normalize();
      b = apply_x_mask(b, QubitMask(3, mask));
      if (fidelity(a, b) < 1 - 1e-12 || std::abs(inner_product(a, b) - 1.0) > 1e-12)
        return {"carving / X-mask conjugation", false, "subset " + std::to_string(subset)};
    }
  }
  return {"carving / X-mask conjugation", true, "3 qubits, every subset and mask"};
}

CheckResult check_multi_atom() {
  const MultiAtomBlock found = search_multi_atom_block();
  if (!(found == multi_atom_block())) return {"multi-atom block", false, "search differs from frozen schedule"};
  if (!verify_multi_atom_block(found)) return {"multi-atom block", false, "frozen schedule fails verification"};
  for (int n = 2; n <= 8; ++n) {
    const auto rep = run_program(compile_graph(GraphSpec::path(n), Strategy::MultiAtom), ReflectionModel::ideal(),
                                 ProbePolicy{});
    if (rep.fidelity < 1 - 1e-10 || std::abs(rep.probability - std::ldexp(1.0, -(n / 2))) > 1e-12)
      return {"multi-atom block", false, "path " + std::to_string(n)};
  }
  return {"multi-atom block", true, "frozen schedule reproduced; paths 2..8"};
}

CheckResult check_coset_uniformity() {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    for (const auto& g : {GraphSpec::path(5), GraphSpec::cycle(4), GraphSpec::grid(2, 3)}) {
      PhysicalPoint pt{false, 20.0, 0.5, 400.0, 1.0, 3.141592653589793, 0.2, seed};
      const auto prog = compile_graph(g, Strategy::TwoAtom);
      const auto rep = run_program(prog, reflection_model_for(pt, prog.num_qubits), ProbePolicy{});
      if (rep.fidelity < 1 - 1e-9) return {"coset uniformity", false, "fidelity " + std::to_string(rep.fidelity)};
      for (const auto& l : rep.ledgers)
        if (l.survivor_spread() > 1e-12)
          return {"coset uniformity", false, "block spread " + std::to_string(l.survivor_spread())};
    }
  }
  return {"coset uniformity", true, "critical coupling, 20% jitter, 5 seeds"};
}

CheckResult check_sequential_routes() {
  std::mt19937_64 rng(17);
  const auto model = ReflectionModel::cavity(
      cavity_params_for(PhysicalPoint{false, 3.0, 0.4, 400.0, 1.0, 3.141592653589793, 0.25, 4}, 3));
  for (NoClickModel m : {NoClickModel::Coherent, NoClickModel::Dephased}) {
    for (int np = 1; np <= 3; ++np) {
      const PureState in = random_state(3, rng);
      CarveSpec spec{QubitMask(3, 0b111), model, 0.0};
      const auto branched = carve_sequential(in, spec, {np, m});
      DensityMatrix rho(in);
      const double p = carve_sequential_inplace(rho, spec, {np, m});
      DensityMatrix ref = branched.heralded.to_density();
      ref.scale(1.0 / branched.p_click);
      double diff = std::abs(p - branched.p_click);
      for (std::size_t i = 0; i < rho.dim(); ++i)
        for (std::size_t j = 0; j < rho.dim(); ++j) diff = std::max(diff, std::abs(rho.at(i, j) - ref.at(i, j)));
      if (diff > 1e-12) return {"sequential probe routes", false, to_string(m) + " N_p=" + std::to_string(np)};
    }
  }
  return {"sequential probe routes", true, "branch and density routes agree"};
}

CheckResult check_gray_property(int max_vertices) {
  for (int n = 2; n <= max_vertices; ++n)
    for (const auto& g : connected_graphs(n)) {
      if (max_back_degree(g) > 3) continue;
      try {
        check_program(compile_graph(g, Strategy::TwoAtom));
      } catch (const Error& e) {
        return {"Gray schedule property", false, e.what()};
      }
    }
  return {"Gray schedule property", true, "all compiled programs"};
}

}  // namespace

std::vector<CheckResult> run_validation_suite(int max_vertices) {
  using Check = CheckResult (*)();
  std::vector<CheckResult> out;
  auto guarded = [&](const std::string& name, auto&& fn) {
    try {
      out.push_back(fn());
    } catch (const std::exception& e) {
      out.push_back({name, false, std::string("exception: ") + e.what()});
    }
  };
  guarded("graph oracle equivalence", [&] { return check_graph_oracle(max_vertices); });
  for (auto [name, fn] : {std::pair<const char*, Check>{"ideal carving projector", check_ideal_projector},
                          {"click probability accumulation", check_click_accumulation},
                          {"carving / X-mask conjugation", check_mask_conjugation},
                          {"multi-atom block", check_multi_atom},
                          {"coset uniformity", check_coset_uniformity},
                          {"sequential probe routes", check_sequential_routes}})
    guarded(name, fn);
  guarded("Gray schedule property", [&] { return check_gray_property(max_vertices); });
  return out;
}

}  // namespace graphcarve
