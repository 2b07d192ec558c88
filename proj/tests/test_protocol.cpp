#include <bit>
#include <cmath>
#include <fstream>
#include <numbers>
#include <set>

#include "doctest.h"
#include "graphcarve/analysis.hpp"
#include "graphcarve/errors.hpp"
#include "graphcarve/protocol.hpp"
#include "graphcarve/validation.hpp"
#include "oracles.hpp"

using namespace graphcarve;

namespace {

constexpr double kPi = std::numbers::pi;

ReflectionModel critical_model(int n, double C, double jitter = 0.0, std::uint64_t seed = 0) {
  return reflection_model_for(PhysicalPoint{false, C, 0.5, 400.0, 1.0, kPi, jitter, seed}, n);
}

int count_carves(const ProtocolProgram& p) {
  int n = 0;
  for (const auto& s : p.steps) n += std::holds_alternative<Carve>(s) ? 1 : 0;
  return n;
}

}  // namespace

TEST_CASE("even-parity masks in Gray order") {
  CHECK(gray_even_parity_masks(2) == std::vector<std::uint32_t>{0b00, 0b11});
  for (int width = 2; width <= 6; ++width) {
    const auto masks = gray_even_parity_masks(width);
    REQUIRE(masks.size() == (std::size_t{1} << (width - 1)));
    CHECK(masks.front() == 0u);
    CHECK(std::set<std::uint32_t>(masks.begin(), masks.end()).size() == masks.size());
    for (std::size_t i = 0; i < masks.size(); ++i) {
      CHECK(std::popcount(masks[i]) % 2 == 0);
      CHECK(masks[i] < (1u << width));
      if (i > 0) CHECK(std::popcount(masks[i] ^ masks[i - 1]) == 2);
    }
  }
  CHECK_THROWS_AS(gray_even_parity_masks(1), InvalidArgument);
}

TEST_CASE("greedy attach order") {
  const auto order = attach_order(GraphSpec::cycle(4));
  REQUIRE(order.size() == 4u);
  CHECK(order[0] == std::pair<int, std::vector<int>>{0, {}});
  CHECK(order[1] == std::pair<int, std::vector<int>>{1, {0}});
  CHECK(order[2] == std::pair<int, std::vector<int>>{2, {1}});
  CHECK(order[3] == std::pair<int, std::vector<int>>{3, {0, 2}});
  const auto split = attach_order(GraphSpec(4, {{0, 3}, {1, 2}}));
  CHECK(split[0].first == 0);
  CHECK(split[1] == std::pair<int, std::vector<int>>{3, {0}});
  CHECK(split[2] == std::pair<int, std::vector<int>>{1, {}});
}

TEST_CASE("Bell carving") {
  const auto prog = bell_carving_program();
  CHECK(prog.n_carvings == 2);
  const auto rep = run_program(prog, ReflectionModel::ideal(), ProbePolicy{});
  CHECK(rep.probability == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(rep.fidelity >= 1.0 - 1e-12);
  const auto res = execute(prog, ReflectionModel::ideal(), ProbePolicy{});
  const double a = 1.0 / std::sqrt(2.0);
  CHECK(fidelity(*res.pure, PureState(2, {0.0, a, a, 0.0})) >= 1.0 - 1e-12);
  CHECK(res.p_clicks[0] == doctest::Approx(0.75));
  CHECK(res.p_clicks[1] == doctest::Approx(2.0 / 3.0));
}

TEST_CASE("single-edge attach") {
  const auto prog = compile_graph(GraphSpec::path(2), Strategy::TwoAtom);
  CHECK(prog.n_carvings == 2);
  const auto rep = run_program(prog, ReflectionModel::ideal(), ProbePolicy{});
  CHECK(rep.probability == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(rep.fidelity >= 1.0 - 1e-12);
  REQUIRE(rep.p_clicks.size() == 2u);
  CHECK(rep.p_clicks[0] == doctest::Approx(0.75));
  CHECK(rep.p_clicks[1] == doctest::Approx(2.0 / 3.0));
}

TEST_CASE("two-anchor attach carries a uniform factor on every survivor") {
  const complex r1{-0.9, 0.1}, r2{-0.7, -0.2}, r3{-0.95, 0.05};
  const auto model = ReflectionModel::table({0.0, r1, r2, r3});
  const auto prog = compile_graph(GraphSpec::cycle(4), Strategy::TwoAtom);
  const auto rep = run_program(prog, model, ProbePolicy{});
  CHECK(rep.fidelity >= 1.0 - 1e-12);
  bool found = false;
  for (const auto& l : rep.ledgers) {
    if (l.subset.size() != 3) continue;
    found = true;
    CHECK(l.carved.size() == 4u);
    CHECK(l.survivor_spread() < 1e-12);
    for (const auto& [pattern, f] : l.factors) {
      if (std::popcount(pattern) % 2 == 1) CHECK(std::abs(f - r1 * r1 * r1 * r3) < 1e-14);
      else CHECK(std::abs(f) < 1e-15);
    }
  }
  CHECK(found);
}

TEST_CASE("square graph") {
  const auto prog = compile_graph(GraphSpec::cycle(4), Strategy::TwoAtom);
  CHECK(prog.n_carvings == 8);
  CHECK(count_carves(prog) == 8);
  const auto rep = run_program(prog, ReflectionModel::ideal(), ProbePolicy{});
  CHECK(rep.probability == doctest::Approx(0.125).epsilon(1e-14));
  CHECK(rep.ideal_probability == doctest::Approx(0.125).epsilon(1e-14));
  CHECK(rep.fidelity >= 1.0 - 1e-10);
}

TEST_CASE("2x3 grid against the CZ circuit") {
  const GraphSpec g = GraphSpec::grid(2, 3);
  PureState cz = PureState::plus(6);
  for (auto [u, v] : g.edges()) cz.cz_inplace(u, v);
  const auto prog = compile_graph(g, Strategy::TwoAtom);
  CHECK_NOTHROW(check_program(prog));
  const auto res = execute(prog, ReflectionModel::ideal(), ProbePolicy{});
  CHECK(fidelity(*res.pure, cz) >= 1.0 - 1e-10);
  int expected_log2 = 0;
  for (const auto& [v, back] : attach_order(g)) expected_log2 += back.empty() ? 0 : 1;
  CHECK(res.probability == doctest::Approx(std::ldexp(1.0, -expected_log2)).epsilon(1e-13));
}

TEST_CASE("paths in both strategies") {
  for (int n = 1; n <= 8; ++n) {
    const auto two = run_program(compile_graph(GraphSpec::path(n), Strategy::TwoAtom), ReflectionModel::ideal(), {});
    CHECK(two.probability == doctest::Approx(std::ldexp(1.0, -(n - 1))).epsilon(1e-13));
    CHECK(two.fidelity >= 1.0 - 1e-10);
    CHECK(two.n_carvings == 2 * (n - 1));
    const auto multi =
        run_program(compile_graph(GraphSpec::path(n), Strategy::MultiAtom), ReflectionModel::ideal(), {});
    CHECK(multi.probability == doctest::Approx(std::ldexp(1.0, -(n / 2))).epsilon(1e-13));
    CHECK(multi.fidelity >= 1.0 - 1e-10);
    CHECK(multi.n_carvings == linear_carving_count(n, Strategy::MultiAtom));
  }
  CHECK(run_program(compile_graph(GraphSpec::path(4), Strategy::MultiAtom), ReflectionModel::ideal(), {})
            .probability == doctest::Approx(0.25));
  CHECK_THROWS_AS(compile_graph(GraphSpec::cycle(4), Strategy::MultiAtom), UnsupportedStrategy);
}

TEST_CASE("frozen multi-atom block") {
  const MultiAtomBlock frozen = multi_atom_block();
  CHECK(search_multi_atom_block() == frozen);
  CHECK(verify_multi_atom_block(frozen));
  std::ifstream in(std::string(GRAPHCARVE_DATA_DIR) + "/multi_atom_block.json");
  REQUIRE(in.good());
  CHECK(multi_atom_block_from_json(nlohmann::json::parse(in)) == frozen);
  CHECK(multi_atom_block_from_json(to_json(frozen)) == frozen);
  MultiAtomBlock broken = frozen;
  broken.post[1] = LocalGate::RyPlus;
  CHECK_FALSE(verify_multi_atom_block(broken));
}

TEST_CASE("finite-C path probability equals the ledger product") {
  // Each attach block keeps half the register weight, every survivor
  // scaled by |r_1|^4.
  const auto model = critical_model(4, 20.0);
  const auto rep = run_program(compile_graph(GraphSpec::path(4), Strategy::TwoAtom), model, {});
  const double R1 = std::pow(20.0 / 21.0, 2);
  CHECK(rep.fidelity >= 1.0 - 1e-9);
  CHECK(rep.probability < 0.125);
  CHECK(rep.probability == doctest::Approx(0.125 * std::pow(R1, 6)).epsilon(1e-12));
  double product = 1.0;
  for (const auto& l : rep.ledgers) {
    double kept = 0.0;
    int survivors = 0;
    for (const auto& [pattern, f] : l.factors)
      if (std::abs(f) > 0.0) {
        kept += std::norm(f);
        ++survivors;
      }
    product *= kept / static_cast<double>(std::size_t{1} << l.subset.size());
    CHECK(survivors == 2);
  }
  CHECK(rep.probability == doctest::Approx(product).epsilon(1e-12));
}

TEST_CASE("critical coupling stays perfect under uneven couplings") {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    for (const auto& g : {GraphSpec::path(4), GraphSpec::cycle(4), GraphSpec::grid(2, 3)}) {
      const auto prog = compile_graph(g, Strategy::TwoAtom);
      const auto rep = run_program(prog, critical_model(prog.num_qubits, 20.0, 0.2, seed), {});
      CHECK(rep.fidelity >= 1.0 - 1e-9);
      CHECK(rep.probability < rep.ideal_probability);
    }
  }
}

TEST_CASE("off-critical coupling degrades fidelity") {
  const auto model = reflection_model_for(PhysicalPoint{false, 20.0, 0.4, 400.0, 1.0, kPi, 0.0, 0}, 4);
  const auto prog = compile_graph(GraphSpec::path(4), Strategy::TwoAtom);
  const auto one = run_program(prog, model, ProbePolicy{1, NoClickModel::Coherent});
  CHECK(one.fidelity < 1.0 - 1e-3);
  const auto two = run_program(prog, model, ProbePolicy{2, NoClickModel::Coherent});
  CHECK(two.probability > one.probability);
  CHECK(two.fidelity >= 0.0);
  CHECK(two.fidelity <= 1.0);
}

TEST_CASE("a detuned probe sees a nonzero empty-cavity reflection") {
  const auto prog = compile_graph(GraphSpec::path(3), Strategy::TwoAtom);
  const auto model = critical_model(3, 20.0);
  const auto resonant = run_program(prog, model, {});
  const auto detuned = run_program(prog, model, ProbePolicy{1, NoClickModel::Coherent, 60.0});
  CHECK(resonant.fidelity >= 1.0 - 1e-9);
  CHECK(detuned.fidelity < 1.0 - 1e-4);
  CHECK(detuned.probability != resonant.probability);
  CHECK(to_json(detuned).at("delta") == 60.0);
}

TEST_CASE("pure and density backends agree for single photons") {
  const auto prog = compile_graph(GraphSpec::cycle(4), Strategy::TwoAtom);
  const auto model = reflection_model_for(PhysicalPoint{false, 6.0, 0.42, 400.0, 1.0, kPi, 0.1, 4}, 4);
  const auto pure = execute(prog, model, {}, Backend::Pure);
  const auto mixed = execute(prog, model, {}, Backend::Density);
  CHECK(pure.probability == doctest::Approx(mixed.probability).epsilon(1e-13));
  CHECK(fidelity(*mixed.mixed, *pure.pure) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK_THROWS_AS(execute(prog, model, ProbePolicy{2, NoClickModel::Coherent}, Backend::Pure), InvalidArgument);
}

TEST_CASE("schedule JSON round trip is bit-exact") {
  const auto model = critical_model(6, 3.0, 0.15, 8);
  for (const auto& [g, s] : {std::pair{GraphSpec::grid(2, 3), Strategy::TwoAtom},
                             std::pair{GraphSpec::path(5), Strategy::MultiAtom}}) {
    const auto prog = compile_graph(g, s);
    const auto back = program_from_json(nlohmann::json::parse(to_json(prog).dump()));
    CHECK(to_json(back) == to_json(prog));
    const auto a = execute(prog, model, {});
    const auto b = execute(back, model, {});
    CHECK(a.probability == b.probability);
    for (std::size_t i = 0; i < a.pure->dim(); ++i) CHECK((*a.pure)[i] == (*b.pure)[i]);
  }
  const auto bell = program_from_json(to_json(bell_carving_program()));
  CHECK(bell.target_state.has_value());
}

TEST_CASE("malformed programs") {
  nlohmann::json j = to_json(compile_graph(GraphSpec::path(3), Strategy::TwoAtom));
  auto bad = j;
  bad["format"] = "other";
  CHECK_THROWS_AS(program_from_json(bad), ParseError);
  bad = j;
  bad["n_carvings"] = 3;
  CHECK_THROWS_AS(program_from_json(bad), ParseError);
  bad = j;
  bad["steps"].push_back({{"op", "teleport"}});
  CHECK_THROWS_AS(program_from_json(bad), ParseError);

  ProtocolProgram p = compile_graph(GraphSpec::path(3), Strategy::TwoAtom);
  p.steps.erase(p.steps.begin());  // drops InitPlus on qubit 0
  CHECK_THROWS_AS(execute(p, ReflectionModel::ideal(), {}), InvalidArgument);

  ProtocolProgram q = compile_graph(GraphSpec::path(2), Strategy::TwoAtom);
  q.n_carvings = 5;
  CHECK_THROWS_AS(check_program(q), InvalidArgument);
  CHECK_THROWS_AS(strategy_from_string("three-atom"), UnsupportedStrategy);
  CHECK_THROWS_AS(compile_graph(GraphSpec::path(kMaxQubits + 1), Strategy::TwoAtom), CapExceeded);
}

TEST_CASE("validation suite passes") {
  for (const auto& r : run_validation_suite(4)) {
    INFO(r.name << ": " << r.detail);
    CHECK(r.passed);
  }
}
