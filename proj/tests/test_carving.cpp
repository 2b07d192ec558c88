#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "graphcarve/analysis.hpp"
#include "graphcarve/carving.hpp"
#include "graphcarve/errors.hpp"
#include "oracles.hpp"

using namespace graphcarve;

namespace {

constexpr double kPi = std::numbers::pi;

CavityParams critical(int n_atoms, double C) {
  return CavityParams::uniform(static_cast<std::size_t>(n_atoms),
                               CavityParams::coupling_for_cooperativity(C, 400.0, 1.0, kPi), kPi, 200.0, 200.0);
}

PureState random_state(int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss;
  std::vector<complex> amps(std::size_t{1} << n);
  for (auto& a : amps) a = {gauss(rng), gauss(rng)};
  PureState s(n, std::move(amps));
  s.normalize();
  return s;
}

// Click probability by summing |c_x|^2 |r(x)|^2 with r from the dense solve.
double brute_click(const PureState& s, const CavityParams& base, std::uint32_t subset) {
  double p = 0.0;
  const int n = s.num_qubits();
  for (std::size_t x = 0; x < s.dim(); ++x) {
    CavityParams c = base;
    for (int q = 0; q < n; ++q) c.atoms[static_cast<std::size_t>(q)].coupled = (x & subset & qubit_bit(n, q)) != 0;
    p += std::norm(s[x]) * std::norm(oracle::dense_reflection(c, 0.0));
  }
  return p;
}

}  // namespace

TEST_CASE("ideal carving of |++>") {
  const auto res = carve_click(PureState::plus(2), CarveSpec{QubitMask(2, 0b11), ReflectionModel::ideal(), 0.0});
  CHECK(res.p_click == doctest::Approx(0.75).epsilon(1e-15));
  const double a = 1.0 / std::sqrt(3.0);
  CHECK(fidelity(res.heralded.branches.at(0).state, PureState(2, {0.0, a, a, a})) == doctest::Approx(1.0));
  CHECK(res.factor_ledger.size() == 4u);
  CHECK(res.factor_ledger.at(0) == complex(0.0));
  CHECK(res.factor_ledger.at(3) == complex(-1.0));
}

TEST_CASE("herald impossible when every component has r = 0") {
  const CarveSpec spec{QubitMask(2, 0b11), ReflectionModel::cavity(critical(2, 20.0)), 0.0};
  CHECK_THROWS_AS(carve_click(PureState(2), spec), HeraldImpossible);
  // Components outside the subset do not couple.
  const CarveSpec partial{QubitMask(2, 0b10), ReflectionModel::cavity(critical(2, 20.0)), 0.0};
  CHECK_THROWS_AS(carve_click(PureState::product("01"), partial), HeraldImpossible);
}

TEST_CASE("finite-C click probability against the brute-force sum") {
  const CavityParams p = critical(2, 20.0);
  const auto res = carve_click(PureState::plus(2), CarveSpec{QubitMask(2, 0b11), ReflectionModel::cavity(p), 0.0});
  const double R1 = std::pow(20.0 / 21.0, 2);
  const double R2 = std::pow(40.0 / 41.0, 2);
  CHECK(res.p_click == doctest::Approx((2 * R1 + R2) / 4).epsilon(1e-12));
  CHECK(res.p_click == doctest::Approx(brute_click(PureState::plus(2), p, 0b11)).epsilon(1e-12));
  CHECK(std::abs(res.p_click - 0.6917) < 3e-4);  // 0.691468 exactly

  CavityParams uneven = cavity_params_for(PhysicalPoint{false, 7.0, 0.35, 400.0, 1.0, kPi, 0.3, 12}, 4);
  for (std::uint32_t subset = 1; subset < 16; ++subset) {
    const PureState s = random_state(4, subset);
    const double got = carve_click(s, CarveSpec{QubitMask(4, subset), ReflectionModel::cavity(uneven), 0.0}).p_click;
    CHECK(got == doctest::Approx(brute_click(s, uneven, subset)).epsilon(1e-12));
  }
}

TEST_CASE("click and no-click weights sum to one") {
  const CarveSpec spec{QubitMask(2, 0b11), ReflectionModel::cavity(critical(2, 20.0)), 0.0};
  const double click = carve_click(PureState::plus(2), spec).p_click;
  for (NoClickModel m : {NoClickModel::Coherent, NoClickModel::Dephased}) {
    const double w = carve_no_click(PureState::plus(2), spec, m).total_weight();
    CHECK(w == doctest::Approx(1.0 - click).epsilon(1e-12));
    CHECK(std::abs(w - 0.3083) < 3e-4);
  }
  const auto ideal = carve_no_click(PureState::plus(2), CarveSpec{QubitMask(2, 0b11), ReflectionModel::ideal(), 0.0},
                                    NoClickModel::Coherent);
  CHECK(ideal.total_weight() == doctest::Approx(0.25));
  CHECK(fidelity(ideal, PureState(2)) == doctest::Approx(1.0));

  const CarveSpec mirror{QubitMask(2, 0b11), ReflectionModel::cavity(CavityParams::uniform(2, 0.0, 0.0, 300.0, 0.0)), 0.0};
  CHECK(carve_no_click(random_state(2, 3), mirror, NoClickModel::Coherent).total_weight() < 1e-30);
}

TEST_CASE("dephased no-click splits by reflection magnitude") {
  const CarveSpec spec{QubitMask(2, 0b11), ReflectionModel::table({0.0, -0.6, -0.9}), 0.0};
  const auto mix = carve_no_click(PureState::plus(2), spec, NoClickModel::Dephased);
  CHECK(mix.branches.size() == 3u);
  const auto coherent = carve_no_click(PureState::plus(2), spec, NoClickModel::Coherent);
  CHECK(coherent.branches.size() == 1u);
  CHECK(mix.total_weight() == doctest::Approx(coherent.total_weight()));
}

TEST_CASE("sequential probes") {
  const PureState s = random_state(3, 9);
  const CarveSpec spec{QubitMask(3, 0b111), ReflectionModel::cavity(critical(3, 2.0)), 0.0};
  const auto one = carve_sequential(s, spec, ProbePolicy{1, NoClickModel::Coherent});
  const auto direct = carve_click(s, spec);
  CHECK(one.p_click == doctest::Approx(direct.p_click).epsilon(1e-14));
  CHECK(fidelity(one.heralded, direct.heralded.branches[0].state) == doctest::Approx(1.0).epsilon(1e-14));

  for (int np : {1, 2, 5}) {
    const auto ideal = carve_sequential(PureState::plus(2), CarveSpec{QubitMask(2, 0b11), ReflectionModel::ideal(), 0.0},
                                        ProbePolicy{np, NoClickModel::Coherent});
    CHECK(ideal.p_click == doctest::Approx(0.75).epsilon(1e-14));
    const double a = 1.0 / std::sqrt(3.0);
    CHECK(fidelity(ideal.heralded, PureState(2, {0.0, a, a, a})) == doctest::Approx(1.0).epsilon(1e-14));
  }

  // Every surviving configuration at R = 0.8 and r_0 = 0: capture 1 - 0.2^N_p.
  const CarveSpec flat{QubitMask(2, 0b11), ReflectionModel::table({0.0, -std::sqrt(0.8), -std::sqrt(0.8)}), 0.0};
  const auto two = carve_sequential(PureState::plus(2), flat, ProbePolicy{2, NoClickModel::Coherent});
  CHECK(two.p_click == doctest::Approx(0.75 * 0.96).epsilon(1e-13));
  CHECK(capture_probability(0.8, 2) == doctest::Approx(0.96).epsilon(1e-15));
  CHECK(capture_probability(0.8, 1) == 0.8);
}

TEST_CASE("sequential probes raise the capture of the empty-cavity component too") {
  // Off critical coupling r_0 != 0, so a second photon also picks up the
  // component the carving should remove.
  const PhysicalPoint off{false, 20.0, 0.4, 400.0, 1.0, kPi, 0.0, 0};
  const double R0 = std::norm(reflection_model_for(off, 1).reflection(0, 1));
  CHECK(R0 == doctest::Approx(0.04).epsilon(1e-12));
  CHECK(capture_probability(R0, 2) / capture_probability(R0, 1) > 1.9);
  const double R1 = single_atom_reflectivity(off);
  CHECK(capture_probability(R1, 2) / capture_probability(R1, 1) < 1.1);
}

TEST_CASE("density route agrees with the branch route") {
  const auto model = ReflectionModel::cavity(
      cavity_params_for(PhysicalPoint{false, 4.0, 0.3, 400.0, 1.0, kPi, 0.2, 21}, 3));
  for (NoClickModel m : {NoClickModel::Coherent, NoClickModel::Dephased}) {
    for (int np = 1; np <= 4; ++np) {
      const PureState s = random_state(3, static_cast<std::uint64_t>(np));
      const CarveSpec spec{QubitMask(3, 0b110), model, 0.0};
      const auto branched = carve_sequential(s, spec, ProbePolicy{np, m});
      DensityMatrix rho(s);
      const double p = carve_sequential_inplace(rho, spec, ProbePolicy{np, m});
      CHECK(p == doctest::Approx(branched.p_click).epsilon(1e-13));
      DensityMatrix ref = branched.heralded.to_density();
      ref.scale(1.0 / branched.p_click);
      for (std::size_t i = 0; i < rho.dim(); ++i)
        for (std::size_t j = 0; j < rho.dim(); ++j) CHECK(std::abs(rho.at(i, j) - ref.at(i, j)) < 1e-12);
    }
  }
}

TEST_CASE("reflection table and model errors") {
  CHECK_THROWS_AS(ReflectionModel::table({}), InvalidArgument);
  CHECK_THROWS_AS(ReflectionModel::table({0.0, 1.5}), InvalidArgument);
  const auto model = ReflectionModel::table({0.0, -0.5});
  CHECK(model.reflection(0b11, 2) == complex(-0.5));  // counts past the table reuse the last entry
  CHECK_THROWS_AS(ReflectionModel::cavity(critical(1, 1.0)).reflection(0b11, 2), InvalidArgument);
  const auto wg0 = ReflectionModel::cavity(CavityParams::uniform(1, 1.0, 0.0, 0.0, 10.0));
  CHECK_FALSE(wg0.warnings().empty());
  CHECK(pattern_string(0b101, QubitMask(3, 0b111)) == "101");
  CHECK(no_click_model_from_string(to_string(NoClickModel::Dephased)) == NoClickModel::Dephased);
  CHECK_THROWS_AS(no_click_model_from_string("other"), InvalidArgument);
}
