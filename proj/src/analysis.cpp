#include "graphcarve/analysis.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <random>
#include <sstream>
#include <thread>

#include "graphcarve/errors.hpp"

namespace graphcarve {

namespace {

std::string num(double v) {
  char buf[64];
  if (v == 0.0) v = 0.0;  // drops the sign of -0
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

}  // namespace

std::vector<GraphFamilySpec::Member> GraphFamilySpec::members() const {
  std::vector<Member> out;
  switch (family) {
    case GraphFamily::Path:
      if (n_min < 1 || n_max < n_min) throw InvalidArgument("path family needs 1 <= n_min <= n_max");
      check_qubit_cap(n_max);
      for (int n = n_min; n <= n_max; ++n) out.push_back({"path" + std::to_string(n), GraphSpec::path(n)});
      break;
    case GraphFamily::Square:
      out.push_back({"square", GraphSpec::cycle(4)});
      break;
    case GraphFamily::Grid:
      check_qubit_cap(w * h);
      out.push_back({"grid" + std::to_string(w) + "x" + std::to_string(h), GraphSpec::grid(w, h)});
      break;
  }
  return out;
}

void apply_coupling_jitter(CavityParams& params, double jitter, std::uint64_t seed) {
  if (jitter < 0.0) throw InvalidArgument("jitter must be non-negative");
  if (jitter == 0.0) return;
  std::mt19937_64 rng(seed);
  for (auto& atom : params.atoms) {
    // 53-bit uniform in [0, 1), portable across standard libraries.
    const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
    atom.g *= 1.0 + jitter * (2.0 * u - 1.0);
  }
}

CavityParams cavity_params_for(const PhysicalPoint& point, int n_atoms) {
  if (point.kappa_wg_ratio < 0.0 || point.kappa_wg_ratio > 1.0)
    throw InvalidArgument("kappa_wg / kappa must lie in [0, 1]");
  const double g =
      CavityParams::coupling_for_cooperativity(point.cooperativity, point.kappa, point.gamma, point.phase_arg);
  CavityParams p = CavityParams::uniform(static_cast<std::size_t>(n_atoms), g, point.phase_arg,
                                         point.kappa_wg_ratio * point.kappa,
                                         (1.0 - point.kappa_wg_ratio) * point.kappa, point.gamma);
  apply_coupling_jitter(p, point.jitter, point.seed);
  p.validate();
  return p;
}

ReflectionModel reflection_model_for(const PhysicalPoint& point, int n_atoms) {
  if (point.ideal) return ReflectionModel::ideal();
  return ReflectionModel::cavity(cavity_params_for(point, n_atoms));
}

double single_atom_reflectivity(const PhysicalPoint& point) {
  if (point.ideal) return 1.0;
  PhysicalPoint p = point;
  p.jitter = 0.0;
  CavityParams params = cavity_params_for(p, 1);
  params.atoms[0].coupled = true;
  return std::norm(reflection_coefficient(params, 0.0));
}

int linear_carving_count(int n_vertices, Strategy strategy) {
  if (n_vertices < 1) throw InvalidArgument("need at least one vertex");
  if (strategy == Strategy::TwoAtom) return 2 * (n_vertices - 1);
  const int blocks = (n_vertices - 1) / 2;
  return 4 * blocks + 2 * ((n_vertices - 1) % 2);
}

double approx_probability_formula(int n_vertices, double reflectivity, Strategy strategy) {
  if (reflectivity < 0.0 || reflectivity > 1.0) throw InvalidArgument("reflectivity must lie in [0, 1]");
  const int exponent = strategy == Strategy::TwoAtom ? n_vertices - 1 : n_vertices / 2;
  return std::ldexp(1.0, -exponent) * std::pow(reflectivity, linear_carving_count(n_vertices, strategy));
}

std::vector<SweepRow> sweep(const SweepSpec& spec, unsigned threads) {
  if (spec.n_photons.empty()) throw InvalidArgument("n_photons list is empty");
  const auto cs = spec.cooperativities.empty() ? std::vector<double>{spec.base.cooperativity}
                                               : spec.cooperativities;
  const auto ratios = spec.kappa_wg_ratios.empty() ? std::vector<double>{spec.base.kappa_wg_ratio}
                                                   : spec.kappa_wg_ratios;
  const auto members = spec.graphs.members();

  std::vector<SweepRow> rows;
  std::vector<const GraphSpec*> graph_of_row;
  for (const auto& m : members)
    for (double c : cs)
      for (double ratio : ratios)
        for (int np : spec.n_photons) {
          SweepRow row;
          row.graph = m.label;
          row.n_vertices = m.graph.n_vertices();
          row.strategy = spec.strategy;
          row.point = spec.base;
          row.point.cooperativity = c;
          row.point.kappa_wg_ratio = ratio;
          row.policy = ProbePolicy{np, spec.no_click};
          rows.push_back(std::move(row));
          graph_of_row.push_back(&m.graph);
        }

  auto evaluate = [&](std::size_t i) {
    SweepRow& row = rows[i];
    try {
      const ProtocolProgram prog = compile_graph(*graph_of_row[i], row.strategy);
      row.report = run_program(prog, reflection_model_for(row.point, prog.num_qubits), row.policy);
      if (graph_of_row[i]->is_path())
        row.approx_probability =
            approx_probability_formula(row.n_vertices, single_atom_reflectivity(row.point), row.strategy);
      else
        row.approx_probability = std::nan("");
    } catch (const Error& e) {
      row.report.reset();
      row.error = e.what();
    }
  };

  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min<unsigned>(threads, static_cast<unsigned>(rows.size()));
  if (threads <= 1) {
    for (std::size_t i = 0; i < rows.size(); ++i) evaluate(i);
    return rows;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::jthread> workers;
  for (unsigned t = 0; t < threads; ++t)
    workers.emplace_back([&] {
      for (std::size_t i = next++; i < rows.size(); i = next++) evaluate(i);
    });
  workers.clear();  // joins
  return rows;
}

std::vector<SweepRow> robustness_uneven(SweepSpec spec, double jitter, std::uint64_t seed) {
  if (jitter < 0.0) throw InvalidArgument("jitter must be non-negative");
  spec.base.jitter = jitter;
  spec.base.seed = seed;
  spec.kappa_wg_ratios.clear();
  return sweep(spec);
}

std::string sweep_csv(const std::vector<SweepRow>& rows) {
  std::ostringstream out;
  out << kSweepCsvVersion << '\n'
      << "graph,n_vertices,strategy,ideal,cooperativity,kappa_wg_ratio,kappa,phase_arg,jitter,seed,"
         "n_photons,no_click,n_carvings,probability,ideal_probability,approx_probability,fidelity,status\n";
  for (const auto& r : rows) {
    out << r.graph << ',' << r.n_vertices << ',' << to_string(r.strategy) << ',' << (r.point.ideal ? 1 : 0)
        << ',' << num(r.point.cooperativity) << ',' << num(r.point.kappa_wg_ratio) << ','
        << num(r.point.kappa) << ',' << num(r.point.phase_arg) << ',' << num(r.point.jitter) << ','
        << r.point.seed << ',' << r.policy.n_photons << ',' << to_string(r.policy.no_click) << ',';
    if (r.report) {
      out << r.report->n_carvings << ',' << num(r.report->probability) << ','
          << num(r.report->ideal_probability) << ',' << num(r.approx_probability) << ','
          << num(r.report->fidelity) << ",ok\n";
    } else {
      std::string msg = r.error;
      std::replace(msg.begin(), msg.end(), ',', ';');
      std::replace(msg.begin(), msg.end(), '\n', ' ');
      out << ",,,,,error: " << msg << '\n';
    }
  }
  return out.str();
}

nlohmann::json to_json(const std::vector<SweepRow>& rows) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& r : rows) {
    nlohmann::json row = {{"graph", r.graph},
                          {"n_vertices", r.n_vertices},
                          {"strategy", to_string(r.strategy)},
                          {"ideal", r.point.ideal},
                          {"cooperativity", r.point.cooperativity},
                          {"kappa_wg_ratio", r.point.kappa_wg_ratio},
                          {"kappa", r.point.kappa},
                          {"phase_arg", r.point.phase_arg},
                          {"jitter", r.point.jitter},
                          {"seed", r.point.seed},
                          {"n_photons", r.policy.n_photons},
                          {"no_click", to_string(r.policy.no_click)}};
    if (r.report) {
      row["report"] = to_json(*r.report);
      row["approx_probability"] =
          std::isfinite(r.approx_probability) ? nlohmann::json(r.approx_probability) : nlohmann::json(nullptr);
    } else {
      row["error"] = r.error;
    }
    out.push_back(std::move(row));
  }
  return out;
}

namespace {

void reject_unknown(const nlohmann::json& obj, std::initializer_list<const char*> allowed,
                    const std::string& where) {
  for (const auto& [key, value] : obj.items()) {
    if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; }))
      throw ParseError(where + ": unknown key '" + key + "'");
  }
}

}  // namespace

SweepSpec sweep_spec_from_json(const nlohmann::json& j) {
  try {
    reject_unknown(j, {"graphs", "strategy", "base", "cooperativities", "kappa_wg_ratios", "n_photons", "no_click"},
                   "sweep spec");
    SweepSpec s;
    const auto& g = j.at("graphs");
    reject_unknown(g, {"family", "n_min", "n_max", "w", "h"}, "sweep spec graphs");
    const std::string family = g.at("family").get<std::string>();
    if (family == "path") {
      s.graphs.family = GraphFamily::Path;
      s.graphs.n_min = g.at("n_min").get<int>();
      s.graphs.n_max = g.at("n_max").get<int>();
    } else if (family == "square") {
      s.graphs.family = GraphFamily::Square;
    } else if (family == "grid") {
      s.graphs.family = GraphFamily::Grid;
      s.graphs.w = g.at("w").get<int>();
      s.graphs.h = g.at("h").get<int>();
    } else {
      throw ParseError("sweep spec: unknown graph family '" + family + "'");
    }
    s.strategy = strategy_from_string(j.value("strategy", std::string("two-atom")));
    if (j.contains("base")) {
      const auto& b = j.at("base");
      reject_unknown(b, {"ideal", "cooperativity", "kappa_wg_ratio", "kappa", "gamma", "phase_arg", "jitter", "seed"},
                     "sweep spec base");
      s.base.ideal = b.value("ideal", s.base.ideal);
      s.base.cooperativity = b.value("cooperativity", s.base.cooperativity);
      s.base.kappa_wg_ratio = b.value("kappa_wg_ratio", s.base.kappa_wg_ratio);
      s.base.kappa = b.value("kappa", s.base.kappa);
      s.base.gamma = b.value("gamma", s.base.gamma);
      s.base.phase_arg = b.value("phase_arg", s.base.phase_arg);
      s.base.jitter = b.value("jitter", s.base.jitter);
      s.base.seed = b.value("seed", s.base.seed);
    }
    s.cooperativities = j.value("cooperativities", std::vector<double>{});
    s.kappa_wg_ratios = j.value("kappa_wg_ratios", std::vector<double>{});
    s.n_photons = j.value("n_photons", std::vector<int>{1});
    if (s.n_photons.empty()) throw ParseError("sweep spec: n_photons list is empty");
    for (int np : s.n_photons)
      if (np < 1) throw ParseError("sweep spec: n_photons entries must be >= 1");
    s.no_click = no_click_model_from_string(j.value("no_click", std::string("coherent")));
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("sweep spec: ") + e.what());
  } catch (const InvalidArgument& e) {
    throw ParseError(std::string("sweep spec: ") + e.what());
  }
}

std::string spectrum_csv(const std::vector<ReflectionPoint>& points) {
  std::ostringstream out;
  out << kSpectrumCsvVersion << '\n' << "delta,re_r,im_r,R\n";
  for (const auto& p : points)
    out << num(p.delta) << ',' << num(p.r.real()) << ',' << num(p.r.imag()) << ',' << num(p.R) << '\n';
  return out.str();
}

}  // namespace graphcarve
