// Python bindings for the carving simulator. Reports and sweep rows come
// back as plain dicts and lists, mirroring the CLI's JSON output.

#include <pybind11/complex.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "graphcarve/analysis.hpp"
#include "graphcarve/carving.hpp"
#include "graphcarve/cavity.hpp"
#include "graphcarve/errors.hpp"
#include "graphcarve/protocol.hpp"
#include "graphcarve/qstate.hpp"
#include "graphcarve/validation.hpp"

namespace py = pybind11;
namespace gc = graphcarve;

namespace {

py::object to_python(const nlohmann::json& j) {
  switch (j.type()) {
    case nlohmann::json::value_t::null: return py::none();
    case nlohmann::json::value_t::boolean: return py::bool_(j.get<bool>());
    case nlohmann::json::value_t::number_integer: return py::int_(j.get<std::int64_t>());
    case nlohmann::json::value_t::number_unsigned: return py::int_(j.get<std::uint64_t>());
    case nlohmann::json::value_t::number_float: return py::float_(j.get<double>());
    case nlohmann::json::value_t::string: return py::str(j.get<std::string>());
    case nlohmann::json::value_t::array: {
      py::list out;
      for (const auto& v : j) out.append(to_python(v));
      return std::move(out);
    }
    case nlohmann::json::value_t::object: {
      py::dict out;
      for (const auto& [k, v] : j.items()) out[py::str(k)] = to_python(v);
      return std::move(out);
    }
    default: throw gc::ParseError("unsupported JSON value");
  }
}

nlohmann::json from_python(const py::handle& h) {
  return nlohmann::json::parse(py::module_::import("json").attr("dumps")(h).cast<std::string>());
}

gc::ProbePolicy policy(int n_photons, const std::string& no_click) {
  return {n_photons, gc::no_click_model_from_string(no_click)};
}

}  // namespace

PYBIND11_MODULE(graphcarve, m) {
  m.doc() = "Heralded graph-state carving in an atom-cavity system. Rates are multiples of gamma.";

  auto base = py::register_exception<gc::Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<gc::InvalidArgument>(m, "InvalidArgument", base.ptr());
  py::register_exception<gc::HeraldImpossible>(m, "HeraldImpossible", base.ptr());
  py::register_exception<gc::CapExceeded>(m, "CapExceeded", base.ptr());
  py::register_exception<gc::UnsupportedStrategy>(m, "UnsupportedStrategy", base.ptr());
  py::register_exception<gc::ParseError>(m, "ParseError", base.ptr());

  py::class_<gc::AtomSite>(m, "AtomSite")
      .def(py::init([](double g, double phase_arg, bool coupled) { return gc::AtomSite{g, phase_arg, coupled}; }),
           py::arg("g"), py::arg("phase_arg") = 3.141592653589793, py::arg("coupled") = false)
      .def_readwrite("g", &gc::AtomSite::g)
      .def_readwrite("phase_arg", &gc::AtomSite::phase_arg)
      .def_readwrite("coupled", &gc::AtomSite::coupled);

  py::class_<gc::CavityParams>(m, "CavityParams")
      .def(py::init([](double kappa_wg, double kappa_sc, std::vector<gc::AtomSite> atoms, double gamma) {
             gc::CavityParams p;
             p.gamma = gamma;
             p.kappa_wg = kappa_wg;
             p.kappa_sc = kappa_sc;
             p.atoms = std::move(atoms);
             return p;
           }),
           py::arg("kappa_wg"), py::arg("kappa_sc"), py::arg("atoms") = std::vector<gc::AtomSite>{},
           py::arg("gamma") = 1.0)
      .def_static("uniform", &gc::CavityParams::uniform, py::arg("n_atoms"), py::arg("g"), py::arg("phase_arg"),
                  py::arg("kappa_wg"), py::arg("kappa_sc"), py::arg("gamma") = 1.0)
      .def_readwrite("gamma", &gc::CavityParams::gamma)
      .def_readwrite("kappa_wg", &gc::CavityParams::kappa_wg)
      .def_readwrite("kappa_sc", &gc::CavityParams::kappa_sc)
      .def_readwrite("atoms", &gc::CavityParams::atoms)
      .def_property_readonly("kappa", &gc::CavityParams::kappa);

  m.def("cooperativity", &gc::cooperativity, py::arg("params"), py::arg("atom"));
  m.def("reflection_coefficient", &gc::reflection_coefficient, py::arg("params"), py::arg("delta") = 0.0);
  m.def(
      "reflectivity_spectrum",
      [](const gc::CavityParams& p, std::vector<double> deltas) {
        std::vector<std::tuple<double, gc::complex, double>> out;
        for (const auto& pt : gc::reflectivity_spectrum(p, deltas)) out.emplace_back(pt.delta, pt.r, pt.R);
        return out;
      },
      py::arg("params"), py::arg("deltas"), "List of (delta, r, R) tuples.");

  py::class_<gc::GraphSpec>(m, "GraphSpec")
      .def(py::init<int, std::vector<std::pair<int, int>>>(), py::arg("n_vertices"), py::arg("edges"))
      .def_static("path", &gc::GraphSpec::path)
      .def_static("cycle", &gc::GraphSpec::cycle)
      .def_static("grid", &gc::GraphSpec::grid, py::arg("w"), py::arg("h"))
      .def_property_readonly("n_vertices", &gc::GraphSpec::n_vertices)
      .def_property_readonly("edges", &gc::GraphSpec::edges)
      .def("__eq__", [](const gc::GraphSpec& a, const gc::GraphSpec& b) { return a == b; });

  m.def(
      "target_graph_state",
      [](const gc::GraphSpec& g) {
        const auto s = gc::target_graph_state(g);
        return std::vector<gc::complex>(s.amps().begin(), s.amps().end());
      },
      "Amplitudes of the graph state; qubit 0 is the most significant bit.");

  py::class_<gc::ReflectionModel>(m, "ReflectionModel")
      .def_static("cavity", &gc::ReflectionModel::cavity)
      .def_static("table", &gc::ReflectionModel::table, py::arg("r_by_count"))
      .def_static("ideal", &gc::ReflectionModel::ideal)
      .def("reflection", &gc::ReflectionModel::reflection, py::arg("coupled"), py::arg("num_qubits"),
           py::arg("delta") = 0.0);

  py::class_<gc::ProtocolProgram>(m, "ProtocolProgram")
      .def_readonly("num_qubits", &gc::ProtocolProgram::num_qubits)
      .def_readonly("n_carvings", &gc::ProtocolProgram::n_carvings)
      .def_property_readonly("strategy", [](const gc::ProtocolProgram& p) { return gc::to_string(p.strategy); })
      .def("to_json", [](const gc::ProtocolProgram& p) { return gc::to_json(p).dump(); })
      .def_static("from_json", [](const std::string& s) { return gc::program_from_json(nlohmann::json::parse(s)); });

  m.def(
      "compile_graph",
      [](const gc::GraphSpec& g, const std::string& strategy) {
        return gc::compile_graph(g, gc::strategy_from_string(strategy));
      },
      py::arg("graph"), py::arg("strategy") = "two-atom");
  m.def("bell_carving_program", &gc::bell_carving_program);
  m.def(
      "run_program",
      [](const gc::ProtocolProgram& prog, const gc::ReflectionModel& model, int n_photons,
         const std::string& no_click) {
        return to_python(gc::to_json(gc::run_program(prog, model, policy(n_photons, no_click))));
      },
      py::arg("program"), py::arg("model"), py::arg("n_photons") = 1, py::arg("no_click") = "coherent",
      "Runs the program and returns the report as a dict.");

  m.def(
      "approx_probability_formula",
      [](int n, double R, const std::string& strategy) {
        return gc::approx_probability_formula(n, R, gc::strategy_from_string(strategy));
      },
      py::arg("n_vertices"), py::arg("reflectivity"), py::arg("strategy") = "two-atom");
  m.def(
      "sweep",
      [](const py::handle& spec) { return to_python(gc::to_json(gc::sweep(gc::sweep_spec_from_json(from_python(spec))))); },
      py::arg("spec"), "Runs a sweep spec (same keys as the CLI's JSON) and returns the rows.");
  m.def(
      "sweep_csv", [](const py::handle& spec) { return gc::sweep_csv(gc::sweep(gc::sweep_spec_from_json(from_python(spec)))); },
      py::arg("spec"));
  m.def("search_multi_atom_block", [] { return to_python(gc::to_json(gc::search_multi_atom_block())); });
  m.def(
      "validate",
      [](int max_vertices) {
        std::vector<std::tuple<std::string, bool, std::string>> out;
        for (const auto& r : gc::run_validation_suite(max_vertices)) out.emplace_back(r.name, r.passed, r.detail);
        return out;
      },
      py::arg("max_vertices") = 5);
}
