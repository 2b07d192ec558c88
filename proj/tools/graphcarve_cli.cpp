// graphcarve: reflectivity spectra, carving schedules, protocol runs, sweeps.
//
// Exit codes: 0 success, 1 other error, 2 parse/usage error,
// 3 herald impossible, 4 qubit cap exceeded, 5 unsupported strategy,
// 6 validation failure.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "graphcarve/analysis.hpp"
#include "graphcarve/config.hpp"
#include "graphcarve/errors.hpp"
#include "graphcarve/protocol.hpp"
#include "graphcarve/validation.hpp"

namespace gc = graphcarve;

namespace {

enum ExitCode { kOk = 0, kOther = 1, kParse = 2, kHerald = 3, kCap = 4, kStrategy = 5, kValidation = 6 };

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw gc::ParseError("cannot open '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

nlohmann::json read_json(const std::string& path) {
  try {
    return nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw gc::ParseError(path + ": " + e.what());
  }
}

// Writes to stdout when path is empty, otherwise via a temp file + rename.
void emit(const std::string& path, const std::string& content) {
  if (path.empty()) {
    std::cout << content;
    return;
  }
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw gc::Error("cannot write '" + tmp + "'");
    out << content;
    if (!out.flush()) throw gc::Error("write to '" + tmp + "' failed");
  }
  std::filesystem::rename(tmp, path);
}

struct Options {
  std::string config;
  std::string graph;
  std::string schedule;
  std::string spec;
  std::string strategy = "two-atom";
  std::string out;
  std::string format = "csv";
  std::optional<int> n_photons;
  std::optional<std::string> no_click;
  std::optional<std::uint64_t> seed;
  int n_coupled = 0;
  double delta_min = -100.0;
  double delta_max = 100.0;
  std::size_t points = 401;
  int max_vertices = 5;
};

gc::Config resolved_config(const Options& o) {
  gc::Config cfg = o.config.empty() ? gc::Config{} : gc::load_config(o.config);
  if (o.n_photons) {
    if (*o.n_photons < 1) throw gc::ParseError("--np must be >= 1");
    cfg.n_photons = *o.n_photons;
  }
  if (o.no_click) cfg.no_click = gc::no_click_model_from_string(*o.no_click);
  if (o.seed) cfg.seed = *o.seed;
  return cfg;
}

int cmd_spectrum(const Options& o) {
  const gc::Config cfg = resolved_config(o);
  if (o.n_coupled < 0) throw gc::ParseError("--na must be non-negative");
  gc::CavityParams params = cfg.cavity_params(o.n_coupled);
  for (auto& a : params.atoms) a.coupled = true;
  const auto grid = gc::linear_grid(o.delta_min, o.delta_max, o.points);
  if (params.kappa_wg == 0.0) std::cerr << "warning: kappa_wg = 0, every r is -1\n";
  emit(o.out, gc::spectrum_csv(gc::reflectivity_spectrum(params, grid)));
  return kOk;
}

int cmd_compile(const Options& o) {
  if (o.graph.empty()) throw gc::ParseError("compile needs --graph");
  const auto g = gc::graph_from_json(read_json(o.graph));
  const auto prog = gc::compile_graph(g, gc::strategy_from_string(o.strategy));
  emit(o.out, gc::to_json(prog).dump(2) + "\n");
  return kOk;
}

int cmd_run(const Options& o) {
  if (o.graph.empty() == o.schedule.empty()) throw gc::ParseError("run needs exactly one of --graph or --schedule");
  const gc::Config cfg = resolved_config(o);
  const gc::ProtocolProgram prog =
      o.schedule.empty() ? gc::compile_graph(gc::graph_from_json(read_json(o.graph)), gc::strategy_from_string(o.strategy))
                         : gc::program_from_json(read_json(o.schedule));
  const auto report = gc::run_program(prog, cfg.reflection_model(prog.num_qubits), cfg.probe_policy());
  for (const auto& w : report.warnings) std::cerr << "warning: " << w << '\n';
  nlohmann::json j = gc::to_json(report);
  j["seed"] = cfg.seed;
  emit(o.out, j.dump(2) + "\n");
  return kOk;
}

int cmd_sweep(const Options& o) {
  if (o.spec.empty()) throw gc::ParseError("sweep needs --spec");
  gc::SweepSpec spec = gc::sweep_spec_from_json(read_json(o.spec));
  if (o.seed) spec.base.seed = *o.seed;
  if (o.n_photons) spec.n_photons = {*o.n_photons};
  if (o.no_click) spec.no_click = gc::no_click_model_from_string(*o.no_click);
  const auto rows = gc::sweep(spec);
  if (o.format == "json") emit(o.out, gc::to_json(rows).dump(2) + "\n");
  else if (o.format == "csv") emit(o.out, gc::sweep_csv(rows));
  else throw gc::ParseError("--format must be csv or json");
  return kOk;
}

int cmd_validate(const Options& o) {
  bool ok = true;
  for (const auto& r : gc::run_validation_suite(o.max_vertices)) {
    std::cout << (r.passed ? "PASS " : "FAIL ") << r.name << " (" << r.detail << ")\n";
    ok = ok && r.passed;
  }
  std::cout << (ok ? "all checks passed\n" : "validation FAILED\n");
  return ok ? kOk : kValidation;
}

int cmd_search_block(const Options& o) {
  const auto block = gc::search_multi_atom_block();
  emit(o.out, gc::to_json(block).dump(2) + "\n");
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Heralded graph-state carving simulator. Rates are multiples of gamma."};
  app.require_subcommand(1);
  Options o;

  auto add_config = [&](CLI::App* sub) { sub->add_option("--config", o.config, "flat key = value config file"); };
  auto add_probe = [&](CLI::App* sub) {
    sub->add_option("--np", o.n_photons, "sequential probe photons per carving");
    sub->add_option("--no-click", o.no_click, "no-click model")->check(CLI::IsMember({"coherent", "dephased"}));
    sub->add_option("--seed", o.seed, "coupling jitter seed");
  };

  auto* spectrum = app.add_subcommand("spectrum", "reflectivity spectrum as CSV");
  add_config(spectrum);
  spectrum->add_option("--na", o.n_coupled, "number of coupled atoms");
  spectrum->add_option("--delta-min", o.delta_min);
  spectrum->add_option("--delta-max", o.delta_max);
  spectrum->add_option("--points", o.points);
  spectrum->add_option("--out", o.out);

  auto* compile = app.add_subcommand("compile", "compile a graph into a carving schedule");
  compile->add_option("--graph", o.graph, "graph JSON {n, edges}")->required();
  compile->add_option("--strategy", o.strategy)->check(CLI::IsMember({"two-atom", "multi-atom"}));
  compile->add_option("--out", o.out);

  auto* run = app.add_subcommand("run", "execute a graph or schedule and report");
  add_config(run);
  add_probe(run);
  run->add_option("--graph", o.graph);
  run->add_option("--schedule", o.schedule);
  run->add_option("--strategy", o.strategy)->check(CLI::IsMember({"two-atom", "multi-atom"}));
  run->add_option("--out", o.out);

  auto* sweep = app.add_subcommand("sweep", "parameter sweep");
  sweep->add_option("--spec", o.spec, "sweep spec JSON")->required();
  add_probe(sweep);
  sweep->add_option("--format", o.format)->check(CLI::IsMember({"csv", "json"}));
  sweep->add_option("--out", o.out);

  auto* validate = app.add_subcommand("validate", "run the oracle validation suite");
  validate->add_option("--max-vertices", o.max_vertices);

  auto* search = app.add_subcommand("search-block", "re-run the multi-atom block search");
  search->add_option("--out", o.out);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kOk : kParse;
  }

  try {
    if (*spectrum) return cmd_spectrum(o);
    if (*compile) return cmd_compile(o);
    if (*run) return cmd_run(o);
    if (*sweep) return cmd_sweep(o);
    if (*validate) return cmd_validate(o);
    if (*search) return cmd_search_block(o);
  } catch (const gc::ParseError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kParse;
  } catch (const gc::HeraldImpossible& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kHerald;
  } catch (const gc::CapExceeded& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kCap;
  } catch (const gc::UnsupportedStrategy& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kStrategy;
  } catch (const gc::InvalidArgument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kParse;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kOther;
  }
  return kOther;
}
