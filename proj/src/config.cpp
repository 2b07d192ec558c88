#include "graphcarve/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "graphcarve/analysis.hpp"
#include "graphcarve/errors.hpp"

namespace graphcarve {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

double parse_real(const std::string& v, const std::string& where) {
  double out = 0.0;
  const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (res.ec != std::errc{} || res.ptr != v.data() + v.size())
    throw ParseError(where + ": expected a number, got '" + v + "'");
  return out;
}

template <class Int>
Int parse_int(const std::string& v, const std::string& where) {
  Int out = 0;
  const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (res.ec != std::errc{} || res.ptr != v.data() + v.size())
    throw ParseError(where + ": expected an integer, got '" + v + "'");
  return out;
}

}  // namespace

Config parse_config(std::string_view text, const std::string& source) {
  Config cfg;
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string where = source + ":" + std::to_string(lineno);
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) throw ParseError(where + ": expected 'key = value'");
    const std::string key = trim(std::string_view(t).substr(0, eq));
    const std::string value = trim(std::string_view(t).substr(eq + 1));
    if (value.empty()) throw ParseError(where + ": empty value for '" + key + "'");

    if (key == "model") {
      if (value != "cavity" && value != "ideal" && value != "table")
        throw ParseError(where + ": model must be cavity, ideal or table");
      cfg.model = value;
    } else if (key == "gamma") cfg.gamma = parse_real(value, where);
    else if (key == "kappa_wg") cfg.kappa_wg = parse_real(value, where);
    else if (key == "kappa_sc") cfg.kappa_sc = parse_real(value, where);
    else if (key == "g") cfg.g = parse_real(value, where);
    else if (key == "phase_arg") cfg.phase_arg = parse_real(value, where);
    else if (key == "cooperativity") cfg.cooperativity = parse_real(value, where);
    else if (key == "jitter") cfg.jitter = parse_real(value, where);
    else if (key == "seed") cfg.seed = parse_int<std::uint64_t>(value, where);
    else if (key == "n_photons") cfg.n_photons = parse_int<int>(value, where);
    else if (key == "delta") cfg.delta = parse_real(value, where);
    else if (key == "no_click") {
      try {
        cfg.no_click = no_click_model_from_string(value);
      } catch (const InvalidArgument& e) {
        throw ParseError(where + ": " + e.what());
      }
    } else if (key == "r_table") {
      cfg.r_table.clear();
      std::stringstream items(value);
      std::string item;
      while (std::getline(items, item, ',')) cfg.r_table.push_back(parse_real(trim(item), where));
    } else if (key.rfind("atom.", 0) == 0) {
      const auto dot = key.find('.', 5);
      if (dot == std::string::npos) throw ParseError(where + ": expected atom.<index>.<field>");
      const int index = parse_int<int>(key.substr(5, dot - 5), where);
      const std::string field = key.substr(dot + 1);
      if (index < 0) throw ParseError(where + ": negative atom index");
      if (field == "g") cfg.atoms[index].g = parse_real(value, where);
      else if (field == "phase_arg") cfg.atoms[index].phase_arg = parse_real(value, where);
      else throw ParseError(where + ": unknown atom field '" + field + "'");
    } else {
      throw ParseError(where + ": unknown key '" + key + "'");
    }
  }
  if (cfg.n_photons < 1) throw ParseError(source + ": n_photons must be >= 1");
  if (cfg.model == "table" && cfg.r_table.empty()) throw ParseError(source + ": model = table needs r_table");
  return cfg;
}

Config load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open config file '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), path);
}

CavityParams Config::cavity_params(int n_atoms) const {
  double base_g = g;
  if (cooperativity)
    base_g = CavityParams::coupling_for_cooperativity(*cooperativity, kappa_wg + kappa_sc, gamma, phase_arg);
  CavityParams p = CavityParams::uniform(static_cast<std::size_t>(n_atoms), base_g, phase_arg, kappa_wg,
                                         kappa_sc, gamma);
  apply_coupling_jitter(p, jitter, seed);
  for (const auto& [index, o] : atoms) {
    if (index >= n_atoms) continue;
    auto& atom = p.atoms[static_cast<std::size_t>(index)];
    if (o.g) atom.g = *o.g;
    if (o.phase_arg) atom.phase_arg = *o.phase_arg;
  }
  p.validate();
  return p;
}

ReflectionModel Config::reflection_model(int n_atoms) const {
  if (model == "ideal") return ReflectionModel::ideal();
  if (model == "table") {
    std::vector<complex> values(r_table.begin(), r_table.end());
    return ReflectionModel::table(std::move(values));
  }
  return ReflectionModel::cavity(cavity_params(n_atoms));
}

}  // namespace graphcarve
