#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "json.hpp"

namespace fs = std::filesystem;

namespace {

struct Scratch {
  fs::path dir;
  Scratch() {
    dir = fs::temp_directory_path() / ("graphcarve_cli_" + std::to_string(::getpid()));
    fs::create_directories(dir);
  }
  ~Scratch() { fs::remove_all(dir); }
  std::string write(const std::string& name, const std::string& content) const {
    std::ofstream(dir / name) << content;
    return (dir / name).string();
  }
  std::string read(const std::string& name) const {
    std::ifstream in(dir / name);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
  }
  std::string path(const std::string& name) const { return (dir / name).string(); }
};

int run(const std::string& args, const Scratch& s) {
  const std::string cmd = std::string(GRAPHCARVE_CLI) + " " + args + " 2>" + s.path("stderr.txt");
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

// R at delta = 0 from a spectrum CSV, plus the largest |R - 1|.
std::pair<double, double> spectrum_stats(const std::string& csv) {
  std::istringstream in(csv);
  std::string line;
  double at_zero = -1.0, worst = 0.0;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#' || line[0] == 'd') continue;
    std::vector<double> v;
    std::stringstream ls(line);
    for (std::string cell; std::getline(ls, cell, ',');) v.push_back(std::stod(cell));
    if (std::abs(v.at(0)) < 1e-12) at_zero = v.at(3);
    worst = std::max(worst, std::abs(v.at(3) - 1.0));
  }
  return {at_zero, worst};
}

const char* kIdeal = "model = ideal\n";

}  // namespace

TEST_CASE("spectrum") {
  Scratch s;
  // (g, kappa_wg, kappa_sc) = (20, 200, 200) are the defaults.
  REQUIRE(run("spectrum --na 0 --points 201 --out " + s.path("a.csv"), s) == 0);
  CHECK(spectrum_stats(s.read("a.csv")).first < 1e-12);
  REQUIRE(run("spectrum --na 1 --points 201 --out " + s.path("b.csv"), s) == 0);
  CHECK(std::abs(spectrum_stats(s.read("b.csv")).first - 0.64) < 1e-9);
  const auto mirror = s.write("mirror.cfg", "kappa_sc = 0\n");
  REQUIRE(run("spectrum --na 0 --config " + mirror + " --out " + s.path("c.csv"), s) == 0);
  CHECK(spectrum_stats(s.read("c.csv")).second < 1e-12);
  CHECK_FALSE(fs::exists(s.path("c.csv.tmp")));
}

TEST_CASE("config errors") {
  Scratch s;
  const auto bad = s.write("bad.cfg", "gamma = 1\ncolour = blue\n");
  CHECK(run("spectrum --config " + bad, s) == 2);
  CHECK(s.read("stderr.txt").find("bad.cfg:2") != std::string::npos);
  CHECK(run("spectrum --config " + s.path("missing.cfg"), s) == 2);
  CHECK(run("spectrum --config " + s.write("neg.cfg", "kappa_wg = -1\n"), s) == 2);
  CHECK(run("frobnicate", s) == 2);
}

TEST_CASE("compile and run") {
  Scratch s;
  const auto ideal = s.write("ideal.cfg", kIdeal);
  const auto path4 = s.write("path4.json", R"({"n": 4, "edges": [[0,1],[1,2],[2,3]]})");
  REQUIRE(run("compile --graph " + path4 + " --strategy two-atom --out " + s.path("sched.json"), s) == 0);
  const auto sched = nlohmann::json::parse(s.read("sched.json"));
  int carves = 0;
  for (const auto& step : sched.at("steps")) carves += step.at("op") == "carve";
  CHECK(carves == 6);

  const auto square = s.write("square.json", R"({"n": 4, "edges": [[0,1],[1,2],[2,3],[3,0]]})");
  REQUIRE(run("run --graph " + square + " --config " + ideal + " --out " + s.path("sq.json"), s) == 0);
  const auto sq = nlohmann::json::parse(s.read("sq.json"));
  CHECK(sq.at("fidelity").get<double>() >= 1.0 - 1e-10);
  CHECK(sq.at("probability").get<double>() == doctest::Approx(0.125).epsilon(1e-14));

  const auto pair = s.write("pair.json", R"({"n": 2, "edges": [[0,1]]})");
  REQUIRE(run("run --graph " + pair + " --config " + ideal + " --out " + s.path("pair_out.json"), s) == 0);
  CHECK(nlohmann::json::parse(s.read("pair_out.json")).at("probability").get<double>() ==
        doctest::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("compiled schedule replays bit-exactly") {
  Scratch s;
  const auto cfg = s.write("c.cfg", "cooperativity = 7\nkappa_wg = 170\nkappa_sc = 230\njitter = 0.1\nseed = 4\n");
  const auto grid = s.write("grid.json", R"({"n": 6, "edges": [[0,1],[1,2],[3,4],[4,5],[0,3],[1,4],[2,5]]})");
  REQUIRE(run("compile --graph " + grid + " --out " + s.path("sched.json"), s) == 0);
  REQUIRE(run("run --schedule " + s.path("sched.json") + " --config " + cfg + " --out " + s.path("a.json"), s) == 0);
  REQUIRE(run("run --graph " + grid + " --config " + cfg + " --out " + s.path("b.json"), s) == 0);
  CHECK(s.read("a.json") == s.read("b.json"));
  CHECK(nlohmann::json::parse(s.read("a.json")).at("seed") == 4);
}

TEST_CASE("exit codes") {
  Scratch s;
  const auto square = s.write("square.json", R"({"n": 4, "edges": [[0,1],[1,2],[2,3],[3,0]]})");
  CHECK(run("run --graph " + square + " --strategy multi-atom", s) == 5);
  CHECK(run("run --graph " + s.write("g.json", R"({"n": 2, "edges": [[0,1]], "weight": 2})"), s) == 2);
  CHECK(run("run --graph " + s.write("bad.json", "{not json"), s) == 2);

  std::string edges;
  for (int i = 0; i < 16; ++i) edges += (i ? "," : "") + std::string("[") + std::to_string(i) + "," + std::to_string(i + 1) + "]";
  CHECK(run("run --graph " + s.write("big.json", R"({"n": 17, "edges": [)" + edges + "]}"), s) == 4);

  // r = 0 for every configuration leaves nothing to herald.
  const auto dark = s.write("dark.cfg", "model = table\nr_table = 0\n");
  CHECK(run("run --graph " + s.write("p.json", R"({"n": 2, "edges": [[0,1]]})") + " --config " + dark, s) == 3);
  CHECK(run("run --graph " + square + " --schedule " + square, s) == 2);
}

TEST_CASE("sweep and validate") {
  Scratch s;
  const auto spec = s.write("spec.json", R"({"graphs": {"family": "path", "n_min": 2, "n_max": 4}, "n_photons": [1, 2]})");
  REQUIRE(run("sweep --spec " + spec + " --out " + s.path("a.csv"), s) == 0);
  REQUIRE(run("sweep --spec " + spec + " --out " + s.path("b.csv"), s) == 0);
  CHECK(s.read("a.csv") == s.read("b.csv"));
  CHECK(s.read("a.csv").rfind("# graphcarve sweep csv v1", 0) == 0);
  REQUIRE(run("sweep --spec " + spec + " --format json --np 3 --out " + s.path("c.json"), s) == 0);
  const auto rows = nlohmann::json::parse(s.read("c.json"));
  CHECK(rows.size() == 3u);
  CHECK(run("validate --max-vertices 4 > " + s.path("v.txt"), s) == 0);
  CHECK(s.read("v.txt").find("all checks passed") != std::string::npos);
}
