#include <catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "conelab/runner.hpp"

using namespace conelab;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("conelab_test_" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::vector<std::vector<std::string>> read_csv(const fs::path& p) {
  std::ifstream in(p);
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    rows.push_back(cells);
  }
  return rows;
}

Scenario shipped(const std::string& name) { return parse_scenario(std::string(CONELAB_SCENARIO_DIR) + "/" + name); }

}  // namespace

TEST_CASE("bands on the degenerate n = 6 scenario", "[runner]") {
  const auto out = scratch("bands");
  std::ostringstream err;
  REQUIRE(run("bands", shipped("bands_degenerate_n6.ini"), {out, 2, true}, err) == 0);
  const auto rows = read_csv(out / "bands.csv");
  REQUIRE(rows.size() == 1 + 64 * 64);
  REQUIRE(rows[0].size() == 8);
  CHECK(rows[0][7] == "E_6");
  double best = 1e300;
  std::vector<std::pair<double, double>> where;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const double e = std::abs(std::stod(rows[i][5]));
    if (e < best - 1e-12) {
      best = e;
      where.clear();
    }
    if (e < best + 1e-12) where.emplace_back(std::stod(rows[i][0]), std::stod(rows[i][1]));
  }
  REQUIRE(where.size() == 4);
  for (auto [kx, ky] : where) {
    CHECK(std::abs(std::abs(kx) - kPi / 2) < 1e-12);
    CHECK(std::abs(std::abs(ky) - kPi / 2) < 1e-12);
  }
  CHECK(fs::exists(out / "plot.gp"));
  const auto manifest = nlohmann::json::parse(slurp(out / "manifest.json"));
  CHECK(manifest["tool"] == "conelab");
  CHECK(manifest["version"] == std::string(kVersion));
  CHECK(manifest["subcommand"] == "bands");
  CHECK(manifest["wall_time_seconds"].get<double>() >= 0.0);
  CHECK(manifest["scenario"]["model"]["rho"].size() == 5);
}

TEST_CASE("oscillate trace columns satisfy unitarity", "[runner]") {
  const auto out = scratch("osc");
  REQUIRE(run("oscillate", shipped("mixing_oscillate.ini"), {out, 1, false}) == 0);
  const auto rows = read_csv(out / "trace.csv");
  REQUIRE(rows.size() == 202);
  CHECK(rows[0][2] == "P_e_e");
  CHECK(rows[0].back() == "P_e_mu_continuum");
  for (std::size_t i = 1; i < rows.size(); ++i)
    for (int a = 0; a < 3; ++a) {
      double sum = 0;
      for (int b = 0; b < 3; ++b) sum += std::stod(rows[i][2 + 3 * a + b]);
      CHECK(std::abs(sum - 1.0) < 1e-10);
    }
}

TEST_CASE("dispersion N = 3 gives exponent near 3", "[runner]") {
  const auto out = scratch("disp");
  REQUIRE(run("dispersion", shipped("dispersion_n3.ini"), {out, 1, false}) == 0);
  const auto j = nlohmann::json::parse(slurp(out / "dispersion.json"));
  CHECK(std::abs(j["exponent"].get<double>() - 3.0) < 0.05);
  CHECK(j["N"] == 3);
  CHECK(j["window"].size() == 2);
  CHECK(j["r_squared"].get<double>() > 0.999);
}

TEST_CASE("dirac run reports charges and analytic positions", "[runner]") {
  const auto out = scratch("dirac");
  REQUIRE(run("dirac", shipped("dirac_su2_n6.ini"), {out, 2, false}) == 0);
  const auto rows = read_csv(out / "dirac_points.csv");
  REQUIRE(rows.size() == 5);
  int sum = 0;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    CHECK(std::abs(std::stoi(rows[i][3])) == 3);
    sum += std::stoi(rows[i][3]);
  }
  CHECK(sum == 0);
}

TEST_CASE("manifest round-trip reproduces the data files", "[runner][determinism]") {
  const auto a = scratch("rt_a"), b = scratch("rt_b");
  REQUIRE(run("sweep-delta", shipped("mixing_sweep_delta.ini"), {a, 3, false}) == 0);
  const Scenario again = scenario_from_manifest(a / "manifest.json");
  REQUIRE(run("sweep-delta", again, {b, 1, false}) == 0);
  CHECK(slurp(a / "sweep_delta.csv") == slurp(b / "sweep_delta.csv"));
}

TEST_CASE("exit codes", "[runner][errors]") {
  std::ostringstream err;
  const auto out = scratch("codes");
  CHECK(run("bands", shipped("mixing_oscillate.ini"), {out, 1, false}, err) == 1);
  CHECK(err.str().rfind("conelab: error[validation]: ", 0) == 0);
  CHECK(run("frobnicate", shipped("bands_su2_n4.ini"), {out, 1, false}, err) == 1);
  auto s = shipped("bands_su2_n4.ini");
  s.run.subcommand.reset();
  CHECK(run("dispersion", s, {out, 1, false}, err) == 1);
  auto d = shipped("dispersion_n3.ini");
  d.ladder->p_max = 1.0;
  d.ladder->p_min = 0.5;
  CHECK(run("dispersion", d, {out, 1, false}, err) == 1);
  // numerical contract failure: the energy underflows
  d.ladder->species = 40;
  d.ladder->p_min = 1e-12;
  d.ladder->p_max = 1e-11;
  std::ostringstream err2;
  CHECK(run("dispersion", d, {out, 1, false}, err2) == 2);
  CHECK(err2.str().rfind("conelab: error[underflow]: ", 0) == 0);
}
