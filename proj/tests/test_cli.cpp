#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <sys/wait.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;

namespace {

struct CmdResult {
  int exit_code = -1;
  std::string output;  // stdout and stderr interleaved
};

std::string binary() {
  const char* bin = std::getenv("OUVOL_BIN");
  REQUIRE(bin != nullptr);
  return bin;
}

/// Fresh per-case scratch directory.
fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "ouvol_cli_tests" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << text;
  REQUIRE(out.good());
}

CmdResult run(const std::string& args, const fs::path& dir) {
  const fs::path log = dir / "cmd_output.txt";
  const std::string cmd = binary() + " " + args + " > " + log.string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  CmdResult res;
  res.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  res.output = read_file(log);
  return res;
}

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(text);
  while (std::getline(in, item, sep)) out.push_back(item);
  return out;
}

/// Extracts one named column of a CSV with a header line.
std::vector<double> csv_column(const std::string& text, const std::string& name) {
  const auto lines = split(text, '\n');
  REQUIRE(!lines.empty());
  const auto header = split(lines[0], ',');
  std::size_t col = header.size();
  for (std::size_t k = 0; k < header.size(); ++k) {
    if (header[k] == name) col = k;
  }
  REQUIRE(col < header.size());
  std::vector<double> out;
  for (std::size_t row = 1; row < lines.size(); ++row) {
    if (lines[row].empty()) continue;
    const auto fields = split(lines[row], ',');
    REQUIRE(fields.size() == header.size());
    out.push_back(std::stod(fields[col]));
  }
  return out;
}

}  // namespace

TEST_CASE("solve writes deterministic artifacts and matches the closed form") {
  const fs::path dir = scratch("solve");
  write_file(dir / "run.cfg",
             "market.preset = merton-constant\n"
             "grid.M = 800\n"
             "grid.J = 60\n");

  const CmdResult first =
      run("solve --config " + (dir / "run.cfg").string() + " --out " + (dir / "a").string(), dir);
  CHECK(first.exit_code == 0);
  CHECK(first.output.find("solve: wrote") != std::string::npos);
  REQUIRE(fs::exists(dir / "a" / "surface.csv"));
  REQUIRE(fs::exists(dir / "a" / "consumption.csv"));
  REQUIRE(fs::exists(dir / "a" / "figure1.svg"));

  const std::string surface = read_file(dir / "a" / "surface.csv");
  const auto t = csv_column(surface, "t");
  const auto f = csv_column(surface, "f");
  const auto c = csv_column(read_file(dir / "a" / "consumption.csv"), "consumption_rate");
  REQUIRE(t.size() == 801 * 60);
  const double closed = std::sqrt(26.0 * std::exp(0.04) - 25.0);
  for (std::size_t k = 0; k < t.size(); ++k) {
    if (t[k] == 0.0) CHECK(std::abs(f[k] - closed) / closed <= 1e-4);
    if (t[k] == 1.0) {
      CHECK(f[k] == 1.0);
      CHECK(c[k] == 1.0);
    }
  }
  CHECK(read_file(dir / "a" / "figure1.svg").find("<svg") != std::string::npos);

  const CmdResult second =
      run("solve --config " + (dir / "run.cfg").string() + " --out " + (dir / "b").string(), dir);
  CHECK(second.exit_code == 0);
  CHECK(read_file(dir / "b" / "surface.csv") == surface);
  CHECK(read_file(dir / "b" / "consumption.csv") == read_file(dir / "a" / "consumption.csv"));
}

TEST_CASE("precondition failures report the offending key and exit 1") {
  const fs::path dir = scratch("precondition");

  const CmdResult unknown = run("solve --preset who-knows --out " + (dir / "o").string(), dir);
  CHECK(unknown.exit_code == 1);
  CHECK(unknown.output.find("market.preset") != std::string::npos);

  write_file(dir / "cfl.cfg",
             "market.preset = bns-example\n"
             "grid.M = 10\n");
  const CmdResult cfl =
      run("solve --config " + (dir / "cfl.cfg").string() + " --out " + (dir / "o").string(), dir);
  CHECK(cfl.exit_code == 1);
  CHECK(cfl.output.find("grid.M") != std::string::npos);

  write_file(dir / "heavy.cfg",
             "market.preset = bns-example\n"
             "subordinator.jump_rate = 1.0\n");
  const CmdResult heavy =
      run("solve --config " + (dir / "heavy.cfg").string() + " --out " + (dir / "o").string(), dir);
  CHECK(heavy.exit_code == 1);
  CHECK(heavy.output.find("subordinator.jump_rate") != std::string::npos);

  const CmdResult bare = run("solve", dir);
  CHECK(bare.exit_code == 1);
  CHECK(bare.output.find("config error") != std::string::npos);

  const CmdResult no_sub = run("", dir);
  CHECK(no_sub.exit_code != 0);
}

TEST_CASE("verify passes on both presets with default budgets") {
  const fs::path dir = scratch("verify");
  for (const std::string preset : {"merton-constant", "bns-example"}) {
    const fs::path out = dir / preset;
    const CmdResult res = run("verify --preset " + preset + " --out " + out.string(), dir);
    CHECK(res.exit_code == 0);
    CHECK(res.output.find("verify: all checks passed") != std::string::npos);
    CHECK(res.output.find("[FAIL]") == std::string::npos);

    const std::string report = read_file(out / "verify.csv");
    for (const char* name : {"condition_b_margin", "cfl", "envelope_max_rel_breach", "min_f",
                             "derivative_bound_fraction", "residual_max_ratio",
                             "contraction_max_ratio", "jensen_gap_sigma"}) {
      CHECK(report.find(name) != std::string::npos);
    }
    const auto passed = csv_column(report, "passed");
    REQUIRE(!passed.empty());
    for (double p : passed) CHECK(p == 1.0);
    CHECK(fs::exists(out / "probes.csv"));
  }
  // The constant-coefficient preset also checks the closed form directly.
  CHECK(read_file(dir / "merton-constant" / "verify.csv").find("closed_form_rel_error") !=
        std::string::npos);
}

TEST_CASE("an injected fault fails verification with exit 2") {
  const fs::path dir = scratch("inject");
  const CmdResult res = run("verify --preset merton-constant --inject-scale 0.5 --out " +
                                (dir / "o").string(),
                            dir);
  CHECK(res.exit_code == 2);
  CHECK(res.output.find("[FAIL] min_f") != std::string::npos);
  CHECK(res.output.find("verify: checks failed") != std::string::npos);
  const std::string report = read_file(dir / "o" / "verify.csv");
  const auto passed = csv_column(report, "passed");
  CHECK(std::count(passed.begin(), passed.end(), 0.0) >= 2);
}

TEST_CASE("scenario jumps are echoed and produce a consumption discontinuity") {
  const fs::path dir = scratch("scenario");
  write_file(dir / "scenario.csv", "tau,z\n0.05,0.12\n0.65,0.07\n");
  const CmdResult res = run("simulate --preset bns-example --scenario " +
                                (dir / "scenario.csv").string() + " --out " + (dir / "o").string(),
                            dir);
  CHECK(res.exit_code == 0);
  CHECK(res.output.find("2 factor jumps") != std::string::npos);

  const std::string jumps = read_file(dir / "o" / "jumps.csv");
  const auto tau = csv_column(jumps, "tau");
  const auto z = csv_column(jumps, "z");
  REQUIRE(tau.size() == 2);
  CHECK(tau[0] == 0.05);
  CHECK(z[0] == 0.12);
  CHECK(tau[1] == 0.65);
  CHECK(z[1] == 0.07);

  // Default 2000 simulation steps put the jumps exactly on nodes 100 and 1300.
  const auto rho = csv_column(read_file(dir / "o" / "path.csv"), "c_over_X");
  REQUIRE(rho.size() == 2001);
  double elsewhere = 0.0;
  for (std::size_t k = 0; k + 1 < rho.size(); ++k) {
    if (k == 100 || k == 1300) continue;
    elsewhere = std::max(elsewhere, std::abs(rho[k + 1] - rho[k]));
  }
  CHECK(std::abs(rho[101] - rho[100]) >= 5.0 * elsewhere);
  CHECK(fs::exists(dir / "o" / "figure2.svg"));
}

TEST_CASE("log utility consumes the deterministic fraction") {
  const fs::path dir = scratch("logutil");
  const CmdResult res = run("simulate --preset bns-example --utility log --seed 3 --out " +
                                (dir / "o").string(),
                            dir);
  CHECK(res.exit_code == 0);
  const std::string path = read_file(dir / "o" / "path.csv");
  const auto t = csv_column(path, "t");
  const auto rho = csv_column(path, "c_over_X");
  REQUIRE(t.size() == 2001);
  for (std::size_t k = 0; k < t.size(); ++k) {
    CHECK(std::abs(rho[k] - 1.0 / (2.0 - t[k])) <= 1e-12);
  }
}

TEST_CASE("the frozen-factor benchmark coincides for constant coefficients") {
  const fs::path dir = scratch("benchmark");
  write_file(dir / "run.cfg",
             "market.preset = merton-constant\n"
             "grid.M = 80000\n"
             "grid.J = 50\n");
  const CmdResult res = run("simulate --config " + (dir / "run.cfg").string() +
                                " --compare-constant-vol --out " + (dir / "o").string(),
                            dir);
  CHECK(res.exit_code == 0);

  const auto rho = csv_column(read_file(dir / "o" / "path.csv"), "c_over_X");
  const auto bench = csv_column(read_file(dir / "o" / "path_constant_vol.csv"), "c_over_X");
  REQUIRE(rho.size() == bench.size());
  double worst = 0.0;
  for (std::size_t k = 0; k < rho.size(); ++k) {
    worst = std::max(worst, std::abs(rho[k] - bench[k]));
  }
  CHECK(worst <= 1e-6);
  const std::string svg = read_file(dir / "o" / "figure2.svg");
  CHECK(svg.find("constant volatility") != std::string::npos);
}

TEST_CASE("identical seeds replay identical paths") {
  const fs::path dir = scratch("seeds");
  const CmdResult a =
      run("simulate --preset bns-example --seed 7 --out " + (dir / "a").string(), dir);
  const CmdResult b =
      run("simulate --preset bns-example --seed 7 --out " + (dir / "b").string(), dir);
  const CmdResult c =
      run("simulate --preset bns-example --seed 8 --out " + (dir / "c").string(), dir);
  CHECK(a.exit_code == 0);
  CHECK(b.exit_code == 0);
  CHECK(c.exit_code == 0);
  CHECK(read_file(dir / "a" / "path.csv") == read_file(dir / "b" / "path.csv"));
  CHECK(read_file(dir / "a" / "path.csv") != read_file(dir / "c" / "path.csv"));
}

TEST_CASE("transform table and derived constants are scriptable") {
  const fs::path dir = scratch("tables");

  const CmdResult laplace = run("laplace --preset bns-example --out " + (dir / "o").string(), dir);
  CHECK(laplace.exit_code == 0);
  CHECK(laplace.output.find("w,psi") != std::string::npos);
  // psi(14.25) = 0.5 * 14.25 / 0.75 = 9.5 for the preset subordinator.
  CHECK(laplace.output.find("14.25,9.5") != std::string::npos);
  CHECK(laplace.output.find("passed") != std::string::npos);

  const CmdResult null_case =
      run("laplace --preset merton-constant --out " + (dir / "o").string(), dir);
  CHECK(null_case.exit_code == 0);
  CHECK(null_case.output.find("family null") != std::string::npos);
  CHECK(null_case.output.find("mean rate 0") != std::string::npos);

  const CmdResult consts = run("constants --preset bns-example --out " + (dir / "o").string(), dir);
  CHECK(consts.exit_code == 0);
  CHECK(consts.output.find("b_prime = 1.6875") != std::string::npos);
  CHECK(consts.output.find("alpha = 1.8355633802816902") != std::string::npos);
  CHECK(consts.output.find("contraction_modulus = 0.42857142857142855") != std::string::npos);
  CHECK(consts.output.find("envelope_coefficient = 3.9218106995884") != std::string::npos);
}
