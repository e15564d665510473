#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <sys/wait.h>

namespace fs = std::filesystem;

namespace {

struct RunResult {
  int exit_code = -1;
  std::string output;  // stdout and stderr interleaved
};

RunResult run_cli(const std::string& args, const std::string& env = "") {
  std::string cmd = env.empty() ? std::string() : env + " ";
  cmd += POISCHAOS_CLI_PATH;
  cmd += " " + args + " 2>&1";
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  RunResult r;
  char buf[4096];
  while (std::size_t n = std::fread(buf, 1, sizeof buf, pipe)) {
    r.output.append(buf, n);
  }
  const int status = pclose(pipe);
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string data_file(const std::string& name) {
  return (fs::path(POISCHAOS_DATA_DIR) / name).string();
}

fs::path fresh_dir(const std::string& name) {
  const fs::path d = fs::temp_directory_path() / "poischaos_cli" / name;
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

// Rows of a CSV body, comment and header lines skipped.
std::vector<std::vector<std::string>> csv_rows(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(text);
  std::string line;
  bool header_seen = false;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (!header_seen) {
      header_seen = true;  // first non-comment line is the column header
      continue;
    }
    rows.push_back(split_csv(line));
  }
  return rows;
}

}  // namespace

TEST_CASE("contract subcommand prints the scalar result") {
  const RunResult r = run_cli("algebra --op contract --r 1 --l 1 --f " +
                              data_file("sample_f.json") + " --g " +
                              data_file("sample_g.json"));
  CHECK(r.exit_code == 0);
  CHECK(r.output.find("11") != std::string::npos);
}

TEST_CASE("usage errors exit with code 2") {
  CHECK(run_cli("").exit_code == 2);
  CHECK(run_cli("algebra --no-such-flag").exit_code == 2);
  CHECK(run_cli("algebra --op warp").exit_code == 2);

  const RunResult missing =
      run_cli("algebra --op contract --f /nonexistent/k.json --g " +
              data_file("sample_g.json"));
  CHECK(missing.exit_code == 2);
  CHECK(missing.output.find("/nonexistent/k.json") != std::string::npos);
}

TEST_CASE("resource guards exit with code 3") {
  const RunResult r = run_cli("simulate --kernels " +
                              data_file("sample_f.json") +
                              " --reps 200000000 --out " +
                              fresh_dir("guard").string());
  CHECK(r.exit_code == 3);
  CHECK(r.output.find("guard") != std::string::npos);
}

TEST_CASE("version flag") {
  const RunResult r = run_cli("--version");
  CHECK(r.exit_code == 0);
  CHECK(r.output.find("0.1.0") != std::string::npos);
}

TEST_CASE("rate study output is byte-identical across runs and threads") {
  const fs::path d1 = fresh_dir("rates1");
  const fs::path d2 = fresh_dir("rates2");
  const fs::path d3 = fresh_dir("rates3");
  const std::string args = "rates --lambda 1 --lag 0 --ppu 1 --T 5,10 --out ";
  CHECK(run_cli(args + d1.string(), "OMP_NUM_THREADS=1").exit_code == 0);
  CHECK(run_cli(args + d2.string(), "OMP_NUM_THREADS=2").exit_code == 0);
  CHECK(run_cli(args + d3.string()).exit_code == 0);
  const std::string c1 = slurp(d1 / "rates.csv");
  CHECK(c1 == slurp(d2 / "rates.csv"));
  CHECK(c1 == slurp(d3 / "rates.csv"));
  CHECK(csv_rows(c1).size() == 2);
}

TEST_CASE("mark law is configurable and embedded in reports") {
  // Symmetric default marks have zero third moment, so the mixed
  // contraction column is identically zero and its slope prints as nan.
  const fs::path dsym = fresh_dir("marks_sym");
  const RunResult sym = run_cli(
      "rates --lambda 1 --lag 0 --ppu 1 --T 5,10 --out " + dsym.string());
  CHECK(sym.exit_code == 0);
  CHECK(sym.output.find("cross11 nan") != std::string::npos);

  const fs::path dskew = fresh_dir("marks_skew");
  const RunResult skew =
      run_cli("rates --lambda 1 --lag 0 --ppu 1 --T 5,10 "
              "--marks 3:0.5,-1:0.5 --out " +
              dskew.string());
  CHECK(skew.exit_code == 0);
  CHECK(skew.output.find("nan") == std::string::npos);
  const std::string csv = slurp(dskew / "rates.csv");
  CHECK(csv.find("marks = 3:0.5 -1:0.5") != std::string::npos);

  const RunResult bad = run_cli("rates --marks nonsense --out " +
                                fresh_dir("marks_bad").string());
  CHECK(bad.exit_code == 2);
  CHECK(bad.output.find("value:mass") != std::string::npos);
}

TEST_CASE("convergence checks agree with the rate table") {
  const fs::path dr = fresh_dir("xrates");
  const fs::path dc = fresh_dir("xclt");
  REQUIRE(run_cli("rates --lambda 1 --lag 0 --ppu 1 --T 5,10 --out " +
                  dr.string())
              .exit_code == 0);
  REQUIRE(run_cli("clt-check --lambda 1 --lag 0 --ppu 1 --T 5,10 --out " +
                  dc.string())
              .exit_code == 0);

  const auto rate_rows = csv_rows(slurp(dr / "rates.csv"));
  const auto clt_rows = csv_rows(slurp(dc / "clt_check.csv"));
  REQUIRE(rate_rows.size() == 2);
  REQUIRE(!clt_rows.empty());

  // Columns: T,cells,mean_l3,quad_l4,contract21,contract11,cross11,d3 and
  // T,cells,part,check,r,l,value. The same star-contraction norms must
  // print identically from both commands.
  for (const auto& rrow : rate_rows) {
    bool found21 = false, found11 = false;
    for (const auto& crow : clt_rows) {
      if (crow[0] != rrow[0] || crow[2] != "quad") continue;
      if (crow[3] != "contraction") continue;
      if (crow[4] == "2" && crow[5] == "1") {
        CHECK(crow[6] == rrow[4]);
        found21 = true;
      }
      if (crow[4] == "1" && crow[5] == "1") {
        CHECK(crow[6] == rrow[5]);
        found11 = true;
      }
    }
    CHECK(found21);
    CHECK(found11);
  }
}

TEST_CASE("ou-demo writes covariance and bound tables") {
  const fs::path d = fresh_dir("oudemo");
  const RunResult r = run_cli(
      "ou-demo --which Q --lambdas 1,4 --T 50 --ppu 1 --reps 0 --out " +
      d.string());
  CHECK(r.exit_code == 0);
  REQUIRE(fs::exists(d / "covariance.csv"));
  REQUIRE(fs::exists(d / "bound.csv"));
  const std::string cov = slurp(d / "covariance.csv");
  CHECK(cov.find("exact") != std::string::npos);
  CHECK(cov.find("limit") != std::string::npos);
  const std::string bound = slurp(d / "bound.csv");
  CHECK(bound.find("d3") != std::string::npos);
  CHECK(cov.find("# command") != std::string::npos);
}

TEST_CASE("simulation values are reproducible and seed-sensitive") {
  const fs::path d1 = fresh_dir("sim1");
  const fs::path d2 = fresh_dir("sim2");
  const fs::path d3 = fresh_dir("sim3");
  const std::string base = "simulate --kernels " + data_file("sample_f.json") +
                           " --reps 200 --seed 7 --out ";
  CHECK(run_cli(base + d1.string(), "OMP_NUM_THREADS=1").exit_code == 0);
  CHECK(run_cli(base + d2.string(), "OMP_NUM_THREADS=3").exit_code == 0);
  const std::string v1 = slurp(d1 / "values.csv");
  CHECK(v1 == slurp(d2 / "values.csv"));
  CHECK(slurp(d1 / "summary.csv") == slurp(d2 / "summary.csv"));
  CHECK(csv_rows(v1).size() == 200);

  const std::string reseeded = "simulate --kernels " +
                               data_file("sample_f.json") +
                               " --reps 200 --seed 8 --out ";
  CHECK(run_cli(reseeded + d3.string()).exit_code == 0);
  CHECK(v1 != slurp(d3 / "values.csv"));
}
