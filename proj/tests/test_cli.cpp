#include <doctest.h>

#include <array>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

#include "selinf/rng.hpp"

namespace {

struct RunResult {
  int exit_code;
  std::string stdout_text;
};

RunResult run(const std::string& args) {
  const std::string cmd = std::string(SELINF_CLI_PATH) + " " + args + " 2>/dev/null";
  std::array<char, 4096> buffer{};
  std::string output;
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  while (std::size_t got = fread(buffer.data(), 1, buffer.size(), pipe)) output.append(buffer.data(), got);
  const int raw = pclose(pipe);
  return {WIFEXITED(raw) ? WEXITSTATUS(raw) : -1, output};
}

std::string write_synthetic_csv(const std::string& path, unsigned seed) {
  selinf::Rng rng(seed);
  std::ofstream out(path);
  out << "y,g1,g2,g3,g4,g5\n";
  out.precision(15);
  for (int i = 0; i < 80; ++i) {
    double x[5];
    for (double& v : x) v = rng.normal();
    const double y = 3.5 * x[0] - 2.5 * x[2] + 0.8 * rng.normal();
    out << y;
    for (double v : x) out << ',' << v;
    out << '\n';
  }
  return path;
}

}  // namespace

TEST_CASE("infer subcommand is deterministic and reports selections") {
  const std::string csv = write_synthetic_csv("/tmp/selinf_cli_test.csv", 4);
  const std::string args = "infer --csv " + csv + " --response y --seed 11";
  RunResult a = run(args);
  REQUIRE(a.exit_code == 0);
  CHECK(a.stdout_text.find("\"selected\"") != std::string::npos);
  CHECK(a.stdout_text.find("g1") != std::string::npos);

  RunResult b = run(args);
  CHECK(a.stdout_text == b.stdout_text);
}

TEST_CASE("usage errors exit with 64") {
  CHECK(run("infer --csv /nonexistent.csv --response y").exit_code == 64);
  CHECK(run("nonsense-subcommand").exit_code == 64);
  const std::string csv = write_synthetic_csv("/tmp/selinf_cli_test2.csv", 9);
  CHECK(run("infer --csv " + csv + " --response missing_column").exit_code == 64);
  CHECK(run("pivot-check --beta 0 --draws -5").exit_code == 64);
}

TEST_CASE("empty selection exits with 2") {
  const std::string csv = write_synthetic_csv("/tmp/selinf_cli_test3.csv", 14);
  RunResult r = run("infer --csv " + csv + " --response y --lambda 1e9");
  CHECK(r.exit_code == 2);
}

TEST_CASE("malformed csv rejected") {
  {
    std::ofstream out("/tmp/selinf_cli_bad.csv");
    out << "y,x1\n1.0,2.0\n3.0,nan\n";
  }
  CHECK(run("infer --csv /tmp/selinf_cli_bad.csv --response y").exit_code == 64);
  {
    std::ofstream out("/tmp/selinf_cli_bad2.csv");
    out << "y,x1\n1.0,2.0\n3.0\n";
  }
  CHECK(run("infer --csv /tmp/selinf_cli_bad2.csv --response y").exit_code == 64);
}

TEST_CASE("pivot-check emits KS verdict and deterministic bytes") {
  RunResult a = run("pivot-check --beta 1.5 --draws 3000 --seed 21 --out /tmp/selinf_ecdf.csv");
  REQUIRE(a.exit_code == 0);
  CHECK(a.stdout_text.find("ks_statistic") != std::string::npos);
  std::ifstream ecdf("/tmp/selinf_ecdf.csv");
  std::string header;
  std::getline(ecdf, header);
  CHECK(header == "pivot,ecdf");

  RunResult b = run("pivot-check --beta 1.5 --draws 3000 --seed 21");
  CHECK(a.stdout_text == b.stdout_text);
}

TEST_CASE("simulate writes summary files deterministically") {
  const std::string prefix = "/tmp/selinf_sim_test";
  const std::string args =
      "simulate --n 60 --p 8 --reps 5 --seed 3 --snr 1.22 --out-prefix " + prefix;
  RunResult a = run(args);
  REQUIRE(a.exit_code == 0);

  auto slurp = [](const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::stringstream buf;
    buf << in.rdbuf();
    return buf.str();
  };
  const std::string json1 = slurp(prefix + ".json");
  const std::string csv1 = slurp(prefix + ".csv");
  CHECK(json1.find("coverage_mle") != std::string::npos);
  CHECK(csv1.rfind("snr,metric", 0) == 0);

  RunResult b = run(args);
  REQUIRE(b.exit_code == 0);
  CHECK(slurp(prefix + ".json") == json1);
  CHECK(slurp(prefix + ".csv") == csv1);
}
