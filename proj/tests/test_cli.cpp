// End-to-end checks of the installed command-line binary.  The test runner
// exports QBRANCH_CLI with the path to the built executable.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <cstdlib>
#include <sstream>
#include <string>

#include "doctest.h"
#include "json.hpp"
#include "proc_util.hpp"
#include "qbranch/rabi.hpp"
#include "qbranch/trace_io.hpp"

namespace {

std::string cli_path() {
  const char* p = std::getenv("QBRANCH_CLI");
  REQUIRE_MESSAGE(p != nullptr, "QBRANCH_CLI must point at the built binary");
  return std::string(p);
}

int count_lines(const std::string& text) {
  int n = 0;
  for (char c : text) {
    if (c == '\n') ++n;
  }
  return n;
}

}  // namespace

TEST_CASE("splitter closed statistics as csv") {
  CmdResult res =
      run_cmd(cli_path() + " splitter --n 3 --r 0.5 --method closed --format csv");
  CHECK(res.exit_code == 0);
  CHECK(res.output ==
        "method,mean_r,mean_t,mean_rt,var_r,var_t,cov_rt\n"
        "closed,1.5,1.5,1.5,0.75,0.75,-0.75\n");
}

TEST_CASE("splitter json carries the derived channels and statistics") {
  CmdResult res = run_cmd(cli_path() +
                          " splitter --n 5 --r 0.5 --eps-r 0.1 --eps-t 0.2"
                          " --method multinomial --format json");
  REQUIRE(res.exit_code == 0);
  nlohmann::json doc = nlohmann::json::parse(res.output);
  CHECK(doc["params"]["n"] == 5);
  CHECK(doc["params"]["r"] == 0.5);
  CHECK(doc["params"]["convention"] == "all");
  CHECK(doc["params"]["channels"]["r_eff"].get<double>() ==
        doctest::Approx(0.45).epsilon(1e-12));
  CHECK(doc["params"]["channels"]["t_eff"].get<double>() ==
        doctest::Approx(0.40).epsilon(1e-12));
  CHECK(doc["params"]["channels"]["loss"].get<double>() ==
        doctest::Approx(0.15).epsilon(1e-12));
  REQUIRE(doc["results"].size() == 1);
  CHECK(doc["results"][0]["method"] == "multinomial");
  CHECK(doc["results"][0]["var_r"].get<double>() ==
        doctest::Approx(1.2375).epsilon(1e-12));
  CHECK(doc["results"][0]["var_t"].get<double>() ==
        doctest::Approx(1.20).epsilon(1e-12));
}

TEST_CASE("trace output round-trips through the csv reader") {
  CmdResult res = run_cmd(cli_path() +
                          " rabi-trace --model closed --omega 1 --t-max 6.0"
                          " --samples 40");
  REQUIRE(res.exit_code == 0);
  std::istringstream body(res.output);
  qbranch::ProbabilityTrace tr = qbranch::read_trace_csv(body);
  REQUIRE(tr.samples.size() == 40);
  CHECK(tr.samples.front().first == 0.0);
  CHECK(tr.samples.back().first == 6.0);
  // %.17g columns reproduce the doubles bit for bit.
  for (const auto& [t, pg] : tr.samples) {
    CHECK(pg == qbranch::closed_pg(1.0, t));
  }
}

TEST_CASE("trace file output equals its own rewrite") {
  std::string dir = make_scratch_dir();
  std::string file = dir + "/trace.csv";
  CmdResult res = run_cmd(cli_path() +
                          " rabi-trace --model indist --omega 1 --dt 0.7"
                          " --beta 0.995 --t-max 20 --samples 60 --out " + file);
  REQUIRE(res.exit_code == 0);
  CHECK(res.output.empty());
  std::string original = read_file(file);
  qbranch::ProbabilityTrace tr = qbranch::read_trace_csv_file(file);
  std::ostringstream rewritten;
  qbranch::write_trace_csv(rewritten, tr);
  CHECK(rewritten.str() == original);
}

TEST_CASE("fit recovers the quadratic-law rate from a trace file") {
  std::string dir = make_scratch_dir();
  std::string file = dir + "/approx.csv";
  CmdResult gen = run_cmd(cli_path() +
                          " rabi-trace --model approx --omega 1 --dt 0.02"
                          " --beta 0.99 --t-max 1000 --samples 1500 --out " +
                          file);
  REQUIRE(gen.exit_code == 0);
  CmdResult fit = run_cmd(cli_path() + " fit --input " + file + " --omega 1");
  REQUIRE(fit.exit_code == 0);
  nlohmann::json doc = nlohmann::json::parse(fit.output);
  CHECK(doc["converged"] == true);
  double gamma = doc["gamma"].get<double>();
  CHECK(gamma > 0.9 * 4.0e-4);
  CHECK(gamma < 1.1 * 4.0e-4);
  CHECK(doc["params"]["samples_used"] == 1500);
}

TEST_CASE("fit on an undamped trace reports no convergence") {
  std::string dir = make_scratch_dir();
  std::string file = dir + "/flat.csv";
  std::string body = "t,p_g,p_e\n";
  for (int i = 0; i < 12; ++i) {
    body += std::to_string(i) + ".0,0.5,0.5\n";
  }
  write_file(file, body);
  CmdResult fit = run_cmd(cli_path() + " fit --input " + file + " --omega 1");
  CHECK(fit.exit_code == 4);
  nlohmann::json doc = nlohmann::json::parse(fit.output);
  CHECK(doc["converged"] == false);
}

TEST_CASE("malformed trace input is a usage error") {
  std::string dir = make_scratch_dir();
  std::string file = dir + "/bad.csv";
  write_file(file, "t,p_g,p_e\n0.0,abc,0.5\n");
  CmdResult fit = run_cmd(cli_path() + " fit --input " + file +
                          " --omega 1 2>/dev/null");
  CHECK(fit.exit_code == 2);
  write_file(file, "time,ground,excited\n0.0,0.5,0.5\n");
  CmdResult fit2 = run_cmd(cli_path() + " fit --input " + file +
                           " --omega 1 2>/dev/null");
  CHECK(fit2.exit_code == 2);
}

TEST_CASE("usage errors exit with code 2") {
  std::string quiet = " 2>/dev/null";
  // indist needs --beta and --dt.
  CHECK(run_cmd(cli_path() +
                " rabi-trace --model indist --omega 1 --t-max 5 --samples 10" +
                quiet).exit_code == 2);
  // --eta belongs to the record-keeping model only.
  CHECK(run_cmd(cli_path() +
                " rabi-trace --model indist --omega 1 --dt 0.7 --beta 0.9"
                " --eta 0.5 --t-max 5 --samples 10" + quiet).exit_code == 2);
  CHECK(run_cmd(cli_path() + " splitter --n 3 --r 0.5 --bogus 1" + quiet)
            .exit_code == 2);
  CHECK(run_cmd(cli_path() + quiet).exit_code == 2);
}

TEST_CASE("oversized enumeration exits with the resource code") {
  CmdResult res = run_cmd(cli_path() +
                          " splitter --n 20 --r 0.5 --method enumerate"
                          " 2>/dev/null");
  CHECK(res.exit_code == 3);
}

TEST_CASE("ladder sweep csv lists one row per level plus the exponent") {
  CmdResult res = run_cmd(cli_path() +
                          " eid --omega0 1 --dt 1.0105 --beta 0.995"
                          " --levels 0..2 --samples-per-period 40");
  REQUIRE(res.exit_code == 0);
  CHECK(res.output.rfind("level,omega_n,gamma_n,ratio\n", 0) == 0);
  CHECK(count_lines(res.output) == 6);  // header + 3 levels + 2 comment lines
  CHECK(res.output.find("\n0,") != std::string::npos);
  CHECK(res.output.find(",1\n") != std::string::npos);  // level-0 ratio
  CHECK(res.output.find("# exponent = ") != std::string::npos);
  CHECK(res.output.find("# exponent_stderr = ") != std::string::npos);
}

TEST_CASE("ladder sweep pinned at the search bound reports no convergence") {
  // At beta = 0.1 with one radian per node the decay rate (~0.29) exceeds the
  // level-0 frequency that caps the search, so the fit jams against the upper
  // bound instead of converging.
  CmdResult res = run_cmd(cli_path() +
                          " eid --omega0 1 --dt 5.0525 --beta 0.1 --levels 0"
                          " --samples-per-period 40 2>/dev/null");
  CHECK(res.exit_code == 4);
}

TEST_CASE("single-level ladder sweep leaves the exponent null") {
  CmdResult res = run_cmd(cli_path() +
                          " eid --omega0 1 --dt 1.0105 --beta 0.995 --levels 0"
                          " --samples-per-period 20 --format json 2>/dev/null");
  REQUIRE(res.exit_code == 0);
  nlohmann::json doc = nlohmann::json::parse(res.output);
  REQUIRE(doc["levels"].size() == 1);
  CHECK(doc["levels"][0]["converged"] == true);
  CHECK(doc["levels"][0]["ratio"] == 1.0);
  CHECK(doc["exponent"].is_null());
  // The warning lands on stderr, away from the parseable payload.
  CmdResult noisy = run_cmd(cli_path() +
                            " eid --omega0 1 --dt 1.0105 --beta 0.995"
                            " --levels 0 --samples-per-period 20"
                            " --format json 2>&1");
  CHECK(noisy.output.find("warning:") != std::string::npos);
}

TEST_CASE("verify subcommand passes and fails on demand") {
  CmdResult ok = run_cmd(cli_path() + " verify --quick");
  CHECK(ok.exit_code == 0);
  CHECK(ok.output.find("[pass] splitter route agreement") != std::string::npos);
  CHECK(ok.output.find("verification passed") != std::string::npos);
  CmdResult bad = run_cmd(cli_path() + " verify --quick --inject-perturbation");
  CHECK(bad.exit_code == 1);
  CHECK(bad.output.find("[FAIL] splitter route agreement") != std::string::npos);
  CHECK(bad.output.find("verification FAILED") != std::string::npos);
}

TEST_CASE("config files fill in flags without overriding them") {
  std::string dir = make_scratch_dir();
  std::string cfg = dir + "/trace.json";
  write_file(cfg,
             "{\"model\": \"closed\", \"omega\": 1, \"t-max\": 6.0,"
             " \"samples\": 40}\n");
  CmdResult from_cfg = run_cmd(cli_path() + " rabi-trace --config " + cfg);
  CmdResult from_flags = run_cmd(cli_path() +
                                 " rabi-trace --model closed --omega 1"
                                 " --t-max 6.0 --samples 40");
  REQUIRE(from_cfg.exit_code == 0);
  REQUIRE(from_flags.exit_code == 0);
  CHECK(from_cfg.output == from_flags.output);
  // An explicit flag beats the config value.
  CmdResult forced = run_cmd(cli_path() + " rabi-trace --config " + cfg +
                             " --samples 50");
  REQUIRE(forced.exit_code == 0);
  std::istringstream body(forced.output);
  qbranch::ProbabilityTrace tr = qbranch::read_trace_csv(body);
  CHECK(tr.samples.size() == 50);
}

TEST_CASE("repeated runs emit identical bytes") {
  std::string cmd = cli_path() +
                    " rabi-trace --model indist --omega 1 --dt 0.7"
                    " --beta 0.995 --t-max 30 --samples 120";
  CmdResult first = run_cmd(cmd);
  CmdResult second = run_cmd(cmd);
  REQUIRE(first.exit_code == 0);
  REQUIRE(second.exit_code == 0);
  CHECK(first.output == second.output);
  std::string sp = cli_path() +
                   " splitter --n 8 --r 0.3 --eps-r 0.05 --eps-t 0.1"
                   " --format json";
  CmdResult sp1 = run_cmd(sp);
  CmdResult sp2 = run_cmd(sp);
  REQUIRE(sp1.exit_code == 0);
  CHECK(sp1.output == sp2.output);
}
