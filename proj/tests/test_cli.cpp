#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <array>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

using nlohmann::json;

namespace {

struct CommandResult {
  int exit_code = -1;
  std::string output;  // stdout + stderr
};

CommandResult run_cli(const std::string& args) {
  const std::string cmd = std::string(CHAINRISK_CLI_PATH) + " " + args + " 2>&1";
  std::array<char, 4096> buf{};
  std::string output;
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  while (fgets(buf.data(), buf.size(), pipe) != nullptr) output += buf.data();
  const int status = pclose(pipe);
  CommandResult result;
  result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  result.output = output;
  return result;
}

}  // namespace

TEST_CASE("bound subcommand emits a positive total") {
  const auto res = run_cli("bound --preset constrained-gaussian --n 1000");
  REQUIRE(res.exit_code == 0);
  const json j = json::parse(res.output);
  CHECK(j.at("total").get<double>() > 0.0);
  CHECK(j.at("terms").contains("moment_term"));
  CHECK(j.at("terms").contains("floor_term"));
}

TEST_CASE("usage errors exit with code 2") {
  CHECK(run_cli("bound").exit_code == 2);                       // missing config
  CHECK(run_cli("bound --preset constrained-gaussian --n 0").exit_code == 2);
  CHECK(run_cli("bound --preset nope --n 10").exit_code == 2);  // unknown preset
  CHECK(run_cli("bound --preset constrained-gaussian --n 10 --bogus-flag 1")
            .exit_code == 2);
  CHECK(run_cli("simulate --config /does/not/exist.json").exit_code == 2);
  CHECK(run_cli("verify --reps 0").exit_code == 2);
}

TEST_CASE("help screens document the flags") {
  const auto top = run_cli("--help");
  CHECK(top.exit_code == 0);
  for (const char* sub :
       {"bound", "simulate", "verify", "rates", "orlicz", "cover"})
    CHECK(top.output.find(sub) != std::string::npos);

  const std::map<std::string, std::vector<std::string>> expected = {
      {"bound", {"--preset", "--config", "--n", "--gamma", "--out"}},
      {"simulate",
       {"--preset", "--config", "--out", "--seed", "--trials", "--gamma",
        "--workers"}},
      {"verify", {"--reps", "--seed", "--gamma", "--workers"}},
      {"rates", {"--csv", "--out"}},
      {"orlicz", {"--dist", "--q", "--n", "--seed", "--tol", "--out"}},
      {"cover", {"--ball", "--eps", "--points", "--seed", "--out"}}};
  for (const auto& [sub, flags] : expected) {
    const auto help = run_cli(sub + " --help");
    CHECK(help.exit_code == 0);
    for (const auto& flag : flags)
      CHECK_MESSAGE(help.output.find(flag) != std::string::npos,
                    sub << " help missing " << flag);
  }
  const auto sim = run_cli("simulate --help");
  CHECK(sim.output.find("CHAINRISK_WORKERS") != std::string::npos);
}

TEST_CASE("orlicz subcommand recovers the gaussian closed form") {
  const auto res =
      run_cli("orlicz --dist gaussian --q 2 --n 1000000 --seed 7");
  REQUIRE(res.exit_code == 0);
  const json j = json::parse(res.output);
  CHECK(j.at("value").get<double>() == doctest::Approx(1.633).epsilon(0.0123));

  // Deterministic under --seed.
  const auto again =
      run_cli("orlicz --dist gaussian --q 2 --n 1000000 --seed 7");
  CHECK(again.output == res.output);
}

TEST_CASE("cover subcommand stays below the ball entropy") {
  const auto res = run_cli("cover --ball 2 --eps 0.5 --points 4000 --seed 3");
  REQUIRE(res.exit_code == 0);
  const json j = json::parse(res.output);
  CHECK(j.at("log_cover_size").get<double>() <=
        j.at("entropy_ball").get<double>());
}

TEST_CASE("simulate then rates reproduces the summary fit") {
  const std::string prefix = "cli_sim_test";
  const auto sim = run_cli(
      "simulate --preset constrained-gaussian --trials 40 --workers 2 --out " +
      prefix);
  REQUIRE(sim.exit_code == 0);
  std::ifstream summary_in(prefix + ".json");
  REQUIRE(summary_in.good());
  json summary;
  summary_in >> summary;
  REQUIRE(summary.contains("rate_fit"));
  REQUIRE_FALSE(summary["rate_fit"].is_null());

  const auto rates = run_cli("rates --csv " + prefix + ".csv");
  REQUIRE(rates.exit_code == 0);
  const json fit = json::parse(rates.output);
  CHECK(fit.at("rate_fit").at("slope").get<double>() ==
        summary.at("rate_fit").at("slope").get<double>());
  CHECK(fit.at("rate_fit").at("intercept").get<double>() ==
        summary.at("rate_fit").at("intercept").get<double>());
  CHECK(fit.at("rate_fit").at("r2").get<double>() ==
        summary.at("rate_fit").at("r2").get<double>());

  std::remove((prefix + ".csv").c_str());
  std::remove((prefix + ".json").c_str());
}

TEST_CASE("verify runs the property suite deterministically") {
  const auto res = run_cli("verify --reps 400 --seed 11");
  CHECK(res.exit_code == 0);
  CHECK(res.output.find("PASS orlicz-gaussian") != std::string::npos);
  CHECK(res.output.find("PASS finite-max-q2") != std::string::npos);
  CHECK(res.output.find("PASS sup-process") != std::string::npos);
  const auto again = run_cli("verify --reps 400 --seed 11");
  CHECK(again.output == res.output);
}

TEST_CASE("config file round trips through simulate") {
  // Emit a config by hand matching the documented schema.
  const json config = {
      {"problem",
       {{"dim", 2},
        {"design",
         {{"kind", "gaussian"},
          {"params",
           {{"mean", {0.0, 0.0}},
            {"cov", {{1.0, 0.0}, {0.0, 1.0}}}}}}},
        {"target_slope", {0.5, 0.0}},
        {"target_bias", 0.25},
        {"noise_sd", 1.0},
        {"b_x", 2.3094010767585034},
        {"b_y", 1.8257418583505538},
        {"kappa", 0.1875},
        {"id", "cli-config-test"}}},
      {"estimator", {{"kind", "constrained"}, {"L", 1.0}}},
      {"loss", {{"kind", "squared"}}},
      {"n_grid", {50, 100, 200}},
      {"trials", 40},
      {"gamma", 0.1},
      {"master_seed", 99},
      {"bound", "constrained"},
      {"workers", 2}};
  {
    std::ofstream out("cli_config_test.json");
    out << config.dump(2);
  }
  const auto res = run_cli("simulate --config cli_config_test.json");
  CHECK(res.exit_code == 0);
  std::remove("cli_config_test.json");
}
