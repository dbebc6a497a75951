#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "json.hpp"

namespace {

int run(const std::string& args) {
  std::string cmd = "./nppl_lab " + args + " > cli_stdout.txt 2> cli_stderr.txt";
  int rc = std::system(cmd.c_str());
  return WEXITSTATUS(rc);
}

std::string slurp(const std::string& path) {
  std::ifstream is(path);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("list-presets names the catalog") {
  REQUIRE(run("list-presets") == 0);
  std::string out = slurp("cli_stdout.txt");
  for (const char* id : {"storoliten", "varannan", "utvidgat", "plutt", "dansa", "ejkonvex", "kyckling",
                         "prod", "join"})
    CHECK(out.find(id) != std::string::npos);
}

TEST_CASE("unknown preset exits 1 with a suggestion") {
  CHECK(run("converge --preset varanan") == 1);
  std::string err = slurp("cli_stderr.txt");
  CHECK(err.find("varannan") != std::string::npos);
}

TEST_CASE("same config produces byte-identical reports; timestamps live in meta") {
  REQUIRE(run("lelong --current staircase-6 --out cli_rep_a --format all") == 0);
  REQUIRE(run("lelong --current staircase-6 --out cli_rep_b --format all") == 0);
  std::string a = slurp("cli_rep_a/lelong.json");
  std::string b = slurp("cli_rep_b/lelong.json");
  REQUIRE(!a.empty());
  CHECK(a == b);
  auto doc = nlohmann::json::parse(a);
  CHECK(doc.at("schema") == "nppl-report/1");
  CHECK(doc.contains("config_hash"));
  CHECK(doc.contains("tolerances"));
  CHECK(a.find("wall_seconds") == std::string::npos);
  auto meta = nlohmann::json::parse(slurp("cli_rep_a/lelong.meta.json"));
  CHECK(meta.contains("wall_seconds"));
}

TEST_CASE("converge experiment reproduces the Example 5.6 limit with exit 0") {
  REQUIRE(run("converge --preset storoliten --p 2 --twist c=2 --out cli_rep_c --format all") == 0);
  auto doc = nlohmann::json::parse(slurp("cli_rep_c/converge.json"));
  double gap = doc.at("results").at("gap").get<double>();
  double predicted = doc.at("results").at("predicted").get<double>();
  CHECK(gap <= 0.05 * predicted);
  // CSV and SVG mirrors exist under --format all
  CHECK(!slurp("cli_rep_c/converge.csv").empty());
  CHECK(slurp("cli_rep_c/converge.svg").find("polyline") != std::string::npos);
}

TEST_CASE("threshold experiment verdicts the eps pattern") {
  REQUIRE(run("threshold --family powerlog --eps 0.25,0.4,0.6,0.75 --out cli_rep_t") == 0);
  auto doc = nlohmann::json::parse(slurp("cli_rep_t/threshold.json"));
  auto rows = doc.at("results").at("rows");
  REQUIRE(rows.size() == 4);
  CHECK(!rows[0].at("divergent").get<bool>());
  CHECK(!rows[1].at("divergent").get<bool>());
  CHECK(rows[2].at("divergent").get<bool>());
  CHECK(rows[3].at("divergent").get<bool>());
}

TEST_CASE("nonconv experiment reports the bifurcation pairs") {
  REQUIRE(run("nonconv --preset varannan --out cli_rep_n") == 0);
  auto doc = nlohmann::json::parse(slurp("cli_rep_n/nonconv.json"));
  CHECK(doc.at("results").at("pairs").size() == 4);
}

TEST_CASE("the fd mass path populates and reuses the field cache") {
  (void)!std::system("rm -rf cli_rep_f");
  REQUIRE(run("mass --dsl \"abs2(z1)+abs2(z2)\" --n 2 --p 2 --region 0.6 --grid 16 --fd "
              "--out cli_rep_f") == 0);
  // cache directory now holds the sampled field
  std::string ls = "ls cli_rep_f/.cache > cli_stdout.txt 2>/dev/null";
  (void)!std::system(ls.c_str());
  CHECK(slurp("cli_stdout.txt").find(".field") != std::string::npos);
  // second run reuses it (still exits 0, identical report)
  REQUIRE(run("mass --dsl \"abs2(z1)+abs2(z2)\" --n 2 --p 2 --region 0.6 --grid 16 --fd "
              "--out cli_rep_f2") == 0);
  // --no-cache leaves no cache directory
  (void)!std::system("rm -rf cli_rep_g");
  REQUIRE(run("mass --dsl \"abs2(z1)+abs2(z2)\" --n 2 --p 2 --region 0.6 --grid 16 --fd --no-cache "
              "--out cli_rep_g") == 0);
  (void)!std::system("ls cli_rep_g/.cache > cli_stdout.txt 2>/dev/null");
  CHECK(slurp("cli_stdout.txt").find(".field") == std::string::npos);
}

TEST_CASE("membership subcommand verdicts the PowerLog threshold") {
  REQUIRE(run("membership --eps 0.75 --k 1 --grid 40 --ell-max 4 --out cli_rep_m") == 0);
  std::string out = slurp("cli_stdout.txt");
  CHECK(out.find("non-member") != std::string::npos);
}
