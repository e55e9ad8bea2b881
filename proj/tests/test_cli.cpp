#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <random>
#include <sstream>

#include "conan/cli.hpp"
#include "conan/io.hpp"
#include "oracles.hpp"
#include "scratch_dir.hpp"

namespace {

struct Outcome {
  int code;
  std::string out, err;
};

Outcome cli(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = conan::run(args, out, err);
  return {code, out.str(), err.str()};
}

int lines(const std::string& s) { return static_cast<int>(std::count(s.begin(), s.end(), '\n')); }

}  // namespace

TEST_CASE("cli exit codes and diagnostics") {
  std::mt19937_64 rng(31);
  testutil::ScratchDir dir;
  const std::string g1 = dir.file("g1.json"), g2 = dir.file("g2.json");
  conan::write_graph_json(g1, oracle::random_graph(rng, 4, 2));
  conan::write_graph_json(g2, oracle::random_graph(rng, 5, 2, false));

  SUBCASE("success prints one JSON document") {
    auto r = cli({"fgw", "dist", "--g1", g1, "--g2", g2});
    CHECK(r.code == 0);
    CHECK(r.err.empty());
    const auto j = conan::Json::parse(r.out);
    CHECK(j["cost"].is_number());
    CHECK_FALSE(j.contains("coupling"));
    r = cli({"fgw", "dist", "--g1", g1, "--g2", g2, "--emit-coupling"});
    CHECK(conan::Json::parse(r.out)["coupling"].size() == 4);
  }
  SUBCASE("self-distance through the CLI") {
    auto r = cli({"fgw", "dist", "--g1", g1, "--g2", g1, "--epsilon", "0.01"});
    CHECK(r.code == 0);
    CHECK(conan::Json::parse(r.out)["cost"].get<double>() <= 1e-2);
  }
  SUBCASE("missing required flag") {
    auto r = cli({"fgw", "dist", "--g1", g1});
    CHECK(r.code == 1);
    CHECK(r.err == "error: missing required flag --g2\n");
    CHECK(r.out.empty());
  }
  SUBCASE("bad parameters and unknown input") {
    for (const auto& args : std::vector<std::vector<std::string>>{
             {"fgw", "dist", "--g1", g1, "--g2", g2, "--epsilon", "0"},
             {"fgw", "dist", "--g1", g1, "--g2", g2, "--alpha", "1.5"},
             {"fgw", "dist", "--g1", g1, "--g2", g2, "--loss", "l7"},
             {"fgw", "dist", "--g1", g1, "--g2", dir.file("absent.json")},
             {"fgw", "dist", "--g1", g1, "--g2", g2, "--bogus"},
             {"frobnicate"},
             {}}) {
      auto r = cli(args);
      CHECK(r.code == 1);
      CHECK(lines(r.err) == 1);
    }
  }
  SUBCASE("solver failure exits 2") {
    const std::string big = dir.file("big.json");
    std::ofstream(big) << R"({"H": [[0], [1]], "A": [[0, 1e154], [1e154, 0]]})";
    auto r = cli({"fgw", "dist", "--g1", big, "--g2", big});
    CHECK(r.code == 2);
    CHECK(lines(r.err) == 1);
    CHECK(r.err.rfind("solver error: ", 0) == 0);
  }
  SUBCASE("validate") {
    const std::string bad = dir.file("bad.json");
    std::ofstream(bad) << R"({"H": [[0], [1]], "A": [[0, 1], [2, 0]], "omega": [0.5, 0.6]})";
    auto r = cli({"validate", "--graph", bad});
    CHECK(r.code == 1);
    CHECK(lines(r.err) == 1);
    CHECK(r.err.find("asymmetric") != std::string::npos);
    CHECK(r.err.find("weights sum 1.1") != std::string::npos);
    r = cli({"validate", "--graph", g1});
    CHECK(r.code == 0);
    CHECK(conan::Json::parse(r.out)["valid"] == true);
  }
}

TEST_CASE("cli --out writes files atomically with a CSV mirror for reports") {
  testutil::ScratchDir dir;
  std::mt19937_64 rng(32);
  const std::string g = dir.file("g.json");
  conan::write_graph_json(g, oracle::random_graph(rng, 3, 2));
  auto r = cli({"fgw", "barycenter", "--graphs", g, g, "--out", dir.file("bar.json")});
  CHECK(r.code == 0);
  CHECK(r.out.empty());
  const auto j = conan::Json::parse(conan::read_text(dir.file("bar.json")));
  CHECK(j["graph"]["A"].size() == 3);

  r = cli({"bench", "runtime", "--kvalues", "1,2", "--n", "3", "--d", "2", "--repeats", "1", "--outer-iters", "1",
           "--out", dir.file("rt.json")});
  CHECK(r.code == 0);
  CHECK(conan::read_text(dir.file("rt.csv")).rfind("k,mean_seconds,ratio_to_previous\n", 0) == 0);
  r = cli({"bench", "runtime", "--kvalues", "1,x"});
  CHECK(r.code == 1);
}

TEST_CASE("cli output is byte-identical across runs and thread counts") {
  testutil::ScratchDir dir;
  std::mt19937_64 rng(33);
  std::vector<std::string> graphs;
  for (int k = 0; k < 4; ++k) {
    graphs.push_back(dir.file("g" + std::to_string(k) + ".json"));
    conan::write_graph_json(graphs.back(), oracle::random_graph(rng, 4, 3));
  }
  std::vector<std::string> args{"fgw", "barycenter", "--graphs"};
  args.insert(args.end(), graphs.begin(), graphs.end());

  const auto mol = oracle::random_molecule(rng, 5, 3);
  std::ofstream(dir.file("mol.json")) << conan::dump(conan::molecule_to_json(mol));
  const auto base = oracle::random_conformer(rng, 5);
  std::vector<conan::Conformer> frames;
  for (int k = 0; k < 3; ++k) frames.push_back(conan::perturb_conformer(base, 0.1, 40 + k));
  std::ofstream(dir.file("conf.xyz")) << conan::write_xyz(frames);
  const std::vector<std::string> fwd{"conan", "forward", "--graph2d", dir.file("mol.json"), "--conformers",
                                     dir.file("conf.xyz"), "--seed", "5", "--d", "8"};

  for (const auto& cmd : {args, fwd}) {
    const auto first = cli(cmd);
    REQUIRE(first.code == 0);
    for (const char* threads : {"1", "3"}) {
      ::setenv("FGW_THREADS", threads, 1);
      const auto again = cli(cmd);
      ::unsetenv("FGW_THREADS");
      CHECK(again.out == first.out);
    }
  }
  auto missing_seed = cli({"conan", "forward", "--graph2d", dir.file("mol.json"), "--conformers", dir.file("conf.xyz")});
  CHECK(missing_seed.code == 1);
  CHECK(missing_seed.err == "error: missing required flag --seed\n");
  auto too_many = cli({"conan", "forward", "--graph2d", dir.file("mol.json"), "--conformers", dir.file("conf.xyz"),
                       "--seed", "1", "--k", "9"});
  CHECK(too_many.code == 1);
}
