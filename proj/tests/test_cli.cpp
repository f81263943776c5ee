#include "urnlab/cli.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace urnlab;
using Catch::Approx;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int run_cli(const std::string& args) {
  std::string cmd = std::string(URNLAB_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  int rc = std::system(cmd.c_str());
  return WEXITSTATUS(rc);
}

}  // namespace

TEST_CASE("f grammar") {
  REQUIRE(cli::parse_shape("identity").kind() == ShapeFunction::Kind::Identity);
  REQUIRE(cli::parse_shape("sqrt").alpha() == Approx(0.5));
  REQUIRE(cli::parse_shape("power:3.09").alpha() == Approx(3.09));
  REQUIRE_THROWS_AS(cli::parse_shape("power:x"), Error);
  REQUIRE_THROWS_AS(cli::parse_shape("cubic"), Error);
  REQUIRE_THROWS_AS(cli::parse_shape("custom:/no/such/file.json"), Error);
}

TEST_CASE("custom tabulated f round-trips through the grammar") {
  fs::path tmp = fs::temp_directory_path() / "urnlab_custom_f.json";
  {
    std::ofstream out(tmp);
    out << R"({"ys":[0.0,0.25,0.5,0.75,1.0],
               "fs":[0.0,0.0625,0.25,0.5625,1.0],
               "dfs":[0.0,0.5,1.0,1.5,2.0],
               "right_deriv_0":0.0,"left_deriv_1":2.0,
               "shape":"convex"})";
  }
  auto f = cli::parse_shape("custom:" + tmp.string());
  REQUIRE(f(0.5) == Approx(0.25));
  REQUIRE(f(0.375) == Approx((0.0625 + 0.25) / 2));  // linear interpolation
  REQUIRE(f.deriv(1.0) == Approx(2.0));
  REQUIRE(f.curvature() == ShapeFunction::Curvature::Convex);
  fs::remove(tmp);
}

TEST_CASE("grid grammar") {
  auto g = cli::parse_grid("0.5:2.0:0.5");
  REQUIRE(g == std::vector<double>{0.5, 1.0, 1.5, 2.0});
  REQUIRE_THROWS_AS(cli::parse_grid("2:1:0.5"), Error);
  REQUIRE_THROWS_AS(cli::parse_grid("oops"), Error);
}

TEST_CASE("unknown config keys are rejected") {
  cli::json cfg = {{"p1", 0.7}, {"typo", 1}};
  REQUIRE_THROWS_AS(cli::validate_keys(cfg, {"p1", "p2"}, "test"), Error);
  try {
    cli::validate_keys(cfg, {"p1", "p2"}, "test");
  } catch (const Error& e) {
    REQUIRE(e.code() == "config.invalid");
  }
}

TEST_CASE("config loader enforces existence and schema version") {
  REQUIRE_THROWS_AS(cli::load_config("/does/not/exist.json"), Error);
  fs::path tmp = fs::temp_directory_path() / "urnlab_cfg.json";
  {
    std::ofstream out(tmp);
    out << R"({"p1":0.7})";
  }
  REQUIRE_THROWS_AS(cli::load_config(tmp.string()), Error);
  {
    std::ofstream out(tmp);
    out << R"({"schema_version":1,"p1":0.7})";
  }
  REQUIRE(cli::load_config(tmp.string())["p1"] == 0.7);
  fs::remove(tmp);
}

TEST_CASE("model parsing") {
  REQUIRE(cli::parse_model({{"kind", "identity"}}, 3).kind() ==
          AdditionRuleModel::Kind::Identity);
  auto fin = cli::parse_model({{"kind", "bernoulli_finance"},
                               {"p", {0.7, 0.75}}},
                              2);
  REQUIRE(fin.limit_H()(0, 1) == Approx(0.25));
  REQUIRE_THROWS_AS(cli::parse_model({{"kind", "nope"}}, 2), Error);
}

TEST_CASE("checkpoint parsing") {
  auto def = cli::parse_checkpoints(cli::json(), 1000);
  REQUIRE(def.back() == 1000);
  auto expl = cli::parse_checkpoints(cli::json::array({10, 100, 1000}), 1000);
  REQUIRE(expl == std::vector<long long>{10, 100, 1000});
  auto geo = cli::parse_checkpoints({{"kind", "geometric"}, {"c", 4.0},
                                     {"rho", 2.0}},
                                    64);
  REQUIRE(geo.front() == 4);
  REQUIRE(geo.back() == 64);
}

TEST_CASE("cli process: exit codes and determinism") {
  REQUIRE(run_cli("equilibria --f power:3.09 --p1 0.7 --p2 0.75") == 0);
  // missing config file -> config error
  REQUIRE(run_cli("simulate --config /nonexistent/cfg.json") == 2);
  // bad flag value -> config error
  REQUIRE(run_cli("equilibria --f waffle --p1 0.7 --p2 0.75") == 2);

  fs::path dir_a = fs::temp_directory_path() / "urnlab_cli_a";
  fs::path dir_b = fs::temp_directory_path() / "urnlab_cli_b";
  fs::remove_all(dir_a);
  fs::remove_all(dir_b);
  std::string base = "simulate --f identity --model bernoulli_finance "
                     "--p 0.7,0.75 --y0 1,1 --horizon 3000 --runs 3 --seed 42 "
                     "--threads 2 --out-dir ";
  REQUIRE(run_cli(base + dir_a.string()) == 0);
  REQUIRE(run_cli(base + dir_b.string()) == 0);
  REQUIRE(slurp(dir_a / "finals.csv") == slurp(dir_b / "finals.csv"));
  REQUIRE(slurp(dir_a / "trajectory.csv") == slurp(dir_b / "trajectory.csv"));
  REQUIRE(slurp(dir_a / "paths/run_2.csv") == slurp(dir_b / "paths/run_2.csv"));
  REQUIRE(fs::exists(dir_a / "manifest.json"));
  // manifests agree except the timestamp and the echoed output paths
  auto ja = cli::json::parse(slurp(dir_a / "manifest.json"));
  auto jb = cli::json::parse(slurp(dir_b / "manifest.json"));
  for (auto* j : {&ja, &jb}) {
    j->erase("created_unix");
    j->erase("config_hash");
    (*j)["config"].erase("out_dir");
  }
  REQUIRE(ja == jb);
  fs::remove_all(dir_a);
  fs::remove_all(dir_b);
}

TEST_CASE("cli process: clt prediction JSON") {
  fs::path dir = fs::temp_directory_path() / "urnlab_cli_clt";
  fs::remove_all(dir);
  REQUIRE(run_cli("clt --f identity --p1 0.7 --p2 0.75 --out-dir " +
                  dir.string()) == 0);
  auto j = cli::json::parse(slurp(dir / "clt.json"));
  REQUIRE(j["predictions"].size() == 1);
  const auto& pred = j["predictions"][0];
  REQUIRE(pred["regime"] == "clt");
  REQUIRE(std::abs(pred["lambda"].get<double>() - 0.45) < 1e-10);
  REQUIRE(std::abs(pred["sigma2"].get<double>() - 4.9586776859) < 1e-6);
  fs::remove_all(dir);
}

TEST_CASE("cli process: equilibria JSON carries the frozen roots") {
  fs::path dir = fs::temp_directory_path() / "urnlab_cli_eq";
  fs::remove_all(dir);
  REQUIRE(run_cli("equilibria --f power:3.09 --p1 0.7 --p2 0.75 --out-dir " +
                  dir.string()) == 0);
  auto j = cli::json::parse(slurp(dir / "equilibria.json"));
  REQUIRE(j["points"].size() == 2);
  REQUIRE(std::abs(j["points"][0]["y"][0].get<double>() - 0.2699) < 1e-3);
  REQUIRE(std::abs(j["points"][1]["y"][0].get<double>() - 0.6002) < 1e-3);
  REQUIRE(j["points"][1]["stability"] == "degenerate");
  fs::remove_all(dir);
}

TEST_CASE("cli process: config-file-driven allocation experiment") {
  // the sqrt-rule allocation setting with p = (0.7, 0.75)
  fs::path dir = fs::temp_directory_path() / "urnlab_cli_fig3";
  fs::remove_all(dir);
  fs::path cfg = fs::temp_directory_path() / "urnlab_fig3.json";
  {
    std::ofstream out(cfg);
    out << R"({"schema_version":1,
               "p":[0.7,0.75],"f":"sqrt","y0":[1,1],
               "horizon":20000,"runs":4,"seed":7,
               "out_dir":")" << dir.string() << R"("})";
  }
  REQUIRE(run_cli("finance --config " + cfg.string()) == 0);
  REQUIRE(fs::exists(dir / "allocation.csv"));
  REQUIRE(fs::exists(dir / "finals.csv"));
  REQUIRE(fs::exists(dir / "report.json"));
  std::string header = slurp(dir / "allocation.csv").substr(0, 60);
  REQUIRE(header.rfind("n,y1,y2,ny1,ny2,pi1,pi2,hdist", 0) == 0);
  auto rep = cli::json::parse(slurp(dir / "report.json"));
  REQUIRE(rep["limit_H"][0][1].get<double>() == Approx(0.25));
  // a config with an unknown key is rejected with exit code 2
  fs::path bad = fs::temp_directory_path() / "urnlab_bad.json";
  {
    std::ofstream out(bad);
    out << R"({"schema_version":1,"p":[0.7,0.75],"wobble":3,
               "out_dir":")" << dir.string() << R"("})";
  }
  REQUIRE(run_cli("finance --config " + bad.string()) == 2);
  fs::remove(cfg);
  fs::remove(bad);
  fs::remove_all(dir);
}

TEST_CASE("cli process: polya endpoint classification csv") {
  fs::path dir = fs::temp_directory_path() / "urnlab_cli_endp";
  fs::remove_all(dir);
  REQUIRE(run_cli("polya --mode endpoints --f power:2 --y0 1,1 --runs 40 "
                  "--horizon 20000 --seed 3 --out-dir " +
                  dir.string()) == 0);
  std::string csv = slurp(dir / "endpoints.csv");
  REQUIRE(csv.rfind("run,endpoint_label,final_y1,final_y2", 0) == 0);
  REQUIRE(csv.find(",e1,") != std::string::npos);
  REQUIRE(csv.find(",e2,") != std::string::npos);
  fs::remove_all(dir);
}

TEST_CASE("cli process: output directory lock") {
  fs::path dir = fs::temp_directory_path() / "urnlab_cli_lock";
  fs::remove_all(dir);
  fs::create_directories(dir);
  {
    std::ofstream out(dir / ".urnlab.lock");
    out << "pid 0\n";
  }
  REQUIRE(run_cli("scan --p1 0.7 --p2 0.75 --alpha 1:2:0.5 --out-dir " +
                  dir.string()) == 3);
  fs::remove_all(dir);
}
