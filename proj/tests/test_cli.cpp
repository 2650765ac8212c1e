#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>

#include "stochphase/io.hpp"

using namespace stochphase;
namespace fs = std::filesystem;

namespace {

int run(const std::string& args) {
  const std::string cmd = std::string(STOCHPHASE_CLI) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

json load(const fs::path& p) { return json::parse(read_file(p)); }

void fresh(const fs::path& dir) { fs::remove_all(dir); }

}  // namespace

TEST_CASE("config errors exit with code 2 and leave a failure marker") {
  fresh("cli_bad_model");
  CHECK(run("phase --model vdp --out cli_bad_model") == 2);
  CHECK(fs::exists("cli_bad_model/FAILED"));
  CHECK_FALSE(fs::exists("cli_bad_model/manifest.json"));
  const json err = load("cli_bad_model/error.json");
  CHECK(err["kind"] == "config");
  CHECK(err["code"] == "unknown_model");
  CHECK(err["message"].get<std::string>().find("vdp") != std::string::npos);

  fresh("cli_bad_key");
  CHECK(run("spectrum --out cli_bad_key grid_size=10") == 2);
  CHECK(load("cli_bad_key/error.json")["code"] == "unknown_key");

  fresh("cli_eps");
  CHECK(run("response --out cli_eps grid_n=41 'eps=[0,0]'") == 2);
  CHECK(run("frobnicate") == 2);
}

TEST_CASE("refusals exit with code 4") {
  fresh("cli_elliptic");
  CHECK(run("phase --out cli_elliptic grid_n=41 D=0") == 4);
  const json err = load("cli_elliptic/error.json");
  CHECK(err["code"] == "not_elliptic");
  CHECK(err["message"].get<std::string>().find("elliptic") != std::string::npos);

  fresh("cli_budget");
  CHECK(run("reduce --out cli_budget grid_n=41 n_traj=5") == 4);
  fresh("cli_budget_ml");
  CHECK(run("gedmd --model ml3d --out cli_budget_ml n_traj=5") == 4);
}

TEST_CASE("config file with flag overrides") {
  fresh("cli_cfg");
  fs::create_directories("cli_cfg");
  write_file("cli_cfg.json", R"({"model": "snic", "grid_n": 41, "m": 1.1, "seed": 3})");
  CHECK(run("spectrum --config cli_cfg.json --out cli_cfg m=1.2 spectrum_count=6") == 0);
  const json man = load("cli_cfg/manifest.json");
  CHECK(man["config"]["model"] == "snic");
  CHECK(man["config"]["m"] == 1.2);
  CHECK(man["config"]["seed"] == 3);
  CHECK(man["status"] == "ok");
  CHECK(man["outputs"].size() == 2);
  const std::string csv = read_file("cli_cfg/spectrum.csv");
  CHECK(csv.rfind("index,re,im\n", 0) == 0);
}

TEST_CASE("phase maps share the reference point") {
  fresh("cli_phase");
  CHECK(run("phase --out cli_phase grid_n=51 D=0.05") == 0);
  const json man = load("cli_phase/manifest.json");
  CHECK(man["summary"]["x_ref"].size() == 2);
  CHECK(fs::exists("cli_phase/psi.csv"));
  CHECK(fs::exists("cli_phase/theta.csv"));
  CHECK(read_file("cli_phase/theta.csv").rfind("x,y,theta,T\n", 0) == 0);
}

TEST_CASE("seeded reruns are byte identical") {
  const std::string args = "reduce grid_n=51 D=0.05 n_traj=40 t_window=20 t_burn=5 --seed 17";
  fresh("cli_rerun_a");
  fresh("cli_rerun_b");
  REQUIRE(run(args + " --out cli_rerun_a") == 0);
  REQUIRE(run(args + " --out cli_rerun_b") == 0);
  std::size_t files = 0;
  for (const auto& e : fs::directory_iterator("cli_rerun_a")) {
    const fs::path other = fs::path("cli_rerun_b") / e.path().filename();
    if (e.path().filename() == "manifest.json") {
      json a = load(e.path()), b = load(other);
      CHECK(a["config"]["out"] != b["config"]["out"]);
      a["config"].erase("out");
      b["config"].erase("out");
      CHECK(a == b);
    } else {
      CHECK(read_file(e.path()) == read_file(other));
    }
    ++files;
  }
  CHECK(files == 6);
  fresh("cli_rerun_c");
  REQUIRE(run("reduce grid_n=51 D=0.05 n_traj=40 t_window=20 t_burn=5 --seed 18 --out cli_rerun_c") == 0);
  CHECK(read_file("cli_rerun_a/reduced_asymptotic_km.csv") != read_file("cli_rerun_c/reduced_asymptotic_km.csv"));
}

TEST_CASE("simulate writes trajectories") {
  fresh("cli_sim");
  CHECK(run("simulate --model snic --out cli_sim steps=20 n_traj=3") == 0);
  const std::string csv = read_file("cli_sim/trajectories.csv");
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 1 + 3 * 21);
}

TEST_CASE("longterm sweep table shape") {
  fresh("cli_lt");
  CHECK(run("longterm --out cli_lt grid_n=51 n_traj=40 t_window=20 t_burn=5 'D_sweep=[0.05,0.1]' "
            "phase_map=asymptotic") == 0);
  const std::string csv = read_file("cli_lt/stats.csv");
  // Header plus three sources per D value.
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 1 + 3 * 2);
  CHECK(load("cli_lt/agreement.json").size() == 2);
}

TEST_CASE("gedmd cross-validation on hopf") {
  fresh("cli_ged");
  CHECK(run("gedmd --out cli_ged grid_n=81 gedmd_degree=8 gedmd_samples=40000 gedmd_region_steps=200000") == 0);
  const json man = load("cli_ged/manifest.json");
  CHECK(man["summary"]["within_10_percent"] == true);
  CHECK(fs::exists("cli_ged/gedmd_model.json"));
  CHECK(fs::exists("cli_ged/lambda1_comparison.csv"));
}
