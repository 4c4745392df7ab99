#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "terrainopt/io.hpp"

namespace {

using namespace terrainopt;
namespace fs = std::filesystem;
using json = nlohmann::json;

struct CliRun {
  int code = -1;
  std::string out;
  std::string err;
};

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           (std::string("terrainopt_cli_") +
            ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  CliRun run(const std::string& args) const {
    const std::string out = path("stdout.txt"), err = path("stderr.txt");
    const std::string cmd =
        std::string(TERRAINOPT_CLI_PATH) + " " + args + " >" + out + " 2>" + err;
    const int status = std::system(cmd.c_str());
    CliRun r;
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = slurp(out);
    r.err = slurp(err);
    return r;
  }

  static std::string slurp(const std::string& file) {
    std::ifstream in(file);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }

  void write(const std::string& name, const std::string& text) const {
    std::ofstream(path(name)) << text;
  }

  // Ridge across the straight start-goal line, tallest off to one side.
  std::string tapered_ridge_model() const {
    ElevationCloud cloud;
    for (int i = 0; i <= 50; ++i) {
      for (int j = 0; j <= 50; ++j) {
        const double x = -5.0 + 0.2 * i, y = -5.0 + 0.2 * j;
        if (x * x + y * y > 25.0 + 1e-9) continue;
        const double z = 0.5 * std::exp(-x * x / (2.0 * 0.36)) *
                         std::exp(-(y - 1.5) * (y - 1.5) / (2.0 * 2.25));
        cloud.points.push_back({x, y, z});
      }
    }
    io::write_cloud_csv(path("ridge.csv"), cloud);
    EXPECT_EQ(run("fit --in " + path("ridge.csv") + " --out " + path("ridge.json")).code, 0);
    return path("ridge.json");
  }

  fs::path dir_;
};

json strip_wall_times(json j) {
  if (j.is_object()) {
    json out = json::object();
    for (auto& [k, v] : j.items()) {
      if (k.find("wall_time") == std::string::npos) out[k] = strip_wall_times(v);
    }
    return out;
  }
  if (j.is_array()) {
    json out = json::array();
    for (auto& v : j) out.push_back(strip_wall_times(v));
    return out;
  }
  return j;
}

TEST_F(Cli, UsageErrors) {
  EXPECT_EQ(run("").code, 64);
  EXPECT_EQ(run("bogus").code, 64);
  EXPECT_EQ(run("--help").code, 0);
  EXPECT_EQ(run("pose --terrain x.json").code, 64);  // missing --state
}

TEST_F(Cli, SynthThenFit) {
  ASSERT_EQ(run("synth --kind incline --slope 0.1 --extent 4 --spacing 0.1 --out " +
                path("c.csv"))
                .code,
            0);
  const CliRun r = run("fit --in " + path("c.csv") + " --n-freq 20 --out " + path("m.json"));
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("fit_rmse"), std::string::npos);
  EXPECT_NE(r.out.find("fit_time_s"), std::string::npos);
  const auto model = io::load_terrain(path("m.json"));
  EXPECT_EQ(model.size(), 20u);
}

TEST_F(Cli, FitErrors) {
  const CliRun missing = run("fit --in " + path("none.csv") + " --out " + path("m.json"));
  EXPECT_EQ(missing.code, 2);
  EXPECT_NE(missing.err.find(path("none.csv")), std::string::npos);
  write("c.csv", "x,y,z\n0,0,0\n1,1,0\n2,2,0\n3,3,0\n");
  EXPECT_EQ(run("fit --in " + path("c.csv") + " --out " + path("m.json")).code, 3);
  write("bad.csv", "x,y\n0,0\n");
  EXPECT_EQ(run("fit --in " + path("bad.csv") + " --out " + path("m.json")).code, 2);
  EXPECT_EQ(run("fit --in " + path("c.csv") + " --n-freq 0 --out " + path("m.json")).code, 64);
}

TEST_F(Cli, PoseOnFlatGround) {
  io::save_terrain(path("flat.json"), flat_model());
  const CliRun r = run("pose --terrain " + path("flat.json") + " --state 0,0,0 --jacobian");
  ASSERT_EQ(r.code, 0) << r.err;
  const json j = json::parse(r.out);
  EXPECT_NEAR(j["z"].get<double>(), VehicleGeometry{}.legs[0], 1e-9);
  EXPECT_NEAR(j["beta"].get<double>(), 0.0, 1e-9);
  EXPECT_NEAR(j["gamma"].get<double>(), 0.0, 1e-9);
  EXPECT_FALSE(j.contains("warning"));
  for (int row = 0; row < 3; ++row) {
    for (int c = 0; c < 3; ++c) {
      EXPECT_NEAR(j["jacobian"]["matrix"][row][c].get<double>(), 0.0, 1e-9);
    }
  }
}

TEST_F(Cli, PoseOnStepWarns) {
  ElevationCloud cloud;
  for (double x = -2.0; x <= 2.0; x += 0.05) {
    for (double y = -2.0; y <= 2.0; y += 0.05) {
      if (x * x + y * y > 4.0) continue;
      cloud.points.push_back({x, y, 0.1 * (1.0 + std::tanh((x + y - 0.4) / 0.04))});
    }
  }
  io::write_cloud_csv(path("step.csv"), cloud);
  ASSERT_EQ(run("fit --in " + path("step.csv") + " --n-freq 100 --out " + path("step.json")).code,
            0);
  write("veh.json", R"({"legs": [0.3, 0.3, 0.3, 0.3]})");
  const CliRun r = run("pose --terrain " + path("step.json") + " --vehicle " + path("veh.json") +
                    " --state 0,0,0");
  ASSERT_EQ(r.code, 0) << r.err;
  const json j = json::parse(r.out);
  EXPECT_TRUE(j["converged"].get<bool>());
  EXPECT_GT(j["residual_norm"].get<double>(), 0.01);
  EXPECT_TRUE(j.contains("warning"));
}

TEST_F(Cli, PoseSolverFailureExitCode) {
  io::save_terrain(path("flat.json"), flat_model());
  write("cfg.json", R"({"planner": {"nls_max_iterations": 1}})");
  write("veh.json", R"({"legs": [0.1, 0.2, 0.3, 0.4]})");
  const CliRun r = run("pose --terrain " + path("flat.json") + " --vehicle " + path("veh.json") +
                    " --config " + path("cfg.json") + " --state 0.3,0.2,0.7");
  EXPECT_EQ(r.code, 4) << r.out << r.err;
}

TEST_F(Cli, PlanWritesReadableOutputs) {
  const std::string model = tapered_ridge_model();
  const CliRun r = run("plan --terrain " + model + " --steps 20 --iters 10 --out " + path("p") +
                    " --emit-plot-data");
  ASSERT_EQ(r.code, 0) << r.err;
  const auto rows = io::read_trajectory_csv(path("p_trajectory.csv"));
  EXPECT_EQ(rows.size(), 20u);
  EXPECT_NEAR(rows.front().x, -3.0, 1e-8);
  EXPECT_NEAR(rows.back().x, 3.0, 1e-8);
  const auto trace = io::read_cost_trace_csv(path("p_cost_trace.csv"));
  EXPECT_GE(trace.size(), 2u);
  const json summary = io::read_json_file(path("p_summary.json"));
  EXPECT_EQ(summary, json::parse(r.out));
  EXPECT_EQ(summary["method"], "gradient");
  EXPECT_DOUBLE_EQ(summary["total_cost"].get<double>(), trace.back());
  EXPECT_TRUE(fs::exists(path("p_plot.csv")));

  const CliRun again = run("plan --terrain " + model + " --steps 20 --iters 10");
  EXPECT_EQ(strip_wall_times(json::parse(again.out)), strip_wall_times(summary));
}

TEST_F(Cli, PlanWithCem) {
  const std::string model = tapered_ridge_model();
  const CliRun r = run("plan --terrain " + model +
                    " --method cem --batch 8 --cem-iters 2 --steps 20 --seed 3");
  ASSERT_EQ(r.code, 0) << r.err;
  const json j = json::parse(r.out);
  EXPECT_EQ(j["method"], "cem");
  EXPECT_GE(j["nls_calls"].get<long>(), 8 * 20 * 2);
}

TEST_F(Cli, StabilityCostRaisesWorstCaseOnRidge) {
  const std::string model = tapered_ridge_model();
  const CliRun with = run("plan --terrain " + model);
  const CliRun without = run("plan --terrain " + model + " --no-stability");
  ASSERT_EQ(with.code, 0) << with.err;
  ASSERT_EQ(without.code, 0) << without.err;
  EXPECT_GT(json::parse(with.out)["min_tipover_angle"].get<double>(),
            json::parse(without.out)["min_tipover_angle"].get<double>());
}

TEST_F(Cli, PlanErrorCodes) {
  const std::string model = tapered_ridge_model();
  EXPECT_EQ(run("plan --terrain " + model + " --box 0,1,0,1 --steps 20").code, 5);
  EXPECT_EQ(run("plan --terrain " + model + " --start 1,2,3").code, 64);
  EXPECT_EQ(run("plan --terrain " + model + " --method annealing").code, 64);
  EXPECT_EQ(run("plan --terrain " + path("missing.json")).code, 2);
}

TEST_F(Cli, ConfigOverlayAndPrecedence) {
  const std::string model = tapered_ridge_model();
  write("cfg.json", R"({"planner": {"steps": 15, "max_iters": 3}, "stability": {"w_theta": 0.2}})");
  ASSERT_EQ(run("plan --terrain " + model + " --config " + path("cfg.json") + " --out " +
                path("a"))
                .code,
            0);
  EXPECT_EQ(io::read_trajectory_csv(path("a_trajectory.csv")).size(), 15u);
  ASSERT_EQ(run("plan --terrain " + model + " --config " + path("cfg.json") +
                " --steps 12 --out " + path("b"))
                .code,
            0);
  EXPECT_EQ(io::read_trajectory_csv(path("b_trajectory.csv")).size(), 12u);

  write("bad.json", R"({"planner": {"stepz": 15}})");
  EXPECT_EQ(run("plan --terrain " + model + " --config " + path("bad.json")).code, 2);
  write("bad2.json", R"({"extras": {}})");
  EXPECT_EQ(run("plan --terrain " + model + " --config " + path("bad2.json")).code, 2);
  write("veh.json", R"({"h": 0.3, "wheelbase": 2})");
  EXPECT_EQ(run("plan --terrain " + model + " --vehicle " + path("veh.json")).code, 2);
}

TEST_F(Cli, CompareIsDeterministic) {
  const std::string args = "compare --instances 2 --seed 3 --steps 12 --iters 5 --cem-iters 2 ";
  const CliRun a = run(args + "--out " + path("a"));
  ASSERT_EQ(a.code, 0) << a.err;
  const CliRun b = run(args + "--out " + path("b"));
  ASSERT_EQ(b.code, 0) << b.err;
  const json ja = io::read_json_file(path("a_compare.json"));
  const json jb = io::read_json_file(path("b_compare.json"));
  ASSERT_EQ(ja.size(), 3u);
  EXPECT_EQ(ja[0]["method"], "gradient");
  EXPECT_EQ(ja[1]["method"], "cem-100");
  EXPECT_EQ(ja[2]["method"], "cem-20");
  EXPECT_EQ(ja[1]["runs"].size(), 2u);
  EXPECT_EQ(strip_wall_times(ja), strip_wall_times(jb));
  EXPECT_NE(a.out.find("mean_worst_angle"), std::string::npos);
}

}  // namespace
