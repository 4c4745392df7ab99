#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "terrainopt/cem.hpp"
#include "terrainopt/experiment.hpp"
#include "terrainopt/io.hpp"

namespace {

using namespace terrainopt;
using json = nlohmann::json;

constexpr int kExitOk = 0;
constexpr int kExitIo = 2;
constexpr int kExitDegenerate = 3;
constexpr int kExitSolver = 4;
constexpr int kExitInfeasible = 5;
constexpr int kExitUsage = 64;

// Pose residuals above this are reported in a `warning` field.
constexpr double kResidualWarning = 1e-6;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Io:
    case ErrorKind::Parse:
      return kExitIo;
    case ErrorKind::DegenerateCloud:
    case ErrorKind::NonFinite:
    case ErrorKind::InsufficientOrder:
      return kExitDegenerate;
    case ErrorKind::SolverDiverged:
    case ErrorKind::SingularJacobian:
    case ErrorKind::SingularHessian:
    case ErrorKind::InnerSolverFailure:
    case ErrorKind::DegenerateSupportPolygon:
    case ErrorKind::ZeroProjectedForce:
      return kExitSolver;
    case ErrorKind::ProjectionInfeasible:
    case ErrorKind::InfeasibleBox:
      return kExitInfeasible;
    case ErrorKind::InvalidArgument:
      return kExitUsage;
  }
  return kExitUsage;
}

template <std::size_t N>
std::array<double, N> parse_tuple(const std::string& text, const std::string& flag) {
  std::array<double, N> out{};
  std::stringstream ss(text);
  std::string cell;
  std::size_t i = 0;
  while (std::getline(ss, cell, ',')) {
    if (i == N) break;
    try {
      std::size_t used = 0;
      out[i] = std::stod(cell, &used);
      if (used != cell.size()) throw std::invalid_argument(cell);
    } catch (const std::exception&) {
      throw UsageError(flag + ": not a number: '" + cell + "'");
    }
    ++i;
  }
  if (i != N || std::getline(ss, cell, ',')) {
    throw UsageError(flag + " expects " + std::to_string(N) + " comma-separated values");
  }
  return out;
}

// Everything a subcommand may consume. Defaults, then the config file, then
// explicit flags.
struct Settings {
  // terrain
  FitOptions fit;
  SynthKind synth = SynthKind::hills(1);
  double extent = 10.0;
  double spacing = 0.2;
  // vehicle
  VehicleGeometry geom;
  // stability
  double epsilon = 0.05;
  double w_theta = 0.05;
  bool use_stability = true;
  // planner
  PlannerConfig planner;
  int steps = 50;
  double horizon = 10.0;
  int order = 10;
  BoundaryState start{-3.0, 0.0, 0.6, 0.0, 0.0, 0.0};
  BoundaryState goal{3.0, 0.0, 0.6, 0.0, 0.0, 0.0};
  std::optional<Box> box;
  double patch_radius = 5.0;
  // cem
  CemConfig cem;

  PlannerConfig planner_config() const {
    PlannerConfig p = planner;
    p.use_stability = use_stability;
    p.stability = StabilityConfig::gravity(geom.mass, epsilon, w_theta);
    return p;
  }

  InstanceSpec instance_spec() const {
    InstanceSpec s;
    s.extent = extent;
    s.spacing = spacing;
    s.n_frequencies = fit.n_frequencies;
    s.n_steps = steps;
    s.horizon = horizon;
    s.order = order;
    s.start = start;
    s.goal = goal;
    return s;
  }
};

void reject_unknown(const json& j, std::initializer_list<const char*> keys, const std::string& what) {
  if (!j.is_object()) throw Error(ErrorKind::Parse, what + " must be a JSON object");
  for (const auto& [key, _] : j.items()) {
    if (std::find_if(keys.begin(), keys.end(), [&](const char* k) { return key == k; }) ==
        keys.end()) {
      throw Error(ErrorKind::Parse, "unknown key '" + key + "' in config section " + what);
    }
  }
}

template <class T>
void read_if(const json& j, const char* key, T& target) {
  if (j.contains(key)) target = j.at(key).get<T>();
}

SynthKind synth_kind(const std::string& name, double slope, double amplitude, double wavelength,
                     std::uint64_t seed) {
  if (name == "flat") return SynthKind::flat();
  if (name == "incline") return SynthKind::incline(slope);
  if (name == "sinusoidal") return SynthKind::sinusoidal(amplitude, wavelength);
  if (name == "hills") return SynthKind::hills(seed);
  throw UsageError("unknown terrain kind '" + name + "' (flat|incline|sinusoidal|hills)");
}

HessianMode hessian_mode(const std::string& name) {
  if (name == "exact") return HessianMode::Exact;
  if (name == "gauss-newton") return HessianMode::GaussNewton;
  throw UsageError("unknown hessian mode '" + name + "' (exact|gauss-newton)");
}

void apply_config(Settings& s, const json& doc) {
  reject_unknown(doc, {"terrain", "vehicle", "stability", "planner", "cem"}, "root");
  try {
    if (doc.contains("terrain")) {
      const json& t = doc["terrain"];
      reject_unknown(t, {"n_frequencies", "seed", "ridge", "omega_max", "extent", "spacing",
                         "kind", "slope", "amplitude", "wavelength", "synth_seed"},
                     "terrain");
      read_if(t, "n_frequencies", s.fit.n_frequencies);
      read_if(t, "seed", s.fit.seed);
      read_if(t, "ridge", s.fit.ridge);
      read_if(t, "omega_max", s.fit.omega_max);
      read_if(t, "extent", s.extent);
      read_if(t, "spacing", s.spacing);
      std::string kind = "hills";
      double slope = 0.0, amplitude = 0.1, wavelength = 2.0;
      std::uint64_t seed = s.synth.seed;
      read_if(t, "kind", kind);
      read_if(t, "slope", slope);
      read_if(t, "amplitude", amplitude);
      read_if(t, "wavelength", wavelength);
      read_if(t, "synth_seed", seed);
      s.synth = synth_kind(kind, slope, amplitude, wavelength, seed);
    }
    if (doc.contains("vehicle")) s.geom = io::geometry_from_json(doc["vehicle"]);
    if (doc.contains("stability")) {
      const json& st = doc["stability"];
      reject_unknown(st, {"epsilon", "w_theta", "enabled"}, "stability");
      read_if(st, "epsilon", s.epsilon);
      read_if(st, "w_theta", s.w_theta);
      read_if(st, "enabled", s.use_stability);
    }
    if (doc.contains("planner")) {
      const json& p = doc["planner"];
      reject_unknown(p, {"eta", "max_iters", "momentum", "tol", "max_halvings", "hessian", "steps",
                         "horizon", "order", "start", "goal", "box", "patch_radius",
                         "nls_max_iterations"},
                     "planner");
      read_if(p, "eta", s.planner.eta);
      read_if(p, "max_iters", s.planner.max_iters);
      read_if(p, "momentum", s.planner.momentum);
      read_if(p, "tol", s.planner.tol);
      read_if(p, "max_halvings", s.planner.max_halvings);
      read_if(p, "nls_max_iterations", s.planner.solver.max_iterations);
      if (p.contains("hessian")) s.planner.hessian = hessian_mode(p["hessian"].get<std::string>());
      read_if(p, "steps", s.steps);
      read_if(p, "horizon", s.horizon);
      read_if(p, "order", s.order);
      read_if(p, "start", s.start);
      read_if(p, "goal", s.goal);
      read_if(p, "patch_radius", s.patch_radius);
      if (p.contains("box")) {
        const auto b = p["box"].get<std::array<double, 4>>();
        s.box = Box{b[0], b[1], b[2], b[3]};
      }
    }
    if (doc.contains("cem")) {
      const json& c = doc["cem"];
      reject_unknown(c, {"batch_size", "elite_fraction", "n_iterations", "initial_std", "seed"},
                     "cem");
      read_if(c, "batch_size", s.cem.batch_size);
      read_if(c, "elite_fraction", s.cem.elite_fraction);
      read_if(c, "n_iterations", s.cem.n_iterations);
      read_if(c, "initial_std", s.cem.initial_std);
      read_if(c, "seed", s.cem.seed);
    }
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Parse, std::string("config: ") + e.what());
  }
}

// Raw flag values; unset ones leave the settings alone.
struct Flags {
  std::string config;
  std::string vehicle;
  std::optional<double> mass, w_theta, epsilon, eta, horizon, patch_radius;
  std::optional<int> iters, order, steps, batch, cem_iters;
  std::optional<std::string> start, goal, box, hessian;
  std::optional<std::size_t> n_freq;
  std::optional<std::uint64_t> seed;
  bool no_stability = false;
};

Settings resolve(const Flags& f) {
  Settings s;
  if (!f.config.empty()) apply_config(s, io::read_json_file(f.config));
  if (!f.vehicle.empty()) s.geom = io::geometry_from_json(io::read_json_file(f.vehicle));
  if (f.mass) s.geom.mass = *f.mass;
  if (f.w_theta) s.w_theta = *f.w_theta;
  if (f.epsilon) s.epsilon = *f.epsilon;
  if (f.eta) s.planner.eta = *f.eta;
  if (f.iters) s.planner.max_iters = *f.iters;
  if (f.order) s.order = *f.order;
  if (f.steps) s.steps = *f.steps;
  if (f.horizon) s.horizon = *f.horizon;
  if (f.patch_radius) s.patch_radius = *f.patch_radius;
  if (f.batch) s.cem.batch_size = *f.batch;
  if (f.cem_iters) s.cem.n_iterations = *f.cem_iters;
  if (f.n_freq) s.fit.n_frequencies = *f.n_freq;
  if (f.seed) s.cem.seed = *f.seed;
  if (f.start) s.start = parse_tuple<6>(*f.start, "--start");
  if (f.goal) s.goal = parse_tuple<6>(*f.goal, "--goal");
  if (f.box) {
    const auto b = parse_tuple<4>(*f.box, "--box");
    s.box = Box{b[0], b[1], b[2], b[3]};
  }
  if (f.hessian) s.planner.hessian = hessian_mode(*f.hessian);
  if (f.no_stability) s.use_stability = false;
  s.geom.validate();
  return s;
}

void add_common(CLI::App* cmd, Flags& f) {
  cmd->add_option("--config", f.config, "JSON config with sections terrain, vehicle, stability, "
                                        "planner, cem")
      ->check(CLI::ExistingFile);
}

void add_vehicle(CLI::App* cmd, Flags& f) {
  cmd->add_option("--vehicle", f.vehicle, "vehicle geometry JSON");
  cmd->add_option("--mass", f.mass, "vehicle mass [kg]")->check(CLI::PositiveNumber);
}

void add_planning(CLI::App* cmd, Flags& f) {
  add_vehicle(cmd, f);
  cmd->add_option("--w-theta", f.w_theta, "weight of the angle-difference term");
  cmd->add_option("--epsilon", f.epsilon, "tip-over margin [rad]");
  cmd->add_option("--eta", f.eta, "learning rate")->check(CLI::PositiveNumber);
  cmd->add_option("--iters", f.iters, "outer iterations")->check(CLI::PositiveNumber);
  cmd->add_option("--order", f.order, "polynomial order")->check(CLI::PositiveNumber);
  cmd->add_option("--steps", f.steps, "time steps")->check(CLI::PositiveNumber);
  cmd->add_option("--horizon", f.horizon, "horizon [s]")->check(CLI::PositiveNumber);
  cmd->add_option("--start", f.start, "x,y,vx,vy,ax,ay");
  cmd->add_option("--goal", f.goal, "x,y,vx,vy,ax,ay");
  cmd->add_option("--hessian", f.hessian, "exact|gauss-newton");
  cmd->add_option("--batch", f.batch, "CEM batch size")->check(CLI::PositiveNumber);
  cmd->add_option("--cem-iters", f.cem_iters, "CEM iterations")->check(CLI::PositiveNumber);
  cmd->add_option("--seed", f.seed, "random seed");
  cmd->add_flag("--no-stability", f.no_stability, "drop the stability cost");
}

int cmd_synth(const std::string& kind, double slope, double amplitude, double wavelength,
              std::uint64_t seed, double extent, double spacing, const std::string& out) {
  if (!(extent > 0.0) || !(spacing > 0.0)) throw UsageError("extent and spacing must be > 0");
  const auto cloud =
      synth_terrain(synth_kind(kind, slope, amplitude, wavelength, seed), extent, spacing);
  io::write_cloud_csv(out, cloud);
  std::printf("points %zu\n", cloud.points.size());
  return kExitOk;
}

int cmd_fit(const Flags& flags, const std::string& in, const std::string& out) {
  Settings s = resolve(flags);
  if (s.fit.n_frequencies < 1) throw UsageError("--n-freq must be >= 1");
  const auto cloud = io::read_cloud_csv(in);
  const auto t0 = std::chrono::steady_clock::now();
  const auto model = fit_terrain(cloud, s.fit);
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  io::save_terrain(out, model);
  std::printf("fit_rmse %.6e\nfit_time_s %.3f\n", model.fit_rmse, secs);
  return kExitOk;
}

int cmd_pose(const Flags& flags, const std::string& terrain_path, const std::string& state_text,
             bool with_jacobian) {
  const Settings s = resolve(flags);
  const auto st = parse_tuple<3>(state_text, "--state");
  const auto terrain = io::load_terrain(terrain_path);
  const YawState state{st[0], st[1], st[2]};
  const auto pose = solve_pose(state, s.geom, terrain, std::nullopt, s.planner.solver);
  json out = io::to_json(pose);
  out["state"] = st;
  if (with_jacobian) {
    out["jacobian"] = io::to_json(implicit_jacobian(state, pose, s.geom, terrain,
                                                    s.planner.hessian));
  }
  if (pose.residual_norm > kResidualWarning) {
    out["warning"] = "loop-closure residual " + std::to_string(pose.residual_norm) +
                     " exceeds " + std::to_string(kResidualWarning) +
                     "; the chassis cannot rest on all four contacts here";
  }
  std::cout << out.dump(2) << '\n';
  return kExitOk;
}

int cmd_plan(const Flags& flags, const std::string& terrain_path, const std::string& method,
             const std::string& out_prefix, bool plot_data) {
  const Settings s = resolve(flags);
  if (method != "gradient" && method != "cem") {
    throw UsageError("--method must be gradient or cem");
  }
  const auto terrain = io::load_terrain(terrain_path);
  const auto basis = build_basis(s.steps, s.horizon, s.order);
  const Box box = s.box.value_or(Box::inscribed_square(terrain.center, s.patch_radius));
  const auto constraints = assemble_constraints(s.start, s.goal, box, basis);
  const PlannerConfig cfg = s.planner_config();
  const PlanResult r = method == "gradient"
                           ? plan(terrain, s.geom, constraints, basis, cfg)
                           : plan_cem(terrain, s.geom, constraints, basis, s.cem, cfg);
  json summary = io::summary_json(r, method);
  summary["use_stability"] = s.use_stability;
  if (!out_prefix.empty()) {
    const auto rows = io::trajectory_rows(r, basis);
    io::write_trajectory_csv(out_prefix + "_trajectory.csv", rows);
    io::write_cost_trace_csv(out_prefix + "_cost_trace.csv", r.cost_trace);
    io::write_json_file(out_prefix + "_summary.json", summary);
    if (plot_data) io::write_plot_data_csv(out_prefix + "_plot.csv", rows);
  } else if (plot_data) {
    throw UsageError("--emit-plot-data needs --out");
  }
  std::cout << summary.dump(2) << '\n';
  return kExitOk;
}

int cmd_compare(const Flags& flags, int instances, std::uint64_t first_seed,
                const std::string& out_prefix) {
  const Settings s = resolve(flags);
  const auto set = make_instance_set(instances, first_seed, s.instance_spec());
  CemConfig cem = s.cem;
  const auto table = compare_methods(set, s.geom, s.planner_config(), cem);

  std::printf("%-10s %18s %16s %14s %14s\n", "method", "mean_worst_angle", "mean_final_cost",
              "mean_wall_s", "mean_nls_calls");
  json doc = json::array();
  for (const auto& m : table) {
    std::printf("%-10s %18.6f %16.6f %14.3f %14.0f\n", m.method.c_str(), m.mean_worst_angle(),
                m.mean_total(), m.mean_wall_time(), m.mean_nls_calls());
    json runs = json::array();
    for (const auto& r : m.runs) {
      runs.push_back({{"seed", r.seed},
                      {"final_cost", r.total},
                      {"worst_angle", r.worst_angle},
                      {"wall_time_s", r.wall_time_s},
                      {"nls_calls", r.nls_calls}});
    }
    doc.push_back({{"method", m.method},
                   {"mean_worst_angle", m.mean_worst_angle()},
                   {"mean_final_cost", m.mean_total()},
                   {"mean_wall_time_s", m.mean_wall_time()},
                   {"mean_nls_calls", m.mean_nls_calls()},
                   {"runs", runs}});
  }
  if (!out_prefix.empty()) io::write_json_file(out_prefix + "_compare.json", doc);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Terrain-aware trajectory optimization"};
  app.require_subcommand(1);
  Flags flags;

  // synth
  std::string synth_kind_name = "hills", synth_out;
  double synth_slope = 0.1, synth_amp = 0.1, synth_wl = 2.0, synth_extent = 10.0,
         synth_spacing = 0.2;
  std::uint64_t synth_seed = 1;
  auto* synth = app.add_subcommand("synth", "write a synthetic elevation cloud");
  synth->add_option("--kind", synth_kind_name, "flat|incline|sinusoidal|hills");
  synth->add_option("--slope", synth_slope, "incline slope");
  synth->add_option("--amplitude", synth_amp, "sinusoid amplitude [m]");
  synth->add_option("--wavelength", synth_wl, "sinusoid wavelength [m]");
  synth->add_option("--seed", synth_seed, "hills seed");
  synth->add_option("--extent", synth_extent, "side of the sampled square [m]");
  synth->add_option("--spacing", synth_spacing, "grid spacing [m]");
  synth->add_option("--out", synth_out, "output CSV")->required();

  // fit
  std::string fit_in, fit_out;
  auto* fit = app.add_subcommand("fit", "fit a Fourier terrain model to an elevation cloud");
  add_common(fit, flags);
  fit->add_option("--in", fit_in, "cloud CSV (x,y,z)")->required();
  fit->add_option("--out", fit_out, "model JSON")->required();
  fit->add_option("--n-freq", flags.n_freq, "number of frequency pairs")
      ->check(CLI::PositiveNumber);

  // pose
  std::string pose_terrain, pose_state;
  bool pose_jacobian = false;
  auto* pose = app.add_subcommand("pose", "solve the chassis pose at one state");
  add_common(pose, flags);
  add_vehicle(pose, flags);
  pose->add_option("--terrain", pose_terrain, "model JSON")->required();
  pose->add_option("--state", pose_state, "x,y,alpha")->required();
  pose->add_flag("--jacobian", pose_jacobian, "include the 15x3 implicit Jacobian");
  pose->add_option("--hessian", flags.hessian, "exact|gauss-newton");

  // plan
  std::string plan_terrain, plan_method = "gradient", plan_out;
  bool plan_plot = false;
  auto* plan_cmd = app.add_subcommand("plan", "optimize one trajectory");
  add_common(plan_cmd, flags);
  add_planning(plan_cmd, flags);
  plan_cmd->add_option("--terrain", plan_terrain, "model JSON")->required();
  plan_cmd->add_option("--method", plan_method, "gradient|cem");
  plan_cmd->add_option("--box", flags.box, "x_min,x_max,y_min,y_max");
  plan_cmd->add_option("--patch-radius", flags.patch_radius,
                       "box = inscribed square of this radius around the terrain center")
      ->check(CLI::PositiveNumber);
  plan_cmd->add_option("--out", plan_out, "output prefix");
  plan_cmd->add_flag("--emit-plot-data", plan_plot, "also write long-format plot CSV");

  // compare
  int cmp_instances = 10;
  std::uint64_t cmp_seed = 1;
  std::string cmp_out;
  auto* compare = app.add_subcommand("compare", "gradient vs CEM-100 vs CEM-20 on seeded hills");
  add_common(compare, flags);
  add_planning(compare, flags);
  compare->remove_option(compare->get_option("--batch"));
  compare->remove_option(compare->get_option("--seed"));
  compare->add_option("--instances", cmp_instances, "number of terrains")
      ->check(CLI::PositiveNumber);
  compare->add_option("--seed", cmp_seed, "first terrain seed");
  compare->add_option("--out", cmp_out, "output prefix");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  }

  try {
    if (*synth) {
      return cmd_synth(synth_kind_name, synth_slope, synth_amp, synth_wl, synth_seed,
                       synth_extent, synth_spacing, synth_out);
    }
    if (*fit) return cmd_fit(flags, fit_in, fit_out);
    if (*pose) return cmd_pose(flags, pose_terrain, pose_state, pose_jacobian);
    if (*plan_cmd) return cmd_plan(flags, plan_terrain, plan_method, plan_out, plan_plot);
    if (*compare) return cmd_compare(flags, cmp_instances, cmp_seed, cmp_out);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code(e.kind());
  }
  return kExitUsage;
}
