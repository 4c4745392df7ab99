#include <fstream>
#include <set>

#include "terrainopt/io.hpp"

namespace terrainopt::io {

namespace {

void reject_unknown(const json& j, const std::set<std::string>& allowed, const char* what) {
  if (!j.is_object()) throw Error(ErrorKind::Parse, std::string(what) + " must be a JSON object");
  for (const auto& [key, _] : j.items()) {
    if (!allowed.count(key)) {
      throw Error(ErrorKind::Parse, std::string("unknown key '") + key + "' in " + what);
    }
  }
}

template <class F>
auto parse_guard(F&& f) {
  try {
    return f();
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Parse, e.what());
  }
}

}  // namespace

json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
  return parse_guard([&] { return json::parse(in); });
}

void write_json_file(const std::filesystem::path& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
  out << j.dump(2) << '\n';
}

json to_json(const TerrainModel& model) {
  json freqs = json::array();
  json weights = json::array();
  for (std::size_t n = 0; n < model.size(); ++n) {
    const auto& f = model.frequencies[n];
    freqs.push_back({f.w1, f.w2, f.w3, f.w4});
    weights.push_back({model.weights[n].a, model.weights[n].b});
  }
  return {{"n", model.size()},
          {"center", {model.center.x, model.center.y}},
          {"frequencies", freqs},
          {"weights", weights},
          {"fit_rmse", model.fit_rmse}};
}

TerrainModel terrain_from_json(const json& j) {
  reject_unknown(j, {"n", "center", "frequencies", "weights", "fit_rmse"}, "terrain model");
  return parse_guard([&] {
    TerrainModel m;
    const auto center = j.at("center").get<std::vector<double>>();
    if (center.size() != 2) throw Error(ErrorKind::Parse, "center must have 2 entries");
    m.center = {center[0], center[1]};
    for (const auto& f : j.at("frequencies")) {
      const auto v = f.get<std::vector<double>>();
      if (v.size() != 4) throw Error(ErrorKind::Parse, "frequency entries need 4 values");
      m.frequencies.push_back({v[0], v[1], v[2], v[3]});
    }
    for (const auto& w : j.at("weights")) {
      const auto v = w.get<std::vector<double>>();
      if (v.size() != 2) throw Error(ErrorKind::Parse, "weight entries need 2 values");
      m.weights.push_back({v[0], v[1]});
    }
    if (j.at("n").get<std::size_t>() != m.frequencies.size()) {
      throw Error(ErrorKind::Parse, "'n' does not match the frequency count");
    }
    m.fit_rmse = j.value("fit_rmse", 0.0);
    m.validate();
    return m;
  });
}

TerrainModel load_terrain(const std::filesystem::path& path) {
  return terrain_from_json(read_json_file(path));
}

void save_terrain(const std::filesystem::path& path, const TerrainModel& model) {
  write_json_file(path, to_json(model));
}

json to_json(const VehicleGeometry& g) {
  return {{"h", g.h},
          {"w", g.w},
          {"legs", g.legs},
          {"mass", g.mass},
          {"com_offset", g.com_offset}};
}

VehicleGeometry geometry_from_json(const json& j) {
  reject_unknown(j, {"h", "w", "legs", "mass", "com_offset"}, "vehicle");
  return parse_guard([&] {
    VehicleGeometry g;
    g.h = j.value("h", g.h);
    g.w = j.value("w", g.w);
    if (j.contains("legs")) g.legs = j.at("legs").get<std::array<double, 4>>();
    g.mass = j.value("mass", g.mass);
    if (j.contains("com_offset")) g.com_offset = j.at("com_offset").get<std::array<double, 3>>();
    g.validate();
    return g;
  });
}

json to_json(const PoseSolution& pose) {
  json contacts = json::array();
  for (const auto& c : pose.contacts) contacts.push_back({c.x, c.y, c.z});
  return {{"z", pose.z},
          {"beta", pose.beta},
          {"gamma", pose.gamma},
          {"contacts", contacts},
          {"residual_norm", pose.residual_norm},
          {"converged", pose.converged},
          {"iterations", pose.iterations}};
}

PoseSolution pose_from_json(const json& j) {
  return parse_guard([&] {
    PoseSolution p;
    p.z = j.at("z").get<double>();
    p.beta = j.at("beta").get<double>();
    p.gamma = j.at("gamma").get<double>();
    const auto& c = j.at("contacts");
    if (c.size() != 4) throw Error(ErrorKind::Parse, "pose needs 4 contacts");
    for (int i = 0; i < 4; ++i) {
      const auto v = c[i].get<std::array<double, 3>>();
      p.contacts[i] = {v[0], v[1], v[2]};
    }
    p.residual_norm = j.at("residual_norm").get<double>();
    p.converged = j.at("converged").get<bool>();
    p.iterations = j.at("iterations").get<int>();
    return p;
  });
}

json to_json(const ImplicitJacobian& jac) {
  json rows = json::array();
  for (int r = 0; r < kPoseDim; ++r) {
    rows.push_back({jac.matrix(r, 0), jac.matrix(r, 1), jac.matrix(r, 2)});
  }
  return {{"matrix", rows}, {"conditioning", jac.conditioning}};
}

json to_json(const StabilityReport& r) {
  const auto vecs = [](const std::array<Eigen::Vector3d, 4>& v) {
    json out = json::array();
    for (const auto& e : v) out.push_back({e.x(), e.y(), e.z()});
    return out;
  };
  return {{"axes", vecs(r.axes)},
          {"normals", vecs(r.normals)},
          {"force_components", vecs(r.force_components)},
          {"angles", r.angles},
          {"signs", r.signs},
          {"cost", r.cost},
          {"min_angle", r.min_angle}};
}

json summary_json(const PlanResult& result, const std::string& method) {
  return {{"method", method},
          {"cost_r", result.cost_r},
          {"cost_s_total", result.cost_s},
          {"total_cost", result.total},
          {"min_tipover_angle", result.min_tipover_angle},
          {"iterations", result.iterations},
          {"converged", result.converged},
          {"wall_time_s", result.wall_time_s},
          {"nls_calls", result.nls_calls},
          {"zero_velocity_heading", result.zero_velocity_heading}};
}

}  // namespace terrainopt::io
