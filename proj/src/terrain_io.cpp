#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "terrainopt/io.hpp"

namespace terrainopt::io {

namespace {

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) {
    while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' ')) cell.pop_back();
    while (!cell.empty() && cell.front() == ' ') cell.erase(cell.begin());
    out.push_back(cell);
  }
  return out;
}

double parse_double(const std::string& s, const std::filesystem::path& path, std::size_t line) {
  double v = 0.0;
  const auto* end = s.data() + s.size();
  const auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || ptr != end) {
    throw Error(ErrorKind::Parse, path.string() + ":" + std::to_string(line) +
                                      ": not a number: '" + s + "'");
  }
  return v;
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
  return in;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
  out.precision(17);
  return out;
}

// Reads a CSV with the exact header `expected`; returns numeric rows.
std::vector<std::vector<double>> read_numeric_csv(const std::filesystem::path& path,
                                                  const std::vector<std::string>& expected) {
  std::ifstream in = open_in(path);
  std::string line;
  if (!std::getline(in, line) || split(line) != expected) {
    std::string want;
    for (const auto& h : expected) want += (want.empty() ? "" : ",") + h;
    throw Error(ErrorKind::Parse, path.string() + ": expected header '" + want + "'");
  }
  std::vector<std::vector<double>> rows;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    const auto cells = split(line);
    if (cells.size() != expected.size()) {
      throw Error(ErrorKind::Parse, path.string() + ":" + std::to_string(lineno) + ": expected " +
                                        std::to_string(expected.size()) + " columns");
    }
    std::vector<double> row;
    row.reserve(cells.size());
    for (const auto& c : cells) row.push_back(parse_double(c, path, lineno));
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace

ElevationCloud read_cloud_csv(const std::filesystem::path& path) {
  const auto rows = read_numeric_csv(path, {"x", "y", "z"});
  ElevationCloud cloud;
  cloud.points.reserve(rows.size());
  double xmin = INFINITY, xmax = -INFINITY, ymin = INFINITY, ymax = -INFINITY;
  for (const auto& r : rows) {
    cloud.points.push_back({r[0], r[1], r[2]});
    xmin = std::min(xmin, r[0]);
    xmax = std::max(xmax, r[0]);
    ymin = std::min(ymin, r[1]);
    ymax = std::max(ymax, r[1]);
  }
  if (!cloud.points.empty()) {
    cloud.patch_center = {(xmin + xmax) / 2.0, (ymin + ymax) / 2.0};
    for (const auto& p : cloud.points) {
      cloud.patch_radius = std::max(
          cloud.patch_radius, std::hypot(p.x - cloud.patch_center.x, p.y - cloud.patch_center.y));
    }
  }
  return cloud;
}

void write_cloud_csv(const std::filesystem::path& path, const ElevationCloud& cloud) {
  std::ofstream out = open_out(path);
  out << "x,y,z\n";
  for (const auto& p : cloud.points) out << p.x << ',' << p.y << ',' << p.z << '\n';
}

std::vector<TrajectoryRow> trajectory_rows(const PlanResult& result, const BasisMatrices& basis) {
  std::vector<TrajectoryRow> rows(result.states.size());
  for (std::size_t k = 0; k < rows.size(); ++k) {
    rows[k] = {basis.times[static_cast<Eigen::Index>(k)],
               result.states[k].x,
               result.states[k].y,
               result.poses[k].z,
               result.states[k].alpha,
               result.poses[k].beta,
               result.poses[k].gamma,
               result.reports[k].cost,
               result.reports[k].min_angle};
  }
  return rows;
}

void write_trajectory_csv(const std::filesystem::path& path,
                          const std::vector<TrajectoryRow>& rows) {
  std::ofstream out = open_out(path);
  out << "t,x,y,z,alpha,beta,gamma,c_s,theta_min\n";
  for (const auto& r : rows) {
    out << r.t << ',' << r.x << ',' << r.y << ',' << r.z << ',' << r.alpha << ',' << r.beta << ','
        << r.gamma << ',' << r.c_s << ',' << r.theta_min << '\n';
  }
}

std::vector<TrajectoryRow> read_trajectory_csv(const std::filesystem::path& path) {
  const auto rows =
      read_numeric_csv(path, {"t", "x", "y", "z", "alpha", "beta", "gamma", "c_s", "theta_min"});
  std::vector<TrajectoryRow> out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.push_back({r[0], r[1], r[2], r[3], r[4], r[5], r[6], r[7], r[8]});
  return out;
}

void write_cost_trace_csv(const std::filesystem::path& path, const std::vector<double>& trace) {
  std::ofstream out = open_out(path);
  out << "iteration,cost\n";
  for (std::size_t i = 0; i < trace.size(); ++i) out << i << ',' << trace[i] << '\n';
}

std::vector<double> read_cost_trace_csv(const std::filesystem::path& path) {
  const auto rows = read_numeric_csv(path, {"iteration", "cost"});
  std::vector<double> out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.push_back(r[1]);
  return out;
}

void write_plot_data_csv(const std::filesystem::path& path,
                         const std::vector<TrajectoryRow>& rows) {
  std::ofstream out = open_out(path);
  out << "series,t,value\n";
  const auto emit = [&](const char* name, auto field) {
    for (const auto& r : rows) out << name << ',' << r.t << ',' << field(r) << '\n';
  };
  emit("x", [](const TrajectoryRow& r) { return r.x; });
  emit("y", [](const TrajectoryRow& r) { return r.y; });
  emit("z", [](const TrajectoryRow& r) { return r.z; });
  emit("alpha", [](const TrajectoryRow& r) { return r.alpha; });
  emit("beta", [](const TrajectoryRow& r) { return r.beta; });
  emit("gamma", [](const TrajectoryRow& r) { return r.gamma; });
  emit("c_s", [](const TrajectoryRow& r) { return r.c_s; });
  emit("theta_min", [](const TrajectoryRow& r) { return r.theta_min; });
}

}  // namespace terrainopt::io
