#include "terrainopt/experiment.hpp"

#include <numeric>

namespace terrainopt {

namespace {

template <class F>
double mean_of(const std::vector<MethodRun>& runs, F field) {
  if (runs.empty()) return 0.0;
  double s = 0.0;
  for (const auto& r : runs) s += field(r);
  return s / static_cast<double>(runs.size());
}

MethodRun summarize(std::uint64_t seed, const PlanResult& r) {
  return {seed, r.total, r.min_tipover_angle, r.wall_time_s, r.nls_calls};
}

}  // namespace

PlanningInstance make_hills_instance(std::uint64_t seed, const InstanceSpec& spec) {
  PlanningInstance in;
  in.seed = seed;
  FitOptions fit;
  fit.n_frequencies = spec.n_frequencies;
  in.terrain = fit_terrain(synth_terrain(SynthKind::hills(seed), spec.extent, spec.spacing), fit);
  in.basis = build_basis(spec.n_steps, spec.horizon, spec.order);
  in.constraints = assemble_constraints(spec.start, spec.goal,
                                        Box::inscribed_square({0.0, 0.0}, spec.extent / 2.0),
                                        in.basis);
  return in;
}

std::vector<PlanningInstance> make_instance_set(int count, std::uint64_t first_seed,
                                                const InstanceSpec& spec) {
  std::vector<PlanningInstance> out;
  out.reserve(static_cast<std::size_t>(std::max(count, 0)));
  for (int i = 0; i < count; ++i) out.push_back(make_hills_instance(first_seed + i, spec));
  return out;
}

double MethodSummary::mean_total() const {
  return mean_of(runs, [](const MethodRun& r) { return r.total; });
}
double MethodSummary::mean_worst_angle() const {
  return mean_of(runs, [](const MethodRun& r) { return r.worst_angle; });
}
double MethodSummary::mean_wall_time() const {
  return mean_of(runs, [](const MethodRun& r) { return r.wall_time_s; });
}
double MethodSummary::mean_nls_calls() const {
  return mean_of(runs, [](const MethodRun& r) { return static_cast<double>(r.nls_calls); });
}

std::vector<MethodSummary> compare_methods(const std::vector<PlanningInstance>& instances,
                                           const VehicleGeometry& geom,
                                           const PlannerConfig& planner, const CemConfig& cem) {
  std::vector<MethodSummary> table{{"gradient", {}}, {"cem-100", {}}, {"cem-20", {}}};
  for (const auto& in : instances) {
    table[0].runs.push_back(
        summarize(in.seed, plan(in.terrain, geom, in.constraints, in.basis, planner)));
    for (int m = 1; m <= 2; ++m) {
      CemConfig c = cem;
      c.batch_size = m == 1 ? 100 : 20;
      c.seed = cem.seed + in.seed;
      table[m].runs.push_back(
          summarize(in.seed, plan_cem(in.terrain, geom, in.constraints, in.basis, c, planner)));
    }
  }
  return table;
}

}  // namespace terrainopt
