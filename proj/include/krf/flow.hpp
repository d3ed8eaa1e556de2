#pragma once

#include <functional>
#include <string>
#include <vector>

#include "krf/cohomology.hpp"
#include "krf/grid.hpp"
#include "krf/models.hpp"

namespace krf {

enum class Integrator { RK2, RK4 };

struct StepSchedule {
  double cfl_safety = 0.5;
  // Final gap T - t_end (absolute time units).
  double eps_stop = 1e-3;
  int snapshot_stride = 20;
  long max_steps = 2'000'000;
  double dt_max = 1e-2;
  Integrator integrator = Integrator::RK2;
};

void validate(const StepSchedule& s);

std::string to_string(Integrator i);
Integrator parse_integrator(const std::string& s);

struct FlowState {
  double t = 0.0;
  Field phi;
  MetricField metric;
  // d phi / dt evaluated from the equation at (phi, t).
  Field rhs;
  double dt_last = 0.0;
};

// log(2 det / (E D_Omega)) - phi. Writes the assembled metric if asked.
Field cma_rhs(const Model& model, const ReferenceVolume& omega, const Field& phi, double t,
              MetricField* metric_out = nullptr);

FlowState make_state(const Model& model, const ReferenceVolume& omega, Field phi, double t);

// Explicit step bound from a Gershgorin estimate of the linearized operator.
double stable_dt(const Model& model, const MetricField& metric, const StepSchedule& schedule);

// One explicit step, never past t_end. Halves the step on positivity loss.
FlowState step(const Model& model, const ReferenceVolume& omega, const FlowState& state,
               const StepSchedule& schedule, double t_end);

struct Snapshot {
  double t = 0.0;
  double dt = 0.0;
  long step_index = 0;
  Field phi;
  Field rhs;
};

struct SnapshotSeries {
  std::vector<Snapshot> snapshots;
  StepSchedule schedule;
  long steps = 0;
  std::vector<double> dt_history;
  // Smallest metric eigenvalue seen at each stored snapshot.
  std::vector<double> positivity_margin;
  bool completed = false;
  // Error class name and message when the run stopped early.
  std::string failure_kind;
  std::string failure;
};

using SnapshotCallback = std::function<void(const Snapshot&)>;

// Integrates from t = 0 (or from resume) to T - eps_stop. Errors are caught
// and reported in the returned series.
SnapshotSeries run(const Model& model, const ReferenceVolume& omega, const StepSchedule& schedule,
                   const Snapshot* resume = nullptr, const SnapshotCallback& on_snapshot = {});

}  // namespace krf
