#include "krf/flow.hpp"

#include <cmath>
#include <typeinfo>

#include <fmt/format.h>

#include "krf/errors.hpp"

namespace krf {

namespace {

constexpr double kMinDt = 1e-14;

double axis_gain(const Axis& axis, int order) {
  const double k = axis.kind() == AxisKind::Sphere ? 8.0 : 4.0;
  return (order == 4 ? k * 4.0 / 3.0 : k) / (axis.spacing() * axis.spacing());
}

std::string error_kind(const Error& e) {
  if (dynamic_cast<const PositivityLoss*>(&e)) return "PositivityLoss";
  if (dynamic_cast<const StepSizeUnderflow*>(&e)) return "StepSizeUnderflow";
  if (dynamic_cast<const MaxStepsExceeded*>(&e)) return "MaxStepsExceeded";
  if (dynamic_cast<const OutOfRange*>(&e)) return "OutOfRange";
  return "Error";
}

}  // namespace

void validate(const StepSchedule& s) {
  if (!(s.cfl_safety > 0.0 && s.cfl_safety <= 0.9))
    throw ConfigError(fmt::format("cfl_safety must lie in (0, 0.9], got {}", s.cfl_safety));
  if (!(s.eps_stop > 0.0)) throw ConfigError(fmt::format("eps_stop must be positive, got {}", s.eps_stop));
  if (s.snapshot_stride < 1) throw ConfigError("snapshot_stride must be at least 1");
  if (s.max_steps < 1) throw ConfigError("max_steps must be at least 1");
  if (!(s.dt_max > 0.0)) throw ConfigError("dt_max must be positive");
}

std::string to_string(Integrator i) { return i == Integrator::RK4 ? "rk4" : "rk2"; }

Integrator parse_integrator(const std::string& s) {
  if (s == "rk2") return Integrator::RK2;
  if (s == "rk4") return Integrator::RK4;
  throw ConfigError(fmt::format("unknown integrator '{}' (expected rk2 or rk4)", s));
}

Field cma_rhs(const Model& model, const ReferenceVolume& omega, const Field& phi, double t, MetricField* metric_out) {
  MetricField g = assemble_metric(model, phi, t);
  const double log_e = std::log(e_factor(t, model.cls.T));
  Field r = (2.0 * g.det).log() - log_e - omega.log_density - phi;
  if (metric_out) *metric_out = std::move(g);
  return r;
}

FlowState make_state(const Model& model, const ReferenceVolume& omega, Field phi, double t) {
  FlowState s;
  s.t = t;
  s.rhs = cma_rhs(model, omega, phi, t, &s.metric);
  s.phi = std::move(phi);
  return s;
}

double stable_dt(const Model& model, const MetricField& g, const StepSchedule& schedule) {
  const int order = model.order();
  const double kf = axis_gain(model.fibre, order);
  const double kb = axis_gain(model.base, order);
  const double kx = (order == 4 ? 1.9 : 1.0) / (model.fibre.spacing() * model.base.spacing());
  const Field bound = (g.bb * kf + g.ff * kb + 2.0 * g.fb.abs() * kx) / g.det;
  return schedule.cfl_safety / bound.maxCoeff();
}

FlowState step(const Model& model, const ReferenceVolume& omega, const FlowState& s, const StepSchedule& schedule,
               double t_end) {
  double dt = std::min({stable_dt(model, s.metric, schedule), schedule.dt_max, t_end - s.t});
  for (;;) {
    if (dt < kMinDt)
      throw StepSizeUnderflow(fmt::format("step size {:.3e} below {:.0e} at t = {:.10g}", dt, kMinDt, s.t));
    try {
      Field next;
      if (schedule.integrator == Integrator::RK2) {
        const Field k1 = s.rhs;
        const Field k2 = cma_rhs(model, omega, s.phi + dt * k1, s.t + dt);
        next = s.phi + 0.5 * dt * (k1 + k2);
      } else {
        const Field& k1 = s.rhs;
        const Field k2 = cma_rhs(model, omega, s.phi + 0.5 * dt * k1, s.t + 0.5 * dt);
        const Field k3 = cma_rhs(model, omega, s.phi + 0.5 * dt * k2, s.t + 0.5 * dt);
        const Field k4 = cma_rhs(model, omega, s.phi + dt * k3, s.t + dt);
        next = s.phi + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
      }
      const double t_next = (t_end - s.t - dt) < 1e-15 ? t_end : s.t + dt;
      FlowState out = make_state(model, omega, std::move(next), t_next);
      out.dt_last = dt;
      return out;
    } catch (const PositivityLoss&) {
      dt *= 0.5;
    }
  }
}

SnapshotSeries run(const Model& model, const ReferenceVolume& omega, const StepSchedule& schedule,
                   const Snapshot* resume, const SnapshotCallback& on_snapshot) {
  validate(schedule);
  SnapshotSeries series;
  series.schedule = schedule;
  const double t_end = model.cls.T - schedule.eps_stop;
  if (!(t_end > 0.0))
    throw ConfigError(fmt::format("eps_stop = {} is not below the singular time {}", schedule.eps_stop, model.cls.T));

  auto record = [&](const FlowState& st, long index) {
    Snapshot snap{st.t, st.dt_last, index, st.phi, st.rhs};
    series.positivity_margin.push_back(st.metric.min_eigen().minCoeff());
    if (on_snapshot) on_snapshot(snap);
    series.snapshots.push_back(std::move(snap));
  };

  FlowState state;
  long index = 0;
  try {
    if (resume) {
      state = make_state(model, omega, resume->phi, resume->t);
      state.dt_last = resume->dt;
      index = resume->step_index;
    } else {
      state = make_state(model, omega, Field::Zero(model.rows(), model.cols()), 0.0);
    }
    record(state, index);
    while (state.t < t_end) {
      if (series.steps >= schedule.max_steps)
        throw MaxStepsExceeded(fmt::format("reached max_steps = {} at t = {:.10g}", schedule.max_steps, state.t));
      state = step(model, omega, state, schedule, t_end);
      ++series.steps;
      ++index;
      series.dt_history.push_back(state.dt_last);
      if (index % schedule.snapshot_stride == 0 || state.t >= t_end) record(state, index);
    }
    series.completed = true;
  } catch (const Error& e) {
    series.failure_kind = error_kind(e);
    series.failure = e.what();
  }
  return series;
}

}  // namespace krf
