#pragma once

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "krf/cohomology.hpp"
#include "krf/flow.hpp"
#include "krf/models.hpp"

namespace krf {

// Named scalar time series sampled at snapshot times. Column order is the
// insertion order, which is also the CSV order.
class ObservableSeries {
 public:
  std::vector<double> t;
  std::vector<double> E;

  bool has(const std::string& name) const { return columns_.count(name) != 0; }
  const std::vector<double>& get(const std::string& name) const;
  void set(const std::string& name, std::vector<double> values);
  void push(const std::string& name, double value);
  const std::vector<std::string>& names() const { return order_; }
  std::size_t size() const { return t.size(); }

  std::string to_csv() const;
  static ObservableSeries from_csv(const std::string& text);

 private:
  std::map<std::string, std::vector<double>> columns_;
  std::vector<std::string> order_;
};

// Potential-level limit candidates (1 - e^{-T}) f*rho'_B for the two
// constructions of G'. Empty fields mean "not available".
struct LimitTargets {
  Field spr;
  Field ske;
  bool has_spr() const { return spr.size() > 0; }
  bool has_ske() const { return ske.size() > 0; }
};

// Ricci potential (1 - e^{t-T}) d phi/dt + phi.
Field ricci_potential(const Model& model, const Snapshot& s);

std::pair<double, double> volume_ratio(const Model& model, const ReferenceVolume& omega, const MetricField& g,
                                       double t);
double total_volume(const Model& model, const MetricField& g);

// Surrogate diameter of the fibre over base node b: the larger of the
// pole-to-pole meridian length and half the longest invariant circle.
double fibre_diameter(const Model& model, const MetricField& g, int b);
// Largest fibre surrogate plus a base surrogate (base meridian on the
// sphere; half the torus diagonal on the flat base).
double region_diameter(const Model& model, const MetricField& g);

// R from the Ricci form -i d dbar log(omega^2).
Field scalar_curvature_direct(const Model& model, const MetricField& g);
// R from (1 - e^{t-T}) R = n e^{t-T} - tr f*eta - Delta u.
Field scalar_curvature_decomposed(const Model& model, const MetricField& g, const Field& u, double t);

struct Traces {
  double tr_eta_sup = 0.0;
  double e_tr_omega0_sup = 0.0;
  double eig_ratio_min = 0.0;
  double eig_ratio_max = 0.0;
};

Field trace_eta(const Model& model, const MetricField& g);
Traces traces(const Model& model, const MetricField& g, double t);

// Fibre average against omega_0 restricted to each fibre (1 x n_base).
Field fibre_average(const Model& model, const Field& f);
double fibre_average_deviation(const Model& model, const Field& f);

struct VConfig {
  double A = 1.0;
  // Additive constant removed from u - target before forming v.
  double c_star = 0.0;
  Field target;
};

struct LiYau {
  double grad_over_v_sup = 0.0;
  double lap_sup = 0.0;
  double lap_inf = 0.0;
  double v_min = 0.0;
  double v_max = 0.0;
};

Field v_field(const Model& model, const Field& u, double t, const VConfig& cfg);
LiYau v_and_liyau(const Model& model, const MetricField& g, const Field& u, double t, const VConfig& cfg);

// sup |du/dt - Delta u + m - tr f*eta| from two snapshots, time derivative
// by the difference quotient and spatial terms averaged over both ends.
double heat_residual_u(const Model& model, const ReferenceVolume& omega, const Snapshot& s1, const Snapshot& s2);

// One row per snapshot. With targets, adds distance columns to the limit
// candidates.
ObservableSeries measure_series(const Model& model, const ReferenceVolume& omega,
                                const std::vector<Snapshot>& snapshots, const LimitTargets& targets);

// Picks A so that A E <= v <= 3 A E on every snapshot and appends the v and
// Li-Yau columns. Throws VPositivityFailure if v is not positive.
VConfig add_liyau_columns(ObservableSeries& series, const Model& model, const ReferenceVolume& omega,
                          const std::vector<Snapshot>& snapshots, const Field& target, double c_star);

}  // namespace krf

namespace krf {

// Every column name measure_series / add_liyau_columns can produce.
const std::vector<std::string>& observable_keys();

}  // namespace krf
