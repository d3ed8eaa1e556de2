#include "krf/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include <fmt/format.h>

#include "krf/elliptic.hpp"
#include "krf/errors.hpp"

namespace krf {

namespace {

constexpr double kPi = std::numbers::pi;

double decay(double t, double T) { return std::exp(t - T); }

// Trapezoid of node values along an axis in its own coordinate.
double line_integral(const Eigen::ArrayXd& f, const Axis& axis) {
  const double h = axis.spacing();
  if (axis.kind() == AxisKind::Periodic) return h * f.sum();
  return h * (f.sum() - 0.5 * (f(0) + f(f.size() - 1)));
}

}  // namespace

const std::vector<double>& ObservableSeries::get(const std::string& name) const {
  auto it = columns_.find(name);
  if (it == columns_.end()) throw MissingSeries(fmt::format("series '{}' is not available", name));
  return it->second;
}

void ObservableSeries::set(const std::string& name, std::vector<double> values) {
  if (!has(name)) order_.push_back(name);
  columns_[name] = std::move(values);
}

void ObservableSeries::push(const std::string& name, double value) {
  if (!has(name)) {
    order_.push_back(name);
    columns_[name] = {};
  }
  columns_[name].push_back(value);
}

std::string ObservableSeries::to_csv() const {
  std::string out = "t,E";
  for (const auto& n : order_) out += "," + n;
  out += "\n";
  for (std::size_t i = 0; i < t.size(); ++i) {
    out += fmt::format("{:.17g},{:.17g}", t[i], E[i]);
    for (const auto& n : order_) {
      const auto& col = columns_.at(n);
      out += i < col.size() ? fmt::format(",{:.17g}", col[i]) : ",";
    }
    out += "\n";
  }
  return out;
}

ObservableSeries ObservableSeries::from_csv(const std::string& text) {
  ObservableSeries s;
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw MissingSeries("empty series file");
  std::vector<std::string> header;
  {
    std::istringstream hs(line);
    std::string cell;
    while (std::getline(hs, cell, ',')) header.push_back(cell);
  }
  if (header.size() < 2 || header[0] != "t" || header[1] != "E") throw MissingSeries("series header must start with t,E");
  std::vector<std::vector<double>> cols(header.size());
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string cell;
    std::size_t k = 0;
    while (std::getline(ls, cell, ',') && k < cols.size()) {
      if (!cell.empty()) cols[k].push_back(std::stod(cell));
      ++k;
    }
  }
  s.t = cols[0];
  s.E = cols[1];
  for (std::size_t k = 2; k < header.size(); ++k) s.set(header[k], cols[k]);
  return s;
}

Field ricci_potential(const Model& model, const Snapshot& s) {
  return (1.0 - decay(s.t, model.cls.T)) * s.rhs + s.phi;
}

std::pair<double, double> volume_ratio(const Model& model, const ReferenceVolume& omega, const MetricField& g,
                                       double t) {
  const Field r = 2.0 * g.det / (e_factor(t, model.cls.T) * omega.density);
  return {r.minCoeff(), r.maxCoeff()};
}

double total_volume(const Model& model, const MetricField& g) {
  const double two_pi = 2.0 * kPi;
  return two_pi * two_pi * integrate_grid(2.0 * g.det, model.fibre, model.base);
}

double fibre_diameter(const Model& model, const MetricField& g, int b) {
  const Eigen::ArrayXd ff = g.ff.col(b);
  const double meridian = line_integral((ff / 2.0).sqrt(), model.fibre);
  const Eigen::ArrayXd circle = 0.5 * kPi * (2.0 * ff).sqrt() * model.fibre.coords().sin();
  return std::max(meridian, circle.maxCoeff());
}

double region_diameter(const Model& model, const MetricField& g) {
  double fibre = 0.0;
  for (int b = 0; b < model.cols(); ++b) fibre = std::max(fibre, fibre_diameter(model, g, b));
  double base = 0.0;
  if (model.sphere_base()) {
    for (int i = 0; i < model.rows(); ++i)
      base = std::max(base, line_integral((g.bb.row(i).transpose() / 2.0).sqrt(), model.base));
  } else {
    for (int i = 0; i < model.rows(); ++i) {
      const Eigen::ArrayXd bb = g.bb.row(i).transpose();
      const double ls = line_integral((bb / 2.0).sqrt(), model.base);
      const double la = 2.0 * kPi * (2.0 * bb).sqrt().mean();
      base = std::max(base, 0.5 * std::hypot(ls, la));
    }
  }
  return fibre + base;
}

Field scalar_curvature_direct(const Model& model, const MetricField& g) {
  const Field lap = laplacian(model, g, g.det.log());
  return -lap + model.ricci_ref_ff() * g.inv_ff() + model.ricci_ref_bb() * g.inv_bb();
}

Field trace_eta(const Model& model, const MetricField& g) { return model.cls.base_limit_coeff * g.inv_bb(); }

Field scalar_curvature_decomposed(const Model& model, const MetricField& g, const Field& u, double t) {
  const double d = decay(t, model.cls.T);
  const double n = model.spec.n;
  return (n * d - trace_eta(model, g) - laplacian(model, g, u)) / (1.0 - d);
}

Traces traces(const Model& model, const MetricField& g, double t) {
  const ClassData& cls = model.cls;
  const double e = e_factor(t, cls.T);
  const ReferenceCoefficients rc = reference_coefficients(cls, t);
  Traces tr;
  tr.tr_eta_sup = trace_eta(model, g).maxCoeff();
  const Field tr0 = trace(g, cls.a0 + model.psi0_hess.ff, model.psi0_hess.fb, cls.b0 + model.psi0_hess.bb);
  tr.e_tr_omega0_sup = (e * tr0).maxCoeff();
  // Generalized eigenvalues of g against omega_REF(t), node by node.
  const Field rff = rc.fibre + e * model.psi0_hess.ff;
  const Field rfb = e * model.psi0_hess.fb;
  const Field rbb = rc.base + e * model.psi0_hess.bb;
  const Field rdet = rff * rbb - rfb * rfb;
  const Field mixed = g.ff * rbb + g.bb * rff - 2.0 * g.fb * rfb;
  const Field half_b = mixed / (2.0 * rdet);
  const Field c = g.det / rdet;
  const Field disc = (half_b.square() - c).max(0.0).sqrt();
  tr.eig_ratio_min = (half_b - disc).minCoeff();
  tr.eig_ratio_max = (half_b + disc).maxCoeff();
  return tr;
}

Field fibre_average(const Model& model, const Field& f) {
  const Field dens = model.cls.a0 + model.psi0_hess.ff;
  const Eigen::ArrayXd num = fibre_integrals(f * dens, model.fibre);
  const Eigen::ArrayXd den = fibre_integrals(dens, model.fibre);
  return (num / den).transpose();
}

double fibre_average_deviation(const Model& model, const Field& f) {
  return (f - pullback(model, fibre_average(model, f))).abs().maxCoeff();
}

Field v_field(const Model& model, const Field& u, double t, const VConfig& cfg) {
  const double e = e_factor(t, model.cls.T);
  return 2.0 * cfg.A * e - (u - cfg.target - cfg.c_star);
}

LiYau v_and_liyau(const Model& model, const MetricField& g, const Field& u, double t, const VConfig& cfg) {
  const Field v = v_field(model, u, t, cfg);
  LiYau ly;
  ly.v_min = v.minCoeff();
  ly.v_max = v.maxCoeff();
  if (!(ly.v_min > 0.0))
    throw VPositivityFailure(fmt::format("v is not positive at t = {:.10g} (min {:.3e})", t, ly.v_min));
  ly.grad_over_v_sup = (gradient_norm_sq(model, g, v) / v).maxCoeff();
  const Field lap = laplacian(model, g, v);
  ly.lap_sup = lap.maxCoeff();
  ly.lap_inf = lap.minCoeff();
  return ly;
}

double heat_residual_u(const Model& model, const ReferenceVolume& omega, const Snapshot& s1, const Snapshot& s2) {
  auto filled = [&](const Snapshot& s) {
    Snapshot out = s;
    if (out.rhs.size() == 0) out.rhs = cma_rhs(model, omega, s.phi, s.t);
    return out;
  };
  const Snapshot a = filled(s1);
  const Snapshot b = filled(s2);
  const Field ua = ricci_potential(model, a);
  const Field ub = ricci_potential(model, b);
  const MetricField ga = assemble_metric(model, a.phi, a.t);
  const MetricField gb = assemble_metric(model, b.phi, b.t);
  const double m = model.spec.m;
  const Field ut = (ub - ua) / (b.t - a.t);
  const Field spatial_a = laplacian(model, ga, ua) - m + trace_eta(model, ga);
  const Field spatial_b = laplacian(model, gb, ub) - m + trace_eta(model, gb);
  return (ut - 0.5 * (spatial_a + spatial_b)).abs().maxCoeff();
}

ObservableSeries measure_series(const Model& model, const ReferenceVolume& omega,
                                const std::vector<Snapshot>& snapshots, const LimitTargets& targets) {
  ObservableSeries s;
  const double T = model.cls.T;
  for (const Snapshot& snap0 : snapshots) {
    Snapshot snap = snap0;
    MetricField g;
    if (snap.rhs.size() == 0)
      snap.rhs = cma_rhs(model, omega, snap.phi, snap.t, &g);
    else
      g = assemble_metric(model, snap.phi, snap.t);
    const double t = snap.t;
    const double e = e_factor(t, T);
    const Field u = ricci_potential(model, snap);
    s.t.push_back(t);
    s.E.push_back(e);

    s.push("phi_sup", snap.phi.maxCoeff());
    s.push("phi_inf", snap.phi.minCoeff());
    s.push("dtphi_sup_abs", snap.rhs.abs().maxCoeff());
    s.push("u_sup", u.maxCoeff());
    s.push("u_inf", u.minCoeff());
    s.push("u_sup_abs", u.abs().maxCoeff());

    const auto [vmin, vmax] = volume_ratio(model, omega, g, t);
    s.push("vol_ratio_min", vmin);
    s.push("vol_ratio_max", vmax);
    const double vol = total_volume(model, g);
    s.push("volume", vol);
    s.push("volume_over_E", vol / e);

    double dmax = 0.0;
    double dmin = std::numeric_limits<double>::infinity();
    for (int b = 0; b < model.cols(); ++b) {
      const double d = fibre_diameter(model, g, b);
      dmax = std::max(dmax, d);
      dmin = std::min(dmin, d);
    }
    s.push("fibre_diam_max", dmax);
    s.push("fibre_diam_min", dmin);
    s.push("region_diam", region_diameter(model, g));

    const Field ra = scalar_curvature_direct(model, g);
    const Field rb = scalar_curvature_decomposed(model, g, u, t);
    s.push("R_sup", ra.maxCoeff());
    s.push("R_inf", ra.minCoeff());
    s.push("R_decomposed_sup", rb.maxCoeff());
    s.push("R_method_gap", (ra - rb).abs().maxCoeff() / std::max(1.0, ra.abs().maxCoeff()));
    s.push("typeI_sup", (1.0 - decay(t, T)) * ra.maxCoeff());
    s.push("zhang_sup", ra.maxCoeff() * (T - t) * (T - t));

    const Traces tr = traces(model, g, t);
    s.push("tr_eta_sup", tr.tr_eta_sup);
    s.push("e_tr_omega0_sup", tr.e_tr_omega0_sup);
    s.push("eig_ratio_min", tr.eig_ratio_min);
    s.push("eig_ratio_max", tr.eig_ratio_max);
    s.push("avg_dev", fibre_average_deviation(model, snap.phi));
    s.push("positivity_margin", g.min_eigen().minCoeff());

    auto distances = [&](const std::string& tag, const Field& target) {
      const Field dp = snap.phi - target;
      const Field du = u - target;
      s.push("sub_" + tag + "_sup", dp.maxCoeff());
      s.push("sub_" + tag + "_inf", dp.minCoeff());
      s.push("uconv_" + tag + "_sup", du.maxCoeff());
      s.push("uconv_" + tag + "_inf", du.minCoeff());
    };
    if (targets.has_spr()) distances("spr", targets.spr);
    if (targets.has_ske()) distances("ske", targets.ske);
  }
  return s;
}

VConfig add_liyau_columns(ObservableSeries& series, const Model& model, const ReferenceVolume& omega,
                          const std::vector<Snapshot>& snapshots, const Field& target, double c_star) {
  VConfig cfg;
  cfg.target = target;
  cfg.c_star = c_star;
  std::vector<Field> us;
  us.reserve(snapshots.size());
  double a = 1.0;
  for (const Snapshot& snap0 : snapshots) {
    Snapshot snap = snap0;
    if (snap.rhs.size() == 0) snap.rhs = cma_rhs(model, omega, snap.phi, snap.t);
    us.push_back(ricci_potential(model, snap));
    const double e = e_factor(snap.t, model.cls.T);
    a = std::max(a, (us.back() - target - c_star).abs().maxCoeff() / e);
  }
  cfg.A = a;
  std::vector<double> grad, lap_sup, lap_inf, vmin, vmax;
  for (std::size_t k = 0; k < snapshots.size(); ++k) {
    const Snapshot& snap = snapshots[k];
    const MetricField g = assemble_metric(model, snap.phi, snap.t);
    const LiYau ly = v_and_liyau(model, g, us[k], snap.t, cfg);
    const double e = e_factor(snap.t, model.cls.T);
    if (ly.v_min < cfg.A * e * (1.0 - 1e-12) || ly.v_max > 3.0 * cfg.A * e * (1.0 + 1e-12))
      throw VPositivityFailure(fmt::format("v leaves [A E, 3 A E] at t = {:.10g}", snap.t));
    grad.push_back(ly.grad_over_v_sup);
    lap_sup.push_back(ly.lap_sup);
    lap_inf.push_back(ly.lap_inf);
    vmin.push_back(ly.v_min / e);
    vmax.push_back(ly.v_max / e);
  }
  series.set("liyau_grad_sup", std::move(grad));
  series.set("liyau_lap_sup", std::move(lap_sup));
  series.set("liyau_lap_inf", std::move(lap_inf));
  series.set("v_over_E_min", std::move(vmin));
  series.set("v_over_E_max", std::move(vmax));
  return cfg;
}

}  // namespace krf

namespace krf {

const std::vector<std::string>& observable_keys() {
  static const std::vector<std::string> keys{
      "phi_sup",        "phi_inf",        "dtphi_sup_abs",   "u_sup",          "u_inf",
      "u_sup_abs",      "vol_ratio_min",  "vol_ratio_max",   "volume",         "volume_over_E",
      "fibre_diam_max", "fibre_diam_min", "region_diam",     "R_sup",          "R_inf",
      "R_decomposed_sup", "R_method_gap", "typeI_sup",       "zhang_sup",      "tr_eta_sup",
      "e_tr_omega0_sup", "eig_ratio_min", "eig_ratio_max",   "avg_dev",        "positivity_margin",
      "sub_spr_sup",    "sub_spr_inf",    "uconv_spr_sup",   "uconv_spr_inf",  "sub_ske_sup",
      "sub_ske_inf",    "uconv_ske_sup",  "uconv_ske_inf",   "liyau_grad_sup", "liyau_lap_sup",
      "liyau_lap_inf",  "v_over_E_min",   "v_over_E_max"};
  return keys;
}

}  // namespace krf
