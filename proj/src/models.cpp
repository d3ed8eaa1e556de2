#include "krf/models.hpp"

#include <cmath>
#include <numbers>

#include <fmt/format.h>

#include "krf/errors.hpp"

namespace krf {

std::string to_string(ModelKind kind) {
  return kind == ModelKind::ProductFlat ? "ProductFlat" : "SphereBase";
}

std::string to_string(PerturbationProfile profile) {
  switch (profile) {
    case PerturbationProfile::Zero: return "Zero";
    case PerturbationProfile::FibreBump: return "FibreBump";
    case PerturbationProfile::CoupledBump: return "CoupledBump";
  }
  return "Zero";
}

ModelKind parse_model_kind(const std::string& s) {
  if (s == "ProductFlat") return ModelKind::ProductFlat;
  if (s == "SphereBase") return ModelKind::SphereBase;
  throw ConfigError(fmt::format("unknown model kind '{}' (expected ProductFlat or SphereBase)", s));
}

PerturbationProfile parse_profile(const std::string& s) {
  if (s == "Zero") return PerturbationProfile::Zero;
  if (s == "FibreBump") return PerturbationProfile::FibreBump;
  if (s == "CoupledBump") return PerturbationProfile::CoupledBump;
  throw ConfigError(fmt::format("unknown perturbation profile '{}'", s));
}

Field perturbation_field(const InitialPerturbation& p, const Axis& fibre, const Axis& base) {
  Field f = Field::Zero(fibre.size(), base.size());
  if (p.profile == PerturbationProfile::Zero || p.amplitude == 0.0) return f;
  if (!(p.width > 0.0)) throw NonPositiveInitialMetric("perturbation width must be positive");
  const double w2 = p.width * p.width;
  for (int j = 0; j < base.size(); ++j) {
    const double y = base.kind() == AxisKind::Sphere ? std::cos(base.coord(j))
                                                     : std::cos(2.0 * std::numbers::pi * base.coord(j));
    for (int i = 0; i < fibre.size(); ++i) {
      const double x = std::cos(fibre.coord(i));
      double r2 = (x - p.center_fibre) * (x - p.center_fibre);
      if (p.profile == PerturbationProfile::CoupledBump) r2 += (y - p.center_base) * (y - p.center_base);
      f(i, j) = p.amplitude * std::exp(-r2 / w2);
    }
  }
  return f;
}

Model build_model(const ModelSpec& spec) {
  if (spec.n != 2 || spec.m != 1)
    throw InvalidClass(fmt::format("only n = 2, m = 1 is supported (got n = {}, m = {})", spec.n, spec.m));
  if (spec.grid.n_fibre < 16 || spec.grid.n_base < 16)
    throw InvalidClass(fmt::format("grid needs at least 16 points per axis (got {} x {})", spec.grid.n_fibre,
                                   spec.grid.n_base));
  if (spec.grid.stencil_order != 2 && spec.grid.stencil_order != 4)
    throw InvalidClass(fmt::format("stencil order must be 2 or 4 (got {})", spec.grid.stencil_order));
  if (spec.kind == ModelKind::SphereBase && !(spec.b0 > spec.a0))
    throw InvalidClass(fmt::format("SphereBase needs b0 > a0 (got a0 = {}, b0 = {})", spec.a0, spec.b0));

  const AxisKind base_kind = spec.kind == ModelKind::SphereBase ? AxisKind::Sphere : AxisKind::Periodic;
  Model model{spec,
              Axis(AxisKind::Sphere, spec.grid.n_fibre),
              Axis(base_kind, spec.grid.n_base),
              class_data(spec),
              Field(),
              Hessian()};
  model.psi0 = perturbation_field(spec.psi0, model.fibre, model.base);
  model.psi0_hess = normalized_hessian(model.psi0, model.fibre, model.base, spec.grid.stencil_order);
  try {
    (void)initial_metric(model);
  } catch (const PositivityLoss& e) {
    throw NonPositiveInitialMetric(
        fmt::format("psi0 breaks positivity of omega_0 at node ({}, {})", e.fibre_index(), e.base_index()));
  }
  return model;
}

Field MetricField::min_eigen() const {
  const Field half_tr = 0.5 * (ff + bb);
  const Field disc = (0.25 * (ff - bb).square() + fb.square()).sqrt();
  return half_tr - disc;
}

MetricField make_metric(Field ff, Field fb, Field bb, double t) {
  MetricField m;
  m.det = ff * bb - fb * fb;
  for (Eigen::Index j = 0; j < ff.cols(); ++j)
    for (Eigen::Index i = 0; i < ff.rows(); ++i)
      if (!(ff(i, j) > 0.0) || !(bb(i, j) > 0.0) || !(m.det(i, j) > 0.0))
        throw PositivityLoss(static_cast<std::size_t>(i), static_cast<std::size_t>(j), t,
                             fmt::format("metric not positive at node ({}, {}) at t = {:.10g}: "
                                         "ff = {:.3e}, bb = {:.3e}, det = {:.3e}",
                                         i, j, t, ff(i, j), bb(i, j), m.det(i, j)));
  m.ff = std::move(ff);
  m.fb = std::move(fb);
  m.bb = std::move(bb);
  return m;
}

MetricField assemble_metric(const Model& model, const Field& phi, double t) {
  const ReferenceCoefficients r = reference_coefficients(model.cls, t);
  const double e = e_factor(t, model.cls.T);
  const Hessian h = normalized_hessian(phi, model.fibre, model.base, model.order());
  return make_metric(r.fibre + e * model.psi0_hess.ff + h.ff, e * model.psi0_hess.fb + h.fb,
                     r.base + e * model.psi0_hess.bb + h.bb, t);
}

MetricField initial_metric(const Model& model) {
  return make_metric(model.cls.a0 + model.psi0_hess.ff, model.psi0_hess.fb, model.cls.b0 + model.psi0_hess.bb,
                     0.0);
}

Field trace(const MetricField& g, const Field& ff, const Field& fb, const Field& bb) {
  return (g.bb * ff - 2.0 * g.fb * fb + g.ff * bb) / g.det;
}

Field trace(const MetricField& g, const Hessian& h) { return trace(g, h.ff, h.fb, h.bb); }

Field laplacian(const Model& model, const MetricField& metric, const Field& f) {
  return trace(metric, normalized_hessian(f, model.fibre, model.base, model.order()));
}

Field gradient_norm_sq(const Model& model, const MetricField& g, const Field& f) {
  const Field df = axis_d1(f, model.fibre, 0, model.order());
  const Field db = axis_d1(f, model.base, 1, model.order());
  return (g.bb * df.square() - 2.0 * g.fb * df * db + g.ff * db.square()) / g.det;
}

}  // namespace krf
