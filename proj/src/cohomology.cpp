#include "krf/cohomology.hpp"

#include <cmath>
#include <numbers>

#include <fmt/format.h>

#include "krf/errors.hpp"
#include "krf/models.hpp"

namespace krf {

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;
}

ClassData class_data(const ModelSpec& spec) {
  if (!(spec.a0 > 0.0)) throw InvalidClass(fmt::format("a0 must be positive, got {}", spec.a0));
  if (!(spec.b0 > 0.0)) throw InvalidClass(fmt::format("b0 must be positive, got {}", spec.b0));
  ClassData c;
  c.kind = spec.kind;
  c.a0 = spec.a0;
  c.b0 = spec.b0;
  // e^{-T} a0 = 2 (1 - e^{-T})
  c.T = std::log((spec.a0 + 2.0) / 2.0);
  const double q = std::exp(-c.T);
  c.lambda = q / (1.0 - q);
  c.fibre_limit_coeff = 0.0;
  c.base_limit_coeff = q * spec.b0;
  if (spec.kind == ModelKind::SphereBase) c.base_limit_coeff -= 2.0 * (1.0 - q);
  if (!(c.base_limit_coeff > 0.0))
    throw InvalidClass(fmt::format("limit base class is not positive (c_B = {})", c.base_limit_coeff));
  return c;
}

double e_factor(double t, double T) {
  if (!(t >= 0.0 && t <= T)) throw OutOfRange(fmt::format("t = {} outside [0, {}]", t, T));
  return (std::exp(-t) - std::exp(-T)) / (1.0 - std::exp(-T));
}

ReferenceCoefficients reference_coefficients(const ClassData& cls, double t) {
  const double e = e_factor(t, cls.T);
  ReferenceCoefficients r;
  r.fibre = e * cls.a0;
  r.base = e * cls.b0 + (1.0 - e) * cls.base_limit_coeff;
  return r;
}

double predicted_volume(const ClassData& cls, double t) {
  const ReferenceCoefficients r = reference_coefficients(cls, t);
  return 2.0 * r.fibre * r.base * kTwoPi * kTwoPi;
}

double omega_eta_volume(const ClassData& cls) {
  return 2.0 * cls.a0 * cls.base_limit_coeff * kTwoPi * kTwoPi;
}

ReferenceVolume reference_volume_form(const Model& model) {
  const ClassData& cls = model.cls;
  ReferenceVolume rv;
  const Field shape = (-cls.lambda * model.psi0).exp();
  const double mean = integrate_grid(shape, model.fibre, model.base);
  // Integral of 2 kappa * shape * (2 pi)^2 must equal the omega_0 ^ eta volume.
  rv.kappa = cls.a0 * cls.base_limit_coeff / mean;
  if (!std::isfinite(rv.kappa) || !(rv.kappa > 0.0))
    throw NormalizationFailure(fmt::format("reference volume normalization gave kappa = {}", rv.kappa));
  rv.density = 2.0 * rv.kappa * shape;
  rv.log_density = std::log(2.0 * rv.kappa) - cls.lambda * model.psi0;
  const Hessian r = ricci_identity_residual(model, rv);
  rv.ricci_residual = std::max({r.ff.abs().maxCoeff(), r.fb.abs().maxCoeff(), r.bb.abs().maxCoeff()});
  return rv;
}

Hessian ricci_identity_residual(const Model& model, const ReferenceVolume& omega) {
  const ClassData& cls = model.cls;
  const Hessian h = normalized_hessian(omega.log_density, model.fibre, model.base, model.order());
  const double twist = cls.base_limit_coeff / (1.0 - std::exp(-cls.T));
  Hessian r;
  r.ff = -h.ff + model.ricci_ref_ff() - cls.lambda * (cls.a0 + model.psi0_hess.ff);
  r.fb = -h.fb - cls.lambda * model.psi0_hess.fb;
  r.bb = -h.bb + model.ricci_ref_bb() - (cls.lambda * (cls.b0 + model.psi0_hess.bb) - twist);
  return r;
}

}  // namespace krf
