#pragma once

#include "krf/grid.hpp"
#include "krf/model_spec.hpp"

namespace krf {

struct Model;

// Class-level data of the flow. Both models have P^1 fibres, so the fibre
// class a0 [w_rnd] reaches zero first and lambda * a0 = 2.
struct ClassData {
  ModelKind kind = ModelKind::ProductFlat;
  double a0 = 0.0;
  double b0 = 0.0;
  double T = 0.0;
  double lambda = 0.0;
  double fibre_limit_coeff = 0.0;
  // c_B: coefficient of f*eta against the base reference form.
  double base_limit_coeff = 0.0;
};

ClassData class_data(const ModelSpec& spec);

// (e^{-t} - e^{-T}) / (1 - e^{-T}); throws OutOfRange outside [0, T].
double e_factor(double t, double T);

struct ReferenceCoefficients {
  double fibre = 0.0;
  double cross = 0.0;
  double base = 0.0;
};

// omega_REF(t) = E omega_0 + (1 - E) f*eta at the class level.
ReferenceCoefficients reference_coefficients(const ClassData& cls, double t);

// Integral of omega(t)^2 over X from class arithmetic (fibre area 2 pi,
// base area 2 pi in both models).
double predicted_volume(const ClassData& cls, double t);

// Integral of 2 omega_0 ^ f*eta, the limit of Vol / E.
double omega_eta_volume(const ClassData& cls);

// Omega = kappa e^{-lambda psi0} (w_rnd + w_base)^2, so that
// Ric Omega = lambda omega_0 - f*eta / (1 - e^{-T}).
// density is normalized: Omega = density * (reference chart volume) with the
// flat reference having density 2.
struct ReferenceVolume {
  double kappa = 0.0;
  Field density;
  Field log_density;
  // Sup over the grid of the Ricci identity residual evaluated with the
  // model stencils.
  double ricci_residual = 0.0;
};

ReferenceVolume reference_volume_form(const Model& model);

// Normalized Ricci form of Omega minus its prescribed value, per entry.
Hessian ricci_identity_residual(const Model& model, const ReferenceVolume& omega);

}  // namespace krf
