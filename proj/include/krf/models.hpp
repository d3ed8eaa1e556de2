#pragma once

#include "krf/cohomology.hpp"
#include "krf/grid.hpp"
#include "krf/model_spec.hpp"

namespace krf {

struct Model {
  ModelSpec spec;
  Axis fibre;
  Axis base;
  ClassData cls;
  Field psi0;
  // Normalized complex Hessian of psi0, reused by every metric assembly.
  Hessian psi0_hess;

  int order() const { return spec.grid.stencil_order; }
  bool sphere_base() const { return spec.kind == ModelKind::SphereBase; }
  int rows() const { return fibre.size(); }
  int cols() const { return base.size(); }
  // Normalized Ricci entries of the flat reference (w_rnd + w_base).
  double ricci_ref_ff() const { return 2.0; }
  double ricci_ref_bb() const { return sphere_base() ? 2.0 : 0.0; }
};

Model build_model(const ModelSpec& spec);

// psi0 sampled on the model grid.
Field perturbation_field(const InitialPerturbation& p, const Axis& fibre, const Axis& base);

// Metric coefficients in the frame where the flat reference form is the
// identity. The volume density of omega is 2 det.
struct MetricField {
  Field ff;
  Field fb;
  Field bb;
  Field det;

  Field inv_ff() const { return bb / det; }
  Field inv_fb() const { return -fb / det; }
  Field inv_bb() const { return ff / det; }
  // Smallest eigenvalue per node.
  Field min_eigen() const;
};

// Builds a metric from entries and verifies positivity; t tags the error.
MetricField make_metric(Field ff, Field fb, Field bb, double t);

MetricField assemble_metric(const Model& model, const Field& phi, double t);

// omega_0 itself (t = 0, phi = 0).
MetricField initial_metric(const Model& model);

// tr_omega(i d dbar f).
Field laplacian(const Model& model, const MetricField& metric, const Field& f);
// tr_omega of a precomputed normalized Hessian.
Field trace(const MetricField& metric, const Hessian& h);
Field trace(const MetricField& metric, const Field& ff, const Field& fb, const Field& bb);

// |grad f|^2_omega with the complex (Kahler) normalization.
Field gradient_norm_sq(const Model& model, const MetricField& metric, const Field& f);

}  // namespace krf
