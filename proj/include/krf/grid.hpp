#pragma once

#include <Eigen/Dense>

namespace krf {

// Grid scalar field. Rows index the fibre latitude, columns the base
// coordinate, so each column is one fibre X_b and is contiguous in memory.
using Field = Eigen::ArrayXXd;

enum class AxisKind { Sphere, Periodic };

// One uniform grid direction.
//
// Sphere: latitude theta in [0, pi], n nodes with both poles on the grid.
// Torus-invariant smooth functions are even about each pole, which is how
// ghost nodes are filled. Log-chart derivatives are d/drho = J d/dtheta with
// J = sin(theta)/2.
//
// Periodic: s in [0, 1), n nodes, rho = s so J = 1.
class Axis {
 public:
  Axis(AxisKind kind, int n);

  AxisKind kind() const { return kind_; }
  int size() const { return n_; }
  double spacing() const { return h_; }
  double coord(int i) const;
  double jacobian(int i) const;
  // Quadrature weight for integrals against the chart measure J d(coord):
  // trapezoid with sin(theta)/2 folded in (sphere), 1/n (periodic). Sums to 1.
  double weight(int i) const;
  bool is_pole(int i) const { return kind_ == AxisKind::Sphere && (i == 0 || i == n_ - 1); }
  // Maps a possibly out-of-range (ghost) index onto the node it mirrors.
  int resolve(int i) const;

  // cot(theta) at interior sphere nodes (0 at poles and on periodic axes).
  double cot(int i) const { return cot_(i); }

  Eigen::ArrayXd coords() const;
  Eigen::ArrayXd weights() const;

 private:
  AxisKind kind_;
  int n_;
  double h_;
  Eigen::ArrayXd cot_;
  double wsum_ = 1.0;
};

// Invariant-chart second-derivative operator of one axis, divided by J^2:
// sphere: f'' + cot(theta) f' (2 f'' at the poles), periodic: f''.
// This is the normalized i d dbar density of a function of that coordinate.
Field axis_operator(const Field& f, const Axis& axis, int dim, int order);
Field axis_d1(const Field& f, const Axis& axis, int dim, int order);
Field axis_d2(const Field& f, const Axis& axis, int dim, int order);

// Dense matrix of axis_operator acting on one line of `axis`.
Eigen::MatrixXd axis_operator_matrix(const Axis& axis, int order);

// Normalized complex Hessian of an invariant function: entries of
// i d dbar f in the frame where the round/flat reference metrics are the
// identity. ff/bb are the axis operators, fb the mixed latitude derivative.
struct Hessian {
  Field ff;
  Field fb;
  Field bb;
};

Hessian normalized_hessian(const Field& f, const Axis& fibre, const Axis& base, int order);

// Quadrature helpers. All weights are normalized to total 1 per axis.
double integrate_grid(const Field& f, const Axis& fibre, const Axis& base);
Eigen::ArrayXd fibre_integrals(const Field& f, const Axis& fibre);

}  // namespace krf
