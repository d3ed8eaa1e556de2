#include "krf/grid.hpp"

#include <array>
#include <cmath>
#include <numbers>
#include <span>
#include <stdexcept>

namespace krf {

namespace {

struct Tap {
  int offset;
  double coeff;
};

std::span<const Tap> d1_taps(int order) {
  static constexpr std::array<Tap, 2> second{{{-1, -0.5}, {1, 0.5}}};
  static constexpr std::array<Tap, 4> fourth{
      {{-2, 1.0 / 12.0}, {-1, -8.0 / 12.0}, {1, 8.0 / 12.0}, {2, -1.0 / 12.0}}};
  if (order == 4) return fourth;
  return second;
}

std::span<const Tap> d2_taps(int order) {
  static constexpr std::array<Tap, 3> second{{{-1, 1.0}, {0, -2.0}, {1, 1.0}}};
  static constexpr std::array<Tap, 5> fourth{{{-2, -1.0 / 12.0},
                                              {-1, 16.0 / 12.0},
                                              {0, -30.0 / 12.0},
                                              {1, 16.0 / 12.0},
                                              {2, -1.0 / 12.0}}};
  if (order == 4) return fourth;
  return second;
}

void check_order(int order) {
  if (order != 2 && order != 4) throw std::invalid_argument("stencil order must be 2 or 4");
}

// Row i of the axis operator as (node, coefficient) pairs, ghosts resolved.
template <class Emit>
void operator_row(const Axis& axis, int order, int i, Emit&& emit) {
  const double h = axis.spacing();
  const double inv_h2 = 1.0 / (h * h);
  if (axis.kind() == AxisKind::Periodic) {
    for (const Tap& tp : d2_taps(order)) emit(axis.resolve(i + tp.offset), tp.coeff * inv_h2);
    return;
  }
  if (axis.is_pole(i)) {
    for (const Tap& tp : d2_taps(order)) emit(axis.resolve(i + tp.offset), 2.0 * tp.coeff * inv_h2);
    return;
  }
  const double cot = axis.cot(i);
  for (const Tap& tp : d2_taps(order)) emit(axis.resolve(i + tp.offset), tp.coeff * inv_h2);
  for (const Tap& tp : d1_taps(order)) emit(axis.resolve(i + tp.offset), cot * tp.coeff / h);
}

template <class RowFn>
Field apply_along(const Field& f, int dim, int n_axis, RowFn&& row) {
  Field out = Field::Zero(f.rows(), f.cols());
  if (dim == 0) {
    if (f.rows() != n_axis) throw std::invalid_argument("field/axis size mismatch (fibre)");
    for (Eigen::Index j = 0; j < f.cols(); ++j)
      for (int i = 0; i < n_axis; ++i) {
        double acc = 0.0;
        row(i, [&](int node, double c) { acc += c * f(node, j); });
        out(i, j) = acc;
      }
  } else {
    if (f.cols() != n_axis) throw std::invalid_argument("field/axis size mismatch (base)");
    for (int j = 0; j < n_axis; ++j) {
      for (Eigen::Index i = 0; i < f.rows(); ++i) {
        double acc = 0.0;
        row(j, [&](int node, double c) { acc += c * f(i, node); });
        out(i, j) = acc;
      }
    }
  }
  return out;
}

}  // namespace

Axis::Axis(AxisKind kind, int n) : kind_(kind), n_(n) {
  if (n < 5) throw std::invalid_argument("axis needs at least 5 nodes");
  h_ = kind == AxisKind::Sphere ? std::numbers::pi / (n - 1) : 1.0 / n;
  cot_ = Eigen::ArrayXd::Zero(n);
  if (kind == AxisKind::Sphere)
    for (int i = 1; i < n - 1; ++i) cot_(i) = std::cos(coord(i)) / std::sin(coord(i));
  if (kind == AxisKind::Sphere) {
    double sum = 0.0;
    for (int i = 0; i < n; ++i) sum += h_ * jacobian(i);
    wsum_ = sum;
  }
}

double Axis::coord(int i) const { return i * h_; }

double Axis::jacobian(int i) const {
  if (kind_ == AxisKind::Periodic) return 1.0;
  return 0.5 * std::sin(coord(i));
}

double Axis::weight(int i) const {
  if (kind_ == AxisKind::Periodic) return 1.0 / n_;
  // sin vanishes at both ends, so the trapezoid end correction is moot.
  // Rescaled so the weights sum to exactly 1 (constants integrate exactly).
  return h_ * jacobian(i) / wsum_;
}

int Axis::resolve(int i) const {
  if (kind_ == AxisKind::Periodic) return ((i % n_) + n_) % n_;
  const int last = n_ - 1;
  while (i < 0 || i > last) {
    if (i < 0) i = -i;
    if (i > last) i = 2 * last - i;
  }
  return i;
}

Eigen::ArrayXd Axis::coords() const {
  Eigen::ArrayXd c(n_);
  for (int i = 0; i < n_; ++i) c(i) = coord(i);
  return c;
}

Eigen::ArrayXd Axis::weights() const {
  Eigen::ArrayXd w(n_);
  for (int i = 0; i < n_; ++i) w(i) = weight(i);
  return w;
}

Field axis_d1(const Field& f, const Axis& axis, int dim, int order) {
  check_order(order);
  const double h = axis.spacing();
  return apply_along(f, dim, axis.size(), [&](int i, auto&& emit) {
    for (const Tap& tp : d1_taps(order)) emit(axis.resolve(i + tp.offset), tp.coeff / h);
  });
}

Field axis_d2(const Field& f, const Axis& axis, int dim, int order) {
  check_order(order);
  const double inv_h2 = 1.0 / (axis.spacing() * axis.spacing());
  return apply_along(f, dim, axis.size(), [&](int i, auto&& emit) {
    for (const Tap& tp : d2_taps(order)) emit(axis.resolve(i + tp.offset), tp.coeff * inv_h2);
  });
}

Field axis_operator(const Field& f, const Axis& axis, int dim, int order) {
  check_order(order);
  return apply_along(f, dim, axis.size(),
                     [&](int i, auto&& emit) { operator_row(axis, order, i, emit); });
}

Eigen::MatrixXd axis_operator_matrix(const Axis& axis, int order) {
  check_order(order);
  const int n = axis.size();
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) operator_row(axis, order, i, [&](int node, double c) { a(i, node) += c; });
  return a;
}

Hessian normalized_hessian(const Field& f, const Axis& fibre, const Axis& base, int order) {
  Hessian hs;
  hs.ff = axis_operator(f, fibre, 0, order);
  hs.bb = axis_operator(f, base, 1, order);
  hs.fb = axis_d1(axis_d1(f, base, 1, order), fibre, 0, order);
  return hs;
}

double integrate_grid(const Field& f, const Axis& fibre, const Axis& base) {
  const Eigen::ArrayXd wf = fibre.weights();
  const Eigen::ArrayXd wb = base.weights();
  return (wf.matrix().transpose() * f.matrix() * wb.matrix())(0, 0);
}

Eigen::ArrayXd fibre_integrals(const Field& f, const Axis& fibre) {
  const Eigen::ArrayXd wf = fibre.weights();
  return (f.matrix().transpose() * wf.matrix()).array();
}

}  // namespace krf
