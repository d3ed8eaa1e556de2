#pragma once

#include <cmath>
#include <numbers>

#include "krf/models.hpp"

namespace krf::test {

inline ModelSpec spec(ModelKind kind, PerturbationProfile profile, double amplitude, int nf, int nb,
                      int order = 2) {
  ModelSpec s;
  s.kind = kind;
  s.a0 = 2.0;
  s.b0 = kind == ModelKind::SphereBase ? 6.0 : (profile == PerturbationProfile::CoupledBump ? 8.0 : 1.0);
  s.psi0.profile = profile;
  s.psi0.amplitude = amplitude;
  s.psi0.center_fibre = 0.3;
  s.psi0.center_base = kind == ModelKind::SphereBase ? 0.4 : 0.5;
  s.psi0.width = kind == ModelKind::ProductFlat && profile == PerturbationProfile::CoupledBump ? 1.0 : 0.5;
  s.grid = {nf, nb, order};
  return s;
}

// f'' + cot f' on a latitude grid with even reflection at the poles
// (2 f'' at a pole), second order, written out independently.
inline Eigen::ArrayXd latitude_operator(const Eigen::ArrayXd& f) {
  const int n = static_cast<int>(f.size());
  const double h = std::numbers::pi / (n - 1);
  Eigen::ArrayXd out(n);
  auto at = [&](int i) { return i < 0 ? f(-i) : (i >= n ? f(2 * (n - 1) - i) : f(i)); };
  for (int i = 0; i < n; ++i) {
    const double d2 = (at(i - 1) - 2 * at(i) + at(i + 1)) / (h * h);
    if (i == 0 || i == n - 1) {
      out(i) = 2 * d2;
    } else {
      const double th = i * h;
      out(i) = d2 + std::cos(th) / std::sin(th) * (at(i + 1) - at(i - 1)) / (2 * h);
    }
  }
  return out;
}

inline double sup_abs(const Eigen::ArrayXXd& a) { return a.abs().maxCoeff(); }

}  // namespace krf::test
