#pragma once

#include <vector>

#include "krf/cohomology.hpp"
#include "krf/grid.hpp"
#include "krf/models.hpp"

namespace krf {

enum class Normalization { MeanZero, EquationPinned };

// Base potentials are stored as a 1 x n_base field.
struct EllipticSolution {
  Field potential;
  double residual_sup = 0.0;
  int iterations = 0;
  Normalization normalization = Normalization::MeanZero;
  std::vector<double> residual_history;
};

struct NewtonOptions {
  double tol = 1e-12;
  int max_iter = 60;
  double min_damping = 1.0 / 1024.0;
};

// Per fibre: mean-zero rho with L_fibre rho = rhs (normalized densities).
// residual_sup is the multiplier that absorbs the discrete mass defect.
EllipticSolution poisson_fibre(const Model& model, const Field& rhs, double mass_tol = 1e-8);

// omega_0,b + i d dbar rho = c_b e^{-lambda psi0} w_rnd, c_b solved jointly
// with rho so the discrete equation holds exactly.
EllipticSolution solve_spr(const Model& model);

// Fibrewise Kahler-Einstein potential. The moment of psi0 + rho against
// cos(theta) is pinned to 0, which removes the dilation family.
EllipticSolution solve_ske(const Model& model, const NewtonOptions& opts = {});

struct PushforwardDensity {
  Eigen::ArrayXd values;
  double fibre_volume = 0.0;
  // Relative mismatch between the base integral of G' V eta and the integral of Omega.
  double mass_error = 0.0;
};

// G' = f_*(w Omega) / (V eta) with w = 1, or w = e^{-lambda rho_SKE} when ske is given.
PushforwardDensity pushforward_G(const Model& model, const ReferenceVolume& omega,
                                 const EllipticSolution* ske = nullptr);

enum class BaseCoefficient { Eta, EtaScaled };

// (c eta + L rho) = G' e^rho c eta on the base grid, c = 1 (rho_B) or
// 1 / (1 - e^{-T}) (rho'_B).
EllipticSolution solve_base_tke(const Model& model, const PushforwardDensity& g, BaseCoefficient coeff,
                                const NewtonOptions& opts = {}, const Eigen::ArrayXd* initial = nullptr);

// Pull a 1 x n_base potential back to the full grid.
Field pullback(const Model& model, const Field& base_potential);

}  // namespace krf
