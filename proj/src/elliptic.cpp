#include "krf/elliptic.hpp"

#include <cmath>
#include <numbers>

#include <fmt/format.h>

#include "krf/errors.hpp"

namespace krf {

namespace {

// [L 1; w^T 0]: the border column absorbs the discrete mass defect, the
// border row fixes the additive constant.
Eigen::PartialPivLU<Eigen::MatrixXd> bordered_fibre_lu(const Model& model) {
  const int n = model.rows();
  Eigen::MatrixXd p = Eigen::MatrixXd::Zero(n + 1, n + 1);
  p.topLeftCorner(n, n) = axis_operator_matrix(model.fibre, model.order());
  p.col(n).head(n).setOnes();
  p.row(n).head(n) = model.fibre.weights().matrix().transpose();
  return Eigen::PartialPivLU<Eigen::MatrixXd>(p);
}

Eigen::VectorXd bordered_rhs(const Eigen::VectorXd& top) {
  Eigen::VectorXd b(top.size() + 1);
  b.head(top.size()) = top;
  b(top.size()) = 0.0;
  return b;
}

double sup_norm(const Eigen::VectorXd& v) { return v.lpNorm<Eigen::Infinity>(); }

}  // namespace

EllipticSolution poisson_fibre(const Model& model, const Field& rhs, double mass_tol) {
  const int n = model.rows();
  if (rhs.rows() != n || rhs.cols() != model.cols()) throw std::invalid_argument("poisson_fibre: rhs shape");
  const Eigen::ArrayXd w = model.fibre.weights();
  const auto lu = bordered_fibre_lu(model);
  EllipticSolution sol;
  sol.potential = Field::Zero(n, model.cols());
  for (int j = 0; j < model.cols(); ++j) {
    const double mass = (w * rhs.col(j)).sum();
    const double scale = 1.0 + rhs.col(j).abs().maxCoeff();
    if (std::abs(mass) > mass_tol * scale)
      throw NonZeroMass(fmt::format("fibre {} right-hand side has mass {:.3e}", j, mass));
    const Eigen::VectorXd x = lu.solve(bordered_rhs(rhs.col(j).matrix()));
    sol.potential.col(j) = x.head(n).array();
    sol.residual_sup = std::max(sol.residual_sup, std::abs(x(n)));
  }
  sol.normalization = Normalization::MeanZero;
  return sol;
}

EllipticSolution solve_spr(const Model& model) {
  const int n = model.rows();
  const double lambda = model.cls.lambda;
  const auto lu = bordered_fibre_lu(model);
  const Eigen::MatrixXd lmat = axis_operator_matrix(model.fibre, model.order());
  EllipticSolution sol;
  sol.potential = Field::Zero(n, model.cols());
  for (int j = 0; j < model.cols(); ++j) {
    const Eigen::VectorXd e = (-lambda * model.psi0.col(j)).exp().matrix();
    const Eigen::VectorXd g = (-model.cls.a0 - model.psi0_hess.ff.col(j)).matrix();
    const Eigen::VectorXd x = lu.solve(bordered_rhs(e));
    const Eigen::VectorXd y = lu.solve(bordered_rhs(g));
    const double c = -y(n) / x(n);
    const Eigen::VectorXd rho = y.head(n) + c * x.head(n);
    sol.potential.col(j) = rho.array();
    sol.residual_sup = std::max(sol.residual_sup, sup_norm(lmat * rho - (c * e + g)));
  }
  sol.normalization = Normalization::MeanZero;
  return sol;
}

EllipticSolution solve_ske(const Model& model, const NewtonOptions& opts) {
  const int n = model.rows();
  const double lambda = model.cls.lambda;
  const double a0 = model.cls.a0;
  const Eigen::MatrixXd lmat = axis_operator_matrix(model.fibre, model.order());
  const Eigen::ArrayXd w = model.fibre.weights();
  const Eigen::ArrayXd q = model.fibre.coords().cos();

  EllipticSolution sol;
  sol.potential = Field::Zero(n, model.cols());
  sol.normalization = Normalization::MeanZero;

  for (int j = 0; j < model.cols(); ++j) {
    const Eigen::ArrayXd psi = model.psi0.col(j);
    Eigen::ArrayXd zeta = psi;
    double gamma = std::log(a0 / (w * (-lambda * zeta).exp()).sum());
    double slack = 0.0;

    auto residual = [&](const Eigen::ArrayXd& z, double gm, double sl) {
      Eigen::VectorXd f(n + 2);
      f.head(n) = (a0 + (lmat * z.matrix()).array() - (gm - lambda * z).exp() + sl * q).matrix();
      f(n) = (w * (z - psi)).sum();
      f(n + 1) = (w * q * z).sum();
      return f;
    };
    auto positive = [&](const Eigen::ArrayXd& z) { return ((a0 + (lmat * z.matrix()).array()) > 0.0).all(); };

    Eigen::VectorXd f = residual(zeta, gamma, slack);
    double norm = sup_norm(f);
    int it = 0;
    while (norm > opts.tol) {
      if (++it > opts.max_iter)
        throw NewtonDivergence(fmt::format("fibre KE solve did not converge on fibre {} (residual {:.3e})", j, norm));
      const Eigen::ArrayXd ex = (gamma - lambda * zeta).exp();
      Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(n + 2, n + 2);
      jac.topLeftCorner(n, n) = lmat;
      jac.topLeftCorner(n, n).diagonal().array() += lambda * ex;
      jac.col(n).head(n) = -ex.matrix();
      jac.col(n + 1).head(n) = q.matrix();
      jac.row(n).head(n) = w.matrix().transpose();
      jac.row(n + 1).head(n) = (w * q).matrix().transpose();
      const Eigen::VectorXd delta = jac.partialPivLu().solve(-f);

      double step = 1.0;
      bool stalled = false;
      for (;;) {
        const Eigen::ArrayXd z = zeta + step * delta.head(n).array();
        const double gm = gamma + step * delta(n);
        const double sl = slack + step * delta(n + 1);
        if (positive(z)) {
          const Eigen::VectorXd fz = residual(z, gm, sl);
          const double nz = sup_norm(fz);
          if (std::isfinite(nz) && (nz < norm || step <= opts.min_damping)) {
            zeta = z;
            gamma = gm;
            slack = sl;
            f = fz;
            norm = nz;
            break;
          }
        }
        // Already at round-off level: a full step cannot improve further.
        if (step == 1.0 && norm < 1e3 * opts.tol) {
          stalled = true;
          break;
        }
        step *= 0.5;
        if (step < opts.min_damping)
          throw NewtonDivergence(
              fmt::format("fibre KE solve lost positivity on fibre {} at iteration {} (residual {:.3e})", j, it, norm));
      }
      if (stalled) break;
      if (j == 0) sol.residual_history.push_back(norm);
    }
    sol.iterations = std::max(sol.iterations, it);
    sol.residual_sup = std::max(sol.residual_sup, norm);
    sol.potential.col(j) = zeta - psi;
  }
  return sol;
}

PushforwardDensity pushforward_G(const Model& model, const ReferenceVolume& omega, const EllipticSolution* ske) {
  const ClassData& cls = model.cls;
  Field dens = omega.density;
  if (ske) dens *= (-cls.lambda * ske->potential).exp();
  PushforwardDensity g;
  g.fibre_volume = 4.0 * std::numbers::pi * cls.a0;
  // f_* of a normalized density is 2 pi sum_i w_i d_i times w_base; V eta has 4 pi a0 c_B.
  g.values = fibre_integrals(dens, model.fibre) / (2.0 * cls.a0 * cls.base_limit_coeff);
  const double two_pi = 2.0 * std::numbers::pi;
  const double pushed = two_pi * (model.base.weights() * g.values).sum() * g.fibre_volume * cls.base_limit_coeff;
  const double total = two_pi * two_pi * integrate_grid(dens, model.fibre, model.base);
  g.mass_error = std::abs(pushed - total) / std::abs(total);
  return g;
}

EllipticSolution solve_base_tke(const Model& model, const PushforwardDensity& g, BaseCoefficient coeff,
                                const NewtonOptions& opts, const Eigen::ArrayXd* initial) {
  const int n = model.cols();
  if (g.values.size() != n) throw std::invalid_argument("solve_base_tke: G' size");
  if (!(g.values > 0.0).all()) throw NewtonDivergence("G' must be positive");
  const double scale = coeff == BaseCoefficient::Eta ? 1.0 : 1.0 / (1.0 - std::exp(-model.cls.T));
  const double c_eta = scale * model.cls.base_limit_coeff;
  const Eigen::MatrixXd lmat = axis_operator_matrix(model.base, model.order());

  Eigen::ArrayXd rho = initial ? *initial : Eigen::ArrayXd(-g.values.log());
  auto residual = [&](const Eigen::ArrayXd& r) -> Eigen::VectorXd {
    return (c_eta + (lmat * r.matrix()).array() - g.values * c_eta * r.exp()).matrix();
  };
  auto positive = [&](const Eigen::ArrayXd& r) { return ((c_eta + (lmat * r.matrix()).array()) > 0.0).all(); };
  if (!positive(rho)) throw PositivityLoss(0, 0, 0.0, "base initial guess is not positive");

  EllipticSolution sol;
  sol.normalization = Normalization::EquationPinned;
  Eigen::VectorXd f = residual(rho);
  double norm = sup_norm(f);
  sol.residual_history.push_back(norm);
  int it = 0;
  while (norm > opts.tol) {
    if (++it > opts.max_iter)
      throw NewtonDivergence(fmt::format("base solve did not converge (residual history ends at {:.3e})", norm));
    Eigen::MatrixXd jac = lmat;
    jac.diagonal().array() -= g.values * c_eta * rho.exp();
    const Eigen::ArrayXd delta = jac.partialPivLu().solve(-f).array();
    double step = 1.0;
    bool stalled = false;
    for (;;) {
      const Eigen::ArrayXd r = rho + step * delta;
      if (positive(r)) {
        const Eigen::VectorXd fr = residual(r);
        const double nr = sup_norm(fr);
        if (std::isfinite(nr) && (nr < norm || step <= opts.min_damping)) {
          rho = r;
          f = fr;
          norm = nr;
          break;
        }
      }
      if (step == 1.0 && norm < 1e3 * opts.tol) {
        stalled = true;
        break;
      }
      step *= 0.5;
      if (step < opts.min_damping)
        throw NewtonDivergence(fmt::format("base solve stalled at iteration {} (residual {:.3e})", it, norm));
    }
    if (stalled) break;
    sol.residual_history.push_back(norm);
  }
  sol.iterations = it;
  sol.residual_sup = norm;
  sol.potential = rho.transpose();
  return sol;
}

Field pullback(const Model& model, const Field& base_potential) {
  return base_potential.row(0).replicate(model.rows(), 1);
}

}  // namespace krf
