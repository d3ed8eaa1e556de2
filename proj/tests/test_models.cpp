#include <doctest.h>

#include <cmath>

#include "krf/errors.hpp"
#include "krf/models.hpp"
#include "support.hpp"

using namespace krf;

TEST_SUITE("models") {
  TEST_CASE("unperturbed initial metric is the product reference") {
    const Model m = build_model(test::spec(ModelKind::SphereBase, PerturbationProfile::Zero, 0.0, 17, 17));
    const MetricField g = initial_metric(m);
    CHECK(test::sup_abs(g.ff - 2.0) == 0.0);
    CHECK(test::sup_abs(g.bb - 6.0) == 0.0);
    CHECK(test::sup_abs(g.fb) == 0.0);
    CHECK(test::sup_abs(g.det - 12.0) < 1e-14);
    CHECK(test::sup_abs(g.min_eigen() - 2.0) < 1e-14);
  }

  TEST_CASE("fibre bump depends only on the fibre coordinate") {
    const Model m = build_model(test::spec(ModelKind::ProductFlat, PerturbationProfile::FibreBump, 0.2, 33, 16));
    for (int j = 1; j < m.cols(); ++j) CHECK((m.psi0.col(j) - m.psi0.col(0)).abs().maxCoeff() == 0.0);
    CHECK(m.psi0.maxCoeff() > 0.15);
    CHECK(test::sup_abs(m.psi0_hess.fb) < 1e-14);
  }

  TEST_CASE("coupled bump varies along the base") {
    const Model m = build_model(test::spec(ModelKind::SphereBase, PerturbationProfile::CoupledBump, 0.2, 33, 24));
    CHECK((m.psi0.col(3) - m.psi0.col(12)).abs().maxCoeff() > 1e-3);
    CHECK(test::sup_abs(m.psi0_hess.fb) > 1e-3);
  }

  TEST_CASE("build_model validates its inputs") {
    auto s = test::spec(ModelKind::ProductFlat, PerturbationProfile::Zero, 0.0, 17, 17);
    s.n = 3;
    CHECK_THROWS_AS(build_model(s), InvalidClass);
    s.n = 2;
    s.grid.n_fibre = 8;
    CHECK_THROWS_AS(build_model(s), InvalidClass);
    s.grid.n_fibre = 17;
    s.grid.stencil_order = 6;
    CHECK_THROWS_AS(build_model(s), InvalidClass);
    s.grid.stencil_order = 2;
    s.kind = ModelKind::SphereBase;
    s.b0 = 2.0;
    CHECK_THROWS_AS(build_model(s), InvalidClass);
    auto big = test::spec(ModelKind::ProductFlat, PerturbationProfile::FibreBump, 2.0, 33, 16);
    CHECK_THROWS_AS(build_model(big), NonPositiveInitialMetric);
  }

  TEST_CASE("make_metric reports the offending node") {
    Field ff = Field::Constant(4, 3, 1.0), fb = Field::Zero(4, 3), bb = Field::Constant(4, 3, 1.0);
    fb(2, 1) = 1.5;
    try {
      (void)make_metric(ff, fb, bb, 0.25);
      FAIL("expected PositivityLoss");
    } catch (const PositivityLoss& e) {
      CHECK(e.fibre_index() == 2);
      CHECK(e.base_index() == 1);
      CHECK(e.time() == 0.25);
    }
  }

  TEST_CASE("Laplacian and gradient of cos(theta_f) on the product metric") {
    const Model m = build_model(test::spec(ModelKind::ProductFlat, PerturbationProfile::Zero, 0.0, 129, 16));
    const MetricField g = initial_metric(m);
    Field f(m.rows(), m.cols());
    Field s2(m.rows(), m.cols());
    for (int i = 0; i < m.rows(); ++i) {
      f.row(i).setConstant(std::cos(m.fibre.coord(i)));
      s2.row(i).setConstant(std::pow(std::sin(m.fibre.coord(i)), 2));
    }
    CHECK(test::sup_abs(laplacian(m, g, f) + f) < 1e-3);  // -2 cos / a0 with a0 = 2
    CHECK(test::sup_abs(gradient_norm_sq(m, g, f) - s2 / 2.0) < 1e-3);
  }

  TEST_CASE("trace of the metric's own Hessian-free identity") {
    const Model m = build_model(test::spec(ModelKind::SphereBase, PerturbationProfile::CoupledBump, 0.2, 33, 24));
    const MetricField g = initial_metric(m);
    // tr_g g = 2.
    CHECK(test::sup_abs(trace(g, g.ff, g.fb, g.bb) - 2.0) < 1e-12);
  }

  TEST_CASE("names round trip") {
    CHECK(parse_model_kind(to_string(ModelKind::SphereBase)) == ModelKind::SphereBase);
    CHECK(parse_profile(to_string(PerturbationProfile::CoupledBump)) == PerturbationProfile::CoupledBump);
    CHECK_THROWS_AS(parse_model_kind("Torus"), ConfigError);
    CHECK_THROWS_AS(parse_profile("Spike"), ConfigError);
  }
}
