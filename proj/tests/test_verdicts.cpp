#include <doctest.h>

#include <cmath>
#include <numbers>

#include "krf/errors.hpp"
#include "krf/verdicts.hpp"

using namespace krf;

namespace {

constexpr double kT = 0.6931471805599453;  // log 2
constexpr double kEps = 1e-5;

// Samples log-uniform in E from 1 down to E(T - eps).
ObservableSeries synthetic(int n = 400) {
  ObservableSeries s;
  const double q = std::exp(-kT);
  const double e_end = (std::exp(-(kT - kEps)) - q) / (1 - q);
  for (int k = 0; k < n; ++k) {
    const double e = std::pow(e_end, static_cast<double>(k) / (n - 1));
    s.E.push_back(e);
    s.t.push_back(-std::log(q + (1 - q) * e));
  }
  return s;
}

std::vector<double> map_e(const ObservableSeries& s, double (*fn)(double)) {
  std::vector<double> y;
  for (double e : s.E) y.push_back(fn(e));
  return y;
}

VerdictContext context() {
  VerdictContext c;
  c.T = kT;
  c.eps_stop = kEps;
  c.profile = PerturbationProfile::FibreBump;
  return c;
}

}  // namespace

TEST_SUITE("verdicts") {
  TEST_CASE("power-law fits are exact on pure power laws") {
    std::vector<double> e, lin, root;
    for (int k = 0; k <= 60; ++k) {
      e.push_back(std::pow(10.0, -3.0 * k / 60));
      lin.push_back(3.0 * e.back());
      root.push_back(0.7 * std::sqrt(e.back()));
    }
    const RateFit a = fit_power_law(e, lin);
    CHECK(a.exponent == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(std::exp(a.log_constant) == doctest::Approx(3.0));
    CHECK(a.r_squared == doctest::Approx(1.0));
    CHECK(fit_power_law(e, root).exponent == doctest::Approx(0.5).epsilon(1e-6));
    CHECK(a.E_max == doctest::Approx(1.0));
  }

  TEST_CASE("fits refuse short windows") {
    std::vector<double> e{1.0, 0.5, 0.25}, y{1.0, 0.5, 0.25};
    CHECK_THROWS_AS(fit_power_law(e, y), InsufficientWindow);
    std::vector<double> e2, y2;
    for (int k = 0; k < 30; ++k) {
      e2.push_back(1.0 - 0.01 * k);
      y2.push_back(e2.back());
    }
    CHECK_THROWS_AS(fit_power_law(e2, y2), InsufficientWindow);
  }

  TEST_CASE("fit window drops the transient and the stopping neighbourhood") {
    const ObservableSeries s = synthetic();
    const VerdictTolerances tol;
    const FitWindow w = fit_window(s, tol, kT, kEps);
    CHECK(w.E_max < 0.2);
    for (auto i : w.index) CHECK(s.t[i] <= kT - 2 * kEps);
    CHECK(std::log10(w.E_max / w.E_min) >= tol.min_decades);
  }

  TEST_CASE("additive constant is recovered from a curved approach") {
    ObservableSeries s = synthetic();
    std::vector<double> hi, lo;
    for (double e : s.E) {
      hi.push_back(0.4 + 0.2 * e - 0.5 * e * e + 0.01 * e);
      lo.push_back(0.4 + 0.2 * e - 0.5 * e * e - 0.01 * e);
    }
    s.set("a_sup", hi);
    s.set("a_inf", lo);
    const FitWindow w = fit_window(s, VerdictTolerances{}, kT, kEps);
    CHECK(fit_offset(s, w, "a_sup", "a_inf") == doctest::Approx(0.4).epsilon(1e-9));
  }

  TEST_CASE("negative control: quarter-power diameter fails DIAM_FIBRE") {
    ObservableSeries s = synthetic();
    s.set("fibre_diam_max", map_e(s, [](double e) { return 2.0 * std::pow(e, 0.25); }));
    s.set("fibre_diam_min", map_e(s, [](double e) { return 1.5 * std::pow(e, 0.25); }));
    const TheoremVerdict bad = check_theorem("DIAM_FIBRE", s, context(), {});
    CHECK(bad.status == VerdictStatus::Failed);
    s.set("fibre_diam_max", map_e(s, [](double e) { return 2.0 * std::sqrt(e); }));
    s.set("fibre_diam_min", map_e(s, [](double e) { return 1.5 * std::sqrt(e); }));
    CHECK(check_theorem("DIAM_FIBRE", s, context(), {}).status == VerdictStatus::Passed);
  }

  TEST_CASE("negative control: curvature growing like (1-e^{t-T})^{-3/2} fails TYPE_I") {
    ObservableSeries s = synthetic();
    std::vector<double> bad, good;
    for (double t : s.t) {
      const double g = 1 - std::exp(t - kT);
      bad.push_back(g * std::pow(g, -1.5));
      good.push_back(g * (1.0 / g + 3.0));
    }
    s.set("typeI_sup", bad);
    CHECK(check_theorem("TYPE_I", s, context(), {}).status == VerdictStatus::Failed);
    s.set("typeI_sup", good);
    CHECK(check_theorem("TYPE_I", s, context(), {}).status == VerdictStatus::Passed);
  }

  TEST_CASE("boundedness accepts identically zero series and rejects growth") {
    ObservableSeries s = synthetic();
    s.set("liyau_grad_sup", std::vector<double>(s.size(), 0.0));
    CHECK(check_theorem("LIYAU_GRAD", s, context(), {}).passed());
    s.set("liyau_grad_sup", map_e(s, [](double e) { return 1.0 / e; }));
    CHECK_FALSE(check_theorem("LIYAU_GRAD", s, context(), {}).passed());
  }

  TEST_CASE("rate checks on a linear approach and on a stalled one") {
    ObservableSeries s = synthetic();
    std::vector<double> hi, lo, hi2, lo2;
    for (double e : s.E) {
      hi.push_back(0.3 + 0.1 * e);
      lo.push_back(0.3 - 0.1 * e);
      hi2.push_back(0.3 + 0.1 * e + 2e-3);
      lo2.push_back(0.3 - 0.1 * e - 2e-3);
    }
    s.set("sub_spr_sup", hi);
    s.set("sub_spr_inf", lo);
    const VerdictContext ctx = context();
    for (const char* id : {"SUBMERSION_RATE", "C0_BRACKET", "LIPSCHITZ_H"})
      CHECK(check_theorem(id, s, ctx, {}).passed());
    s.set("sub_spr_sup", hi2);
    s.set("sub_spr_inf", lo2);
    for (const char* id : {"SUBMERSION_RATE", "C0_BRACKET", "LIPSCHITZ_H"})
      CHECK_FALSE(check_theorem(id, s, ctx, {}).passed());
  }

  TEST_CASE("missing series are skipped with a reason") {
    const ObservableSeries s = synthetic();
    const auto v = run_registry(s, context(), {}, {"SUBMERSION_RATE", "VOLUME"});
    REQUIRE(v.size() == 2);
    CHECK(v[0].theorem_id == "VOLUME");
    CHECK(v[0].status == VerdictStatus::Skipped);
    CHECK(v[1].status == VerdictStatus::Skipped);
    CHECK_FALSE(v[1].notes.empty());
    CHECK(to_json(v[1])["status"] == "skipped");
  }

  TEST_CASE("Zhang ceiling") {
    ObservableSeries s = synthetic();
    std::vector<double> ok, bad;
    for (double t : s.t) {
      ok.push_back((1.0 / (kT - t)) * (kT - t) * (kT - t));
      bad.push_back(1.0);
    }
    s.set("zhang_sup", ok);
    CHECK(check_theorem("ZHANG_CEILING", s, context(), {}).passed());
    s.set("zhang_sup", bad);
    CHECK_FALSE(check_theorem("ZHANG_CEILING", s, context(), {}).passed());
  }
}
