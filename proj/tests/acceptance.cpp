// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// non-zero when any criterion fails.
#include <chrono>
#include <cmath>
#include <filesystem>
#include <iostream>
#include <map>
#include <numbers>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "krf/elliptic.hpp"
#include "krf/errors.hpp"
#include "krf/pipeline.hpp"
#include "support.hpp"

using namespace krf;
namespace fs = std::filesystem;

namespace {

const fs::path kConfigs = fs::path(KRF_SOURCE_DIR) / "configs";
const std::vector<std::string> kShipped{"pf_zero", "pf_fibrebump", "pf_coupled", "sb_zero", "sb_fibrebump", "sb_coupled"};
const std::vector<std::string> kPerturbed{"pf_fibrebump", "pf_coupled", "sb_fibrebump", "sb_coupled"};

struct Criterion {
  int id;
  bool pass = true;
  std::vector<std::string> lines;

  void require(bool ok, const std::string& what) {
    pass = pass && ok;
    lines.push_back(fmt::format("    [{}] {}", ok ? "ok" : "x ", what));
  }
};

RunConfig shipped(const std::string& name, const std::string& mode = {}) {
  RunConfig c = load_config(kConfigs / (name + ".yaml"));
  c.write_snapshots = false;
  if (!mode.empty()) c.mode = mode;
  return c;
}

std::map<std::string, RunResult> g_runs;

const RunResult& result(const std::string& name, const std::string& mode = {}) {
  const RunConfig c = shipped(name, mode);
  const std::string key = name + "/" + c.mode;
  auto it = g_runs.find(key);
  if (it == g_runs.end()) it = g_runs.emplace(key, execute_run(c, {}, std::nullopt, true)).first;
  return it->second;
}

const TheoremVerdict& verdict(const RunResult& r, const std::string& id) {
  for (const auto& v : r.verdicts)
    if (v.theorem_id == id) return v;
  throw MissingSeries("no verdict " + id);
}

std::string brief(const TheoremVerdict& v) {
  std::string s = to_string(v.status);
  for (const auto& [k, x] : v.measured) s += fmt::format(" {}={:.4g}", k, x);
  return s;
}

double closed_form(double t, double T) { return T - t + 1.0 - (T + 1.0) * std::exp(-t); }

double scalar_rk4(double t_end, double T, double b0, double cb) {
  auto rhs = [&](double t, double y) {
    const double e = (std::exp(-t) - std::exp(-T)) / (1.0 - std::exp(-T));
    return std::log((e * b0 + (1.0 - e) * cb) / cb) - y;
  };
  const int n = 40000;
  const double h = t_end / n;
  double y = 0.0, t = 0.0;
  for (int k = 0; k < n; ++k) {
    const double k1 = rhs(t, y), k2 = rhs(t + h / 2, y + h / 2 * k1), k3 = rhs(t + h / 2, y + h / 2 * k2),
                 k4 = rhs(t + h, y + h * k3);
    y += h / 6 * (k1 + 2 * k2 + 2 * k3 + k4);
    t += h;
  }
  return y;
}

Criterion exact_tracking() {
  Criterion c{1};
  RunConfig cfg = shipped("pf_zero");
  cfg.schedule.eps_stop = 1e-3;
  const Model m = build_model(cfg.model);
  c.require(std::abs(m.cls.T - std::log(2.0)) < 1e-15, fmt::format("T = {:.15f}", m.cls.T));
  const auto start = std::chrono::steady_clock::now();
  const SnapshotSeries f = run(m, reference_volume_form(m), cfg.schedule);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  double err = 0.0;
  for (const auto& s : f.snapshots) err = std::max(err, test::sup_abs(s.phi - closed_form(s.t, m.cls.T)));
  c.require(f.completed, fmt::format("run completed to t = {:.10f}", f.snapshots.back().t));
  c.require(err < 1e-6, fmt::format("sup |phi - closed form| = {:.3e} (< 1e-6)", err));
  c.require(secs < 30.0, fmt::format("runtime {:.2f} s (< 30 s)", secs));
  double oracle = 0.0;
  for (double t : {0.2, 0.5, m.cls.T - 1e-3})
    oracle = std::max(oracle, std::abs(scalar_rk4(t, m.cls.T, m.cls.b0, m.cls.base_limit_coeff) - closed_form(t, m.cls.T)));
  c.require(oracle < 1e-10, fmt::format("closed form vs independent scalar RK4: {:.3e}", oracle));
  return c;
}

Criterion volume() {
  Criterion c{2};
  for (const auto& name : kPerturbed) {
    const RunResult& r = result(name);
    const double T = r.report["class"]["T"].get<double>();
    const auto& voe = r.series.get("volume_over_E");
    const double lim = omega_eta_volume(build_model(shipped(name).model).cls);
    double worst = 0.0;
    for (std::size_t i = 0; i < r.series.size(); ++i)
      if (r.series.t[i] >= T - 1e-3) worst = std::max(worst, std::abs(voe[i] - lim) / lim);
    c.require(worst <= 0.01, fmt::format("{}: max rel error of Vol/E for t >= T - 1e-3: {:.3e}", name, worst));
  }
  return c;
}

Criterion verdicts_on(int id, const std::vector<std::string>& configs, const std::vector<std::string>& ids) {
  Criterion c{id};
  for (const auto& name : configs) {
    const RunResult& r = result(name);
    for (const auto& tid : ids) {
      const TheoremVerdict& v = verdict(r, tid);
      c.require(v.passed(), fmt::format("{} {}: {}", name, tid, brief(v)));
    }
  }
  return c;
}

Criterion diameter() {
  Criterion c = verdicts_on(4, kShipped, {"DIAM_FIBRE"});
  for (const auto& name : kShipped) {
    const TheoremVerdict& v = verdict(result(name), "DIAM_FIBRE");
    const double decades = std::log10(v.window_E_max / std::max(v.window_E_min, 1e-300));
    c.require(decades >= 2.0, fmt::format("{} fit window spans {:.2f} decades", name, decades));
  }
  const TheoremVerdict& v = verdict(result("pf_zero"), "DIAM_FIBRE");
  c.require(v.measured.count("constant_rel_error") && v.measured.at("constant_rel_error") <= 0.005,
            fmt::format("pf_zero constant vs pi sqrt(a0/2): rel error {:.3e}",
                        v.measured.count("constant_rel_error") ? v.measured.at("constant_rel_error") : -1.0));
  return c;
}

Criterion potentials() {
  Criterion c{6};
  for (const auto& name : kPerturbed) {
    c.require(verdict(result(name), "AVG").passed(), fmt::format("{} AVG: {}", name, brief(verdict(result(name), "AVG"))));
    for (const std::string mode : {"spr", "ske"}) {
      const RunResult& r = result(name, mode);
      for (const char* id : {"SUBMERSION_RATE", "LIPSCHITZ_H"}) {
        const TheoremVerdict& v = verdict(r, id);
        c.require(v.passed(), fmt::format("{} [{}] {}: {}", name, mode, id, brief(v)));
      }
    }
  }
  return c;
}

Criterion elliptic() {
  Criterion c{7};
  for (const auto& name : kPerturbed) {
    const Model m = build_model(shipped(name).model);
    const EllipticBundle b = solve_elliptic(m, reference_volume_form(m));
    double worst = std::max(b.rho_b_spr.residual_sup, b.rho_b_prime_spr.residual_sup);
    if (b.rho_b_ske) worst = std::max({worst, b.rho_b_ske->residual_sup, b.rho_b_prime_ske->residual_sup});
    c.require(b.errors.empty() && worst < 1e-10, fmt::format("{}: base solver residual {:.3e}", name, worst));
  }
  {
    const Model m = build_model(shipped("sb_zero").model);
    PushforwardDensity g;
    g.values = Eigen::ArrayXd::Constant(m.cols(), 0.8);
    g.fibre_volume = 4 * std::numbers::pi * m.cls.a0;
    const EllipticSolution s = solve_base_tke(m, g, BaseCoefficient::EtaScaled);
    const double err = (s.potential + std::log(0.8)).abs().maxCoeff();
    c.require(err < 1e-10, fmt::format("constant G' = 0.8: |rho + log G'| = {:.3e}", err));
  }
  {
    const Model m = build_model(test::spec(ModelKind::ProductFlat, PerturbationProfile::FibreBump, 0.2, 256, 16));
    const EllipticSolution s = solve_spr(m);
    double worst = 0.0;
    for (int j = 0; j < m.cols(); ++j) {
      const Eigen::ArrayXd psi = m.psi0.col(j);
      const Eigen::ArrayXd dens = m.cls.a0 + test::latitude_operator(psi + s.potential.col(j));
      const Eigen::ArrayXd res =
          -test::latitude_operator(dens.log()) + 2.0 - m.cls.lambda * (m.cls.a0 + test::latitude_operator(psi));
      worst = std::max(worst, res.abs().maxCoeff());
    }
    c.require(worst < 1e-6, fmt::format("SPR prescribed-Ricci residual at 256 fibre points: {:.3e}", worst));
  }
  for (const auto& name : kPerturbed) {
    const Model m = build_model(shipped(name).model);
    const EllipticSolution s = solve_ske(m);
    const Field z = s.potential + m.psi0;
    double var = 0.0;
    for (int j = 0; j < m.cols(); ++j) var = std::max(var, z.col(j).maxCoeff() - z.col(j).minCoeff());
    c.require(var < 1e-6, fmt::format("{}: per-fibre variation of rho_SKE + psi0 = {:.3e}", name, var));
  }
  return c;
}

double heat_residual_at(int n, double t0) {
  const Model m = build_model(test::spec(ModelKind::SphereBase, PerturbationProfile::CoupledBump, 0.2, n, n));
  const ReferenceVolume omega = reference_volume_form(m);
  StepSchedule s;
  s.eps_stop = m.cls.T - 1.2 * t0;
  s.snapshot_stride = 1;
  const SnapshotSeries f = run(m, omega, s);
  std::size_t k = 0;
  while (f.snapshots[k].t < t0) ++k;
  return heat_residual_u(m, omega, f.snapshots[k], f.snapshots[k + 1]);
}

Criterion structural() {
  Criterion c{8};
  const double r1 = heat_residual_at(17, 0.1), r2 = heat_residual_at(33, 0.1);
  const double order = std::log2(r1 / r2);
  c.require(order >= 1.8, fmt::format("heat residual of u: {:.3e} (n=17) -> {:.3e} (n=33), order {:.2f}", r1, r2, order));
  for (const auto& name : kPerturbed) {
    RunConfig coarse = shipped(name);
    coarse.schedule.eps_stop = 0.1;
    RunConfig fine = coarse;
    fine.model.grid.n_fibre = 2 * coarse.model.grid.n_fibre - 1;
    fine.model.grid.n_base = 2 * coarse.model.grid.n_base - (coarse.model.kind == ModelKind::SphereBase ? 1 : 0);
    coarse.registry = fine.registry = {"VOLUME"};
    const RunResult a = execute_run(coarse, {}, std::nullopt, true);
    const RunResult b = execute_run(fine, {}, std::nullopt, true);
    auto sup = [](const std::vector<double>& v) { return *std::max_element(v.begin(), v.end()); };
    const double ga = sup(a.series.get("R_method_gap")), gb = sup(b.series.get("R_method_gap"));
    const double rs = sup(a.series.get("R_sup"));
    c.require(gb <= std::max(1e-9 * rs, ga / std::pow(2.0, 1.8)),
              fmt::format("{}: scalar curvature methods gap {:.3e} -> {:.3e} (R scale {:.3g})", name, ga, gb, rs));
    const Model m = build_model(coarse.model);
    const double h = m.fibre.spacing();
    const double res = reference_volume_form(m).ricci_residual;
    c.require(res <= h * h, fmt::format("{}: Ric Omega identity residual {:.3e} (tolerance h^2 = {:.3e})", name, res, h * h));
  }
  return c;
}

Criterion liyau() {
  Criterion c = verdicts_on(9, kPerturbed, {"LIYAU_GRAD", "LIYAU_LAP"});
  const RunResult& r = result("pf_zero");
  double worst = 0.0;
  for (const char* k : {"liyau_grad_sup", "liyau_lap_sup", "liyau_lap_inf"})
    for (double x : r.series.get(k)) worst = std::max(worst, std::abs(x));
  c.require(worst <= 1e-8, fmt::format("pf_zero Li-Yau quantities identically zero: sup {:.3e}", worst));
  return c;
}

Criterion negative_controls() {
  Criterion c{10};
  const RunResult& r = result("pf_fibrebump");
  VerdictContext ctx;
  ctx.kind = ModelKind::ProductFlat;
  ctx.profile = PerturbationProfile::FibreBump;
  ctx.T = r.report["class"]["T"].get<double>();
  ctx.eps_stop = shipped("pf_fibrebump").schedule.eps_stop;
  ctx.a0 = 2.0;
  const VerdictTolerances tol;
  ObservableSeries s = r.series;
  c.require(check_theorem("DIAM_FIBRE", s, ctx, tol).passed(), "unmodified series passes DIAM_FIBRE");
  c.require(check_theorem("TYPE_I", s, ctx, tol).passed(), "unmodified series passes TYPE_I");
  std::vector<double> d, k;
  for (std::size_t i = 0; i < s.size(); ++i) {
    d.push_back(3.0 * std::pow(s.E[i], 0.25));
    const double g = 1.0 - std::exp(s.t[i] - ctx.T);
    k.push_back(g * std::pow(g, -1.5));
  }
  s.set("fibre_diam_max", d);
  s.set("fibre_diam_min", d);
  const TheoremVerdict dv = check_theorem("DIAM_FIBRE", s, ctx, tol);
  c.require(!dv.passed(), "E^{1/4} diameter: DIAM_FIBRE " + brief(dv));
  s.set("typeI_sup", k);
  const TheoremVerdict tv = check_theorem("TYPE_I", s, ctx, tol);
  c.require(!tv.passed(), "(1-e^{t-T})^{-3/2} curvature: TYPE_I " + brief(tv));
  return c;
}

}  // namespace

int main() {
  using Fn = Criterion (*)();
  const std::vector<std::pair<int, Fn>> all{
      {1, exact_tracking},
      {2, volume},
      {3, [] {
         Criterion c = verdicts_on(3, kShipped, {"VFC_BAND"});
         const auto& v = verdict(result("pf_zero"), "VFC_BAND");
         c.require(v.measured.count("exact_rel_dev") && v.measured.at("exact_rel_dev") <= 1e-8,
                   "pf_zero ratio equals e^{T-t} to 1e-8");
         return c;
       }},
      {4, diameter},
      {5, [] { return verdicts_on(5, kShipped, {"TYPE_I", "ZHANG_CEILING"}); }},
      {6, potentials},
      {7, elliptic},
      {8, structural},
      {9, liyau},
      {10, negative_controls},
  };
  int failed = 0;
  for (const auto& [id, fn] : all) {
    Criterion c{id};
    try {
      c = fn();
    } catch (const std::exception& e) {
      c.pass = false;
      c.lines.push_back(std::string("    error: ") + e.what());
    }
    std::cout << fmt::format("{} criterion {}\n", c.pass ? "PASS" : "FAIL", id);
    for (const auto& l : c.lines) std::cout << l << "\n";
    std::cout.flush();
    if (!c.pass) ++failed;
  }
  std::cout << fmt::format("{} of {} criteria passed\n", all.size() - failed, all.size());
  return failed == 0 ? 0 : 1;
}
