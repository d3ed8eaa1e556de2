#include "krf/pipeline.hpp"

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <future>
#include <iostream>
#include <map>
#include <sstream>
#include <thread>

#include <fmt/format.h>

#include "krf/errors.hpp"
#include "krf/snapshot_io.hpp"
#include "krf/svg_plot.hpp"

namespace krf {

namespace fs = std::filesystem;

namespace {

constexpr const char* kSeriesFile = "series.csv";
constexpr const char* kReportFile = "report.json";
constexpr const char* kConfigFile = "config.yaml";
constexpr const char* kSnapshotFile = "snapshots.krfsnap";

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(fmt::format("cannot write {}", p.string()));
  out << text;
}

std::string read_text(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw Error(fmt::format("cannot read {}", p.string()));
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string field_csv(const Field& f, const Axis& fibre, const Axis& base) {
  std::string out = "theta_fibre";
  for (int j = 0; j < base.size(); ++j) out += fmt::format(",{:.17g}", base.coord(j));
  out += "\n";
  for (int i = 0; i < fibre.size(); ++i) {
    out += fmt::format("{:.17g}", fibre.coord(i));
    for (int j = 0; j < base.size(); ++j) out += fmt::format(",{:.17g}", f(i, j));
    out += "\n";
  }
  return out;
}

nlohmann::json solution_json(const EllipticSolution& s) {
  return {{"residual_sup", s.residual_sup},
          {"iterations", s.iterations},
          {"normalization", s.normalization == Normalization::MeanZero ? "MeanZero" : "EquationPinned"},
          {"sup_abs", s.potential.abs().maxCoeff()}};
}

bool is_config_error(const Error& e) {
  return dynamic_cast<const ConfigError*>(&e) || dynamic_cast<const InvalidClass*>(&e) ||
         dynamic_cast<const NonPositiveInitialMetric*>(&e);
}

ObservableSeries select_columns(const ObservableSeries& s, const std::vector<std::string>& keys) {
  if (keys.empty()) return s;
  ObservableSeries out;
  out.t = s.t;
  out.E = s.E;
  for (const auto& k : keys)
    if (s.has(k)) out.set(k, s.get(k));
  return out;
}

std::string iso_now() {
  const std::time_t now = std::time(nullptr);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
  return buf;
}

}  // namespace

void apply_overrides(RunConfig& cfg, const CliOverrides& o) {
  if (o.resolution) {
    if (*o.resolution < 16) throw ConfigError("--resolution-override must be at least 16");
    cfg.model.grid.n_fibre = *o.resolution;
    cfg.model.grid.n_base = *o.resolution;
  }
  if (o.eps_stop) {
    cfg.schedule.eps_stop = *o.eps_stop;
    validate(cfg.schedule);
  }
  if (o.mode) {
    if (*o.mode != "spr" && *o.mode != "ske") throw ConfigError(fmt::format("--mode must be spr or ske, got '{}'", *o.mode));
    cfg.mode = *o.mode;
  }
  if (!o.registry.empty()) {
    for (const auto& id : o.registry) {
      const auto& ids = registry_ids();
      if (std::find(ids.begin(), ids.end(), id) == ids.end())
        throw ConfigError(fmt::format("--registry: unknown theorem id '{}'", id));
    }
    cfg.registry = o.registry;
  }
  if (o.allow_failures) cfg.fail_on_verdicts = false;
}

fs::path resolve_output_dir(const RunConfig& cfg, const CliOverrides& o) {
  fs::path p = o.out ? fs::path(*o.out) : (!cfg.output_dir.empty() ? fs::path(cfg.output_dir) : fs::path("runs") / cfg.name);
  if (p.is_relative()) {
    if (const char* root = std::getenv("KRFLAB_OUT_ROOT"); root && *root) p = fs::path(root) / p;
  }
  return p;
}

EllipticBundle solve_elliptic(const Model& model, const ReferenceVolume& omega) {
  EllipticBundle b;
  const double scale = 1.0 - std::exp(-model.cls.T);
  b.spr = solve_spr(model);
  b.g_spr = pushforward_G(model, omega);
  b.rho_b_spr = solve_base_tke(model, b.g_spr, BaseCoefficient::Eta);
  b.rho_b_prime_spr = solve_base_tke(model, b.g_spr, BaseCoefficient::EtaScaled);
  b.targets.spr = scale * pullback(model, b.rho_b_prime_spr.potential);
  try {
    b.ske = solve_ske(model);
    b.g_ske = pushforward_G(model, omega, &*b.ske);
    b.rho_b_ske = solve_base_tke(model, *b.g_ske, BaseCoefficient::Eta);
    b.rho_b_prime_ske = solve_base_tke(model, *b.g_ske, BaseCoefficient::EtaScaled);
    b.targets.ske = scale * pullback(model, b.rho_b_prime_ske->potential);
  } catch (const Error& e) {
    b.errors.push_back(fmt::format("ske construction failed: {}", e.what()));
  }
  return b;
}

nlohmann::json elliptic_summary(const EllipticBundle& b) {
  nlohmann::json j;
  j["rho_spr"] = solution_json(b.spr);
  j["G_spr"] = {{"min", b.g_spr.values.minCoeff()},
                {"max", b.g_spr.values.maxCoeff()},
                {"fibre_volume", b.g_spr.fibre_volume},
                {"mass_error", b.g_spr.mass_error}};
  j["rho_B_spr"] = solution_json(b.rho_b_spr);
  j["rho_B_prime_spr"] = solution_json(b.rho_b_prime_spr);
  if (b.ske) {
    j["rho_ske"] = solution_json(*b.ske);
    j["G_ske"] = {{"min", b.g_ske->values.minCoeff()},
                  {"max", b.g_ske->values.maxCoeff()},
                  {"fibre_volume", b.g_ske->fibre_volume},
                  {"mass_error", b.g_ske->mass_error}};
    j["rho_B_ske"] = solution_json(*b.rho_b_ske);
    j["rho_B_prime_ske"] = solution_json(*b.rho_b_prime_ske);
  }
  j["errors"] = b.errors;
  return j;
}

RunResult execute_run(const RunConfig& cfg, const fs::path& out_dir, std::optional<long> resume_from,
                      bool allow_failures) {
  const auto wall_start = std::chrono::steady_clock::now();
  RunResult res;
  nlohmann::json& rep = res.report;
  rep["name"] = cfg.name;
  rep["config"] = dump_config(cfg);
  rep["started"] = iso_now();
  const bool write = !out_dir.empty();
  if (write) {
    fs::create_directories(out_dir);
    write_text(out_dir / kConfigFile, dump_config(cfg));
  }

  const Model model = build_model(cfg.model);
  rep["class"] = to_json(model.cls);
  const ReferenceVolume omega = reference_volume_form(model);
  rep["reference_volume"] = {{"kappa", omega.kappa}, {"ricci_residual", omega.ricci_residual}};

  EllipticBundle eb;
  try {
    eb = solve_elliptic(model, omega);
    rep["elliptic"] = elliptic_summary(eb);
  } catch (const Error& e) {
    rep["elliptic"] = {{"error", e.what()}};
    res.pipeline_ok = false;
  }

  // Flow, optionally continuing from a stored snapshot.
  std::vector<Snapshot> earlier;
  std::optional<Snapshot> start;
  const fs::path snap_path = out_dir / kSnapshotFile;
  if (resume_from) {
    if (!write) throw ConfigError("resume needs an output directory");
    SnapshotFile f = read_snapshot_file(snap_path);
    if (f.snapshots.empty()) throw SnapshotFormatError("no snapshots to resume from");
    const long n = static_cast<long>(f.snapshots.size());
    const long k = *resume_from < 0 ? n + *resume_from : *resume_from;
    if (k < 0 || k >= n) throw ConfigError(fmt::format("resume index {} outside 0..{}", *resume_from, n - 1));
    earlier.assign(f.snapshots.begin(), f.snapshots.begin() + k);
    start = f.snapshots[k];
    rep["resumed_from"] = {{"index", k}, {"t", start->t}};
  }
  std::unique_ptr<SnapshotWriter> writer;
  if (write && cfg.write_snapshots) {
    writer = std::make_unique<SnapshotWriter>(snap_path, snapshot_header(cfg.model, model.cls, cfg.schedule));
    for (const auto& s : earlier) writer->write(s);
  }
  res.flow = run(model, omega, cfg.schedule, start ? &*start : nullptr, [&](const Snapshot& s) {
    if (writer) writer->write(s);
  });
  if (writer) writer->flush();
  if (!earlier.empty()) {
    for (auto& s : earlier) s.rhs = cma_rhs(model, omega, s.phi, s.t);
    res.flow.snapshots.insert(res.flow.snapshots.begin(), earlier.begin(), earlier.end());
  }
  const auto& dts = res.flow.dt_history;
  rep["flow"] = {{"completed", res.flow.completed},
                 {"failure_kind", res.flow.failure_kind},
                 {"failure", res.flow.failure},
                 {"steps", res.flow.steps},
                 {"snapshots", res.flow.snapshots.size()},
                 {"t_final", res.flow.snapshots.empty() ? 0.0 : res.flow.snapshots.back().t},
                 {"dt_min", dts.empty() ? 0.0 : *std::min_element(dts.begin(), dts.end())},
                 {"dt_max", dts.empty() ? 0.0 : *std::max_element(dts.begin(), dts.end())},
                 {"positivity_margin_min",
                  res.flow.positivity_margin.empty()
                      ? 0.0
                      : *std::min_element(res.flow.positivity_margin.begin(), res.flow.positivity_margin.end())}};
  if (!res.flow.completed) res.pipeline_ok = false;

  // Observables and verdicts.
  res.series = measure_series(model, omega, res.flow.snapshots, eb.targets);
  VerdictContext ctx;
  ctx.kind = cfg.model.kind;
  ctx.profile = cfg.model.psi0.profile;
  ctx.a0 = cfg.model.a0;
  ctx.T = model.cls.T;
  ctx.eps_stop = cfg.schedule.eps_stop;
  ctx.n = cfg.model.n;
  ctx.m = cfg.model.m;
  ctx.limit_volume = omega_eta_volume(model.cls);
  ctx.mode = cfg.mode;
  ctx.rho_spr_sup = eb.spr.potential.size() ? eb.spr.potential.abs().maxCoeff() : 0.0;

  const bool ske = cfg.mode == "ske";
  const Field& target = ske ? eb.targets.ske : eb.targets.spr;
  if (target.size() > 0) {
    const std::string tag = ske ? "ske" : "spr";
    try {
      const FitWindow w = fit_window(res.series, cfg.tolerances, ctx.T, ctx.eps_stop);
      const double cu = fit_offset(res.series, w, "uconv_" + tag + "_sup", "uconv_" + tag + "_inf");
      const VConfig v = add_liyau_columns(res.series, model, omega, res.flow.snapshots, target, cu);
      rep["v_config"] = {{"A", v.A}, {"c_star", v.c_star}, {"mode", tag}};
    } catch (const Error& e) {
      rep["v_config"] = {{"error", e.what()}};
    }
  } else {
    rep["v_config"] = {{"error", fmt::format("limit candidate for mode {} is unavailable", cfg.mode)}};
  }
  res.verdicts = run_registry(res.series, ctx, cfg.tolerances, cfg.registry);
  nlohmann::json vj = nlohmann::json::array();
  int failed = 0;
  for (const auto& v : res.verdicts) {
    vj.push_back(to_json(v));
    if (v.status == VerdictStatus::Failed) ++failed;
  }
  rep["verdicts"] = vj;
  rep["verdicts_failed"] = failed;
  rep["notes"] = "C0_BRACKET checks envelope decay and membership in the fitted affine family; the literal "
                 "bracket endpoints depend on the normalization of rho_SPR.";

  const ObservableSeries csv = select_columns(res.series, cfg.estimators);
  rep["series"] = {{"file", kSeriesFile}, {"rows", csv.size()}, {"columns", csv.names()}};
  rep["wall_seconds"] =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - wall_start).count();
  if (write) {
    write_text(out_dir / kSeriesFile, csv.to_csv());
    write_text(out_dir / kReportFile, rep.dump(2) + "\n");
  }
  if (!res.pipeline_ok)
    res.exit_code = kExitPipeline;
  else if (failed > 0 && cfg.fail_on_verdicts && !allow_failures)
    res.exit_code = kExitVerdicts;
  return res;
}

int cmd_run(const fs::path& config, const CliOverrides& o) {
  RunConfig cfg;
  try {
    cfg = load_config(config);
    apply_overrides(cfg, o);
  } catch (const Error& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  }
  const fs::path out = resolve_output_dir(cfg, o);
  try {
    const RunResult r = execute_run(cfg, out, o.resume_from, o.allow_failures);
    std::cout << fmt::format("run '{}' -> {}\n", cfg.name, out.string());
    if (!r.report["flow"]["completed"].get<bool>())
      std::cout << fmt::format("flow stopped early: {}\n", r.report["flow"]["failure"].get<std::string>());
    for (const auto& v : r.verdicts) std::cout << fmt::format("  {:<16} {}\n", v.theorem_id, to_string(v.status));
    return r.exit_code;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return is_config_error(e) ? kExitConfig : kExitPipeline;
  }
}

int cmd_solve_base(const fs::path& config, const CliOverrides& o) {
  RunConfig cfg;
  try {
    cfg = load_config(config);
    apply_overrides(cfg, o);
  } catch (const Error& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  }
  const fs::path out = resolve_output_dir(cfg, o);
  try {
    const Model model = build_model(cfg.model);
    const ReferenceVolume omega = reference_volume_form(model);
    const EllipticBundle b = solve_elliptic(model, omega);
    fs::create_directories(out);
    write_text(out / "rho_spr.csv", field_csv(b.spr.potential, model.fibre, model.base));
    if (b.ske) write_text(out / "rho_ske.csv", field_csv(b.ske->potential, model.fibre, model.base));
    std::string base = "base_coord,G_spr,rho_B_spr,rho_B_prime_spr";
    if (b.ske) base += ",G_ske,rho_B_ske,rho_B_prime_ske";
    base += "\n";
    for (int j = 0; j < model.cols(); ++j) {
      base += fmt::format("{:.17g},{:.17g},{:.17g},{:.17g}", model.base.coord(j), b.g_spr.values(j),
                          b.rho_b_spr.potential(0, j), b.rho_b_prime_spr.potential(0, j));
      if (b.ske)
        base += fmt::format(",{:.17g},{:.17g},{:.17g}", b.g_ske->values(j), b.rho_b_ske->potential(0, j),
                            b.rho_b_prime_ske->potential(0, j));
      base += "\n";
    }
    write_text(out / "base_potentials.csv", base);
    nlohmann::json j = elliptic_summary(b);
    j["class"] = to_json(model.cls);
    j["reference_volume"] = {{"kappa", omega.kappa}, {"ricci_residual", omega.ricci_residual}};
    write_text(out / "elliptic.json", j.dump(2) + "\n");
    std::cout << fmt::format("elliptic solutions -> {}\n", out.string());
    std::cout << fmt::format("  rho_SPR   residual {:.3e}\n", b.spr.residual_sup);
    if (b.ske) std::cout << fmt::format("  rho_SKE   residual {:.3e}\n", b.ske->residual_sup);
    std::cout << fmt::format("  rho_B     residual {:.3e}\n", b.rho_b_spr.residual_sup);
    std::cout << fmt::format("  rho'_B    residual {:.3e}\n", b.rho_b_prime_spr.residual_sup);
    std::cout << fmt::format("  G' mass check: relative error {:.3e} (spr)", b.g_spr.mass_error);
    if (b.g_ske) std::cout << fmt::format(", {:.3e} (ske)", b.g_ske->mass_error);
    std::cout << "\n";
    for (const auto& e : b.errors) std::cout << "  warning: " << e << "\n";
    return kExitOk;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return is_config_error(e) ? kExitConfig : kExitPipeline;
  }
}

int cmd_report(const fs::path& run_dir) {
  std::vector<std::string> missing;
  for (const char* f : {kSeriesFile, kReportFile})
    if (!fs::exists(run_dir / f)) missing.push_back(f);
  if (!missing.empty()) {
    std::string list;
    for (const auto& m : missing) list += " " + m;
    std::cerr << fmt::format("error: {} is missing run artifacts:{} (expected {} and {})\n", run_dir.string(), list,
                             kSeriesFile, kReportFile);
    return kExitPipeline;
  }
  ObservableSeries s;
  nlohmann::json rep;
  try {
    s = ObservableSeries::from_csv(read_text(run_dir / kSeriesFile));
    rep = nlohmann::json::parse(read_text(run_dir / kReportFile));
  } catch (const std::exception& e) {
    std::cerr << "error: cannot read run artifacts: " << e.what() << "\n";
    return kExitPipeline;
  }
  std::map<std::string, nlohmann::json> verdict;
  for (const auto& v : rep.value("verdicts", nlohmann::json::array())) verdict[v["theorem_id"]] = v;

  auto col = [&](const std::string& k) -> std::vector<double> { return s.has(k) ? s.get(k) : std::vector<double>{}; };
  auto line = [&](const std::string& label, std::vector<double> y, bool dashed = false) {
    return PlotLine{label, s.E, std::move(y), dashed};
  };
  auto fitted = [&](const std::string& id, const char* c_key, const char* e_key, const std::string& label) {
    std::vector<double> y;
    auto it = verdict.find(id);
    if (it == verdict.end() || !it->second["measured"].contains(c_key)) return PlotLine{};
    const double c = it->second["measured"][c_key].get<double>();
    const double p = it->second["measured"][e_key].get<double>();
    for (double e : s.E) y.push_back(c * std::pow(e, p));
    return PlotLine{label, s.E, y, true};
  };
  auto non_empty = [](std::vector<PlotLine> v) {
    std::vector<PlotLine> out;
    for (auto& l : v)
      if (!l.y.empty()) out.push_back(std::move(l));
    return out;
  };

  std::vector<std::pair<std::string, LogLogPlot>> panels;
  panels.push_back({"volume.svg", {"Volume ratio and Vol/E", "E(t)", "value",
                                   non_empty({line("vol ratio min", col("vol_ratio_min")),
                                              line("vol ratio max", col("vol_ratio_max")),
                                              line("Vol / E", col("volume_over_E"))})}});
  panels.push_back({"diameter.svg", {"Fibre diameter", "E(t)", "diameter",
                                     non_empty({line("fibre diam max", col("fibre_diam_max")),
                                                line("fibre diam min", col("fibre_diam_min")),
                                                fitted("DIAM_FIBRE", "constant_max", "exponent_max", "fit")})}});
  panels.push_back({"curvature.svg", {"Scalar curvature", "E(t)", "value",
                                      non_empty({line("sup R", col("R_sup")),
                                                 line("sup (1-e^(t-T)) R", col("typeI_sup")),
                                                 line("sup R (T-t)^2", col("zhang_sup"))})}});
  {
    const std::string tag = rep.contains("v_config") && rep["v_config"].value("mode", "spr") == "ske" ? "ske" : "spr";
    std::vector<double> dist;
    double c = 0.0;
    if (verdict.count("SUBMERSION_RATE") && verdict["SUBMERSION_RATE"]["measured"].contains("c_star"))
      c = verdict["SUBMERSION_RATE"]["measured"]["c_star"].get<double>();
    if (s.has("sub_" + tag + "_sup"))
      for (std::size_t i = 0; i < s.size(); ++i)
        dist.push_back(std::max(s.get("sub_" + tag + "_sup")[i] - c, c - s.get("sub_" + tag + "_inf")[i]));
    panels.push_back({"potential_distance.svg", {"Potential distance to limit candidate", "E(t)", "distance",
                                                 non_empty({line("dist(phi, target + c*)", dist),
                                                            line("sup |phi - fibre avg|", col("avg_dev")),
                                                            fitted("SUBMERSION_RATE", "constant", "exponent", "fit")})}});
  }
  panels.push_back({"traces.svg", {"Traces and metric equivalence", "E(t)", "value",
                                   non_empty({line("sup tr f*eta", col("tr_eta_sup")),
                                              line("sup E tr omega_0", col("e_tr_omega0_sup")),
                                              line("eig ratio max", col("eig_ratio_max")),
                                              line("eig ratio min", col("eig_ratio_min"))})}});
  panels.push_back({"liyau.svg", {"Li-Yau monitors", "E(t)", "value",
                                  non_empty({line("sup |grad v|^2 / v", col("liyau_grad_sup")),
                                             line("sup Laplacian v", col("liyau_lap_sup"))})}});

  std::string md = fmt::format("# Run report: {}\n\n", rep.value("name", std::string("run")));
  const auto flow = rep.value("flow", nlohmann::json::object());
  if (!flow.value("completed", false))
    md += fmt::format("**Run did not complete**: {} ({})\n\n", flow.value("failure", std::string("unknown")),
                      flow.value("failure_kind", std::string("")));
  md += fmt::format("Snapshots: {}, steps: {}, final t: {}\n\n", flow.value("snapshots", 0), flow.value("steps", 0),
                    flow.value("t_final", 0.0));
  md += "| theorem | status | notes |\n|---|---|---|\n";
  for (const auto& v : rep.value("verdicts", nlohmann::json::array()))
    md += fmt::format("| {} | {} | {} |\n", v["theorem_id"].get<std::string>(), v["status"].get<std::string>(),
                      v.value("notes", std::string("")));
  md += "\n";
  int rendered = 0;
  for (const auto& [file, plot] : panels) {
    if (plot.lines.empty() || s.size() == 0) {
      md += fmt::format("Panel {} skipped: no data.\n\n", file);
      continue;
    }
    write_text(run_dir / file, render_svg(plot));
    md += fmt::format("![{}]({})\n\n", plot.title, file);
    ++rendered;
  }
  write_text(run_dir / "report.md", md);
  std::cout << fmt::format("report: {} panels -> {}\n", rendered, (run_dir / "report.md").string());
  return kExitOk;
}

namespace {

void set_path(YAML::Node root, const std::string& dotted, const YAML::Node& value) {
  std::vector<std::string> parts;
  std::stringstream ss(dotted);
  std::string p;
  while (std::getline(ss, p, '.')) parts.push_back(p);
  std::vector<YAML::Node> chain{root};
  for (std::size_t i = 0; i + 1 < parts.size(); ++i) chain.push_back(chain.back()[parts[i]]);
  chain.back()[parts.back()] = value;
}

}  // namespace

int cmd_sweep(const fs::path& sweep_file, const CliOverrides& o) {
  YAML::Node sweep;
  YAML::Node tmpl;
  std::string name = "sweep";
  std::vector<std::pair<std::string, std::vector<YAML::Node>>> params;
  try {
    sweep = YAML::LoadFile(sweep_file.string());
    for (const auto& kv : sweep) {
      const auto k = kv.first.as<std::string>();
      if (k != "template" && k != "parameters" && k != "name")
        throw ConfigError(fmt::format("{}:{}: unknown key '{}' in sweep file", sweep_file.string(),
                                      kv.first.Mark().line + 1, k));
    }
    if (!sweep["template"]) throw ConfigError(fmt::format("{}: sweep file needs 'template'", sweep_file.string()));
    if (sweep["name"]) name = sweep["name"].as<std::string>();
    fs::path tp = sweep["template"].as<std::string>();
    if (tp.is_relative()) tp = sweep_file.parent_path() / tp;
    tmpl = YAML::LoadFile(tp.string());
    for (const auto& kv : sweep["parameters"]) {
      std::vector<YAML::Node> vals;
      for (const auto& v : kv.second) vals.push_back(v);
      if (vals.empty()) throw ConfigError(fmt::format("sweep parameter '{}' has no values", kv.first.as<std::string>()));
      params.push_back({kv.first.as<std::string>(), vals});
    }
  } catch (const YAML::Exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const Error& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  }

  // Cartesian product in declaration order, last parameter fastest.
  struct Job {
    std::string label;
    std::vector<std::string> values;
    RunConfig cfg;
    std::string config_error;
  };
  std::vector<Job> jobs;
  std::vector<std::size_t> idx(params.size(), 0);
  RunConfig probe;
  const fs::path root = [&] {
    CliOverrides oo = o;
    if (!oo.out) oo.out = (fs::path("runs") / name).string();
    return resolve_output_dir(probe, oo);
  }();
  for (;;) {
    YAML::Node node = YAML::Clone(tmpl);
    Job job;
    for (std::size_t p = 0; p < params.size(); ++p) {
      const YAML::Node& v = params[p].second[idx[p]];
      if (params[p].first == "resolution") {
        set_path(node, "model.grid.n_fibre", v);
        set_path(node, "model.grid.n_base", v);
      } else {
        set_path(node, params[p].first, v);
      }
      job.values.push_back(v.as<std::string>());
      job.label += (job.label.empty() ? "" : "_") + params[p].first + "-" + v.as<std::string>();
    }
    if (job.label.empty()) job.label = "base";
    try {
      job.cfg = parse_config(node, fmt::format("{}[{}]", sweep_file.string(), job.label));
      CliOverrides oo = o;
      oo.out.reset();
      apply_overrides(job.cfg, oo);
      job.cfg.name = job.label;
    } catch (const Error& e) {
      job.config_error = e.what();
    }
    jobs.push_back(std::move(job));
    bool carry = true;
    for (std::size_t p = params.size(); carry && p-- > 0;) {
      carry = ++idx[p] == params[p].second.size();
      if (carry) idx[p] = 0;
    }
    if (carry) break;
  }

  struct Row {
    std::string status;
    std::vector<TheoremVerdict> verdicts;
    nlohmann::json report;
  };
  std::vector<Row> rows(jobs.size());
  const unsigned workers = std::max(1u, std::thread::hardware_concurrency());
  std::vector<std::future<void>> running;
  for (std::size_t k = 0; k < jobs.size(); ++k) {
    if (!jobs[k].config_error.empty()) {
      rows[k].status = "config_error";
      continue;
    }
    if (running.size() >= workers) {
      running.front().get();
      running.erase(running.begin());
    }
    running.push_back(std::async(std::launch::async, [&, k] {
      try {
        RunResult r = execute_run(jobs[k].cfg, root / jobs[k].label, std::nullopt, true);
        rows[k].status = r.pipeline_ok ? "ok" : "pipeline_failure";
        rows[k].verdicts = std::move(r.verdicts);
        rows[k].report = std::move(r.report);
      } catch (const std::exception& e) {
        rows[k].status = "pipeline_failure";
        rows[k].report = {{"error", e.what()}};
      }
    }));
  }
  for (auto& f : running) f.get();

  std::string csv = "label";
  for (const auto& p : params) csv += "," + p.first;
  csv += ",status";
  for (const auto& id : registry_ids()) csv += "," + id;
  csv += ",diam_exponent,submersion_c_star,submersion_exponent,type_i_final\n";
  int bad = 0;
  for (std::size_t k = 0; k < jobs.size(); ++k) {
    csv += jobs[k].label;
    for (const auto& v : jobs[k].values) csv += "," + v;
    csv += "," + rows[k].status;
    std::map<std::string, const TheoremVerdict*> by_id;
    for (const auto& v : rows[k].verdicts) by_id[v.theorem_id] = &v;
    for (const auto& id : registry_ids()) {
      auto it = by_id.find(id);
      csv += "," + (it == by_id.end() ? std::string("") : to_string(it->second->status));
      if (it != by_id.end() && it->second->status == VerdictStatus::Failed) ++bad;
    }
    auto measured = [&](const std::string& id, const std::string& key) {
      auto it = by_id.find(id);
      if (it == by_id.end() || !it->second->measured.count(key)) return std::string("");
      return fmt::format("{:.10g}", it->second->measured.at(key));
    };
    csv += "," + measured("DIAM_FIBRE", "exponent_max") + "," + measured("SUBMERSION_RATE", "c_star") + "," +
           measured("SUBMERSION_RATE", "exponent") + "," + measured("TYPE_I", "final") + "\n";
    if (rows[k].status != "ok") ++bad;
  }
  fs::create_directories(root);
  write_text(root / "sweep.csv", csv);
  std::cout << fmt::format("sweep '{}': {} runs -> {}\n", name, jobs.size(), (root / "sweep.csv").string());
  for (std::size_t k = 0; k < jobs.size(); ++k)
    std::cout << fmt::format("  {:<32} {}{}\n", jobs[k].label, rows[k].status,
                             jobs[k].config_error.empty() ? "" : " (" + jobs[k].config_error + ")");
  if (bad > 0 && !o.allow_failures) return kExitVerdicts;
  return kExitOk;
}

}  // namespace krf
