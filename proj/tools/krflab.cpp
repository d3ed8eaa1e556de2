#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "krf/pipeline.hpp"

int main(int argc, char** argv) {
  CLI::App app{"krflab: Monge-Ampere flow laboratory for Fano fibrations"};
  app.require_subcommand(1);

  std::string config;
  krf::CliOverrides o;
  std::string out;
  int resolution = 0;
  double eps_stop = 0.0;
  std::string mode;
  long resume_from = 0;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config, "YAML config file")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", out, "output directory");
    sub->add_option("--resolution-override", resolution, "grid nodes per axis");
    sub->add_option("--eps-stop", eps_stop, "stop at T - eps_stop");
    sub->add_option("--mode", mode, "limit candidate: spr or ske");
    sub->add_option("--registry", o.registry, "theorem ids to check")->delimiter(',');
    sub->add_flag("--allow-failures", o.allow_failures, "verdict failures exit 0");
  };

  CLI::App* run = app.add_subcommand("run", "integrate the flow and evaluate verdicts");
  add_common(run);
  run->add_option("--resume-from", resume_from, "continue from stored snapshot index (negative: from end)");

  CLI::App* solve = app.add_subcommand("solve-base", "solve the fibrewise and base elliptic problems");
  add_common(solve);

  std::string run_dir;
  CLI::App* report = app.add_subcommand("report", "render plots and a summary for a run directory");
  report->add_option("run_dir", run_dir, "run output directory")->required();

  CLI::App* sweep = app.add_subcommand("sweep", "run a parameter sweep");
  add_common(sweep);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : krf::kExitConfig;
  }

  auto fill = [&](CLI::App* sub) {
    if (sub->count("--out")) o.out = out;
    if (sub->count("--resolution-override")) o.resolution = resolution;
    if (sub->count("--eps-stop")) o.eps_stop = eps_stop;
    if (sub->count("--mode")) o.mode = mode;
  };

  if (*run) {
    fill(run);
    if (run->count("--resume-from")) o.resume_from = resume_from;
    return krf::cmd_run(config, o);
  }
  if (*solve) {
    fill(solve);
    return krf::cmd_solve_base(config, o);
  }
  if (*report) return krf::cmd_report(run_dir);
  if (*sweep) {
    fill(sweep);
    return krf::cmd_sweep(config, o);
  }
  return krf::kExitConfig;
}
