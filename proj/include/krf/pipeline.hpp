#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "krf/config.hpp"
#include "krf/elliptic.hpp"
#include "krf/estimators.hpp"
#include "krf/flow.hpp"
#include "krf/verdicts.hpp"

namespace krf {

enum ExitCode : int { kExitOk = 0, kExitConfig = 1, kExitPipeline = 2, kExitVerdicts = 3 };

struct CliOverrides {
  std::optional<std::string> out;
  std::optional<int> resolution;
  std::optional<double> eps_stop;
  std::optional<std::string> mode;
  std::vector<std::string> registry;
  // Verdict failures do not change the exit code.
  bool allow_failures = false;
  // Continue from this stored snapshot index of an existing run directory
  // (negative counts from the end).
  std::optional<long> resume_from;
};

void apply_overrides(RunConfig& cfg, const CliOverrides& o);

// --out, else output.dir, else runs/<name>. Relative paths are taken under
// $KRFLAB_OUT_ROOT when it is set.
std::filesystem::path resolve_output_dir(const RunConfig& cfg, const CliOverrides& o);

struct EllipticBundle {
  EllipticSolution spr;
  std::optional<EllipticSolution> ske;
  PushforwardDensity g_spr;
  std::optional<PushforwardDensity> g_ske;
  EllipticSolution rho_b_spr;
  EllipticSolution rho_b_prime_spr;
  std::optional<EllipticSolution> rho_b_ske;
  std::optional<EllipticSolution> rho_b_prime_ske;
  LimitTargets targets;
  std::vector<std::string> errors;
};

EllipticBundle solve_elliptic(const Model& model, const ReferenceVolume& omega);
nlohmann::json elliptic_summary(const EllipticBundle& b);

struct RunResult {
  nlohmann::json report;
  ObservableSeries series;
  std::vector<TheoremVerdict> verdicts;
  SnapshotSeries flow;
  bool pipeline_ok = true;
  int exit_code = kExitOk;
};

// Full pipeline. With an empty out_dir nothing is written.
RunResult execute_run(const RunConfig& cfg, const std::filesystem::path& out_dir,
                      std::optional<long> resume_from = std::nullopt, bool allow_failures = false);

int cmd_run(const std::filesystem::path& config, const CliOverrides& o);
int cmd_solve_base(const std::filesystem::path& config, const CliOverrides& o);
int cmd_report(const std::filesystem::path& run_dir);
int cmd_sweep(const std::filesystem::path& sweep_file, const CliOverrides& o);

}  // namespace krf
