#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "krf/errors.hpp"
#include "krf/pipeline.hpp"
#include "krf/snapshot_io.hpp"

using namespace krf;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / "krflab_tests" / name;
  fs::remove_all(p);
  return p;
}

RunConfig small_config() {
  RunConfig c = parse_config_text(R"(
name: small
model:
  kind: SphereBase
  a0: 2.0
  b0: 6.0
  perturbation: {profile: FibreBump, amplitude: 0.2, center_fibre: 0.3}
  grid: {n_fibre: 17, n_base: 17}
schedule: {eps_stop: 1.0e-4, snapshot_stride: 5}
)");
  return c;
}

}  // namespace

TEST_SUITE("pipeline") {
  TEST_CASE("overrides") {
    RunConfig c = small_config();
    CliOverrides o;
    o.resolution = 20;
    o.eps_stop = 0.01;
    o.mode = "ske";
    o.registry = {"VOLUME"};
    o.allow_failures = true;
    apply_overrides(c, o);
    CHECK(c.model.grid.n_fibre == 20);
    CHECK(c.model.grid.n_base == 20);
    CHECK(c.schedule.eps_stop == 0.01);
    CHECK(c.mode == "ske");
    CHECK(c.registry == std::vector<std::string>{"VOLUME"});
    CHECK_FALSE(c.fail_on_verdicts);
    CliOverrides bad;
    bad.mode = "xyz";
    CHECK_THROWS_AS(apply_overrides(c, bad), ConfigError);
    bad = {};
    bad.registry = {"NOT_A_THEOREM"};
    CHECK_THROWS_AS(apply_overrides(c, bad), ConfigError);
    bad = {};
    bad.resolution = 4;
    CHECK_THROWS_AS(apply_overrides(c, bad), ConfigError);
  }

  TEST_CASE("output directory resolution") {
    RunConfig c = small_config();
    CliOverrides o;
    ::unsetenv("KRFLAB_OUT_ROOT");
    CHECK(resolve_output_dir(c, o) == fs::path("runs") / "small");
    ::setenv("KRFLAB_OUT_ROOT", "/tmp/root", 1);
    CHECK(resolve_output_dir(c, o) == fs::path("/tmp/root/runs/small"));
    o.out = "/abs/out";
    CHECK(resolve_output_dir(c, o) == fs::path("/abs/out"));
    ::unsetenv("KRFLAB_OUT_ROOT");
  }

  TEST_CASE("full run writes artifacts and a report") {
    const fs::path out = scratch("run");
    const RunResult r = execute_run(small_config(), out);
    CHECK(r.pipeline_ok);
    CHECK(r.exit_code == kExitOk);
    for (const char* f : {"series.csv", "report.json", "config.yaml", "snapshots.krfsnap"}) CHECK(fs::exists(out / f));
    CHECK(r.report["flow"]["completed"].get<bool>());
    CHECK(r.report["verdicts"].size() == registry_ids().size());
    const SnapshotFile snaps = read_snapshot_file(out / "snapshots.krfsnap");
    CHECK(snaps.snapshots.size() == r.flow.snapshots.size());
    CHECK(snaps.header["format_version"] == kSnapshotFormatVersion);
    CHECK((snaps.snapshots.back().phi - r.flow.snapshots.back().phi).abs().maxCoeff() == 0.0);
    // The echoed config parses back to the same config.
    CHECK(dump_config(load_config(out / "config.yaml")) == dump_config(small_config()));

    CHECK(cmd_report(out) == kExitOk);
    CHECK(fs::exists(out / "report.md"));
    CHECK(fs::exists(out / "diameter.svg"));
  }

  TEST_CASE("resume from a stored snapshot reproduces the run") {
    const fs::path out = scratch("resume");
    const RunResult a = execute_run(small_config(), out);
    const RunResult b = execute_run(small_config(), out, -10);
    REQUIRE(b.flow.completed);
    CHECK(b.flow.snapshots.size() == a.flow.snapshots.size());
    CHECK((b.flow.snapshots.back().phi - a.flow.snapshots.back().phi).abs().maxCoeff() < 1e-12);
    CHECK(read_snapshot_file(out / "snapshots.krfsnap").snapshots.size() == a.flow.snapshots.size());
    CHECK_THROWS_AS(execute_run(small_config(), out, 100000), ConfigError);
  }

  TEST_CASE("verdict failures map to exit code 3 unless allowed") {
    RunConfig c = small_config();
    c.tolerances.diam_exponent = 0.9;  // impossible on purpose
    c.registry = {"DIAM_FIBRE"};
    c.write_snapshots = false;
    CHECK(execute_run(c, {}).exit_code == kExitVerdicts);
    CHECK(execute_run(c, {}, std::nullopt, true).exit_code == kExitOk);
    c.fail_on_verdicts = false;
    CHECK(execute_run(c, {}).exit_code == kExitOk);
  }

  TEST_CASE("snapshot reader rejects foreign files") {
    const fs::path p = scratch("bad") / "x.krfsnap";
    fs::create_directories(p.parent_path());
    std::ofstream(p) << "not a snapshot";
    CHECK_THROWS_AS(read_snapshot_file(p), SnapshotFormatError);
  }

  TEST_CASE("report on an empty directory lists what is missing") {
    const fs::path p = scratch("empty");
    fs::create_directories(p);
    CHECK(cmd_report(p) == kExitPipeline);
  }

  TEST_CASE("command entry points map config errors to exit code 1") {
    const fs::path dir = scratch("cfg");
    fs::create_directories(dir);
    std::ofstream(dir / "bad.yaml") << "model: {kind: Torus}\n";
    CHECK(cmd_run(dir / "bad.yaml", {}) == kExitConfig);
    CHECK(cmd_solve_base(dir / "bad.yaml", {}) == kExitConfig);
    std::ofstream(dir / "nonpos.yaml") << "model: {perturbation: {profile: FibreBump, amplitude: 5}}\n";
    CliOverrides o;
    o.out = (dir / "o").string();
    CHECK(cmd_run(dir / "nonpos.yaml", o) == kExitConfig);
  }

  TEST_CASE("solve-base writes potentials") {
    const fs::path dir = scratch("solve");
    fs::create_directories(dir);
    std::ofstream(dir / "c.yaml") << dump_config(small_config());
    CliOverrides o;
    o.out = (dir / "out").string();
    CHECK(cmd_solve_base(dir / "c.yaml", o) == kExitOk);
    for (const char* f : {"rho_spr.csv", "rho_ske.csv", "base_potentials.csv", "elliptic.json"})
      CHECK(fs::exists(dir / "out" / f));
  }

  TEST_CASE("sweep runs every combination") {
    const fs::path dir = scratch("sweep");
    fs::create_directories(dir);
    RunConfig c = small_config();
    c.schedule.eps_stop = 0.05;
    c.write_snapshots = false;
    std::ofstream(dir / "t.yaml") << dump_config(c);
    std::ofstream(dir / "s.yaml") << "name: s\ntemplate: t.yaml\nparameters:\n  resolution: [16, 18]\n  model.b0: [6.0, 7.0]\n";
    CliOverrides o;
    o.out = (dir / "out").string();
    o.allow_failures = true;
    CHECK(cmd_sweep(dir / "s.yaml", o) == kExitOk);
    std::ifstream in(dir / "out" / "sweep.csv");
    std::string line;
    int rows = 0;
    while (std::getline(in, line)) ++rows;
    CHECK(rows == 5);
    std::ofstream(dir / "bad.yaml") << "name: s\ntemplate: t.yaml\nparams: {}\n";
    CHECK(cmd_sweep(dir / "bad.yaml", o) == kExitConfig);
  }
}
