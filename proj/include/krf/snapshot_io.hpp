#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "krf/cohomology.hpp"
#include "krf/flow.hpp"
#include "krf/model_spec.hpp"

namespace krf {

// Snapshot container, version 1:
//   8 bytes magic "KRFSNAP1"
//   u64 header length, then a JSON header (model, class, schedule, grid)
//   records: f64 t, f64 dt, i64 step, then rows*cols f64 phi (column-major)
// All numbers little-endian as written by the host. d phi / dt is not
// stored; it is recomputed from the equation on load.
inline constexpr int kSnapshotFormatVersion = 1;

nlohmann::json to_json(const ModelSpec& spec);
ModelSpec model_spec_from_json(const nlohmann::json& j);
nlohmann::json to_json(const StepSchedule& s);
StepSchedule schedule_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ClassData& c);

nlohmann::json snapshot_header(const ModelSpec& spec, const ClassData& cls, const StepSchedule& schedule);

class SnapshotWriter {
 public:
  // append = true continues an existing file after checking its header grid.
  SnapshotWriter(const std::filesystem::path& path, const nlohmann::json& header, bool append = false);
  void write(const Snapshot& s);
  void flush() { out_.flush(); }

 private:
  std::ofstream out_;
  int rows_;
  int cols_;
};

struct SnapshotFile {
  nlohmann::json header;
  std::vector<Snapshot> snapshots;
};

SnapshotFile read_snapshot_file(const std::filesystem::path& path);

}  // namespace krf
