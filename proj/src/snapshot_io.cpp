#include "krf/snapshot_io.hpp"

#include <cstdint>
#include <cstring>

#include <fmt/format.h>

#include "krf/errors.hpp"

namespace krf {

namespace {

constexpr char kMagic[8] = {'K', 'R', 'F', 'S', 'N', 'A', 'P', '1'};

template <class T>
void put(std::ostream& os, T v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
bool get(std::istream& is, T& v) {
  return static_cast<bool>(is.read(reinterpret_cast<char*>(&v), sizeof(T)));
}

std::pair<int, int> grid_shape(const nlohmann::json& header) {
  try {
    return {header.at("grid").at("rows").get<int>(), header.at("grid").at("cols").get<int>()};
  } catch (const nlohmann::json::exception& e) {
    throw SnapshotFormatError(fmt::format("snapshot header lacks grid shape: {}", e.what()));
  }
}

nlohmann::json read_header(std::istream& in, const std::filesystem::path& path) {
  char magic[8];
  if (!in.read(magic, 8) || std::memcmp(magic, kMagic, 8) != 0)
    throw SnapshotFormatError(fmt::format("{} is not a snapshot file", path.string()));
  std::uint64_t len = 0;
  if (!get(in, len) || len > (1u << 24)) throw SnapshotFormatError("corrupt snapshot header length");
  std::string text(len, '\0');
  if (!in.read(text.data(), static_cast<std::streamsize>(len))) throw SnapshotFormatError("truncated snapshot header");
  nlohmann::json header = nlohmann::json::parse(text, nullptr, false);
  if (header.is_discarded()) throw SnapshotFormatError("snapshot header is not valid JSON");
  if (header.value("format_version", 0) != kSnapshotFormatVersion)
    throw SnapshotFormatError(fmt::format("unsupported snapshot format version {}", header.value("format_version", 0)));
  return header;
}

}  // namespace

nlohmann::json to_json(const ModelSpec& spec) {
  return {{"kind", to_string(spec.kind)},
          {"n", spec.n},
          {"m", spec.m},
          {"a0", spec.a0},
          {"b0", spec.b0},
          {"psi0",
           {{"profile", to_string(spec.psi0.profile)},
            {"amplitude", spec.psi0.amplitude},
            {"center_fibre", spec.psi0.center_fibre},
            {"center_base", spec.psi0.center_base},
            {"width", spec.psi0.width}}},
          {"grid",
           {{"n_fibre", spec.grid.n_fibre}, {"n_base", spec.grid.n_base}, {"stencil_order", spec.grid.stencil_order}}}};
}

ModelSpec model_spec_from_json(const nlohmann::json& j) {
  ModelSpec s;
  s.kind = parse_model_kind(j.at("kind").get<std::string>());
  s.n = j.at("n").get<int>();
  s.m = j.at("m").get<int>();
  s.a0 = j.at("a0").get<double>();
  s.b0 = j.at("b0").get<double>();
  const auto& p = j.at("psi0");
  s.psi0.profile = parse_profile(p.at("profile").get<std::string>());
  s.psi0.amplitude = p.at("amplitude").get<double>();
  s.psi0.center_fibre = p.at("center_fibre").get<double>();
  s.psi0.center_base = p.at("center_base").get<double>();
  s.psi0.width = p.at("width").get<double>();
  const auto& g = j.at("grid");
  s.grid.n_fibre = g.at("n_fibre").get<int>();
  s.grid.n_base = g.at("n_base").get<int>();
  s.grid.stencil_order = g.at("stencil_order").get<int>();
  return s;
}

nlohmann::json to_json(const StepSchedule& s) {
  return {{"cfl_safety", s.cfl_safety},       {"eps_stop", s.eps_stop}, {"snapshot_stride", s.snapshot_stride},
          {"max_steps", s.max_steps},         {"dt_max", s.dt_max},     {"integrator", to_string(s.integrator)}};
}

StepSchedule schedule_from_json(const nlohmann::json& j) {
  StepSchedule s;
  s.cfl_safety = j.at("cfl_safety").get<double>();
  s.eps_stop = j.at("eps_stop").get<double>();
  s.snapshot_stride = j.at("snapshot_stride").get<int>();
  s.max_steps = j.at("max_steps").get<long>();
  s.dt_max = j.at("dt_max").get<double>();
  s.integrator = parse_integrator(j.at("integrator").get<std::string>());
  return s;
}

nlohmann::json to_json(const ClassData& c) {
  return {{"T", c.T},
          {"lambda", c.lambda},
          {"a0", c.a0},
          {"b0", c.b0},
          {"fibre_limit_coeff", c.fibre_limit_coeff},
          {"base_limit_coeff", c.base_limit_coeff}};
}

nlohmann::json snapshot_header(const ModelSpec& spec, const ClassData& cls, const StepSchedule& schedule) {
  return {{"format", "krflab-snapshots"},
          {"format_version", kSnapshotFormatVersion},
          {"model", to_json(spec)},
          {"class", to_json(cls)},
          {"schedule", to_json(schedule)},
          {"grid", {{"rows", spec.grid.n_fibre}, {"cols", spec.grid.n_base}, {"layout", "column-major"}}}};
}

SnapshotWriter::SnapshotWriter(const std::filesystem::path& path, const nlohmann::json& header, bool append) {
  std::tie(rows_, cols_) = grid_shape(header);
  if (append) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw SnapshotFormatError(fmt::format("cannot reopen {}", path.string()));
    const nlohmann::json existing = read_header(in, path);
    if (grid_shape(existing) != std::make_pair(rows_, cols_))
      throw SnapshotFormatError("resume grid does not match the snapshot file");
    in.close();
    out_.open(path, std::ios::binary | std::ios::app);
  } else {
    out_.open(path, std::ios::binary | std::ios::trunc);
    if (!out_) throw SnapshotFormatError(fmt::format("cannot write {}", path.string()));
    const std::string text = header.dump();
    out_.write(kMagic, 8);
    put<std::uint64_t>(out_, text.size());
    out_.write(text.data(), static_cast<std::streamsize>(text.size()));
  }
  if (!out_) throw SnapshotFormatError(fmt::format("cannot write {}", path.string()));
}

void SnapshotWriter::write(const Snapshot& s) {
  if (s.phi.rows() != rows_ || s.phi.cols() != cols_) throw SnapshotFormatError("snapshot grid mismatch");
  put(out_, s.t);
  put(out_, s.dt);
  put<std::int64_t>(out_, s.step_index);
  out_.write(reinterpret_cast<const char*>(s.phi.data()),
             static_cast<std::streamsize>(sizeof(double) * s.phi.size()));
}

SnapshotFile read_snapshot_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw SnapshotFormatError(fmt::format("cannot open {}", path.string()));
  SnapshotFile f;
  f.header = read_header(in, path);
  const auto [rows, cols] = grid_shape(f.header);
  for (;;) {
    Snapshot s;
    std::int64_t idx = 0;
    if (!get(in, s.t)) break;
    if (!get(in, s.dt) || !get(in, idx)) throw SnapshotFormatError("truncated snapshot record");
    s.step_index = idx;
    s.phi.resize(rows, cols);
    if (!in.read(reinterpret_cast<char*>(s.phi.data()), static_cast<std::streamsize>(sizeof(double) * s.phi.size())))
      throw SnapshotFormatError("truncated snapshot field");
    f.snapshots.push_back(std::move(s));
  }
  return f;
}

}  // namespace krf
