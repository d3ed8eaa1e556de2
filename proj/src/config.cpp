#include "krf/config.hpp"

#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include <fmt/format.h>

#include "krf/errors.hpp"
#include "krf/estimators.hpp"

namespace krf {

namespace {

std::string where(const YAML::Node& n, const std::string& source) {
  const YAML::Mark m = n.Mark();
  if (m.line < 0) return source;
  return fmt::format("{}:{}", source, m.line + 1);
}

class Section {
 public:
  Section(const YAML::Node& node, std::string path, std::string source)
      : node_(node), path_(std::move(path)), source_(std::move(source)) {
    if (node_ && !node_.IsNull() && !node_.IsMap())
      throw ConfigError(fmt::format("{}: '{}' must be a mapping", where(node_, source_), path_));
  }

  void allow(std::initializer_list<const char*> keys) {
    if (!live()) return;
    std::set<std::string> ok(keys.begin(), keys.end());
    for (const auto& kv : node_) {
      const auto key = kv.first.as<std::string>();
      if (!ok.count(key))
        throw ConfigError(fmt::format("{}: unknown key '{}' in section '{}'", where(kv.first, source_),
                                      key, path_));
    }
  }

  template <class T>
  void read(const char* key, T& out) const {
    if (!live() || !node_[key]) return;
    const YAML::Node v = node_[key];
    try {
      out = v.as<T>();
    } catch (const YAML::Exception&) {
      throw ConfigError(fmt::format("{}: bad value for '{}.{}'", where(v, source_), path_, key));
    }
  }

  bool has(const char* key) const { return live() && node_[key]; }
  YAML::Node child(const char* key) const { return live() ? node_[key] : YAML::Node(); }
  bool live() const { return node_ && node_.IsMap(); }
  std::string child_path(const char* key) const { return path_.empty() ? key : path_ + "." + key; }
  const std::string& source() const { return source_; }
  std::string at(const char* key) const { return where(node_[key], source_); }

 private:
  YAML::Node node_;
  std::string path_;
  std::string source_;
};

std::vector<std::pair<std::string, double VerdictTolerances::*>> double_tolerances() {
  return {{"slope_tol", &VerdictTolerances::slope_tol},
          {"ratio_tol", &VerdictTolerances::ratio_tol},
          {"transient_fraction", &VerdictTolerances::transient_fraction},
          {"min_decades", &VerdictTolerances::min_decades},
          {"diam_exponent", &VerdictTolerances::diam_exponent},
          {"diam_exponent_tol", &VerdictTolerances::diam_exponent_tol},
          {"diam_constant_rel", &VerdictTolerances::diam_constant_rel},
          {"rate_min", &VerdictTolerances::rate_min},
          {"volume_rel", &VerdictTolerances::volume_rel},
          {"type_i_limit_tol", &VerdictTolerances::type_i_limit_tol},
          {"zhang_factor", &VerdictTolerances::zhang_factor},
          {"lipschitz_factor", &VerdictTolerances::lipschitz_factor},
          {"c0_decrease", &VerdictTolerances::c0_decrease},
          {"abs_floor", &VerdictTolerances::abs_floor}};
}

std::vector<std::pair<std::string, int VerdictTolerances::*>> int_tolerances() {
  return {{"min_samples", &VerdictTolerances::min_samples}, {"resample_points", &VerdictTolerances::resample_points}};
}

std::vector<std::string> read_list(const Section& sec, const char* key) {
  std::vector<std::string> out;
  if (!sec.has(key)) return out;
  const YAML::Node n = sec.child(key);
  if (n.IsScalar()) {
    const auto v = n.as<std::string>();
    if (v == "all") return out;
    out.push_back(v);
    return out;
  }
  if (!n.IsSequence()) throw ConfigError(fmt::format("{}: '{}' must be a list", sec.at(key), sec.child_path(key)));
  for (const auto& item : n) out.push_back(item.as<std::string>());
  if (out.size() == 1 && out[0] == "all") out.clear();
  return out;
}

}  // namespace

RunConfig parse_config(const YAML::Node& root, const std::string& source) {
  RunConfig cfg;
  Section top(root, "", source);
  top.allow({"name", "model", "schedule", "estimators", "verdicts", "mode", "output"});
  top.read("name", cfg.name);

  Section model(top.child("model"), "model", source);
  model.allow({"kind", "n", "m", "a0", "b0", "perturbation", "grid"});
  if (model.has("kind")) {
    try {
      cfg.model.kind = parse_model_kind(model.child("kind").as<std::string>());
    } catch (const ConfigError& e) {
      throw ConfigError(fmt::format("{}: model.kind: {}", model.at("kind"), e.what()));
    }
  }
  model.read("n", cfg.model.n);
  model.read("m", cfg.model.m);
  model.read("a0", cfg.model.a0);
  model.read("b0", cfg.model.b0);

  Section pert(model.child("perturbation"), "model.perturbation", source);
  pert.allow({"profile", "amplitude", "center_fibre", "center_base", "width"});
  if (pert.has("profile")) {
    try {
      cfg.model.psi0.profile = parse_profile(pert.child("profile").as<std::string>());
    } catch (const ConfigError& e) {
      throw ConfigError(fmt::format("{}: model.perturbation.profile: {}", pert.at("profile"), e.what()));
    }
  }
  pert.read("amplitude", cfg.model.psi0.amplitude);
  pert.read("center_fibre", cfg.model.psi0.center_fibre);
  pert.read("center_base", cfg.model.psi0.center_base);
  pert.read("width", cfg.model.psi0.width);

  Section grid(model.child("grid"), "model.grid", source);
  grid.allow({"n_fibre", "n_base", "stencil_order"});
  grid.read("n_fibre", cfg.model.grid.n_fibre);
  grid.read("n_base", cfg.model.grid.n_base);
  grid.read("stencil_order", cfg.model.grid.stencil_order);

  Section sched(top.child("schedule"), "schedule", source);
  sched.allow({"cfl_safety", "eps_stop", "snapshot_stride", "max_steps", "dt_max", "integrator"});
  sched.read("cfl_safety", cfg.schedule.cfl_safety);
  if (sched.has("eps_stop")) {
    sched.read("eps_stop", cfg.schedule.eps_stop);
  } else if (cfg.model.a0 > 0.0) {
    cfg.schedule.eps_stop = 1e-3 * std::log((cfg.model.a0 + 2.0) / 2.0);
  }
  sched.read("snapshot_stride", cfg.schedule.snapshot_stride);
  sched.read("max_steps", cfg.schedule.max_steps);
  sched.read("dt_max", cfg.schedule.dt_max);
  if (sched.has("integrator")) {
    try {
      cfg.schedule.integrator = parse_integrator(sched.child("integrator").as<std::string>());
    } catch (const ConfigError& e) {
      throw ConfigError(fmt::format("{}: schedule.integrator: {}", sched.at("integrator"), e.what()));
    }
  }
  try {
    validate(cfg.schedule);
  } catch (const ConfigError& e) {
    throw ConfigError(fmt::format("{}: schedule: {}", source, e.what()));
  }

  cfg.estimators = read_list(top, "estimators");
  for (const auto& k : cfg.estimators) {
    const auto& keys = observable_keys();
    if (std::find(keys.begin(), keys.end(), k) == keys.end())
      throw ConfigError(fmt::format("{}: unknown observable key '{}' in 'estimators'", top.at("estimators"), k));
  }

  Section ver(top.child("verdicts"), "verdicts", source);
  ver.allow({"registry", "tolerances", "fail_on_verdicts"});
  cfg.registry = read_list(ver, "registry");
  for (const auto& id : cfg.registry) {
    const auto& ids = registry_ids();
    if (std::find(ids.begin(), ids.end(), id) == ids.end())
      throw ConfigError(fmt::format("{}: unknown theorem id '{}' in 'verdicts.registry'", ver.at("registry"), id));
  }
  ver.read("fail_on_verdicts", cfg.fail_on_verdicts);
  Section tol(ver.child("tolerances"), "verdicts.tolerances", source);
  if (ver.has("tolerances")) {
    const YAML::Node tn = ver.child("tolerances");
    for (const auto& kv : tn) {
      const auto key = kv.first.as<std::string>();
      bool known = false;
      for (const auto& [name, ptr] : double_tolerances())
        if (name == key) {
          tol.read(name.c_str(), cfg.tolerances.*ptr);
          known = true;
        }
      for (const auto& [name, ptr] : int_tolerances())
        if (name == key) {
          tol.read(name.c_str(), cfg.tolerances.*ptr);
          known = true;
        }
      if (!known)
        throw ConfigError(fmt::format("{}: unknown key '{}' in section 'verdicts.tolerances'",
                                      where(kv.first, source), key));
    }
  }

  top.read("mode", cfg.mode);
  if (cfg.mode != "spr" && cfg.mode != "ske")
    throw ConfigError(fmt::format("{}: mode must be 'spr' or 'ske', got '{}'", top.at("mode"), cfg.mode));

  Section out(top.child("output"), "output", source);
  out.allow({"dir", "snapshots"});
  out.read("dir", cfg.output_dir);
  out.read("snapshots", cfg.write_snapshots);
  return cfg;
}

RunConfig parse_config_text(const std::string& text, const std::string& source) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    throw ConfigError(fmt::format("{}:{}: YAML syntax error: {}", source, e.mark.line + 1, e.msg));
  }
  if (root.IsNull()) root = YAML::Node(YAML::NodeType::Map);
  return parse_config(root, source);
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(fmt::format("cannot read config file {}", path.string()));
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str(), path.string());
}

YAML::Node config_to_yaml(const RunConfig& cfg) {
  YAML::Node root;
  root["name"] = cfg.name;
  YAML::Node m = root["model"];
  m["kind"] = to_string(cfg.model.kind);
  m["n"] = cfg.model.n;
  m["m"] = cfg.model.m;
  m["a0"] = cfg.model.a0;
  m["b0"] = cfg.model.b0;
  m["perturbation"]["profile"] = to_string(cfg.model.psi0.profile);
  m["perturbation"]["amplitude"] = cfg.model.psi0.amplitude;
  m["perturbation"]["center_fibre"] = cfg.model.psi0.center_fibre;
  m["perturbation"]["center_base"] = cfg.model.psi0.center_base;
  m["perturbation"]["width"] = cfg.model.psi0.width;
  m["grid"]["n_fibre"] = cfg.model.grid.n_fibre;
  m["grid"]["n_base"] = cfg.model.grid.n_base;
  m["grid"]["stencil_order"] = cfg.model.grid.stencil_order;
  YAML::Node s = root["schedule"];
  s["cfl_safety"] = cfg.schedule.cfl_safety;
  s["eps_stop"] = cfg.schedule.eps_stop;
  s["snapshot_stride"] = cfg.schedule.snapshot_stride;
  s["max_steps"] = cfg.schedule.max_steps;
  s["dt_max"] = cfg.schedule.dt_max;
  s["integrator"] = to_string(cfg.schedule.integrator);
  if (cfg.estimators.empty())
    root["estimators"] = "all";
  else
    for (const auto& k : cfg.estimators) root["estimators"].push_back(k);
  YAML::Node v = root["verdicts"];
  if (cfg.registry.empty())
    v["registry"] = "all";
  else
    for (const auto& k : cfg.registry) v["registry"].push_back(k);
  v["fail_on_verdicts"] = cfg.fail_on_verdicts;
  for (const auto& [name, ptr] : double_tolerances()) v["tolerances"][name] = cfg.tolerances.*ptr;
  for (const auto& [name, ptr] : int_tolerances()) v["tolerances"][name] = cfg.tolerances.*ptr;
  root["mode"] = cfg.mode;
  root["output"]["dir"] = cfg.output_dir;
  root["output"]["snapshots"] = cfg.write_snapshots;
  return root;
}

std::string dump_config(const RunConfig& cfg) {
  YAML::Emitter em;
  em.SetDoublePrecision(17);
  em << config_to_yaml(cfg);
  return std::string(em.c_str()) + "\n";
}

}  // namespace krf
