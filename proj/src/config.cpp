#include "bq/config.hpp"

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

namespace bq {

using nlohmann::json;

namespace {

struct Mode {
  int k1, k2;
  double c, s;
};

const std::map<std::string, std::vector<Mode>>& presets() {
  static const std::map<std::string, std::vector<Mode>> table{
      {"zero", {}},
      {"sin_x1", {{1, 0, 0.0, 1.0}}},
      {"cos_x1", {{1, 0, 1.0, 0.0}}},
      {"sin_x2", {{0, 1, 0.0, 1.0}}},
      {"cos_x2", {{0, 1, 1.0, 0.0}}},
      {"tilted", {{1, 1, 0.0, 0.3}}},
      {"steer_vorticity", {{1, 0, 0.0, 1.0}, {1, 1, 0.5, 0.0}}},
      {"steer_temperature", {{1, 0, 0.5, 0.0}, {2, 1, 0.2, 0.0}}},
  };
  return table;
}

SpectralField from_modes(const std::vector<Mode>& modes, int n) {
  return SpectralField::from_function(n, [&](double a, double b) {
    double v = 0.0;
    for (const auto& md : modes) {
      const double ph = md.k1 * a + md.k2 * b;
      v += md.c * std::cos(ph) + md.s * std::sin(ph);
    }
    return v;
  });
}

template <class T>
void take(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace

std::vector<std::string> field_presets() {
  std::vector<std::string> out;
  for (const auto& [name, modes] : presets()) out.push_back(name);
  return out;
}

SpectralField build_field(const json& spec, int n) {
  if (spec.is_string()) {
    const auto it = presets().find(spec.get<std::string>());
    if (it == presets().end()) throw std::invalid_argument("unknown field preset " + spec.get<std::string>());
    return from_modes(it->second, n);
  }
  if (spec.is_object() && spec.contains("preset")) return build_field(spec.at("preset"), n);
  if (spec.is_object() && spec.contains("path")) {
    const auto f = read_snapshot(spec.at("path").get<std::string>());
    if (f.n() != n) throw std::invalid_argument("snapshot resolution differs from grid.n");
    return f;
  }
  if (spec.is_object() && spec.contains("modes")) {
    std::vector<Mode> modes;
    for (const auto& md : spec.at("modes")) {
      const auto k = md.at("k");
      modes.push_back({k.at(0).get<int>(), k.at(1).get<int>(), md.value("cos", 0.0), md.value("sin", 0.0)});
    }
    return from_modes(modes, n);
  }
  throw std::invalid_argument("field spec needs a preset, a path or a mode list");
}

json default_config_json() {
  const RunConfig d;
  const auto& t = d.assembly.temperature;
  return json{
      {"grid", {{"n", d.n}, {"m", d.m}, {"m_max", d.m_max}}},
      {"physics", {{"nu", d.phys.viscosity}, {"tau", d.phys.diffusivity}, {"T", d.horizon}}},
      {"omega", {{"a", d.region.a}, {"b", d.region.b}}},
      {"geometry",
       {{"margin_fraction", d.partition.inset_fraction},
        {"smoothstep_order", d.partition.smoothstep_degree},
        {"max_K", d.partition.max_strips},
        {"bump_order", d.bump_half_order}}},
      {"flows", {{"amplitude", d.flow_amplitude}, {"substeps", d.flow_substeps}}},
      {"synthesis",
       {{"M", t.bins},
        {"lambda", t.ridge},
        {"k_cut", t.k_cut},
        {"samples_per_window", d.samples_per_window},
        {"taper_width", d.assembly.taper_width}}},
      {"ladder",
       {{"deltas", d.sweep_deltas},
        {"drift", d.ladder.drift},
        {"inner_ratio", d.ladder.inner_ratio},
        {"total_factor", d.ladder.total_factor},
        {"retarget_iterations", d.ladder.retarget_iterations}}},
      {"targets",
       {{"w0", "zero"},
        {"theta0", "tilted"},
        {"w_target", "steer_vorticity"},
        {"theta_target", "steer_temperature"},
        {"xi", "cos_x1"}}},
      {"output", {{"dir", d.output_dir}, {"trajectory_samples", d.trajectory_samples}}},
  };
}

RunConfig config_from_json(const json& doc) {
  json merged = default_config_json();
  merged.merge_patch(doc);
  RunConfig c;
  c.source = merged;
  const auto& g = merged.at("grid");
  take(g, "n", c.n);
  take(g, "m", c.m);
  take(g, "m_max", c.m_max);
  if (c.m < 1 || c.m > c.m_max) throw std::invalid_argument("grid.m must lie in [1, m_max]");
  const auto& p = merged.at("physics");
  take(p, "nu", c.phys.viscosity);
  take(p, "tau", c.phys.diffusivity);
  take(p, "T", c.horizon);
  const auto& o = merged.at("omega");
  take(o, "a", c.region.a);
  take(o, "b", c.region.b);
  const auto& geo = merged.at("geometry");
  take(geo, "margin_fraction", c.partition.inset_fraction);
  take(geo, "smoothstep_order", c.partition.smoothstep_degree);
  take(geo, "max_K", c.partition.max_strips);
  take(geo, "bump_order", c.bump_half_order);
  const auto& fl = merged.at("flows");
  take(fl, "amplitude", c.flow_amplitude);
  take(fl, "substeps", c.flow_substeps);
  const auto& sy = merged.at("synthesis");
  for (auto* so : {&c.assembly.temperature, &c.assembly.vorticity}) {
    take(sy, "M", so->bins);
    take(sy, "lambda", so->ridge);
    take(sy, "k_cut", so->k_cut);
  }
  take(sy, "samples_per_window", c.samples_per_window);
  take(sy, "taper_width", c.assembly.taper_width);
  const auto& la = merged.at("ladder");
  take(la, "deltas", c.sweep_deltas);
  take(la, "drift", c.ladder.drift);
  take(la, "inner_ratio", c.ladder.inner_ratio);
  take(la, "total_factor", c.ladder.total_factor);
  take(la, "retarget_iterations", c.ladder.retarget_iterations);
  c.targets = merged.at("targets");
  const auto& out = merged.at("output");
  take(out, "dir", c.output_dir);
  take(out, "trajectory_samples", c.trajectory_samples);
  return c;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config " + path);
  return config_from_json(json::parse(in, nullptr, true, true));
}

SteeringContextOptions RunConfig::context_options() const {
  SteeringContextOptions o;
  o.n = n;
  o.m = m;
  o.region = region;
  o.partition = partition;
  o.bump_half_order = bump_half_order;
  o.flow_amplitude = flow_amplitude;
  o.flow_substeps = flow_substeps;
  o.samples = samples_per_window;
  o.assembly = assembly;
  return o;
}

LocalizationSetup RunConfig::localization() const { return LocalizationSetup(region, partition, bump_half_order); }

SpectralField RunConfig::target(const std::string& name, const json& fallback) const {
  SpectralField f = build_field(targets.contains(name) ? targets.at(name) : fallback, n);
  if (name != "theta0" && name != "theta_target") f.remove_mean();
  return f;
}

SteeringProblem RunConfig::problem() const {
  SteeringProblem p;
  p.phys = phys;
  p.horizon = horizon;
  p.w0 = target("w0");
  p.theta0 = target("theta0");
  p.w_target = target("w_target");
  p.theta_target = target("theta_target");
  return p;
}

std::string config_hash(const json& doc) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char ch : doc.dump()) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  std::ostringstream s;
  s << std::hex;
  s.width(16);
  s.fill('0');
  s << h;
  return s.str();
}

std::string prepare_run_dir(const RunConfig& cfg, const std::string& id) {
  const std::filesystem::path dir =
      std::filesystem::path(cfg.output_dir) / (id.empty() ? config_hash(cfg.source) : id);
  std::filesystem::create_directories(dir);
  return dir.string();
}

void write_manifest(const std::string& path, const RunConfig& cfg, const LocalizationSetup& setup,
                    const std::string& command, const json& extra) {
  const auto& part = setup.partition;
  const auto& strategy = setup.strategy;
  json shifts = json::array();
  for (int k = 1; k <= part.strip_count; ++k) shifts.push_back(strategy.shift(k));
  json m{
      {"command", command},
      {"config_hash", config_hash(cfg.source)},
      {"config", cfg.source},
      {"actuators", ZetaLibrary::names()},
      {"partition",
       {{"K", part.strip_count},
        {"T_delta", setup.grid.unit},
        {"strip_width", part.strip_width},
        {"h1", part.h1},
        {"h2", part.h2},
        {"reference", {part.reference.lo, part.reference.hi}},
        {"shifts", shifts}}},
  };
  for (const auto& [k, v] : extra.items()) m[k] = v;
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path);
  out << m.dump(2) << '\n';
}

}  // namespace bq
