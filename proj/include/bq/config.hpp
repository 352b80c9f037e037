#pragma once

#include <json.hpp>
#include <string>
#include <vector>

#include "bq/steering.hpp"

namespace bq {

// A field given by a preset name, a mode list or a snapshot path.
// Modes: [{"k": [k1, k2], "cos": a, "sin": b}, ...] means sum a cos(k.x) + b sin(k.x).
SpectralField build_field(const nlohmann::json& spec, int n);
std::vector<std::string> field_presets();

struct RunConfig {
  int n = 64;
  int m = 2;
  int m_max = 6;
  Physics phys{};
  double horizon = 1.0;
  ControlRegion region{};
  PartitionOptions partition{};
  int bump_half_order = 4;
  double flow_amplitude = 20.0;
  int flow_substeps = 2;
  int samples_per_window = 512;
  AssemblyOptions assembly{};
  LadderOptions ladder{};
  std::vector<double> sweep_deltas{0.2, 0.1, 0.05, 0.025};
  int trajectory_samples = 101;
  nlohmann::json targets = nlohmann::json::object();  // w0, theta0, w_target, theta_target, xi
  std::string output_dir = "runs";
  nlohmann::json source;  // the merged document, hashed into the manifest

  SteeringContextOptions context_options() const;
  LocalizationSetup localization() const;
  // Field named in targets, or the fallback spec when absent.
  SpectralField target(const std::string& name, const nlohmann::json& fallback = "zero") const;
  SteeringProblem problem() const;
};

// Defaults overridden by the keys present in the document.
RunConfig config_from_json(const nlohmann::json& doc);
RunConfig load_config(const std::string& path);
nlohmann::json default_config_json();

// FNV-1a of the canonical dump, as 16 hex digits.
std::string config_hash(const nlohmann::json& doc);

// Run directory output_dir/<id>, created if missing; id defaults to the hash.
std::string prepare_run_dir(const RunConfig& cfg, const std::string& id = "");

void write_manifest(const std::string& path, const RunConfig& cfg, const LocalizationSetup& setup,
                    const std::string& command, const nlohmann::json& extra = nlohmann::json::object());

}  // namespace bq
