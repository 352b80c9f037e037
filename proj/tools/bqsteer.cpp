#include <CLI11.hpp>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>

#include "bq/config.hpp"
#include "bq/verify.hpp"

using namespace bq;
using nlohmann::json;

namespace {

struct Common {
  std::string config_path;
  std::string run_id;
  std::string out_dir;
};

RunConfig load(const Common& c) {
  RunConfig cfg = c.config_path.empty() ? config_from_json(json::object()) : load_config(c.config_path);
  if (!c.out_dir.empty()) cfg.output_dir = c.out_dir;
  return cfg;
}

std::vector<double> uniform_times(double t_end, int count) {
  std::vector<double> t;
  for (int k = 0; k < count; ++k) t.push_back(t_end * k / std::max(1, count - 1));
  return t;
}

void write_metrics(const std::string& path, const std::vector<std::pair<std::string, double>>& rows) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path);
  out.precision(12);
  out << "metric,value\n";
  for (const auto& [k, v] : rows) out << k << ',' << v << '\n';
}

int simulate(const Common& c) {
  const RunConfig cfg = load(c);
  const auto dir = prepare_run_dir(cfg, c.run_id);
  const auto p = cfg.problem();
  const auto r = solve({p.w0, p.theta0, 0.0}, cfg.horizon, cfg.phys, {}, {}, uniform_times(cfg.horizon, cfg.trajectory_samples));
  write_trajectory_csv(dir + "/metrics.csv", r.samples, cfg.m);
  write_snapshot(dir + "/w_final.txt", r.final_state.vorticity, cfg.m);
  write_snapshot(dir + "/theta_final.txt", r.final_state.temperature, cfg.m);
  write_manifest(dir + "/manifest.json", cfg, cfg.localization(), "simulate", {{"steps", r.steps}});
  std::printf("simulate: %d steps, outputs in %s\n", r.steps, dir.c_str());
  return 0;
}

int synthesize(const Common& c) {
  const RunConfig cfg = load(c);
  const auto dir = prepare_run_dir(cfg, c.run_id);
  const SteeringContext ctx(cfg.context_options());
  const auto v1 = cfg.target("v1", "steer_vorticity");
  auto theta1 = cfg.target("theta1", "steer_temperature");
  theta1.remove_mean();
  const auto plan = localized_plan(v1, theta1, ctx.assembler(), ctx.setup(), cfg.m);
  write_schedule_csv(dir + "/schedule.csv", *plan.control);
  write_coefficients_csv(dir + "/coefficients.csv", *plan.nonlocal);
  const auto id = check_identities(*plan.control, plan.e_grid);
  write_metrics(dir + "/metrics.csv", {{"theta_error", plan.theta_error},
                                       {"v_error", plan.v_error},
                                       {"nonlocal_theta_residual", plan.nonlocal->theta_residual},
                                       {"nonlocal_v_residual", plan.nonlocal->v_residual},
                                       {"identity_theta", id.theta},
                                       {"identity_v", id.v},
                                       {"identity_endpoint", id.endpoint},
                                       {"support", id.support},
                                       {"max_mean", id.max_mean}});
  const auto& lc = *plan.control;
  for (int k : {1, lc.setup().partition.strip_count}) {
    const int m = (3 * k - 1) * lc.samples_per_window() + lc.samples_per_window() / 2;
    write_snapshot(dir + "/eta_window" + std::to_string(k) + ".txt", lc.field(m), cfg.m);
  }
  write_manifest(dir + "/manifest.json", cfg, ctx.setup(), "synthesize");
  std::printf("synthesize: theta error %.3g, v error %.3g, outputs in %s\n", plan.theta_error, plan.v_error, dir.c_str());
  return 0;
}

int steer(const Common& c) {
  const RunConfig cfg = load(c);
  const auto dir = prepare_run_dir(cfg, c.run_id);
  const SteeringContext ctx(cfg.context_options());
  const auto problem = cfg.problem();
  const auto [plan, res] = plan_and_steer(ctx, problem, cfg.ladder, uniform_times(cfg.horizon, cfg.trajectory_samples));
  write_ladder_csv(dir + "/ladder.csv", res.ladder);
  write_trajectory_csv(dir + "/trajectory.csv", res.samples, cfg.m);
  write_metrics(dir + "/metrics.csv", {{"total_error", res.total},
                                       {"w_error", res.w_error},
                                       {"theta_error", res.theta_error},
                                       {"baseline", res.baseline},
                                       {"ratio", res.total / res.baseline},
                                       {"xi_residual", res.xi_residual},
                                       {"target_xi_residual", res.target_xi_residual},
                                       {"velocity_error", res.velocity_error},
                                       {"velocity_bound", res.velocity_bound},
                                       {"velocity_constant", velocity_norm_constant(cfg.n, cfg.m)},
                                       {"failed", res.failed ? 1.0 : 0.0}});
  if (res.failed) {
    write_manifest(dir + "/manifest.json", cfg, ctx.setup(), "steer", {{"failed", true}});
    std::printf("steer: no plan beat the baseline %.4g\n", res.baseline);
    return 1;
  }
  write_schedule_csv(dir + "/schedule.csv", plan, cfg.horizon);
  write_snapshot(dir + "/w_final.txt", res.final_state.vorticity, cfg.m);
  write_snapshot(dir + "/theta_final.txt", res.final_state.temperature, cfg.m);
  write_snapshot(dir + "/xi.txt", plan.xi, cfg.m);
  const auto& d = plan.durations;
  write_manifest(dir + "/manifest.json", cfg, ctx.setup(), "steer",
                 {{"durations", {{"total", d.total}, {"energize", d.energize}, {"drift", d.drift}, {"calm", d.calm}}}});
  std::printf("steer: error %.4g against baseline %.4g (ratio %.3f), outputs in %s\n", res.total, res.baseline,
              res.total / res.baseline, dir.c_str());
  return 0;
}

int sweep(const Common& c, const std::string& experiment) {
  const RunConfig cfg = load(c);
  const auto dir = prepare_run_dir(cfg, c.run_id);
  const SteeringContext ctx(cfg.context_options());
  const auto p = cfg.problem();
  SweepSpec spec;
  spec.experiment = experiment;
  spec.deltas = cfg.sweep_deltas;
  spec.start = {p.w0, p.theta0, 0.0};
  spec.theta_target = p.theta_target;
  spec.xi = cfg.target("xi", "cos_x1");
  spec.phys = cfg.phys;
  const auto t = sweep_delta(ctx, spec);
  write_sweep_csv(dir + "/metrics.csv", t);
  write_manifest(dir + "/manifest.json", cfg, ctx.setup(), "sweep " + experiment, {{"slope", t.slope}});
  for (const auto& r : t.rows)
    std::printf("delta %-8g discrepancy %-12.6g%s\n", r.delta, r.discrepancy, r.failed ? " failed" : "");
  std::printf("log-log slope %.3f, outputs in %s\n", t.slope, dir.c_str());
  return 0;
}

int verify(const Common& c, const std::vector<int>& ids) {
  const RunConfig cfg = load(c);
  const auto dir = prepare_run_dir(cfg, c.run_id.empty() ? "verify" : c.run_id);
  std::ofstream out(dir + "/metrics.csv");
  out << "criterion,name,passed,seconds,detail\n";
  int failed = 0;
  for (int id : ids) {
    const auto r = run_check(id);
    std::printf("%2d %-26s %s  %s\n", r.id, r.name.c_str(), r.passed ? "PASS" : "FAIL", r.detail.c_str());
    std::fflush(stdout);
    out << r.id << ',' << r.name << ',' << r.passed << ',' << r.seconds << ",\"" << r.detail << "\"\n";
    failed += !r.passed;
  }
  return failed ? 1 : 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Small-time steering of 2D Boussinesq flows by localized temperature controls"};
  app.require_subcommand(0, 1);
  Common common;
  bool dump = false;
  app.add_option("-c,--config", common.config_path, "JSON config; missing keys take defaults")->check(CLI::ExistingFile);
  app.add_option("--run-id", common.run_id, "run directory name (default: config hash)");
  app.add_option("-o,--output", common.out_dir, "override output.dir");
  app.add_flag("--dump-config", dump, "print the default config and exit");

  auto* sim = app.add_subcommand("simulate", "free run from w0, theta0");
  auto* syn = app.add_subcommand("synthesize", "linear pipeline: localized control for (v1, theta1)");
  auto* st = app.add_subcommand("steer", "staged plan with ladder search");
  auto* sw = app.add_subcommand("sweep", "delta ladder of one experiment");
  std::string experiment = "temperature_step";
  sw->add_option("-e,--experiment", experiment, "experiment")
      ->check(CLI::IsMember({"temperature_step", "vorticity_step", "scaled_control"}));
  auto* ver = app.add_subcommand("verify", "invariant and trend suites");
  std::vector<int> ids{1, 2, 3, 4, 10};
  ver->add_option("criteria", ids, "criteria to run (1-10)")->check(CLI::Range(1, 10));

  CLI11_PARSE(app, argc, argv);
  try {
    if (dump) {
      std::cout << default_config_json().dump(2) << '\n';
      return 0;
    }
    if (sim->parsed()) return simulate(common);
    if (syn->parsed()) return synthesize(common);
    if (st->parsed()) return steer(common);
    if (sw->parsed()) return sweep(common, experiment);
    if (ver->parsed()) return verify(common, ids);
    std::cout << app.help();
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
