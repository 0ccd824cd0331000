#include "parity_gate/run.hpp"

#include <filesystem>

#include "parity_gate/fidelity.hpp"
#include "parity_gate/propagate.hpp"

namespace parity_gate {

namespace fs = std::filesystem;

namespace {

struct Context {
  const RunConfig& cfg;
  std::ostream& log;
  fs::path dir;
  std::vector<std::string> outputs;

  void write(const std::string& name, const json& j) {
    write_json_atomic(dir / name, j);
    outputs.push_back(name);
  }
  void write_csv(const std::string& name, const CsvWriter& csv) {
    write_file_atomic(dir / name, csv.str());
    outputs.push_back(name);
  }

  AtomGeometry geometry() const { return build_geometry(cfg.geometry, cfg.r_min * 1e6); }
  GateTarget target(int n) const { return build_parity_target(n, cfg.theta); }
  OptimizationConfig optimization() const {
    OptimizationConfig oc = cfg.optimization;
    oc.seed = cfg.seed;
    oc.duration = physical_time(cfg.duration_norm, cfg.params);
    return oc;
  }
  double norm(double t) const { return normalized_time(t, cfg.params); }
};

CsvWriter pulse_csv(const PulseSchedule& p) {
  CsvWriter csv({"t_mid_s", "phi_rad", "rabi_rad_s", "detuning_rad_s"});
  for (int j = 0; j < p.m_steps(); ++j)
    csv.cell((j + 0.5) * p.dt).cell(p.phi[j]).cell(p.rabi[j]).cell(p.detuning[j]).end_row();
  return csv;
}

json result_summary(const Context& ctx, const OptimizationResult& res) {
  return {{"eps_bell", res.bell_infidelity},
          {"cost", res.cost},
          {"t_r_s", res.t_r},
          {"t_rr_s", res.t_rr},
          {"t_norm", ctx.norm(res.pulse.duration())},
          {"t_r_norm", ctx.norm(res.t_r)},
          {"t_rr_norm", ctx.norm(res.t_rr)},
          {"eps_decay_estimate", ctx.cfg.params.gamma_d * res.t_r},
          {"m_steps", res.pulse.m_steps()},
          {"start_index", res.start_index},
          {"iterations", res.iterations},
          {"converged", res.converged}};
}

void cmd_optimize(Context& ctx) {
  const AtomGeometry geo = ctx.geometry();
  const OptimizationResult res = optimize(geo, ctx.cfg.params, ctx.target(geo.n_atoms()), ctx.optimization());
  ctx.write("pulse.json", pulse_to_json(res.pulse));
  ctx.write_csv("pulse.csv", pulse_csv(res.pulse));
  CsvWriter starts({"start_index", "cost", "eps_bell", "t_r_norm", "t_rr_norm", "iterations", "converged", "reason"});
  for (const auto& s : res.starts)
    starts.cell(s.start_index)
        .cell(s.cost)
        .cell(s.bell_infidelity)
        .cell(ctx.norm(s.t_r))
        .cell(ctx.norm(s.t_rr))
        .cell(s.iterations)
        .cell(s.converged ? 1 : 0)
        .cell(s.reason)
        .end_row();
  ctx.write_csv("starts.csv", starts);
  CsvWriter hist({"iteration", "cost"});
  for (std::size_t i = 0; i < res.cost_history.size(); ++i) hist.cell(static_cast<long long>(i)).cell(res.cost_history[i]).end_row();
  ctx.write_csv("cost_history.csv", hist);
  ctx.write("summary.json", result_summary(ctx, res));
  ctx.log << "eps_bell " << format_double(res.bell_infidelity) << ", Omega0 T_R/2pi " << format_double(ctx.norm(res.t_r))
          << "\n";
}

void cmd_qsl(Context& ctx) {
  const AtomGeometry geo = ctx.geometry();
  const QslScan scan =
      qsl_scan(geo, ctx.cfg.params, ctx.target(geo.n_atoms()), ctx.cfg.qsl.durations_norm, ctx.optimization());
  CsvWriter best({"duration_norm", "best_infidelity"});
  CsvWriter starts({"duration_norm", "start_index", "infidelity"});
  for (const auto& pt : scan.points) {
    best.cell(pt.duration_norm).cell(pt.best_infidelity).end_row();
    for (std::size_t s = 0; s < pt.start_infidelities.size(); ++s)
      starts.cell(pt.duration_norm).cell(static_cast<long long>(s)).cell(pt.start_infidelities[s]).end_row();
  }
  ctx.write_csv("qsl.csv", best);
  ctx.write_csv("qsl_starts.csv", starts);
  json thresholds = json::array();
  for (double th : ctx.cfg.qsl.thresholds) {
    const auto t = scan.t_star(th);
    thresholds.push_back({{"threshold", th}, {"t_star_norm", t ? json(*t) : json(nullptr)}});
  }
  ctx.write("summary.json", {{"t_star", thresholds}});
}

void cmd_simulate(Context& ctx) {
  const AtomGeometry geo = ctx.geometry();
  const PulseSchedule pulse = load_pulse(ctx.cfg.pulse_file);
  pulse.validate(&ctx.cfg.params);
  const GateTarget target = ctx.target(geo.n_atoms());
  const BlockSet blocks = enumerate_blocks(geo, ctx.cfg.params);
  PropagationOptions po;
  po.substeps = ctx.cfg.optimization.substeps;
  const FidelityReport rep = fidelity_report(propagate_blocks(pulse, blocks, po), target);
  json s = {{"eps_bell", 1.0 - rep.bell_fidelity},
            {"avg_infidelity", 1.0 - rep.avg_fidelity},
            {"t_r_s", rep.t_r},
            {"t_rr_s", rep.t_rr},
            {"t_norm", ctx.norm(pulse.duration())},
            {"t_r_norm", ctx.norm(rep.t_r)},
            {"t_rr_norm", ctx.norm(rep.t_rr)}};
  if (ctx.cfg.simulate_noisy) {
    const NoisyResult nr = simulate_noisy(pulse, geo, ctx.cfg.params, target, ctx.cfg.motion);
    s["noisy"] = {{"infidelity", nr.infidelity},
                  {"norm_loss", nr.norm_loss},
                  {"max_top_fock_population", nr.max_top_fock_population},
                  {"truncation_flag", nr.truncation_flag},
                  {"krylov_converged", nr.krylov_converged}};
  }
  ctx.write("summary.json", s);
}

void cmd_budget(Context& ctx) {
  const AtomGeometry geo = ctx.geometry();
  const PulseSchedule pulse = load_pulse(ctx.cfg.pulse_file);
  const GateTarget target = ctx.target(geo.n_atoms());
  const auto& p = ctx.cfg.params;
  const ErrorBudget b = error_budget(pulse, geo, p, target, ctx.cfg.motion);
  CsvWriter csv({"geometry", "eps_bell", "eps_decay", "eps_recoil", "eps_force", "eps_total", "t_norm", "t_r_norm",
                 "t_rr_norm", "additivity_residual", "truncation_flag"});
  csv.cell(ctx.cfg.geometry)
      .cell(b.eps_bell)
      .cell(b.eps_decay)
      .cell(b.eps_recoil)
      .cell(b.eps_force)
      .cell(b.eps_total)
      .cell(b.t_norm)
      .cell(b.t_r_norm)
      .cell(b.t_rr_norm)
      .cell(b.additivity_residual())
      .cell(b.truncation_flag ? 1 : 0)
      .end_row();
  ctx.write_csv("budget.csv", csv);
  json s = {{"eps_bell", b.eps_bell},   {"eps_decay", b.eps_decay}, {"eps_recoil", b.eps_recoil},
            {"eps_force", b.eps_force}, {"eps_total", b.eps_total}, {"t_norm", b.t_norm},
            {"t_r_norm", b.t_r_norm},   {"t_rr_norm", b.t_rr_norm}, {"truncation_flag", b.truncation_flag}};

  const auto& bs = ctx.cfg.budget;
  if (!bs.decay_gamma_grid.empty()) {
    CsvWriter d({"gamma_per_s", "eps_decay", "gamma_t_r", "relative_deviation"});
    for (const auto& pt : decay_sweep(pulse, geo, p, target, bs.decay_gamma_grid))
      d.cell(pt.gamma).cell(pt.eps_decay).cell(pt.gamma_t_r).cell(pt.relative_deviation).end_row();
    ctx.write_csv("decay_sweep.csv", d);
  }
  if (!bs.recoil_omega_grid.empty()) {
    const RecoilFit f =
        recoil_fit(pulse, geo, p, target, bs.recoil_omega_grid, bs.extrapolation_temperature, ctx.cfg.motion);
    CsvWriter r({"omega_par_rad_s", "eps_recoil", "model_zero_t", "model_finite_t"});
    for (std::size_t i = 0; i < f.omega_grid.size(); ++i)
      r.cell(f.omega_grid[i]).cell(f.eps_recoil[i]).cell(f.model[i]).cell(f.finite_t_model[i]).end_row();
    ctx.write_csv("recoil_fit.csv", r);
    s["recoil_fit"] = {{"alpha", f.alpha}, {"r_squared", f.r_squared}, {"truncation_flag", f.truncation_flag}};
  }
  if (!bs.force_omega_grid.empty()) {
    const ForceSweep f = force_sweep(pulse, geo, p, target, bs.force_omega_grid, ctx.cfg.motion);
    CsvWriter r({"omega_perp_rad_s", "eps_force"});
    for (std::size_t i = 0; i < f.omega_grid.size(); ++i) r.cell(f.omega_grid[i]).cell(f.eps_force[i]).end_row();
    ctx.write_csv("force_sweep.csv", r);
    s["force_sweep"] = {{"alpha_prime", f.alpha_prime},
                        {"r_squared", f.r_squared},
                        {"decreasing_fraction", f.decreasing_fraction},
                        {"truncation_flag", f.truncation_flag}};
  }
  ctx.write("summary.json", s);
}

void cmd_tomography(Context& ctx) {
  const auto& t = ctx.cfg.tomography;
  const auto& p = ctx.cfg.params;
  const PulseSchedule z2 = load_pulse(ctx.cfg.pulse_file);
  const AtomGeometry pair = ctx.geometry();
  std::optional<PulseSchedule> z2_theta;
  if (!t.z2_theta_pulse_file.empty()) z2_theta = load_pulse(t.z2_theta_pulse_file);

  CsvWriter table({"circuit", "channel", "total_error", "non_z_mass", "leakage", "E_chi", "E_avg", "t_r_s",
                   "refinement_change"});
  json summary = json::array();
  for (CircuitKind kind : t.circuits) {
    CircuitImplementation circuit;
    if (kind == CircuitKind::native) {
      const AtomGeometry ng = build_geometry(t.native_geometry, ctx.cfg.r_min * 1e6);
      circuit = build_native(load_pulse(t.native_pulse_file), ng, p, ctx.cfg.theta);
    } else {
      circuit = build_decomposition(kind, z2, pair, p, ctx.cfg.theta, z2_theta ? &*z2_theta : nullptr);
    }
    for (const auto& ch : t.channels) {
      const PauliErrorProfile prof = pauli_error_diagonals(circuit, {ch}, t.options);
      const std::string tag = std::string(to_string(kind)) + "_" + std::string(to_string(ch.kind));
      CsvWriter csv({"pauli_string", "probability"});
      for (std::size_t m = 0; m < prof.probabilities.size(); ++m)
        csv.cell(pauli_label(static_cast<int>(m), prof.n_qubits)).cell(prof.probabilities[m]).end_row();
      csv.cell("total").cell(prof.total_error).end_row();
      csv.cell("leakage").cell(prof.leakage).end_row();
      csv.cell("E_chi").cell(prof.process_infidelity).end_row();
      csv.cell("E_avg").cell(prof.avg_infidelity).end_row();
      ctx.write_csv("pauli_" + tag + ".csv", csv);
      table.cell(to_string(kind))
          .cell(to_string(ch.kind))
          .cell(prof.total_error)
          .cell(prof.non_z_mass())
          .cell(prof.leakage)
          .cell(prof.process_infidelity)
          .cell(prof.avg_infidelity)
          .cell(prof.t_r)
          .cell(prof.refinement_change)
          .end_row();
      for (const auto& w : prof.warnings) ctx.log << "warning (" << tag << "): " << w << "\n";
      summary.push_back({{"circuit", std::string(to_string(kind))},
                         {"channel", std::string(to_string(ch.kind))},
                         {"rate_per_s", ch.rate},
                         {"pulse_segments", circuit.pulse_segments()},
                         {"total_error", prof.total_error},
                         {"non_z_mass", prof.non_z_mass()},
                         {"leakage", prof.leakage},
                         {"process_infidelity", prof.process_infidelity},
                         {"avg_infidelity", prof.avg_infidelity},
                         {"avg_from_relation", prof.avg_from_relation},
                         {"t_r_s", prof.t_r},
                         {"duration_s", prof.duration},
                         {"refinement_change", prof.refinement_change},
                         {"warnings", prof.warnings}});
    }
  }
  ctx.write_csv("tomography.csv", table);
  ctx.write("summary.json", {{"profiles", summary}});
}

void cmd_robustness(Context& ctx) {
  const AtomGeometry geo = ctx.geometry();
  const PulseSchedule pulse = load_pulse(ctx.cfg.pulse_file);
  const auto& rb = ctx.cfg.robustness;
  const RobustnessReport rep = run_robustness(pulse, geo, ctx.cfg.params, ctx.target(geo.n_atoms()), rb.scenarios,
                                              rb.epsilons, {rb.n_samples, ctx.cfg.seed});
  CsvWriter csv({"channel", "mode", "epsilon", "mean", "std", "n"});
  CsvWriter shots({"channel", "mode", "epsilon", "shot", "e_avg"});
  json rows = json::array();
  for (const auto& r : rep.rows) {
    csv.cell(to_string(r.channel)).cell(to_string(r.mode)).cell(r.epsilon).cell(r.mean).cell(r.std).cell(r.n).end_row();
    for (std::size_t s = 0; s < r.samples.size(); ++s)
      shots.cell(to_string(r.channel))
          .cell(to_string(r.mode))
          .cell(r.epsilon)
          .cell(static_cast<long long>(s))
          .cell(r.samples[s])
          .end_row();
    rows.push_back({{"channel", std::string(to_string(r.channel))},
                    {"mode", std::string(to_string(r.mode))},
                    {"epsilon", r.epsilon},
                    {"mean", r.mean},
                    {"std", r.std},
                    {"n", r.n},
                    {"clamped", r.clamped}});
  }
  ctx.write_csv("robustness.csv", csv);
  ctx.write_csv("robustness_shots.csv", shots);
  ctx.write("summary.json", {{"unperturbed_avg_infidelity", rep.unperturbed}, {"rows", rows}});
}

void cmd_theta_sweep(Context& ctx) {
  const AtomGeometry geo = ctx.geometry();
  const OptimizationConfig oc = ctx.optimization();
  OptimizationResult base;
  if (!ctx.cfg.pulse_file.empty()) {
    base.pulse = load_pulse(ctx.cfg.pulse_file);
  } else {
    base = optimize(geo, ctx.cfg.params, ctx.target(geo.n_atoms()), oc);
  }
  const auto family = theta_sweep(base, ctx.cfg.theta, geo, ctx.cfg.params, ctx.cfg.resolved_theta_grid(), oc);
  CsvWriter csv({"index", "theta_rad", "eps_bell", "cost", "t_r_norm", "t_rr_norm", "antisymmetric"});
  for (std::size_t i = 0; i < family.size(); ++i) {
    const auto& pt = family[i];
    csv.cell(static_cast<long long>(i))
        .cell(pt.theta)
        .cell(pt.bell_infidelity)
        .cell(pt.cost)
        .cell(ctx.norm(pt.t_r))
        .cell(ctx.norm(pt.t_rr))
        .cell(is_antisymmetric(pt.pulse) ? 1 : 0)
        .end_row();
    ctx.write("pulses/theta_" + std::to_string(i) + ".json", pulse_to_json(pt.pulse));
  }
  ctx.write_csv("theta_sweep.csv", csv);
}

void cmd_rabi_scan(Context& ctx) {
  const auto rows = rabi_tradeoff_scan(ctx.cfg.params, ctx.cfg.resolved_rabi_scan());
  CsvWriter csv({"geometry", "omega_max_rad_s", "r_min_m", "duration_norm", "duration_s", "eps_bell", "t_r_norm",
                 "t_rr_norm", "eps_decay_estimate", "eps_total", "truncation_flag"});
  for (const auto& r : rows) {
    const double to_norm = r.omega_max / (2.0 * constants::pi);
    csv.cell(r.geometry)
        .cell(r.omega_max)
        .cell(r.r_min_um * 1e-6)
        .cell(r.duration_norm)
        .cell(r.duration)
        .cell(r.eps_bell)
        .cell(r.t_r * to_norm)
        .cell(r.t_rr * to_norm)
        .cell(r.eps_decay_estimate)
        .cell(r.eps_total)
        .cell(r.truncation_flag ? 1 : 0)
        .end_row();
  }
  ctx.write_csv("rabi_scan.csv", csv);
}

}  // namespace

int run(const RunConfig& config, std::ostream& log) {
  Context ctx{config, log, fs::path(config.output_dir), {}};
  try {
    fs::create_directories(ctx.dir);
    for (const auto& w : config.params.range_warnings(config.r_min * 1e6)) log << "warning: " << w << "\n";
    switch (config.command) {
      case Command::optimize:
        cmd_optimize(ctx);
        break;
      case Command::qsl_scan:
        cmd_qsl(ctx);
        break;
      case Command::simulate:
        cmd_simulate(ctx);
        break;
      case Command::budget:
        cmd_budget(ctx);
        break;
      case Command::tomography:
        cmd_tomography(ctx);
        break;
      case Command::robustness:
        cmd_robustness(ctx);
        break;
      case Command::theta_sweep:
        cmd_theta_sweep(ctx);
        break;
      case Command::rabi_scan:
        cmd_rabi_scan(ctx);
        break;
    }
    ctx.write("resolved_config.json", resolved_config(config));
    json manifest = {{"command", std::string(to_string(config.command))},
                     {"seed", config.seed},
                     {"config_hash", config_hash(config)},
                     {"version", PARITY_GATE_VERSION},
                     {"outputs", ctx.outputs}};
    write_json_atomic(ctx.dir / "manifest.json", manifest);
  } catch (const std::exception& e) {
    log << "error: " << to_string(config.command) << " failed: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace parity_gate
