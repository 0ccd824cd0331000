#include "parity_gate/scans.hpp"

#include <stdexcept>

namespace parity_gate {

void RabiScanConfig::validate() const {
  if (geometries.empty() || omega_max.empty() || r_min_um.empty() || durations_norm.empty())
    throw std::invalid_argument("rabi scan grids must not be empty");
  for (double w : omega_max)
    if (!(w > 0.0)) throw std::invalid_argument("omega_max must be positive");
  for (double r : r_min_um)
    if (!(r > 0.0)) throw std::invalid_argument("r_min must be positive");
  for (double t : durations_norm)
    if (!(t > 0.0) || t > max_duration_norm)
      throw std::invalid_argument("normalised duration outside (0, " + std::to_string(max_duration_norm) + "]");
  optimization.validate();
  motion.validate();
}

std::vector<RabiScanRow> rabi_tradeoff_scan(const PhysicalParams& base_params, const RabiScanConfig& config) {
  config.validate();
  std::vector<RabiScanRow> rows;
  for (const auto& name : config.geometries) {
    for (double r : config.r_min_um) {
      const AtomGeometry geometry = build_geometry(name, r);
      const GateTarget target = build_parity_target(geometry.n_atoms(), constants::pi / 4);
      for (double w : config.omega_max) {
        PhysicalParams params = base_params;
        params.omega_max = w;
        for (double tn : config.durations_norm) {
          OptimizationConfig oc = config.optimization;
          oc.duration = physical_time(tn, params);
          const OptimizationResult res = optimize(geometry, params, target, oc);
          RabiScanRow row;
          row.geometry = name;
          row.omega_max = w;
          row.r_min_um = r;
          row.duration_norm = tn;
          row.duration = oc.duration;
          row.eps_bell = res.bell_infidelity;
          row.t_r = res.t_r;
          row.t_rr = res.t_rr;
          row.eps_decay_estimate = params.gamma_d * res.t_r;
          if (config.simulate_noise) {
            const NoisyResult nr = simulate_noisy(res.pulse, geometry, params, target, config.motion);
            row.eps_total = nr.infidelity;
            row.truncation_flag = nr.truncation_flag;
          }
          rows.push_back(std::move(row));
        }
      }
    }
  }
  return rows;
}

}  // namespace parity_gate
