#pragma once

#include <string>
#include <vector>

#include "parity_gate/grape.hpp"
#include "parity_gate/motional.hpp"

namespace parity_gate {

struct RabiScanConfig {
  std::vector<std::string> geometries{"linear-pair"};
  std::vector<double> omega_max{2.0 * constants::pi * 10e6};  // rad/s
  std::vector<double> r_min_um{2.0};
  std::vector<double> durations_norm{2.1};  // Omega_max T / (2 pi), each <= max_duration_norm
  double max_duration_norm = 7.0;
  OptimizationConfig optimization;  // duration is overwritten per row
  MotionalConfig motion;
  bool simulate_noise = true;

  void validate() const;
};

struct RabiScanRow {
  std::string geometry;
  double omega_max = 0.0;
  double r_min_um = 0.0;
  double duration_norm = 0.0;
  double duration = 0.0;  // s
  double eps_bell = 0.0;
  double t_r = 0.0;
  double t_rr = 0.0;
  double eps_decay_estimate = 0.0;  // gamma_d T_R
  double eps_total = 0.0;           // full noisy simulation (0 when disabled)
  bool truncation_flag = false;
};

std::vector<RabiScanRow> rabi_tradeoff_scan(const PhysicalParams& base_params, const RabiScanConfig& config);

}  // namespace parity_gate
