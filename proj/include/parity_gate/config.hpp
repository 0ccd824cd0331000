#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "parity_gate/grape.hpp"
#include "parity_gate/io.hpp"
#include "parity_gate/motional.hpp"
#include "parity_gate/robustness.hpp"
#include "parity_gate/scans.hpp"
#include "parity_gate/tomography.hpp"

namespace parity_gate {

enum class Command { optimize, qsl_scan, simulate, budget, tomography, robustness, theta_sweep, rabi_scan };

std::string_view to_string(Command c);
Command command_from_string(std::string_view name);

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct BudgetSettings {
  std::vector<double> decay_gamma_grid;   // 1/s
  std::vector<double> recoil_omega_grid;  // rad/s
  std::vector<double> force_omega_grid;   // rad/s
  double extrapolation_temperature = 2e-6;
};

struct TomographySettings {
  std::vector<CircuitKind> circuits{CircuitKind::v_decomposition, CircuitKind::x_decomposition,
                                    CircuitKind::zz_decomposition};
  std::vector<NoiseChannelSpec> channels{{ChannelKind::decay_r_to_1, 12.5e3}};
  TomographyOptions options;
  std::string native_pulse_file;
  std::string native_geometry = "square";
  std::string z2_theta_pulse_file;
};

struct RobustnessSettings {
  std::vector<PerturbationSpec> scenarios{
      {PerturbationChannel::rabi, PerturbationMode::quasi_static, 0.0},
      {PerturbationChannel::detuning, PerturbationMode::quasi_static, 0.0},
      {PerturbationChannel::rabi, PerturbationMode::time_varying, 0.0},
      {PerturbationChannel::detuning, PerturbationMode::time_varying, 0.0},
      {PerturbationChannel::phase, PerturbationMode::time_varying, 0.0}};
  std::vector<double> epsilons{0.0, 0.01, 0.02, 0.03, 0.04};
  int n_samples = 50;
};

struct QslSettings {
  std::vector<double> durations_norm{1.6, 1.7, 1.8, 1.9, 2.0, 2.1};
  std::vector<double> thresholds{1e-6, 1e-4};
};

struct RunConfig {
  Command command = Command::optimize;
  std::uint64_t seed = 1;
  std::string output_dir = "out";
  std::string geometry = "linear-pair";
  double r_min = 2e-6;  // m
  double theta = constants::pi / 4;
  double duration_norm = 2.1;
  std::string pulse_file;
  PhysicalParams params;
  OptimizationConfig optimization;
  MotionalConfig motion;
  bool simulate_noisy = false;
  BudgetSettings budget;
  TomographySettings tomography;
  RobustnessSettings robustness;
  QslSettings qsl;
  std::vector<double> theta_grid;  // empty selects 8 points from theta to 0
  RabiScanConfig rabi_scan;           // r_min_um is filled from rabi_r_min
  std::vector<double> rabi_r_min{2e-6};  // m

  RabiScanConfig resolved_rabi_scan() const;

  /// Cross-field checks, including that referenced files exist.
  void validate() const;
  std::vector<double> resolved_theta_grid() const;
};

/// Strict parse: unknown keys and wrong types raise ConfigError naming the key.
RunConfig parse_config(const json& j);
/// Reads a JSON file; syntax errors carry line and column.
json read_config_file(const std::filesystem::path& path);
/// Every field with defaults filled in; parse_config(resolved_config(c)) == c.
json resolved_config(const RunConfig& config);
/// FNV-1a over the compact dump of the resolved config.
std::string config_hash(const RunConfig& config);

}  // namespace parity_gate
