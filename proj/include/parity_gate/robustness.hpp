#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

#include "parity_gate/model.hpp"

namespace parity_gate {

enum class PerturbationChannel { rabi, detuning, phase };
enum class PerturbationMode { quasi_static, time_varying };

std::string_view to_string(PerturbationChannel channel);
std::string_view to_string(PerturbationMode mode);
PerturbationChannel perturbation_channel_from_string(std::string_view name);
PerturbationMode perturbation_mode_from_string(std::string_view name);

struct PerturbationSpec {
  PerturbationChannel channel = PerturbationChannel::rabi;
  PerturbationMode mode = PerturbationMode::quasi_static;
  double epsilon = 0.0;

  /// epsilon * Omega_max for Rabi and detuning, epsilon * pi for the phase.
  double sigma(const PhysicalParams& params) const;
  /// Rejects negative epsilon and quasi-static phase offsets (a global phase).
  void validate() const;
};

/// Applies one shot of Gaussian noise; `normals` holds one standard normal
/// per step (only the first is used for quasi-static noise). Returns the
/// number of Rabi values clamped at zero.
int perturb_pulse(PulseSchedule& pulse, const PerturbationSpec& spec, const PhysicalParams& params,
                  const std::vector<double>& normals);

struct RobustnessRow {
  PerturbationChannel channel = PerturbationChannel::rabi;
  PerturbationMode mode = PerturbationMode::quasi_static;
  double epsilon = 0.0;
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation
  int n = 0;
  int clamped = 0;   // Rabi values clamped at zero over all shots
  std::vector<double> samples;
};

struct RobustnessReport {
  double unperturbed = 0.0;  // average gate infidelity of the bare pulse
  std::vector<RobustnessRow> rows;
};

struct RobustnessOptions {
  int n_samples = 50;
  std::uint64_t seed = 1;
};

/// Every (channel, mode) scenario in `scenarios` is evaluated on every
/// epsilon. Shot s of a scenario uses the same standard normals at each
/// epsilon, so the curves are paired.
RobustnessReport run_robustness(const PulseSchedule& pulse, const AtomGeometry& geometry,
                                const PhysicalParams& params, const GateTarget& target,
                                const std::vector<PerturbationSpec>& scenarios,
                                const std::vector<double>& epsilons, const RobustnessOptions& options = {});

double sample_std(const std::vector<double>& values);

}  // namespace parity_gate
