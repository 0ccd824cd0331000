#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "parity_gate/lbfgs.hpp"
#include "parity_gate/model.hpp"

namespace parity_gate {

/// Time unit that eta_R and eta_RR multiply: microseconds, Omega_max*T/(2pi),
/// or seconds.
enum class WeightUnits { microseconds, normalized, seconds };

std::string_view to_string(WeightUnits units);
WeightUnits weight_units_from_string(std::string_view name);

struct RampConfig {
  bool enabled = false;
  double kappa = 10.0;
  double tau_ramp = 0.0;  // s; 0 selects pi/omega_max
};

struct OptimizationConfig {
  double eta_delta = 1e-3;
  double eta_r = 1e-2;
  double eta_rr = 1e2;
  bool noise_aware = true;
  WeightUnits weight_units = WeightUnits::microseconds;
  int n_starts = 20;
  int max_iters = 2000;
  double grad_tolerance = 1e-9;
  double rel_cost_tolerance = 1e-12;
  std::uint64_t seed = 1;
  double duration = 0.0;  // s
  int m_steps = 0;        // 0 selects steps_per_unit * Omega_max T/(2 pi)
  int steps_per_unit = 50;
  int substeps = 4;       // quadrature samples per piece for T_R, T_RR
  RampConfig ramp;
  bool optimize_rabi = false;
  bool antisymmetric_phase = false;

  void validate() const;
  int resolved_steps(const PhysicalParams& params) const;
};

/// Fraction of Omega_max at time t for a pulse of length T with smooth ramps.
double ramp_fraction(double t, double total, double tau_ramp, double kappa);

/// Samples the ramp profile at piece midpoints into pulse.rabi.
PulseSchedule apply_ramp(const PulseSchedule& pulse, const PhysicalParams& params, double kappa,
                         double tau_ramp);

struct CostBreakdown {
  double cost = 0.0;
  double eps_bell = 0.0;
  double smoothness = 0.0;  // unweighted sum of squared half-differences
  double t_r = 0.0;         // s
  double t_rr = 0.0;        // s
};

struct ControlGradient {
  Eigen::VectorXd d_phi;   // dC/dphi_j
  Eigen::VectorXd d_rabi;  // dC/dOmega_j (rad/s)^-1; zero unless Omega is optimized
};

/// Evaluates the noise-free / noise-aware cost and its exact gradient by
/// reverse accumulation through the block step propagators.
class CostModel {
 public:
  CostModel(const AtomGeometry& geometry, const PhysicalParams& params, const GateTarget& target,
            const OptimizationConfig& config);
  CostModel(const BlockSet& blocks, const PhysicalParams& params, const GateTarget& target,
            const OptimizationConfig& config);

  CostBreakdown evaluate(const PulseSchedule& pulse, ControlGradient* gradient = nullptr) const;

  const BlockSet& blocks() const { return blocks_; }
  const OptimizationConfig& config() const { return config_; }
  const PhysicalParams& params() const { return params_; }
  const GateTarget& target() const { return target_; }
  void set_target(const GateTarget& target) { target_ = target; }

  double time_weight_scale() const;

 private:
  BlockSet blocks_;
  PhysicalParams params_;
  GateTarget target_;
  OptimizationConfig config_;
};

double cost_noise_free(const PulseSchedule& pulse, const BlockSet& blocks, const GateTarget& target,
                       double eta_delta, const PhysicalParams& params = {});
double cost_noise_aware(const PulseSchedule& pulse, const BlockSet& blocks, const GateTarget& target,
                        const OptimizationConfig& config, const PhysicalParams& params = {});
ControlGradient gradient(const PulseSchedule& pulse, const BlockSet& blocks, const GateTarget& target,
                         const OptimizationConfig& config, const PhysicalParams& params = {});

/// Maps the free optimisation vector onto pulse controls (and back).
class ControlLayout {
 public:
  ControlLayout(const PulseSchedule& base, const OptimizationConfig& config,
                const PhysicalParams& params, std::vector<bool> rabi_free);

  int size() const { return n_phase_ + static_cast<int>(rabi_index_.size()); }
  int n_phase() const { return n_phase_; }
  PulseSchedule to_pulse(const Eigen::VectorXd& x) const;
  Eigen::VectorXd from_pulse(const PulseSchedule& pulse) const;
  Eigen::VectorXd chain(const Eigen::VectorXd& x, const ControlGradient& g) const;

 private:
  PulseSchedule base_;
  bool antisymmetric_;
  int n_phase_ = 0;
  std::vector<int> rabi_index_;
  double omega_max_;
};

struct StartSummary {
  int start_index = 0;
  double cost = 0.0;
  double bell_infidelity = 0.0;
  double t_r = 0.0;
  double t_rr = 0.0;
  int iterations = 0;
  bool converged = false;
  std::string reason;
};

struct OptimizationResult {
  PulseSchedule pulse;
  double cost = 0.0;
  double bell_infidelity = 1.0;
  double t_r = 0.0;
  double t_rr = 0.0;
  int iterations = 0;
  int start_index = 0;
  bool converged = false;
  std::vector<double> cost_history;
  std::vector<StartSummary> starts;
};

/// Pulse skeleton (dt, Rabi profile, zero phases) for a given config.
PulseSchedule initial_pulse(const PhysicalParams& params, const OptimizationConfig& config);

/// Pieces whose Rabi value may be optimised (outside the ramps).
std::vector<bool> free_rabi_mask(const PulseSchedule& pulse, const PhysicalParams& params,
                                 const OptimizationConfig& config);

/// Local optimisation from a given pulse.
OptimizationResult refine(const CostModel& model, const PulseSchedule& start, int start_index = 0);

/// Multi-start optimisation; best final cost wins, ties to the lowest index.
OptimizationResult optimize(const AtomGeometry& geometry, const PhysicalParams& params,
                            const GateTarget& target, const OptimizationConfig& config);

struct QslPoint {
  double duration_norm = 0.0;
  double best_infidelity = 1.0;
  std::vector<double> start_infidelities;
  OptimizationResult best;
};

struct QslScan {
  std::vector<QslPoint> points;
  /// Smallest normalised duration whose best infidelity is <= threshold.
  std::optional<double> t_star(double threshold) const;
};

QslScan qsl_scan(const AtomGeometry& geometry, const PhysicalParams& params, const GateTarget& target,
                 const std::vector<double>& durations_norm, const OptimizationConfig& config);

struct ThetaPoint {
  double theta = 0.0;
  PulseSchedule pulse;
  double bell_infidelity = 1.0;
  double cost = 0.0;
  double t_r = 0.0;
  double t_rr = 0.0;
};

/// Warm-started re-optimisation along a grid of angles starting at the base angle.
std::vector<ThetaPoint> theta_sweep(const OptimizationResult& base, double base_theta,
                                    const AtomGeometry& geometry, const PhysicalParams& params,
                                    const std::vector<double>& thetas, const OptimizationConfig& config);

/// True when phi_j + phi_{M-1-j} == 0 for all j.
bool is_antisymmetric(const PulseSchedule& pulse);

}  // namespace parity_gate
