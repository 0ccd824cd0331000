#pragma once

#include <optional>
#include <vector>

#include <Eigen/Sparse>

#include "parity_gate/model.hpp"
#include "parity_gate/propagate.hpp"

namespace parity_gate {

/// The laser propagates along +z, normal to the plane of the planar
/// geometries. `parallel` motion is along z, `perpendicular` along x (the
/// direction of the first atom pair).
enum class TrapAxis { parallel, perpendicular };

std::string_view to_string(TrapAxis axis);
TrapAxis trap_axis_from_string(std::string_view name);
Vec3 axis_direction(TrapAxis axis);

struct MotionalConfig {
  int n_fock = 12;
  int taylor_order = 10;
  TrapAxis axis = TrapAxis::parallel;
  bool include_decay = true;
  bool include_recoil = true;
  bool include_vdw_gradient = true;
  KrylovConfig krylov{30, 1, 1e-10};
  double truncation_threshold = 1e-6;

  void validate() const;
  bool has_motion() const { return include_recoil || include_vdw_gradient; }
};

/// Zero-point length sqrt(hbar / (2 m omega)) in metres.
double zero_point_length(const PhysicalParams& params, double omega);
/// Trap angular frequency along the configured axis.
double axis_frequency(const PhysicalParams& params, TrapAxis axis);

/// Taylor coefficients b_n of (1 + 2 c s + s^2)^(-3) = sum_n b_n s^n, with c
/// the direction cosine between the trap axis and the pair vector.
std::vector<double> vdw_taylor_coefficients(double cosine, int order);

/// exp(i eta (a + a^dag)) on an n-level truncated oscillator.
Eigen::MatrixXcd recoil_operator(double eta, int n_fock);

/// Hamiltonian of one block on internal (2^k) x Fock^k, k = active atoms.
/// Internal index major; Fock digits of active atoms follow in order.
/// H = H_static - Delta N_r + (Omega/2)(e^{i phi} D + h.c.).
class NoisyBlockGenerator {
 public:
  NoisyBlockGenerator(const AtomGeometry& geometry, const PhysicalParams& params, std::uint32_t mask,
                      const MotionalConfig& config);

  int dim() const { return dim_; }
  int n_active() const { return n_active_; }
  /// |mu> in the block times the motional ground state.
  int initial_index() const { return 0; }
  Eigen::SparseMatrix<cplx, Eigen::RowMajor> hamiltonian(const StepControls& c) const;
  HamiltonianApplier applier(const StepControls& c) const;
  /// Population in states where some mode sits in its top Fock level.
  double top_fock_population(const Eigen::VectorXcd& state) const;

  const Eigen::SparseMatrix<cplx, Eigen::RowMajor>& static_part() const { return static_; }
  const Eigen::SparseMatrix<cplx, Eigen::RowMajor>& drive() const { return drive_; }

 private:
  int n_active_ = 0;
  int n_fock_ = 1;
  int dim_ = 1;
  Eigen::SparseMatrix<cplx, Eigen::RowMajor> static_;
  Eigen::SparseMatrix<cplx, Eigen::RowMajor> drive_;
  Eigen::VectorXd rydberg_count_;
  std::vector<int> top_states_;
};

NoisyBlockGenerator build_noisy_generator(const AtomGeometry& geometry, const PhysicalParams& params,
                                          std::uint32_t mask, const MotionalConfig& config);

struct NoisyResult {
  double infidelity = 0.0;  // 1 - |sum conj(t_mu) <mu,0|psi_mu(T)>|^2 / 4^N
  double norm_loss = 0.0;   // basis-averaged 1 - |psi(T)|^2
  double max_top_fock_population = 0.0;
  bool truncation_flag = false;
  bool krylov_converged = true;
  long matvecs = 0;
};

/// Propagates every block from |mu> (x motional ground state) with the noisy
/// Hamiltonian. Without recoil and force the exact block propagators are used.
NoisyResult simulate_noisy(const PulseSchedule& pulse, const AtomGeometry& geometry,
                           const PhysicalParams& params, const GateTarget& target,
                           const MotionalConfig& config);

struct ErrorBudget {
  double eps_bell = 0.0;
  double eps_decay = 0.0;
  double eps_recoil = 0.0;
  double eps_force = 0.0;
  double eps_total = 0.0;
  double t_norm = 0.0;
  double t_r_norm = 0.0;
  double t_rr_norm = 0.0;
  bool truncation_flag = false;

  double additivity_residual() const {
    return eps_total - (eps_bell + eps_decay + eps_recoil + eps_force);
  }
};

/// decay: decay only; recoil: parallel axis, recoil only; force:
/// perpendicular axis, VdW gradient only; total: parallel axis with all
/// mechanisms. Components are run infidelity minus eps_bell, floored at 0.
ErrorBudget error_budget(const PulseSchedule& pulse, const AtomGeometry& geometry,
                         const PhysicalParams& params, const GateTarget& target,
                         const MotionalConfig& base = {});

struct DecayPoint {
  double gamma = 0.0;
  double eps_decay = 0.0;
  double gamma_t_r = 0.0;
  double relative_deviation = 0.0;
};

std::vector<DecayPoint> decay_sweep(const PulseSchedule& pulse, const AtomGeometry& geometry,
                                    const PhysicalParams& params, const GateTarget& target,
                                    const std::vector<double>& gamma_grid);

/// Recoil frequency hbar k^2 / (2 m) in rad/s.
double recoil_frequency(const PhysicalParams& params);
/// coth(hbar beta omega / 2); 1 at zero temperature.
double thermal_factor(double omega, double temperature);

struct RecoilFit {
  double alpha = 0.0;
  double r_squared = 0.0;
  double t_r = 0.0;  // s
  std::vector<double> omega_grid;
  std::vector<double> eps_recoil;  // simulated, zero temperature
  std::vector<double> model;       // fitted zero-temperature curve
  double extrapolation_temperature = 2e-6;  // K
  std::vector<double> finite_t_model;
  bool truncation_flag = false;
};

RecoilFit recoil_fit(const PulseSchedule& pulse, const AtomGeometry& geometry, const PhysicalParams& params,
                     const GateTarget& target, const std::vector<double>& omega_grid,
                     double extrapolation_temperature = 2e-6, const MotionalConfig& base = {});

struct ForceSweep {
  std::vector<double> omega_grid;
  std::vector<double> eps_force;
  double t_rr = 0.0;  // s
  double alpha_prime = 0.0;
  double r_squared = 0.0;
  /// Fraction of consecutive grid pairs along which eps_force decreases.
  double decreasing_fraction = 0.0;
  bool truncation_flag = false;
};

ForceSweep force_sweep(const PulseSchedule& pulse, const AtomGeometry& geometry, const PhysicalParams& params,
                       const GateTarget& target, const std::vector<double>& omega_grid,
                       const MotionalConfig& base = {});

}  // namespace parity_gate
