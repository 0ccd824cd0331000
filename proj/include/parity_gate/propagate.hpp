#pragma once

#include <functional>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "parity_gate/model.hpp"

namespace parity_gate {

/// Block basis: bit a of a block index set means active atom a is in |r>,
/// clear means |1>. Index 0 is the computational state of the block.
struct BlockOperators {
  int dim = 1;
  Eigen::VectorXd rydberg_count;  // sum_i n_i
  Eigen::VectorXd pair_count;     // sum_{i<j} n_i n_j
  Eigen::VectorXd interaction;    // -sum_{i<j} V_ij n_i n_j   (rad/s)
  Eigen::MatrixXcd raising;       // sum_i |r_i><1_i|
};

BlockOperators block_operators(const BlockSpec& block);

struct StepControls {
  double phi = 0.0;
  double rabi = 0.0;
  double detuning = 0.0;
};

/// Block Hamiltonian (rad/s): drive + interactions - Delta sum n - i gamma/2 sum n.
Eigen::MatrixXcd block_hamiltonian(const BlockOperators& ops, const StepControls& c,
                                   double decay = 0.0);

/// exp(-i H dt). Hermitian steps use an eigendecomposition, steps with decay
/// use scaling-and-squaring.
Eigen::MatrixXcd step_matrix(const BlockSpec& block, const StepControls& c,
                             std::optional<double> decay, double dt);
Eigen::MatrixXcd step_matrix(const BlockOperators& ops, const StepControls& c,
                             std::optional<double> decay, double dt);

struct BlockPropagation {
  int block_index = 0;
  int class_index = 0;
  /// Cumulative propagators at the M+1 piece boundaries.
  std::vector<Eigen::MatrixXcd> unitaries;
  /// <mu|U^dag(t) N U(t)|mu> at every sample point (M*substeps + 1 points,
  /// spacing sample_dt); N = sum n_i resp. sum_{i<j} n_i n_j.
  std::vector<double> populations_r;
  std::vector<double> populations_rr;
  double sample_dt = 0.0;

  const Eigen::MatrixXcd& final_unitary() const { return unitaries.back(); }
  /// <mu|U(T)|mu>
  cplx diagonal() const { return unitaries.back()(0, 0); }
};

struct PropagationOptions {
  std::optional<double> decay;
  int substeps = 4;
};

/// One propagation per symmetry class, replicated to all 2^N blocks. Blocks
/// that are not their class representative inherit its atom ordering, so only
/// quantities invariant under relabelling (diagonal, populations) are exact
/// for them.
std::vector<BlockPropagation> propagate_blocks(const PulseSchedule& pulse, const BlockSet& blocks,
                                               const PropagationOptions& options = {});

/// Full three-level register: digit 0, 1, 2 is |0>, |1>, |r> for each atom,
/// atom 0 most significant. Used by oracles and the tomography module.
int full_dimension(int n_atoms);
int full_index(std::uint32_t mu, int n_atoms);
Eigen::MatrixXcd full_hamiltonian(const AtomGeometry& geometry, const PhysicalParams& params,
                                  const StepControls& c, double decay = 0.0);

/// Trapezoidal integral of a uniformly sampled trace.
double trapezoid(const std::vector<double>& samples, double h);

// ---------------------------------------------------------------------------
// Krylov propagation

/// out = H * in, H in rad/s. Must be callable concurrently.
using HamiltonianApplier = std::function<void(const Eigen::VectorXcd& in, Eigen::VectorXcd& out)>;

struct KrylovConfig {
  int max_subspace_dim = 30;
  int substeps_per_pulse_step = 1;
  double tolerance = 1e-10;

  void validate() const;
};

struct KrylovResult {
  Eigen::VectorXcd state;
  double error_estimate = 0.0;
  int substeps = 0;
  int matvecs = 0;
  bool converged = true;
};

/// Arnoldi approximation of exp(-i H dt) state; H may be non-Hermitian.
KrylovResult krylov_evolve(const HamiltonianApplier& apply_h, const Eigen::VectorXcd& state,
                           double dt, const KrylovConfig& config = {});

}  // namespace parity_gate
