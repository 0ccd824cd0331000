#pragma once

#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "parity_gate/model.hpp"

namespace parity_gate {

enum class ChannelKind { decay_r_to_1, dephase_1r, dephase_01 };

std::string_view to_string(ChannelKind kind);
ChannelKind channel_kind_from_string(std::string_view name);

/// Per-atom jump operators with dissipator gamma (L rho L^dag - {L^dag L, rho}/2):
/// |1><r|, |1><1| - |r><r|, |0><0| - |1><1|.
struct NoiseChannelSpec {
  ChannelKind kind = ChannelKind::decay_r_to_1;
  double rate = 0.0;  // 1/s
};

/// Single-atom 3x3 jump operator in the {|0>, |1>, |r>} basis.
Eigen::Matrix3cd jump_operator(ChannelKind kind);

/// Pulse driving one or more disjoint qubit groups; each group is laid out
/// as `geometry` (group[i] sits at atom i). Groups do not interact.
struct PulseSegment {
  PulseSchedule pulse;
  AtomGeometry geometry;
  PhysicalParams params;
  std::vector<std::vector<int>> groups;
  double ideal_theta = constants::pi / 4;  // the gate the pulse stands for
};

/// Instantaneous noise-free single-qubit gates (identity on |r>).
struct IdealLayer {
  std::vector<std::pair<int, Eigen::Matrix2cd>> gates;
};

using CircuitSegment = std::variant<PulseSegment, IdealLayer>;

enum class CircuitKind { native, v_decomposition, x_decomposition, zz_decomposition };

std::string_view to_string(CircuitKind kind);
CircuitKind circuit_kind_from_string(std::string_view name);

struct CircuitImplementation {
  CircuitKind kind = CircuitKind::native;
  int n_qubits = 0;
  std::vector<CircuitSegment> segments;

  int pulse_segments() const;
  int ideal_gate_count() const;
  double duration() const;
  /// Product of the segments with every pulse replaced by its ideal parity
  /// gate, on the 2^N computational space.
  Eigen::MatrixXcd ideal_unitary() const;
};

/// Native circuit: one pulse on all qubits of `geometry`.
CircuitImplementation build_native(const PulseSchedule& pulse, const AtomGeometry& geometry,
                                   const PhysicalParams& params, double theta);

/// Four-qubit decompositions built from a Z_2(pi/4) pulse on a pair laid out
/// as `pair_geometry`. The ZZ layout also needs a Z_2(theta) pulse; the
/// Z_2(pi/4) pulse is reused when theta == pi/4. Throws if the ideal circuit
/// differs from Z_4(theta) beyond a global phase.
CircuitImplementation build_decomposition(CircuitKind kind, const PulseSchedule& z2_pulse,
                                          const AtomGeometry& pair_geometry, const PhysicalParams& params,
                                          double theta, const PulseSchedule* z2_theta_pulse = nullptr);

/// Global-phase-insensitive distance min_phi ||a - e^{i phi} b||_max.
double phase_insensitive_distance(const Eigen::MatrixXcd& a, const Eigen::MatrixXcd& b);

/// Pauli strings in order I, X, Y, Z per qubit, qubit 0 first.
std::string pauli_label(int index, int n_qubits);
bool is_z_type(int index, int n_qubits);

struct PauliErrorProfile {
  int n_qubits = 0;
  std::vector<double> probabilities;  // 4^N entries; index 0 is the identity
  double total_error = 0.0;           // sum over non-identity strings
  double leakage = 0.0;
  double process_infidelity = 0.0;
  double avg_infidelity = 0.0;        // from its own integrand
  double avg_from_relation = 0.0;     // (d E_chi + L) / (d + 1)
  double t_r = 0.0;                   // s, basis-averaged Rydberg time of the circuit
  double duration = 0.0;              // s
  double refinement_change = 0.0;     // relative change of total_error on doubling the samples
  std::vector<std::string> warnings;

  double non_z_mass() const;
};

struct TomographyOptions {
  int substeps = 4;
  bool refine_check = true;
};

PauliErrorProfile pauli_error_diagonals(const CircuitImplementation& circuit,
                                        const std::vector<NoiseChannelSpec>& channels,
                                        const TomographyOptions& options = {});

struct ChannelInfidelity {
  double avg_infidelity = 0.0;
  double decay_t_r = 0.0;       // sum over decay channels of gamma * T_R
  bool within_decay_bound = true;
};

ChannelInfidelity avg_infidelity_from_channels(const CircuitImplementation& circuit,
                                               const std::vector<NoiseChannelSpec>& channels,
                                               const TomographyOptions& options = {});

}  // namespace parity_gate
