#pragma once

#include <array>
#include <complex>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace parity_gate {

using cplx = std::complex<double>;
using Vec3 = std::array<double, 3>;

namespace constants {
inline constexpr double pi = 3.14159265358979323846;
inline constexpr double hbar = 1.054571817e-34;   // J s
inline constexpr double planck = 6.62607015e-34;  // J s
inline constexpr double amu = 1.66053906660e-27;  // kg
inline constexpr double k_boltzmann = 1.380649e-23;
inline constexpr double sr88_mass_u = 87.9056;
}  // namespace constants

enum class GeometryKind { linear_pair, equilateral_triangle, right_triangle, tetrahedron, square };

std::string_view to_string(GeometryKind kind);
GeometryKind geometry_from_string(std::string_view name);

/// Atom positions in micrometres. Planar shapes lie in z = 0 with atom 0 at
/// the origin and atom 1 on the +x axis.
struct AtomGeometry {
  GeometryKind kind = GeometryKind::linear_pair;
  std::vector<Vec3> positions;
  double r_min_um = 0.0;

  int n_atoms() const { return static_cast<int>(positions.size()); }
  double distance_um(int j, int k) const;
};

AtomGeometry build_geometry(GeometryKind kind, double r_min_um);
AtomGeometry build_geometry(std::string_view name, double r_min_um);

/// Physical constants of the platform. Frequencies are angular (rad/s).
struct PhysicalParams {
  double c6_ghz_um6 = -150.0;  // C6/h
  double omega_max = 2.0 * constants::pi * 10e6;
  double gamma_d = 1.0 / 80e-6;
  double lambda_laser = 323e-9;
  double mass = constants::sr88_mass_u * constants::amu;
  double omega_par = 2.0 * constants::pi * 100e3;
  double omega_perp = 2.0 * constants::pi * 100e3;
  double temperature = 0.0;  // K; 0 means zero temperature

  void validate() const;
  /// Ranges outside the nominal experimental window produce messages rather
  /// than errors.
  std::vector<std::string> range_warnings(double r_min_um) const;
  double wave_number() const { return 2.0 * constants::pi / lambda_laser; }
  /// Inverse temperature in 1/J; infinity at zero temperature.
  double beta() const;
};

struct PulseSchedule {
  double dt = 0.0;
  std::vector<double> phi;
  std::vector<double> rabi;
  std::vector<double> detuning;

  int m_steps() const { return static_cast<int>(phi.size()); }
  double duration() const { return dt * m_steps(); }
  void validate(const PhysicalParams* params = nullptr) const;

  static PulseSchedule constant(int m_steps, double dt, double rabi, double phi = 0.0);
};

/// Normalized time Omega_max * t / (2 pi).
inline double normalized_time(double t, const PhysicalParams& p) {
  return p.omega_max * t / (2.0 * constants::pi);
}
inline double physical_time(double t_norm, const PhysicalParams& p) {
  return t_norm * 2.0 * constants::pi / p.omega_max;
}

/// Diagonal target; phases[mu] for computational index mu with atom 0 as the
/// most significant bit.
struct GateTarget {
  int n_qubits = 0;
  double theta = 0.0;
  std::vector<cplx> phases;
};

GateTarget build_parity_target(int n, double theta, bool normalize_global_phase = false);

int popcount(std::uint32_t x);

/// Interaction matrix V_jk = C6/R_jk^6 in rad/s (negative for C6 < 0).
Eigen::MatrixXd pairwise_interaction(const AtomGeometry& geometry, const PhysicalParams& params);
double interaction_at(double r_um, const PhysicalParams& params);

struct BlockSpec {
  std::uint32_t mask = 0;         // computational index mu
  std::vector<int> active_atoms;  // atoms with mu_i = 1, ascending
  Eigen::MatrixXd interactions;   // V over active atoms
  std::vector<double> symmetry_key;

  int n_active() const { return static_cast<int>(active_atoms.size()); }
  int dim() const { return 1 << n_active(); }
  bool trivial() const { return active_atoms.empty(); }
};

/// All 2^N blocks plus grouping by symmetry key. representatives[c] is the
/// block index propagated for class c and class_of[b] maps blocks to classes.
struct BlockSet {
  int n_atoms = 0;
  std::vector<BlockSpec> blocks;
  std::vector<int> class_of;
  std::vector<int> representatives;
  std::vector<int> multiplicity;

  int n_blocks() const { return static_cast<int>(blocks.size()); }
  int n_classes() const { return static_cast<int>(representatives.size()); }
};

BlockSet enumerate_blocks(const AtomGeometry& geometry, const PhysicalParams& params);

/// Bit of atom `atom` inside computational index mu for an n-atom register.
inline bool atom_bit(std::uint32_t mu, int atom, int n) { return (mu >> (n - 1 - atom)) & 1u; }

}  // namespace parity_gate
