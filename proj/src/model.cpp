#include "parity_gate/model.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>
#include <stdexcept>

namespace parity_gate {

namespace {

struct GeometryName {
  GeometryKind kind;
  std::string_view name;
};

constexpr std::array<GeometryName, 5> kGeometryNames{{
    {GeometryKind::linear_pair, "linear-pair"},
    {GeometryKind::equilateral_triangle, "equilateral-triangle"},
    {GeometryKind::right_triangle, "right-triangle"},
    {GeometryKind::tetrahedron, "tetrahedron"},
    {GeometryKind::square, "square"},
}};

}  // namespace

std::string_view to_string(GeometryKind kind) {
  for (const auto& g : kGeometryNames)
    if (g.kind == kind) return g.name;
  return "unknown";
}

GeometryKind geometry_from_string(std::string_view name) {
  for (const auto& g : kGeometryNames)
    if (g.name == name) return g.kind;
  throw std::invalid_argument("unknown geometry '" + std::string(name) + "'");
}

double AtomGeometry::distance_um(int j, int k) const {
  const auto& a = positions.at(j);
  const auto& b = positions.at(k);
  return std::sqrt((a[0] - b[0]) * (a[0] - b[0]) + (a[1] - b[1]) * (a[1] - b[1]) +
                   (a[2] - b[2]) * (a[2] - b[2]));
}

AtomGeometry build_geometry(GeometryKind kind, double r) {
  if (!(r > 0.0) || !std::isfinite(r)) throw std::invalid_argument("r_min must be positive");
  AtomGeometry g;
  g.kind = kind;
  g.r_min_um = r;
  const double s3 = std::sqrt(3.0);
  switch (kind) {
    case GeometryKind::linear_pair:
      g.positions = {{0, 0, 0}, {r, 0, 0}};
      break;
    case GeometryKind::equilateral_triangle:
      g.positions = {{0, 0, 0}, {r, 0, 0}, {r / 2, r * s3 / 2, 0}};
      break;
    case GeometryKind::right_triangle:
      // right angle at atom 0
      g.positions = {{0, 0, 0}, {r, 0, 0}, {0, r, 0}};
      break;
    case GeometryKind::tetrahedron:
      g.positions = {{0, 0, 0}, {r, 0, 0}, {r / 2, r * s3 / 2, 0},
                     {r / 2, r * s3 / 6, r * std::sqrt(2.0 / 3.0)}};
      break;
    case GeometryKind::square:
      g.positions = {{0, 0, 0}, {r, 0, 0}, {r, r, 0}, {0, r, 0}};
      break;
  }
  return g;
}

AtomGeometry build_geometry(std::string_view name, double r_min_um) {
  return build_geometry(geometry_from_string(name), r_min_um);
}

void PhysicalParams::validate() const {
  auto fail = [](const std::string& m) { throw std::invalid_argument(m); };
  if (!(c6_ghz_um6 < 0.0)) fail("c6 must be negative");
  if (!(omega_max > 0.0)) fail("omega_max must be positive");
  if (!(gamma_d >= 0.0)) fail("gamma_d must be non-negative");
  if (!(lambda_laser > 0.0)) fail("lambda must be positive");
  if (!(mass > 0.0)) fail("mass must be positive");
  if (!(omega_par > 0.0) || !(omega_perp > 0.0)) fail("trap frequencies must be positive");
  if (!(temperature >= 0.0)) fail("temperature must be non-negative");
}

std::vector<std::string> PhysicalParams::range_warnings(double r_min_um) const {
  std::vector<std::string> out;
  const double two_pi = 2.0 * constants::pi;
  if (omega_max / two_pi > 10e6 * (1 + 1e-12))
    out.push_back("omega_max/(2pi) exceeds the nominal 10 MHz range");
  if (r_min_um < 1.5) out.push_back("r_min below the nominal 1.5 um");
  return out;
}

double PhysicalParams::beta() const {
  if (temperature <= 0.0) return std::numeric_limits<double>::infinity();
  return 1.0 / (constants::k_boltzmann * temperature);
}

void PulseSchedule::validate(const PhysicalParams* params) const {
  if (!phi.empty() && (!(dt > 0.0) || !std::isfinite(dt)))
    throw std::invalid_argument("pulse dt must be positive");
  if (rabi.size() != phi.size() || detuning.size() != phi.size())
    throw std::invalid_argument("pulse arrays must have equal length");
  for (std::size_t j = 0; j < phi.size(); ++j) {
    if (!std::isfinite(phi[j]) || !std::isfinite(rabi[j]) || !std::isfinite(detuning[j]))
      throw std::invalid_argument("pulse contains non-finite values");
    if (rabi[j] < 0.0) throw std::invalid_argument("pulse Rabi frequency must be non-negative");
    if (params && rabi[j] > params->omega_max * (1.0 + 1e-9))
      throw std::invalid_argument("pulse Rabi frequency exceeds omega_max");
  }
}

PulseSchedule PulseSchedule::constant(int m_steps, double dt, double rabi, double phi) {
  PulseSchedule p;
  p.dt = dt;
  p.phi.assign(m_steps, phi);
  p.rabi.assign(m_steps, rabi);
  p.detuning.assign(m_steps, 0.0);
  return p;
}

int popcount(std::uint32_t x) { return std::popcount(x); }

GateTarget build_parity_target(int n, double theta, bool normalize_global_phase) {
  if (n < 1) throw std::invalid_argument("parity target needs n >= 1");
  GateTarget t;
  t.n_qubits = n;
  t.theta = theta;
  const std::uint32_t dim = 1u << n;
  t.phases.resize(dim);
  for (std::uint32_t mu = 0; mu < dim; ++mu) {
    const bool odd = popcount(mu) % 2 == 1;
    t.phases[mu] = std::polar(1.0, odd ? theta : -theta);
  }
  if (normalize_global_phase) {
    const cplx g = std::conj(t.phases[0]);
    for (auto& p : t.phases) p *= g;
  }
  return t;
}

double interaction_at(double r_um, const PhysicalParams& params) {
  if (!(r_um > 0.0)) throw std::invalid_argument("coincident atoms");
  return 2.0 * constants::pi * params.c6_ghz_um6 * 1e9 / std::pow(r_um, 6);
}

Eigen::MatrixXd pairwise_interaction(const AtomGeometry& geometry, const PhysicalParams& params) {
  const int n = geometry.n_atoms();
  Eigen::MatrixXd v = Eigen::MatrixXd::Zero(n, n);
  for (int j = 0; j < n; ++j)
    for (int k = j + 1; k < n; ++k) {
      const double r = geometry.distance_um(j, k);
      if (r < 1e-12) throw std::invalid_argument("coincident atoms in geometry");
      v(j, k) = v(k, j) = interaction_at(r, params);
    }
  return v;
}

BlockSet enumerate_blocks(const AtomGeometry& geometry, const PhysicalParams& params) {
  const int n = geometry.n_atoms();
  if (n < 1 || n > 16) throw std::invalid_argument("geometry must contain 1..16 atoms");
  const Eigen::MatrixXd v = pairwise_interaction(geometry, params);
  const double scale = geometry.r_min_um > 0 ? geometry.r_min_um : 1.0;

  BlockSet set;
  set.n_atoms = n;
  std::map<std::vector<double>, int> classes;
  for (std::uint32_t mu = 0; mu < (1u << n); ++mu) {
    BlockSpec b;
    b.mask = mu;
    for (int i = 0; i < n; ++i)
      if (atom_bit(mu, i, n)) b.active_atoms.push_back(i);
    const int k = b.n_active();
    b.interactions = Eigen::MatrixXd::Zero(k, k);
    b.symmetry_key.push_back(k);
    std::vector<double> dists;
    for (int a = 0; a < k; ++a)
      for (int c = a + 1; c < k; ++c) {
        const int ja = b.active_atoms[a], jc = b.active_atoms[c];
        b.interactions(a, c) = b.interactions(c, a) = v(ja, jc);
        dists.push_back(std::round(geometry.distance_um(ja, jc) / scale * 1e9) * 1e-9);
      }
    std::sort(dists.begin(), dists.end());
    b.symmetry_key.insert(b.symmetry_key.end(), dists.begin(), dists.end());

    auto [it, inserted] = classes.try_emplace(b.symmetry_key, set.n_classes());
    if (inserted) {
      set.representatives.push_back(static_cast<int>(mu));
      set.multiplicity.push_back(0);
    }
    set.class_of.push_back(it->second);
    set.multiplicity[it->second] += 1;
    set.blocks.push_back(std::move(b));
  }
  return set;
}

}  // namespace parity_gate
