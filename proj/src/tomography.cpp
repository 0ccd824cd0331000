#include "parity_gate/tomography.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <complex>
#include <stdexcept>

#include "parity_gate/propagate.hpp"

namespace parity_gate {

std::string_view to_string(ChannelKind kind) {
  switch (kind) {
    case ChannelKind::decay_r_to_1:
      return "decay_r_to_1";
    case ChannelKind::dephase_1r:
      return "dephase_1r";
    case ChannelKind::dephase_01:
      break;
  }
  return "dephase_01";
}

ChannelKind channel_kind_from_string(std::string_view name) {
  if (name == "decay_r_to_1") return ChannelKind::decay_r_to_1;
  if (name == "dephase_1r") return ChannelKind::dephase_1r;
  if (name == "dephase_01") return ChannelKind::dephase_01;
  throw std::invalid_argument("unknown noise channel '" + std::string(name) + "'");
}

Eigen::Matrix3cd jump_operator(ChannelKind kind) {
  Eigen::Matrix3cd l = Eigen::Matrix3cd::Zero();
  switch (kind) {
    case ChannelKind::decay_r_to_1:
      l(1, 2) = 1.0;
      break;
    case ChannelKind::dephase_1r:
      l(1, 1) = 1.0;
      l(2, 2) = -1.0;
      break;
    case ChannelKind::dephase_01:
      l(0, 0) = 1.0;
      l(1, 1) = -1.0;
      break;
  }
  return l;
}

std::string_view to_string(CircuitKind kind) {
  switch (kind) {
    case CircuitKind::native:
      return "native";
    case CircuitKind::v_decomposition:
      return "v_decomposition";
    case CircuitKind::x_decomposition:
      return "x_decomposition";
    case CircuitKind::zz_decomposition:
      break;
  }
  return "zz_decomposition";
}

CircuitKind circuit_kind_from_string(std::string_view name) {
  if (name == "native") return CircuitKind::native;
  if (name == "v_decomposition") return CircuitKind::v_decomposition;
  if (name == "x_decomposition") return CircuitKind::x_decomposition;
  if (name == "zz_decomposition") return CircuitKind::zz_decomposition;
  throw std::invalid_argument("unknown circuit '" + std::string(name) + "'");
}

namespace {

int pow_int(int b, int e) {
  int r = 1;
  while (e-- > 0) r *= b;
  return r;
}

// Lifts an operator on `sites` (in the order given) of a register with
// `levels` levels per site to the full register of n sites.
Eigen::MatrixXcd embed(const Eigen::MatrixXcd& op, const std::vector<int>& sites, int n, int levels) {
  const int k = static_cast<int>(sites.size());
  const int dim = pow_int(levels, n);
  const int sub = pow_int(levels, k);
  if (op.rows() != sub) throw std::invalid_argument("operator does not match its sites");
  std::vector<int> stride(n);
  for (int a = n - 1, st = 1; a >= 0; --a, st *= levels) stride[a] = st;
  Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(dim, dim);
  auto sub_offset = [&](int s) {
    int off = 0;
    for (int i = k - 1; i >= 0; --i) {
      off += (s % levels) * stride[sites[i]];
      s /= levels;
    }
    return off;
  };
  std::vector<int> offsets(sub);
  for (int s = 0; s < sub; ++s) offsets[s] = sub_offset(s);
  for (int base = 0; base < dim; ++base) {
    bool zero_on_sites = true;
    for (int a : sites)
      if ((base / stride[a]) % levels != 0) zero_on_sites = false;
    if (!zero_on_sites) continue;
    for (int r = 0; r < sub; ++r)
      for (int c = 0; c < sub; ++c)
        if (op(r, c) != cplx(0.0)) out(base + offsets[r], base + offsets[c]) = op(r, c);
  }
  return out;
}

Eigen::Matrix3cd lift_qubit_gate(const Eigen::Matrix2cd& g) {
  Eigen::Matrix3cd m = Eigen::Matrix3cd::Identity();
  m.topLeftCorner<2, 2>() = g;
  return m;
}

Eigen::Matrix2cd hadamard() {
  Eigen::Matrix2cd h;
  h << 1.0, 1.0, 1.0, -1.0;
  return h / std::sqrt(2.0);
}

Eigen::Matrix2cd s_dagger() {
  Eigen::Matrix2cd s = Eigen::Matrix2cd::Identity();
  s(1, 1) = cplx(0.0, -1.0);
  return s;
}

// exp(-i theta Z): the single-qubit parity phase.
Eigen::Matrix2cd rz(double theta) {
  Eigen::Matrix2cd r = Eigen::Matrix2cd::Zero();
  r(0, 0) = std::polar(1.0, -theta);
  r(1, 1) = std::polar(1.0, theta);
  return r;
}

void append_layer(std::vector<CircuitSegment>& segs, const IdealLayer& layer) {
  if (layer.gates.empty()) return;
  if (!segs.empty() && std::holds_alternative<IdealLayer>(segs.back())) {
    auto& prev = std::get<IdealLayer>(segs.back());
    for (const auto& [q, g] : layer.gates) {
      auto it = std::find_if(prev.gates.begin(), prev.gates.end(), [q = q](const auto& e) { return e.first == q; });
      if (it != prev.gates.end())
        it->second = g * it->second;
      else
        prev.gates.emplace_back(q, g);
    }
    return;
  }
  segs.emplace_back(layer);
}

}  // namespace

int CircuitImplementation::pulse_segments() const {
  int n = 0;
  for (const auto& s : segments) n += std::holds_alternative<PulseSegment>(s);
  return n;
}

int CircuitImplementation::ideal_gate_count() const {
  int n = 0;
  for (const auto& s : segments)
    if (const auto* l = std::get_if<IdealLayer>(&s)) n += static_cast<int>(l->gates.size());
  return n;
}

double CircuitImplementation::duration() const {
  double t = 0.0;
  for (const auto& s : segments)
    if (const auto* p = std::get_if<PulseSegment>(&s)) t += p->pulse.duration();
  return t;
}

Eigen::MatrixXcd CircuitImplementation::ideal_unitary() const {
  const int d = 1 << n_qubits;
  Eigen::MatrixXcd u = Eigen::MatrixXcd::Identity(d, d);
  for (const auto& s : segments) {
    if (const auto* layer = std::get_if<IdealLayer>(&s)) {
      for (const auto& [q, g] : layer->gates) u = embed(g, {q}, n_qubits, 2) * u;
    } else {
      const auto& p = std::get<PulseSegment>(s);
      for (const auto& group : p.groups) {
        const GateTarget t = build_parity_target(static_cast<int>(group.size()), p.ideal_theta);
        const Eigen::MatrixXcd diag = Eigen::Map<const Eigen::VectorXcd>(t.phases.data(), t.phases.size()).asDiagonal();
        u = embed(diag, group, n_qubits, 2) * u;
      }
    }
  }
  return u;
}

double phase_insensitive_distance(const Eigen::MatrixXcd& a, const Eigen::MatrixXcd& b) {
  const cplx overlap = (b.conjugate().cwiseProduct(a)).sum();
  const cplx phase = std::abs(overlap) > 0 ? overlap / std::abs(overlap) : cplx(1.0);
  return (a - phase * b).cwiseAbs().maxCoeff();
}

CircuitImplementation build_native(const PulseSchedule& pulse, const AtomGeometry& geometry,
                                   const PhysicalParams& params, double theta) {
  CircuitImplementation c;
  c.kind = CircuitKind::native;
  c.n_qubits = geometry.n_atoms();
  std::vector<int> all(c.n_qubits);
  for (int i = 0; i < c.n_qubits; ++i) all[i] = i;
  c.segments.emplace_back(PulseSegment{pulse, geometry, params, {all}, theta});
  return c;
}

CircuitImplementation build_decomposition(CircuitKind kind, const PulseSchedule& z2_pulse,
                                          const AtomGeometry& pair_geometry, const PhysicalParams& params,
                                          double theta, const PulseSchedule* z2_theta_pulse) {
  if (kind == CircuitKind::native) throw std::invalid_argument("native is not a decomposition");
  if (pair_geometry.n_atoms() != 2) throw std::invalid_argument("decompositions need a two-atom pulse geometry");
  CircuitImplementation c;
  c.kind = kind;
  c.n_qubits = 4;
  auto& segs = c.segments;
  const double quarter = constants::pi / 4;

  // CNOT(c -> t) = H_t CZ H_t with CZ = e^{i pi/4} (S^dag x S^dag) Z_2(pi/4)
  auto cnots = [&](const std::vector<std::pair<int, int>>& pairs) {
    IdealLayer pre, post;
    PulseSegment seg{z2_pulse, pair_geometry, params, {}, quarter};
    for (const auto& [ctl, tgt] : pairs) {
      pre.gates.emplace_back(tgt, hadamard());
      seg.groups.push_back({ctl, tgt});
      post.gates.emplace_back(ctl, s_dagger());
      post.gates.emplace_back(tgt, hadamard() * s_dagger());
    }
    append_layer(segs, pre);
    segs.emplace_back(std::move(seg));
    append_layer(segs, post);
  };
  auto rotation = [&](int q) { append_layer(segs, IdealLayer{{{q, rz(theta)}}}); };

  switch (kind) {
    case CircuitKind::v_decomposition:
      cnots({{0, 1}});
      cnots({{1, 2}});
      cnots({{2, 3}});
      rotation(3);
      cnots({{2, 3}});
      cnots({{1, 2}});
      cnots({{0, 1}});
      break;
    case CircuitKind::x_decomposition:
      cnots({{0, 1}, {3, 2}});
      cnots({{1, 2}});
      rotation(2);
      cnots({{1, 2}});
      cnots({{0, 1}, {3, 2}});
      break;
    case CircuitKind::zz_decomposition: {
      const PulseSchedule* mid = z2_theta_pulse;
      if (!mid) {
        if (std::abs(theta - quarter) > 1e-12)
          throw std::invalid_argument("ZZ decomposition at theta != pi/4 needs a Z_2(theta) pulse");
        mid = &z2_pulse;
      }
      cnots({{0, 1}, {3, 2}});
      segs.emplace_back(PulseSegment{*mid, pair_geometry, params, {{1, 2}}, theta});
      cnots({{0, 1}, {3, 2}});
      break;
    }
    case CircuitKind::native:
      break;
  }

  const GateTarget t = build_parity_target(4, theta);
  const Eigen::MatrixXcd target = Eigen::Map<const Eigen::VectorXcd>(t.phases.data(), 16).asDiagonal();
  const double dist = phase_insensitive_distance(c.ideal_unitary(), target);
  if (dist > 1e-10)
    throw std::logic_error("decomposition does not compose to Z_4(theta): deviation " + std::to_string(dist));
  return c;
}

std::string pauli_label(int index, int n) {
  static constexpr char names[] = {'I', 'X', 'Y', 'Z'};
  std::string s(n, 'I');
  for (int q = n - 1; q >= 0; --q) {
    s[q] = names[index % 4];
    index /= 4;
  }
  return s;
}

bool is_z_type(int index, int n) {
  for (int q = 0; q < n; ++q) {
    const int p = index % 4;
    if (p == 1 || p == 2) return false;
    index /= 4;
  }
  return true;
}

double PauliErrorProfile::non_z_mass() const {
  double s = 0.0;
  for (std::size_t m = 1; m < probabilities.size(); ++m)
    if (!is_z_type(static_cast<int>(m), n_qubits)) s += probabilities[m];
  return s;
}

namespace {

struct Accumulated {
  std::vector<double> p;
  double chi = 0.0;   // gamma * int (T2/d - |T1|^2/d^2)
  double leak = 0.0;  // gamma * int (T2 - T3)/d
  double avg = 0.0;   // gamma * int ((d+1) T2 - |T1|^2 - T3) / (d (d+1))
  double t_r = 0.0;
};

// Tr[B E_m] for every Pauli string E_m; E_m|j> = w_m(j)|j xor x_m>.
void pauli_coefficients(const Eigen::MatrixXcd& b, int n, std::vector<cplx>& out) {
  const int d = 1 << n;
  const int np = 1 << (2 * n);
  out.assign(np, 0.0);
  for (int m = 0; m < np; ++m) {
    int x = 0, zmask = 0, ny = 0;
    int idx = m;
    for (int q = n - 1; q >= 0; --q) {
      const int p = idx % 4;
      idx /= 4;
      const int bit = 1 << (n - 1 - q);
      if (p == 1 || p == 2) x |= bit;
      if (p == 2 || p == 3) zmask |= bit;
      if (p == 2) ++ny;
    }
    cplx iy = 1.0;
    for (int k = 0; k < ny; ++k) iy *= cplx(0.0, 1.0);
    cplx s = 0.0;
    for (int j = 0; j < d; ++j) {
      const double sign = (std::popcount(static_cast<unsigned>(j & zmask)) & 1) ? -1.0 : 1.0;
      s += sign * b(j ^ x, j);
    }
    out[m] = iy * s;
  }
}

Accumulated integrate(const CircuitImplementation& circuit, const std::vector<NoiseChannelSpec>& channels,
                      int substeps) {
  const int n = circuit.n_qubits;
  const int d = 1 << n;
  const int full = full_dimension(n);
  Accumulated acc;
  acc.p.assign(1 << (2 * n), 0.0);

  Eigen::MatrixXcd a = Eigen::MatrixXcd::Zero(full, d);
  for (int mu = 0; mu < d; ++mu) a(full_index(mu, n), mu) = 1.0;

  std::vector<int> stride(n);
  for (int q = n - 1, st = 1; q >= 0; --q, st *= 3) stride[q] = st;
  std::vector<cplx> coeff;

  for (const auto& seg : circuit.segments) {
    if (const auto* layer = std::get_if<IdealLayer>(&seg)) {
      for (const auto& [q, g] : layer->gates) a = embed(lift_qubit_gate(g), {q}, n, 3) * a;
      continue;
    }
    const auto& ps = std::get<PulseSegment>(seg);
    ps.pulse.validate();
    std::vector<int> atoms;
    for (const auto& g : ps.groups) {
      if (static_cast<int>(g.size()) != ps.geometry.n_atoms()) throw std::invalid_argument("group size mismatch");
      atoms.insert(atoms.end(), g.begin(), g.end());
    }
    struct Jump {
      double rate;
      Eigen::MatrixXcd op;
    };
    std::vector<Jump> jumps;
    for (const auto& ch : channels) {
      if (ch.rate < 0) throw std::invalid_argument("negative channel rate");
      if (ch.rate == 0) continue;
      for (int q : atoms) jumps.push_back({ch.rate, embed(jump_operator(ch.kind), {q}, n, 3)});
    }

    const double tau = ps.pulse.dt / substeps;
    for (int j = 0; j < ps.pulse.m_steps(); ++j) {
      const StepControls ctl{ps.pulse.phi[j], ps.pulse.rabi[j], ps.pulse.detuning[j]};
      const Eigen::MatrixXcd hg = full_hamiltonian(ps.geometry, ps.params, ctl);
      Eigen::MatrixXcd h = Eigen::MatrixXcd::Zero(full, full);
      for (const auto& g : ps.groups) h += embed(hg, g, n, 3);
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(h);
      auto prop = [&](double t) {
        const Eigen::VectorXcd ph = (es.eigenvalues().cast<cplx>() * cplx(0.0, -t)).array().exp().matrix();
        return Eigen::MatrixXcd(es.eigenvectors() * ph.asDiagonal() * es.eigenvectors().adjoint());
      };
      const Eigen::MatrixXcd half = prop(0.5 * tau), whole = prop(tau);
      for (int q = 0; q < substeps; ++q) {
        const Eigen::MatrixXcd mid = half * a;
        for (int row = 0; row < full; ++row) {
          const double pop = mid.row(row).squaredNorm() / d;
          if (pop == 0.0) continue;
          for (int at : atoms)
            if ((row / stride[at]) % 3 == 2) acc.t_r += tau * pop;
        }
        for (const auto& jp : jumps) {
          const Eigen::MatrixXcd la = jp.op * mid;
          const Eigen::MatrixXcd b = mid.adjoint() * la;
          const cplx t1 = b.trace();
          const double t2 = la.squaredNorm();
          const double t3 = b.squaredNorm();
          const double w = jp.rate * tau;
          acc.chi += w * (t2 / d - std::norm(t1) / (double(d) * d));
          acc.leak += w * (t2 - t3) / d;
          acc.avg += w * ((d + 1.0) * t2 - std::norm(t1) - t3) / (double(d) * (d + 1.0));
          pauli_coefficients(b, n, coeff);
          for (std::size_t m = 0; m < coeff.size(); ++m) acc.p[m] += w * std::norm(coeff[m]) / (double(d) * d);
        }
        a = whole * a;
      }
    }
  }
  return acc;
}

}  // namespace

PauliErrorProfile pauli_error_diagonals(const CircuitImplementation& circuit,
                                        const std::vector<NoiseChannelSpec>& channels,
                                        const TomographyOptions& options) {
  if (options.substeps < 1) throw std::invalid_argument("substeps must be >= 1");
  if (circuit.n_qubits < 1 || circuit.n_qubits > 6) throw std::invalid_argument("circuit size out of range");
  const Accumulated acc = integrate(circuit, channels, options.substeps);
  PauliErrorProfile prof;
  prof.n_qubits = circuit.n_qubits;
  prof.probabilities = acc.p;
  for (std::size_t m = 1; m < acc.p.size(); ++m) prof.total_error += acc.p[m];
  prof.leakage = acc.leak;
  prof.process_infidelity = acc.chi;
  prof.avg_infidelity = acc.avg;
  const double d = static_cast<double>(1 << circuit.n_qubits);
  prof.avg_from_relation = (d * acc.chi + acc.leak) / (d + 1.0);
  prof.t_r = acc.t_r;
  prof.duration = circuit.duration();

  double max_rate = 0.0;
  for (const auto& ch : channels) max_rate = std::max(max_rate, ch.rate);
  if (max_rate * prof.duration > 0.05)
    prof.warnings.push_back("gamma*T = " + std::to_string(max_rate * prof.duration) +
                            " exceeds 0.05; first-order error probabilities degrade");
  if (options.refine_check && prof.total_error > 0.0) {
    const Accumulated fine = integrate(circuit, channels, 2 * options.substeps);
    double total = 0.0;
    for (std::size_t m = 1; m < fine.p.size(); ++m) total += fine.p[m];
    prof.refinement_change = std::abs(total - prof.total_error) / prof.total_error;
    if (prof.refinement_change > 0.01)
      prof.warnings.push_back("time integral changes by more than 1% on refinement");
  }
  return prof;
}

ChannelInfidelity avg_infidelity_from_channels(const CircuitImplementation& circuit,
                                               const std::vector<NoiseChannelSpec>& channels,
                                               const TomographyOptions& options) {
  TomographyOptions opt = options;
  opt.refine_check = false;
  const PauliErrorProfile prof = pauli_error_diagonals(circuit, channels, opt);
  ChannelInfidelity out;
  out.avg_infidelity = prof.avg_infidelity;
  bool decay_only = true;
  for (const auto& ch : channels) {
    if (ch.kind == ChannelKind::decay_r_to_1)
      out.decay_t_r += ch.rate * prof.t_r;
    else if (ch.rate > 0)
      decay_only = false;
  }
  if (decay_only) out.within_decay_bound = out.avg_infidelity <= out.decay_t_r * (1.0 + 1e-6) + 1e-300;
  return out;
}

}  // namespace parity_gate
