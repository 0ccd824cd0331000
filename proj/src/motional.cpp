#include "parity_gate/motional.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <map>
#include <memory>
#include <stdexcept>

#include <Eigen/Eigenvalues>

#include "parity_gate/fidelity.hpp"

namespace parity_gate {

using SpMat = Eigen::SparseMatrix<cplx, Eigen::RowMajor>;

std::string_view to_string(TrapAxis axis) { return axis == TrapAxis::parallel ? "parallel" : "perpendicular"; }

TrapAxis trap_axis_from_string(std::string_view name) {
  if (name == "parallel") return TrapAxis::parallel;
  if (name == "perpendicular") return TrapAxis::perpendicular;
  throw std::invalid_argument("unknown trap axis '" + std::string(name) + "'");
}

Vec3 axis_direction(TrapAxis axis) {
  return axis == TrapAxis::parallel ? Vec3{0.0, 0.0, 1.0} : Vec3{1.0, 0.0, 0.0};
}

void MotionalConfig::validate() const {
  if (n_fock < 1) throw std::invalid_argument("n_fock must be >= 1");
  if (taylor_order < 1) throw std::invalid_argument("taylor_order must be >= 1");
  if (!(truncation_threshold > 0.0)) throw std::invalid_argument("truncation threshold must be positive");
  krylov.validate();
}

double zero_point_length(const PhysicalParams& params, double omega) {
  return std::sqrt(constants::hbar / (2.0 * params.mass * omega));
}

double axis_frequency(const PhysicalParams& params, TrapAxis axis) {
  return axis == TrapAxis::parallel ? params.omega_par : params.omega_perp;
}

std::vector<double> vdw_taylor_coefficients(double c, int order) {
  // 1/q with q = 1 + 2cs + s^2 has Chebyshev-like coefficients
  std::vector<double> inv(order + 1, 0.0);
  inv[0] = 1.0;
  if (order >= 1) inv[1] = -2.0 * c;
  for (int n = 2; n <= order; ++n) inv[n] = -2.0 * c * inv[n - 1] - inv[n - 2];
  auto mul = [order](const std::vector<double>& a, const std::vector<double>& b) {
    std::vector<double> out(order + 1, 0.0);
    for (int i = 0; i <= order; ++i)
      for (int j = 0; i + j <= order; ++j) out[i + j] += a[i] * b[j];
    return out;
  };
  return mul(mul(inv, inv), inv);
}

namespace {

Eigen::MatrixXd position_quadrature(int n) {
  Eigen::MatrixXd x = Eigen::MatrixXd::Zero(n, n);
  for (int m = 0; m + 1 < n; ++m) x(m, m + 1) = x(m + 1, m) = std::sqrt(m + 1.0);
  return x;
}

// Polynomial sum_n b_n S^n with S = scale (X_b - X_a) on the two-mode
// truncated space (mode a is the major digit).
Eigen::MatrixXd pair_polynomial(const std::vector<double>& b, double scale, int n_fock) {
  const Eigen::MatrixXd x = position_quadrature(n_fock);
  const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(n_fock, n_fock);
  const int d2 = n_fock * n_fock;
  Eigen::MatrixXd s(d2, d2);
  for (int i = 0; i < n_fock; ++i)
    for (int j = 0; j < n_fock; ++j)
      for (int k = 0; k < n_fock; ++k)
        for (int l = 0; l < n_fock; ++l)
          s(i * n_fock + k, j * n_fock + l) = scale * (id(i, j) * x(k, l) - x(i, j) * id(k, l));
  Eigen::MatrixXd p = b.back() * Eigen::MatrixXd::Identity(d2, d2);
  for (int n = static_cast<int>(b.size()) - 2; n >= 0; --n) {
    p = s * p;
    p.diagonal().array() += b[n];
  }
  return p;
}

int ipow(int base, int e) {
  int r = 1;
  while (e-- > 0) r *= base;
  return r;
}

}  // namespace

Eigen::MatrixXcd recoil_operator(double eta, int n_fock) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(position_quadrature(n_fock));
  const Eigen::VectorXcd ph = (es.eigenvalues().cast<cplx>() * cplx(0.0, eta)).array().exp().matrix();
  const Eigen::MatrixXcd v = es.eigenvectors().cast<cplx>();
  return v * ph.asDiagonal() * v.adjoint();
}

NoisyBlockGenerator::NoisyBlockGenerator(const AtomGeometry& geometry, const PhysicalParams& params,
                                         std::uint32_t mask, const MotionalConfig& config) {
  config.validate();
  const int n = geometry.n_atoms();
  std::vector<int> active;
  for (int i = 0; i < n; ++i)
    if (atom_bit(mask, i, n)) active.push_back(i);
  const int k = static_cast<int>(active.size());
  n_active_ = k;
  n_fock_ = config.has_motion() ? config.n_fock : 1;
  const int F = n_fock_;
  const int nf = ipow(F, k);
  const int n_int = 1 << k;
  dim_ = n_int * nf;

  const double omega = axis_frequency(params, config.axis);
  const double xzpf = zero_point_length(params, omega);
  const double gamma = config.include_decay ? params.gamma_d : 0.0;
  const Vec3 axis = axis_direction(config.axis);

  auto digit = [&](int f, int a) { return (f / ipow(F, k - 1 - a)) % F; };
  auto stride = [&](int a) { return ipow(F, k - 1 - a); };

  rydberg_count_.resize(dim_);
  std::vector<Eigen::Triplet<cplx>> st;
  for (int i = 0; i < n_int; ++i) {
    const int nr = std::popcount(static_cast<unsigned>(i));
    rydberg_count_.segment(i * nf, nf).setConstant(nr);
    for (int f = 0; f < nf; ++f) {
      int quanta = 0;
      for (int a = 0; a < k; ++a) quanta += digit(f, a);
      const cplx diag(omega * quanta, -0.5 * gamma * nr);
      if (diag != cplx(0.0)) st.emplace_back(i * nf + f, i * nf + f, diag);
    }
  }

  // interactions, optionally with the displacement dependence along the axis
  for (int a = 0; a < k; ++a)
    for (int b = a + 1; b < k; ++b) {
      const auto& pa = geometry.positions[active[a]];
      const auto& pb = geometry.positions[active[b]];
      const double r_um = geometry.distance_um(active[a], active[b]);
      const double v = interaction_at(r_um, params);
      Eigen::MatrixXd poly = Eigen::MatrixXd::Identity(F * F, F * F);
      if (config.include_vdw_gradient && F > 1) {
        double c = 0.0;
        for (int q = 0; q < 3; ++q) c += (pb[q] - pa[q]) * axis[q];
        c /= r_um;
        poly = pair_polynomial(vdw_taylor_coefficients(c, config.taylor_order), xzpf / (r_um * 1e-6), F);
      }
      const double cutoff = 1e-14 * poly.cwiseAbs().maxCoeff();
      const int sa = stride(a), sb = stride(b);
      for (int i = 0; i < n_int; ++i) {
        if (!((i >> a) & 1) || !((i >> b) & 1)) continue;
        for (int f = 0; f < nf; ++f) {
          if (digit(f, a) != 0 || digit(f, b) != 0) continue;  // f enumerates the other modes
          for (int p = 0; p < F * F; ++p)
            for (int q = 0; q < F * F; ++q) {
              const double val = poly(p, q);
              if (std::abs(val) <= cutoff) continue;
              const int row = i * nf + f + (p / F) * sa + (p % F) * sb;
              const int col = i * nf + f + (q / F) * sa + (q % F) * sb;
              st.emplace_back(row, col, -v * val);
            }
        }
      }
    }
  static_.resize(dim_, dim_);
  static_.setFromTriplets(st.begin(), st.end());

  // drive |r><1| on each active atom, dressed by the recoil kick
  Eigen::MatrixXcd kick = Eigen::MatrixXcd::Identity(F, F);
  // the kick only acts along the laser, i.e. on the parallel axis
  if (config.include_recoil && F > 1 && config.axis == TrapAxis::parallel)
    kick = recoil_operator(params.wave_number() * xzpf, F);
  const double kick_cut = 1e-14;
  std::vector<Eigen::Triplet<cplx>> dt;
  for (int a = 0; a < k; ++a) {
    const int sa = stride(a);
    for (int i = 0; i < n_int; ++i) {
      if ((i >> a) & 1) continue;
      const int j = i | (1 << a);
      for (int f = 0; f < nf; ++f) {
        if (digit(f, a) != 0) continue;
        for (int p = 0; p < F; ++p)
          for (int q = 0; q < F; ++q) {
            if (std::abs(kick(p, q)) <= kick_cut) continue;
            dt.emplace_back(j * nf + f + p * sa, i * nf + f + q * sa, kick(p, q));
          }
      }
    }
  }
  drive_.resize(dim_, dim_);
  drive_.setFromTriplets(dt.begin(), dt.end());

  if (F > 1)
    for (int i = 0; i < n_int; ++i)
      for (int f = 0; f < nf; ++f)
        for (int a = 0; a < k; ++a)
          if (digit(f, a) == F - 1) {
            top_states_.push_back(i * nf + f);
            break;
          }
}

SpMat NoisyBlockGenerator::hamiltonian(const StepControls& c) const {
  SpMat h = static_;
  if (c.rabi != 0.0) {
    const cplx e = 0.5 * c.rabi * std::polar(1.0, c.phi);
    SpMat drive_h = SpMat(drive_.adjoint()) * std::conj(e);
    h += drive_ * e;
    h += drive_h;
  }
  if (c.detuning != 0.0) {
    SpMat det(dim_, dim_);
    det.reserve(Eigen::VectorXi::Constant(dim_, 1));
    for (int i = 0; i < dim_; ++i)
      if (rydberg_count_[i] != 0.0) det.insert(i, i) = -c.detuning * rydberg_count_[i];
    h += det;
  }
  h.makeCompressed();
  return h;
}

HamiltonianApplier NoisyBlockGenerator::applier(const StepControls& c) const {
  auto h = std::make_shared<SpMat>(hamiltonian(c));
  return [h](const Eigen::VectorXcd& in, Eigen::VectorXcd& out) { out.noalias() = *h * in; };
}

double NoisyBlockGenerator::top_fock_population(const Eigen::VectorXcd& state) const {
  double p = 0.0;
  for (int i : top_states_) p += std::norm(state[i]);
  return p;
}

NoisyBlockGenerator build_noisy_generator(const AtomGeometry& geometry, const PhysicalParams& params,
                                          std::uint32_t mask, const MotionalConfig& config) {
  return NoisyBlockGenerator(geometry, params, mask, config);
}

namespace {

// Blocks with at most two active atoms are interchangeable when their pair
// distance and axis projection agree; larger blocks are simulated one by one.
std::vector<double> motional_key(const AtomGeometry& geometry, std::uint32_t mask, TrapAxis axis) {
  const int n = geometry.n_atoms();
  std::vector<int> active;
  for (int i = 0; i < n; ++i)
    if (atom_bit(mask, i, n)) active.push_back(i);
  std::vector<double> key{static_cast<double>(active.size())};
  if (active.size() == 2) {
    const Vec3 ax = axis_direction(axis);
    const auto& pa = geometry.positions[active[0]];
    const auto& pb = geometry.positions[active[1]];
    const double r = geometry.distance_um(active[0], active[1]);
    double c = 0.0;
    for (int q = 0; q < 3; ++q) c += (pb[q] - pa[q]) * ax[q];
    key.push_back(std::round(r / geometry.r_min_um * 1e9) * 1e-9);
    key.push_back(std::round(std::abs(c / r) * 1e9) * 1e-9);
  } else if (active.size() > 2) {
    key.push_back(-static_cast<double>(mask) - 1.0);
  }
  return key;
}

}  // namespace

NoisyResult simulate_noisy(const PulseSchedule& pulse, const AtomGeometry& geometry, const PhysicalParams& params,
                           const GateTarget& target, const MotionalConfig& config) {
  pulse.validate();
  params.validate();
  config.validate();
  const int n = geometry.n_atoms();
  if (target.n_qubits != n) throw std::invalid_argument("target size does not match geometry");
  const double d = static_cast<double>(1u << n);
  NoisyResult res;

  if (!config.has_motion()) {
    const BlockSet blocks = enumerate_blocks(geometry, params);
    PropagationOptions opt;
    if (config.include_decay) opt.decay = params.gamma_d;
    const auto props = propagate_blocks(pulse, blocks, opt);
    const auto diag = computational_diagonal(props);
    res.infidelity = std::clamp(1.0 - bell_fidelity(diag, target), 0.0, 1.0);
    for (const auto& p : props) res.norm_loss += (1.0 - p.final_unitary().col(0).squaredNorm()) / d;
    return res;
  }

  std::map<std::vector<double>, int> class_index;
  std::vector<std::uint32_t> reps;
  std::vector<int> class_of(1u << n);
  for (std::uint32_t mu = 0; mu < (1u << n); ++mu) {
    auto [it, inserted] = class_index.try_emplace(motional_key(geometry, mu, config.axis), static_cast<int>(reps.size()));
    if (inserted) reps.push_back(mu);
    class_of[mu] = it->second;
  }

  const int nc = static_cast<int>(reps.size());
  std::vector<cplx> amp(nc, 1.0);
  std::vector<double> norm2(nc, 1.0), top(nc, 0.0);
  std::vector<long> matvecs(nc, 0);
  std::vector<char> converged(nc, 1);
  const int m = pulse.m_steps();

#pragma omp parallel for schedule(dynamic)
  for (int c = 0; c < nc; ++c) {
    if (reps[c] == 0) continue;
    const NoisyBlockGenerator gen(geometry, params, reps[c], config);
    Eigen::VectorXcd psi = Eigen::VectorXcd::Zero(gen.dim());
    psi[gen.initial_index()] = 1.0;
    for (int j = 0; j < m; ++j) {
      const StepControls ctl{pulse.phi[j], pulse.rabi[j], pulse.detuning[j]};
      const KrylovResult kr = krylov_evolve(gen.applier(ctl), psi, pulse.dt, config.krylov);
      psi = kr.state;
      matvecs[c] += kr.matvecs;
      if (!kr.converged) converged[c] = 0;
      top[c] = std::max(top[c], gen.top_fock_population(psi));
    }
    amp[c] = psi[gen.initial_index()];
    norm2[c] = psi.squaredNorm();
  }

  cplx z = 0.0;
  for (std::uint32_t mu = 0; mu < (1u << n); ++mu) {
    const int c = class_of[mu];
    z += std::conj(target.phases[mu]) * amp[c];
    res.norm_loss += (1.0 - norm2[c]) / d;
  }
  res.infidelity = std::clamp(1.0 - std::norm(z) / (d * d), 0.0, 1.0);
  for (int c = 0; c < nc; ++c) {
    res.max_top_fock_population = std::max(res.max_top_fock_population, top[c]);
    res.matvecs += matvecs[c];
    res.krylov_converged = res.krylov_converged && converged[c];
  }
  res.truncation_flag = res.max_top_fock_population > config.truncation_threshold;
  return res;
}

ErrorBudget error_budget(const PulseSchedule& pulse, const AtomGeometry& geometry, const PhysicalParams& params,
                         const GateTarget& target, const MotionalConfig& base) {
  ErrorBudget b;
  const BlockSet blocks = enumerate_blocks(geometry, params);
  const auto props = propagate_blocks(pulse, blocks);
  const FidelityReport rep = fidelity_report(props, target);
  b.eps_bell = std::clamp(1.0 - rep.bell_fidelity, 0.0, 1.0);
  b.t_norm = normalized_time(pulse.duration(), params);
  b.t_r_norm = normalized_time(rep.t_r, params);
  b.t_rr_norm = normalized_time(rep.t_rr, params);

  auto run = [&](TrapAxis axis, bool decay, bool recoil, bool vdw) {
    MotionalConfig cfg = base;
    cfg.axis = axis;
    cfg.include_decay = decay;
    cfg.include_recoil = recoil;
    cfg.include_vdw_gradient = vdw;
    const NoisyResult r = simulate_noisy(pulse, geometry, params, target, cfg);
    b.truncation_flag = b.truncation_flag || r.truncation_flag;
    return r.infidelity;
  };
  b.eps_decay = std::max(0.0, run(TrapAxis::parallel, true, false, false) - b.eps_bell);
  b.eps_recoil = std::max(0.0, run(TrapAxis::parallel, false, true, false) - b.eps_bell);
  b.eps_force = std::max(0.0, run(TrapAxis::perpendicular, false, false, true) - b.eps_bell);
  b.eps_total = run(TrapAxis::parallel, true, true, true);
  return b;
}

std::vector<DecayPoint> decay_sweep(const PulseSchedule& pulse, const AtomGeometry& geometry,
                                    const PhysicalParams& params, const GateTarget& target,
                                    const std::vector<double>& gamma_grid) {
  const BlockSet blocks = enumerate_blocks(geometry, params);
  const auto props = propagate_blocks(pulse, blocks);
  const double eps_bell = std::clamp(1.0 - bell_fidelity(props, target), 0.0, 1.0);
  const double t_r = rydberg_times(props).t_r;
  MotionalConfig cfg;
  cfg.include_recoil = false;
  cfg.include_vdw_gradient = false;
  std::vector<DecayPoint> out;
  for (double g : gamma_grid) {
    if (!(g >= 0.0)) throw std::invalid_argument("decay rates must be non-negative");
    PhysicalParams p = params;
    p.gamma_d = g;
    DecayPoint pt;
    pt.gamma = g;
    pt.eps_decay = std::max(0.0, simulate_noisy(pulse, geometry, p, target, cfg).infidelity - eps_bell);
    pt.gamma_t_r = g * t_r;
    pt.relative_deviation = pt.gamma_t_r > 0 ? std::abs(pt.eps_decay - pt.gamma_t_r) / pt.gamma_t_r : 0.0;
    out.push_back(pt);
  }
  return out;
}

double recoil_frequency(const PhysicalParams& params) {
  const double k = params.wave_number();
  return constants::hbar * k * k / (2.0 * params.mass);
}

double thermal_factor(double omega, double temperature) {
  if (temperature <= 0.0) return 1.0;
  const double x = constants::hbar * omega / (2.0 * constants::k_boltzmann * temperature);
  return 1.0 / std::tanh(x);
}

namespace {

struct OriginFit {
  double slope = 0.0;
  double r_squared = 0.0;
};

// Least squares through the origin; R^2 relative to the mean of y.
OriginFit fit_through_origin(const std::vector<double>& x, const std::vector<double>& y) {
  OriginFit f;
  double sxy = 0.0, sxx = 0.0, mean = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += x[i] * y[i];
    sxx += x[i] * x[i];
    mean += y[i];
  }
  if (x.empty() || sxx == 0.0) return f;
  mean /= static_cast<double>(y.size());
  f.slope = sxy / sxx;
  double ss_res = 0.0, ss_tot = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    ss_res += (y[i] - f.slope * x[i]) * (y[i] - f.slope * x[i]);
    ss_tot += (y[i] - mean) * (y[i] - mean);
  }
  f.r_squared = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : (ss_res == 0.0 ? 1.0 : 0.0);
  return f;
}

}  // namespace

RecoilFit recoil_fit(const PulseSchedule& pulse, const AtomGeometry& geometry, const PhysicalParams& params,
                     const GateTarget& target, const std::vector<double>& omega_grid,
                     double extrapolation_temperature, const MotionalConfig& base) {
  RecoilFit fit;
  const BlockSet blocks = enumerate_blocks(geometry, params);
  const auto props = propagate_blocks(pulse, blocks);
  const double eps_bell = std::clamp(1.0 - bell_fidelity(props, target), 0.0, 1.0);
  fit.t_r = rydberg_times(props).t_r;
  fit.omega_grid = omega_grid;
  fit.extrapolation_temperature = extrapolation_temperature;
  MotionalConfig cfg = base;
  cfg.axis = TrapAxis::parallel;
  cfg.include_decay = false;
  cfg.include_recoil = true;
  cfg.include_vdw_gradient = false;

  const int n = static_cast<int>(omega_grid.size());
  fit.eps_recoil.assign(n, 0.0);
  std::vector<char> flags(n, 0);
  for (int i = 0; i < n; ++i) {
    PhysicalParams p = params;
    p.omega_par = omega_grid[i];
    const NoisyResult r = simulate_noisy(pulse, geometry, p, target, cfg);
    fit.eps_recoil[i] = std::max(0.0, r.infidelity - eps_bell);
    flags[i] = r.truncation_flag;
  }
  fit.truncation_flag = std::any_of(flags.begin(), flags.end(), [](char f) { return f != 0; });

  const double w_rec = recoil_frequency(params);
  std::vector<double> x(n);
  for (int i = 0; i < n; ++i) x[i] = w_rec * omega_grid[i] * fit.t_r * fit.t_r;
  const OriginFit of = fit_through_origin(x, fit.eps_recoil);
  fit.alpha = of.slope;
  fit.r_squared = of.r_squared;
  for (int i = 0; i < n; ++i) {
    fit.model.push_back(fit.alpha * x[i]);
    fit.finite_t_model.push_back(fit.alpha * x[i] * thermal_factor(omega_grid[i], extrapolation_temperature));
  }
  return fit;
}

ForceSweep force_sweep(const PulseSchedule& pulse, const AtomGeometry& geometry, const PhysicalParams& params,
                       const GateTarget& target, const std::vector<double>& omega_grid, const MotionalConfig& base) {
  ForceSweep sw;
  const BlockSet blocks = enumerate_blocks(geometry, params);
  const auto props = propagate_blocks(pulse, blocks);
  const double eps_bell = std::clamp(1.0 - bell_fidelity(props, target), 0.0, 1.0);
  sw.t_rr = rydberg_times(props).t_rr;
  sw.omega_grid = omega_grid;
  MotionalConfig cfg = base;
  cfg.axis = TrapAxis::perpendicular;
  cfg.include_decay = false;
  cfg.include_recoil = false;
  cfg.include_vdw_gradient = true;

  const int n = static_cast<int>(omega_grid.size());
  sw.eps_force.assign(n, 0.0);
  for (int i = 0; i < n; ++i) {
    PhysicalParams p = params;
    p.omega_perp = omega_grid[i];
    const NoisyResult r = simulate_noisy(pulse, geometry, p, target, cfg);
    sw.eps_force[i] = std::max(0.0, r.infidelity - eps_bell);
    sw.truncation_flag = sw.truncation_flag || r.truncation_flag;
  }

  // C6 in J m^6 and R in m give a momentum C6 T_RR / R^7
  const double c6 = constants::planck * std::abs(params.c6_ghz_um6) * 1e9 * 1e-36;
  const double r = geometry.r_min_um * 1e-6;
  const double impulse = c6 * sw.t_rr / std::pow(r, 7);
  std::vector<double> x(n);
  for (int i = 0; i < n; ++i)
    x[i] = impulse * impulse / (2.0 * params.mass * constants::hbar * omega_grid[i]) *
           thermal_factor(omega_grid[i], params.temperature);
  const OriginFit of = fit_through_origin(x, sw.eps_force);
  sw.alpha_prime = of.slope;
  sw.r_squared = of.r_squared;
  int dec = 0;
  for (int i = 0; i + 1 < n; ++i)
    if (sw.eps_force[i + 1] < sw.eps_force[i]) ++dec;
  sw.decreasing_fraction = n > 1 ? static_cast<double>(dec) / (n - 1) : 0.0;
  return sw;
}

}  // namespace parity_gate
