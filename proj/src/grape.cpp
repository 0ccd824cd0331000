#include "parity_gate/grape.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

#include "parity_gate/propagate.hpp"

namespace parity_gate {

std::string_view to_string(WeightUnits units) {
  switch (units) {
    case WeightUnits::microseconds:
      return "microseconds";
    case WeightUnits::normalized:
      return "normalized";
    case WeightUnits::seconds:
      break;
  }
  return "seconds";
}

WeightUnits weight_units_from_string(std::string_view name) {
  if (name == "microseconds") return WeightUnits::microseconds;
  if (name == "normalized") return WeightUnits::normalized;
  if (name == "seconds") return WeightUnits::seconds;
  throw std::invalid_argument("unknown weight units '" + std::string(name) + "'");
}

void OptimizationConfig::validate() const {
  if (eta_delta < 0 || eta_r < 0 || eta_rr < 0) throw std::invalid_argument("regularisation weights must be >= 0");
  if (n_starts < 1) throw std::invalid_argument("n_starts must be >= 1");
  if (max_iters < 0) throw std::invalid_argument("max_iters must be >= 0");
  if (!(duration >= 0.0)) throw std::invalid_argument("duration must be >= 0");
  if (m_steps < 0 || steps_per_unit < 1) throw std::invalid_argument("invalid step count");
  if (substeps < 1) throw std::invalid_argument("substeps must be >= 1");
  if (ramp.kappa <= 0 || ramp.tau_ramp < 0) throw std::invalid_argument("invalid ramp parameters");
}

int OptimizationConfig::resolved_steps(const PhysicalParams& params) const {
  if (duration == 0.0) return 0;
  if (m_steps > 0) return m_steps;
  return std::max(1, static_cast<int>(std::lround(steps_per_unit * normalized_time(duration, params))));
}

double ramp_fraction(double t, double total, double tau, double kappa) {
  const double tt = std::min(t, total - t);
  if (tt <= 0.0) return 0.0;
  if (tt > tau) return 1.0;
  const double x = tt / tau;
  return 1.0 - std::exp(-kappa * x * x * x * x);
}

PulseSchedule apply_ramp(const PulseSchedule& pulse, const PhysicalParams& params, double kappa,
                         double tau_ramp) {
  const double total = pulse.duration();
  if (total < 2.0 * tau_ramp * (1.0 - 1e-12))
    throw std::invalid_argument("pulse too short for two ramps");
  PulseSchedule out = pulse;
  for (int j = 0; j < pulse.m_steps(); ++j)
    out.rabi[j] = params.omega_max * ramp_fraction((j + 0.5) * pulse.dt, total, tau_ramp, kappa);
  return out;
}

// ---------------------------------------------------------------------------

CostModel::CostModel(const AtomGeometry& geometry, const PhysicalParams& params, const GateTarget& target,
                     const OptimizationConfig& config)
    : CostModel(enumerate_blocks(geometry, params), params, target, config) {}

CostModel::CostModel(const BlockSet& blocks, const PhysicalParams& params, const GateTarget& target,
                     const OptimizationConfig& config)
    : blocks_(blocks), params_(params), target_(target), config_(config) {
  config_.validate();
  if (target.n_qubits != blocks.n_atoms) throw std::invalid_argument("target size does not match geometry");
}

double CostModel::time_weight_scale() const {
  switch (config_.weight_units) {
    case WeightUnits::microseconds:
      return 1e6;
    case WeightUnits::normalized:
      return params_.omega_max / (2.0 * constants::pi);
    case WeightUnits::seconds:
      break;
  }
  return 1.0;
}

namespace {

struct PieceEig {
  Eigen::MatrixXcd vecs;
  Eigen::VectorXd vals;
};

double smoothness(const std::vector<double>& u, double scale) {
  double s = 0.0;
  for (std::size_t j = 0; j + 1 < u.size(); ++j) {
    const double d = (u[j + 1] - u[j]) / (2.0 * scale);
    s += d * d;
  }
  return s;
}

void add_smoothness_gradient(const std::vector<double>& u, double scale, double weight, Eigen::VectorXd& g) {
  for (std::size_t j = 0; j + 1 < u.size(); ++j) {
    const double d = (u[j + 1] - u[j]) / (2.0 * scale);
    g[j] -= weight * d / scale;
    g[j + 1] += weight * d / scale;
  }
}

}  // namespace

CostBreakdown CostModel::evaluate(const PulseSchedule& pulse, ControlGradient* grad) const {
  const int m = pulse.m_steps();
  const int s = config_.substeps;
  const int k_end = m * s;
  const double tau = m > 0 ? pulse.dt / s : 0.0;
  const int n = blocks_.n_atoms;
  const double d = static_cast<double>(1u << n);

  const double w_scale = time_weight_scale();
  const bool aware = config_.noise_aware;
  const double w_r = aware ? config_.eta_r * w_scale : 0.0;
  const double w_rr = aware ? config_.eta_rr * w_scale : 0.0;

  CostBreakdown out;
  out.smoothness = smoothness(pulse.phi, 1.0);
  if (config_.optimize_rabi) out.smoothness += smoothness(pulse.rabi, params_.omega_max);

  const int nc = blocks_.n_classes();
  std::vector<BlockOperators> ops(nc);
  std::vector<std::vector<Eigen::VectorXcd>> states(nc);
  std::vector<std::vector<PieceEig>> eigs(nc);
  cplx z = 0.0;
  double t_r = 0.0, t_rr = 0.0;

  auto sample_weight = [&](int k) { return (k == 0 || k == k_end) ? 0.5 * tau : tau; };

  for (int c = 0; c < nc; ++c) {
    const BlockSpec& block = blocks_.blocks[blocks_.representatives[c]];
    const double mult = blocks_.multiplicity[c];
    const cplx target_phase = target_.phases[block.mask];
    if (block.trivial()) {
      z += mult * std::conj(target_phase);
      continue;
    }
    ops[c] = block_operators(block);
    const int dim = ops[c].dim;
    auto& st = states[c];
    st.resize(k_end + 1);
    st[0] = Eigen::VectorXcd::Zero(dim);
    st[0][0] = 1.0;
    eigs[c].resize(m);
    double pr = 0.0, prr = 0.0;
    auto accumulate = [&](int k) {
      const Eigen::VectorXd pop = st[k].cwiseAbs2();
      const double w = sample_weight(k);
      pr += w * pop.dot(ops[c].rydberg_count);
      prr += w * pop.dot(ops[c].pair_count);
    };
    accumulate(0);
    for (int j = 0; j < m; ++j) {
      const StepControls ctl{pulse.phi[j], pulse.rabi[j], pulse.detuning[j]};
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(block_hamiltonian(ops[c], ctl));
      const Eigen::VectorXcd ph = (es.eigenvalues().cast<cplx>() * cplx(0.0, -tau)).array().exp().matrix();
      const Eigen::MatrixXcd u = es.eigenvectors() * ph.asDiagonal() * es.eigenvectors().adjoint();
      for (int q = 0; q < s; ++q) {
        const int k = j * s + q;
        st[k + 1] = u * st[k];
        accumulate(k + 1);
      }
      if (grad) eigs[c][j] = PieceEig{es.eigenvectors(), es.eigenvalues()};
    }
    z += mult * std::conj(target_phase) * st[k_end][0];
    t_r += mult * pr / d;
    t_rr += mult * prr / d;
  }

  out.eps_bell = std::clamp(1.0 - std::norm(z) / (d * d), 0.0, 1.0);
  out.t_r = t_r;
  out.t_rr = t_rr;
  out.cost = out.eps_bell + config_.eta_delta * out.smoothness + w_r * t_r + w_rr * t_rr;
  if (!grad) return out;

  grad->d_phi = Eigen::VectorXd::Zero(m);
  grad->d_rabi = Eigen::VectorXd::Zero(m);
  add_smoothness_gradient(pulse.phi, 1.0, config_.eta_delta, grad->d_phi);
  if (config_.optimize_rabi) add_smoothness_gradient(pulse.rabi, params_.omega_max, config_.eta_delta, grad->d_rabi);

  for (int c = 0; c < nc; ++c) {
    const BlockSpec& block = blocks_.blocks[blocks_.representatives[c]];
    if (block.trivial()) continue;
    const double mult = blocks_.multiplicity[c];
    const cplx target_phase = target_.phases[block.mask];
    const BlockOperators& op = ops[c];
    const auto& st = states[c];
    const Eigen::VectorXd direct_diag = (w_r * mult / d) * op.rydberg_count + (w_rr * mult / d) * op.pair_count;
    auto direct = [&](int k) -> Eigen::VectorXcd {
      return (sample_weight(k) * direct_diag).cast<cplx>().cwiseProduct(st[k]);
    };

    Eigen::VectorXcd lambda = direct(k_end);
    lambda[0] += -z * mult * target_phase / (d * d);

    const int dim = op.dim;
    for (int j = m - 1; j >= 0; --j) {
      const PieceEig& pe = eigs[c][j];
      const Eigen::VectorXcd ph = (pe.vals.cast<cplx>() * cplx(0.0, -tau)).array().exp().matrix();
      const Eigen::MatrixXcd u_adj = pe.vecs * ph.conjugate().asDiagonal() * pe.vecs.adjoint();
      Eigen::MatrixXcd acc = Eigen::MatrixXcd::Zero(dim, dim);
      for (int q = s - 1; q >= 0; --q) {
        const int k = j * s + q;
        const Eigen::VectorXcd a = pe.vecs.adjoint() * lambda;
        const Eigen::VectorXcd b = pe.vecs.adjoint() * st[k];
        acc.noalias() += a.conjugate() * b.transpose();
        lambda = u_adj * lambda;
        lambda += direct(k);
      }
      Eigen::MatrixXcd gamma(dim, dim);
      for (int p = 0; p < dim; ++p)
        for (int q = 0; q < dim; ++q) {
          const double diff = 0.5 * (pe.vals[p] - pe.vals[q]) * tau;
          const double sinc = std::abs(diff) < 1e-8 ? 1.0 - diff * diff / 6.0 : std::sin(diff) / diff;
          gamma(p, q) = cplx(0.0, -tau) * std::polar(1.0, -0.5 * (pe.vals[p] + pe.vals[q]) * tau) * sinc;
        }
      const Eigen::MatrixXcd weighted = gamma.cwiseProduct(acc);
      const cplx e = std::polar(1.0, pulse.phi[j]);
      const cplx half_rabi = 0.5 * pulse.rabi[j];
      const Eigen::MatrixXcd dh_phi =
          half_rabi * (cplx(0, 1) * e * op.raising - cplx(0, 1) * std::conj(e) * op.raising.adjoint());
      const Eigen::MatrixXcd g_phi = pe.vecs.adjoint() * dh_phi * pe.vecs;
      grad->d_phi[j] += 2.0 * (g_phi.cwiseProduct(weighted)).sum().real();
      if (config_.optimize_rabi) {
        const Eigen::MatrixXcd dh_rabi = 0.5 * (e * op.raising + std::conj(e) * op.raising.adjoint());
        const Eigen::MatrixXcd g_rabi = pe.vecs.adjoint() * dh_rabi * pe.vecs;
        grad->d_rabi[j] += 2.0 * (g_rabi.cwiseProduct(weighted)).sum().real();
      }
    }
  }
  return out;
}

double cost_noise_free(const PulseSchedule& pulse, const BlockSet& blocks, const GateTarget& target,
                       double eta_delta, const PhysicalParams& params) {
  OptimizationConfig cfg;
  cfg.eta_delta = eta_delta;
  cfg.noise_aware = false;
  return CostModel(blocks, params, target, cfg).evaluate(pulse).cost;
}

double cost_noise_aware(const PulseSchedule& pulse, const BlockSet& blocks, const GateTarget& target,
                        const OptimizationConfig& config, const PhysicalParams& params) {
  OptimizationConfig cfg = config;
  cfg.noise_aware = true;
  return CostModel(blocks, params, target, cfg).evaluate(pulse).cost;
}

ControlGradient gradient(const PulseSchedule& pulse, const BlockSet& blocks, const GateTarget& target,
                         const OptimizationConfig& config, const PhysicalParams& params) {
  ControlGradient g;
  CostModel(blocks, params, target, config).evaluate(pulse, &g);
  return g;
}

// ---------------------------------------------------------------------------

ControlLayout::ControlLayout(const PulseSchedule& base, const OptimizationConfig& config,
                             const PhysicalParams& params, std::vector<bool> rabi_free)
    : base_(base), antisymmetric_(config.antisymmetric_phase), omega_max_(params.omega_max) {
  const int m = base.m_steps();
  n_phase_ = antisymmetric_ ? m / 2 : m;
  if (config.optimize_rabi)
    for (int j = 0; j < m; ++j)
      if (rabi_free.at(j)) rabi_index_.push_back(j);
}

PulseSchedule ControlLayout::to_pulse(const Eigen::VectorXd& x) const {
  PulseSchedule p = base_;
  const int m = p.m_steps();
  if (antisymmetric_) {
    for (int j = 0; j < n_phase_; ++j) {
      p.phi[j] = x[j];
      p.phi[m - 1 - j] = -x[j];
    }
    if (m % 2 == 1) p.phi[m / 2] = 0.0;
  } else {
    for (int j = 0; j < m; ++j) p.phi[j] = x[j];
  }
  for (std::size_t r = 0; r < rabi_index_.size(); ++r) {
    const double sy = std::sin(x[n_phase_ + r]);
    p.rabi[rabi_index_[r]] = omega_max_ * sy * sy;
  }
  return p;
}

Eigen::VectorXd ControlLayout::from_pulse(const PulseSchedule& pulse) const {
  Eigen::VectorXd x(size());
  const int m = pulse.m_steps();
  for (int j = 0; j < n_phase_; ++j)
    x[j] = antisymmetric_ ? 0.5 * (pulse.phi[j] - pulse.phi[m - 1 - j]) : pulse.phi[j];
  for (std::size_t r = 0; r < rabi_index_.size(); ++r) {
    const double f = std::clamp(pulse.rabi[rabi_index_[r]] / omega_max_, 0.0, 1.0);
    x[n_phase_ + r] = std::asin(std::sqrt(f));
  }
  return x;
}

Eigen::VectorXd ControlLayout::chain(const Eigen::VectorXd& x, const ControlGradient& g) const {
  Eigen::VectorXd gx(size());
  const int m = static_cast<int>(g.d_phi.size());
  for (int j = 0; j < n_phase_; ++j) gx[j] = antisymmetric_ ? g.d_phi[j] - g.d_phi[m - 1 - j] : g.d_phi[j];
  for (std::size_t r = 0; r < rabi_index_.size(); ++r)
    gx[n_phase_ + r] = g.d_rabi[rabi_index_[r]] * omega_max_ * std::sin(2.0 * x[n_phase_ + r]);
  return gx;
}

// ---------------------------------------------------------------------------

PulseSchedule initial_pulse(const PhysicalParams& params, const OptimizationConfig& config) {
  const int m = config.resolved_steps(params);
  PulseSchedule p = PulseSchedule::constant(m, m > 0 ? config.duration / m : 0.0, params.omega_max);
  if (config.ramp.enabled && m > 0) {
    const double tau = config.ramp.tau_ramp > 0 ? config.ramp.tau_ramp : constants::pi / params.omega_max;
    p = apply_ramp(p, params, config.ramp.kappa, tau);
  }
  return p;
}

std::vector<bool> free_rabi_mask(const PulseSchedule& pulse, const PhysicalParams& params,
                                 const OptimizationConfig& config) {
  std::vector<bool> mask(pulse.m_steps(), true);
  if (!config.ramp.enabled) return mask;
  const double tau = config.ramp.tau_ramp > 0 ? config.ramp.tau_ramp : constants::pi / params.omega_max;
  const double total = pulse.duration();
  for (int j = 0; j < pulse.m_steps(); ++j) {
    const double t = (j + 0.5) * pulse.dt;
    mask[j] = t >= tau && t <= total - tau;
  }
  return mask;
}

OptimizationResult refine(const CostModel& model, const PulseSchedule& start, int start_index) {
  const OptimizationConfig& cfg = model.config();
  const ControlLayout layout(start, cfg, model.params(), free_rabi_mask(start, model.params(), cfg));
  const Objective objective = [&](const Eigen::VectorXd& x, Eigen::VectorXd& g) {
    ControlGradient cg;
    const double f = model.evaluate(layout.to_pulse(x), &cg).cost;
    g = layout.chain(x, cg);
    return f;
  };
  LbfgsOptions opts;
  opts.max_iters = cfg.max_iters;
  opts.grad_tolerance = cfg.grad_tolerance;
  opts.rel_cost_tolerance = cfg.rel_cost_tolerance;
  const LbfgsResult lr = minimize_lbfgs(objective, layout.from_pulse(start), opts);

  OptimizationResult res;
  res.pulse = layout.to_pulse(lr.x);
  const CostBreakdown cb = model.evaluate(res.pulse);
  res.cost = cb.cost;
  res.bell_infidelity = cb.eps_bell;
  res.t_r = cb.t_r;
  res.t_rr = cb.t_rr;
  res.iterations = lr.iterations;
  res.start_index = start_index;
  res.converged = lr.converged;
  res.cost_history = lr.f_history;
  res.starts.push_back(StartSummary{start_index, res.cost, res.bell_infidelity, res.t_r, res.t_rr,
                                    res.iterations, res.converged, lr.reason});
  return res;
}

OptimizationResult optimize(const AtomGeometry& geometry, const PhysicalParams& params,
                            const GateTarget& target, const OptimizationConfig& config) {
  params.validate();
  config.validate();
  const CostModel model(geometry, params, target, config);
  const PulseSchedule base = initial_pulse(params, config);

  std::vector<OptimizationResult> runs(config.n_starts);
#pragma omp parallel for schedule(dynamic)
  for (int i = 0; i < config.n_starts; ++i) {
    std::seed_seq seq{static_cast<std::uint32_t>(config.seed), static_cast<std::uint32_t>(config.seed >> 32),
                      static_cast<std::uint32_t>(i), 0x9e3779b9u};
    std::mt19937_64 rng(seq);
    std::uniform_real_distribution<double> uni(-constants::pi, constants::pi);
    PulseSchedule start = base;
    for (double& phi : start.phi) phi = uni(rng);
    if (config.antisymmetric_phase) {
      const int m = start.m_steps();
      for (int j = 0; j < m / 2; ++j) start.phi[m - 1 - j] = -start.phi[j];
      if (m % 2 == 1) start.phi[m / 2] = 0.0;
    }
    runs[i] = refine(model, start, i);
  }

  int best = 0;
  for (int i = 1; i < config.n_starts; ++i)
    if (runs[i].cost < runs[best].cost) best = i;
  OptimizationResult out = runs[best];
  out.starts.clear();
  for (const auto& r : runs) out.starts.push_back(r.starts.front());
  return out;
}

std::optional<double> QslScan::t_star(double threshold) const {
  for (const auto& p : points)
    if (p.best_infidelity <= threshold) return p.duration_norm;
  return std::nullopt;
}

QslScan qsl_scan(const AtomGeometry& geometry, const PhysicalParams& params, const GateTarget& target,
                 const std::vector<double>& durations_norm, const OptimizationConfig& config) {
  if (!std::is_sorted(durations_norm.begin(), durations_norm.end()))
    throw std::invalid_argument("durations must be ascending");
  QslScan scan;
  for (double tn : durations_norm) {
    OptimizationConfig cfg = config;
    cfg.duration = physical_time(tn, params);
    QslPoint pt;
    pt.duration_norm = tn;
    pt.best = optimize(geometry, params, target, cfg);
    pt.best_infidelity = pt.best.bell_infidelity;
    for (const auto& s : pt.best.starts) {
      pt.start_infidelities.push_back(s.bell_infidelity);
      pt.best_infidelity = std::min(pt.best_infidelity, s.bell_infidelity);
    }
    scan.points.push_back(std::move(pt));
  }
  return scan;
}

bool is_antisymmetric(const PulseSchedule& pulse) {
  const int m = pulse.m_steps();
  for (int j = 0; j < m; ++j)
    if (pulse.phi[j] + pulse.phi[m - 1 - j] != 0.0) return false;
  return true;
}

std::vector<ThetaPoint> theta_sweep(const OptimizationResult& base, double base_theta,
                                    const AtomGeometry& geometry, const PhysicalParams& params,
                                    const std::vector<double>& thetas, const OptimizationConfig& config) {
  std::vector<ThetaPoint> out;
  if (thetas.empty()) return out;
  CostModel model(geometry, params, build_parity_target(geometry.n_atoms(), base_theta), config);
  PulseSchedule current = base.pulse;
  if (config.antisymmetric_phase && !is_antisymmetric(current)) {
    const ControlLayout layout(current, config, params, free_rabi_mask(current, params, config));
    current = refine(model, layout.to_pulse(layout.from_pulse(current))).pulse;
  }
  for (std::size_t i = 0; i < thetas.size(); ++i) {
    const double theta = thetas[i];
    model.set_target(build_parity_target(geometry.n_atoms(), theta));
    ThetaPoint pt;
    pt.theta = theta;
    if (!(i == 0 && theta == base_theta && current.phi == base.pulse.phi)) current = refine(model, current).pulse;
    pt.pulse = current;
    const CostBreakdown cb = model.evaluate(current);
    pt.bell_infidelity = cb.eps_bell;
    pt.cost = cb.cost;
    pt.t_r = cb.t_r;
    pt.t_rr = cb.t_rr;
    out.push_back(std::move(pt));
  }
  return out;
}

}  // namespace parity_gate
