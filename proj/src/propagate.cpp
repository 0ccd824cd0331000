#include "parity_gate/propagate.hpp"

#include <cmath>
#include <stdexcept>

#include <unsupported/Eigen/MatrixFunctions>

namespace parity_gate {

BlockOperators block_operators(const BlockSpec& block) {
  const int k = block.n_active();
  BlockOperators ops;
  ops.dim = 1 << k;
  ops.rydberg_count = Eigen::VectorXd::Zero(ops.dim);
  ops.pair_count = Eigen::VectorXd::Zero(ops.dim);
  ops.interaction = Eigen::VectorXd::Zero(ops.dim);
  ops.raising = Eigen::MatrixXcd::Zero(ops.dim, ops.dim);
  for (int b = 0; b < ops.dim; ++b) {
    int count = 0;
    for (int a = 0; a < k; ++a) {
      if (b & (1 << a)) {
        ++count;
        for (int c = a + 1; c < k; ++c)
          if (b & (1 << c)) ops.interaction[b] -= block.interactions(a, c);
      } else {
        ops.raising(b | (1 << a), b) = 1.0;
      }
    }
    ops.rydberg_count[b] = count;
    ops.pair_count[b] = 0.5 * count * (count - 1);
  }
  return ops;
}

Eigen::MatrixXcd block_hamiltonian(const BlockOperators& ops, const StepControls& c, double decay) {
  const cplx drive = 0.5 * c.rabi * std::polar(1.0, c.phi);
  Eigen::MatrixXcd h = drive * ops.raising + std::conj(drive) * ops.raising.adjoint();
  for (int b = 0; b < ops.dim; ++b)
    h(b, b) += cplx(ops.interaction[b] - c.detuning * ops.rydberg_count[b],
                    -0.5 * decay * ops.rydberg_count[b]);
  return h;
}

Eigen::MatrixXcd step_matrix(const BlockOperators& ops, const StepControls& c,
                             std::optional<double> decay, double dt) {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw std::invalid_argument("step duration must be positive");
  if (!std::isfinite(c.phi) || !std::isfinite(c.rabi) || !std::isfinite(c.detuning))
    throw std::invalid_argument("non-finite step controls");
  const double gamma = decay.value_or(0.0);
  if (!std::isfinite(gamma)) throw std::invalid_argument("non-finite decay rate");
  const Eigen::MatrixXcd h = block_hamiltonian(ops, c, gamma);
  if (gamma == 0.0) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(h);
    const Eigen::VectorXcd phases =
        (es.eigenvalues().cast<cplx>() * cplx(0.0, -dt)).array().exp().matrix();
    return es.eigenvectors() * phases.asDiagonal() * es.eigenvectors().adjoint();
  }
  const Eigen::MatrixXcd a = cplx(0.0, -dt) * h;
  return a.exp();
}

Eigen::MatrixXcd step_matrix(const BlockSpec& block, const StepControls& c,
                             std::optional<double> decay, double dt) {
  return step_matrix(block_operators(block), c, decay, dt);
}

int full_dimension(int n_atoms) {
  int d = 1;
  for (int i = 0; i < n_atoms; ++i) d *= 3;
  return d;
}

int full_index(std::uint32_t mu, int n_atoms) {
  int idx = 0;
  for (int a = 0; a < n_atoms; ++a) idx = 3 * idx + (atom_bit(mu, a, n_atoms) ? 1 : 0);
  return idx;
}

Eigen::MatrixXcd full_hamiltonian(const AtomGeometry& geometry, const PhysicalParams& params,
                                  const StepControls& c, double decay) {
  const int n = geometry.n_atoms();
  const int dim = full_dimension(n);
  const Eigen::MatrixXd v = pairwise_interaction(geometry, params);
  const cplx drive = 0.5 * c.rabi * std::polar(1.0, c.phi);
  Eigen::MatrixXcd h = Eigen::MatrixXcd::Zero(dim, dim);
  std::vector<int> digits(n), stride(n);
  for (int a = n - 1, st = 1; a >= 0; --a, st *= 3) stride[a] = st;
  for (int idx = 0; idx < dim; ++idx) {
    for (int a = 0; a < n; ++a) digits[a] = (idx / stride[a]) % 3;
    double diag = 0.0;
    int nr = 0;
    for (int a = 0; a < n; ++a) {
      if (digits[a] != 2) continue;
      ++nr;
      for (int b = a + 1; b < n; ++b)
        if (digits[b] == 2) diag -= v(a, b);
    }
    h(idx, idx) = cplx(diag - c.detuning * nr, -0.5 * decay * nr);
    for (int a = 0; a < n; ++a)
      if (digits[a] == 1) {
        const int up = idx + stride[a];
        h(up, idx) += drive;
        h(idx, up) += std::conj(drive);
      }
  }
  return h;
}

double trapezoid(const std::vector<double>& samples, double h) {
  if (samples.size() < 2) return 0.0;
  double s = 0.5 * (samples.front() + samples.back());
  for (std::size_t i = 1; i + 1 < samples.size(); ++i) s += samples[i];
  return s * h;
}

std::vector<BlockPropagation> propagate_blocks(const PulseSchedule& pulse, const BlockSet& blocks,
                                               const PropagationOptions& options) {
  pulse.validate();
  if (options.substeps < 1) throw std::invalid_argument("substeps must be >= 1");
  const int m = pulse.m_steps();
  const int s = options.substeps;
  const double tau = pulse.dt / s;

  std::vector<BlockPropagation> per_class(blocks.n_classes());
#pragma omp parallel for schedule(dynamic)
  for (int c = 0; c < blocks.n_classes(); ++c) {
    const BlockSpec& block = blocks.blocks[blocks.representatives[c]];
    const BlockOperators ops = block_operators(block);
    BlockPropagation& out = per_class[c];
    out.sample_dt = tau;
    out.unitaries.reserve(m + 1);
    Eigen::MatrixXcd u = Eigen::MatrixXcd::Identity(ops.dim, ops.dim);
    out.unitaries.push_back(u);
    out.populations_r.reserve(m * s + 1);
    out.populations_rr.reserve(m * s + 1);
    auto record = [&](const Eigen::MatrixXcd& uu) {
      const Eigen::VectorXd pop = uu.col(0).cwiseAbs2();
      out.populations_r.push_back(pop.dot(ops.rydberg_count));
      out.populations_rr.push_back(pop.dot(ops.pair_count));
    };
    record(u);

    Eigen::MatrixXcd sub;
    StepControls prev{std::nan(""), std::nan(""), std::nan("")};
    for (int j = 0; j < m; ++j) {
      const StepControls ctl{pulse.phi[j], pulse.rabi[j], pulse.detuning[j]};
      if (block.trivial()) {
        for (int q = 0; q < s; ++q) record(u);
        out.unitaries.push_back(u);
        continue;
      }
      if (!(ctl.phi == prev.phi && ctl.rabi == prev.rabi && ctl.detuning == prev.detuning)) {
        sub = step_matrix(ops, ctl, options.decay, tau);
        prev = ctl;
      }
      for (int q = 0; q < s; ++q) {
        u = sub * u;
        record(u);
      }
      out.unitaries.push_back(u);
    }
  }

  std::vector<BlockPropagation> result(blocks.n_blocks());
  for (int b = 0; b < blocks.n_blocks(); ++b) {
    result[b] = per_class[blocks.class_of[b]];
    result[b].block_index = b;
    result[b].class_index = blocks.class_of[b];
  }
  return result;
}

// ---------------------------------------------------------------------------

void KrylovConfig::validate() const {
  if (max_subspace_dim < 2) throw std::invalid_argument("Krylov subspace dimension must be >= 2");
  if (!(tolerance > 0.0)) throw std::invalid_argument("Krylov tolerance must be positive");
  if (substeps_per_pulse_step < 1) throw std::invalid_argument("Krylov substeps must be >= 1");
}

namespace {

// exp(tau * Hm) e1 for the leading j x j block of the Hessenberg matrix.
Eigen::VectorXcd small_exp_e1(const Eigen::MatrixXcd& hess, int j, double tau) {
  const Eigen::MatrixXcd a = tau * hess.topLeftCorner(j, j);
  return a.exp().col(0);
}

}  // namespace

KrylovResult krylov_evolve(const HamiltonianApplier& apply_h, const Eigen::VectorXcd& state,
                           double dt, const KrylovConfig& config) {
  config.validate();
  if (!(dt > 0.0)) throw std::invalid_argument("Krylov step must be positive");
  KrylovResult res;
  res.state = state;
  double beta = state.norm();
  if (!(beta > 0.0)) throw std::invalid_argument("Krylov state must be nonzero");

  const int mmax = std::min<int>(config.max_subspace_dim, static_cast<int>(state.size()));
  const long n = state.size();
  Eigen::MatrixXcd basis(n, mmax + 1);
  Eigen::MatrixXcd hess = Eigen::MatrixXcd::Zero(mmax + 1, mmax + 1);
  Eigen::VectorXcd w(n);

  double t = 0.0;
  double tau = dt / config.substeps_per_pulse_step;
  const double min_tau = dt * 1e-10;

  while (t < dt * (1.0 - 1e-14)) {
    tau = std::min(tau, dt - t);
    beta = res.state.norm();
    if (beta == 0.0) break;
    basis.col(0) = res.state / beta;
    hess.setZero();

    int j_used = 0;
    bool happy = false;
    double err = 0.0;
    Eigen::VectorXcd coeffs;
    for (int j = 0; j < mmax; ++j) {
      apply_h(basis.col(j), w);
      ++res.matvecs;
      w *= cplx(0.0, -1.0);
      // modified Gram-Schmidt with one reorthogonalisation pass
      for (int pass = 0; pass < 2; ++pass)
        for (int i = 0; i <= j; ++i) {
          const cplx hij = basis.col(i).dot(w);
          hess(i, j) += hij;
          w -= hij * basis.col(i);
        }
      const double hnext = w.norm();
      j_used = j + 1;
      const double scale = hess.topLeftCorner(j_used, j_used).cwiseAbs().maxCoeff() + 1e-300;
      if (hnext <= 1e-13 * scale) {
        happy = true;
        break;
      }
      hess(j + 1, j) = hnext;
      basis.col(j + 1) = w / hnext;
      if (j_used >= 2 || j_used == mmax) {
        coeffs = small_exp_e1(hess, j_used, tau);
        err = beta * hnext * std::abs(coeffs[j_used - 1]) * tau;
        if (err <= config.tolerance * beta * std::max(tau / dt, 1e-3)) break;
      }
    }

    if (happy) {
      tau = dt - t;
      coeffs = small_exp_e1(hess, j_used, tau);
      err = 0.0;
    } else {
      const double hnext = std::abs(hess(j_used, j_used - 1));
      auto estimate = [&](double tt) {
        coeffs = small_exp_e1(hess, j_used, tt);
        return beta * hnext * std::abs(coeffs[j_used - 1]) * tt;
      };
      err = estimate(tau);
      while (err > config.tolerance * beta * std::max(tau / dt, 1e-3)) {
        tau *= 0.5;
        if (tau < min_tau) {
          res.converged = false;
          break;
        }
        err = estimate(tau);
      }
      if (!res.converged) {
        res.error_estimate += err;
        return res;
      }
    }

    res.state = beta * (basis.leftCols(j_used) * coeffs.head(j_used));
    res.error_estimate += err;
    t += tau;
    ++res.substeps;
    // cheap subspaces suggest a longer next step
    if (!happy && j_used < mmax / 2) tau *= 2.0;
  }
  return res;
}

}  // namespace parity_gate
