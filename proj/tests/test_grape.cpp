#include <doctest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "parity_gate/fidelity.hpp"
#include "parity_gate/grape.hpp"
#include "parity_gate/lbfgs.hpp"
#include "parity_gate/propagate.hpp"

using namespace parity_gate;
using constants::pi;

namespace {

double max_rel_error(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  const double scale = std::max(b.lpNorm<Eigen::Infinity>(), 1e-12);
  return (a - b).lpNorm<Eigen::Infinity>() / scale;
}

}  // namespace

TEST_CASE("noise-free cost") {
  PhysicalParams p;
  const auto geo = build_geometry("linear-pair", 2.0);
  const auto blocks = enumerate_blocks(geo, p);
  const auto target = build_parity_target(2, pi / 4);
  std::mt19937_64 rng(1);
  const auto pulse = oracle::random_pulse(rng, 20, physical_time(2.1, p), p);
  const double eps = 1.0 - bell_fidelity(propagate_blocks(pulse, blocks), target);
  CHECK(cost_noise_free(pulse, blocks, target, 0.0, p) == doctest::Approx(eps).epsilon(1e-14));

  PulseSchedule jump = PulseSchedule::constant(2, 1e-9, p.omega_max);
  jump.phi = {0.0, pi};
  const double base = 1.0 - bell_fidelity(propagate_blocks(jump, blocks), target);
  CHECK(cost_noise_free(jump, blocks, target, 1e-3, p) - base == doctest::Approx(1e-3 * (pi / 2) * (pi / 2)).epsilon(1e-12));
}

TEST_CASE("noise-aware cost reduces to the noise-free cost") {
  PhysicalParams p;
  const auto blocks = enumerate_blocks(build_geometry("equilateral-triangle", 2.0), p);
  const auto target = build_parity_target(3, pi / 4);
  std::mt19937_64 rng(2);
  const auto pulse = oracle::random_pulse(rng, 20, physical_time(2.0, p), p);
  OptimizationConfig cfg;
  cfg.eta_r = cfg.eta_rr = 0.0;
  CHECK(cost_noise_aware(pulse, blocks, target, cfg, p) ==
        doctest::Approx(cost_noise_free(pulse, blocks, target, cfg.eta_delta, p)).epsilon(1e-14));
  // no drive: noise terms vanish and the identity has eps_Bell = 1/2
  OptimizationConfig full;
  const auto dark = PulseSchedule::constant(20, 1e-9, 0.0);
  CHECK(cost_noise_aware(dark, blocks, target, full, p) == doctest::Approx(0.5).epsilon(1e-14));
  // the noise terms add eta * T in the chosen unit
  const CostModel model(blocks, p, target, full);
  const auto cb = model.evaluate(pulse);
  const double scale = model.time_weight_scale();
  CHECK(cb.cost == doctest::Approx(cb.eps_bell + full.eta_delta * cb.smoothness + full.eta_r * scale * cb.t_r +
                                   full.eta_rr * scale * cb.t_rr)
                       .epsilon(1e-12));
  CHECK(cb.cost >= cb.eps_bell);
}

TEST_CASE("weight units") {
  PhysicalParams p;
  const auto blocks = enumerate_blocks(build_geometry("linear-pair", 2.0), p);
  const auto target = build_parity_target(2, pi / 4);
  OptimizationConfig cfg;
  cfg.weight_units = WeightUnits::microseconds;
  CHECK(CostModel(blocks, p, target, cfg).time_weight_scale() == doctest::Approx(1e6));
  cfg.weight_units = WeightUnits::normalized;
  CHECK(CostModel(blocks, p, target, cfg).time_weight_scale() == doctest::Approx(p.omega_max / (2 * pi)));
  cfg.weight_units = WeightUnits::seconds;
  CHECK(CostModel(blocks, p, target, cfg).time_weight_scale() == 1.0);
  CHECK(weight_units_from_string("normalized") == WeightUnits::normalized);
  CHECK_THROWS(weight_units_from_string("minutes"));
}

TEST_CASE("gradients match central differences") {
  PhysicalParams p;
  std::mt19937_64 rng(4);
  for (auto name : {"linear-pair", "right-triangle"}) {
    const auto geo = build_geometry(name, 2.0);
    const auto blocks = enumerate_blocks(geo, p);
    const auto target = build_parity_target(geo.n_atoms(), pi / 4);
    for (bool noise_aware : {false, true}) {
      OptimizationConfig cfg;
      cfg.noise_aware = noise_aware;
      cfg.optimize_rabi = true;
      const auto pulse = oracle::random_pulse(rng, 20, physical_time(2.0, p), p, true);
      const auto g = gradient(pulse, blocks, target, cfg, p);
      // the free-function form has no Rabi smoothness term, so go through the model
      const CostModel model(blocks, p, target, cfg);
      auto cost = [&](const PulseSchedule& q) { return model.evaluate(q).cost; };
      Eigen::VectorXd x = Eigen::Map<const Eigen::VectorXd>(pulse.phi.data(), pulse.m_steps());
      const auto fd_phi = oracle::central_difference(
          [&](const Eigen::VectorXd& v) {
            PulseSchedule q = pulse;
            for (int j = 0; j < q.m_steps(); ++j) q.phi[j] = v[j];
            return cost(q);
          },
          x, 1e-6);
      CHECK(max_rel_error(g.d_phi, fd_phi) < 1e-5);
      // Rabi derivative, step relative to omega_max
      Eigen::VectorXd r = Eigen::Map<const Eigen::VectorXd>(pulse.rabi.data(), pulse.m_steps()) / p.omega_max;
      const auto fd_rabi = oracle::central_difference(
          [&](const Eigen::VectorXd& v) {
            PulseSchedule q = pulse;
            for (int j = 0; j < q.m_steps(); ++j) q.rabi[j] = v[j] * p.omega_max;
            return cost(q);
          },
          r, 1e-6);
      INFO(name << " noise_aware " << noise_aware);
      CHECK(max_rel_error(g.d_rabi * p.omega_max, fd_rabi) < 1e-5);
    }
  }
}

TEST_CASE("ramp profile") {
  PhysicalParams p;
  const double tau = pi / p.omega_max, total = physical_time(2.1, p);
  CHECK(ramp_fraction(tau, total, tau, 10.0) == doctest::Approx(1.0 - std::exp(-10.0)).epsilon(1e-12));
  CHECK(ramp_fraction(0.0, total, tau, 10.0) == 0.0);
  CHECK(ramp_fraction(0.5 * total, total, tau, 10.0) == 1.0);
  const auto ramped = apply_ramp(PulseSchedule::constant(105, total / 105, p.omega_max), p, 10.0, tau);
  for (int j = 0; j < 105; ++j) CHECK(ramped.rabi[j] == doctest::Approx(ramped.rabi[104 - j]).epsilon(1e-12));
  CHECK(ramped.rabi[0] < 0.01 * p.omega_max);
  CHECK_THROWS(apply_ramp(PulseSchedule::constant(4, tau / 4, p.omega_max), p, 10.0, tau));
}

TEST_CASE("L-BFGS minimises the Rosenbrock function") {
  const Objective rosen = [](const Eigen::VectorXd& x, Eigen::VectorXd& g) {
    g.resize(2);
    g[0] = -400 * x[0] * (x[1] - x[0] * x[0]) - 2 * (1 - x[0]);
    g[1] = 200 * (x[1] - x[0] * x[0]);
    return 100 * std::pow(x[1] - x[0] * x[0], 2) + std::pow(1 - x[0], 2);
  };
  const auto res = minimize_lbfgs(rosen, Eigen::Vector2d(-1.2, 1.0), {});
  CHECK(res.x[0] == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(res.x[1] == doctest::Approx(1.0).epsilon(1e-6));
  for (std::size_t i = 1; i < res.f_history.size(); ++i) CHECK(res.f_history[i] <= res.f_history[i - 1]);
}

TEST_CASE("optimisation edge cases and determinism") {
  PhysicalParams p;
  const auto geo = build_geometry("linear-pair", 2.0);
  const auto target = build_parity_target(2, pi / 4);
  OptimizationConfig zero;
  zero.duration = 0.0;
  zero.n_starts = 2;
  const auto r0 = optimize(geo, p, target, zero);
  CHECK(r0.bell_infidelity == doctest::Approx(0.5).epsilon(1e-14));

  OptimizationConfig cfg;
  cfg.duration = physical_time(2.1, p);
  cfg.n_starts = 3;
  cfg.max_iters = 60;
  cfg.seed = 42;
  const auto a = optimize(geo, p, target, cfg);
  const auto b = optimize(geo, p, target, cfg);
  CHECK(a.pulse.phi == b.pulse.phi);
  CHECK(a.starts.size() == 3);
  for (const auto& s : a.starts) CHECK(a.cost <= s.cost);
  CHECK(a.cost >= a.bell_infidelity);

  cfg.antisymmetric_phase = true;
  cfg.ramp.enabled = true;
  const auto anti = optimize(geo, p, target, cfg);
  CHECK(is_antisymmetric(anti.pulse));
  // ramped pieces keep their Rabi values
  const auto skeleton = initial_pulse(p, cfg);
  CHECK(anti.pulse.rabi == skeleton.rabi);
}

TEST_CASE("theta sweep starts from the base pulse") {
  PhysicalParams p;
  const auto geo = build_geometry("linear-pair", 2.0);
  OptimizationConfig cfg;
  cfg.duration = physical_time(2.1, p);
  cfg.n_starts = 2;
  cfg.max_iters = 40;
  const auto base = optimize(geo, p, build_parity_target(2, pi / 4), cfg);
  const auto fam = theta_sweep(base, pi / 4, geo, p, {pi / 4, pi / 8}, cfg);
  REQUIRE(fam.size() == 2);
  CHECK(fam[0].pulse.phi == base.pulse.phi);
  CHECK(fam[0].bell_infidelity == doctest::Approx(base.bell_infidelity).epsilon(1e-12));
}

TEST_CASE("QSL thresholds are monotone") {
  PhysicalParams p;
  const auto geo = build_geometry("linear-pair", 2.0);
  OptimizationConfig cfg;
  cfg.eta_delta = 0.0;
  cfg.noise_aware = false;
  cfg.n_starts = 3;
  cfg.max_iters = 300;
  const auto scan = qsl_scan(geo, p, build_parity_target(2, pi / 4), {0.8, 1.6, 2.4}, cfg);
  REQUIRE(scan.points.size() == 3);
  CHECK(scan.points[0].best_infidelity > 1e-3);
  const auto loose = scan.t_star(1e-2), tight = scan.t_star(1e-6);
  if (tight) {
    REQUIRE(loose);
    CHECK(*loose <= *tight);
  }
  CHECK_THROWS(qsl_scan(geo, p, build_parity_target(2, pi / 4), {2.0, 1.0}, cfg));
}
