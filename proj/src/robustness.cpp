#include "parity_gate/robustness.hpp"

#include <cmath>
#include <random>
#include <stdexcept>
#include <string>

#include "parity_gate/fidelity.hpp"
#include "parity_gate/propagate.hpp"

namespace parity_gate {

std::string_view to_string(PerturbationChannel channel) {
  switch (channel) {
    case PerturbationChannel::rabi:
      return "rabi";
    case PerturbationChannel::detuning:
      return "detuning";
    case PerturbationChannel::phase:
      break;
  }
  return "phase";
}

std::string_view to_string(PerturbationMode mode) {
  return mode == PerturbationMode::quasi_static ? "quasi_static" : "time_varying";
}

PerturbationChannel perturbation_channel_from_string(std::string_view name) {
  if (name == "rabi") return PerturbationChannel::rabi;
  if (name == "detuning") return PerturbationChannel::detuning;
  if (name == "phase") return PerturbationChannel::phase;
  throw std::invalid_argument("unknown perturbation channel '" + std::string(name) + "'");
}

PerturbationMode perturbation_mode_from_string(std::string_view name) {
  if (name == "quasi_static") return PerturbationMode::quasi_static;
  if (name == "time_varying") return PerturbationMode::time_varying;
  throw std::invalid_argument("unknown perturbation mode '" + std::string(name) + "'");
}

double PerturbationSpec::sigma(const PhysicalParams& params) const {
  return epsilon * (channel == PerturbationChannel::phase ? constants::pi : params.omega_max);
}

void PerturbationSpec::validate() const {
  if (!(epsilon >= 0.0) || !std::isfinite(epsilon)) throw std::invalid_argument("epsilon must be >= 0");
  if (channel == PerturbationChannel::phase && mode == PerturbationMode::quasi_static)
    throw std::invalid_argument("a quasi-static phase offset is a global phase and has no effect on the gate");
}

int perturb_pulse(PulseSchedule& pulse, const PerturbationSpec& spec, const PhysicalParams& params,
                  const std::vector<double>& normals) {
  const int m = pulse.m_steps();
  const double sigma = spec.sigma(params);
  int clamped = 0;
  for (int j = 0; j < m; ++j) {
    const double delta = sigma * normals.at(spec.mode == PerturbationMode::quasi_static ? 0 : j);
    switch (spec.channel) {
      case PerturbationChannel::rabi:
        pulse.rabi[j] += delta;
        if (pulse.rabi[j] < 0.0) {
          pulse.rabi[j] = 0.0;
          ++clamped;
        }
        break;
      case PerturbationChannel::detuning:
        pulse.detuning[j] += delta;
        break;
      case PerturbationChannel::phase:
        pulse.phi[j] += delta;
        break;
    }
  }
  return clamped;
}

double sample_std(const std::vector<double>& values) {
  const std::size_t n = values.size();
  if (n < 2) return 0.0;
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(n);
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return std::sqrt(ss / static_cast<double>(n - 1));
}

namespace {

double avg_infidelity(const PulseSchedule& pulse, const BlockSet& blocks, const GateTarget& target) {
  PropagationOptions opt;
  opt.substeps = 1;
  return 1.0 - avg_fidelity(propagate_blocks(pulse, blocks, opt), target);
}

}  // namespace

RobustnessReport run_robustness(const PulseSchedule& pulse, const AtomGeometry& geometry,
                                const PhysicalParams& params, const GateTarget& target,
                                const std::vector<PerturbationSpec>& scenarios,
                                const std::vector<double>& epsilons, const RobustnessOptions& options) {
  pulse.validate();
  if (options.n_samples < 1) throw std::invalid_argument("n_samples must be >= 1");
  for (const auto& s : scenarios) s.validate();
  for (double e : epsilons)
    if (!(e >= 0.0) || !std::isfinite(e)) throw std::invalid_argument("epsilon must be >= 0");

  const BlockSet blocks = enumerate_blocks(geometry, params);
  RobustnessReport report;
  report.unperturbed = avg_infidelity(pulse, blocks, target);
  const int m = pulse.m_steps();
  const int n_shots = options.n_samples;

  for (const auto& scenario : scenarios) {
    // one set of standard normals per shot, shared across the epsilon grid
    std::vector<std::vector<double>> normals(n_shots, std::vector<double>(std::max(m, 1)));
    for (int s = 0; s < n_shots; ++s) {
      std::seed_seq seq{static_cast<std::uint32_t>(options.seed), static_cast<std::uint32_t>(options.seed >> 32),
                        static_cast<std::uint32_t>(scenario.channel), static_cast<std::uint32_t>(scenario.mode),
                        static_cast<std::uint32_t>(s)};
      std::mt19937_64 rng(seq);
      std::normal_distribution<double> gauss;
      for (double& z : normals[s]) z = gauss(rng);
    }
    for (double eps : epsilons) {
      PerturbationSpec spec = scenario;
      spec.epsilon = eps;
      RobustnessRow row;
      row.channel = spec.channel;
      row.mode = spec.mode;
      row.epsilon = eps;
      row.n = n_shots;
      row.samples.assign(n_shots, 0.0);
      std::vector<int> clamps(n_shots, 0);
#pragma omp parallel for schedule(dynamic)
      for (int s = 0; s < n_shots; ++s) {
        PulseSchedule shot = pulse;
        clamps[s] = perturb_pulse(shot, spec, params, normals[s]);
        row.samples[s] = eps == 0.0 ? report.unperturbed : avg_infidelity(shot, blocks, target);
      }
      double sum = 0.0;
      for (int s = 0; s < n_shots; ++s) {
        sum += row.samples[s];
        row.clamped += clamps[s];
      }
      row.mean = eps == 0.0 ? report.unperturbed : sum / n_shots;
      row.std = eps == 0.0 ? 0.0 : sample_std(row.samples);
      report.rows.push_back(std::move(row));
    }
  }
  return report;
}

}  // namespace parity_gate
