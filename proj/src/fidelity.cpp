#include "parity_gate/fidelity.hpp"

#include <algorithm>
#include <stdexcept>

namespace parity_gate {

cplx phase_trace(std::span<const cplx> diagonal, const GateTarget& target) {
  if (diagonal.size() != target.phases.size())
    throw std::invalid_argument("diagonal does not cover all computational states");
  cplx z = 0.0;
  for (std::size_t mu = 0; mu < diagonal.size(); ++mu) z += std::conj(target.phases[mu]) * diagonal[mu];
  return z;
}

double bell_fidelity(std::span<const cplx> diagonal, const GateTarget& target) {
  const double d = static_cast<double>(diagonal.size());
  return std::clamp(std::norm(phase_trace(diagonal, target)) / (d * d), 0.0, 1.0);
}

double avg_fidelity(std::span<const cplx> diagonal, const GateTarget& target) {
  const double d = static_cast<double>(diagonal.size());
  double diag_sum = 0.0;
  for (const cplx& u : diagonal) diag_sum += std::norm(u);
  const double f = (std::norm(phase_trace(diagonal, target)) + diag_sum) / (d * (d + 1.0));
  return std::clamp(f, 0.0, 1.0);
}

std::vector<cplx> computational_diagonal(const std::vector<BlockPropagation>& props) {
  std::vector<cplx> diag(props.size());
  for (const auto& p : props) diag.at(p.block_index) = p.diagonal();
  return diag;
}

double bell_fidelity(const std::vector<BlockPropagation>& props, const GateTarget& target) {
  return bell_fidelity(computational_diagonal(props), target);
}

double avg_fidelity(const std::vector<BlockPropagation>& props, const GateTarget& target) {
  return avg_fidelity(computational_diagonal(props), target);
}

RydbergTimes rydberg_times(const std::vector<BlockPropagation>& props) {
  RydbergTimes t;
  if (props.empty()) return t;
  for (const auto& p : props) {
    t.t_r += trapezoid(p.populations_r, p.sample_dt);
    t.t_rr += trapezoid(p.populations_rr, p.sample_dt);
  }
  t.t_r /= static_cast<double>(props.size());
  t.t_rr /= static_cast<double>(props.size());
  return t;
}

FidelityReport fidelity_report(const std::vector<BlockPropagation>& props, const GateTarget& target) {
  FidelityReport r;
  const auto diag = computational_diagonal(props);
  r.trace_term = phase_trace(diag, target);
  r.bell_fidelity = bell_fidelity(diag, target);
  r.avg_fidelity = avg_fidelity(diag, target);
  const auto times = rydberg_times(props);
  r.t_r = times.t_r;
  r.t_rr = times.t_rr;
  return r;
}

}  // namespace parity_gate
