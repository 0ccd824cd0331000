#pragma once

#include <span>
#include <vector>

#include "parity_gate/model.hpp"
#include "parity_gate/propagate.hpp"

namespace parity_gate {

struct FidelityReport {
  double bell_fidelity = 0.0;
  double avg_fidelity = 0.0;
  double t_r = 0.0;   // s
  double t_rr = 0.0;  // s
  cplx trace_term{};  // sum_mu e^{-i theta_mu} <mu|U|mu>
};

/// sum_mu conj(target_mu) * diag[mu]
cplx phase_trace(std::span<const cplx> diagonal, const GateTarget& target);

double bell_fidelity(std::span<const cplx> diagonal, const GateTarget& target);
double avg_fidelity(std::span<const cplx> diagonal, const GateTarget& target);

std::vector<cplx> computational_diagonal(const std::vector<BlockPropagation>& props);

double bell_fidelity(const std::vector<BlockPropagation>& props, const GateTarget& target);
double avg_fidelity(const std::vector<BlockPropagation>& props, const GateTarget& target);

struct RydbergTimes {
  double t_r = 0.0;
  double t_rr = 0.0;
};

RydbergTimes rydberg_times(const std::vector<BlockPropagation>& props);

FidelityReport fidelity_report(const std::vector<BlockPropagation>& props, const GateTarget& target);

}  // namespace parity_gate
