#pragma once

#include <ostream>

#include "parity_gate/config.hpp"

namespace parity_gate {

/// Executes one command and writes its artifacts, the resolved config and a
/// manifest into config.output_dir. Returns the process exit status.
int run(const RunConfig& config, std::ostream& log);

}  // namespace parity_gate
