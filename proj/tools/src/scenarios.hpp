#pragma once

#include "config.hpp"
#include "hypermass/errors.hpp"
#include "report.hpp"

namespace hypermass::cli {

// Loads the inputs and runs one scenario. Module errors are rethrown with the
// scenario name prepended.
RunReport run_scenario(const ScenarioConfig& config);

// Same, with the input document already parsed.
RunReport run_scenario(const ScenarioConfig& config, const nlohmann::json& input);

// 2 hypothesis, 3 solver, 4 input and I/O.
int exit_code(ErrorKind kind);

}  // namespace hypermass::cli
