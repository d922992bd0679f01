#pragma once

#include "csmakit/run_config.hpp"

namespace csmakit {

// Executes one configured run and writes its CSV artifacts under
// config.out_dir as <mode>_<label>*.csv. Identical (config, seed) pairs
// produce byte-identical files. Throws ConfigError for invalid requests and
// std::runtime_error for numerical failures.
void run(const RunConfig& config);

}  // namespace csmakit
