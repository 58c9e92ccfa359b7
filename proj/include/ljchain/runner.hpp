#pragma once

#include <string>
#include <vector>

#include "ljchain/config.hpp"

// Experiment dispatch and artifact emission. Artifacts are written atomically
// (temp file + rename) and carry no timestamps, so identical configs produce
// byte-identical files for any worker count.
namespace ljchain {

struct RunOutcome {
  int exit_code = 0;
  std::vector<std::string> artifacts;  // paths written
  std::string summary;                 // human-readable table, also printed
};

RunOutcome run(const RunConfig& config);

void write_file_atomic(const std::string& path, const std::string& content);

}  // namespace ljchain
