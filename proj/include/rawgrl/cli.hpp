#pragma once

#include <cstdint>
#include <string>

namespace rawgrl {

// Process exit codes.
enum ExitCode : int { kExitOk = 0, kExitFailure = 1, kExitConfig = 2, kExitIo = 3, kExitConvergence = 4 };

int run_cli(int argc, char** argv);

// 64-bit FNV-1a, used for run ids.
std::uint64_t fnv1a(const std::string& data);

}  // namespace rawgrl
