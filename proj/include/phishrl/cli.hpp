#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace phishrl::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInput = 2;
inline constexpr int kExitTraining = 3;
inline constexpr int kExitCheckpoint = 4;

// Runs the command line (args[0] is the program name). Results go to out,
// progress, warnings and errors to err.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace phishrl::cli
