#pragma once

#include <ostream>

namespace fibdim {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitGate = 2;

// The fibdim command line. Returns 0 on success, 1 on invalid input or a
// failed check, 2 when a hypothesis gate refused a requested result. Error
// records go to `err` as one JSON object per line.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace fibdim
