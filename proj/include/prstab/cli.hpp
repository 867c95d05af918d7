#pragma once

#include <ostream>

namespace prstab::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitBudget = 3;

/// Entry point of the prstab command line. JSON goes to --output, else to
/// $PRSTAB_OUT_DIR/<command>.json when that variable is set, else to `out`.
/// CSV output (simulate, random-study) follows the same rule with --csv.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace prstab::cli
