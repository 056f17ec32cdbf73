#pragma once

#include "sepde/cli/config.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>

namespace sepde::cli {

inline constexpr int exit_ok = 0;
inline constexpr int exit_operational = 1;
inline constexpr int exit_failed = 2;

/// Command-line settings that take precedence over the config file.
struct Overrides {
  std::optional<std::filesystem::path> out;
  std::optional<std::uint64_t> seed;
  int threads = 1;
  bool strict_paper_constants = false;
  std::optional<std::string> mu;
  std::optional<std::string> lambda;
  std::optional<int> resolution;
};

/// Runs one of constants, check, solve-p, solve-q, solve-eigen, mms, sweep.
/// Returns 0 when every check passed, 2 on failed verdicts or
/// non-convergence, 1 on operational errors.
int run_command(const std::string& command, RunConfig cfg, const Overrides& overrides,
                std::ostream& out, std::ostream& err);

/// `sepde <command> [--config PATH] [--out DIR] [--seed U64] [--threads K]
///  [--strict-paper-constants] [--mu M] [--lambda L] [--resolution N]`
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace sepde::cli
