#pragma once

#include <string>
#include <vector>

#include "invot/types.hpp"

namespace invot::cli {

enum ExitCode : int {
  kSuccess = 0,
  kInputError = 1,
  kNotConverged = 2,
  kZeroObservation = 3,
};

/// Entry point of the `invot` command. Messages go to standard error.
int run(int argc, const char* const* argv);
/// Same, with args excluding the program name.
int run(const std::vector<std::string>& args);

/// Parses one --constraint token: sym0, box:LO:HI or affinity:GFILE:DFILE[:+|-].
ConstraintSpec parse_constraint(const std::string& token);
/// Combines parsed tokens in order; none gives NoConstraint.
ConstraintSpec parse_constraints(const std::vector<std::string>& tokens);

}  // namespace invot::cli
