#pragma once

#include "chainflow/error.hpp"

namespace chainflow {

inline constexpr int kExitInput = 1;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitInternal = 3;

/// 1 for bad or missing input data, 2 for configuration errors, 3 otherwise.
int exit_code(ErrorKind kind);

int run_cli(int argc, char** argv);

}  // namespace chainflow
