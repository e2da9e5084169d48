// eth2vec: EVM bytecode embeddings for clone and vulnerability detection
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <iosfwd>
#include <span>
#include <string>

namespace eth2vec::cli
{
enum ExitCode : int
{
    exit_ok = 0,
    exit_internal = 1,
    exit_invalid_input = 2,
    exit_empty_analysis = 3,
};

/// Runs one command line (without the program name).
int run(std::span<const std::string> args, std::ostream& out, std::ostream& err);
}  // namespace eth2vec::cli
