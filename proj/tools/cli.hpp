// Copyright 2026 The hdrdiff Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef HDRDIFF_TOOLS_CLI_HPP
#define HDRDIFF_TOOLS_CLI_HPP

#include <iosfwd>

namespace hdrdiff::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitRuntime = 2;

/// Entry point of the `hdrdiff` tool. Subcommands: synth, train, sample, eval.
int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace hdrdiff::cli

#endif  // HDRDIFF_TOOLS_CLI_HPP
