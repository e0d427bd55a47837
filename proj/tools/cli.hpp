// SPDX-License-Identifier: Apache-2.0
//
// Command-line front end. Kept as a library so tests can drive it in-process.
#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace vmrnn::cli {

enum ExitCode : int { kOk = 0, kConfigError = 1, kRuntimeError = 2 };

/// Runs one invocation. argv[0] is the program name.
int run(const std::vector<std::string>& argv, std::ostream& out, std::ostream& err);

/// 8-bit binary PGM (1 channel) or PPM (2 or 3 channels; a missing blue
/// channel is written as zero). Values are clamped to [0, 1].
void write_netpbm(const std::string& path, const float* frame, std::size_t h, std::size_t w, std::size_t c);

}  // namespace vmrnn::cli
