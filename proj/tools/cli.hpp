#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "detgeo/box.hpp"

namespace detgeo::cli {

enum ExitCode : int { kOk = 0, kInputError = 2, kInternalError = 3 };

// Environment variable naming the default output directory (else ".").
inline constexpr const char* kOutDirEnv = "DETGEO_OUT_DIR";

/// Runs one subcommand. argv[0] is the program name. Never throws; failures
/// are reported on `err` and through the exit code.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

// "cx,cy,w,h"; throws InputError.
Box parse_box(const std::string& text);

}  // namespace detgeo::cli
