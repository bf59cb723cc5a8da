#pragma once

#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

namespace stochdyn::cli {

/// Source of the manifest timestamp. Nothing else in a run reads the clock.
using Clock = std::function<std::string()>;

std::string utc_timestamp();

/// Runs one subcommand. `args` excludes the program name. Returns 0 on
/// success, 2 on usage errors and 1 on any other failure; failures are
/// reported on `err` as one JSON line {"error": code, "message": text}.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err,
        const Clock& clock = utc_timestamp);

/// FNV-1a 64-bit hash of a file's bytes, as 16 hex digits.
std::string file_hash(const std::string& path);

}  // namespace stochdyn::cli
