#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace bpi::cli {

inline constexpr int schema_version = 1;

/// Runs one `bpi` invocation. args[0] is the program name. Returns 0 on
/// success, 2 on usage errors and 1 on data or runtime errors. Output files
/// are written only after the whole command has succeeded; "-" means `out`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace bpi::cli
