#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace repscope::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 1;
inline constexpr int kExitInternal = 2;

/// Runs one `repscope` invocation. `args` excludes the program name.
/// Exit 0 on success, 1 on bad input or a failed verification, 2 otherwise.
int dispatch(const std::vector<std::string>& args, std::istream& in, std::ostream& out, std::ostream& err);

}  // namespace repscope::cli
