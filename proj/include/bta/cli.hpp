#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "bta/bta_matrix.hpp"

namespace bta {

/// Process exit statuses of the `btasolve` tool.
enum ExitCode : int {
  kExitOk = 0,
  kExitVerifyFailed = 1,
  kExitUsage = 2,
  kExitNumerical = 3,
  kExitIo = 4,
};

/// Shape of a named dataset preset: `sd-<n>` is n blocks of size 1024 and no
/// arrow. Returns nullopt for unknown names.
std::optional<BtaShape> expand_preset(std::string_view name);

/// Runs the tool with `args` (without the program name) and returns its exit code.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace bta
