#pragma once

#include <string>
#include <vector>

namespace neodeform::cli {

/// Exit codes: 0 success, 1 usage error, 2 runtime or validation failure.
int run(const std::vector<std::string>& args);

}  // namespace neodeform::cli
