#pragma once

#include <string_view>

namespace nlsobs {

// Plain MAJOR.MINOR.PATCH.
std::string_view semantic_version();
// git-describe style string recorded in run records.
std::string_view describe_version();

}  // namespace nlsobs
