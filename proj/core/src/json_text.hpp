#pragma once

#include <string>

#include "json.hpp"

namespace nlsobs::detail {

// Pretty-printed JSON with keys in byte order and doubles at 17 significant
// digits. Non-finite doubles are written as the strings "nan", "inf", "-inf".
std::string dump_sorted(const nlohmann::json& j);

}  // namespace nlsobs::detail
