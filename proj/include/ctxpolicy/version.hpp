#pragma once

#include <string>
#include <string_view>

#include "ctxpolicy/present.hpp"

namespace ctxpolicy {

inline constexpr std::string_view kToolName = "ctxpolicy";
inline constexpr std::string_view kToolVersion = "0.1.0";

inline std::string version_line() {
    return std::string(kToolName) + " " + std::string(kToolVersion) + " (bundle schema " +
           std::to_string(kBundleSchemaVersion) + ")";
}

}  // namespace ctxpolicy
