#pragma once

namespace inspector {

inline constexpr const char* kToolkitVersion = "0.1.0";

}  // namespace inspector
