#pragma once

namespace dapas {

inline constexpr const char* kToolkitVersion = "0.1.0";

}  // namespace dapas
