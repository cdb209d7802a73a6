#pragma once

namespace pursuit {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace pursuit
