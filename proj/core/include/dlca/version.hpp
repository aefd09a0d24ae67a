#pragma once

namespace dlca {

inline constexpr const char* kVersion = "dlca 0.1.0";

}
