#pragma once

#include <string>

namespace tmd {

/// Round-trippable text for a double, 17 significant digits.
std::string fmt17(double v);

}  // namespace tmd
