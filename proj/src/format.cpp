#include "tmd/format.hpp"

#include <cstdio>

namespace tmd {

std::string fmt17(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace tmd
