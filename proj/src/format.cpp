#include "sinkdist/format.hpp"

#include <cstdio>

namespace sinkdist {

std::string FormatReal(double value) {
  if (value == 0.0) value = 0.0;  // drop the sign of -0
  char buffer[64];
  std::snprintf(buffer, sizeof(buffer), "%.9g", value);
  return buffer;
}

}  // namespace sinkdist
