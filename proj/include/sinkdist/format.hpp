#pragma once

#include <string>

namespace sinkdist {

// Nine significant digits, printf "%.9g". Used for every printed real so
// text output is stable across platforms with IEEE doubles.
std::string FormatReal(double value);

}  // namespace sinkdist
