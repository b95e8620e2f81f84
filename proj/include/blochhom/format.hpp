#pragma once

#include <string>

namespace blochhom {

/// Shortest decimal form that round-trips to the same double.
std::string shortest(double value);

}  // namespace blochhom
