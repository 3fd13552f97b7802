#pragma once

#include <string>

namespace pso_escape {

/// Shortest round-trip decimal form; locale independent.
std::string format_number(double value);

}  // namespace pso_escape
