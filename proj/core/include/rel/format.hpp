#pragma once

#include <string>

namespace rel {

/// Round-trippable decimal form ("%.17g"); "nan" or "inf" for non-finite values.
std::string format_double(double value);

}  // namespace rel
