#pragma once

#include <string>

namespace vrld {

/// Shortest decimal text that parses back to exactly `v` ("nan", "inf", "-inf" for non-finite).
std::string format_real(double v);

/// Strict full-string parse; throws Config naming `what` on failure.
double parse_real(const std::string& text, const std::string& what);
long long parse_int(const std::string& text, const std::string& what);

}  // namespace vrld
