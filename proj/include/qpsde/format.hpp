#pragma once

#include <cstdio>
#include <string>

namespace qpsde {

/// Round-trip decimal form of a double.
inline std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace qpsde
