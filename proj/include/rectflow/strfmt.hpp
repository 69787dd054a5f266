#pragma once

#include <cstdio>
#include <string>

namespace rectflow {

// Round-trip-exact double formatting for CSV/log output. Deterministic, so
// reruns with the same seed produce byte-identical text artifacts.
inline std::string fmt_g17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline std::string fmt_g6(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

}  // namespace rectflow
