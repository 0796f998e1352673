#pragma once

#include <cstdio>
#include <string>

namespace vispol {

// All numeric report output uses 6 significant digits so reruns are
// checksum-stable.
inline std::string format_num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

}  // namespace vispol
