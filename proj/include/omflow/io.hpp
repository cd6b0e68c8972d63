#pragma once

// Output helpers shared by the CLI and the report writers. All numbers leave
// the program rounded to 12 significant digits so repeated runs are
// byte-identical.

#include <cstdio>
#include <cstdlib>
#include <string>

namespace omflow::io {

inline std::string fmt12(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

inline double round12(double v) { return std::strtod(fmt12(v).c_str(), nullptr); }

}  // namespace omflow::io
