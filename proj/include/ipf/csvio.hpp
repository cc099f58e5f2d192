#pragma once

#include <cstdio>
#include <string>

namespace ipf {

// Shortest round-trippable decimal form; keeps CSV output byte-stable across
// runs and platforms with IEEE doubles.
inline std::string csv_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  double back = 0.0;
  std::sscanf(buf, "%lf", &back);
  if (back == v) {
    for (int prec = 1; prec < 17; ++prec) {
      char probe[40];
      std::snprintf(probe, sizeof(probe), "%.*g", prec, v);
      std::sscanf(probe, "%lf", &back);
      if (back == v) return probe;
    }
  }
  return buf;
}

}  // namespace ipf
