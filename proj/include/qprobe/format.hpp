#ifndef QPROBE_FORMAT_HPP
#define QPROBE_FORMAT_HPP

#include <cstdio>
#include <string>

namespace qprobe {

/// 17 significant digits, enough for every double to round-trip.
inline std::string format_double(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

}  // namespace qprobe

#endif  // QPROBE_FORMAT_HPP
