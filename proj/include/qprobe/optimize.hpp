#ifndef QPROBE_OPTIMIZE_HPP
#define QPROBE_OPTIMIZE_HPP

#include <cmath>
#include <string>

#include "qprobe/errors.hpp"

namespace qprobe {

/// Three abscissae lo < mid < hi with f(mid) >= f(lo) and f(mid) >= f(hi).
struct Bracket {
  double lo = 0.0;
  double mid = 0.0;
  double hi = 0.0;
  int expansions = 0;
};

/// Brackets a maximum of f by stepping outward from x0. The step doubles
/// after every move, so the search covers any finite distance quickly.
template <class F>
Bracket bracket_maximum(F&& f, double x0, double step, int max_expansions = 200) {
  detail::require(step > 0.0, "bracketing step must be positive");
  Bracket b{x0 - step, x0, x0 + step, 0};
  double f_lo = f(b.lo);
  double f_mid = f(b.mid);
  double f_hi = f(b.hi);
  while (!(f_mid >= f_lo && f_mid >= f_hi && (f_mid > f_lo || f_mid > f_hi))) {
    if (b.expansions >= max_expansions)
      throw numerical_failure("could not bracket a maximum within " + std::to_string(max_expansions) +
                              " expansions");
    ++b.expansions;
    if (f_lo > f_hi) {
      // Uphill to the left.
      const double width = 2.0 * (b.mid - b.lo);
      b.hi = b.mid;
      f_hi = f_mid;
      b.mid = b.lo;
      f_mid = f_lo;
      b.lo = b.mid - width;
      f_lo = f(b.lo);
    } else if (f_hi > f_lo) {
      const double width = 2.0 * (b.hi - b.mid);
      b.lo = b.mid;
      f_lo = f_mid;
      b.mid = b.hi;
      f_mid = f_hi;
      b.hi = b.mid + width;
      f_hi = f(b.hi);
    } else {
      // Flat on both sides: widen symmetrically.
      const double width = 2.0 * (b.hi - b.mid);
      b.lo = b.mid - width;
      b.hi = b.mid + width;
      f_lo = f(b.lo);
      f_hi = f(b.hi);
    }
  }
  return b;
}

struct GoldenResult {
  double x = 0.0;
  double value = 0.0;
  double lo = 0.0;
  double hi = 0.0;
  int iterations = 0;
};

/// Golden-section search for the maximum of a unimodal f on [lo, hi], stopped
/// once the interval is narrower than `width`.
template <class F>
GoldenResult golden_section_maximize(F&& f, double lo, double hi, double width, int max_iterations = 500) {
  detail::require(hi > lo, "golden-section interval must be non-empty");
  detail::require(width > 0.0, "golden-section tolerance must be positive");
  constexpr double kInvPhi = 0.6180339887498948482;
  double a = lo;
  double b = hi;
  double c = b - kInvPhi * (b - a);
  double d = a + kInvPhi * (b - a);
  double fc = f(c);
  double fd = f(d);
  int it = 0;
  while (b - a > width && it < max_iterations) {
    ++it;
    if (fc >= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - kInvPhi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + kInvPhi * (b - a);
      fd = f(d);
    }
  }
  const double x = 0.5 * (a + b);
  return GoldenResult{x, f(x), a, b, it};
}

}  // namespace qprobe

#endif  // QPROBE_OPTIMIZE_HPP
