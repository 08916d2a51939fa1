#ifndef QPROBE_KERNELS_HPP
#define QPROBE_KERNELS_HPP

// Stationary autocorrelation kernels of the classical field and the
// dephasing exponent beta(g, tau) = int_0^tau int_0^tau K(s - s') ds ds'.
//
// Everything is expressed in units where the damping rate is one: the noise
// parameter is g = gamma / Gamma and time is tau = Gamma t.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "qprobe/errors.hpp"

namespace qprobe {

enum class KernelKind { ornstein_uhlenbeck, gaussian, power_law };

/// Which stochastic process drives the field. Immutable once built.
class NoiseKernel {
 public:
  static NoiseKernel ornstein_uhlenbeck() { return NoiseKernel(KernelKind::ornstein_uhlenbeck, 0.0); }
  static NoiseKernel gaussian() { return NoiseKernel(KernelKind::gaussian, 0.0); }

  /// Power-law kernel; requires alpha > 2 (strict).
  static NoiseKernel power_law(double alpha = kDefaultAlpha) {
    detail::require(std::isfinite(alpha) && alpha > 2.0,
                    "power-law kernel requires alpha > 2, got " + std::to_string(alpha));
    return NoiseKernel(KernelKind::power_law, alpha);
  }

  /// Parses the short names used on the command line: ou, gauss, pl.
  static NoiseKernel from_name(std::string_view name, double alpha = kDefaultAlpha) {
    if (name == "ou") return ornstein_uhlenbeck();
    if (name == "gauss" || name == "g") return gaussian();
    if (name == "pl") return power_law(alpha);
    throw invalid_parameter("unknown kernel '" + std::string(name) + "' (expected ou, gauss or pl)");
  }

  KernelKind kind() const noexcept { return kind_; }

  /// Exponent of the power-law kernel; empty for the other kinds.
  std::optional<double> alpha() const noexcept {
    if (kind_ == KernelKind::power_law) return alpha_;
    return std::nullopt;
  }

  std::string_view name() const noexcept {
    switch (kind_) {
      case KernelKind::ornstein_uhlenbeck: return "ou";
      case KernelKind::gaussian: return "gauss";
      case KernelKind::power_law: return "pl";
    }
    return "?";
  }

  friend bool operator==(const NoiseKernel&, const NoiseKernel&) = default;

  static constexpr double kDefaultAlpha = 3.0;

 private:
  NoiseKernel(KernelKind kind, double alpha) : kind_(kind), alpha_(alpha) {}

  KernelKind kind_;
  double alpha_;
};

/// (g, tau) with g > 0 and tau >= 0.
class AdimensionalPoint {
 public:
  AdimensionalPoint(double g, double tau) : g_(g), tau_(tau) {
    detail::require(std::isfinite(g) && g > 0.0, "noise parameter g must be positive and finite");
    detail::require(std::isfinite(tau) && tau >= 0.0, "interaction time tau must be non-negative and finite");
  }

  /// Normalizes dimensional inputs: g = gamma / Gamma, tau = Gamma t.
  static AdimensionalPoint from_dimensional(double gamma, double damping, double t) {
    detail::require(std::isfinite(damping) && damping > 0.0, "damping rate must be positive");
    return AdimensionalPoint(gamma / damping, damping * t);
  }

  double g() const noexcept { return g_; }
  double tau() const noexcept { return tau_; }

 private:
  double g_;
  double tau_;
};

namespace detail {

// Below this value of g*tau (scaled by alpha - 1 for the power law) the
// closed forms lose digits to cancellation and convergent series are summed
// instead.
inline constexpr double kSeriesThreshold = 0.1;

inline double series_limit(const NoiseKernel& kernel) {
  if (kernel.kind() != KernelKind::power_law) return kSeriesThreshold;
  return kSeriesThreshold / std::max(1.0, *kernel.alpha() - 1.0);
}

/// e^y - 1 - y, accurate for all y; summed term by term when |y| is small.
inline double exp_remainder(double y) {
  if (std::abs(y) >= kSeriesThreshold) return std::expm1(y) - y;
  double term = 0.5 * y * y;
  double sum = 0.0;
  for (int k = 3; k < 30 && term != 0.0; ++k) {
    sum += term;
    term *= y / k;
  }
  return sum;
}

/// sum_{k>=2} w(k) binom(-m, k) x^k for 0 <= x (m + 1) < 1.
template <class Weight>
double binomial_tail(double m, double x, Weight w) {
  double c = -m * x;  // binom(-m, 1) x
  double sum = 0.0;
  for (int k = 2; k < 200; ++k) {
    c *= (-m - (k - 1)) / k * x;
    const double term = w(k) * c;
    sum += term;
    if (std::abs(term) <= 1e-18 * std::abs(sum)) break;
  }
  return sum;
}

inline double kernel_unchecked(const NoiseKernel& kernel, double g, double dt) {
  const double u = std::abs(dt);
  switch (kernel.kind()) {
    case KernelKind::ornstein_uhlenbeck:
      return 0.5 * g * std::exp(-g * u);
    case KernelKind::gaussian:
      return g * std::numbers::inv_sqrtpi * std::exp(-(g * u) * (g * u));
    case KernelKind::power_law: {
      const double a = *kernel.alpha();
      return 0.5 * (a - 1.0) * g * std::pow(g * u + 1.0, -a);
    }
  }
  return 0.0;
}

}  // namespace detail

/// K(dt) at noise parameter g. Even in dt.
inline double kernel_value(const NoiseKernel& kernel, double g, double dt) {
  detail::require(std::isfinite(g) && g > 0.0, "noise parameter g must be positive and finite");
  return detail::kernel_unchecked(kernel, g, dt);
}

/// Closed-form dephasing exponent.
inline double beta(const NoiseKernel& kernel, AdimensionalPoint point) {
  const double g = point.g();
  const double x = g * point.tau();
  const bool series = x < detail::series_limit(kernel);
  switch (kernel.kind()) {
    case KernelKind::ornstein_uhlenbeck:
      return detail::exp_remainder(-x) / g;
    case KernelKind::gaussian: {
      if (!series) return (x * std::erf(x) + std::expm1(-x * x) * std::numbers::inv_sqrtpi) / g;
      // sum_n (-1)^n x^{2n+2} / (n! (2n+1) (n+1))
      const double x2 = x * x;
      double power = x2;  // (-1)^n x^{2n+2} / n!
      double sum = 0.0;
      for (int n = 0; n < 30 && power != 0.0; ++n) {
        sum += power / ((2.0 * n + 1.0) * (n + 1.0));
        power *= -x2 / (n + 1.0);
      }
      return sum * std::numbers::inv_sqrtpi / g;
    }
    case KernelKind::power_law: {
      const double m = *kernel.alpha() - 2.0;
      if (series) return detail::binomial_tail(m, x, [](int) { return 1.0; }) / (m * g);
      return (std::expm1(-m * std::log1p(x)) + m * x) / (m * g);
    }
  }
  return 0.0;
}

/// d beta / d g, obtained by differentiating the closed forms. Zero at tau = 0.
inline double dbeta_dg(const NoiseKernel& kernel, AdimensionalPoint point) {
  const double g = point.g();
  const double x = g * point.tau();
  const bool series = x < detail::series_limit(kernel);
  const double g2 = g * g;
  switch (kernel.kind()) {
    case KernelKind::ornstein_uhlenbeck:
      // 1 - e^{-x} (1 + x) = e^{-x} (e^x - 1 - x)
      if (series) return std::exp(-x) * detail::exp_remainder(x) / g2;
      return (-std::expm1(-x) - x * std::exp(-x)) / g2;
    case KernelKind::gaussian:
      return -std::expm1(-x * x) * std::numbers::inv_sqrtpi / g2;
    case KernelKind::power_law: {
      const double a = *kernel.alpha();
      const double m = a - 2.0;
      if (series) return detail::binomial_tail(m, x, [](int k) { return k - 1.0; }) / (m * g2);
      return (-std::expm1(-m * std::log1p(x)) - m * x * std::pow(1.0 + x, 1.0 - a)) / (m * g2);
    }
  }
  return 0.0;
}

/// Deterministic quadrature settings for beta_numeric.
struct QuadratureSpec {
  enum class Rule { midpoint, simpson };

  /// tensor_square is the plain double loop over [0,tau]^2. graded_triangle
  /// integrates 2 * int_0^tau ds int_0^s K(u) du on nodes stretched
  /// logarithmically toward u = 0, which keeps the integrand smooth and
  /// resolved even when the correlation time 1/g is far below tau.
  enum class Layout { tensor_square, graded_triangle };

  int subdivisions = 512;
  Rule rule = Rule::simpson;
  Layout layout = Layout::graded_triangle;

  void validate() const {
    detail::require(subdivisions >= 2, "quadrature needs at least 2 subdivisions");
    detail::require(rule != Rule::simpson || subdivisions % 2 == 0,
                    "Simpson rule needs an even number of subdivisions");
  }
};

namespace detail {

struct UnitRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

// Composite rule on [0, 1].
inline UnitRule unit_rule(const QuadratureSpec& quad) {
  const int n = quad.subdivisions;
  UnitRule r;
  if (quad.rule == QuadratureSpec::Rule::midpoint) {
    r.nodes.resize(n);
    r.weights.assign(n, 1.0 / n);
    for (int i = 0; i < n; ++i) r.nodes[i] = (i + 0.5) / n;
  } else {
    r.nodes.resize(n + 1);
    r.weights.resize(n + 1);
    for (int i = 0; i <= n; ++i) {
      r.nodes[i] = static_cast<double>(i) / n;
      const double w = (i == 0 || i == n) ? 1.0 : (i % 2 == 1 ? 4.0 : 2.0);
      r.weights[i] = w / (3.0 * n);
    }
  }
  return r;
}

// u(v) = L * expm1(c v) / expm1(c) with c = log1p(g L); returns u and du/dv.
struct GradedMap {
  double length;
  double c;
  double scale;

  GradedMap(double length_, double g) : length(length_), c(std::log1p(g * length_)) {
    scale = c > 1e-12 ? length / std::expm1(c) : 0.0;
  }

  void operator()(double v, double& u, double& du) const {
    if (scale == 0.0) {
      u = length * v;
      du = length;
      return;
    }
    u = scale * std::expm1(c * v);
    du = scale * c * std::exp(c * v);
  }
};

}  // namespace detail

/// beta by deterministic two-dimensional quadrature of the kernel. Serves as
/// the independent check of the closed forms.
inline double beta_numeric(const NoiseKernel& kernel, AdimensionalPoint point,
                           const QuadratureSpec& quad = {}) {
  quad.validate();
  const double g = point.g();
  const double tau = point.tau();
  if (tau == 0.0) return 0.0;
  const auto rule = detail::unit_rule(quad);
  const std::size_t n = rule.nodes.size();

  if (quad.layout == QuadratureSpec::Layout::tensor_square) {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double row = 0.0;
      for (std::size_t j = 0; j < n; ++j)
        row += rule.weights[j] * detail::kernel_unchecked(kernel, g, tau * (rule.nodes[i] - rule.nodes[j]));
      total += rule.weights[i] * row;
    }
    return total * tau * tau;
  }

  const detail::GradedMap outer(tau, g);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0.0;
    double ds = 0.0;
    outer(rule.nodes[i], s, ds);
    if (s == 0.0) continue;
    const detail::GradedMap inner(s, g);
    double partial = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      double u = 0.0;
      double du = 0.0;
      inner(rule.nodes[j], u, du);
      partial += rule.weights[j] * detail::kernel_unchecked(kernel, g, u) * du;
    }
    total += rule.weights[i] * partial * ds;
  }
  return 2.0 * total;
}

}  // namespace qprobe

#endif  // QPROBE_KERNELS_HPP
