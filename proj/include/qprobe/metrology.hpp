#ifndef QPROBE_METROLOGY_HPP
#define QPROBE_METROLOGY_HPP

// Fisher information, quantum Fisher information and quantum signal-to-noise
// ratio (QSNR) for estimating g, and the interaction time that maximizes the
// QSNR.

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <span>
#include <vector>

#include "qprobe/dynamics.hpp"
#include "qprobe/errors.hpp"
#include "qprobe/kernels.hpp"
#include "qprobe/optimize.hpp"
#include "qprobe/parallel.hpp"

namespace qprobe {

/// Beyond this value of 4 beta the information is below double range and is
/// reported as zero.
inline constexpr double kMaxDecayExponent = 700.0;

/// Quantum Fisher information of the dephased family with respect to g:
///   H = 4 sin^2(theta) (d beta/dg)^2 / (e^{4 beta} - 1).
inline double qfi(const NoiseKernel& kernel, AdimensionalPoint point, double theta = std::numbers::pi / 2) {
  if (point.tau() == 0.0) return 0.0;
  const double b = beta(kernel, point);
  if (4.0 * b > kMaxDecayExponent) return 0.0;
  const double s = std::sin(theta);
  const double db = dbeta_dg(kernel, point);
  return 4.0 * s * s * db * db / std::expm1(4.0 * b);
}

/// Fisher information of the +-1 statistics of the rotating-frame sigma_x
/// measurement on the |+> probe, summed outcome by outcome.
inline double fisher_information(const NoiseKernel& kernel, AdimensionalPoint point) {
  if (point.tau() == 0.0) return 0.0;
  const double b = beta(kernel, point);
  if (4.0 * b > kMaxDecayExponent) return 0.0;
  const double p_minus = -0.5 * std::expm1(-2.0 * b);
  const double p_plus = 1.0 - p_minus;
  const double dp = std::exp(-2.0 * b) * dbeta_dg(kernel, point);  // |d p_pm / dg|
  return dp * dp / p_plus + dp * dp / p_minus;
}

/// R = g^2 H at the optimal preparation theta = pi/2.
inline double qsnr(const NoiseKernel& kernel, AdimensionalPoint point) {
  return point.g() * point.g() * qfi(kernel, point);
}

/// The Ornstein-Uhlenbeck QSNR written out directly:
///   R = 4 e^{-2 g tau} (1 - e^{g tau} + g tau)^2 / (g^2 (e^{4 (tau + (e^{-g tau} - 1)/g)} - 1)).
/// Used to cross-check the composition g^2 * qfi.
inline double qsnr_ou_closed_form(AdimensionalPoint point) {
  const double g = point.g();
  const double x = g * point.tau();
  if (x == 0.0) return 0.0;
  const double exponent = 4.0 * detail::exp_remainder(-x) / g;
  if (exponent > kMaxDecayExponent) return 0.0;
  // e^{-x} (e^x - 1 - x); past x ~ 709 e^x overflows, so use 1 - e^{-x} - x e^{-x}.
  const double bracket = x < 700.0 ? std::exp(-x) * detail::exp_remainder(x) : -std::expm1(-x) - x * std::exp(-x);
  return 4.0 * bracket * bracket / (g * g * std::expm1(exponent));
}

struct MetrologyPoint {
  double g = 0.0;
  double tau = 0.0;
  double qfi = 0.0;
  double fi = 0.0;
  double qsnr = 0.0;
};

inline MetrologyPoint evaluate(const NoiseKernel& kernel, AdimensionalPoint point) {
  MetrologyPoint m;
  m.g = point.g();
  m.tau = point.tau();
  m.qfi = qfi(kernel, point);
  m.fi = fisher_information(kernel, point);
  m.qsnr = m.g * m.g * m.qfi;
  return m;
}

/// Terms of the spectral QFI formula evaluated numerically.
struct QfiBreakdown {
  double total = 0.0;
  double classical = 0.0;    // sum_n (d p_n)^2 / p_n
  double eigenvector = 0.0;  // 2 sum_{n != m} (p_n - p_m)^2 / (p_n + p_m) |<p_m|d p_n>|^2
  bool eigenvector_skipped = false;
};

/// QFI from a numeric eigen-decomposition of the 2x2 density matrix at
/// g +- h, g +- 2h (h = fd_step * g) and five-point finite differences of the
/// eigenvalues and eigenvectors. Independent of the closed-form QFI; the
/// eigenvector term is dropped (and flagged) when the spectrum is degenerate.
inline QfiBreakdown qfi_numeric(const NoiseKernel& kernel, AdimensionalPoint point, double theta,
                                double fd_step = 1e-3, double omega0 = 0.0) {
  detail::require(fd_step > 0.0 && fd_step < 0.25, "finite-difference step must be small and positive");
  QfiBreakdown out;
  if (point.tau() == 0.0) return out;
  const double g = point.g();
  const double tau = point.tau();
  const double h = fd_step * g;

  struct Spectrum {
    Eigen::Vector2d values;
    Eigen::Matrix2cd vectors;  // columns, ascending eigenvalue order
  };
  auto spectrum_at = [&](double gg) {
    const DephasedQubit state{theta, 2.0 * omega0 * tau, beta(kernel, AdimensionalPoint(gg, tau))};
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2cd> solver(state.density_matrix());
    Spectrum s{solver.eigenvalues(), solver.eigenvectors()};
    // Fix the gauge: second component real and non-negative.
    for (int n = 0; n < 2; ++n) {
      const double mag = std::abs(s.vectors(1, n));
      if (mag > 0.0) s.vectors.col(n) *= std::conj(s.vectors(1, n)) / mag;
    }
    return s;
  };

  const std::array<double, 4> offsets{-2.0, -1.0, 1.0, 2.0};
  const std::array<double, 4> stencil{1.0, -8.0, 8.0, -1.0};
  const Spectrum centre = spectrum_at(g);
  Eigen::Vector2d dvalues = Eigen::Vector2d::Zero();
  Eigen::Matrix2cd dvectors = Eigen::Matrix2cd::Zero();
  for (std::size_t i = 0; i < offsets.size(); ++i) {
    const Spectrum s = spectrum_at(g + offsets[i] * h);
    dvalues += stencil[i] * s.values;
    dvectors += stencil[i] * s.vectors;
  }
  dvalues /= 12.0 * h;
  dvectors /= 12.0 * h;

  for (int n = 0; n < 2; ++n)
    if (centre.values(n) > 0.0) out.classical += dvalues(n) * dvalues(n) / centre.values(n);

  const double gap = std::abs(centre.values(1) - centre.values(0));
  if (gap < 1e-10) {
    out.eigenvector_skipped = true;
  } else {
    for (int n = 0; n < 2; ++n) {
      const int m = 1 - n;
      const double overlap = std::norm(centre.vectors.col(m).dot(dvectors.col(n)));
      const double sum = centre.values(n) + centre.values(m);
      out.eigenvector += 2.0 * gap * gap / sum * overlap;
    }
  }
  out.total = out.classical + out.eigenvector;
  return out;
}

struct OptimalPoint {
  double g = 0.0;
  double tau_m = 0.0;
  double r_m = 0.0;
  int iterations = 0;
  double tau_lo = 0.0;  // final golden-section interval
  double tau_hi = 0.0;
};

/// Maximizes tau -> qsnr(g, tau). The search runs in log(tau): bracketing
/// starts at tau = 1/sqrt(g) with a factor-2 step that doubles on every
/// move, then golden-section refinement to a relative width `tol`.
inline OptimalPoint optimal_time(const NoiseKernel& kernel, double g, double tol = 1e-8) {
  detail::require(std::isfinite(g) && g > 0.0, "noise parameter g must be positive");
  detail::require(tol > 0.0, "tolerance must be positive");
  auto objective = [&](double log_tau) { return qsnr(kernel, AdimensionalPoint(g, std::exp(log_tau))); };
  const Bracket b = bracket_maximum(objective, -0.5 * std::log(g), std::numbers::ln2, 200);
  const GoldenResult r = golden_section_maximize(objective, b.lo, b.hi, tol);
  return OptimalPoint{g, std::exp(r.x), r.value, b.expansions + r.iterations, std::exp(r.lo), std::exp(r.hi)};
}

/// optimal_time over a list of g values, evaluated in parallel; results keep
/// the input order.
inline std::vector<OptimalPoint> optimal_times(const NoiseKernel& kernel, std::span<const double> g_values,
                                               double tol = 1e-8, unsigned threads = 1) {
  std::vector<OptimalPoint> out(g_values.size());
  parallel_for(g_values.size(), threads, [&](std::size_t i) { out[i] = optimal_time(kernel, g_values[i], tol); });
  return out;
}

enum class OptimalQuantity { tau_m, r_m };

enum class ScalingLaw {
  power_law,    // quantity = prefactor * g^exponent
  sqrt_linear,  // quantity = intercept + slope * sqrt(g)
};

struct ScalingFit {
  ScalingLaw law = ScalingLaw::power_law;
  double exponent = 0.0;
  double prefactor = 0.0;
  double intercept = 0.0;
  double slope = 0.0;
  /// RMS residual: in log units for power laws, relative to the mean value
  /// for the sqrt law.
  double residual = 0.0;
  std::size_t used = 0;
  std::size_t excluded = 0;  // intermediate g values dropped from the fit
  bool mixed_regime = false;
};

/// Regime boundaries for the asymptotic laws.
inline constexpr double kSmallGLimit = 1e-2;
inline constexpr double kLargeGLimit = 1e2;
inline constexpr double kMixedResidualThreshold = 0.02;

namespace detail {

struct LineFit {
  double intercept;
  double slope;
  double rms;
};

inline LineFit least_squares(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  const double slope = sxy / sxx;
  const double intercept = my - slope * mx;
  double ss = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = y[i] - (intercept + slope * x[i]);
    ss += r * r;
  }
  return {intercept, slope, std::sqrt(ss / n)};
}

}  // namespace detail

/// Fits the asymptotic law of tau_M or R_M against g. Points with
/// 1e-2 < g < 1e2 are excluded. tau_M and large-g R_M follow power laws;
/// small-g R_M is fitted as a - b sqrt(g). Needs at least five remaining
/// points spanning two decades.
inline ScalingFit scaling_fit(std::span<const OptimalPoint> points, OptimalQuantity quantity) {
  std::vector<const OptimalPoint*> used;
  std::size_t small = 0;
  std::size_t large = 0;
  for (const auto& p : points) {
    if (p.g <= kSmallGLimit) {
      ++small;
      used.push_back(&p);
    } else if (p.g >= kLargeGLimit) {
      ++large;
      used.push_back(&p);
    }
  }
  detail::require(used.size() >= 5, "scaling fit needs at least five g values inside an asymptotic regime");
  double g_min = used.front()->g;
  double g_max = g_min;
  for (const auto* p : used) {
    g_min = std::min(g_min, p->g);
    g_max = std::max(g_max, p->g);
  }
  detail::require(g_max >= 100.0 * g_min * (1.0 - 1e-12), "scaling fit needs g values spanning two decades");

  ScalingFit fit;
  fit.used = used.size();
  fit.excluded = points.size() - used.size();
  const bool mixed = small > 0 && large > 0;
  auto value = [&](const OptimalPoint* p) { return quantity == OptimalQuantity::tau_m ? p->tau_m : p->r_m; };

  std::vector<double> x, y;
  if (quantity == OptimalQuantity::r_m && !mixed && small > 0) {
    fit.law = ScalingLaw::sqrt_linear;
    double mean = 0.0;
    for (const auto* p : used) {
      x.push_back(std::sqrt(p->g));
      y.push_back(value(p));
      mean += value(p);
    }
    mean /= static_cast<double>(used.size());
    const auto line = detail::least_squares(x, y);
    fit.intercept = line.intercept;
    fit.slope = line.slope;
    fit.residual = line.rms / std::abs(mean);
  } else {
    fit.law = ScalingLaw::power_law;
    for (const auto* p : used) {
      x.push_back(std::log(p->g));
      y.push_back(std::log(value(p)));
    }
    const auto line = detail::least_squares(x, y);
    fit.exponent = line.slope;
    fit.prefactor = std::exp(line.intercept);
    fit.residual = line.rms;
  }
  fit.mixed_regime = mixed || fit.residual > kMixedResidualThreshold;
  return fit;
}

inline ScalingFit scaling_fit(const NoiseKernel& kernel, std::span<const double> g_values, OptimalQuantity quantity,
                              unsigned threads = 1) {
  for (double g : g_values) detail::require(std::isfinite(g) && g > 0.0, "g values must be positive");
  const auto points = optimal_times(kernel, g_values, 1e-8, threads);
  return scaling_fit(std::span<const OptimalPoint>(points), quantity);
}

}  // namespace qprobe

#endif  // QPROBE_METROLOGY_HPP
