#ifndef QPROBE_DYNAMICS_HPP
#define QPROBE_DYNAMICS_HPP

// Dephased qubit state, its eigen-system and the statistics of the optimal
// rotating-frame sigma_x measurement.

#include <Eigen/Core>

#include <cmath>
#include <complex>
#include <numbers>

#include "qprobe/errors.hpp"
#include "qprobe/kernels.hpp"

namespace qprobe {

/// Initial pure state cos(theta/2)|0> + sin(theta/2)|1> with qubit energy omega0.
class ProbeState {
 public:
  ProbeState(double theta, double omega0 = 0.0) : theta_(theta), omega0_(omega0) {
    detail::require(theta > 0.0 && theta < std::numbers::pi, "probe polar angle must lie in (0, pi)");
    detail::require(std::isfinite(omega0), "qubit energy must be finite");
  }

  /// The equal superposition |+>, which maximizes the quantum Fisher information.
  static ProbeState optimal(double omega0 = 0.0) { return ProbeState(std::numbers::pi / 2, omega0); }

  double theta() const noexcept { return theta_; }
  double omega0() const noexcept { return omega0_; }

 private:
  double theta_;
  double omega0_;
};

/// Noise-averaged probe state:
///   rho = 1/2 [[1 + cos(theta), sin(theta) e^{-i phase} e^{-2 beta}],
///              [sin(theta) e^{+i phase} e^{-2 beta}, 1 - cos(theta)]]
/// with phase = 2 omega0 t.
struct DephasedQubit {
  double theta = std::numbers::pi / 2;
  double phase = 0.0;
  double beta = 0.0;

  /// Modulus of the off-diagonal element.
  double coherence() const { return 0.5 * std::sin(theta) * std::exp(-2.0 * beta); }

  Eigen::Matrix2cd density_matrix() const {
    using namespace std::complex_literals;
    const double c = std::cos(theta);
    const std::complex<double> off = coherence() * std::exp(-1i * phase);
    Eigen::Matrix2cd rho;
    rho << 0.5 * (1.0 + c), off, std::conj(off), 0.5 * (1.0 - c);
    return rho;
  }
};

/// Evolves the probe for a time tau in units of 1/Gamma.
inline DephasedQubit evolve(const ProbeState& probe, const NoiseKernel& kernel, AdimensionalPoint point) {
  return DephasedQubit{probe.theta(), 2.0 * probe.omega0() * point.tau(), beta(kernel, point)};
}

/// Eigen-decomposition of a DephasedQubit.
///
/// The eigenvectors are kept implicit: the Bloch vector has azimuth
/// 2 * frame_phase and polar angle bloch_polar, and the eigenvector with
/// sign s is
///   s = +1:  e^{-2i frame_phase} cos(bloch_polar/2) |0> + sin(bloch_polar/2) |1>
///   s = -1: -e^{-2i frame_phase} sin(bloch_polar/2) |0> + cos(bloch_polar/2) |1>
/// which at bloch_polar = pi/2 is (+-e^{-2i omega0 t}|0> + |1>)/sqrt(2).
struct Eigensystem {
  double p_plus = 1.0;
  double p_minus = 0.0;
  double frame_phase = 0.0;  // omega0 t
  double bloch_polar = std::numbers::pi / 2;

  Eigen::Vector2cd vector(int sign) const {
    using namespace std::complex_literals;
    const std::complex<double> rot = std::exp(-2i * frame_phase);
    const double c = std::cos(0.5 * bloch_polar);
    const double s = std::sin(0.5 * bloch_polar);
    Eigen::Vector2cd v;
    if (sign >= 0)
      v << rot * c, s;
    else
      v << -rot * s, c;
    return v;
  }

  /// Measurement projector onto vector(sign).
  Eigen::Matrix2cd projector(int sign) const {
    const Eigen::Vector2cd v = vector(sign);
    return v * v.adjoint();
  }
};

inline Eigensystem eigensystem(const DephasedQubit& state) {
  const double c = std::cos(state.theta);
  const double s = std::sin(state.theta);
  const double decay = std::exp(-2.0 * state.beta);
  const double radius = std::sqrt(c * c + s * s * decay * decay);
  Eigensystem e;
  // (1 - r)/2 rewritten as (1 - r^2) / (2 (1 + r)) to keep small p_minus accurate.
  e.p_minus = -s * s * std::expm1(-4.0 * state.beta) / (2.0 * (1.0 + radius));
  e.p_plus = 0.5 * (1.0 + radius);
  e.frame_phase = 0.5 * state.phase;
  e.bloch_polar = std::atan2(s * decay, c);
  return e;
}

struct OutcomeProbabilities {
  double plus = 1.0;
  double minus = 0.0;
};

/// Statistics of the +-1 outcomes of the optimal measurement on the |+>
/// probe: p_pm = (1 +- e^{-2 beta}) / 2.
inline OutcomeProbabilities outcome_probabilities(const NoiseKernel& kernel, AdimensionalPoint point) {
  const double b = beta(kernel, point);
  OutcomeProbabilities p;
  p.minus = -0.5 * std::expm1(-2.0 * b);
  p.plus = 1.0 - p.minus;
  return p;
}

/// Smallest attainable p_plus at interaction time tau (beta saturates at tau).
inline double saturation_floor(double tau) { return 0.5 * (1.0 + std::exp(-2.0 * tau)); }

}  // namespace qprobe

#endif  // QPROBE_DYNAMICS_HPP
