#ifndef QPROBE_TRAJECTORIES_HPP
#define QPROBE_TRAJECTORIES_HPP

// Monte Carlo check of the dephasing law: sample the Gaussian field B(t),
// integrate the noise phase phi(tau) and average e^{2 i phi}. The average
// should reproduce e^{-2 beta(g, tau)}.

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <cstdio>
#include <memory>
#include <ostream>
#include <random>
#include <string>
#include <vector>

#include "qprobe/errors.hpp"
#include "qprobe/kernels.hpp"
#include "qprobe/parallel.hpp"
#include "qprobe/random.hpp"

namespace qprobe {

using SampleMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Field samples B(k dt), k = 0 .. n_steps - 1, one row per trajectory.
struct TrajectoryEnsemble {
  NoiseKernel kernel = NoiseKernel::ornstein_uhlenbeck();
  double g = 1.0;
  double dt = 1e-3;
  SampleMatrix samples;
  std::uint64_t seed = 0;

  Eigen::Index n_traj() const { return samples.rows(); }
  Eigen::Index n_steps() const { return samples.cols(); }
};

struct CoherenceEstimate {
  double value = 1.0;           // |<e^{2 i phi(tau)}>|
  double standard_error = 0.0;  // delete-one-group jackknife
  std::size_t n_traj = 0;
  double dt = 0.0;
};

/// Step that resolves the correlation time 1/g with at least 100 points.
inline double default_time_step(double g) { return 1e-3 * std::min(1.0, 1.0 / g); }

namespace detail {

// Generates one trajectory per (seed, index). The OU process uses its exact
// AR(1) update; other kernels use a Cholesky factor of the covariance on the
// time grid.
class PathSampler {
 public:
  PathSampler(const NoiseKernel& kernel, double g, Eigen::Index n_steps, double dt)
      : kernel_(kernel), g_(g), n_steps_(n_steps), dt_(dt) {
    detail::require(std::isfinite(g) && g > 0.0, "noise parameter g must be positive");
    detail::require(n_steps >= 1, "trajectory needs at least one time point");
    detail::require(std::isfinite(dt) && dt > 0.0, "time step must be positive");
    if (kernel.kind() == KernelKind::ornstein_uhlenbeck) {
      variance_ = 0.5 * g;
      decay_ = std::exp(-g * dt);
      innovation_ = std::sqrt(-variance_ * std::expm1(-2.0 * g * dt));
    } else {
      factorize();
    }
  }

  bool autoregressive() const { return kernel_.kind() == KernelKind::ornstein_uhlenbeck; }
  Eigen::Index n_steps() const { return n_steps_; }
  const Eigen::MatrixXd& factor() const { return factor_; }

  void fill(std::uint64_t seed, Eigen::Ref<Eigen::RowVectorXd> out) const {
    Engine rng = make_engine(seed);
    std::normal_distribution<double> normal;
    if (autoregressive()) {
      double b = std::sqrt(variance_) * normal(rng);
      out(0) = b;
      for (Eigen::Index k = 1; k < n_steps_; ++k) {
        b = decay_ * b + innovation_ * normal(rng);
        out(k) = b;
      }
      return;
    }
    Eigen::VectorXd z(n_steps_);
    for (Eigen::Index k = 0; k < n_steps_; ++k) z(k) = normal(rng);
    out = (factor_.triangularView<Eigen::Lower>() * z).transpose();
  }

  /// Trapezoidal phase over the first `intervals` steps of the trajectory
  /// generated from `seed`, without storing the path.
  double phase(std::uint64_t seed, Eigen::Index intervals, const Eigen::VectorXd& projected) const {
    Engine rng = make_engine(seed);
    std::normal_distribution<double> normal;
    if (autoregressive()) {
      double b = std::sqrt(variance_) * normal(rng);
      double sum = 0.5 * b;
      for (Eigen::Index k = 1; k <= intervals; ++k) {
        b = decay_ * b + innovation_ * normal(rng);
        sum += (k == intervals) ? 0.5 * b : b;
      }
      return intervals == 0 ? 0.0 : sum * dt_;
    }
    // phi = w^T L z = (L^T w)^T z, with `projected` = L^T w precomputed.
    double sum = 0.0;
    for (Eigen::Index k = 0; k < n_steps_; ++k) sum += projected(k) * normal(rng);
    return sum;
  }

  /// L^T w for trapezoid weights w covering `intervals` steps.
  Eigen::VectorXd project_weights(Eigen::Index intervals) const {
    if (autoregressive()) return {};
    Eigen::VectorXd w = Eigen::VectorXd::Zero(n_steps_);
    if (intervals > 0) {
      w.head(intervals + 1).setConstant(dt_);
      w(0) = w(intervals) = 0.5 * dt_;
    }
    return factor_.triangularView<Eigen::Lower>().transpose() * w;
  }

 private:
  void factorize() {
    Eigen::MatrixXd cov(n_steps_, n_steps_);
    for (Eigen::Index i = 0; i < n_steps_; ++i)
      for (Eigen::Index j = 0; j <= i; ++j)
        cov(i, j) = cov(j, i) = detail::kernel_unchecked(kernel_, g_, static_cast<double>(i - j) * dt_);
    const double max_diag = cov.diagonal().maxCoeff();
    for (double jitter = 1e-12; jitter <= 1e-8 * (1.0 + 1e-9); jitter *= 2.0) {
      Eigen::MatrixXd shifted = cov;
      shifted.diagonal().array() += jitter * max_diag;
      Eigen::LLT<Eigen::MatrixXd> llt(shifted);
      if (llt.info() == Eigen::Success) {
        factor_ = llt.matrixL();
        return;
      }
    }
    throw numerical_failure("covariance factorization failed for the " + std::string(kernel_.name()) +
                            " kernel on a " + std::to_string(n_steps_) + "-point grid");
  }

  NoiseKernel kernel_;
  double g_;
  Eigen::Index n_steps_;
  double dt_;
  double variance_ = 0.0;
  double decay_ = 0.0;
  double innovation_ = 0.0;
  Eigen::MatrixXd factor_;
};

inline Eigen::Index intervals_for(double tau, double dt) {
  const double ratio = tau / dt;
  const double rounded = std::round(ratio);
  detail::require(std::abs(ratio - rounded) <= 1e-9 * std::max(1.0, ratio),
                  "tau must be a whole number of time steps");
  return static_cast<Eigen::Index>(rounded);
}

inline CoherenceEstimate jackknife_coherence(const std::vector<double>& phases) {
  CoherenceEstimate est;
  const std::size_t n = phases.size();
  est.n_traj = n;
  if (n == 0) return est;
  const std::size_t groups = std::min<std::size_t>(n, 100);
  std::vector<std::complex<double>> group_sum(groups);
  std::vector<std::size_t> group_count(groups, 0);
  std::complex<double> total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t grp = i * groups / n;
    const std::complex<double> z = std::polar(1.0, 2.0 * phases[i]);
    group_sum[grp] += z;
    ++group_count[grp];
    total += z;
  }
  est.value = std::abs(total / static_cast<double>(n));
  if (groups < 2) return est;
  std::vector<double> leave_out(groups);
  double mean = 0.0;
  for (std::size_t k = 0; k < groups; ++k) {
    leave_out[k] = std::abs((total - group_sum[k]) / static_cast<double>(n - group_count[k]));
    mean += leave_out[k];
  }
  mean /= static_cast<double>(groups);
  double ss = 0.0;
  for (double v : leave_out) ss += (v - mean) * (v - mean);
  est.standard_error = std::sqrt(ss * static_cast<double>(groups - 1) / static_cast<double>(groups));
  return est;
}

}  // namespace detail

/// Draws n_traj trajectories of n_steps points spaced by dt. Trajectory i is
/// generated from derive_seed(seed, i), so the ensemble is bit-identical for
/// any thread count.
inline TrajectoryEnsemble sample_trajectories(const NoiseKernel& kernel, double g, Eigen::Index n_steps, double dt,
                                              Eigen::Index n_traj, std::uint64_t seed, unsigned threads = 1) {
  detail::require(n_traj >= 1, "ensemble needs at least one trajectory");
  const detail::PathSampler sampler(kernel, g, n_steps, dt);
  TrajectoryEnsemble ens{kernel, g, dt, SampleMatrix(n_traj, n_steps), seed};
  parallel_for(static_cast<std::size_t>(n_traj), threads, [&](std::size_t i) {
    sampler.fill(derive_seed(seed, i), ens.samples.row(static_cast<Eigen::Index>(i)));
  });
  return ens;
}

/// Averages e^{2 i phi(tau)} over a stored ensemble, with phi the trapezoidal
/// integral of each row up to tau (a whole number of steps).
inline CoherenceEstimate coherence_monte_carlo(const TrajectoryEnsemble& ensemble, double tau) {
  detail::require(tau >= 0.0, "tau must be non-negative");
  const Eigen::Index intervals = detail::intervals_for(tau, ensemble.dt);
  detail::require(intervals < ensemble.n_steps(), "tau lies beyond the sampled time window");
  std::vector<double> phases(static_cast<std::size_t>(ensemble.n_traj()), 0.0);
  if (intervals > 0) {
    for (Eigen::Index i = 0; i < ensemble.n_traj(); ++i) {
      const auto row = ensemble.samples.row(i);
      double sum = 0.5 * row(0);
      for (Eigen::Index k = 1; k <= intervals; ++k) sum += (k == intervals) ? 0.5 * row(k) : row(k);
      phases[static_cast<std::size_t>(i)] = sum * ensemble.dt;
    }
  }
  auto est = detail::jackknife_coherence(phases);
  est.dt = ensemble.dt;
  return est;
}

struct MonteCarloOptions {
  std::size_t n_traj = 10000;
  double dt = 0.0;  // 0 selects default_time_step(g), refined so tau is on the grid
  std::uint64_t seed = 0;
  unsigned threads = 1;
  /// Cap on grid points for kernels sampled through a dense Cholesky factor.
  Eigen::Index max_factorized_points = 2049;
};

/// Time step actually used by the streaming estimator for (kernel, g, tau).
inline double monte_carlo_time_step(const NoiseKernel& kernel, double g, double tau, const MonteCarloOptions& opt) {
  const double target = opt.dt > 0.0 ? opt.dt : default_time_step(g);
  if (tau == 0.0) return target;
  Eigen::Index intervals = static_cast<Eigen::Index>(std::ceil(tau / target - 1e-9));
  if (kernel.kind() != KernelKind::ornstein_uhlenbeck && opt.dt <= 0.0)
    intervals = std::min(intervals, opt.max_factorized_points - 1);
  return tau / static_cast<double>(std::max<Eigen::Index>(intervals, 1));
}

/// Streaming version: generates trajectories on the fly and keeps only their
/// phases. Gives the same phases as sampling the ensemble first.
inline CoherenceEstimate coherence_monte_carlo(const NoiseKernel& kernel, double g, double tau,
                                               const MonteCarloOptions& opt) {
  detail::require(tau >= 0.0, "tau must be non-negative");
  detail::require(opt.n_traj >= 1, "need at least one trajectory");
  const double dt = monte_carlo_time_step(kernel, g, tau, opt);
  const Eigen::Index intervals = detail::intervals_for(tau, dt);
  std::vector<double> phases(opt.n_traj, 0.0);
  if (intervals > 0) {
    const detail::PathSampler sampler(kernel, g, intervals + 1, dt);
    const Eigen::VectorXd projected = sampler.project_weights(intervals);
    parallel_for(opt.n_traj, opt.threads,
                 [&](std::size_t i) { phases[i] = sampler.phase(derive_seed(opt.seed, i), intervals, projected); });
  }
  auto est = detail::jackknife_coherence(phases);
  est.dt = dt;
  return est;
}

/// One row per trajectory: index followed by the field values.
inline void write_csv(std::ostream& out, const TrajectoryEnsemble& ensemble) {
  out << "trajectory";
  for (Eigen::Index k = 0; k < ensemble.n_steps(); ++k) out << ",t" << k;
  out << '\n';
  char buf[32];
  for (Eigen::Index i = 0; i < ensemble.n_traj(); ++i) {
    out << i;
    for (Eigen::Index k = 0; k < ensemble.n_steps(); ++k) {
      std::snprintf(buf, sizeof buf, "%.17g", ensemble.samples(i, k));
      out << ',' << buf;
    }
    out << '\n';
  }
}

}  // namespace qprobe

#endif  // QPROBE_TRAJECTORIES_HPP
