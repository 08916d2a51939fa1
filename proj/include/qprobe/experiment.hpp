#ifndef QPROBE_EXPERIMENT_HPP
#define QPROBE_EXPERIMENT_HPP

// Simulated repeated measurements of the optimal observable, the inversion
// (maximum-likelihood) estimate of g, its error-propagation variance and
// campaign statistics against the quantum Cramer-Rao bound.

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <ostream>
#include <random>
#include <span>
#include <vector>

#include "qprobe/dynamics.hpp"
#include "qprobe/errors.hpp"
#include "qprobe/format.hpp"
#include "qprobe/kernels.hpp"
#include "qprobe/metrology.hpp"
#include "qprobe/parallel.hpp"
#include "qprobe/random.hpp"

namespace qprobe {

/// M repetitions of the measurement at time tau, N of which gave +1.
struct MeasurementSample {
  std::uint64_t m_total = 1;
  std::uint64_t n_plus = 1;
  double tau = 0.0;
  std::uint64_t seed = 0;

  void validate() const {
    detail::require(m_total >= 1, "measurement count must be at least one");
    detail::require(n_plus <= m_total, "+1 count cannot exceed the measurement count");
    detail::require(std::isfinite(tau) && tau >= 0.0, "interaction time must be non-negative");
  }

  /// Observed fraction of -1 outcomes, (M - N)/M.
  double minus_fraction() const {
    return static_cast<double>(m_total - n_plus) / static_cast<double>(m_total);
  }
};

/// Draws N ~ Binomial(M, p_plus(g_true, tau)).
inline MeasurementSample simulate_measurements(const NoiseKernel& kernel, double g_true, double tau,
                                               std::uint64_t m_total, std::uint64_t seed) {
  const AdimensionalPoint point(g_true, tau);
  detail::require(m_total >= 1, "measurement count must be at least one");
  const auto p = outcome_probabilities(kernel, point);
  MeasurementSample s{m_total, m_total, tau, seed};
  if (p.minus > 0.0) {
    Engine engine = make_engine(seed);
    std::binomial_distribution<std::uint64_t> minus_count(m_total, p.minus);
    s.n_plus = m_total - minus_count(engine);
  }
  return s;
}

/// N ln p_plus + (M - N) ln p_minus, with 0 ln 0 = 0.
inline double log_likelihood(const NoiseKernel& kernel, double g, const MeasurementSample& sample) {
  sample.validate();
  const auto p = outcome_probabilities(kernel, AdimensionalPoint(g, sample.tau));
  const double n = static_cast<double>(sample.n_plus);
  const double m = static_cast<double>(sample.m_total - sample.n_plus);
  double ll = 0.0;
  if (n > 0.0) ll += n * std::log1p(-p.minus);
  if (m > 0.0) ll += p.minus > 0.0 ? m * std::log(p.minus) : -std::numeric_limits<double>::infinity();
  return ll;
}

/// Search interval for the inversion.
inline constexpr double kMinEstimate = 1e-8;
inline constexpr double kMaxEstimate = 1e8;
inline constexpr double kInversionTolerance = 1e-10;

enum class EstimateStatus {
  in_range,
  no_dephasing,    // N = M: g_hat = 0
  below_search,    // fraction of -1 below what g = 1e-8 produces: g_hat = 1e-8
  beyond_floor,    // N/M at or below the saturation floor: g_hat = 1e8
};

struct Estimate {
  double g_hat = 0.0;
  EstimateStatus status = EstimateStatus::in_range;
  bool in_range() const noexcept { return status == EstimateStatus::in_range; }
};

/// Inverts p_plus(g, tau) = N/M by bisection on log g over [1e-8, 1e8].
inline Estimate mle_estimate(const NoiseKernel& kernel, const MeasurementSample& sample) {
  sample.validate();
  detail::require(sample.tau > 0.0, "inversion needs a positive interaction time");
  if (sample.n_plus == sample.m_total) return {0.0, EstimateStatus::no_dephasing};
  const double target = sample.minus_fraction();
  if (target >= -0.5 * std::expm1(-2.0 * sample.tau)) return {kMaxEstimate, EstimateStatus::beyond_floor};
  auto p_minus = [&](double log_g) {
    return outcome_probabilities(kernel, AdimensionalPoint(std::exp(log_g), sample.tau)).minus;
  };
  double lo = std::log(kMinEstimate);
  double hi = std::log(kMaxEstimate);
  if (target <= p_minus(lo)) return {kMinEstimate, EstimateStatus::below_search};
  if (target >= p_minus(hi)) return {kMaxEstimate, EstimateStatus::beyond_floor};
  while (hi - lo > kInversionTolerance) {
    const double mid = 0.5 * (lo + hi);
    if (p_minus(mid) < target)
      lo = mid;
    else
      hi = mid;
  }
  return {std::exp(0.5 * (lo + hi)), EstimateStatus::in_range};
}

/// Error-propagation variance of the inversion estimator:
///   sigma^2 = p(1 - p) / (M (d p_plus / dg)^2) at p = N/M, g = g_hat.
/// Only defined for in-range estimates.
inline double mle_variance(const NoiseKernel& kernel, const MeasurementSample& sample, double g_hat) {
  sample.validate();
  detail::require(sample.n_plus < sample.m_total, "variance undefined when no dephasing was observed");
  detail::require(g_hat > 0.0 && g_hat < kMaxEstimate, "variance undefined for a boundary estimate");
  const AdimensionalPoint point(g_hat, sample.tau);
  const double dp = std::exp(-2.0 * beta(kernel, point)) * dbeta_dg(kernel, point);
  const double q = sample.minus_fraction();
  return q * (1.0 - q) / (static_cast<double>(sample.m_total) * dp * dp);
}

/// 1 / (M H(g_true, tau)).
inline double qcr_bound(const NoiseKernel& kernel, double g_true, double tau, std::uint64_t m_total) {
  return 1.0 / (static_cast<double>(m_total) * qfi(kernel, AdimensionalPoint(g_true, tau)));
}

struct EstimateRecord {
  double g_hat = 0.0;
  std::optional<double> variance;  // empty for boundary estimates
  double qcr_bound = 0.0;
  bool in_range = false;
};

inline EstimateRecord estimate(const NoiseKernel& kernel, const MeasurementSample& sample, double g_true) {
  const Estimate e = mle_estimate(kernel, sample);
  EstimateRecord r;
  r.g_hat = e.g_hat;
  r.in_range = e.in_range();
  if (r.in_range) r.variance = mle_variance(kernel, sample, e.g_hat);
  r.qcr_bound = qcr_bound(kernel, g_true, sample.tau, sample.m_total);
  return r;
}

enum class TauPolicy { optimal, fixed };

struct CampaignConfig {
  NoiseKernel kernel = NoiseKernel::ornstein_uhlenbeck();
  double g_true = 1.0;
  TauPolicy tau_policy = TauPolicy::optimal;
  double tau = 0.0;  // used with TauPolicy::fixed
  std::vector<std::uint64_t> m_schedule{100, 1000, 10000, 100000};
  std::uint64_t replicas = 100;
  std::uint64_t base_seed = 0;

  void validate() const {
    detail::require(std::isfinite(g_true) && g_true > 0.0, "g_true must be positive");
    if (tau_policy == TauPolicy::fixed)
      detail::require(std::isfinite(tau) && tau > 0.0, "fixed interaction time must be positive");
    detail::require(!m_schedule.empty(), "measurement schedule must not be empty");
    detail::require(m_schedule.front() >= 1, "measurement counts must be at least one");
    for (std::size_t i = 1; i < m_schedule.size(); ++i)
      detail::require(m_schedule[i] > m_schedule[i - 1], "measurement schedule must be strictly increasing");
    detail::require(replicas >= 1, "at least one replica is required");
  }

  double resolved_tau() const {
    return tau_policy == TauPolicy::fixed ? tau : optimal_time(kernel, g_true).tau_m;
  }
};

struct CampaignRecord {
  NoiseKernel kernel = NoiseKernel::ornstein_uhlenbeck();
  double g_true = 0.0;
  double tau = 0.0;
  std::uint64_t m_total = 0;
  std::uint64_t replica = 0;
  std::uint64_t seed = 0;
  std::uint64_t n_plus = 0;
  double g_hat = 0.0;
  bool in_range = false;
  std::optional<double> sigma2;
  double qcr_bound = 0.0;

  bool operator==(const CampaignRecord&) const = default;
};

/// Seed of replica `replica` at schedule position `schedule_index`.
inline std::uint64_t record_seed(std::uint64_t base_seed, std::size_t schedule_index, std::uint64_t replica) {
  return derive_seed(base_seed, schedule_index, replica);
}

/// Records ordered by schedule index, then replica.
inline std::vector<CampaignRecord> run_campaign(const CampaignConfig& config, unsigned threads = 1) {
  config.validate();
  const double tau = config.resolved_tau();
  const std::size_t per_m = static_cast<std::size_t>(config.replicas);
  std::vector<CampaignRecord> records(config.m_schedule.size() * per_m);
  parallel_for(records.size(), threads, [&](std::size_t i) {
    const std::size_t mi = i / per_m;
    const std::uint64_t replica = i % per_m;
    CampaignRecord& r = records[i];
    r.kernel = config.kernel;
    r.g_true = config.g_true;
    r.tau = tau;
    r.m_total = config.m_schedule[mi];
    r.replica = replica;
    r.seed = record_seed(config.base_seed, mi, replica);
    const auto sample = simulate_measurements(config.kernel, config.g_true, tau, r.m_total, r.seed);
    const auto e = estimate(config.kernel, sample, config.g_true);
    r.n_plus = sample.n_plus;
    r.g_hat = e.g_hat;
    r.in_range = e.in_range;
    r.sigma2 = e.variance;
    r.qcr_bound = e.qcr_bound;
  });
  return records;
}

/// Aggregates over the in-range replicas at one measurement count.
struct CampaignCell {
  double g_true = 0.0;
  double tau = 0.0;
  std::uint64_t m_total = 0;
  std::uint64_t replicas = 0;
  std::uint64_t in_range = 0;
  double exclusion_rate = 0.0;
  double mean_ratio = 0.0;          // mean of g_hat / g_true
  double sd_ratio = 0.0;            // replica spread of g_hat / g_true
  double se_ratio = 0.0;            // sd_ratio / sqrt(in_range)
  double empirical_variance = 0.0;  // sample variance of g_hat
  double mean_sigma2 = 0.0;         // mean reported error-propagation variance
  double qcr_bound = 0.0;
};

inline std::vector<CampaignCell> summarize(std::span<const CampaignRecord> records) {
  std::vector<CampaignCell> cells;
  std::size_t i = 0;
  while (i < records.size()) {
    std::size_t j = i;
    while (j < records.size() && records[j].m_total == records[i].m_total && records[j].g_true == records[i].g_true)
      ++j;
    CampaignCell c;
    c.g_true = records[i].g_true;
    c.tau = records[i].tau;
    c.m_total = records[i].m_total;
    c.qcr_bound = records[i].qcr_bound;
    c.replicas = j - i;
    double sum = 0.0;
    double sum_sigma2 = 0.0;
    for (std::size_t k = i; k < j; ++k) {
      if (!records[k].in_range) continue;
      ++c.in_range;
      sum += records[k].g_hat;
      sum_sigma2 += *records[k].sigma2;
    }
    const double n = static_cast<double>(c.in_range);
    c.exclusion_rate = 1.0 - n / static_cast<double>(c.replicas);
    if (c.in_range > 0) {
      const double mean = sum / n;
      double ss = 0.0;
      for (std::size_t k = i; k < j; ++k)
        if (records[k].in_range) ss += (records[k].g_hat - mean) * (records[k].g_hat - mean);
      c.mean_ratio = mean / c.g_true;
      c.mean_sigma2 = sum_sigma2 / n;
      if (c.in_range > 1) {
        c.empirical_variance = ss / (n - 1.0);
        c.sd_ratio = std::sqrt(c.empirical_variance) / c.g_true;
        c.se_ratio = c.sd_ratio / std::sqrt(n);
      }
    } else {
      c.mean_ratio = c.mean_sigma2 = c.empirical_variance = std::numeric_limits<double>::quiet_NaN();
    }
    cells.push_back(c);
    i = j;
  }
  return cells;
}

inline const char* const kCampaignCsvHeader = "kernel,alpha,g_true,tau,M,replica,seed,N,g_hat,in_range,sigma2,qcr_bound";

/// One row per record; alpha and sigma2 are left empty when undefined.
inline void write_csv(std::ostream& out, std::span<const CampaignRecord> records) {
  out << kCampaignCsvHeader << '\n';
  for (const auto& r : records) {
    out << r.kernel.name() << ',';
    if (r.kernel.alpha()) out << format_double(*r.kernel.alpha());
    out << ',' << format_double(r.g_true) << ',' << format_double(r.tau) << ',' << r.m_total << ',' << r.replica
        << ',' << r.seed << ',' << r.n_plus << ',' << format_double(r.g_hat) << ',' << (r.in_range ? 1 : 0) << ',';
    if (r.sigma2) out << format_double(*r.sigma2);
    out << ',' << format_double(r.qcr_bound) << '\n';
  }
}

}  // namespace qprobe

#endif  // QPROBE_EXPERIMENT_HPP
