#include "qprobe/metrology.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "oracles/finite_difference.hpp"
#include "oracles/grids.hpp"

namespace qprobe {
namespace {

using oracles::all_kernels;
using oracles::kGridG;
using oracles::kGridTau;

constexpr double kPi = std::numbers::pi;

// QFI of a qubit family from its Bloch vector r(g):
//   H = |dr|^2 + (r . dr)^2 / (1 - |r|^2),
// with r = (sin(theta) e^{-2 beta} cos(phi), sin(theta) e^{-2 beta} sin(phi), cos(theta))
// and d beta / dg taken by Richardson extrapolation.
double bloch_qfi(const NoiseKernel& k, double g, double tau, double theta, double phi) {
  auto beta_of = [&](double gg) { return beta(k, AdimensionalPoint(gg, tau)); };
  const double db = oracles::richardson_derivative(beta_of, g, 1e-2 * g);
  const double d = std::exp(-2.0 * beta_of(g));
  const double dd = -2.0 * d * db;
  const double s = std::sin(theta);
  const double r[3] = {s * d * std::cos(phi), s * d * std::sin(phi), std::cos(theta)};
  const double dr[3] = {s * dd * std::cos(phi), s * dd * std::sin(phi), 0.0};
  const double r2 = r[0] * r[0] + r[1] * r[1] + r[2] * r[2];
  const double dr2 = dr[0] * dr[0] + dr[1] * dr[1];
  const double rdr = r[0] * dr[0] + r[1] * dr[1];
  return dr2 + rdr * rdr / (1.0 - r2);
}

TEST(Qfi, UnitPointReferenceValues) {
  const AdimensionalPoint p(1.0, 1.0);
  EXPECT_NEAR(qfi(NoiseKernel::ornstein_uhlenbeck(), p), 0.083226067829273947495, 1e-15);
  EXPECT_NEAR(qfi(NoiseKernel::gaussian(), p), 0.084956182927613035797, 1e-15);
  EXPECT_NEAR(qfi(NoiseKernel::power_law(3.0), p), 0.039129410687416412955, 1e-15);
}

TEST(Qfi, MatchesBlochVectorFormulaForAnyPreparation) {
  for (const auto& k : all_kernels())
    for (double g : kGridG)
      for (double tau : kGridTau)
        for (double theta : {kPi / 2, kPi / 4, 0.3}) {
          const AdimensionalPoint p(g, tau);
          const double h = qfi(k, p, theta);
          const double oracle = bloch_qfi(k, g, tau, theta, 0.7);
          if (oracle < 1e-250) continue;
          EXPECT_NEAR(h / oracle, 1.0, 1e-8) << k.name() << " g=" << g << " tau=" << tau << " theta=" << theta;
        }
}

TEST(Qfi, NumericEigendecompositionAgrees) {
  for (const auto& k : all_kernels())
    for (double g : kGridG)
      for (double tau : kGridTau)
        for (double theta : {kPi / 2, kPi / 4}) {
          const AdimensionalPoint p(g, tau);
          const double h = qfi(k, p, theta);
          const auto numeric = qfi_numeric(k, p, theta, 1e-3, 0.9);
          if (h < 1e-200) continue;
          EXPECT_NEAR(numeric.total / h, 1.0, 1e-6) << k.name() << " g=" << g << " tau=" << tau << " theta=" << theta;
        }
}

TEST(Qfi, EigenvectorTermVanishesOnlyAtEquator) {
  const auto k = NoiseKernel::ornstein_uhlenbeck();
  const AdimensionalPoint p(1.0, 1.0);
  const auto equator = qfi_numeric(k, p, kPi / 2, 1e-3, 0.4);
  EXPECT_FALSE(equator.eigenvector_skipped);
  EXPECT_LT(std::abs(equator.eigenvector), 1e-10);
  const auto tilted = qfi_numeric(k, p, kPi / 4, 1e-3, 0.4);
  EXPECT_GT(tilted.eigenvector, 1e-3 * tilted.total);
}

TEST(Qfi, DegenerateSpectrumSkipsEigenvectorTerm) {
  // Fully dephased |+>: both eigenvalues are 1/2 to machine precision.
  const auto k = NoiseKernel::ornstein_uhlenbeck();
  const auto deg = qfi_numeric(k, AdimensionalPoint(1e4, 1e3), kPi / 2);
  EXPECT_TRUE(deg.eigenvector_skipped);
  EXPECT_EQ(deg.eigenvector, 0.0);
}

TEST(Qfi, OptimalPreparationIsTheEquator) {
  for (const auto& k : all_kernels())
    for (double g : kGridG)
      for (double tau : kGridTau) {
        const AdimensionalPoint p(g, tau);
        const double best = qfi(k, p, kPi / 2);
        for (double theta = 0.05; theta < kPi; theta += 0.05) EXPECT_LE(qfi(k, p, theta), best);
        EXPECT_EQ(qfi(k, p, 0.0), 0.0);
      }
}

TEST(Qfi, ZeroAtZeroTimeAndInDeepDephasing) {
  for (const auto& k : all_kernels()) {
    EXPECT_EQ(qfi(k, AdimensionalPoint(1.0, 0.0)), 0.0);
    EXPECT_EQ(fisher_information(k, AdimensionalPoint(1.0, 0.0)), 0.0);
    EXPECT_EQ(qfi(k, AdimensionalPoint(1.0, 1e4)), 0.0);
    EXPECT_EQ(fisher_information(k, AdimensionalPoint(1.0, 1e4)), 0.0);
  }
}

TEST(FisherInformation, SaturatesQfiAtOptimalMeasurement) {
  for (const auto& k : all_kernels())
    for (double g : kGridG)
      for (double tau : kGridTau) {
        const AdimensionalPoint p(g, tau);
        const double h = qfi(k, p);
        if (h == 0.0) continue;
        EXPECT_NEAR(fisher_information(k, p) / h, 1.0, 1e-12) << k.name() << " g=" << g << " tau=" << tau;
      }
}

TEST(Qsnr, OrnsteinUhlenbeckClosedFormIdentity) {
  const auto k = NoiseKernel::ornstein_uhlenbeck();
  for (double g : kGridG)
    for (double tau : kGridTau) {
      const AdimensionalPoint p(g, tau);
      const double r = qsnr(k, p);
      const double closed = qsnr_ou_closed_form(p);
      if (r == 0.0) {
        EXPECT_EQ(closed, 0.0);
        continue;
      }
      EXPECT_NEAR(closed / r, 1.0, 1e-12) << "g=" << g << " tau=" << tau;
    }
}

TEST(Qsnr, InvariantUnderRescalingOfTheDampingRate) {
  // gamma -> s gamma, Gamma -> s Gamma, t -> t / s leaves (g, tau) and R unchanged,
  // and gamma d/dgamma at fixed Gamma equals g d/dg.
  const auto k = NoiseKernel::gaussian();
  const double gamma = 0.8;
  const double t = 1.7;
  const double r_ref = qsnr(k, AdimensionalPoint::from_dimensional(gamma, 1.0, t));
  for (double s : {0.25, 3.0, 40.0}) {
    const auto p = AdimensionalPoint::from_dimensional(s * gamma, s * 1.0, t / s);
    EXPECT_NEAR(qsnr(k, p) / r_ref, 1.0, 1e-13);
    auto beta_of_gamma = [&](double gm) { return beta(k, AdimensionalPoint::from_dimensional(gm, s, t / s)); };
    const double dim = s * gamma * oracles::richardson_derivative(beta_of_gamma, s * gamma, 1e-3 * s * gamma);
    EXPECT_NEAR(dim / (p.g() * dbeta_dg(k, p)), 1.0, 1e-9);
  }
}

TEST(OptimalTime, UnimodalAroundMaximum) {
  for (const auto& k : all_kernels())
    for (double g : kGridG) {
      const auto opt = optimal_time(k, g);
      EXPECT_LE(opt.tau_hi / opt.tau_lo - 1.0, 1.1e-8);
      EXPECT_NEAR(opt.r_m, qsnr(k, AdimensionalPoint(g, opt.tau_m)), 1e-15);
      // Increasing below tau_M, decreasing above on a 60-point log grid.
      double prev = 0.0;
      for (int i = -30; i <= 0; ++i) {
        const double r = qsnr(k, AdimensionalPoint(g, opt.tau_m * std::pow(10.0, i / 10.0)));
        EXPECT_GE(r, prev) << k.name() << " g=" << g;
        prev = r;
      }
      for (int i = 1; i <= 30; ++i) {
        const double r = qsnr(k, AdimensionalPoint(g, opt.tau_m * std::pow(10.0, i / 10.0)));
        EXPECT_LE(r, prev) << k.name() << " g=" << g;
        prev = r;
      }
    }
}

TEST(OptimalTime, ReferenceValuesForOrnsteinUhlenbeck) {
  const auto k = NoiseKernel::ornstein_uhlenbeck();
  const std::vector<std::pair<double, double>> expected{
      {0.01, 8.94}, {0.1, 2.83}, {1.0, 0.864}, {10.0, 0.192}, {100.0, 0.0241}};
  for (auto [g, tau] : expected) EXPECT_NEAR(optimal_time(k, g).tau_m / tau, 1.0, 5e-3) << "g=" << g;
}

TEST(OptimalTime, MaximumQsnrDecreasesWithG) {
  for (const auto& k : all_kernels()) {
    double prev = INFINITY;
    for (double lg = -4.0; lg <= 4.0; lg += 0.25) {
      const double r = optimal_time(k, std::pow(10.0, lg)).r_m;
      EXPECT_LT(r, prev) << k.name() << " log10 g=" << lg;
      prev = r;
    }
  }
}

TEST(OptimalTime, ParallelSweepKeepsOrder) {
  const std::vector<double> gs{0.5, 0.05, 5.0, 50.0};
  const auto serial = optimal_times(NoiseKernel::gaussian(), gs, 1e-8, 1);
  const auto parallel = optimal_times(NoiseKernel::gaussian(), gs, 1e-8, 4);
  ASSERT_EQ(serial.size(), gs.size());
  for (std::size_t i = 0; i < gs.size(); ++i) {
    EXPECT_EQ(serial[i].g, gs[i]);
    EXPECT_EQ(serial[i].tau_m, parallel[i].tau_m);
    EXPECT_EQ(serial[i].r_m, parallel[i].r_m);
  }
}

std::vector<double> log_grid(double lo, double hi, int n) {
  std::vector<double> out;
  for (int i = 0; i < n; ++i) out.push_back(lo * std::pow(hi / lo, static_cast<double>(i) / (n - 1)));
  return out;
}

TEST(ScalingFit, WeakNoiseOrnsteinUhlenbeck) {
  const auto k = NoiseKernel::ornstein_uhlenbeck();
  const auto gs = log_grid(1e-4, 1e-2, 21);
  const auto tau = scaling_fit(k, gs, OptimalQuantity::tau_m);
  EXPECT_EQ(tau.law, ScalingLaw::power_law);
  EXPECT_NEAR(tau.exponent, -0.5, 0.01);
  EXPECT_NEAR(tau.prefactor / 0.89, 1.0, 0.02);
  EXPECT_FALSE(tau.mixed_regime);
  const auto r = scaling_fit(k, gs, OptimalQuantity::r_m);
  EXPECT_EQ(r.law, ScalingLaw::sqrt_linear);
  EXPECT_NEAR(r.intercept, 0.161, 0.002);
  EXPECT_NEAR(r.slope, -0.096, 0.005);
  EXPECT_FALSE(r.mixed_regime);
}

TEST(ScalingFit, StrongNoiseOrnsteinUhlenbeck) {
  const auto k = NoiseKernel::ornstein_uhlenbeck();
  const auto gs = log_grid(1e2, 1e4, 21);
  const auto tau = scaling_fit(k, gs, OptimalQuantity::tau_m);
  EXPECT_NEAR(tau.exponent, -1.0, 0.02);
  EXPECT_NEAR(tau.prefactor / 2.5, 1.0, 0.1);
  const auto r = scaling_fit(k, gs, OptimalQuantity::r_m);
  EXPECT_EQ(r.law, ScalingLaw::power_law);
  EXPECT_NEAR(r.exponent, -1.0, 0.02);
  for (double g : gs) EXPECT_NEAR(optimal_time(k, g).r_m * g / 0.33, 1.0, 0.1) << "g=" << g;
}

TEST(ScalingFit, ExcludesIntermediateAndFlagsMixedRegimes) {
  const auto k = NoiseKernel::ornstein_uhlenbeck();
  auto gs = log_grid(1e-4, 1e-2, 6);
  gs.push_back(1.0);
  const auto fit = scaling_fit(k, gs, OptimalQuantity::tau_m);
  EXPECT_EQ(fit.used, 6u);
  EXPECT_EQ(fit.excluded, 1u);
  EXPECT_FALSE(fit.mixed_regime);

  std::vector<double> mixed{1e-4, 1e-3, 1e-2, 1e2, 1e3, 1e4};
  EXPECT_TRUE(scaling_fit(k, mixed, OptimalQuantity::tau_m).mixed_regime);
}

TEST(ScalingFit, RejectsTooFewOrTooNarrowInputs) {
  const auto k = NoiseKernel::ornstein_uhlenbeck();
  EXPECT_THROW(scaling_fit(k, log_grid(1e-4, 1e-2, 4), OptimalQuantity::tau_m), invalid_parameter);
  EXPECT_THROW(scaling_fit(k, log_grid(1e-4, 5e-3, 10), OptimalQuantity::tau_m), invalid_parameter);
  EXPECT_THROW(scaling_fit(k, log_grid(0.1, 10.0, 10), OptimalQuantity::tau_m), invalid_parameter);
  EXPECT_THROW(scaling_fit(k, std::vector<double>{-1.0, 1e-4, 1e-3, 1e-2, 1e-3}, OptimalQuantity::tau_m),
               invalid_parameter);
}

}  // namespace
}  // namespace qprobe
