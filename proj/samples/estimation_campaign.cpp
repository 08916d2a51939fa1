// Simulated measurement campaign for OU noise at g = 1: the inversion
// estimate approaches the quantum Cramer-Rao bound as M grows.

#include <cstdio>

#include "qprobe/qprobe.hpp"

int main() {
  using namespace qprobe;
  CampaignConfig config;
  config.g_true = 1.0;
  config.m_schedule = {100, 1000, 10000, 100000};
  config.replicas = 200;
  config.base_seed = 2024;

  const auto records = run_campaign(config, 0);
  std::printf("tau_M = %.6g\n", records.front().tau);
  std::printf("%8s %12s %10s %14s %14s\n", "M", "mean ratio", "se", "variance/QCR", "excluded");
  for (const auto& cell : summarize(records))
    std::printf("%8llu %12.5f %10.5f %14.4f %14.3f\n", static_cast<unsigned long long>(cell.m_total),
                cell.mean_ratio, cell.se_ratio, cell.empirical_variance / cell.qcr_bound, cell.exclusion_rate);
}
