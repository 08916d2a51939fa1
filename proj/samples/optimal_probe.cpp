// Optimal interaction time and the best attainable QSNR for each kernel.

#include <cstdio>

#include "qprobe/qprobe.hpp"

int main() {
  using namespace qprobe;
  const NoiseKernel kernels[] = {NoiseKernel::ornstein_uhlenbeck(), NoiseKernel::gaussian(),
                                 NoiseKernel::power_law(3.0)};
  std::printf("%-6s %8s %12s %12s\n", "kernel", "g", "tau_M", "R_M");
  for (const auto& k : kernels)
    for (double g : {1e-3, 1e-1, 1.0, 10.0, 1e3}) {
      const auto opt = optimal_time(k, g);
      std::printf("%-6s %8g %12.6g %12.6g\n", std::string(k.name()).c_str(), g, opt.tau_m, opt.r_m);
    }
}
