// Bessel potential kernels G_gamma in one dimension: values against the
// gamma = 2 closed form, the numerical Fourier symbol against
// (1 + xi^2)^(-gamma/2), and the resulting reference spectrum.

#include <cmath>
#include <cstdio>

#include "lio/stability.hpp"

int main() {
  using namespace lio;
  std::printf("G_2(x) against e^-|x| / 2\n");
  for (double x : {0.1, 0.5, 1.0, 2.0, 5.0})
    std::printf("  x = %-4g  G = %.15f  closed form = %.15f\n", x, bessel_kernel(2.0, 1, Point(x)), 0.5 * std::exp(-x));

  const std::vector<double> xi{0.0, 0.5, 1.0, 2.0, 4.0, 8.0};
  for (double gamma : {1.0, 2.0, 3.0}) {
    const Kernel k = Kernel::bessel(gamma, 1, 32.0);
    const auto s = fourier_symbol_1d(k, xi);
    std::printf("\ngamma = %g: symbol on the truncated box\n", gamma);
    for (std::size_t i = 0; i < xi.size(); ++i)
      std::printf("  xi = %-4g  numeric = %.10f  exact = %.10f\n", xi[i], s[i], std::pow(1 + xi[i] * xi[i], -gamma / 2));
    const auto r = symbol_range(k);
    std::printf("  reference spectrum [%.6f, %.6f]\n", r.intervals[0].first, r.intervals[0].second);
  }
  return 0;
}
