// Stability constants of zI - T for T = convolution with e^-|x| / 2 on
// [-32, 32], discretized at level n = 5, in three weighted spaces. Points
// inside [0, 1] come out small, points outside stay near their distance to
// the interval.

#include <cstdio>

#include "lio/stability.hpp"

int main() {
  using namespace lio;
  const Kernel k = Kernel::conv_exp(1, 1.0, 32.0);
  const DyadicGrid g(1, 5, 32.0);
  const auto A = assemble_an(k, g);
  struct Pair {
    double p;
    Weight w;
  };
  const std::vector<Pair> pairs{{2.0, Weight::trivial(1)}, {2.0, Weight::power(1, 0.5)}, {1.0, Weight::power(1, -0.5)}};
  std::vector<DiscreteWeight> dws;
  for (auto& pr : pairs) dws.push_back(discretize_weight(pr.w, g));

  StabilitySolver solver(A);
  std::printf("%8s", "z");
  for (auto& pr : pairs) std::printf("  %24s", ("p=" + std::to_string(int(pr.p)) + " " + pr.w.name()).c_str());
  std::printf("\n");
  for (double z : {-1.0, -0.25, 0.0, 0.3, 0.6, 1.0, 1.25, 2.0}) {
    std::printf("%8.3g", z);
    for (std::size_t i = 0; i < pairs.size(); ++i) {
      const auto e = solver.solve(z, pairs[i].p, dws[i]);
      std::printf("  %13.6g %-10s", e.s_hat, to_string(e.method));
    }
    std::printf("\n");
  }
  return 0;
}
