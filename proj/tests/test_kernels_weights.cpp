// Kernels and weights against closed forms and Boost.Math.

#include <gtest/gtest.h>

#include <boost/math/special_functions/bessel.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <cmath>
#include <fstream>

#include "lio/kernels.hpp"
#include "lio/weights.hpp"

using namespace lio;

namespace {

// G_gamma(x) = 2^{1-(d+gamma)/2} pi^{-d/2} / Gamma(gamma/2) |x|^{(gamma-d)/2} K_{(d-gamma)/2}(|x|)
double bessel_oracle(double gamma, int d, double r) {
  const double nu = 0.5 * (d - gamma);
  return std::pow(2.0, 1.0 - 0.5 * (d + gamma)) * std::pow(M_PI, -0.5 * d) / boost::math::tgamma(0.5 * gamma) *
         std::pow(r, 0.5 * (gamma - d)) * boost::math::cyl_bessel_k(std::abs(nu), r);
}

}  // namespace

TEST(BesselKernel, ClosedFormGammaTwoOneDim) {
  for (double x : {0.1, 0.5, 1.0, 2.0, 5.0}) {
    const double ref = 0.5 * std::exp(-x);
    EXPECT_NEAR(bessel_kernel(2.0, 1, Point(x)) / ref, 1.0, 1e-10) << x;
    EXPECT_NEAR(bessel_kernel(2.0, 1, Point(-x)) / ref, 1.0, 1e-10) << x;
  }
}

TEST(BesselKernel, MatchesBoostModifiedBessel) {
  for (int d : {1, 2})
    for (double gamma : {0.5, 1.0, 1.5, 2.5, 3.0, 4.0})
      for (double r : {1e-3, 0.05, 0.3, 1.0, 2.5, 7.0, 20.0}) {
        const Point x = d == 1 ? Point(r) : Point(0.6 * r, -0.8 * r);  // euclidean length r
        const double ref = bessel_oracle(gamma, d, r);
        EXPECT_NEAR(bessel_kernel(gamma, d, x) / ref, 1.0, 1e-8) << "d=" << d << " gamma=" << gamma << " r=" << r;
      }
}

TEST(BesselKernel, UnderflowsToZeroFarOut) {
  EXPECT_EQ(bessel_kernel(2.0, 1, Point(1e6)), 0.0);
  EXPECT_GT(bessel_kernel(2.0, 1, Point(700.0)), 0.0);
}

TEST(Kernel, ConvExpProfileAndMass) {
  const Kernel k = Kernel::conv_exp(1, 1.0, 32.0);
  EXPECT_DOUBLE_EQ(k.profile(Point(0.7)), 0.5 * std::exp(-0.7));
  const auto rp = radial_dominator(k);
  // int e^-|x|/2 over R is 1
  EXPECT_NEAR(rp.l1_norm, 1.0, 1e-9);
  EXPECT_NEAR(rp.tail_bound / std::exp(-32.0), 1.0, 1e-6);
}

TEST(Kernel, FourierSymbolOfConvExp) {
  for (double s : {0.5, 1.0, 2.0}) {
    const Kernel k = Kernel::conv_exp(1, s, 64.0);
    const std::vector<double> xi{0.0, 0.3, 1.0, 4.0};
    const auto v = fourier_symbol_1d(k, xi);
    for (std::size_t i = 0; i < xi.size(); ++i) EXPECT_NEAR(v[i], s * s / (s * s + xi[i] * xi[i]), 1e-9);
  }
}

TEST(Kernel, FourierSymbolOfBessel) {
  const Kernel k = Kernel::bessel(3.0, 1, 64.0);
  const auto v = fourier_symbol_1d(k, {0.0, 1.0, 3.0});
  EXPECT_NEAR(v[0], 1.0, 1e-8);
  EXPECT_NEAR(v[1], std::pow(2.0, -1.5), 1e-8);
  EXPECT_NEAR(v[2], std::pow(10.0, -1.5), 1e-8);
}

TEST(Kernel, ModulusOfContinuityExample) {
  // sup over |x'|, |y'| <= 0.1 of |g(x - y + x' - y') - g(x - y)| with x - y = 1
  const Kernel k = Kernel::conv_exp(1, 1.0, 32.0);
  const double ref = 0.5 * (std::exp(-0.8) - std::exp(-1.0));
  EXPECT_NEAR(modulus_of_continuity(k, 0.1, Point(0.5), Point(-0.5)), ref, 1e-10);
  // inside the 4 delta tube the modified modulus vanishes
  EXPECT_EQ(modulus_of_continuity(k, 0.1, Point(0.1), Point(-0.1)), 0.0);
}

TEST(Kernel, ConditionConstantsZeroKernel) {
  const auto r = kernel_condition_constants(Kernel::zero(1), 1.0);
  EXPECT_EQ(r.D0, 0.0);
  EXPECT_TRUE(r.holds);
}

TEST(Kernel, ConditionConstantsFiniteForConvExp) {
  const auto r = kernel_condition_constants(Kernel::conv_exp(1, 1.0), 1.0);
  EXPECT_TRUE(r.holds);
  EXPECT_NEAR(r.norm_rk, 1.0, 1e-9);
  EXPECT_GE(r.D0, r.norm_rk);
  EXPECT_TRUE(std::isfinite(r.D0));
}

TEST(Kernel, WienerConditionInapplicableForSingularKernel) {
  EXPECT_THROW(wiener_amalgam_condition(Kernel::bessel(1.0, 1), 1.0), InapplicableError);
}

TEST(Kernel, DescriptorErrorsNameTheField) {
  try {
    parse_kernel("bessel:gama=2", 1, 32, "operator.kernel");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.field(), "operator.kernel");
  }
  EXPECT_THROW(parse_kernel("gauss:scale=1", 1, 32), ParseError);
  EXPECT_NO_THROW(parse_kernel("bessel:gamma=2", 1, 32));
  EXPECT_NO_THROW(parse_kernel("conv-exp:scale=0.5", 2, 16));
}

TEST(Kernel, TabulatedCsvRoundTrip) {
  const std::string path = ::testing::TempDir() + "lio_tab.csv";
  {
    std::ofstream f(path);
    f.precision(17);
    for (int i = -40; i <= 40; ++i) f << i * 0.25 << "," << 0.5 * std::exp(-std::abs(i * 0.25)) << "\n";
  }
  const Kernel k = parse_kernel("tabulated:" + path, 1, 8.0);
  EXPECT_NEAR(k.profile(Point(0.5)), 0.5 * std::exp(-0.5), 1e-12);
  // linear interpolation between nodes
  EXPECT_NEAR(k.profile(Point(0.125)), 0.25 * (std::exp(0.0) + std::exp(-0.25)), 1e-12);
}

// ---- weights ---------------------------------------------------------------------------------

TEST(Weight, ApQuotientOfPowerWeightOnUnitCube) {
  // cube [0, 1]: avg |x|^a = 1/(1+a), avg |x|^-a = 1/(1-a)
  for (double a : {0.25, 0.5, 0.75}) {
    const Weight w = Weight::power(1, a);
    EXPECT_NEAR(ap_quotient(w, 2.0, Cube(Point(0.5), 0.5)), 1.0 / ((1 + a) * (1 - a)), 1e-10) << a;
  }
  // p = 1, |x|^{-1/2} on [0, 1]: average 2, essential infimum 1
  EXPECT_NEAR(ap_quotient(Weight::power(1, -0.5), 1.0, Cube(Point(0.5), 0.5)), 2.0, 1e-10);
}

TEST(Weight, ApEstimateIsAtLeastTheCenteredValue) {
  const Weight w = Weight::power(1, 0.5);
  const auto e = ap_bound_estimate(w, 2.0, default_cube_family(1, 32.0), 32.0);
  EXPECT_TRUE(e.finite);
  EXPECT_TRUE(e.is_lower_bound);
  EXPECT_GE(e.value, 4.0 / 3.0 - 1e-12);
}

TEST(Weight, NotApOutsideTheRange) {
  // |x|^1 is not A_2 in d = 1 (needs -1 < alpha < 1)
  EXPECT_FALSE(Weight::power(1, 1.0).claims_ap(2.0));
  EXPECT_TRUE(Weight::power(1, 0.5).claims_ap(2.0));
  EXPECT_TRUE(Weight::power(1, -0.5).claims_ap(1.0));
  EXPECT_FALSE(Weight::power(1, 0.5).claims_ap(1.0));
}

TEST(Weight, DiscreteWeightIsTheCellAverage) {
  const Weight w = Weight::power(1, 0.5);
  const DyadicGrid g(1, 2, 4.0);
  const auto dw = discretize_weight(w, g);
  for (std::size_t i = 0; i < g.size(); ++i) {
    const Cube c = g.cell(i);
    const double a = c.lo(0), b = c.hi(0);
    auto F = [](double x) { return (x >= 0 ? 1.0 : -1.0) * std::pow(std::abs(x), 1.5) / 1.5; };
    EXPECT_NEAR(dw.values[i], (F(b) - F(a)) / (b - a), 1e-11);
  }
}

TEST(Weight, DiscreteApOfPowerWeightIsScaleInvariant) {
  // |x|^a is homogeneous and the lattice scales with the level
  const Weight w = Weight::power(1, 0.5);
  const double v1 = discrete_ap_bound(discretize_weight(w, DyadicGrid(1, 1, 32.0)), 2.0, 16).value;
  const double v3 = discrete_ap_bound(discretize_weight(w, DyadicGrid(1, 3, 32.0)), 2.0, 16).value;
  EXPECT_NEAR(v1, v3, 1e-10);
  EXPECT_GE(v1, 1.0);
}

TEST(Weight, BmoOfLogPowerOnSymmetricCube) {
  // mean of |a ln|x| + a| over [-1, 1] is 2a/e
  CubeFamily fam;
  fam.cubes.emplace_back(Point(0.0), 1.0);
  for (double a : {0.5, -0.5}) EXPECT_NEAR(bmo_norm_estimate(Weight::power(1, a), fam).value, 2 * std::abs(a) / M_E, 1e-9);
}

TEST(Weight, DoublingHoldsWithEqualityForTrivialWeight) {
  const auto rep = doubling_check(Weight::trivial(1), 2.0, 1.0, 3, dyadic_cubes(1, 2.0, 0, 2), 1.0, 32.0);
  EXPECT_EQ(rep.violations, 0u);
  for (auto& r : rep.rows) EXPECT_DOUBLE_EQ(r.value, 1.0);
}

TEST(Weight, ReverseHolderRejectsLargeDelta) {
  const Weight w = Weight::power(1, 0.5);
  const double cap = reverse_holder_r0(2.0, 1) / 1.5;
  EXPECT_NEAR(reverse_holder_r0(2.0, 1), 1.0 / 64.0, 1e-15);
  EXPECT_THROW(reverse_holder_check(w, 2.0, 0.5, 2 * cap, dyadic_cubes(1, 1.0, 0, 1), 1.5), PreconditionError);
  const auto rep = reverse_holder_check(w, 2.0, 0.5, cap, default_cube_family(1, 32.0), 1.5);
  EXPECT_EQ(rep.violations, 0u);
}

TEST(Weight, DescriptorErrorsNameTheField) {
  try {
    parse_weight("power:beta=1", 1, "weights.list[2]");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.field(), "weights.list[2]");
  }
  EXPECT_THROW(parse_weight("logarithmic", 1), ParseError);
  EXPECT_EQ(parse_weight("power:alpha=0.5", 1).kind(), WeightKind::power);
  EXPECT_EQ(parse_weight("trivial", 2).kind(), WeightKind::trivial);
}
