// Stability constants, symbol ranges, approximation decay and the bootstrap plan.

#include <gtest/gtest.h>

#include <cmath>

#include "lio/stability.hpp"

using namespace lio;

namespace {

StabilitySolver solver_for(const DiscretizationMatrix& A, std::size_t svd_limit) {
  SolverOptions o;
  o.svd_limit = svd_limit;
  return StabilitySolver(A, o);
}

}  // namespace

TEST(Stability, LanczosAgreesWithDenseSvd) {
  const DyadicGrid g(1, 3, 8.0);  // 128 points
  const auto A = assemble_an(Kernel::conv_exp(1, 1.0, 8.0), g);
  const auto dw1 = trivial_discrete_weight(g);
  const auto dw2 = discretize_weight(Weight::power(1, 0.5), g);
  for (cplx z : {cplx(0.5, 0.0), cplx(1.5, 0.0), cplx(0.3, 0.2), cplx(-0.25, 0.0)})
    for (const auto* dw : {&dw1, &dw2}) {
      auto svd = solver_for(A, 512);
      auto lan = solver_for(A, 0);
      const auto a = svd.solve(z, 2.0, *dw);
      const auto b = lan.solve(z, 2.0, *dw);
      EXPECT_EQ(a.method, StabilityMethod::exact_svd);
      EXPECT_EQ(b.method, StabilityMethod::inverse_lanczos);
      EXPECT_NEAR(b.s_hat / a.s_hat, 1.0, 1e-6) << z << " " << dw->name;
      // the witness reproduces the constant
      EXPECT_NEAR(a.witness_norm / a.s_hat, 1.0, 1e-8);
      EXPECT_NEAR(svd.quotient(z, a.witness, *dw, 2.0) / a.s_hat, 1.0, 1e-8);
    }
}

TEST(Stability, ZeroKernelGivesModulusOfZ) {
  const DyadicGrid g(1, 2, 4.0);
  const auto A = assemble_an(Kernel::zero(1, 4.0), g);
  StabilitySolver s(A);
  const auto dw = discretize_weight(Weight::power(1, -0.5), g);
  for (double p : {1.0, 2.0, 3.0}) {
    const auto e = s.solve(cplx(0.6, -0.8), p, dw);
    EXPECT_EQ(e.method, StabilityMethod::closed_form);
    EXPECT_NEAR(e.s_hat, 1.0, 1e-14) << p;
  }
}

TEST(Stability, FarFromTheSpectrumTheConstantIsTheDistance) {
  // T has spectrum [0, 1]; at z = 2 the constant is close to 2 - 1 for p = 2,
  // and the descent for p = 1 lands near the same value
  StabilityQuery q{Kernel::conv_exp(1, 1.0, 16.0), cplx(2.0, 0.0), 2.0, Weight::trivial(1), 3};
  const auto e2 = stability_constant(q);
  EXPECT_NEAR(e2.s_hat, 1.0, 0.02);
  q.p = 1.0;
  q.weight = Weight::power(1, -0.5);
  const auto e1 = stability_constant(q);
  EXPECT_EQ(e1.method, StabilityMethod::probe_descent);
  EXPECT_GT(e1.s_hat, 0.95);
  EXPECT_LT(e1.s_hat, 1.05);
}

TEST(Stability, RepeatedSolvesAreBitIdentical) {
  const DyadicGrid g(1, 2, 8.0);
  const auto A = assemble_an(Kernel::conv_exp(1, 1.0, 8.0), g);
  const auto dw = discretize_weight(Weight::power(1, 0.5), g);
  auto s1 = StabilitySolver(A), s2 = StabilitySolver(A);
  const auto a = s1.solve(cplx(0.5, 0.0), 3.0, dw);
  const auto b = s2.solve(cplx(0.5, 0.0), 3.0, dw);
  EXPECT_EQ(a.s_hat, b.s_hat);
  EXPECT_EQ(a.witness_hash, b.witness_hash);
}

TEST(Stability, ScanClassifiesInsideAndOutside) {
  const Kernel k = Kernel::conv_exp(1, 1.0, 16.0);
  std::vector<WeightPair> pairs{{2.0, Weight::trivial(1)}, {2.0, Weight::power(1, 0.5)}};
  const auto rep = spectrum_scan(k, {cplx(0.5, 0.0), cplx(-0.5, 0.0), cplx(1.5, 0.0)}, pairs, 4);
  ASSERT_EQ(rep.cls.size(), 3u);
  for (auto c : rep.cls[0]) EXPECT_EQ(c, ZClass::in);
  for (auto c : rep.cls[1]) EXPECT_EQ(c, ZClass::out);
  for (auto c : rep.cls[2]) EXPECT_EQ(c, ZClass::out);
  EXPECT_TRUE(rep.all_agree);
  ASSERT_TRUE(rep.has_reference);
  EXPECT_TRUE(rep.reference.contains(cplx(0.5, 0.0), 1e-12));
  EXPECT_FALSE(rep.reference.contains(cplx(1.5, 0.0), 0.1));
}

TEST(Stability, ScanRejectsNonApWeight) {
  const Kernel k = Kernel::conv_exp(1, 1.0, 4.0);
  std::vector<WeightPair> pairs{{2.0, Weight::power(1, 1.5)}};
  EXPECT_THROW(spectrum_scan(k, {cplx(0.5, 0.0)}, pairs, 2), PreconditionError);
}

// ---- symbol range ------------------------------------------------------------------------

TEST(SymbolRange, ConvExpCoversTheUnitInterval) {
  const auto sr = symbol_range(Kernel::conv_exp(1, 1.0, 64.0));
  ASSERT_TRUE(sr.real_valued);
  ASSERT_EQ(sr.intervals.size(), 1u);
  EXPECT_NEAR(sr.intervals[0].first, 0.0, 1e-12);
  EXPECT_NEAR(sr.intervals[0].second, 1.0, 1e-8);
  EXPECT_NEAR(sr.distance(cplx(-0.5, 0.0)), 0.5, 1e-12);
  EXPECT_NEAR(sr.distance(cplx(0.5, 0.25)), 0.25, 1e-12);
}

TEST(SymbolRange, ScalesWithTheKernel) {
  ConvolutionTraits tr;
  tr.coord_even = true;
  const Kernel k = Kernel::convolution(1, 64.0, [](const Point& v) { return std::exp(-std::abs(v[0])); }, tr);
  const auto sr = symbol_range(k);
  ASSERT_TRUE(sr.real_valued);
  EXPECT_NEAR(sr.intervals[0].second, 2.0, 1e-8);
}

TEST(SymbolRange, OddKernelIsComplex) {
  ConvolutionTraits tr;
  tr.even = false;
  const Kernel k = Kernel::convolution(1, 32.0, [](const Point& v) { return v[0] > 0 ? std::exp(-v[0]) : 0.0; }, tr);
  const auto sr = symbol_range(k);
  EXPECT_FALSE(sr.real_valued);
  // one sided exponential: 1 / (1 + i xi), a circle through 0 and 1
  EXPECT_LT(sr.distance(cplx(0.5, 0.5)), 0.02);
  EXPECT_GT(sr.distance(cplx(0.5, 0.0)), 0.4);
}

// ---- applying T and approximation ----------------------------------------------------

TEST(ApplyOperator, ConstantFunction) {
  for (double L : {2.0, 4.0}) {
    const Kernel k = Kernel::conv_exp(1, 1.0, L);
    const double v = apply_at(k, [](const Point&) { return 1.0; }, Point(0.0));
    EXPECT_NEAR(v, 1.0 - std::exp(-L), 1e-10);
    // at x: 1 - (e^{-(L - x)} + e^{-(L + x)}) / 2
    const double x = 0.5;
    EXPECT_NEAR(apply_at(k, [](const Point&) { return 1.0; }, Point(x)),
                1.0 - 0.5 * (std::exp(-(L - x)) + std::exp(-(L + x))), 1e-10);
  }
}

TEST(ApplyOperator, SingularBesselKernelInTwoDimensions) {
  // G_1 = e^-r / (2 pi r) in the plane; over [-1, 1]^2 in polar coordinates
  // this is (4/pi) int_0^{pi/4} (1 - e^{-1/cos t}) dt, evaluated with mpmath
  EXPECT_NEAR(apply_at(Kernel::bessel(1.0, 2, 1.0), [](const Point&) { return 1.0; }, Point(0.0, 0.0)),
              0.67224145392788499, 1e-9);
}

TEST(Approximation, ErrorHalvesPerLevel) {
  ApproximationOptions o;
  o.probes = 3;
  o.ref_offset = 3;
  const auto rep = approximation_error(Kernel::conv_exp(1, 1.0, 4.0), 2.0, Weight::trivial(1), {1, 2, 3}, o);
  ASSERT_EQ(rep.ptp.size(), 3u);
  EXPECT_GT(rep.ptp[0], rep.ptp[1]);
  EXPECT_GT(rep.ptp[1], rep.ptp[2]);
  EXPECT_GT(rep.slope_ptp, -1.4);
  EXPECT_LT(rep.slope_ptp, -0.6);
  EXPECT_EQ(rep.probes, 4);
}

TEST(Approximation, LogSlopeOfExactPowers) {
  EXPECT_NEAR(log2_slope({1, 2, 3, 4}, {0.5, 0.25, 0.125, 0.0625}), -1.0, 1e-14);
  EXPECT_NEAR(log2_slope({0, 2}, {1.0, 1.0 / 16}), -2.0, 1e-14);
}

TEST(ZeroSpectrum, HatDefectNormClosedForm) {
  // phi_0 - P_0 phi_0: the hat minus its cell averages 3/8 (cell [-1/2, 1/2))
  // and 1/8 (the two neighbours) has squared L2 norm 7/96
  const auto rows = zero_spectrum_sequence(Kernel::conv_exp(1, 1.0, 16.0), {0, 1, 2});
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_NEAR(rows[0].norm_g, std::sqrt(7.0 / 96.0), 1e-12);
  // finer levels, squared norms from exact piecewise integration: 23/768 and 55/6144
  EXPECT_NEAR(rows[1].norm_g, std::sqrt(23.0 / 768.0), 1e-12);
  EXPECT_NEAR(rows[2].norm_g, std::sqrt(55.0 / 6144.0), 1e-12);
  for (std::size_t i = 1; i < rows.size(); ++i) EXPECT_LT(rows[i].ratio, rows[i - 1].ratio);
}

TEST(ZeroSpectrum, TwoDimensionalKernelIsUnsupported) {
  EXPECT_THROW(zero_spectrum_sequence(Kernel::conv_exp(2, 1.0, 4.0), {0}), UnsupportedError);
}

// ---- bootstrap --------------------------------------------------------------------------

TEST(Bootstrap, IdentityEndpointsGiveEmptyPlan) {
  const auto P = bootstrap_plan(2.0, true, 1.0, 2.0, true, 1.0, 1.0, 1);
  EXPECT_TRUE(P.stages.empty());
  EXPECT_TRUE(P.valid);
  EXPECT_FALSE(P.note.empty());
}

TEST(Bootstrap, ExponentStepsOnly) {
  // 2 -> 1 with delta2 = 1/3: one step would need |1/2 - 1| <= 1/3, two steps suffice
  const auto P = bootstrap_plan(2.0, true, 1.0, 1.0, true, 1.0, 1.0, 1);
  EXPECT_DOUBLE_EQ(P.delta2, 1.0 / 3.0);
  EXPECT_EQ(P.l1, 2);
  EXPECT_NEAR(P.s_exponent, std::sqrt(0.5) - 1.0, 1e-15);
  ASSERT_EQ(P.stages.size(), 2u);
  for (auto& st : P.stages) EXPECT_EQ(st.move, BootstrapMove::exponent_step);
  EXPECT_NEAR(P.stages[0].p_out, std::sqrt(2.0), 1e-14);
  EXPECT_EQ(P.stages[1].p_out, 1.0);
  EXPECT_TRUE(P.valid);
}

TEST(Bootstrap, DeltaValues) {
  // r0 = 2^-5 / 2 = 1/64, delta0 = min(r0 / (2 A), alpha / (3d)) = 3/512 for A = 4/3
  EXPECT_NEAR(bootstrap_delta0(2.0, 1, 4.0 / 3.0, 1.0), 3.0 / 512.0, 1e-17);
  EXPECT_NEAR(bootstrap_delta0(2.0, 1, 1.0, 0.01), 0.01 / 3.0, 1e-17);
  const double d1 = bootstrap_delta1(2.0, 1, 1.0, 1.0, 0.125);
  // A = 1: min(D1 / (2 ln 2), alpha / (2*3 + 2 + 0))
  EXPECT_NEAR(d1, std::min(0.125 / (2 * std::log(2.0)), 1.0 / 8.0), 1e-16);
}

TEST(Bootstrap, FullPlanChainsAndNamesMoves) {
  const auto P = bootstrap_plan(2.0, false, 4.0 / 3.0, 1.0, false, 2.41382, 1.0, 1);
  EXPECT_TRUE(P.valid);
  EXPECT_GT(P.l0, 0);
  EXPECT_GT(P.l3, 0);
  EXPECT_EQ(int(P.stages.size()), P.l0 + 1 + P.l1 + 1 + P.l3);
  EXPECT_STREQ(to_string(P.stages.front().move), "weight-power-step");
  EXPECT_STREQ(to_string(P.stages[std::size_t(P.l0)].move), "weight-power-jump");
  EXPECT_STREQ(to_string(P.stages[std::size_t(P.l0 + 1)].move), "exponent-step");
  EXPECT_EQ(P.stages.back().r_out, 1.0);
  for (auto& st : P.stages) EXPECT_TRUE(st.admissible);
}

TEST(Bootstrap, InfiniteTargetIsAPreconditionError) {
  EXPECT_THROW(bootstrap_plan(2.0, true, 1.0, 1.0, false, kInf, 1.0, 1), PreconditionError);
}
