// Discretization matrices, lattice sequences and the localization family.

#include <gtest/gtest.h>

#include <boost/math/quadrature/tanh_sinh.hpp>
#include <boost/math/special_functions/bessel.hpp>
#include <cmath>
#include <sstream>

#include "lio/discretization.hpp"
#include "lio/localization.hpp"
#include "lio/sequences.hpp"
#include "lio/stability.hpp"

using namespace lio;

TEST(Assembly, ConvExpLevelZeroClosedForm) {
  // a_0(k) = int_{-1}^{1} (1 - |s|) e^{-|k + s|} / 2 ds
  const auto M = assemble_an(Kernel::conv_exp(1, 1.0, 8.0), DyadicGrid(1, 0, 8.0));
  EXPECT_EQ(M.storage, Storage::toeplitz);
  EXPECT_NEAR(M.toeplitz_value(0), std::exp(-1.0), 1e-12);
  for (long k = 1; k <= 6; ++k) {
    const double ref = 0.5 * std::exp(-double(k)) * (M_E + 1.0 / M_E - 2.0);
    EXPECT_NEAR(M.toeplitz_value(k), ref, 1e-12) << k;
    EXPECT_NEAR(M.toeplitz_value(-k), ref, 1e-12) << k;
  }
}

TEST(Assembly, SingularBesselEntriesMatchBoostQuadrature) {
  // gamma = 1, d = 1: G(x) = K_0(|x|) / pi, log singular on the diagonal
  const auto M = assemble_an(Kernel::bessel(1.0, 1, 8.0), DyadicGrid(1, 0, 8.0));
  boost::math::quadrature::tanh_sinh<double> ts;
  for (long k : {0L, 1L, 2L, 4L}) {
    auto f = [k](double s) {
      const double r = std::abs(double(k) + s);
      return r == 0.0 ? 0.0 : (1.0 - std::abs(s)) * boost::math::cyl_bessel_k(0, r) / M_PI;
    };
    const double ref = ts.integrate(f, -1.0, 0.0) + ts.integrate(f, 0.0, 1.0);
    EXPECT_NEAR(M.toeplitz_value(k) / ref, 1.0, 1e-8) << k;
  }
}

TEST(Assembly, GeneralKernelPathAgreesWithConvolutionPath) {
  const double L = 2.0;
  const Kernel kc = Kernel::conv_exp(1, 1.0, L);
  const Kernel kg = Kernel::general(1, L, [](const Point& x, const Point& y) { return 0.5 * std::exp(-std::abs(x[0] - y[0])); });
  const DyadicGrid g(1, 1, L);
  const auto A = assemble_an(kc, g), B = assemble_an(kg, g);
  EXPECT_EQ(B.storage, Storage::dense);
  for (std::size_t i = 0; i < g.size(); ++i)
    for (std::size_t j = 0; j < g.size(); ++j) EXPECT_NEAR(A(i, j), B(i, j), 1e-9) << i << "," << j;
}

TEST(Assembly, CellAverageOfOperatorOnIndicator) {
  // avg over cell i of T chi_j equals 2^{-nd} a_n(i, j)
  const double L = 4.0;
  const Kernel k = Kernel::conv_exp(1, 1.0, L);
  const DyadicGrid g(1, 1, L);
  const auto M = assemble_an(k, g);
  const std::size_t j = g.size() / 2;
  const Cube cj = g.cell(j);
  auto chi = [&](const Point& y) { return cj.contains(y) ? 1.0 : 0.0; };
  for (std::size_t i : {j, j + 1, j + 3}) {
    const Cube ci = g.cell(i);
    auto Tf = [&](double x) { return apply_at(k, chi, Point(x), {cj.lo(0), cj.hi(0)}); };
    std::vector<double> br{ci.lo(0), ci.hi(0)};
    for (double b : {cj.lo(0), cj.hi(0)})
      if (b > ci.lo(0) && b < ci.hi(0)) br.push_back(b);
    std::sort(br.begin(), br.end());
    const double avg = integrate_breaks(Tf, br, QuadOptions{1e-11, 1e-15, 2000}).value / ci.side();
    EXPECT_NEAR(avg, M(i, j) / g.scale(), 1e-9) << i;
  }
}

TEST(Assembly, BinaryRoundTripKeepsEveryStorage) {
  const DyadicGrid g(1, 1, 2.0);
  const auto T = assemble_an(Kernel::conv_exp(1, 2.0, 2.0), g);
  const auto D = assemble_an(
      Kernel::general(1, 2.0, [](const Point& x, const Point& y) { return std::exp(-std::abs(x[0] - 2 * y[0])); }), g);
  for (const auto* M : {&T, &D}) {
    std::stringstream ss;
    write_binary(*M, ss);
    const auto R = read_binary(ss);
    EXPECT_EQ(R.storage, M->storage);
    EXPECT_TRUE(R.grid.same_shape(M->grid));
    for (std::size_t i = 0; i < g.size(); ++i)
      for (std::size_t j = 0; j < g.size(); ++j) EXPECT_EQ(R(i, j), (*M)(i, j));
  }
}

TEST(Assembly, CsvHasStatementRowThenHeader) {
  const auto M = assemble_an(Kernel::conv_exp(1, 1.0, 1.0), DyadicGrid(1, 0, 1.0));
  std::ostringstream os;
  write_csv(M, os);
  std::istringstream in(os.str());
  std::string a, b;
  std::getline(in, a);
  std::getline(in, b);
  EXPECT_EQ(a, "statement,prop:discretization-matrix");
  EXPECT_EQ(b, "i,j,lambda_0,lambda_prime_0,value");
}

TEST(Assembly, ToeplitzProductMatchesDenseProduct) {
  for (int d : {1, 2}) {
    const double L = d == 1 ? 4.0 : 2.0;
    const DyadicGrid g(d, d == 1 ? 5 : 3, L);  // large enough for the FFT path
    const auto M = assemble_an(Kernel::conv_exp(d, 1.0, L), g);
    ASSERT_GT(M.size(), 64u);
    Rng rng(3);
    VecD x(long(M.size()));
    for (long i = 0; i < x.size(); ++i) x[i] = rng.normal();
    const VecD y = M.apply(x);
    const VecD ref = M.to_dense() * x;
    EXPECT_LT((y - ref).cwiseAbs().maxCoeff(), 1e-10 * ref.cwiseAbs().maxCoeff()) << d;
  }
}

TEST(Assembly, OffDiagonalDecayHoldsForConvExp) {
  const Kernel k = Kernel::conv_exp(1, 1.0, 8.0);
  const auto prof = radial_dominator(k);
  for (int n : {0, 2, 4}) {
    const auto rep = off_diagonal_check(assemble_an(k, DyadicGrid(1, n, 8.0)), prof);
    EXPECT_EQ(rep.violations, 0u) << n;
    EXPECT_GT(rep.checked, 0u);
  }
}

// ---- lattice sequences --------------------------------------------------------------

TEST(Beurling, HandExamples) {
  EXPECT_DOUBLE_EQ(beurling_norm(LatticeSequence::delta(1)), 1.0);
  EXPECT_DOUBLE_EQ(beurling_norm(LatticeSequence::indicator(1, 2)), 5.0);
  EXPECT_DOUBLE_EQ(beurling_norm(LatticeSequence::indicator(2, 1)), 9.0);
  // a single value at |k| = 2 dominates the shells 0, 1, 2: 1 + 2 + 2
  LatticeSequence a(1, 2);
  a.ref(2) = 1.0;
  EXPECT_DOUBLE_EQ(beurling_norm(a), 5.0);
  // in d = 2 the shells hold 1, 8, 16 points
  LatticeSequence b(2, 2);
  b.ref(-2, 1) = -3.0;
  EXPECT_DOUBLE_EQ(beurling_norm(b), 3.0 * 25.0);
}

TEST(Beurling, ConvolutionOfSquareIndicators) {
  // chi_{|k| <= 1} * chi_{|k| <= 1} in d = 2 has values (3 - |a|)(3 - |b|):
  // shell maxima 9, 6, 3 give 9 + 6 * 8 + 3 * 16 = 105 while each factor has norm 9
  const auto c = convolve(LatticeSequence::indicator(2, 1), LatticeSequence::indicator(2, 1));
  EXPECT_DOUBLE_EQ(c.at(0, 0), 9.0);
  EXPECT_DOUBLE_EQ(c.at(1, 0), 6.0);
  EXPECT_DOUBLE_EQ(c.at(2, 2), 1.0);
  EXPECT_DOUBLE_EQ(beurling_norm(c), 105.0);
  // d = 1: 1, 2, 3, 2, 1 has norm 3 + 2 * 2 + 2 * 1 = 9 = 3 * 3
  const auto c1 = convolve(LatticeSequence::indicator(1, 1), LatticeSequence::indicator(1, 1));
  EXPECT_DOUBLE_EQ(beurling_norm(c1), 9.0);
}

TEST(Beurling, ShellSumUsesRunningMaximum) {
  // maxima 1, 0, 2 by shell: the running sup from outside in is 2, 2, 2
  EXPECT_DOUBLE_EQ(beurling_from_shells(1, {1.0, 0.0, 2.0}), 2.0 * (1 + 2 + 2));
  EXPECT_DOUBLE_EQ(beurling_from_shells(2, {4.0, 1.0, 0.5}), 4.0 + 1.0 * 8 + 0.5 * 16);
}

TEST(Beurling, MatrixNormMatchesDenseAndToeplitz) {
  const DyadicGrid g(1, 1, 4.0);
  const auto M = assemble_an(Kernel::conv_exp(1, 1.0, 4.0), g);
  EXPECT_NEAR(beurling_norm(M), beurling_norm(M.to_dense(), g), 1e-14);
}

TEST(Schur, UnweightedOperatorNormBelowBeurling) {
  const DyadicGrid g(1, 2, 8.0);  // 64 points
  Rng rng(5);
  const Eigen::MatrixXd A = random_banded(g, 6, rng);
  const std::vector<double> w(g.size(), 1.0);
  const auto rep = schur_weighted_bound_check(A, g, w, 2.0, 1.0, 20, 11);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(A);
  EXPECT_NEAR(rep.op_norm, svd.singularValues()[0], 1e-10 * rep.op_norm);
  EXPECT_LE(rep.quotient, rep.op_norm * (1 + 1e-12));
  EXPECT_LE(rep.op_norm, rep.beurling);
  EXPECT_LE(rep.c_emp, 1.0);
}

TEST(Schur, WeightedLpNorm) {
  Eigen::VectorXd c(3);
  c << 1.0, -2.0, 3.0;
  const std::vector<double> w{1.0, 0.5, 2.0};
  EXPECT_DOUBLE_EQ(weighted_lp_norm(c, w, 1.0), 1 + 1 + 6);
  EXPECT_NEAR(weighted_lp_norm(c, w, 2.0), std::sqrt(1 + 2 + 18.0), 1e-15);
  EXPECT_NEAR(weighted_lp_norm(c, w, 3.0), std::cbrt(1 + 4 + 54.0), 1e-14);
}

// ---- localization ----------------------------------------------------------------

TEST(Localization, TrapezoidProfile) {
  EXPECT_EQ(psi0(0.0), 1.0);
  EXPECT_EQ(psi0(1.0), 1.0);
  EXPECT_EQ(psi0(-1.5), 0.5);
  EXPECT_EQ(psi0(2.0), 0.0);
  EXPECT_EQ(psi0(Point(0.5, -1.75)), 0.25);
}

TEST(Localization, FamilyCoversTheInterior) {
  for (int d : {1, 2}) {
    const DyadicGrid g(d, d == 1 ? 2 : 1, 16.0);
    const auto fam = localization_family(g, 2);
    EXPECT_GE(fam.min_cover, 1.0);
    EXPECT_LE(fam.min_cover, std::pow(2.0, d) + 1e-12);
    std::size_t inner = 0;
    for (bool b : fam.interior) inner += b;
    EXPECT_GT(inner, 0u);
  }
}

TEST(Localization, CommutatorEntries) {
  const DyadicGrid g(1, 1, 8.0);
  const auto M = assemble_an(Kernel::conv_exp(1, 1.0, 8.0), g);
  const auto psi = localization_matrix(g, Point(0.0), 2);
  const Eigen::MatrixXd C = commutator(M, psi);
  for (std::size_t i = 0; i < g.size(); i += 3)
    for (std::size_t j = 0; j < g.size(); j += 5)
      EXPECT_DOUBLE_EQ(C(long(i), long(j)), (psi[i] - psi[j]) * M(i, j));
  for (long i = 0; i < C.rows(); ++i) EXPECT_EQ(C(i, i), 0.0);
  // anti-symmetric for a symmetric matrix
  EXPECT_LT((C + C.transpose()).cwiseAbs().maxCoeff(), 1e-15);
}
