#pragma once

// Localization matrices Psi_k^N, the partition Phi_N, commutators with A_n
// and the measured commutator decay.

#include <Eigen/Dense>
#include <cmath>
#include <string>
#include <vector>

#include "lio/discretization.hpp"
#include "lio/weights.hpp"

namespace lio {

// trapezoid profile: 1 on |x| <= 1, 0 beyond 2, linear in between (inf-norm)
inline double psi0(double t) { return std::max(std::min(2.0 - std::abs(t), 1.0), 0.0); }
inline double psi0(const Point& x) { return psi0(x.norm()); }

struct LocalizationMatrix {
  DyadicGrid grid;
  Point anchor;
  int N = 1;
  std::vector<double> diag;

  double operator[](std::size_t i) const { return diag[i]; }

  template <class Vec>
  Vec apply(const Vec& x) const {
    Vec y = x;
    for (long i = 0; i < long(diag.size()); ++i) y[i] *= diag[std::size_t(i)];
    return y;
  }
};

inline LocalizationMatrix localization_matrix(const DyadicGrid& grid, const Point& k, int N) {
  require(N >= 1, "localization: N must be >= 1");
  require(k.d == grid.dim(), "localization: anchor dimension mismatch");
  LocalizationMatrix m;
  m.grid = grid;
  m.anchor = k;
  m.N = N;
  m.diag.resize(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) m.diag[i] = psi0((grid.point(i) - k) * (1.0 / N));
  return m;
}

struct LocalizationFamily {
  int N = 1;
  std::vector<LocalizationMatrix> psi;
  std::vector<double> phi;        // (sum_k psi_k^2)^{-1}, 0 where nothing covers
  std::vector<bool> interior;     // at distance >= 2N from the box boundary
  double min_cover = kInf;        // min over interior points of sum_k psi_k^2
};

// anchors k in N Z^d with supp psi_k inside the box
inline LocalizationFamily localization_family(const DyadicGrid& grid, int N) {
  require(N >= 1, "localization_family: N must be >= 1");
  const int d = grid.dim();
  const double L = grid.box();
  LocalizationFamily fam;
  fam.N = N;
  // lattice points lie in [-L, L - h]; anchors need k - 2N >= -L and k + 2N <= L - h
  const double lo = -L + 2.0 * N, hi = L - grid.spacing() - 2.0 * N;
  const long a0 = long(std::ceil(lo / N - 1e-12)), a1 = long(std::floor(hi / N + 1e-12));
  std::vector<Point> anchors;
  for (long i = a0; i <= a1; ++i) {
    if (d == 1) {
      anchors.emplace_back(double(i * N));
    } else {
      for (long j = a0; j <= a1; ++j) anchors.emplace_back(double(i * N), double(j * N));
    }
  }
  if (anchors.empty()) throw PreconditionError("localization_family: box too small for N = " + std::to_string(N));
  for (auto& k : anchors) fam.psi.push_back(localization_matrix(grid, k, N));
  const std::size_t n = grid.size();
  fam.phi.assign(n, 0.0);
  fam.interior.assign(n, false);
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0.0;
    for (auto& m : fam.psi) s += m.diag[i] * m.diag[i];
    fam.phi[i] = s > 0 ? 1.0 / s : 0.0;
    const Point x = grid.point(i);
    bool in = true;
    for (int a = 0; a < d; ++a) in = in && x[a] >= -L + 2.0 * N && x[a] <= L - grid.spacing() - 2.0 * N;
    fam.interior[i] = in;
    if (in) {
      if (s < 1.0 - 1e-12)
        throw PreconditionError("localization_family: interior point " + std::to_string(i) + " has cover " +
                                std::to_string(s) + " < 1");
      fam.min_cover = std::min(fam.min_cover, s);
    }
  }
  return fam;
}

// Psi_k A_n - A_n Psi_k: entries (psi(lambda) - psi(lambda')) a_n(lambda, lambda')
inline Eigen::MatrixXd commutator(const DiscretizationMatrix& M, const LocalizationMatrix& psi) {
  require(M.grid.same_shape(psi.grid), "commutator: grids differ");
  const long n = long(M.size());
  Eigen::MatrixXd C(n, n);
  parallel_for(std::size_t(n), [&](std::size_t i) {
    for (long j = 0; j < n; ++j) C(long(i), j) = (psi.diag[i] - psi.diag[std::size_t(j)]) * M(i, std::size_t(j));
  });
  return C;
}

// ---- commutator bound ------------------------------------------------------------

struct CommutatorReport {
  std::string statement = "prop:commutator-decay";
  int N = 1;
  double p = 2.0;
  bool near = true;          // |k - k'| <= 8N
  double quotient = 0.0;     // max over probes of |C Psi_k' b| / |b|
  double exact_norm = -1.0;  // p = 2: exact operator norm, else -1
  double envelope = 0.0;     // right side without the absolute constant
  double c_emp = 0.0;        // measured / envelope
  std::size_t probes = 0;
};

inline double weighted_norm(const Eigen::VectorXd& c, const std::vector<double>& w, double p) {
  double s = 0.0;
  if (p == 2.0) {
    for (long i = 0; i < c.size(); ++i) s += c[i] * c[i] * w[std::size_t(i)];
    return std::sqrt(s);
  }
  for (long i = 0; i < c.size(); ++i) s += std::pow(std::abs(c[i]), p) * w[std::size_t(i)];
  return std::pow(s, 1.0 / p);
}

// measured left side of the commutator estimate against
//   (A_p)^{1/p} 2^{nd} (N^{-1/2} |r_K|_1 + int_{|t| > sqrt N / 4} r_K)          near
//   (A_p)^{1/p} 2^{nd} N^d r_K((k-k')/2) (mass_k / mass_k')^{1/p}                  far
inline CommutatorReport commutator_bound_check(const DiscretizationMatrix& M, const LocalizationMatrix& pk,
                                               const LocalizationMatrix& pk2, const DiscreteWeight& wn, double p,
                                               const RadialProfile& prof, double Ap, int probes, std::uint64_t seed) {
  require(p >= 1, "commutator_bound_check: p must be >= 1");
  require(pk.N == pk2.N, "commutator_bound_check: localization scales differ");
  require(wn.grid.same_shape(M.grid), "commutator_bound_check: weight grid differs");
  const int N = pk.N;
  const int d = M.grid.dim();
  CommutatorReport rep;
  rep.N = N;
  rep.p = p;
  const double dist = (pk.anchor - pk2.anchor).norm();
  rep.near = dist <= 8.0 * N;
  const double pref = std::pow(Ap, 1.0 / p) * M.grid.scale();
  if (rep.near) {
    rep.envelope = pref * (prof.l1_norm / std::sqrt(double(N)) + prof.outside_integral(std::sqrt(double(N)) / 4.0));
  } else {
    double mk = 0.0, mk2 = 0.0;
    for (std::size_t i = 0; i < wn.size(); ++i) {
      const Point x = M.grid.point(i);
      if ((x - pk.anchor).norm() <= 2.0 * N) mk += wn[i];
      if ((x - pk2.anchor).norm() <= 2.0 * N) mk2 += wn[i];
    }
    rep.envelope = pref * std::pow(double(N), d) * prof(dist / 2.0) * std::pow(mk / mk2, 1.0 / p);
  }
  // C Psi_k', restricted to the columns Psi_k' touches
  Eigen::MatrixXd C = commutator(M, pk);
  for (long j = 0; j < C.cols(); ++j) C.col(j) *= pk2.diag[std::size_t(j)];
  const long n = C.rows();
  Rng rng(seed);
  std::vector<long> support;
  for (long j = 0; j < n; ++j)
    if (pk2.diag[std::size_t(j)] > 0) support.push_back(j);
  for (int t = 0; t < probes; ++t) {
    Eigen::VectorXd b = Eigen::VectorXd::Zero(n);
    for (long j : support) b[j] = rng.normal();
    const double nb = weighted_norm(b, wn.values, p);
    if (nb == 0) continue;
    rep.quotient = std::max(rep.quotient, weighted_norm(C * b, wn.values, p) / nb);
    ++rep.probes;
  }
  if (p == 2.0) {
    // D^{1/2} C D^{-1/2}
    Eigen::VectorXd s(n), si(n);
    for (long i = 0; i < n; ++i) {
      s[i] = std::sqrt(wn[std::size_t(i)]);
      si[i] = 1.0 / s[i];
    }
    Eigen::MatrixXd S = s.asDiagonal() * C * si.asDiagonal();
    Eigen::BDCSVD<Eigen::MatrixXd> svd(S);
    rep.exact_norm = svd.singularValues().size() ? svd.singularValues()[0] : 0.0;
    rep.quotient = std::max(rep.quotient, rep.exact_norm);
  }
  rep.c_emp = rep.envelope > 0 ? rep.quotient / rep.envelope : (rep.quotient > 0 ? kInf : 0.0);
  return rep;
}

}  // namespace lio
