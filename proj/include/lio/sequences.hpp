#pragma once

// Finitely supported sequences on Z^d, the Beurling norm, convolution,
// weighted l^p norms and the weighted Schur type bound for matrices.

#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <string>
#include <vector>

#include "lio/discretization.hpp"
#include "lio/kernels.hpp"

namespace lio {

// values a(k) for |k| <= R (max norm), row major over (k0, k1)
class LatticeSequence {
 public:
  LatticeSequence() = default;
  LatticeSequence(int d, long R) : d_(d), R_(R) {
    check_dim(d);
    require(R >= 0, "sequence: support radius must be >= 0");
    v_.assign(d == 1 ? std::size_t(2 * R + 1) : std::size_t((2 * R + 1) * (2 * R + 1)), 0.0);
  }

  static LatticeSequence delta(int d) {
    LatticeSequence s(d, 0);
    s.v_[0] = 1.0;
    return s;
  }
  // chi_{|k| <= r}
  static LatticeSequence indicator(int d, long r) {
    LatticeSequence s(d, r);
    std::fill(s.v_.begin(), s.v_.end(), 1.0);
    return s;
  }

  int dim() const { return d_; }
  long radius() const { return R_; }
  std::size_t size() const { return v_.size(); }
  const std::vector<double>& values() const { return v_; }
  std::vector<double>& values() { return v_; }

  bool inside(long k0, long k1 = 0) const {
    return std::abs(k0) <= R_ && (d_ == 1 ? k1 == 0 : std::abs(k1) <= R_);
  }
  double at(long k0, long k1 = 0) const { return inside(k0, k1) ? v_[index(k0, k1)] : 0.0; }
  double& ref(long k0, long k1 = 0) {
    require(inside(k0, k1), "sequence: index outside the support box");
    return v_[index(k0, k1)];
  }
  // lattice coordinates of the i-th stored value
  long coord(std::size_t i, int axis) const {
    const long w = 2 * R_ + 1;
    if (d_ == 1) return long(i) - R_;
    return (axis == 0 ? long(i) / w : long(i) % w) - R_;
  }
  long shell(std::size_t i) const {
    return d_ == 1 ? std::abs(coord(i, 0)) : std::max(std::abs(coord(i, 0)), std::abs(coord(i, 1)));
  }

 private:
  std::size_t index(long k0, long k1) const {
    const long w = 2 * R_ + 1;
    return d_ == 1 ? std::size_t(k0 + R_) : std::size_t((k0 + R_) * w + (k1 + R_));
  }
  int d_ = 1;
  long R_ = 0;
  std::vector<double> v_;
};

// number of m in Z^d with |m| = r
inline double shell_count(int d, long r) {
  if (r == 0) return 1.0;
  return d == 1 ? 2.0 : double((2 * r + 1) * (2 * r + 1) - (2 * r - 1) * (2 * r - 1));
}

// sum_m sup_{|k| >= |m|} |a(k)| from the per shell maxima
inline double beurling_from_shells(int d, std::vector<double> shell_max) {
  double run = 0.0, total = 0.0;
  for (long r = long(shell_max.size()) - 1; r >= 0; --r) {
    run = std::max(run, shell_max[std::size_t(r)]);
    total += run * shell_count(d, r);
  }
  return total;
}

inline double beurling_norm(const LatticeSequence& a) {
  std::vector<double> sm(std::size_t(a.radius() + 1), 0.0);
  for (std::size_t i = 0; i < a.size(); ++i) {
    auto& m = sm[std::size_t(a.shell(i))];
    m = std::max(m, std::abs(a.values()[i]));
  }
  return beurling_from_shells(a.dim(), sm);
}

inline LatticeSequence convolve(const LatticeSequence& a, const LatticeSequence& b) {
  require(a.dim() == b.dim(), "convolve: dimension mismatch");
  const int d = a.dim();
  LatticeSequence c(d, a.radius() + b.radius());
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double ai = a.values()[i];
    if (ai == 0.0) continue;
    const long i0 = a.coord(i, 0), i1 = d == 2 ? a.coord(i, 1) : 0;
    for (std::size_t j = 0; j < b.size(); ++j) {
      const double bj = b.values()[j];
      if (bj == 0.0) continue;
      c.ref(i0 + b.coord(j, 0), d == 2 ? i1 + b.coord(j, 1) : 0) += ai * bj;
    }
  }
  return c;
}

// rows "k0[,k1],value"
inline LatticeSequence read_sequence_csv(const std::string& path, int d) {
  check_dim(d);
  auto rows = read_numeric_csv(path);
  long R = 0;
  for (auto& r : rows) {
    if (int(r.size()) != d + 1) throw ParseError("sequence", "sequence csv: expected " + std::to_string(d + 1) + " columns");
    for (int a = 0; a < d; ++a) {
      if (r[a] != std::round(r[a])) throw ParseError("sequence", "sequence csv: lattice index is not an integer");
      R = std::max(R, long(std::abs(r[a])));
    }
  }
  LatticeSequence s(d, R);
  for (auto& r : rows) s.ref(long(r[0]), d == 2 ? long(r[1]) : 0) = r[d];
  return s;
}

// (sum |c|^p w)^{1/p}
template <class Vec>
double weighted_lp_norm(const Vec& c, const std::vector<double>& w, double p) {
  require(p >= 1, "weighted_lp_norm: p must be >= 1");
  require(std::size_t(c.size()) == w.size(), "weighted_lp_norm: length mismatch");
  double s = 0.0;
  for (long i = 0; i < long(c.size()); ++i) {
    const double a = std::abs(c[i]);
    s += (p == 2.0 ? a * a : p == 1.0 ? a : std::pow(a, p)) * w[std::size_t(i)];
  }
  return p == 1.0 ? s : std::pow(s, 1.0 / p);
}

// ---- matrices ----------------------------------------------------------------------

// lattice distance |k - k'| between grid indices
inline long index_distance(const DyadicGrid& g, std::size_t i, std::size_t j) {
  long r = std::abs(g.axis_index(i, 0) - g.axis_index(j, 0));
  if (g.dim() == 2) r = std::max(r, std::abs(g.axis_index(i, 1) - g.axis_index(j, 1)));
  return r;
}

inline double beurling_norm(const Eigen::MatrixXd& A, const DyadicGrid& g) {
  require(std::size_t(A.rows()) == g.size() && A.rows() == A.cols(), "beurling_norm: matrix does not match grid");
  std::vector<double> sm(std::size_t(g.per_axis()), 0.0);
  for (long i = 0; i < A.rows(); ++i)
    for (long j = 0; j < A.cols(); ++j) {
      auto& m = sm[std::size_t(index_distance(g, std::size_t(i), std::size_t(j)))];
      m = std::max(m, std::abs(A(i, j)));
    }
  return beurling_from_shells(g.dim(), sm);
}

inline double beurling_norm(const DiscretizationMatrix& M) {
  const auto& g = M.grid;
  if (M.storage == Storage::dense) return beurling_norm(M.dense, g);
  const long m = g.per_axis();
  std::vector<double> sm(std::size_t(m), 0.0);
  if (M.storage == Storage::toeplitz) {
    const long b0 = g.dim() == 2 ? -(m - 1) : 0, b1 = g.dim() == 2 ? m - 1 : 0;
    for (long a = -(m - 1); a <= m - 1; ++a)
      for (long b = b0; b <= b1; ++b) {
        auto& s = sm[std::size_t(std::max(std::abs(a), std::abs(b)))];
        s = std::max(s, std::abs(M.toeplitz_value(a, b)));
      }
  } else {
    const long n = long(M.size());
    for (std::size_t k = 0; k < M.offsets.size(); ++k) {
      const long off = M.offsets[k];
      for (long i = std::max(0L, -off); i < std::min(n, n - off); ++i) {
        auto& s = sm[std::size_t(index_distance(g, std::size_t(i), std::size_t(i + off)))];
        s = std::max(s, std::abs(M.diags[k][std::size_t(i)]));
      }
    }
  }
  return beurling_from_shells(g.dim(), sm);
}

// random matrix supported on |k - k'| <= band with entries decaying in the distance
inline Eigen::MatrixXd random_banded(const DyadicGrid& g, long band, Rng& rng) {
  const long n = long(g.size());
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n, n);
  for (long i = 0; i < n; ++i)
    for (long j = 0; j < n; ++j) {
      const long r = index_distance(g, std::size_t(i), std::size_t(j));
      if (r <= band) A(i, j) = rng.normal() / (1.0 + r * r);
    }
  return A;
}

struct SchurReport {
  std::string statement = "lem:weighted-schur";
  double p = 2.0;
  double beurling = 0.0;
  double ap = 1.0;
  double quotient = 0.0;    // max over probes |A c|_{p,w} / |c|_{p,w}
  double c_emp = 0.0;       // quotient / (A_p^{1/p} |A|_B)
  double op_norm = -1.0;    // dense 2-norm when p = 2 and w = 1
  std::size_t probes = 0;
};

inline SchurReport schur_weighted_bound_check(const Eigen::MatrixXd& A, const DyadicGrid& g,
                                              const std::vector<double>& w, double p, double Ap, int probes,
                                              std::uint64_t seed, bool dense_oracle = true) {
  require(p >= 1, "schur_weighted_bound_check: p must be >= 1");
  require(w.size() == g.size(), "schur_weighted_bound_check: weight length mismatch");
  SchurReport rep;
  rep.p = p;
  rep.ap = Ap;
  rep.beurling = beurling_norm(A, g);
  const long n = A.rows();
  Rng rng(seed);
  auto probe = [&](const Eigen::VectorXd& c) {
    const double nc = weighted_lp_norm(c, w, p);
    if (nc == 0) return;
    rep.quotient = std::max(rep.quotient, weighted_lp_norm(Eigen::VectorXd(A * c), w, p) / nc);
    ++rep.probes;
  };
  for (int t = 0; t < probes; ++t) {
    Eigen::VectorXd c(n);
    for (long i = 0; i < n; ++i) c[i] = rng.normal();
    probe(c);
    // a unit vector as well: these see single columns, the p = 1 extremals
    probe(Eigen::VectorXd::Unit(n, long(rng.below(std::uint64_t(n)))));
  }
  bool trivial = true;
  for (double v : w) trivial = trivial && v == 1.0;
  if (dense_oracle && p == 2.0 && trivial && n <= 256) {
    Eigen::BDCSVD<Eigen::MatrixXd> svd(A);
    rep.op_norm = svd.singularValues()[0];
  }
  const double denom = std::pow(Ap, 1.0 / p) * rep.beurling;
  rep.c_emp = denom > 0 ? rep.quotient / denom : 0.0;
  return rep;
}

}  // namespace lio
