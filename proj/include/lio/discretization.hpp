#pragma once

// The discretization matrix A_n of a kernel on a dyadic grid, its storage
// (Toeplitz for convolution kernels, dense or diagonal-banded otherwise),
// fast products, the off-diagonal decay check and serialization.

#include <Eigen/Dense>
#include <unsupported/Eigen/FFT>

#include <bit>
#include <complex>
#include <cstring>
#include <mutex>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "lio/core.hpp"
#include "lio/grid.hpp"
#include "lio/kernels.hpp"
#include "lio/quadrature.hpp"

namespace lio {

using cplx = std::complex<double>;
using VecD = Eigen::VectorXd;
using VecC = Eigen::VectorXcd;

// ---- Toeplitz products by circulant embedding -----------------------------

// y_i = sum_j t(i - j) x_j over multi-indices; t indexed by offsets in
// [-(m-1), m-1]^d
class ToeplitzFFT {
 public:
  ToeplitzFFT() = default;
  ToeplitzFFT(int d, long m, const std::vector<double>& t) : d_(d), m_(m) {
    P_ = 1;
    while (P_ < 2 * m - 1) P_ *= 2;
    const long w = 2 * m - 1;
    std::vector<cplx> c(d == 1 ? P_ : P_ * P_, 0.0);
    auto wrap = [&](long k) { return k < 0 ? k + P_ : k; };
    if (d == 1) {
      for (long k = -(m - 1); k <= m - 1; ++k) c[wrap(k)] = t[k + m - 1];
    } else {
      for (long a = -(m - 1); a <= m - 1; ++a)
        for (long b = -(m - 1); b <= m - 1; ++b) c[wrap(a) * P_ + wrap(b)] = t[(a + m - 1) * w + (b + m - 1)];
    }
    hat_ = forward(c);
  }

  long padded() const { return P_; }

  VecC apply(const VecC& x) const {
    const std::size_t n = d_ == 1 ? std::size_t(m_) : std::size_t(m_ * m_);
    std::vector<cplx> buf(d_ == 1 ? P_ : P_ * P_, 0.0);
    if (d_ == 1) {
      for (long i = 0; i < m_; ++i) buf[i] = x[i];
    } else {
      for (long i = 0; i < m_; ++i)
        for (long j = 0; j < m_; ++j) buf[i * P_ + j] = x[i * m_ + j];
    }
    auto f = forward(buf);
    for (std::size_t i = 0; i < f.size(); ++i) f[i] *= hat_[i];
    auto y = inverse(f);
    VecC out(n);
    if (d_ == 1) {
      for (long i = 0; i < m_; ++i) out[i] = y[i];
    } else {
      for (long i = 0; i < m_; ++i)
        for (long j = 0; j < m_; ++j) out[i * m_ + j] = y[i * P_ + j];
    }
    return out;
  }

  VecD apply(const VecD& x) const { return apply(VecC(x.cast<cplx>())).real(); }

 private:
  static Eigen::FFT<double>& engine() {
    thread_local Eigen::FFT<double> fft;
    return fft;
  }
  std::vector<cplx> forward(const std::vector<cplx>& in) const { return transform(in, false); }
  std::vector<cplx> inverse(const std::vector<cplx>& in) const { return transform(in, true); }
  std::vector<cplx> transform(const std::vector<cplx>& in, bool inv) const {
    auto& fft = engine();
    if (d_ == 1) {
      std::vector<cplx> out;
      if (inv) fft.inv(out, in);
      else fft.fwd(out, in);
      return out;
    }
    std::vector<cplx> a(in), row(P_), res;
    for (long i = 0; i < P_; ++i) {
      std::copy(a.begin() + i * P_, a.begin() + (i + 1) * P_, row.begin());
      if (inv) fft.inv(res, row);
      else fft.fwd(res, row);
      std::copy(res.begin(), res.end(), a.begin() + i * P_);
    }
    for (long j = 0; j < P_; ++j) {
      for (long i = 0; i < P_; ++i) row[i] = a[i * P_ + j];
      if (inv) fft.inv(res, row);
      else fft.fwd(res, row);
      for (long i = 0; i < P_; ++i) a[i * P_ + j] = res[i];
    }
    return a;
  }

  int d_ = 1;
  long m_ = 0, P_ = 1;
  std::vector<cplx> hat_;
};

// ---- the matrix -----------------------------------------------------------------

enum class Storage : std::uint32_t { toeplitz = 0, dense = 1, banded = 2 };

inline const char* to_string(Storage s) {
  switch (s) {
    case Storage::toeplitz: return "toeplitz";
    case Storage::dense: return "dense";
    case Storage::banded: return "banded";
  }
  return "?";
}

struct AssemblyOptions {
  double rel_tol = 1e-10;
  double band_threshold = 1e-10;
  std::size_t dense_limit = 4096;
};

class DiscretizationMatrix {
 public:
  DyadicGrid grid;
  Storage storage = Storage::dense;
  std::string kernel;
  double quad_tol = 1e-10;
  double band_threshold = 1e-10;
  long band_radius = -1;  // lattice units, banded storage only

  // toeplitz: t over offsets in [-(m-1), m-1]^d
  std::vector<double> toe;
  // dense
  Eigen::MatrixXd dense;
  // banded (DIA): A(i, i + off[k]) = diag[k][i]
  std::vector<long> offsets;
  std::vector<std::vector<double>> diags;

  std::size_t size() const { return grid.size(); }

  double toeplitz_value(long a, long b = 0) const {
    const long m = grid.per_axis();
    if (grid.dim() == 1) return toe[a + m - 1];
    return toe[(a + m - 1) * (2 * m - 1) + (b + m - 1)];
  }

  double operator()(std::size_t i, std::size_t j) const {
    switch (storage) {
      case Storage::toeplitz: {
        const long a = grid.axis_index(i, 0) - grid.axis_index(j, 0);
        const long b = grid.dim() == 2 ? grid.axis_index(i, 1) - grid.axis_index(j, 1) : 0;
        return toeplitz_value(a, b);
      }
      case Storage::dense: return dense(long(i), long(j));
      case Storage::banded: {
        const long off = long(j) - long(i);
        auto it = std::lower_bound(offsets.begin(), offsets.end(), off);
        if (it == offsets.end() || *it != off) return 0.0;
        return diags[std::size_t(it - offsets.begin())][i];
      }
    }
    return 0.0;
  }

  Eigen::MatrixXd to_dense() const {
    if (storage == Storage::dense) return dense;
    const long n = long(size());
    Eigen::MatrixXd M(n, n);
    parallel_for(std::size_t(n), [&](std::size_t i) {
      for (long j = 0; j < n; ++j) M(long(i), j) = (*this)(i, std::size_t(j));
    });
    return M;
  }

  bool symmetric(double tol = 0.0) const {
    if (storage == Storage::toeplitz) {
      const long m = grid.per_axis();
      for (long a = -(m - 1); a <= m - 1; ++a)
        for (long b = (grid.dim() == 2 ? -(m - 1) : 0); b <= (grid.dim() == 2 ? m - 1 : 0); ++b)
          if (std::abs(toeplitz_value(a, b) - toeplitz_value(-a, -b)) > tol) return false;
      return true;
    }
    const long n = long(size());
    for (long i = 0; i < n; ++i)
      for (long j = i + 1; j < n; ++j)
        if (std::abs((*this)(i, j) - (*this)(j, i)) > tol) return false;
    return true;
  }

  const ToeplitzFFT& fft() const {
    static std::mutex mu;
    std::lock_guard<std::mutex> lock(mu);
    if (!fft_) fft_ = std::make_shared<ToeplitzFFT>(grid.dim(), grid.per_axis(), toe);
    return *fft_;
  }

  template <class Vec>
  Vec apply(const Vec& x) const {
    using S = typename Vec::Scalar;
    const long n = long(size());
    require(x.size() == n, "matrix product: vector length mismatch");
    if (storage == Storage::toeplitz) {
      if (n > 64) {
        if constexpr (std::is_same_v<S, double>) return fft().apply(VecD(x));
        else return fft().apply(VecC(x));
      }
      Vec y = Vec::Zero(n);
      for (long i = 0; i < n; ++i)
        for (long j = 0; j < n; ++j) y[i] += (*this)(std::size_t(i), std::size_t(j)) * x[j];
      return y;
    }
    if (storage == Storage::dense) return (dense.cast<S>() * x).eval();
    Vec y = Vec::Zero(n);
    for (std::size_t k = 0; k < offsets.size(); ++k) {
      const long off = offsets[k];
      const auto& dg = diags[k];
      const long lo = std::max(0L, -off), hi = std::min(n, n - off);
      for (long i = lo; i < hi; ++i) y[i] += dg[i] * x[i + off];
    }
    return y;
  }

  // A^T x (conjugate-free transpose)
  template <class Vec>
  Vec apply_transpose(const Vec& x) const {
    using S = typename Vec::Scalar;
    if (storage == Storage::dense) return (dense.transpose().cast<S>() * x).eval();
    if (storage == Storage::toeplitz && symmetric_cache()) return apply(x);
    const long n = long(size());
    Vec y = Vec::Zero(n);
    if (storage == Storage::banded) {
      for (std::size_t k = 0; k < offsets.size(); ++k) {
        const long off = offsets[k];
        const auto& dg = diags[k];
        const long lo = std::max(0L, -off), hi = std::min(n, n - off);
        for (long i = lo; i < hi; ++i) y[i + off] += dg[i] * x[i];
      }
      return y;
    }
    for (long i = 0; i < n; ++i)
      for (long j = 0; j < n; ++j) y[j] += (*this)(std::size_t(i), std::size_t(j)) * x[i];
    return y;
  }

 private:
  bool symmetric_cache() const {
    static std::mutex mu;
    std::lock_guard<std::mutex> lock(mu);
    if (sym_ < 0) sym_ = symmetric(0.0) ? 1 : 0;
    return sym_ == 1;
  }
  mutable std::shared_ptr<ToeplitzFFT> fft_;
  mutable int sym_ = -1;
};

// ---- assembly -------------------------------------------------------------------

namespace detail {

// int_{-h}^{h} (h - |s|) F(s) ds with a possible singular point at `sing`
template <class F>
QuadResult triangle_integral(F&& f, double h, double sing, bool singular, const QuadOptions& o) {
  auto g = [&](double s) { return (h - std::abs(s)) * f(s); };
  QuadResult acc;
  const double pts[3] = {-h, 0.0, h};
  for (int k = 0; k < 2; ++k) {
    const double a = pts[k], b = pts[k + 1];
    if (singular && sing >= a && sing <= b) acc += integrate_around(g, a, b, sing, o);
    else acc += integrate(g, a, b, o);
  }
  return acc;
}

}  // namespace detail

// a_n(lambda, lambda') for a convolution kernel at lattice offset delta:
// h^{-2d} int_{[-h,h]^d} prod(h - |s_i|) g(delta h + s) ds
inline double convolution_entry(const Kernel& k, double h, long d0, long d1, const QuadOptions& o,
                                const std::string& where = "") {
  const int d = k.dim();
  const bool sing = k.singular();
  if (d == 1) {
    auto f = [&](double s) { return k.profile(Point(d0 * h + s)); };
    auto r = detail::triangle_integral(f, h, -d0 * h, sing && std::abs(d0) <= 1, o);
    if (!r.converged || !std::isfinite(r.value))
      throw QuadratureError("assemble: quadrature diverged on cell offset " + std::to_string(d0) + where, r.error);
    return r.value / (h * h);
  }
  bool ok = true;
  double err = 0.0;
  auto outer = [&](double s0) {
    auto f = [&](double s1) { return k.profile(Point(d0 * h + s0, d1 * h + s1)); };
    const bool on_line = sing && std::abs(d1) <= 1 && std::abs(d0 * h + s0) < 1e-300;
    auto r = detail::triangle_integral(f, h, -d1 * h, sing && std::abs(d1) <= 1 && (std::abs(d0) <= 1 || on_line), o);
    ok = ok && r.converged;
    err = std::max(err, r.error);
    return r.value;
  };
  auto r = detail::triangle_integral(outer, h, -d0 * h, sing && std::abs(d0) <= 1, o);
  if (!ok || !r.converged || !std::isfinite(r.value))
    throw QuadratureError("assemble: quadrature diverged on cell offset (" + std::to_string(d0) + "," +
                              std::to_string(d1) + ")" + where,
                          std::max(err, r.error));
  return r.value / std::pow(h, 4);
}

// a_n(lambda_i, lambda_j) for a general kernel
inline double general_entry(const Kernel& k, const DyadicGrid& g, std::size_t i, std::size_t j, const QuadOptions& o) {
  const int d = k.dim();
  const double h = g.spacing();
  const Cube ci = g.cell(i), cj = g.cell(j);
  if (d == 1) {
    bool ok = true;
    auto outer = [&](double x) {
      auto f = [&](double y) { return k(Point(x), Point(y)); };
      // kernels are typically kinked or singular on the diagonal: split there
      const bool inside = x > cj.lo(0) && x < cj.hi(0);
      QuadResult r = !inside      ? integrate(f, cj.lo(0), cj.hi(0), o)
                     : k.singular() ? integrate_around(f, cj.lo(0), cj.hi(0), x, o)
                                    : integrate_breaks(f, {cj.lo(0), x, cj.hi(0)}, o);
      ok = ok && r.converged;
      return r.value;
    };
    auto r = integrate(outer, ci.lo(0), ci.hi(0), o);
    if (!ok || !r.converged || !std::isfinite(r.value))
      throw QuadratureError("assemble: quadrature diverged on cell pair (" + std::to_string(i) + "," +
                                std::to_string(j) + ")",
                            r.error);
    return r.value / (h * h);
  }
  if (k.singular()) throw UnsupportedError("assemble: singular general kernels are supported in d = 1 only");
  static const GaussRule gl = gauss_legendre(8);
  double acc = 0.0;
  const double hh = 0.5 * h;
  for (std::size_t a = 0; a < gl.x.size(); ++a)
    for (std::size_t b = 0; b < gl.x.size(); ++b) {
      const Point x(ci.center[0] + hh * gl.x[a], ci.center[1] + hh * gl.x[b]);
      for (std::size_t c = 0; c < gl.x.size(); ++c)
        for (std::size_t e = 0; e < gl.x.size(); ++e) {
          const Point y(cj.center[0] + hh * gl.x[c], cj.center[1] + hh * gl.x[e]);
          acc += gl.w[a] * gl.w[b] * gl.w[c] * gl.w[e] * k(x, y);
        }
    }
  // weights sum to 2 per axis; the cell measure is h^4 so the mean is acc / 16
  return acc / 16.0;
}

inline DiscretizationMatrix assemble_an(const Kernel& k, const DyadicGrid& grid, const AssemblyOptions& opt = {}) {
  require(k.dim() == grid.dim(), "assemble_an: dimension mismatch");
  DiscretizationMatrix M;
  M.grid = grid;
  M.kernel = k.descriptor();
  M.quad_tol = opt.rel_tol;
  M.band_threshold = opt.band_threshold;
  const QuadOptions o{opt.rel_tol, 1e-300, 2000};
  const double h = grid.spacing();
  const long m = grid.per_axis();
  const int d = grid.dim();
  if (k.is_convolution()) {
    M.storage = Storage::toeplitz;
    const long w = 2 * m - 1;
    M.toe.assign(d == 1 ? w : w * w, 0.0);
    if (k.is_zero()) return M;
    if (d == 1) {
      const long count = k.even() ? m : w;
      parallel_for(std::size_t(count), [&](std::size_t idx) {
        const long a = k.even() ? long(idx) : long(idx) - (m - 1);
        const double v = convolution_entry(k, h, a, 0, o);
        M.toe[a + m - 1] = v;
        if (k.even()) M.toe[-a + m - 1] = v;
      });
    } else {
      const bool quad = k.coord_even();
      const long span = quad ? m : w;
      parallel_for(std::size_t(span * span), [&](std::size_t idx) {
        const long a = long(idx / span) - (quad ? 0 : m - 1);
        const long b = long(idx % span) - (quad ? 0 : m - 1);
        const double v = convolution_entry(k, h, a, b, o);
        auto put = [&](long x, long y) { M.toe[(x + m - 1) * w + (y + m - 1)] = v; };
        put(a, b);
        if (quad) {
          put(-a, b);
          put(a, -b);
          put(-a, -b);
        }
      });
    }
    return M;
  }
  const std::size_t n = grid.size();
  if (n <= opt.dense_limit) {
    M.storage = Storage::dense;
    M.dense.resize(long(n), long(n));
    parallel_for(n, [&](std::size_t i) {
      for (std::size_t j = 0; j < n; ++j) M.dense(long(i), long(j)) = general_entry(k, grid, i, j, o);
    });
    return M;
  }
  // banded: drop entries whose off-diagonal bound r_K(|lambda - lambda'|/2) is below the threshold
  const auto prof = radial_dominator(k);
  long R = 2;
  while (R < m && prof(0.5 * (R + 1) * h) > opt.band_threshold) ++R;
  M.storage = Storage::banded;
  M.band_radius = R;
  std::vector<long> offs;
  if (d == 1) {
    for (long a = -R; a <= R; ++a) offs.push_back(a);
  } else {
    for (long a = -R; a <= R; ++a)
      for (long b = -R; b <= R; ++b) offs.push_back(a * m + b);
  }
  std::sort(offs.begin(), offs.end());
  M.offsets = offs;
  M.diags.assign(offs.size(), std::vector<double>(n, 0.0));
  parallel_for(n, [&](std::size_t i) {
    for (std::size_t kk = 0; kk < offs.size(); ++kk) {
      const long j = long(i) + offs[kk];
      if (j < 0 || j >= long(n)) continue;
      if (d == 2) {
        const long da = grid.axis_index(std::size_t(j), 0) - grid.axis_index(i, 0);
        const long db = grid.axis_index(std::size_t(j), 1) - grid.axis_index(i, 1);
        if (std::abs(da) > R || std::abs(db) > R) continue;
      }
      M.diags[kk][i] = general_entry(k, grid, i, std::size_t(j), o);
    }
  });
  return M;
}

// ---- off-diagonal decay -----------------------------------------------------------

struct OffDiagonalReport {
  std::size_t checked = 0;
  std::size_t violations = 0;
  double worst_margin = kInf;  // min over entries of bound - |a|
  double near_bound = 0.0;     // 2^{nd} int_{|t| <= 3 2^-n} r_K
  double max_far_ratio = 0.0;  // max |a| / bound over far entries with bound > 0
  std::size_t worst_i = 0, worst_j = 0;
};

inline OffDiagonalReport off_diagonal_check(const DiscretizationMatrix& M, const RadialProfile& prof, double tol = 1e-8) {
  OffDiagonalReport rep;
  const auto& g = M.grid;
  const double h = g.spacing();
  rep.near_bound = g.scale() * prof.ball_integral(3 * h);
  auto judge = [&](double a, double dist, std::size_t count, std::size_t i, std::size_t j) {
    const bool near = dist <= 2 * h * (1 + 1e-12);
    const double bound = near ? rep.near_bound : prof(0.5 * dist);
    const double margin = bound - std::abs(a);
    rep.checked += count;
    if (std::abs(a) > bound + tol) rep.violations += count;
    if (margin < rep.worst_margin) {
      rep.worst_margin = margin;
      rep.worst_i = i;
      rep.worst_j = j;
    }
    if (!near && bound > 0) rep.max_far_ratio = std::max(rep.max_far_ratio, std::abs(a) / bound);
  };
  if (M.storage == Storage::toeplitz) {
    const long m = g.per_axis();
    const int d = g.dim();
    for (long a = -(m - 1); a <= m - 1; ++a)
      for (long b = (d == 2 ? -(m - 1) : 0); b <= (d == 2 ? m - 1 : 0); ++b) {
        const double dist = double(std::max(std::abs(a), std::abs(b))) * h;
        const std::size_t count = std::size_t(m - std::abs(a)) * (d == 2 ? std::size_t(m - std::abs(b)) : 1);
        judge(M.toeplitz_value(a, b), dist, count, std::size_t(std::max(a, 0L)), std::size_t(std::max(-a, 0L)));
      }
    return rep;
  }
  const std::size_t n = M.size();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) judge(M(i, j), (g.point(i) - g.point(j)).norm(), 1, i, j);
  return rep;
}

// ---- serialization ----------------------------------------------------------------

// little-endian container:
//   "LIOAN\0\0\0", u32 d, i32 n, f64 L, u32 storage, u64 points,
//   then per storage:
//     toeplitz: u64 count, count x (i64 a, i64 b, f64 value)
//     dense:    points^2 f64, row major
//     banded:   u64 count, count x i64 offsets, then count x points f64
namespace detail {

template <class T>
void put(std::ostream& os, T v) {
  unsigned char b[sizeof(T)];
  std::memcpy(b, &v, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(b, b + sizeof(T));
  os.write(reinterpret_cast<const char*>(b), sizeof(T));
}

template <class T>
T get(std::istream& is) {
  unsigned char b[sizeof(T)];
  is.read(reinterpret_cast<char*>(b), sizeof(T));
  if (!is) throw ParseError("matrix", "truncated matrix file");
  if constexpr (std::endian::native == std::endian::big) std::reverse(b, b + sizeof(T));
  T v;
  std::memcpy(&v, b, sizeof(T));
  return v;
}

}  // namespace detail

inline void write_binary(const DiscretizationMatrix& M, std::ostream& os) {
  os.write("LIOAN\0\0\0", 8);
  detail::put<std::uint32_t>(os, std::uint32_t(M.grid.dim()));
  detail::put<std::int32_t>(os, M.grid.level());
  detail::put<double>(os, M.grid.box());
  detail::put<std::uint32_t>(os, std::uint32_t(M.storage));
  detail::put<std::uint64_t>(os, M.size());
  const long m = M.grid.per_axis();
  switch (M.storage) {
    case Storage::toeplitz: {
      const int d = M.grid.dim();
      const std::uint64_t count = d == 1 ? std::uint64_t(2 * m - 1) : std::uint64_t((2 * m - 1) * (2 * m - 1));
      detail::put<std::uint64_t>(os, count);
      for (long a = -(m - 1); a <= m - 1; ++a)
        for (long b = (d == 2 ? -(m - 1) : 0); b <= (d == 2 ? m - 1 : 0); ++b) {
          detail::put<std::int64_t>(os, a);
          detail::put<std::int64_t>(os, b);
          detail::put<double>(os, M.toeplitz_value(a, b));
        }
      break;
    }
    case Storage::dense:
      for (long i = 0; i < M.dense.rows(); ++i)
        for (long j = 0; j < M.dense.cols(); ++j) detail::put<double>(os, M.dense(i, j));
      break;
    case Storage::banded:
      detail::put<std::uint64_t>(os, M.offsets.size());
      for (long o : M.offsets) detail::put<std::int64_t>(os, o);
      for (auto& dg : M.diags)
        for (double v : dg) detail::put<double>(os, v);
      break;
  }
}

inline DiscretizationMatrix read_binary(std::istream& is) {
  char magic[8];
  is.read(magic, 8);
  if (!is || std::memcmp(magic, "LIOAN", 5) != 0) throw ParseError("matrix", "not a discretization matrix file");
  const int d = int(detail::get<std::uint32_t>(is));
  const int n = detail::get<std::int32_t>(is);
  const double L = detail::get<double>(is);
  const auto st = Storage(detail::get<std::uint32_t>(is));
  const auto pts = detail::get<std::uint64_t>(is);
  DiscretizationMatrix M;
  M.grid = DyadicGrid(d, n, L);
  M.storage = st;
  if (pts != M.size()) throw ParseError("matrix", "point count does not match the grid header");
  const long m = M.grid.per_axis();
  switch (st) {
    case Storage::toeplitz: {
      const auto count = detail::get<std::uint64_t>(is);
      const long w = 2 * m - 1;
      M.toe.assign(d == 1 ? w : w * w, 0.0);
      for (std::uint64_t c = 0; c < count; ++c) {
        const long a = long(detail::get<std::int64_t>(is));
        const long b = long(detail::get<std::int64_t>(is));
        const double v = detail::get<double>(is);
        if (d == 1) M.toe[a + m - 1] = v;
        else M.toe[(a + m - 1) * w + (b + m - 1)] = v;
      }
      break;
    }
    case Storage::dense:
      M.dense.resize(long(pts), long(pts));
      for (long i = 0; i < long(pts); ++i)
        for (long j = 0; j < long(pts); ++j) M.dense(i, j) = detail::get<double>(is);
      break;
    case Storage::banded: {
      const auto count = detail::get<std::uint64_t>(is);
      for (std::uint64_t c = 0; c < count; ++c) M.offsets.push_back(long(detail::get<std::int64_t>(is)));
      M.diags.assign(count, std::vector<double>(pts));
      for (auto& dg : M.diags)
        for (auto& v : dg) v = detail::get<double>(is);
      break;
    }
    default: throw ParseError("matrix", "unknown storage tag");
  }
  return M;
}

inline void write_binary(const DiscretizationMatrix& M, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("io", "cannot write '" + path + "'");
  write_binary(M, os);
}

inline DiscretizationMatrix read_binary(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("io", "cannot read '" + path + "'");
  return read_binary(is);
}

// i, j, lambda_i, lambda_j, value for small grids
inline void write_csv(const DiscretizationMatrix& M, std::ostream& os, std::size_t max_points = 1024) {
  if (M.size() > max_points) throw UnsupportedError("csv export is limited to small grids");
  os << "statement,prop:discretization-matrix\n";
  const int d = M.grid.dim();
  os << "i,j";
  for (int a = 0; a < d; ++a) os << ",lambda_" << a;
  for (int a = 0; a < d; ++a) os << ",lambda_prime_" << a;
  os << ",value\n";
  char buf[64];
  for (std::size_t i = 0; i < M.size(); ++i)
    for (std::size_t j = 0; j < M.size(); ++j) {
      os << i << "," << j;
      const Point p = M.grid.point(i), q = M.grid.point(j);
      for (int a = 0; a < d; ++a) {
        std::snprintf(buf, sizeof buf, ",%.12g", p[a]);
        os << buf;
      }
      for (int a = 0; a < d; ++a) {
        std::snprintf(buf, sizeof buf, ",%.12g", q[a]);
        os << buf;
      }
      std::snprintf(buf, sizeof buf, ",%.12g\n", M(i, j));
      os << buf;
    }
}

}  // namespace lio
