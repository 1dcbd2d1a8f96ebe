#pragma once

// Applying T, approximation decay of P_n T P_n, stability constants of
// zI - T through the discretized problem, spectrum scans, symbol ranges and
// the bootstrap plan.

#include <Eigen/Dense>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <complex>
#include <map>
#include <string>
#include <vector>

#include "lio/discretization.hpp"
#include "lio/grid.hpp"
#include "lio/kernels.hpp"
#include "lio/sequences.hpp"
#include "lio/weights.hpp"

namespace lio {

// ---- applying T --------------------------------------------------------------------

namespace detail {

inline std::vector<double> line_breaks(double lo, double hi, double x, const std::vector<double>& extra) {
  std::vector<double> b{lo, hi};
  if (x > lo && x < hi) b.push_back(x);
  for (double e : extra)
    if (e > lo && e < hi) b.push_back(e);
  std::sort(b.begin(), b.end());
  b.erase(std::unique(b.begin(), b.end()), b.end());
  return b;
}

template <class F>
QuadResult line_integral(F&& f, const std::vector<double>& b, double sing, bool singular, const QuadOptions& o) {
  QuadResult acc;
  for (std::size_t i = 0; i + 1 < b.size(); ++i) {
    if (singular && b[i] == sing) acc += integrate_toward(f, b[i], b[i + 1], sing, o);
    else if (singular && b[i + 1] == sing) acc += integrate_toward(f, b[i], b[i + 1], sing, o);
    else acc += integrate(f, b[i], b[i + 1], o);
  }
  return acc;
}

}  // namespace detail

// Tf(x) = int_box K(x, y) f(y) dy; `breaks` are coordinates where f has kinks
inline double apply_at(const Kernel& k, const std::function<double(const Point&)>& f, const Point& x,
                       const std::vector<double>& breaks = {}, const QuadOptions& o = {1e-10, 1e-14, 2000}) {
  require(x.d == k.dim(), "apply_operator: point dimension mismatch");
  if (k.is_zero()) return 0.0;
  const double L = k.box();
  const bool sing = k.singular();
  if (k.dim() == 1) {
    auto g = [&](double y) { return k(x, Point(y)) * f(Point(y)); };
    auto r = detail::line_integral(g, detail::line_breaks(-L, L, x[0], breaks), x[0], sing, o);
    if (!r.converged) throw QuadratureError("apply_operator: quadrature did not converge", r.error);
    return r.value;
  }
  bool ok = true;
  auto outer = [&](double y0) {
    auto inner = [&](double y1) {
      const Point y(y0, y1);
      return k(x, y) * f(y);
    };
    auto r = detail::line_integral(inner, detail::line_breaks(-L, L, x[1], breaks), x[1], sing && y0 == x[0], o);
    ok = ok && r.converged;
    return r.value;
  };
  auto r = detail::line_integral(outer, detail::line_breaks(-L, L, x[0], breaks), x[0], sing, o);
  if (!r.converged || !ok) throw QuadratureError("apply_operator: quadrature did not converge", r.error);
  return r.value;
}

inline std::vector<double> apply_operator(const Kernel& k, const std::function<double(const Point&)>& f,
                                          const DyadicGrid& grid, const std::vector<double>& breaks = {}) {
  require(grid.dim() == k.dim(), "apply_operator: grid dimension mismatch");
  std::vector<double> out(grid.size());
  parallel_for(grid.size(), [&](std::size_t i) { out[i] = apply_at(k, f, grid.point(i), breaks); });
  return out;
}

// ---- fine reference -------------------------------------------------------------------

// Cells lambda + 2^-n[-1/2, 1/2)^d of different levels are not nested, but
// all their faces lie on 2^-(m+1) Z for n <= m. Functions of V_n, n <= m,
// are therefore piecewise constant on the common refinement into cubes of
// side q = 2^-(m+1), where every norm is exact.
class Refinement {
 public:
  Refinement(int d, int m, double L, int n_min) : d_(d), m_(m), L_(L) {
    q_ = std::ldexp(1.0, -(m + 1));
    double lo = kInf, hi = -kInf;
    for (int n = n_min; n <= m; ++n) {
      DyadicGrid g(d, n, L);
      lo = std::min(lo, (double(g.first_index()) - 0.5) * g.spacing());
      hi = std::max(hi, (double(g.first_index() + g.per_axis()) - 0.5) * g.spacing());
    }
    j0_ = long(std::floor(lo / q_ + 1e-9));
    cnt_ = long(std::ceil(hi / q_ - 1e-9)) - j0_;
    size_ = d == 1 ? std::size_t(cnt_) : std::size_t(cnt_) * std::size_t(cnt_);
    require(size_ <= (std::size_t(1) << 27), "refinement: reference grid too large; reduce the box or the level");
  }

  std::size_t size() const { return size_; }
  double volume() const { return std::pow(q_, d_); }

  Cube cube(std::size_t J) const {
    Point c = Point::zero(d_);
    c[0] = (double(j0_ + axis(J, 0)) + 0.5) * q_;
    if (d_ == 2) c[1] = (double(j0_ + axis(J, 1)) + 0.5) * q_;
    return Cube(c, 0.5 * q_);
  }

  // sub cube -> cell of g, or -1
  std::vector<long> map(const DyadicGrid& g) const {
    std::vector<long> ax(static_cast<std::size_t>(cnt_));
    for (long j = 0; j < cnt_; ++j) {
      const double mid = (double(j0_ + j) + 0.5) * q_;
      const long k = long(std::floor(mid / g.spacing() + 0.5)) - g.first_index();
      ax[std::size_t(j)] = (k >= 0 && k < g.per_axis()) ? k : -1;
    }
    std::vector<long> out(size_);
    for (std::size_t J = 0; J < size_; ++J) {
      const long a = ax[std::size_t(axis(J, 0))];
      if (d_ == 1) {
        out[J] = a;
        continue;
      }
      const long b = ax[std::size_t(axis(J, 1))];
      out[J] = (a < 0 || b < 0) ? -1 : long(g.linear(a, b));
    }
    return out;
  }

  std::vector<double> lift(const std::vector<long>& mp, const VecD& cells) const {
    std::vector<double> u(size_, 0.0);
    for (std::size_t J = 0; J < size_; ++J)
      if (mp[J] >= 0) u[J] = cells[mp[J]];
    return u;
  }

  // cell averages of a refinement function
  VecD average(const std::vector<long>& mp, const DyadicGrid& g, const std::vector<double>& u) const {
    VecD c = VecD::Zero(long(g.size()));
    for (std::size_t J = 0; J < size_; ++J)
      if (mp[J] >= 0) c[mp[J]] += u[J];
    c *= volume() / g.cell_volume();
    return c;
  }

  std::vector<double> weight_masses(const Weight& w) const {
    std::vector<double> m(size_);
    parallel_for(size_, [&](std::size_t J) { m[J] = w.integral_pow(cube(J), 1.0); });
    return m;
  }

 private:
  long axis(std::size_t J, int a) const {
    if (d_ == 1) return long(J);
    return a == 0 ? long(J) / cnt_ : long(J) % cnt_;
  }
  int d_, m_;
  double L_, q_;
  long j0_ = 0, cnt_ = 0;
  std::size_t size_ = 0;
};

inline double refined_norm(const std::vector<double>& u, const std::vector<double>& mass, double p) {
  double s = 0.0;
  for (std::size_t J = 0; J < u.size(); ++J) {
    const double a = std::abs(u[J]);
    if (a == 0.0) continue;
    s += (p == 2.0 ? a * a : p == 1.0 ? a : std::pow(a, p)) * mass[J];
  }
  return p == 1.0 ? s : std::pow(s, 1.0 / p);
}

inline std::vector<double> difference(const std::vector<double>& a, const std::vector<double>& b) {
  std::vector<double> c(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) c[i] = a[i] - b[i];
  return c;
}

// ---- approximation decay ---------------------------------------------------------------

struct ApproximationOptions {
  int probes = 8;
  std::uint64_t seed = 1;
  int ref_offset = 4;      // reference level m = max n + ref_offset
  double probe_reach = 4;  // probe bumps live in [-reach, reach]^d
};

struct ApproximationReport {
  std::string statement = "prop:approximation";
  std::vector<int> levels;
  std::vector<double> ptp, tp, pt;  // max over probes of the relative errors
  double slope_ptp = 0.0, slope_tp = 0.0, slope_pt = 0.0;
  int reference_level = 0;
  int probes = 0;
};

// least squares slope of log2(e) against n
inline double log2_slope(const std::vector<int>& n, const std::vector<double>& e) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double k = double(n.size());
  for (std::size_t i = 0; i < n.size(); ++i) {
    const double y = std::log2(e[i]);
    sx += n[i];
    sy += y;
    sxx += double(n[i]) * n[i];
    sxy += n[i] * y;
  }
  const double den = k * sxx - sx * sx;
  return den != 0 ? (k * sxy - sx * sy) / den : 0.0;
}

// Relative errors of P_n T P_n, T P_n and P_n T against T on probes of V_m,
// m = max n + ref_offset. T is represented by P_m T P_m = 2^{-md} A_m on V_m,
// so every error carries an O(2^{-m}) reference bias.
inline ApproximationReport approximation_error(const Kernel& k, double p, const Weight& w, std::vector<int> levels,
                                               const ApproximationOptions& opt = {}) {
  require(p >= 1, "approximation_error: p must be >= 1");
  require(!levels.empty(), "approximation_error: empty level list");
  require(w.dim() == k.dim(), "approximation_error: weight dimension mismatch");
  std::sort(levels.begin(), levels.end());
  const int d = k.dim();
  const double L = k.box();
  const int m = levels.back() + opt.ref_offset;
  ApproximationReport rep;
  rep.levels = levels;
  rep.reference_level = m;
  Refinement R(d, m, L, levels.front());
  const auto mass = R.weight_masses(w);
  DyadicGrid gm(d, m, L);
  const auto map_m = R.map(gm);
  const DiscretizationMatrix Am = assemble_an(k, gm);
  const double sm = 1.0 / gm.scale();

  // probes: smooth bumps with random centres, widths and signs, plus the hat
  std::vector<VecD> probes;
  Rng rng(opt.seed);
  const double reach = std::min(opt.probe_reach, 0.5 * L);
  for (int t = 0; t < opt.probes; ++t) {
    struct Bump {
      Point c;
      double s, a;
    };
    std::vector<Bump> bumps;
    for (int b = 0; b < 3; ++b) {
      Point c = Point::zero(d);
      for (int a = 0; a < d; ++a) c[a] = rng.uniform(-reach, reach);
      bumps.push_back({c, std::exp(rng.uniform(std::log(0.25), std::log(2.0))), rng.normal()});
    }
    VecD f(long(gm.size()));
    for (std::size_t i = 0; i < gm.size(); ++i) {
      const Point x = gm.point(i);
      double v = 0.0;
      for (auto& b : bumps) {
        const double r = (x - b.c).euclid() / b.s;
        v += b.a * std::exp(-0.5 * r * r);
      }
      f[long(i)] = v;
    }
    probes.push_back(f);
  }
  {
    VecD hat(long(gm.size()));
    for (std::size_t i = 0; i < gm.size(); ++i) hat[long(i)] = std::max(1.0 - gm.point(i).norm(), 0.0);
    probes.push_back(hat);
  }
  rep.probes = int(probes.size());

  struct Level {
    DyadicGrid g;
    std::vector<long> map;
    DiscretizationMatrix A;
  };
  std::vector<Level> lv;
  for (int n : levels) {
    DyadicGrid g(d, n, L);
    lv.push_back({g, R.map(g), assemble_an(k, g)});
  }
  rep.ptp.assign(levels.size(), 0.0);
  rep.tp.assign(levels.size(), 0.0);
  rep.pt.assign(levels.size(), 0.0);
  for (const VecD& f : probes) {
    const auto fu = R.lift(map_m, f);
    const double nf = refined_norm(fu, mass, p);
    if (nf == 0) continue;
    const VecD Tf_m = sm * Am.apply(f);
    const auto Tf = R.lift(map_m, Tf_m);
    for (std::size_t i = 0; i < lv.size(); ++i) {
      const auto& L_ = lv[i];
      const double sn = 1.0 / L_.g.scale();
      const VecD cn = R.average(L_.map, L_.g, fu);
      // P_n T P_n f
      const auto ptp = R.lift(L_.map, sn * L_.A.apply(cn));
      rep.ptp[i] = std::max(rep.ptp[i], refined_norm(difference(ptp, Tf), mass, p) / nf);
      // T P_n f through the reference
      const VecD pn_on_m = R.average(map_m, gm, R.lift(L_.map, cn));
      const auto tp = R.lift(map_m, sm * Am.apply(pn_on_m));
      rep.tp[i] = std::max(rep.tp[i], refined_norm(difference(tp, Tf), mass, p) / nf);
      // P_n T f
      const auto pt = R.lift(L_.map, R.average(L_.map, L_.g, Tf));
      rep.pt[i] = std::max(rep.pt[i], refined_norm(difference(pt, Tf), mass, p) / nf);
    }
  }
  if (levels.size() >= 2) {
    rep.slope_ptp = log2_slope(levels, rep.ptp);
    rep.slope_tp = log2_slope(levels, rep.tp);
    rep.slope_pt = log2_slope(levels, rep.pt);
  }
  return rep;
}

// ---- zero in the spectrum ------------------------------------------------------------------

struct ZeroSpectrumRow {
  int n = 0;
  double norm_g = 0.0;   // |g_n|_2
  double norm_Tg = 0.0;  // |T g_n|_2
  double ratio = 0.0;
};

// g_n = phi_0 - P_n phi_0 with the hat phi_0(x) = max(1 - |x|, 0), d = 1.
// T g_n is exact up to the tabulation of the first two primitives
//   G0(t) = int_0^t g,  G1(t) = int_0^t s g(s) ds
// on a lattice containing every break point of g_n, so that
//   int_a^b (al + be y) g(x - y) dy = (al + be x)(G0(x-a) - G0(x-b)) - be (G1(x-a) - G1(x-b)).
inline std::vector<ZeroSpectrumRow> zero_spectrum_sequence(const Kernel& k, const std::vector<int>& levels) {
  if (k.dim() != 1 || !k.is_convolution())
    throw UnsupportedError("zero_spectrum_sequence: implemented for one dimensional convolution kernels");
  require(!levels.empty(), "zero_spectrum_sequence: empty level list");
  const int nmax = *std::max_element(levels.begin(), levels.end());
  require(*std::min_element(levels.begin(), levels.end()) >= 0, "zero_spectrum_sequence: levels must be >= 0");
  const double L = k.box();
  require(L >= 2, "zero_spectrum_sequence: box must contain the hat support");
  const double q = std::ldexp(1.0, -(nmax + 3));
  const long J = long(std::ceil((L + 2.0) / q));
  std::vector<double> G0(std::size_t(2 * J + 1), 0.0), G1(std::size_t(2 * J + 1), 0.0);
  auto g = [&](double s) { return k.profile(Point(s)); };
  const QuadOptions o{1e-12, 1e-300, 200};
  for (int side : {1, -1}) {
    std::vector<double> a0(static_cast<std::size_t>(J)), a1(static_cast<std::size_t>(J));
    parallel_for(std::size_t(J), [&](std::size_t j) {
      const double a = side * double(j) * q, b = side * double(j + 1) * q;
      auto f1 = [&](double s) { return s * g(s); };
      if (j == 0 && k.singular()) {
        a0[j] = integrate_toward(g, a, b, 0.0, o).value;
        a1[j] = integrate_toward(f1, a, b, 0.0, o).value;
      } else {
        a0[j] = integrate(g, a, b, o).value;
        a1[j] = integrate(f1, a, b, o).value;
      }
    });
    double s0 = 0.0, s1 = 0.0;
    for (long j = 0; j < J; ++j) {
      s0 += a0[std::size_t(j)];
      s1 += a1[std::size_t(j)];
      G0[std::size_t(J + side * (j + 1))] = s0;
      G1[std::size_t(J + side * (j + 1))] = s1;
    }
  }
  auto at = [&](const std::vector<double>& G, long idx) { return G[std::size_t(idx + J)]; };

  std::vector<ZeroSpectrumRow> rows;
  for (int n : levels) {
    const double h = std::ldexp(1.0, -n);
    // cells meeting (-1, 1): centres -2^n h ... 2^n h
    const long kc = long(std::llround(1.0 / h));
    std::vector<double> br;
    for (long c = -kc; c <= kc + 1; ++c) br.push_back((double(c) - 0.5) * h);
    for (double e : {-1.0, 0.0, 1.0}) br.push_back(e);
    std::sort(br.begin(), br.end());
    br.erase(std::unique(br.begin(), br.end()), br.end());
    // cell averages of the hat
    auto hat_avg = [&](long c) {
      const double a = (double(c) - 0.5) * h, b = (double(c) + 0.5) * h;
      auto F = [](double x) {  // primitive of max(1 - |x|, 0)
        x = std::clamp(x, -1.0, 1.0);
        return x >= 0 ? x - 0.5 * x * x : x + 0.5 * x * x;
      };
      return (F(b) - F(a)) / h;
    };
    struct Piece {
      long a, b;  // break points in units of q
      double al, be;
    };
    std::vector<Piece> pieces;
    double ng2 = 0.0;
    for (std::size_t i = 0; i + 1 < br.size(); ++i) {
      const double a = br[i], b = br[i + 1], mid = 0.5 * (a + b);
      const long c = long(std::floor(mid / h + 0.5));
      const double avg = hat_avg(c);
      double al = -avg, be = 0.0;
      if (mid > -1 && mid < 1) {
        al += 1.0;
        be = mid < 0 ? 1.0 : -1.0;
      }
      pieces.push_back({std::llround(a / q), std::llround(b / q), al, be});
      // int_a^b (al + be y)^2
      ng2 += al * al * (b - a) + al * be * (b * b - a * a) + be * be * (b * b * b - a * a * a) / 3.0;
    }
    // |T g_n|_2 over the box by the trapezoid rule on q Z
    const long X = long(std::floor(L / q));
    std::vector<double> v(std::size_t(2 * X + 1));
    parallel_for(v.size(), [&](std::size_t ii) {
      const long xi = long(ii) - X;
      const double x = double(xi) * q;
      double s = 0.0;
      for (auto& P : pieces)
        s += (P.al + P.be * x) * (at(G0, xi - P.a) - at(G0, xi - P.b)) - P.be * (at(G1, xi - P.a) - at(G1, xi - P.b));
      v[ii] = s;
    });
    double nt2 = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) nt2 += v[i] * v[i] * ((i == 0 || i + 1 == v.size()) ? 0.5 : 1.0);
    nt2 *= q;
    ZeroSpectrumRow r;
    r.n = n;
    r.norm_g = std::sqrt(ng2);
    r.norm_Tg = std::sqrt(nt2);
    r.ratio = r.norm_g > 0 ? r.norm_Tg / r.norm_g : 0.0;
    rows.push_back(r);
  }
  return rows;
}

// ---- boundedness on V_n ----------------------------------------------------------------------

struct BoundednessReport {
  std::string statement = "prop:boundedness";
  double p = 2.0;
  double ap = 1.0;
  double norm_rk = 0.0;
  double quotient = 0.0;      // max |P_n T P_n f|_{p,w} / |f|_{p,w} over f in V_n
  double c_emp = 0.0;         // quotient / (A_p^{1/p} |r_K|_1)
  double c_emp_matrix = 0.0;  // |A_n c| / (2^{nd} A_p^{3/p} |r_K|_1 |c|), the l^p_{w_n} form
  int probes = 0;
};

// On V_n the L^p_w norm is h^{d/p} times the l^p_{w_n} norm of the cell
// averages, and P_n T P_n acts on averages as 2^{-nd} A_n.
inline BoundednessReport boundedness_check(const DiscretizationMatrix& A, const DiscreteWeight& wn, double p,
                                           double Ap, double norm_rk, int probes, std::uint64_t seed) {
  require(wn.grid.same_shape(A.grid), "boundedness_check: weight grid differs");
  BoundednessReport rep;
  rep.p = p;
  rep.ap = Ap;
  rep.norm_rk = norm_rk;
  const long n = long(A.size());
  const double s = 1.0 / A.grid.scale();
  Rng rng(seed);
  for (int t = 0; t < probes; ++t) {
    VecD c(n);
    const long centre = long(rng.below(std::uint64_t(n)));
    const double width = std::exp(rng.uniform(0.0, std::log(double(n))));
    for (long i = 0; i < n; ++i) {
      const double r = double(i - centre) / width;
      c[i] = rng.normal() * std::exp(-0.5 * r * r);
    }
    if (t % 2 == 1)
      for (long i = 0; i < n; ++i) c[i] = std::abs(c[i]);
    const double nc = weighted_lp_norm(c, wn.values, p);
    if (nc == 0) continue;
    rep.quotient = std::max(rep.quotient, weighted_lp_norm(VecD(s * A.apply(c)), wn.values, p) / nc);
    ++rep.probes;
  }
  const double den = std::pow(Ap, 1.0 / p) * norm_rk;
  rep.c_emp = den > 0 ? rep.quotient / den : 0.0;
  const double den2 = std::pow(Ap, 3.0 / p) * norm_rk;
  rep.c_emp_matrix = den2 > 0 ? rep.quotient / den2 : 0.0;
  return rep;
}

// ---- symbol range ---------------------------------------------------------------------------

struct SymbolRange {
  bool real_valued = true;
  std::vector<std::pair<double, double>> intervals;  // real symbols
  std::vector<cplx> points;                          // sampled values, in frequency order, plus 0
  double max_imag = 0.0;

  // distance from z to the reference spectrum
  double distance(cplx z) const {
    if (real_valued) {
      double best = kInf;
      for (auto& [a, b] : intervals) {
        const double re = std::clamp(z.real(), a, b);
        best = std::min(best, std::abs(z - cplx(re, 0.0)));
      }
      return best;
    }
    double best = std::abs(z);
    for (std::size_t i = 0; i < points.size(); ++i) {
      best = std::min(best, std::abs(z - points[i]));
      if (i + 1 < points.size()) {
        const cplx a = points[i], b = points[i + 1], ab = b - a;
        const double t = std::norm(ab) > 0 ? std::clamp(std::real((z - a) * std::conj(ab)) / std::norm(ab), 0.0, 1.0) : 0;
        best = std::min(best, std::abs(z - (a + t * ab)));
      }
    }
    return best;
  }
  bool contains(cplx z, double tol) const { return distance(z) <= tol; }
};

inline std::vector<double> default_xi_grid() {
  std::vector<double> xi{0.0};
  for (double v : geometric_grid(1e-2, 64.0, 48)) {
    xi.push_back(v);
    xi.push_back(-v);
  }
  std::sort(xi.begin(), xi.end());
  return xi;
}

// closure of {g^(xi)} u {0}. A continuous symbol on the connected R^d that
// vanishes at infinity has a connected range containing 0 in its closure,
// so a real symbol gives one interval; sampled extremes are inner bounds.
inline SymbolRange symbol_range(const Kernel& k, const std::vector<double>& xi_grid = default_xi_grid()) {
  if (!k.is_convolution()) throw UnsupportedError("symbol_range: kernel is not of convolution type");
  require(!xi_grid.empty(), "symbol_range: empty frequency grid");
  SymbolRange sr;
  std::vector<Point> xs;
  if (k.dim() == 1) {
    for (double v : xi_grid) xs.emplace_back(v);
  } else {
    for (double a : xi_grid)
      for (double b : xi_grid) xs.emplace_back(a, b);
  }
  auto vals = fourier_symbol(k, xs);
  double mx = 0.0;
  for (auto& v : vals) {
    mx = std::max(mx, std::abs(v));
    sr.max_imag = std::max(sr.max_imag, std::abs(v.imag()));
  }
  sr.real_valued = sr.max_imag <= 1e-9 * std::max(mx, 1e-300);
  sr.points = vals;
  sr.points.push_back({0.0, 0.0});
  if (sr.real_valued) {
    double lo = 0.0, hi = 0.0;
    for (auto& v : vals) {
      lo = std::min(lo, v.real());
      hi = std::max(hi, v.real());
    }
    sr.intervals.push_back({lo, hi});
  }
  return sr;
}

// ---- stability constants -------------------------------------------------------------------

enum class StabilityMethod { closed_form, exact_svd, inverse_lanczos, probe_descent };

inline const char* to_string(StabilityMethod m) {
  switch (m) {
    case StabilityMethod::closed_form: return "closed-form";
    case StabilityMethod::exact_svd: return "exact-svd";
    case StabilityMethod::inverse_lanczos: return "inverse-lanczos";
    case StabilityMethod::probe_descent: return "probe-descent";
  }
  return "?";
}

struct SolverOptions {
  std::size_t svd_limit = 512;  // dense SVD up to this many points
  int lanczos_max = 160;
  double lanczos_tol = 1e-8;
  int starts = 16;              // random starts of the p != 2 descent
  int descent_iters = 400;
  double descent_tol = 1e-7;
  std::uint64_t seed = 1;
};

struct StabilityEstimate {
  cplx z;
  double p = 2.0;
  std::string weight;
  double s_hat = 0.0;
  StabilityMethod method = StabilityMethod::exact_svd;
  VecC witness;               // normalized in l^p_{w_n}
  std::uint64_t witness_hash = 0;
  double witness_norm = 0.0;  // |(zI - 2^{-nd} A_n) witness|_{p,w_n}, recomputed
  bool converged = true;
  std::string warning;
};

inline std::uint64_t hash_vector(const VecC& v) {
  // round to 12 significant digits so the hash survives harmless reordering
  std::vector<double> r;
  r.reserve(std::size_t(2 * v.size()));
  for (long i = 0; i < v.size(); ++i)
    for (double c : {v[i].real(), v[i].imag()}) {
      if (c == 0.0) {
        r.push_back(0.0);
        continue;
      }
      const double e = std::pow(10.0, 11 - std::floor(std::log10(std::abs(c))));
      r.push_back(std::round(c * e) / e);
    }
  return fnv1a(r.data(), r.size() * sizeof(double));
}

// zI - 2^{-nd} A_n with the factorizations and witnesses shared by every
// weight and exponent at one z
class StabilitySolver {
 public:
  StabilitySolver(const DiscretizationMatrix& A, SolverOptions opt = {})
      : A_(A), opt_(opt), s_(1.0 / A.grid.scale()), n_(long(A.size())) {
    zero_ = true;
    if (A.storage == Storage::toeplitz) {
      for (double v : A.toe) zero_ = zero_ && v == 0.0;
    } else if (A.storage == Storage::dense) {
      zero_ = A.dense.cwiseAbs().maxCoeff() == 0.0;
    } else {
      for (auto& dg : A.diags)
        for (double v : dg) zero_ = zero_ && v == 0.0;
    }
    symmetric_ = A.symmetric(0.0);
  }

  long size() const { return n_; }
  double scale() const { return s_; }

  // (zI - sA) x
  VecC apply(cplx z, const VecC& x) const { return z * x - s_ * A_.apply(x); }
  // (zI - sA)^* x
  VecC apply_adjoint(cplx z, const VecC& x) const { return std::conj(z) * x - s_ * A_.apply_transpose(x); }

  double quotient(cplx z, const VecC& c, const DiscreteWeight& w, double p) const {
    const double nc = weighted_lp_norm(c, w.values, p);
    return nc > 0 ? weighted_lp_norm(VecC(apply(z, c)), w.values, p) / nc : kInf;
  }

  StabilityEstimate solve(cplx z, double p, const DiscreteWeight& w) {
    require(p >= 1, "stability_constant: p must be >= 1");
    require(std::size_t(n_) == w.size(), "stability_constant: weight does not match the grid");
    StabilityEstimate e;
    if (zero_) {
      e = closed_form(z, p, w);
    } else if (p == 2.0) {
      e = p2(z, w);
    } else {
      e = descent(z, p, w);
    }
    finish(e, w);
    return e;
  }

 private:
  StabilityEstimate closed_form(cplx z, double p, const DiscreteWeight& w) const {
    StabilityEstimate e;
    e.z = z;
    e.p = p;
    e.weight = w.name;
    e.method = StabilityMethod::closed_form;
    e.s_hat = std::abs(z);
    e.witness = VecC::Zero(n_);
    e.witness[0] = 1.0;
    return e;
  }

  void finish(StabilityEstimate& e, const DiscreteWeight& w) const {
    const double nc = weighted_lp_norm(e.witness, w.values, e.p);
    if (nc > 0) e.witness /= nc;
    e.witness_norm = weighted_lp_norm(VecC(apply(e.z, e.witness)), w.values, e.p);
    e.witness_hash = hash_vector(e.witness);
  }

  // ---- p = 2: sigma_min of D^{1/2} M D^{-1/2}
  StabilityEstimate p2(cplx z, const DiscreteWeight& w) {
    auto key = std::make_pair(w.name, std::make_pair(z.real(), z.imag()));
    if (auto it = cache_.find(key); it != cache_.end()) return it->second;
    StabilityEstimate e;
    e.z = z;
    e.p = 2.0;
    e.weight = w.name;
    VecD sq(n_), isq(n_);
    for (long i = 0; i < n_; ++i) {
      sq[i] = std::sqrt(w[std::size_t(i)]);
      isq[i] = 1.0 / sq[i];
    }
    if (std::size_t(n_) <= opt_.svd_limit) {
      e.method = StabilityMethod::exact_svd;
      const Eigen::MatrixXd Ad = A_.to_dense();
      if (z.imag() == 0.0) {
        Eigen::MatrixXd M = -s_ * Ad;
        M.diagonal().array() += z.real();
        M = sq.asDiagonal() * M * isq.asDiagonal();
        Eigen::BDCSVD<Eigen::MatrixXd> svd(M, Eigen::ComputeFullV);
        e.s_hat = svd.singularValues()[n_ - 1];
        e.witness = (isq.asDiagonal() * svd.matrixV().col(n_ - 1)).cast<cplx>();
      } else {
        Eigen::MatrixXcd M = (-s_ * Ad).cast<cplx>();
        M.diagonal().array() += z;
        M = sq.cast<cplx>().asDiagonal() * M * isq.cast<cplx>().asDiagonal();
        Eigen::BDCSVD<Eigen::MatrixXcd> svd(M, Eigen::ComputeFullV);
        e.s_hat = svd.singularValues()[n_ - 1];
        e.witness = isq.cast<cplx>().asDiagonal() * svd.matrixV().col(n_ - 1);
      }
    } else {
      e.method = StabilityMethod::inverse_lanczos;
      lanczos(z, sq, isq, e);
    }
    cache_[key] = e;
    return e;
  }

  // factorization of zI - sA for the current z
  void factor(cplx z) {
    if (have_factor_ && z == fz_) return;
    have_factor_ = true;
    fz_ = z;
    const Eigen::MatrixXd Ad = A_.to_dense();
    real_ = z.imag() == 0.0;
    if (real_) {
      Eigen::MatrixXd M = -s_ * Ad;
      M.diagonal().array() += z.real();
      lur_.compute(M);
      if (!symmetric_) lurt_.compute(M.transpose());
      luc_ = {};
      luca_ = {};
    } else {
      Eigen::MatrixXcd M = (-s_ * Ad).cast<cplx>();
      M.diagonal().array() += z;
      luc_.compute(M);
      if (!symmetric_) luca_.compute(M.adjoint());
      lur_ = {};
      lurt_ = {};
    }
  }

  // M^{-1} x and M^{-*} x
  VecC solve_m(const VecC& x) const {
    if (real_) {
      VecD re = lur_.solve(VecD(x.real())), im = lur_.solve(VecD(x.imag()));
      VecC y(x.size());
      y.real() = re;
      y.imag() = im;
      return y;
    }
    return luc_.solve(x);
  }
  VecC solve_adj(const VecC& x) const {
    if (real_) {
      const auto& lu = symmetric_ ? lur_ : lurt_;
      VecD re = lu.solve(VecD(x.real())), im = lu.solve(VecD(x.imag()));
      VecC y(x.size());
      y.real() = re;
      y.imag() = im;
      return y;
    }
    // symmetric A: M^* = conj(M)
    if (symmetric_) return luc_.solve(VecC(x.conjugate())).conjugate();
    return luca_.solve(x);
  }

  // largest eigenvalue of H = Mt^{-*} Mt^{-1}, Mt = D^{1/2} M D^{-1/2}
  void lanczos(cplx z, const VecD& sq, const VecD& isq, StabilityEstimate& e) {
    factor(z);
    auto minv = [&](const VecC& x) { return VecC(sq.cast<cplx>().cwiseProduct(solve_m(isq.cast<cplx>().cwiseProduct(x)))); };
    auto minv_adj = [&](const VecC& x) {
      return VecC(isq.cast<cplx>().cwiseProduct(solve_adj(sq.cast<cplx>().cwiseProduct(x))));
    };
    const int kmax = int(std::min<long>(opt_.lanczos_max, n_));
    Eigen::MatrixXcd V(n_, kmax + 1);
    std::vector<double> alpha, beta;
    Rng rng(opt_.seed ^ 0x5a5a5a5aULL);
    VecC v(n_);
    for (long i = 0; i < n_; ++i) v[i] = cplx(1.0 + 0.1 * rng.normal(), 0.0);
    if (!real_) v *= cplx(1.0, 0.0);
    v.normalize();
    V.col(0) = v;
    double prev = 0.0, theta = 0.0;
    Eigen::VectorXd top;
    int k = 0;
    for (; k < kmax; ++k) {
      VecC w = minv_adj(minv(V.col(k)));
      const double a = std::real(V.col(k).dot(w));
      alpha.push_back(a);
      w -= a * V.col(k);
      if (k > 0) w -= beta.back() * V.col(k - 1);
      // full reorthogonalization, twice
      for (int pass = 0; pass < 2; ++pass)
        for (int j = 0; j <= k; ++j) w -= V.col(j).dot(w) * V.col(j);
      const double b = w.norm();
      const bool last = (k + 1 == kmax) || b <= 1e-14 * std::abs(a);
      if ((k + 1) % 4 == 0 || last) {
        Eigen::MatrixXd T = Eigen::MatrixXd::Zero(k + 1, k + 1);
        for (int i = 0; i <= k; ++i) {
          T(i, i) = alpha[std::size_t(i)];
          if (i < k) T(i, i + 1) = T(i + 1, i) = beta[std::size_t(i)];
        }
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(T);
        theta = es.eigenvalues()[k];
        top = es.eigenvectors().col(k);
        if (std::abs(theta - prev) <= opt_.lanczos_tol * theta || last) {
          ++k;
          break;
        }
        prev = theta;
      }
      beta.push_back(b);
      V.col(k + 1) = w / b;
    }
    if (k >= kmax && std::abs(theta - prev) > opt_.lanczos_tol * theta) {
      e.converged = false;
      e.warning = "inverse Lanczos reached its iteration cap";
    }
    VecC u = V.leftCols(top.size()) * top.cast<cplx>();
    VecC y = minv(u);
    VecC c = isq.cast<cplx>().cwiseProduct(y);
    const double sigma = theta > 0 ? 1.0 / std::sqrt(theta) : kInf;
    // both values are upper bounds of sigma_min
    DiscreteWeight tmp{A_.grid, std::vector<double>(std::size_t(n_)), ""};
    for (long i = 0; i < n_; ++i) tmp.values[std::size_t(i)] = sq[i] * sq[i];
    e.s_hat = std::min(sigma, quotient(z, c, tmp, 2.0));
    e.witness = c;
  }

  // ---- p != 2: projected descent on the unit sphere of l^p_{w_n}
  StabilityEstimate descent(cplx z, double p, const DiscreteWeight& w) {
    StabilityEstimate best;
    best.z = z;
    best.p = p;
    best.weight = w.name;
    best.method = StabilityMethod::probe_descent;
    best.s_hat = kInf;
    std::vector<VecC> seeds;
    // p = 2 anchors: trivial weight and w itself
    seeds.push_back(p2(z, trivial_discrete_weight(A_.grid)).witness);
    seeds.push_back(p2(z, w).witness);
    Rng rng(opt_.seed ^ (std::uint64_t(std::llround(1e6 * z.real())) * 0x9e3779b97f4a7c15ULL) ^
            std::uint64_t(std::llround(1e6 * z.imag())) ^ std::uint64_t(std::llround(1e3 * p)));
    const auto& g = A_.grid;
    const double L = g.box(), h = g.spacing();
    for (int t = 0; t < opt_.starts; ++t) {
      VecC c(n_);
      if (t < 2) {
        for (long i = 0; i < n_; ++i) c[i] = cplx(rng.normal(), real_start(z) ? 0.0 : rng.normal());
      } else {
        // windowed oscillation: random centre, width and frequency
        Point ctr = Point::zero(g.dim()), om = Point::zero(g.dim());
        for (int a = 0; a < g.dim(); ++a) {
          ctr[a] = rng.uniform(-L, L);
          om[a] = rng.uniform(0.0, std::numbers::pi / h);
        }
        const double width = std::exp(rng.uniform(std::log(4 * h), std::log(L)));
        const double ph = rng.uniform(0.0, 2 * std::numbers::pi);
        for (long i = 0; i < n_; ++i) {
          const Point x = g.point(std::size_t(i));
          const double r = (x - ctr).euclid() / width;
          double arg = ph;
          for (int a = 0; a < g.dim(); ++a) arg += om[a] * x[a];
          const cplx osc = real_start(z) ? cplx(std::cos(arg), 0.0) : std::polar(1.0, arg);
          c[i] = std::exp(-0.5 * r * r) * osc;
        }
      }
      seeds.push_back(c);
    }
    bool any_converged = false;
    for (auto& c0 : seeds) {
      bool conv = false;
      VecC c = c0;
      const double val = descend(z, p, w, c, conv);
      any_converged = any_converged || conv;
      if (val < best.s_hat) {
        best.s_hat = val;
        best.witness = c;
        best.converged = conv;
      }
    }
    if (!best.converged) best.warning = "descent did not converge; best value returned";
    return best;
  }

  bool real_start(cplx z) const { return z.imag() == 0.0; }

  // minimizes F(c) = (ln |Mc|_{p,w}^p - ln |c|_{p,w}^p)/p; returns the quotient
  double descend(cplx z, double p, const DiscreteWeight& w, VecC& c, bool& converged) const {
    const auto& wv = w.values;
    auto pnorm_p = [&](const VecC& x) {
      double s = 0.0;
      for (long i = 0; i < x.size(); ++i) s += std::pow(std::abs(x[i]), p) * wv[std::size_t(i)];
      return s;
    };
    auto normalize = [&](VecC& x, VecC& u) {
      const double nc = std::pow(pnorm_p(x), 1.0 / p);
      x /= nc;
      u /= nc;
    };
    VecC u = apply(z, c);
    normalize(c, u);
    double F = std::log(pnorm_p(u)) / p;
    double step = 1e-2;
    std::vector<double> hist{F};
    converged = false;
    for (int it = 0; it < opt_.descent_iters; ++it) {
      // gradient with respect to conj(c), smoothed at zeros for p < 2
      const double eu = 1e-12 * std::max(u.cwiseAbs().maxCoeff(), 1e-300);
      const double ec = 1e-12 * std::max(c.cwiseAbs().maxCoeff(), 1e-300);
      const double N1 = pnorm_p(u);
      VecC gu(n_), gc(n_);
      for (long i = 0; i < n_; ++i) {
        const double au = std::abs(u[i]), ac = std::abs(c[i]);
        const double fu = p >= 2 ? std::pow(au, p - 2) : std::pow(au * au + eu * eu, 0.5 * (p - 2));
        const double fc = p >= 2 ? std::pow(ac, p - 2) : std::pow(ac * ac + ec * ec, 0.5 * (p - 2));
        gu[i] = wv[std::size_t(i)] * fu * u[i];
        gc[i] = wv[std::size_t(i)] * fc * c[i];
      }
      VecC grad = apply_adjoint(z, gu) / N1 - gc;  // |c|_{p,w} = 1
      if (real_start(z) && c.imag().cwiseAbs().maxCoeff() == 0.0) grad = grad.real().cast<cplx>();
      const double gn = grad.norm();
      if (!(gn > 0)) {
        converged = true;
        break;
      }
      const VecC dir = -grad / gn;
      const VecC Md = apply(z, dir);
      double t = step * 2.0;
      bool moved = false;
      for (int ls = 0; ls < 40; ++ls) {
        VecC c2 = c + t * dir;
        VecC u2 = u + t * Md;
        const double n2 = pnorm_p(c2);
        const double F2 = (std::log(pnorm_p(u2)) - std::log(n2)) / p;
        if (F2 < F - 1e-4 * t * gn * 1e-3) {
          c = c2;
          u = u2;
          normalize(c, u);
          F = F2;
          step = t;
          moved = true;
          break;
        }
        t *= 0.5;
      }
      hist.push_back(F);
      if (!moved) {
        converged = true;
        break;
      }
      if (hist.size() > 10) {
        const double old = hist[hist.size() - 11];
        if (std::abs(old - F) <= opt_.descent_tol * std::max(1.0, std::abs(F))) {
          converged = true;
          break;
        }
      }
    }
    return std::exp(F);
  }

  const DiscretizationMatrix& A_;
  SolverOptions opt_;
  double s_;
  long n_;
  bool zero_ = false, symmetric_ = false;
  std::map<std::pair<std::string, std::pair<double, double>>, StabilityEstimate> cache_;
  bool have_factor_ = false, real_ = true;
  cplx fz_;
  Eigen::PartialPivLU<Eigen::MatrixXd> lur_, lurt_;
  Eigen::PartialPivLU<Eigen::MatrixXcd> luc_, luca_;
};

struct StabilityQuery {
  Kernel kernel;
  cplx z;
  double p = 2.0;
  Weight weight;
  int n = 6;
};

inline StabilityEstimate stability_constant(const StabilityQuery& q, const SolverOptions& opt = {}) {
  DyadicGrid g(q.kernel.dim(), q.n, q.kernel.box());
  const auto A = assemble_an(q.kernel, g);
  const auto dw = discretize_weight(q.weight, g);
  StabilitySolver s(A, opt);
  return s.solve(q.z, q.p, dw);
}

// ---- spectrum scan ----------------------------------------------------------------------------

struct WeightPair {
  double p = 2.0;
  Weight weight;
};

struct ScanOptions {
  double theta_low = 0.05;
  double theta_high = 0.2;
  SolverOptions solver;
  bool reference = true;     // compute the symbol range
  double admissible_ap = 1e3;
};

enum class ZClass { in, out, ambiguous };

inline const char* to_string(ZClass c) {
  switch (c) {
    case ZClass::in: return "in";
    case ZClass::out: return "out";
    case ZClass::ambiguous: return "ambiguous";
  }
  return "?";
}

struct StabilityReport {
  std::string statement = "thm:stability-set";
  std::vector<cplx> z;
  std::vector<std::string> pairs;                  // "p=..,weight"
  std::vector<std::vector<StabilityEstimate>> s;   // [z][pair]
  std::vector<std::vector<ZClass>> cls;            // [z][pair]
  std::vector<bool> agree;                         // per z
  bool all_agree = true;
  bool has_reference = false;
  SymbolRange reference;
  double theta_low = 0.05, theta_high = 0.2;
  std::vector<std::string> warnings;
};

// power weights carry their admissibility exactly; anything else is checked
// through the sampled A_p bound
inline void check_admissible(const Weight& w, double p, double L, double threshold) {
  if (w.kind() == WeightKind::trivial) return;
  if (w.kind() == WeightKind::power) {
    if (!w.claims_ap(p))
      throw PreconditionError("weight " + w.name() + " is not an A_p weight for p = " + std::to_string(p));
    return;
  }
  const auto e = ap_bound_estimate(w, p, default_cube_family(w.dim(), L), L);
  if (!e.finite || e.value > threshold)
    throw PreconditionError("weight " + w.name() + " fails the sampled A_p threshold for p = " + std::to_string(p));
}

inline StabilityReport spectrum_scan(const Kernel& k, const std::vector<cplx>& zs, const std::vector<WeightPair>& pairs,
                                     int n, const ScanOptions& opt = {}) {
  require(!zs.empty(), "spectrum_scan: empty z grid");
  require(!pairs.empty(), "spectrum_scan: no (p, weight) pairs");
  require(opt.theta_low < opt.theta_high, "spectrum_scan: theta_low must be below theta_high");
  for (auto& pr : pairs) check_admissible(pr.weight, pr.p, k.box(), opt.admissible_ap);
  StabilityReport rep;
  rep.z = zs;
  rep.theta_low = opt.theta_low;
  rep.theta_high = opt.theta_high;
  DyadicGrid g(k.dim(), n, k.box());
  const auto A = assemble_an(k, g);
  std::vector<DiscreteWeight> dws;
  for (auto& pr : pairs) {
    dws.push_back(discretize_weight(pr.weight, g));
    std::ostringstream os;
    os << "p=" << pr.p << "," << pr.weight.name();
    rep.pairs.push_back(os.str());
  }
  rep.s.assign(zs.size(), {});
  parallel_for(zs.size(), [&](std::size_t i) {
    StabilitySolver solver(A, opt.solver);
    std::vector<StabilityEstimate> row;
    // p = 2 pairs first so their factorization and witnesses seed the rest
    std::vector<std::size_t> order(pairs.size());
    for (std::size_t j = 0; j < pairs.size(); ++j) order[j] = j;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return (pairs[a].p == 2.0) > (pairs[b].p == 2.0);
    });
    row.resize(pairs.size());
    for (std::size_t j : order) row[j] = solver.solve(zs[i], pairs[j].p, dws[j]);
    rep.s[i] = std::move(row);
  });
  rep.cls.assign(zs.size(), {});
  rep.agree.assign(zs.size(), true);
  for (std::size_t i = 0; i < zs.size(); ++i) {
    for (auto& e : rep.s[i]) {
      rep.cls[i].push_back(e.s_hat < opt.theta_low ? ZClass::in : e.s_hat > opt.theta_high ? ZClass::out : ZClass::ambiguous);
      if (!e.warning.empty()) {
        std::ostringstream os;
        os << "z=" << zs[i] << " " << e.weight << " p=" << e.p << ": " << e.warning;
        rep.warnings.push_back(os.str());
      }
    }
    for (auto c : rep.cls[i]) rep.agree[i] = rep.agree[i] && c == rep.cls[i].front() && c != ZClass::ambiguous;
    rep.all_agree = rep.all_agree && rep.agree[i];
  }
  if (opt.reference && k.is_convolution()) {
    rep.reference = symbol_range(k);
    rep.has_reference = true;
  }
  return rep;
}

// ---- bootstrap plan -------------------------------------------------------------------------

// the three moves of the bootstrap: small changes of the weight power, the
// jump between small powers, small changes of the exponent
enum class BootstrapMove { weight_power_step, weight_power_jump, exponent_step };

inline const char* to_string(BootstrapMove m) {
  switch (m) {
    case BootstrapMove::weight_power_step: return "weight-power-step";
    case BootstrapMove::weight_power_jump: return "weight-power-jump";
    case BootstrapMove::exponent_step: return "exponent-step";
  }
  return "?";
}

struct BootstrapStage {
  BootstrapMove move;
  std::string weight;  // which weight the power refers to: "w", "w'" or "1"
  double p_in = 1.0, p_out = 1.0;
  double r_in = 0.0, r_out = 0.0;
  double s = 0.0;      // step parameter (weight-power-step, exponent-step)
  double bound = 0.0;  // delta_0, delta_1 or delta_2 of the move
  bool admissible = true;
};

struct BootstrapPlan {
  std::string statement = "thm:bootstrap";
  int d = 1;
  double alpha = 1.0, p = 2.0, p_target = 2.0, ap = 1.0, ap_target = 1.0, D1 = 0.125;
  double r0 = 0.0, r0_target = 0.0;
  double delta0 = 0.0, delta1 = 0.0, delta2 = 0.0;
  double delta0_target = 0.0, delta1_target = 0.0;
  int l0 = 0, l1 = 0, l3 = 0;
  double s_exponent = 0.0;
  std::vector<BootstrapStage> stages;
  bool valid = true;
  std::string note;
};

inline double bootstrap_delta0(double p, int d, double Ap, double alpha) {
  return std::min(reverse_holder_r0(p, d) / (2.0 * Ap), alpha / (3.0 * d));
}

inline double bootstrap_delta1(double p, int d, double Ap, double alpha, double D1) {
  const double c = std::pow(2.0, d) + 1.0;
  return std::min(D1 / (p * std::log(2.0) + 2.0 * std::log(Ap)), alpha / (2.0 * c + 2.0 * d + 4.0 * c * std::log(Ap)));
}

inline BootstrapPlan bootstrap_plan(double p, bool w_trivial, double Ap, double p_target, bool w_target_trivial,
                                    double Ap_target, double alpha, int d, double D1 = 0.125) {
  check_dim(d);
  require(alpha > 0 && alpha <= 1, "bootstrap_plan: alpha must lie in (0, 1]");
  require(p >= 1 && p_target >= 1, "bootstrap_plan: exponents must be >= 1");
  require(D1 > 0 && D1 < 1, "bootstrap_plan: D1 must lie in (0, 1)");
  if (!(Ap >= 1) || !std::isfinite(Ap)) throw PreconditionError("bootstrap_plan: source weight is not A_p by estimate");
  if (!(Ap_target >= 1) || !std::isfinite(Ap_target))
    throw PreconditionError("bootstrap_plan: target weight is not A_p' by estimate");
  BootstrapPlan P;
  P.d = d;
  P.alpha = alpha;
  P.p = p;
  P.p_target = p_target;
  P.ap = Ap;
  P.ap_target = Ap_target;
  P.D1 = D1;
  P.r0 = reverse_holder_r0(p, d);
  P.r0_target = reverse_holder_r0(p_target, d);
  P.delta0 = bootstrap_delta0(p, d, Ap, alpha);
  P.delta1 = bootstrap_delta1(p, d, Ap, alpha, D1);
  P.delta2 = alpha / (3.0 * d);
  P.delta0_target = bootstrap_delta0(p_target, d, Ap_target, alpha);
  P.delta1_target = bootstrap_delta1(p_target, d, Ap_target, alpha, D1);
  const double eps = 1e-12;

  // (i) w^1 -> w^{(1-delta0)^l0} by weight power steps, then the jump to w^0
  if (!w_trivial) {
    P.l0 = int(std::ceil(std::log(P.delta1) / std::log(1.0 - P.delta0) - eps));
    P.l0 = std::max(P.l0, 0);
    double r = 1.0;
    for (int l = 0; l < P.l0; ++l) {
      BootstrapStage st{BootstrapMove::weight_power_step, "w", p, p, r, r * (1.0 - P.delta0), -P.delta0, P.delta0};
      st.admissible = std::abs(st.s) <= P.delta0 * (1 + eps) && st.r_in > 0 && st.r_in <= 1 + eps && st.r_out >= 0 &&
                      st.r_out <= 1 + eps;
      P.stages.push_back(st);
      r = st.r_out;
    }
    BootstrapStage j{BootstrapMove::weight_power_jump, "w", p, p, r, 0.0, 0.0, P.delta1};
    j.admissible = r >= 0 && r <= P.delta1 * (1 + eps);
    P.stages.push_back(j);
  }
  // (ii) exponent steps p -> p'
  if (p != p_target) {
    const double ratio = p_target / p;
    int l = 1;
    while (std::abs(std::pow(ratio, 1.0 / l) - 1.0) > P.delta2 + eps) ++l;
    P.l1 = l;
    P.s_exponent = std::pow(ratio, 1.0 / l) - 1.0;
    double q = p;
    for (int i = 0; i < l; ++i) {
      const double qn = (i + 1 == l) ? p_target : p * std::pow(1.0 + P.s_exponent, i + 1);
      BootstrapStage st{BootstrapMove::exponent_step, "1", q, qn, 0.0, 0.0, P.s_exponent, P.delta2};
      st.admissible = std::abs(st.s) <= P.delta2 * (1 + eps) && qn >= 1 - eps;
      P.stages.push_back(st);
      q = qn;
    }
  }
  // (iii) jump to w'^{(1+delta0')^-l3}, then weight power steps up to w'^1
  if (!w_target_trivial) {
    const double d0 = P.delta0_target, d1 = P.delta1_target;
    P.l3 = int(std::ceil(-std::log(d1) / std::log(1.0 + d0) - eps));
    P.l3 = std::max(P.l3, 0);
    double r = std::pow(1.0 + d0, -P.l3);
    BootstrapStage j{BootstrapMove::weight_power_jump, "w'", p_target, p_target, 0.0, r, 0.0, d1};
    j.admissible = r >= 0 && r <= d1 * (1 + eps);
    P.stages.push_back(j);
    for (int l = 0; l < P.l3; ++l) {
      const double rn = (l + 1 == P.l3) ? 1.0 : r * (1.0 + d0);
      BootstrapStage st{BootstrapMove::weight_power_step, "w'", p_target, p_target, r, rn, d0, d0};
      st.admissible = std::abs(st.s) <= d0 * (1 + eps) && r > 0 && r <= 1 + eps && rn >= 0 && rn <= 1 + eps;
      P.stages.push_back(st);
      r = rn;
    }
  }
  // validity: every stage admissible, exponents chain, powers chain within a weight
  double p_cur = p;
  std::string wcur = w_trivial ? "1" : "w";
  double r_cur = w_trivial ? 0.0 : 1.0;
  for (auto& st : P.stages) {
    P.valid = P.valid && st.admissible && std::abs(st.p_in - p_cur) <= 1e-12 * p_cur;
    if (st.weight != "1") {
      if (st.weight == wcur) P.valid = P.valid && std::abs(st.r_in - r_cur) <= 1e-12;
      else P.valid = P.valid && r_cur == 0.0 && st.r_in == 0.0;  // a power 0 weight is trivial
      wcur = st.weight;
      r_cur = st.r_out;
    }
    p_cur = st.p_out;
  }
  P.valid = P.valid && std::abs(p_cur - p_target) <= 1e-12 * p_target;
  if (!w_target_trivial) P.valid = P.valid && wcur == "w'" && std::abs(r_cur - 1.0) <= 1e-12;
  else P.valid = P.valid && r_cur == 0.0;
  if (P.stages.empty()) P.note = "identity endpoints: empty plan";
  return P;
}

}  // namespace lio
