#pragma once

// Muckenhoupt weights: evaluation, cube integrals (closed form for power
// weights), A_p estimates over cube families, dyadic discretization w_n,
// discrete A_p bounds, BMO, doubling, reverse Hoelder and exponential
// integrability checks.

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "lio/core.hpp"
#include "lio/grid.hpp"
#include "lio/kernels.hpp"
#include "lio/quadrature.hpp"

namespace lio {

// ---- level set distribution of |x| on a cube ------------------------------

// On each piece (a, b), d/dt |Q cap {|x| <= t}| = c0 + c1 t.
struct LevelPiece {
  double a, b, c0, c1;
};

inline std::vector<LevelPiece> level_pieces(const Cube& q) {
  const int d = q.dim();
  std::vector<double> br{0.0};
  for (int i = 0; i < d; ++i) {
    br.push_back(std::abs(q.lo(i)));
    br.push_back(std::abs(q.hi(i)));
  }
  std::sort(br.begin(), br.end());
  br.erase(std::unique(br.begin(), br.end()), br.end());
  auto ell = [&](int i, double t) { return std::max(0.0, std::min(q.hi(i), t) - std::max(q.lo(i), -t)); };
  std::vector<LevelPiece> out;
  for (std::size_t j = 0; j + 1 < br.size(); ++j) {
    const double a = br[j], b = br[j + 1];
    const double t1 = a + 0.25 * (b - a), t2 = a + 0.75 * (b - a);
    double s[2] = {0, 0}, o[2] = {0, 0};
    for (int i = 0; i < d; ++i) {
      const double e1 = ell(i, t1), e2 = ell(i, t2);
      s[i] = (e2 - e1) / (t2 - t1);
      // slopes are 0, 1 or 2; snap away rounding
      s[i] = std::round(s[i]);
      o[i] = e1 - s[i] * t1;
    }
    LevelPiece p{a, b, 0.0, 0.0};
    if (d == 1) {
      p.c0 = s[0];
    } else {
      p.c1 = 2.0 * s[0] * s[1];
      p.c0 = s[0] * o[1] + s[1] * o[0];
    }
    if (p.c0 != 0.0 || p.c1 != 0.0) out.push_back(p);
  }
  return out;
}

namespace detail {

// int_a^b t^e dt, possibly infinite
inline double power_moment(double a, double b, double e) {
  if (b <= a) return 0.0;
  if (std::abs(e + 1.0) < 1e-14) return a == 0.0 ? kInf : std::log(b / a);
  if (e + 1.0 < 0 && a == 0.0) return kInf;
  return (std::pow(b, e + 1.0) - std::pow(a, e + 1.0)) / (e + 1.0);
}

// int_a^b t^j ln t dt for j in {0, 1}
inline double log_moment(double a, double b, int j) {
  auto F = [j](double t) {
    if (t == 0.0) return 0.0;
    const double k = j + 1.0;
    return std::pow(t, k) * (std::log(t) / k - 1.0 / (k * k));
  };
  return F(b) - F(a);
}

}  // namespace detail

// ---- weights --------------------------------------------------------------

enum class WeightKind { trivial, power, tabulated, function };

class Weight {
 public:
  static Weight trivial(int d) {
    check_dim(d);
    Weight w;
    w.kind_ = WeightKind::trivial;
    w.d_ = d;
    w.name_ = "trivial";
    w.f_ = [](const Point&) { return 1.0; };
    return w;
  }
  // |x|^alpha with the max norm
  static Weight power(int d, double alpha) {
    check_dim(d);
    Weight w;
    w.kind_ = WeightKind::power;
    w.d_ = d;
    w.alpha_ = alpha;
    std::ostringstream os;
    os << "power:alpha=" << alpha;
    w.name_ = os.str();
    w.f_ = [alpha](const Point& x) { return std::pow(x.norm(), alpha); };
    return w;
  }
  static Weight function(int d, std::function<double(const Point&)> f, std::string name) {
    check_dim(d);
    Weight w;
    w.kind_ = WeightKind::function;
    w.d_ = d;
    w.name_ = std::move(name);
    w.f_ = std::move(f);
    return w;
  }
  // piecewise linear samples in d = 1, bilinear on a regular grid in d = 2
  static Weight tabulated(int d, std::vector<double> ax0, std::vector<double> ax1, std::vector<double> vals,
                          std::string name = "tabulated") {
    for (double v : vals) require(v > 0, "tabulated weight values must be positive");
    Kernel k = Kernel::tabulated(d, std::move(ax0), std::move(ax1), std::move(vals), 1.0, name);
    Weight w = function(d, [k](const Point& x) { return k.profile(x); }, name);
    w.kind_ = WeightKind::tabulated;
    return w;
  }
  static Weight tabulated_csv(const std::string& path, int d) {
    auto rows = read_numeric_csv(path);
    std::sort(rows.begin(), rows.end());
    std::vector<double> a0, a1, v;
    for (auto& r : rows) {
      if (int(r.size()) != d + 1) throw ParseError("tabulated", "weight table '" + path + "' has wrong column count");
      if (d == 1) {
        a0.push_back(r[0]);
      } else {
        if (a0.empty() || a0.back() != r[0]) a0.push_back(r[0]);
        if (a0.size() == 1) a1.push_back(r[1]);
      }
      v.push_back(r[d]);
    }
    if (v.size() < 2) throw ParseError("tabulated", "weight table '" + path + "' has fewer than two rows");
    return tabulated(d, a0, a1, v, "tabulated:" + path);
  }

  WeightKind kind() const { return kind_; }
  int dim() const { return d_; }
  double alpha() const { return alpha_; }
  const std::string& name() const { return name_; }
  double operator()(const Point& x) const { return f_(x); }

  // the recorded admissibility fact for power weights; other kinds unknown
  bool claims_ap(double p) const {
    if (kind_ == WeightKind::trivial) return true;
    if (kind_ != WeightKind::power) return true;
    if (p == 1.0) return alpha_ > -d_ && alpha_ <= 0;
    return alpha_ > -d_ && alpha_ < d_ * (p - 1);
  }

  // int_Q w^r, +inf when divergent
  double integral_pow(const Cube& q, double r) const {
    if (kind_ == WeightKind::trivial || r == 0.0) return q.volume();
    if (kind_ == WeightKind::power) {
      const double e = alpha_ * r;
      double acc = 0.0;
      for (auto& pc : level_pieces(q)) {
        if (pc.c0 != 0.0) acc += pc.c0 * detail::power_moment(pc.a, pc.b, e);
        if (pc.c1 != 0.0) acc += pc.c1 * detail::power_moment(pc.a, pc.b, e + 1.0);
      }
      return acc;
    }
    return numeric(q, [&](double v) { return std::pow(v, r); });
  }

  // int_Q ln w
  double integral_log(const Cube& q) const {
    if (kind_ == WeightKind::trivial) return 0.0;
    if (kind_ == WeightKind::power) {
      double acc = 0.0;
      for (auto& pc : level_pieces(q)) {
        if (pc.c0 != 0.0) acc += pc.c0 * detail::log_moment(pc.a, pc.b, 0);
        if (pc.c1 != 0.0) acc += pc.c1 * detail::log_moment(pc.a, pc.b, 1);
      }
      return alpha_ * acc;
    }
    return numeric(q, [](double v) { return std::log(v); });
  }

  // int_Q |ln w - c|
  double integral_abs_log_dev(const Cube& q, double c) const {
    if (kind_ == WeightKind::trivial) return std::abs(c) * q.volume();
    if (kind_ == WeightKind::power) {
      if (alpha_ == 0.0) return std::abs(c) * q.volume();
      const double ts = std::exp(c / alpha_);  // alpha ln t = c here
      double acc = 0.0;
      auto add = [&](double a, double b, const LevelPiece& pc) {
        if (b <= a) return;
        double v = 0.0;
        if (pc.c0 != 0.0) v += pc.c0 * (alpha_ * detail::log_moment(a, b, 0) - c * (b - a));
        if (pc.c1 != 0.0) v += pc.c1 * (alpha_ * detail::log_moment(a, b, 1) - c * 0.5 * (b * b - a * a));
        acc += std::abs(v);
      };
      for (auto& pc : level_pieces(q)) {
        if (ts > pc.a && ts < pc.b) {
          add(pc.a, ts, pc);
          add(ts, pc.b, pc);
        } else {
          add(pc.a, pc.b, pc);
        }
      }
      return acc;
    }
    return numeric(q, [c](double v) { return std::abs(std::log(v) - c); });
  }

  // inf of w over Q: exact for power weights, sampled otherwise
  double inf_on(const Cube& q) const {
    if (kind_ == WeightKind::trivial) return 1.0;
    if (kind_ == WeightKind::power) {
      double near = 0.0, far = 0.0;
      for (int i = 0; i < q.dim(); ++i) {
        const double lo = q.lo(i), hi = q.hi(i);
        const double dist = (lo <= 0 && hi >= 0) ? 0.0 : std::min(std::abs(lo), std::abs(hi));
        near = std::max(near, dist);
        far = std::max(far, std::max(std::abs(lo), std::abs(hi)));
      }
      if (alpha_ >= 0) return alpha_ == 0 ? 1.0 : std::pow(near, alpha_);
      return std::pow(far, alpha_);
    }
    double m = kInf;
    const int s = 64;
    for (int i = 0; i <= s; ++i)
      for (int j = 0; j <= (q.dim() == 2 ? s : 0); ++j) {
        Point p = Point::zero(q.dim());
        p[0] = q.lo(0) + q.side() * i / s;
        if (q.dim() == 2) p[1] = q.lo(1) + q.side() * j / s;
        m = std::min(m, f_(p));
      }
    return m;
  }

 private:
  double numeric(const Cube& q, const std::function<double(double)>& F) const {
    auto g = [&](const Point& x) { return F(f_(x)); };
    auto r = integrate_cube(g, q, QuadOptions{1e-10, 1e-300, 600});
    if (!r.converged || !std::isfinite(r.value)) return kInf;
    return r.value;
  }

  WeightKind kind_ = WeightKind::trivial;
  int d_ = 1;
  double alpha_ = 0.0;
  std::string name_;
  std::function<double(const Point&)> f_;
};

// "trivial", "power:alpha=<a>" (also "power:<a>"), "tabulated:<path>"
inline Weight parse_weight(const std::string& desc, int d, const std::string& field = "weight") {
  auto [head, body] = split_descriptor(desc);
  if (head == "trivial" && body.empty()) return Weight::trivial(d);
  if (head == "power") {
    if (body.find('=') == std::string::npos) return Weight::power(d, parse_number(field, body));
    return Weight::power(d, descriptor_param(field, body, "alpha"));
  }
  if (head == "tabulated") {
    if (body.empty()) throw ParseError(field, "field '" + field + "': tabulated weight needs a path");
    return Weight::tabulated_csv(body, d);
  }
  throw ParseError(field, "field '" + field + "': unknown weight '" + desc + "'");
}

// ---- cube families --------------------------------------------------------

struct CubeFamily {
  std::vector<Cube> cubes;
  std::string description;

  void append(const CubeFamily& o) {
    cubes.insert(cubes.end(), o.cubes.begin(), o.cubes.end());
    description += (description.empty() ? "" : " + ") + o.description;
  }
};

// dyadic cubes of side 2^-j, j in [jmin, jmax], tiling [-R, R]^d
inline CubeFamily dyadic_cubes(int d, double R, int jmin, int jmax) {
  CubeFamily f;
  for (int j = jmin; j <= jmax; ++j) {
    const double s = std::ldexp(1.0, -j);
    const long m = long(std::floor(2 * R / s + 1e-9));
    for (long a = 0; a < m; ++a)
      for (long b = 0; b < (d == 2 ? m : 1); ++b) {
        Point c = Point::zero(d);
        c[0] = -R + (a + 0.5) * s;
        if (d == 2) c[1] = -R + (b + 0.5) * s;
        f.cubes.emplace_back(c, 0.5 * s);
      }
  }
  std::ostringstream os;
  os << "dyadic levels " << jmin << ".." << jmax << " in [-" << R << "," << R << "]^" << d;
  f.description = os.str();
  return f;
}

// [-2^-j, 2^-j]^d for j in [jmin, jmax]
inline CubeFamily centered_cubes(int d, int jmin, int jmax) {
  CubeFamily f;
  for (int j = jmin; j <= jmax; ++j) f.cubes.emplace_back(Point::zero(d), std::ldexp(1.0, -j));
  std::ostringstream os;
  os << "centered half sides 2^-" << jmin << "..2^-" << jmax;
  f.description = os.str();
  return f;
}

// uniform centers, log-uniform sides in [2^-8, L], shrunk to fit the box
inline CubeFamily random_cubes(int d, double L, int count, std::uint64_t seed) {
  CubeFamily f;
  Rng rng(seed);
  while (int(f.cubes.size()) < count) {
    Point c = Point::zero(d);
    for (int i = 0; i < d; ++i) c[i] = rng.uniform(-L, L);
    double half = 0.5 * std::exp(rng.uniform(std::log(std::ldexp(1.0, -8)), std::log(L)));
    for (int i = 0; i < d; ++i) half = std::min(half, L - std::abs(c[i]));
    if (half < 1e-6) continue;
    f.cubes.emplace_back(c, half);
  }
  std::ostringstream os;
  os << count << " random cubes (seed " << seed << ")";
  f.description = os.str();
  return f;
}

// dyadic levels 0..6 near the origin, coarse dyadic cubes over the box,
// centered cubes down to 2^-12 and 200 random cubes
inline CubeFamily default_cube_family(int d, double L, std::uint64_t seed = 1, int random = 200) {
  CubeFamily f = dyadic_cubes(d, std::min(L, 2.0), 0, d == 1 ? 6 : 5);
  const int top = int(std::floor(std::log2(L)));
  if (top >= 1) f.append(dyadic_cubes(d, L, -top + 1, 0));
  f.append(centered_cubes(d, -top, 12));
  if (random > 0) f.append(random_cubes(d, L, random, seed));
  return f;
}

// ---- A_p estimates ----------------------------------------------------------

struct ApEstimate {
  double p = 2.0;
  double value = 1.0;
  bool finite = true;
  bool is_lower_bound = true;
  std::string cube_family;
  std::string note;
  Cube argmax;
  std::size_t cubes = 0;
};

// A_p quotient on a single cube (+inf when not integrable)
inline double ap_quotient(const Weight& w, double p, const Cube& q) {
  require(p >= 1, "A_p quotient: p must be >= 1");
  const double vol = q.volume();
  const double aw = w.integral_pow(q, 1.0) / vol;
  if (!std::isfinite(aw)) return kInf;
  if (p == 1.0) {
    const double m = w.inf_on(q);
    return m > 0 ? aw / m : kInf;
  }
  const double dual = w.integral_pow(q, -1.0 / (p - 1.0)) / vol;
  if (!std::isfinite(dual)) return kInf;
  return aw * std::pow(dual, p - 1.0);
}

inline ApEstimate ap_bound_estimate(const Weight& w, double p, const CubeFamily& fam, double L = kInf) {
  require(p >= 1, "ap_bound_estimate: p must be >= 1");
  require(!fam.cubes.empty(), "ap_bound_estimate: cube family is empty");
  for (auto& q : fam.cubes)
    if (std::isfinite(L) && !q.inside_box(L)) throw PreconditionError("ap_bound_estimate: cube outside the box");
  ApEstimate e;
  e.p = p;
  e.cube_family = fam.description;
  e.cubes = fam.cubes.size();
  std::vector<double> q(fam.cubes.size());
  parallel_for(fam.cubes.size(), [&](std::size_t i) { q[i] = ap_quotient(w, p, fam.cubes[i]); });
  e.value = 1.0;
  e.argmax = fam.cubes.front();
  for (std::size_t i = 0; i < q.size(); ++i)
    if (q[i] > e.value || std::isnan(q[i])) {
      e.value = std::isnan(q[i]) ? kInf : q[i];
      e.argmax = fam.cubes[i];
    }
  if (!std::isfinite(e.value)) {
    e.finite = false;
    e.note = "not A_p at sampled resolution";
  }
  return e;
}

// ---- discretized weights ----------------------------------------------------

struct DiscreteWeight {
  DyadicGrid grid;
  std::vector<double> values;
  std::string name;

  std::size_t size() const { return values.size(); }
  double operator[](std::size_t i) const { return values[i]; }
};

// w_n(lambda) = 2^{nd} int_cell w^r
inline DiscreteWeight discretize_weight(const Weight& w, const DyadicGrid& grid, double r = 1.0) {
  require(w.dim() == grid.dim(), "discretize_weight: dimension mismatch");
  DiscreteWeight dw;
  dw.grid = grid;
  dw.name = w.name();
  if (r != 1.0) dw.name += "^" + std::to_string(r);
  dw.values.resize(grid.size());
  const double vol = grid.cell_volume();
  parallel_for(grid.size(), [&](std::size_t i) {
    const double v = w.integral_pow(grid.cell(i), r) / vol;
    if (!std::isfinite(v) || !(v > 0))
      throw QuadratureError("discretize_weight: weight not integrable on cell " + std::to_string(i), kInf);
    dw.values[i] = v;
  });
  return dw;
}

inline DiscreteWeight trivial_discrete_weight(const DyadicGrid& grid) {
  return DiscreteWeight{grid, std::vector<double>(grid.size(), 1.0), "trivial"};
}

// max over blocks a + [0, N-1]^d inside the grid, N <= max_N
inline ApEstimate discrete_ap_bound(const DiscreteWeight& dw, double p, int max_N) {
  require(max_N >= 1, "discrete_ap_bound: max_N must be >= 1");
  require(p >= 1, "discrete_ap_bound: p must be >= 1");
  const auto& g = dw.grid;
  const int d = g.dim();
  const long m = g.per_axis();
  ApEstimate e;
  e.p = p;
  e.value = 1.0;
  std::ostringstream os;
  os << "lattice blocks N <= " << max_N << " on " << g.size() << " points";
  e.cube_family = os.str();
  // prefix sums of w and of w^{-1/(p-1)}
  auto dual = [&](double v) { return p == 1.0 ? 0.0 : std::pow(v, -1.0 / (p - 1.0)); };
  const long stride = m + 1;
  std::vector<double> S1((d == 1 ? 1 : stride) * stride, 0.0), S2(S1.size(), 0.0);
  auto at = [&](std::vector<double>& S, long i, long j) -> double& { return d == 1 ? S[i] : S[i * stride + j]; };
  if (d == 1) {
    for (long i = 0; i < m; ++i) {
      S1[i + 1] = S1[i] + dw.values[i];
      S2[i + 1] = S2[i] + dual(dw.values[i]);
    }
  } else {
    for (long i = 0; i < m; ++i)
      for (long j = 0; j < m; ++j) {
        const double v = dw.values[g.linear(i, j)];
        at(S1, i + 1, j + 1) = v + at(S1, i, j + 1) + at(S1, i + 1, j) - at(S1, i, j);
        at(S2, i + 1, j + 1) = dual(v) + at(S2, i, j + 1) + at(S2, i + 1, j) - at(S2, i, j);
      }
  }
  auto block = [&](std::vector<double>& S, long i, long j, long N) {
    if (d == 1) return S[i + N] - S[i];
    return at(S, i + N, j + N) - at(S, i, j + N) - at(S, i + N, j) + at(S, i, j);
  };
  // running block minima for p = 1, grown one N at a time
  std::vector<double> mins;
  if (p == 1.0) mins = dw.values;
  const long nmax = std::min<long>(max_N, m);
  for (long N = 1; N <= nmax; ++N) {
    const long anchors = m - N + 1;
    if (p == 1.0 && N > 1) {
      // min over a + [0, N-1]^d from the (N-1) block at a plus its new border
      for (long i = 0; i < anchors; ++i)
        for (long j = 0; j < (d == 2 ? anchors : 1); ++j) {
          double mn = mins[d == 1 ? i : g.linear(i, j)];
          if (d == 1) {
            mn = std::min(mn, dw.values[i + N - 1]);
          } else {
            for (long t = 0; t < N; ++t) {
              mn = std::min(mn, dw.values[g.linear(i + N - 1, j + t)]);
              mn = std::min(mn, dw.values[g.linear(i + t, j + N - 1)]);
            }
          }
          mins[d == 1 ? i : g.linear(i, j)] = mn;
        }
    }
    const double vol = std::pow(double(N), d);
    for (long i = 0; i < anchors; ++i)
      for (long j = 0; j < (d == 2 ? anchors : 1); ++j) {
        const double a1 = block(S1, i, j, N) / vol;
        double q;
        if (p == 1.0) {
          q = a1 / mins[d == 1 ? i : g.linear(i, j)];
        } else {
          q = a1 * std::pow(block(S2, i, j, N) / vol, p - 1.0);
        }
        if (q > e.value) {
          e.value = q;
          Point c = Point::zero(d);
          c[0] = (g.first_index() + i + 0.5 * (N - 1)) * g.spacing();
          if (d == 2) c[1] = (g.first_index() + j + 0.5 * (N - 1)) * g.spacing();
          e.argmax = Cube(c, 0.5 * N * g.spacing());
        }
      }
  }
  e.cubes = std::size_t(nmax);
  return e;
}

// ---- BMO ----------------------------------------------------------------------

struct BmoEstimate {
  double value = 0.0;
  Cube argmax;
};

inline BmoEstimate bmo_norm_estimate(const Weight& w, const CubeFamily& fam) {
  require(!fam.cubes.empty(), "bmo_norm_estimate: cube family is empty");
  std::vector<double> v(fam.cubes.size());
  parallel_for(fam.cubes.size(), [&](std::size_t i) {
    const Cube& q = fam.cubes[i];
    const double vol = q.volume();
    const double c = w.integral_log(q) / vol;
    if (!std::isfinite(c)) throw DomainError("bmo_norm_estimate: ln w is not integrable on a cube");
    v[i] = w.integral_abs_log_dev(q, c) / vol;
    if (!std::isfinite(v[i])) throw DomainError("bmo_norm_estimate: ln w is not integrable on a cube");
  });
  BmoEstimate b;
  b.argmax = fam.cubes.front();
  for (std::size_t i = 0; i < v.size(); ++i)
    if (v[i] > b.value) {
      b.value = v[i];
      b.argmax = fam.cubes[i];
    }
  return b;
}

// ---- appendix inequalities ---------------------------------------------------

// the r range of the exponential integrability / doubling refinements
inline double small_power_range(double p, double Ap, double D1) {
  return D1 / (p * std::log(2.0) + 2.0 * std::log(Ap));
}

struct InequalityRow {
  Cube cube;
  int n = 0;
  double r = 1.0;
  double value = 0.0;
  double lower = 0.0;
  double upper = 0.0;
  double margin = 0.0;  // min(value - lower, upper - value); >= 0 means both hold
};

struct InequalityReport {
  std::string statement;
  std::vector<InequalityRow> rows;
  std::size_t violations = 0;
  std::size_t skipped = 0;
  double worst_margin = kInf;
  double measured_constant = 0.0;  // C_0 or C where the statement has one
  std::string note;

  void add(const InequalityRow& r, double tol) {
    rows.push_back(r);
    worst_margin = std::min(worst_margin, r.margin);
    if (r.margin < -tol) ++violations;
  }
};

inline double cube_avg_pow(const Weight& w, const Cube& q, double r) { return w.integral_pow(q, r) / q.volume(); }

// ratio avg_Q w^r / avg_{2^n Q} w^r against
//   A^{-r} 2^{-rnd(p-1)} <= ratio <= (2^{nd(p-1)} A)^r,
// and, for r in the small range, the measured C_0 of
//   ratio <= C_0 (2^p A^2)^{(2^d+1) r n}
inline InequalityReport doubling_check(const Weight& w, double p, double r, int n_max, const CubeFamily& fam,
                                       double Ap, double L, double D1 = 0.125, double tol = 1e-12) {
  require(r >= 0 && r <= 1, "doubling_check: r must lie in [0, 1]");
  require(n_max >= 1, "doubling_check: n_max must be >= 1");
  require(Ap >= 1, "doubling_check: A_p bound must be >= 1");
  InequalityReport rep;
  rep.statement = "prop:doubling";
  const int d = w.dim();
  const bool small = r <= small_power_range(p, Ap, D1);
  for (const Cube& q : fam.cubes) {
    const double aq = cube_avg_pow(w, q, r);
    for (int n = 1; n <= n_max; ++n) {
      const Cube big = q.scaled(std::ldexp(1.0, n));
      if (!big.inside_box(L)) {
        ++rep.skipped;
        continue;
      }
      const double ratio = aq / cube_avg_pow(w, big, r);
      InequalityRow row;
      row.cube = q;
      row.n = n;
      row.r = r;
      row.value = ratio;
      row.lower = std::pow(Ap, -r) * std::pow(2.0, -r * n * d * (p - 1));
      row.upper = std::pow(std::pow(2.0, n * d * (p - 1)) * Ap, r);
      row.margin = std::min(ratio - row.lower, row.upper - ratio);
      rep.add(row, tol * std::max(1.0, ratio));
      if (small)
        rep.measured_constant =
            std::max(rep.measured_constant, ratio / std::pow(std::pow(2.0, p) * Ap * Ap, (std::pow(2.0, d) + 1) * r * n));
    }
  }
  if (rep.skipped) rep.note = std::to_string(rep.skipped) + " (cube, n) pairs skipped: 2^n Q leaves the box";
  return rep;
}

inline double reverse_holder_r0(double p, int d) { return std::pow(2.0, -(p + 3.0)) / (d + 1); }

// (2^{p+2} A)^{-1} (avg w^{(1+delta) r})^{1/(1+delta)} <= avg w^r
//                  <= 2^{p+2} A (avg w^{(1-delta) r})^{1/(1-delta)}
inline InequalityReport reverse_holder_check(const Weight& w, double p, double r, double delta, const CubeFamily& fam,
                                             double Ap, double tol = 1e-12) {
  require(r > 0 && r <= 1, "reverse_holder_check: r must lie in (0, 1]");
  const double r0 = reverse_holder_r0(p, w.dim());
  const double cap = r0 / Ap;
  if (!(delta > 0) || delta > cap * (1 + 1e-12)) {
    std::ostringstream os;
    os << "reverse_holder_check: delta must lie in (0, r0/A_p] = (0, " << cap << "] with r0 = 2^-(p+3)/(d+1) = " << r0;
    throw PreconditionError(os.str());
  }
  InequalityReport rep;
  rep.statement = "prop:reverse-holder";
  const double C = std::pow(2.0, p + 2) * Ap;
  for (const Cube& q : fam.cubes) {
    const double mid = cube_avg_pow(w, q, r);
    const double up = std::pow(cube_avg_pow(w, q, (1 + delta) * r), 1 / (1 + delta));
    const double dn = std::pow(cube_avg_pow(w, q, (1 - delta) * r), 1 / (1 - delta));
    InequalityRow row;
    row.cube = q;
    row.r = r;
    row.value = mid;
    row.lower = up / C;
    row.upper = C * dn;
    row.margin = std::min(mid - row.lower, row.upper - mid) / std::max(mid, 1e-300);
    rep.add(row, tol);
    rep.measured_constant = std::max(rep.measured_constant, std::max(up / mid, mid / dn));
  }
  return rep;
}

// exp(r c_Q) <= avg w^r <= C exp(r c_Q), c_Q the average of ln w; C measured
inline InequalityReport exp_integrability_check(const Weight& w, double p, double r, const CubeFamily& fam, double Ap,
                                                double D1 = 0.125, double tol = 1e-12) {
  const double rmax = small_power_range(p, Ap, D1);
  require(r >= 0 && r <= rmax * (1 + 1e-12), "exp_integrability_check: r must lie in [0, D1/(p ln 2 + 2 ln A_p)]");
  InequalityReport rep;
  rep.statement = "lem:exp-integrability";
  for (const Cube& q : fam.cubes) {
    const double c = w.integral_log(q) / q.volume();
    const double e = std::exp(r * c);
    const double a = cube_avg_pow(w, q, r);
    InequalityRow row;
    row.cube = q;
    row.r = r;
    row.value = a;
    row.lower = e;
    row.upper = kInf;
    row.margin = (a - e) / std::max(e, 1e-300);
    rep.add(row, tol);
    rep.measured_constant = std::max(rep.measured_constant, a / e);
  }
  return rep;
}

}  // namespace lio
