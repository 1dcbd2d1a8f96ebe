#pragma once

// Kernel families, the radial dominator r_K, moduli of continuity, the
// kernel condition constants and the Bessel potential kernel.

#include <cmath>
#include <complex>
#include <fstream>
#include <functional>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "lio/core.hpp"
#include "lio/quadrature.hpp"

namespace lio {

// ---- Bessel potential kernel -------------------------------------------

// G_gamma(x) by heat semigroup subordination,
//   G(x) = Gamma(g/2)^-1 int_0^inf t^{g/2-1} e^{-t} (4 pi t)^{-d/2} e^{-rho^2/4t} dt
// with rho the euclidean length. After t = e^u the integrand is smooth and
// decays double exponentially, so a trapezoid rule converges geometrically.
inline double bessel_kernel(double gamma, int d, const Point& x, double rel_tol = 1e-13) {
  require(gamma > 0, "bessel kernel: gamma must be positive");
  check_dim(d);
  require(x.d == d, "bessel kernel: point dimension mismatch");
  const double a = 0.5 * (gamma - d);
  // no squaring: rho^2 underflows long before rho does
  const double rho = d == 1 ? std::abs(x[0]) : std::hypot(x[0], x[1]);
  const double log_pref = -0.5 * d * std::log(4.0 * std::numbers::pi) - std::lgamma(0.5 * gamma);
  if (rho == 0.0) {
    if (a <= 0) throw DomainError("bessel kernel is singular at the origin when gamma <= d");
    return std::exp(log_pref + std::lgamma(a));
  }
  // c = rho^2 / 4 is carried as its logarithm
  const double lc = 2.0 * std::log(rho) - std::log(4.0);
  auto phi = [&](double u) { return a * u - std::exp(u) - std::exp(lc - u); };
  // peak e^u = (a + sqrt(a^2 + 4c)) / 2, rationalized when a < 0
  double lep;
  if (a > 0) lep = std::log(0.5 * (a + std::sqrt(a * a + 4.0 * std::exp(lc))));
  else if (a == 0) lep = 0.5 * lc;
  else lep = std::log(2.0) + lc - std::log(std::sqrt(a * a + 4.0 * std::exp(lc)) - a);
  const double us = lep;
  const double ps = phi(us);
  // near the origin with gamma <= d the peak is a plateau of width ~ |ln c|
  // and the curvature scale is useless; one unit is fine there
  const double sigma = std::min(1.0, 1.0 / std::sqrt(std::exp(lep) + std::exp(lc - lep)));
  // the value is below the smallest subnormal long before the sum matters
  if (log_pref + ps < -760.0) return 0.0;
  // walk out until the integrand is below e^-40 of the peak
  double lo = us, hi = us, step = sigma;
  while (phi(lo) - ps > -40.0) {
    lo -= step;
    step *= 1.5;
  }
  step = sigma;
  while (phi(hi) - ps > -40.0) {
    hi += step;
    step *= 1.5;
  }
  double h = sigma;
  int m = std::max(8, int(std::ceil((hi - lo) / h)));
  h = (hi - lo) / m;
  double sum = 0.0;
  for (int i = 0; i <= m; ++i) sum += std::exp(phi(lo + i * h) - ps) * ((i == 0 || i == m) ? 0.5 : 1.0);
  double prev = sum * h;
  for (int level = 0; level < 14; ++level) {
    double add = 0.0;
    for (int i = 0; i < m; ++i) add += std::exp(phi(lo + (i + 0.5) * h) - ps);
    sum += add;
    m *= 2;
    h *= 0.5;
    const double cur = sum * h;
    if (std::abs(cur - prev) <= rel_tol * std::abs(cur) && level >= 1)
      return std::exp(log_pref + ps + std::log(cur));
    prev = cur;
  }
  throw QuadratureError("bessel kernel: subordination quadrature did not converge", std::abs(sum * h - prev) / prev);
}

// ---- kernels ------------------------------------------------------------

enum class KernelKind { convolution, bessel, tabulated, general };

inline const char* to_string(KernelKind k) {
  switch (k) {
    case KernelKind::convolution: return "convolution";
    case KernelKind::bessel: return "bessel";
    case KernelKind::tabulated: return "tabulated";
    case KernelKind::general: return "general";
  }
  return "?";
}

struct ConvolutionTraits {
  bool even = true;         // g(-v) = g(v)
  bool coord_even = false;  // even in every coordinate separately
  bool singular = false;    // integrable blow up at v = 0
  bool zero = false;
  // exact sup_{|v| >= t} |g(v)|, when known
  std::function<double(double)> radial;
};

class Kernel {
 public:
  using Profile = std::function<double(const Point&)>;
  using Function = std::function<double(const Point&, const Point&)>;

  // K(x, y) = g(x - y)
  static Kernel convolution(int d, double L, Profile g, ConvolutionTraits tr = {},
                            std::string descriptor = "convolution") {
    check_dim(d);
    require(L > 0, "box half width must be positive");
    Kernel k;
    auto s = std::make_shared<State>();
    s->kind = KernelKind::convolution;
    s->d = d;
    s->L = L;
    s->g = std::move(g);
    s->tr = std::move(tr);
    s->descriptor = std::move(descriptor);
    k.s_ = s;
    return k;
  }

  static Kernel general(int d, double L, Function f, bool singular = false,
                        std::string descriptor = "general") {
    check_dim(d);
    require(L > 0, "box half width must be positive");
    Kernel k;
    auto s = std::make_shared<State>();
    s->kind = KernelKind::general;
    s->d = d;
    s->L = L;
    s->f = std::move(f);
    s->tr.singular = singular;
    s->tr.even = false;
    s->descriptor = std::move(descriptor);
    k.s_ = s;
    return k;
  }

  // g(x) = s/2 e^{-s|x|} in d = 1; the tensor product of that in d = 2
  static Kernel conv_exp(int d, double scale, double L = 32.0) {
    require(scale > 0, "conv-exp: scale must be positive");
    const double c = std::pow(0.5 * scale, d);
    ConvolutionTraits tr;
    tr.coord_even = true;
    tr.radial = [c, scale](double t) { return c * std::exp(-scale * std::max(t, 0.0)); };
    auto g = [c, scale](const Point& v) {
      double s = 0.0;
      for (int i = 0; i < v.d; ++i) s += std::abs(v[i]);
      return c * std::exp(-scale * s);
    };
    std::ostringstream os;
    os << "conv-exp:scale=" << scale;
    return convolution(d, L, g, tr, os.str());
  }

  static Kernel bessel(double gamma, int d, double L = 32.0) {
    require(gamma > 0, "bessel: gamma must be positive");
    check_dim(d);
    ConvolutionTraits tr;
    tr.coord_even = true;
    tr.singular = gamma <= d;
    // radially decreasing in the euclidean length, and the smallest euclidean
    // length on {|v| >= t} is t
    tr.radial = [gamma, d](double t) {
      Point p = Point::zero(d);
      p[0] = t;
      return bessel_kernel(gamma, d, p);
    };
    auto g = [gamma, d](const Point& v) { return bessel_kernel(gamma, d, v); };
    std::ostringstream os;
    os << "bessel:gamma=" << gamma;
    Kernel k = convolution(d, L, g, tr, os.str());
    std::const_pointer_cast<State>(k.s_)->kind = KernelKind::bessel;
    std::const_pointer_cast<State>(k.s_)->gamma = gamma;
    return k;
  }

  static Kernel zero(int d, double L = 32.0) {
    ConvolutionTraits tr;
    tr.coord_even = true;
    tr.zero = true;
    tr.radial = [](double) { return 0.0; };
    return convolution(d, L, [](const Point&) { return 0.0; }, tr, "zero");
  }

  static Kernel constant(double c, int d, double L = 32.0) {
    ConvolutionTraits tr;
    tr.coord_even = true;
    tr.zero = c == 0.0;
    tr.radial = [c](double) { return std::abs(c); };
    std::ostringstream os;
    os << "constant:c=" << c;
    return convolution(d, L, [c](const Point&) { return c; }, tr, os.str());
  }

  // sampled convolution profile; linear (d = 1) or bilinear (d = 2) on a
  // regular grid, zero outside the table
  static Kernel tabulated(int d, std::vector<double> axis0, std::vector<double> axis1,
                          std::vector<double> values, double L = 32.0, std::string descriptor = "tabulated");
  static Kernel tabulated_csv(const std::string& path, int d, double L = 32.0);

  int dim() const { return s_->d; }
  double box() const { return s_->L; }
  KernelKind kind() const { return s_->kind; }
  bool is_convolution() const { return s_->kind != KernelKind::general; }
  bool singular() const { return s_->tr.singular; }
  bool even() const { return s_->tr.even; }
  bool coord_even() const { return s_->tr.coord_even; }
  bool is_zero() const { return s_->tr.zero; }
  double gamma() const { return s_->gamma; }
  const std::string& descriptor() const { return s_->descriptor; }
  const std::function<double(double)>& radial_hint() const { return s_->tr.radial; }

  double profile(const Point& v) const {
    if (!is_convolution()) throw UnsupportedError("profile: kernel is not of convolution type");
    return s_->g(v);
  }
  double operator()(const Point& x, const Point& y) const {
    if (is_convolution()) return s_->g(x - y);
    return s_->f(x, y);
  }

 private:
  struct State {
    KernelKind kind = KernelKind::general;
    int d = 1;
    double L = 32.0;
    Profile g;
    Function f;
    ConvolutionTraits tr;
    double gamma = 0.0;
    std::string descriptor;
  };
  std::shared_ptr<const State> s_;
};

inline Kernel Kernel::tabulated(int d, std::vector<double> ax0, std::vector<double> ax1,
                                std::vector<double> vals, double L, std::string descriptor) {
  check_dim(d);
  require(ax0.size() >= 2, "tabulated kernel needs at least two nodes per axis");
  for (std::size_t i = 1; i < ax0.size(); ++i) require(ax0[i] > ax0[i - 1], "tabulated axis must increase");
  if (d == 2) {
    require(ax1.size() >= 2, "tabulated kernel needs at least two nodes per axis");
    for (std::size_t i = 1; i < ax1.size(); ++i) require(ax1[i] > ax1[i - 1], "tabulated axis must increase");
    require(vals.size() == ax0.size() * ax1.size(), "tabulated kernel: value count mismatch");
  } else {
    require(vals.size() == ax0.size(), "tabulated kernel: value count mismatch");
  }
  auto locate = [](const std::vector<double>& ax, double v, std::size_t& i, double& t) {
    if (v < ax.front() || v > ax.back()) return false;
    auto it = std::upper_bound(ax.begin(), ax.end(), v);
    i = std::min<std::size_t>(std::max<std::ptrdiff_t>(it - ax.begin() - 1, 0), ax.size() - 2);
    t = (v - ax[i]) / (ax[i + 1] - ax[i]);
    return true;
  };
  auto data = std::make_shared<std::tuple<std::vector<double>, std::vector<double>, std::vector<double>>>(
      std::move(ax0), std::move(ax1), std::move(vals));
  auto g = [data, locate, d](const Point& v) {
    const auto& [a0, a1, val] = *data;
    std::size_t i, j;
    double s, t;
    if (!locate(a0, v[0], i, s)) return 0.0;
    if (d == 1) return (1 - s) * val[i] + s * val[i + 1];
    if (!locate(a1, v[1], j, t)) return 0.0;
    const std::size_t n1 = a1.size();
    return (1 - s) * (1 - t) * val[i * n1 + j] + s * (1 - t) * val[(i + 1) * n1 + j] +
           (1 - s) * t * val[i * n1 + j + 1] + s * t * val[(i + 1) * n1 + j + 1];
  };
  // symmetry check on the nodes
  ConvolutionTraits tr;
  {
    const auto& [a0, a1, val] = *data;
    bool ev = true;
    Rng rng(17);
    const double span = a0.back();
    for (int k = 0; k < 64 && ev; ++k) {
      Point p = Point::zero(d);
      p[0] = rng.uniform(-span, span);
      if (d == 2) p[1] = rng.uniform(a1.front(), a1.back());
      ev = std::abs(g(p) - g(-p)) <= 1e-12 * (1 + std::abs(g(p)));
    }
    tr.even = ev;
  }
  Kernel k = convolution(d, L, g, tr, descriptor);
  std::const_pointer_cast<State>(k.s_)->kind = KernelKind::tabulated;
  return k;
}

inline std::vector<std::vector<double>> read_numeric_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("path", "cannot open '" + path + "'");
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    bool ok = true;
    while (std::getline(ss, cell, ',')) {
      try {
        std::size_t used = 0;
        row.push_back(std::stod(cell, &used));
      } catch (...) {
        ok = false;
        break;
      }
    }
    if (ok && !row.empty()) rows.push_back(std::move(row));
  }
  return rows;
}

inline Kernel Kernel::tabulated_csv(const std::string& path, int d, double L) {
  auto rows = read_numeric_csv(path);
  if (rows.size() < 2) throw ParseError("tabulated", "tabulated kernel '" + path + "' has fewer than two rows");
  std::vector<double> a0, a1, v;
  if (d == 1) {
    std::sort(rows.begin(), rows.end());
    for (auto& r : rows) {
      if (r.size() != 2) throw ParseError("tabulated", "expected 'x,value' rows in '" + path + "'");
      a0.push_back(r[0]);
      v.push_back(r[1]);
    }
  } else {
    std::sort(rows.begin(), rows.end());
    for (auto& r : rows) {
      if (r.size() != 3) throw ParseError("tabulated", "expected 'x1,x2,value' rows in '" + path + "'");
      if (a0.empty() || a0.back() != r[0]) a0.push_back(r[0]);
      if (a0.size() == 1) a1.push_back(r[1]);
      v.push_back(r[2]);
    }
    if (v.size() != a0.size() * a1.size())
      throw ParseError("tabulated", "tabulated kernel '" + path + "' is not a full regular grid");
  }
  return tabulated(d, a0, a1, v, L, "tabulated:" + path);
}

// "bessel:gamma=2", "conv-exp:scale=1", "tabulated:<path>", "zero", "constant:c=<c>"
inline double parse_number(const std::string& field, const std::string& text) {
  try {
    std::size_t used = 0;
    double v = std::stod(text, &used);
    if (used != text.size()) throw std::invalid_argument("trailing");
    return v;
  } catch (...) {
    throw ParseError(field, "field '" + field + "': cannot parse number from '" + text + "'");
  }
}

inline std::pair<std::string, std::string> split_descriptor(const std::string& s) {
  const auto c = s.find(':');
  if (c == std::string::npos) return {s, ""};
  return {s.substr(0, c), s.substr(c + 1)};
}

inline double descriptor_param(const std::string& field, const std::string& body, const std::string& key) {
  const auto eq = body.find('=');
  if (eq == std::string::npos || body.substr(0, eq) != key)
    throw ParseError(field, "field '" + field + "': expected '" + key + "=<value>', got '" + body + "'");
  return parse_number(field, body.substr(eq + 1));
}

inline Kernel parse_kernel(const std::string& desc, int d, double L, const std::string& field = "kernel") {
  auto [head, body] = split_descriptor(desc);
  if (head == "bessel") return Kernel::bessel(descriptor_param(field, body, "gamma"), d, L);
  if (head == "conv-exp") return Kernel::conv_exp(d, descriptor_param(field, body, "scale"), L);
  if (head == "tabulated") {
    if (body.empty()) throw ParseError(field, "field '" + field + "': tabulated kernel needs a path");
    return Kernel::tabulated_csv(body, d, L);
  }
  if (head == "zero") return Kernel::zero(d, L);
  if (head == "constant") return Kernel::constant(descriptor_param(field, body, "c"), d, L);
  throw ParseError(field, "field '" + field + "': unknown kernel family '" + head + "'");
}

// ---- radial profiles ----------------------------------------------------

// nonincreasing envelope b on [0, inf). Either a closed form (exact) or a
// step function over sample nodes: b = head on [0, t0), b_i on [t_i, t_{i+1}).
struct RadialProfile {
  int d = 1;
  double L = 32.0;
  std::vector<double> t, b;
  double head = 0.0;
  std::function<double(double)> exact;
  double l1_truncated = 0.0;  // integral over the box
  double tail_bound = 0.0;    // estimate of the integral outside the box
  double l1_norm = 0.0;       // truncated + tail
  double refinement_delta = 0.0;

  double operator()(double s) const {
    if (exact) return exact(s);
    if (t.empty() || s < t.front()) return head;
    auto it = std::upper_bound(t.begin(), t.end(), s);
    return b[std::size_t(it - t.begin()) - 1];
  }

  // integral of b(|x|) over r0 <= |x| <= r1
  double shell_integral(double r0, double r1) const {
    if (r1 <= r0) return 0.0;
    if (exact) {
      auto f = [&](double s) { return exact(s) * sphere_density(d, s); };
      QuadOptions o{1e-11, 1e-300, 4000};
      auto res = r0 == 0.0 ? integrate_toward(f, 0.0, r1, 0.0, o) : integrate(f, r0, r1, o);
      return res.value;
    }
    double acc = 0.0;
    auto piece = [&](double a, double c, double v) {
      a = std::max(a, r0);
      c = std::min(c, r1);
      if (c > a) acc += v * (ball_volume(d, c) - ball_volume(d, a));
    };
    const double t0 = t.empty() ? kInf : t.front();
    piece(0.0, t0, head);
    for (std::size_t i = 0; i < t.size(); ++i) piece(t[i], i + 1 < t.size() ? t[i + 1] : kInf, b[i]);
    return acc;
  }
  double ball_integral(double r) const { return shell_integral(0.0, r); }
  // integral of b(|x|) over |x| >= r, truncated part plus the tail
  double outside_integral(double r) const {
    return r >= L ? tail_beyond(r) : shell_integral(r, L) + tail_bound;
  }

  double tail_beyond(double r) const {
    if (exact) return exact_tail(r);
    return r <= L ? tail_bound : sampled_tail(r);
  }

  double exact_tail(double r) const {
    // t = r + u/(1-u) maps [0,1) onto [r, inf)
    auto f = [&](double u) {
      const double s = r + u / (1.0 - u);
      return exact(s) * sphere_density(d, s) / ((1.0 - u) * (1.0 - u));
    };
    auto res = integrate(f, 0.0, 1.0, QuadOptions{1e-10, 1e-300, 4000});
    if (!res.converged || !std::isfinite(res.value)) return kInf;
    // a profile that does not decay (constant kernel) has no finite tail
    if (exact(1e6 * std::max(1.0, r)) > 0.0 && exact(2e6 * std::max(1.0, r)) >= exact(1e6 * std::max(1.0, r)))
      return kInf;
    return res.value;
  }

  // tail past the last node assuming the final exponential rate persists
  double sampled_tail(double r) const {
    if (b.empty() || b.back() == 0.0) return 0.0;
    const std::size_t n = b.size();
    if (n < 2) return kInf;
    // rate from the last stretch of nodes at least one unit apart
    std::size_t j = n - 2;
    while (j > 0 && t[n - 1] - t[j] < 1.0) --j;
    if (b[j] <= b[n - 1]) return kInf;
    const double kappa = std::log(b[j] / b[n - 1]) / (t[n - 1] - t[j]);
    const double bl = b[n - 1] * std::exp(-kappa * std::max(0.0, r - t[n - 1]));
    if (d == 1) return 2.0 * bl / kappa;
    return 8.0 * bl * (r / kappa + 1.0 / (kappa * kappa));
  }
};

// default radius nodes: geometric near 0, then uniform with spacing 1/32
inline std::vector<double> default_radius_grid(double L) {
  std::vector<double> g = geometric_grid(1e-6, 1.0, 161);
  g.pop_back();
  for (double s = 1.0; s <= L + 1e-12; s += 1.0 / 32) g.push_back(s);
  return g;
}

namespace detail {

inline void check_radius_grid(const std::vector<double>& g) {
  require(!g.empty(), "radius grid must be nonempty");
  require(g.front() > 0, "radius grid must be positive");
  for (std::size_t i = 1; i < g.size(); ++i) require(g[i] > g[i - 1], "radius grid must be strictly increasing");
}

// points v with |v| = s, spread over the max-norm sphere
inline void sphere_points(int d, double s, int per_side, std::vector<Point>& out) {
  out.clear();
  if (d == 1) {
    out.emplace_back(s);
    out.emplace_back(-s);
    return;
  }
  for (int j = 0; j < per_side; ++j) {
    const double u = -s + 2.0 * s * j / per_side;
    out.emplace_back(u, s);
    out.emplace_back(s, -u);
    out.emplace_back(-u, -s);
    out.emplace_back(-s, u);
  }
}

// envelope from a shell sampler: shell(lo, hi, level) returns the sampled
// sup of |value| over lo <= |v| <= hi. Refines until two levels agree to 1%.
template <class Shell>
RadialProfile envelope(int d, double L, const std::vector<double>& nodes, double reach, Shell&& shell,
                       bool singular, const std::string& what) {
  RadialProfile rp;
  rp.d = d;
  rp.L = L;
  rp.t = nodes;
  const std::size_t n = nodes.size();
  auto sweep = [&](int level, std::vector<double>& b, double& head) {
    b.assign(n, 0.0);
    parallel_for(n, [&](std::size_t i) {
      const double hi = i + 1 < n ? nodes[i + 1] : std::max(reach, nodes[i]);
      b[i] = shell(nodes[i], hi, level);
    });
    for (std::size_t i = n - 1; i-- > 0;) b[i] = std::max(b[i], b[i + 1]);
    head = shell(singular ? nodes.front() * 1e-3 : 0.0, nodes.front(), level);
    head = std::max(head, n ? b[0] : 0.0);
  };
  std::vector<double> b0, b1;
  double h0 = 0, h1 = 0;
  sweep(0, b0, h0);
  for (int level = 1; level <= 3; ++level) {
    sweep(level, b1, h1);
    double worst = 0.0, delta = 0.0;
    std::size_t where = 0;
    const double scale = std::max(h1, 1e-300);
    for (std::size_t i = 0; i < n; ++i) {
      const double diff = std::abs(b1[i] - b0[i]);
      // relative change, ignoring values far below the profile scale
      const double rel = diff / std::max(b1[i], 1e-12 * scale);
      if (rel > worst) {
        worst = rel;
        where = i;
      }
      delta = std::max(delta, diff);
    }
    b0.swap(b1);
    h0 = h1;
    rp.refinement_delta = delta;
    if (worst <= 0.01) break;
    if (level == 3)
      throw SamplingError(what + ": sup envelope still moving by " + std::to_string(100 * worst) +
                          "% at radius " + std::to_string(nodes[where]) + " after refinement");
  }
  rp.b = std::move(b0);
  rp.head = h0;
  return rp;
}

}  // namespace detail

inline void finish_profile(RadialProfile& rp) {
  rp.l1_truncated = rp.ball_integral(rp.L);
  rp.tail_bound = rp.exact ? rp.exact_tail(rp.L) : rp.sampled_tail(rp.L);
  rp.l1_norm = rp.l1_truncated + rp.tail_bound;
}

inline RadialProfile radial_dominator(const Kernel& k, const std::vector<double>& radius_grid) {
  detail::check_radius_grid(radius_grid);
  const int d = k.dim();
  const double L = k.box();
  if (k.is_convolution() && k.radial_hint()) {
    RadialProfile rp;
    rp.d = d;
    rp.L = L;
    rp.t = radius_grid;
    rp.exact = k.radial_hint();
    rp.b.resize(radius_grid.size());
    for (std::size_t i = 0; i < radius_grid.size(); ++i) rp.b[i] = rp.exact(radius_grid[i]);
    for (std::size_t i = 1; i < rp.b.size(); ++i)
      if (rp.b[i] > rp.b[i - 1] * (1 + 1e-12) + 1e-300)
        throw SamplingError("radial dominator: closed-form envelope increases at radius " +
                            std::to_string(radius_grid[i]));
    rp.head = k.singular() ? kInf : rp.exact(0.0);
    finish_profile(rp);
    return rp;
  }
  std::vector<Point> pts;
  if (k.is_convolution()) {
    const double reach = 2.0 * L;
    auto shell = [&](double lo, double hi, int level) {
      const int m = 4 << level;
      const int per_side = 8 << level;
      std::vector<Point> sp;
      double best = 0.0;
      for (int j = 0; j <= m; ++j) {
        const double s = lo + (hi - lo) * j / m;
        if (s <= 0.0) continue;
        detail::sphere_points(d, s, per_side, sp);
        for (auto& v : sp) best = std::max(best, std::abs(k.profile(v)));
      }
      return best;
    };
    auto rp = detail::envelope(d, L, radius_grid, reach, shell, k.singular(), "radial dominator");
    finish_profile(rp);
    return rp;
  }
  // general kernel: anchors across the box, displacements in every direction
  const double reach = 2.0 * L;
  auto shell = [&](double lo, double hi, int level) {
    const int m = 2 << level;
    const int per_side = 4 << level;
    const int na = d == 1 ? (16 << level) + 1 : (4 << level) + 1;
    std::vector<Point> sp;
    double best = 0.0;
    for (int a0 = 0; a0 < na; ++a0)
      for (int a1 = 0; a1 < (d == 2 ? na : 1); ++a1) {
        Point y = Point::zero(d);
        y[0] = -L + 2.0 * L * a0 / (na - 1);
        if (d == 2) y[1] = -L + 2.0 * L * a1 / (na - 1);
        for (int j = 0; j <= m; ++j) {
          const double s = lo + (hi - lo) * j / m;
          if (s <= 0.0) continue;
          detail::sphere_points(d, s, per_side, sp);
          for (auto& v : sp) {
            Point y2 = y + v;
            if (!in_box(y2, L)) continue;
            best = std::max({best, std::abs(k(y, y2)), std::abs(k(y2, y))});
          }
        }
      }
    return best;
  };
  auto rp = detail::envelope(d, L, radius_grid, reach, shell, k.singular(), "radial dominator");
  finish_profile(rp);
  return rp;
}

inline RadialProfile radial_dominator(const Kernel& k) {
  return radial_dominator(k, default_radius_grid(k.box()));
}

// ---- modulus of continuity ------------------------------------------------

namespace detail {

// sup over |u| <= 2 delta of |g(v + u) - g(v)| for a convolution profile
inline double conv_oscillation(const Kernel& k, const Point& v, double delta, int m) {
  const int d = k.dim();
  const double g0 = k.profile(v);
  double best = 0.0;
  for (int i = 0; i <= m; ++i) {
    const double u0 = -2 * delta + 4 * delta * i / m;
    if (d == 1) {
      best = std::max(best, std::abs(k.profile(Point(v[0] + u0)) - g0));
      continue;
    }
    for (int j = 0; j <= m; ++j) {
      const double u1 = -2 * delta + 4 * delta * j / m;
      best = std::max(best, std::abs(k.profile(Point(v[0] + u0, v[1] + u1)) - g0));
    }
  }
  return best;
}

inline double general_oscillation(const Kernel& k, const Point& x, const Point& y, double delta, int m) {
  const int d = k.dim();
  const double k0 = k(x, y);
  double best = 0.0;
  auto offsets = [&](std::vector<Point>& out) {
    out.clear();
    for (int i = 0; i <= m; ++i) {
      const double a = -delta + 2 * delta * i / m;
      if (d == 1) {
        out.emplace_back(a);
        continue;
      }
      for (int j = 0; j <= m; ++j) out.emplace_back(a, -delta + 2 * delta * j / m);
    }
  };
  std::vector<Point> du;
  offsets(du);
  for (auto& a : du)
    for (auto& b : du) best = std::max(best, std::abs(k(x + a, y + b) - k0));
  return best;
}

}  // namespace detail

// omega_delta(K)(x, y): sampled sup of |K(x', y') - K(x, y)| over
// |x' - x|, |y' - y| <= delta when |x - y| >= 4 delta, and 0 otherwise
inline double modulus_of_continuity(const Kernel& k, double delta, const Point& x, const Point& y) {
  require(delta > 0 && delta <= 1, "modulus of continuity: delta must lie in (0, 1]");
  require(x.d == k.dim() && y.d == k.dim(), "modulus of continuity: point dimension mismatch");
  if (!in_box(x, k.box()) || !in_box(y, k.box()))
    throw DomainError("modulus of continuity: point outside the box [-L, L]^d");
  if ((x - y).norm() < 4 * delta) return 0.0;
  auto eval = [&](int level) {
    return k.is_convolution() ? detail::conv_oscillation(k, x - y, delta, (k.dim() == 1 ? 32 : 8) << level)
                              : detail::general_oscillation(k, x, y, delta, (k.dim() == 1 ? 8 : 4) << level);
  };
  double prev = eval(0);
  for (int level = 1; level <= 4; ++level) {
    const double cur = eval(level);
    if (std::abs(cur - prev) <= 0.01 * std::max(cur, 1e-300)) return cur;
    prev = cur;
  }
  return prev;
}

// ---- kernel condition -----------------------------------------------------

struct KernelConditionReport {
  double alpha = 1.0;
  double norm_rk = 0.0;
  double sup_modulus_term = 0.0;
  double sup_singularity_term = 0.0;
  double D0 = 0.0;
  double tail_bound = 0.0;
  bool holds = true;
  std::string diagnostic;
  std::vector<double> deltas, modulus_terms, singularity_terms;
};

namespace detail {

// growth test for q(delta) as delta -> 0: log-log slope over the four
// smallest deltas. q ~ log(1/delta) has slope about -0.12 there; bounded
// terms are flat.
inline bool diverges(const std::vector<double>& deltas, const std::vector<double>& q) {
  std::vector<std::pair<double, double>> pts;
  for (std::size_t i = 0; i < deltas.size(); ++i)
    if (q[i] > 0 && std::isfinite(q[i])) pts.emplace_back(deltas[i], q[i]);
  for (std::size_t i = 0; i < deltas.size(); ++i)
    if (!std::isfinite(q[i])) return true;
  std::sort(pts.begin(), pts.end());
  if (pts.size() < 3) return false;
  const std::size_t m = std::min<std::size_t>(4, pts.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < m; ++i) {
    const double lx = std::log(pts[i].first), ly = std::log(pts[i].second);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  const double slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
  return slope < -0.1 && pts[0].second > pts[m - 1].second;
}

// L1 norm of the radial envelope of omega_delta(K) for a convolution kernel
inline double modulus_envelope_l1(const Kernel& k, double delta) {
  const int d = k.dim();
  const double L = k.box();
  const double t0 = 4 * delta;
  if (t0 >= 2 * L) return 0.0;
  std::vector<double> nodes{t0};
  for (double s : geometric_grid(1e-3 * delta, 1.0, 60))
    if (t0 + s < 2 * L) nodes.push_back(t0 + s);
  for (double s = 1.0 + 1.0 / 32; t0 + s < 2 * L; s += 1.0 / 32) nodes.push_back(t0 + s);
  nodes.push_back(2 * L);
  const std::size_t n = nodes.size();
  const int m = d == 1 ? 16 : 4;
  const int per_side = d == 1 ? 1 : 4;
  std::vector<double> w(n, 0.0);
  parallel_for(n, [&](std::size_t i) {
    std::vector<Point> sp;
    detail::sphere_points(d, nodes[i], per_side, sp);
    double best = 0.0;
    for (auto& v : sp) {
      if (k.even() && d == 1 && v[0] < 0) continue;
      best = std::max(best, conv_oscillation(k, v, delta, m));
    }
    w[i] = best;
  });
  for (std::size_t i = n - 1; i-- > 0;) w[i] = std::max(w[i], w[i + 1]);
  // constant w[0] on the ball |x| < 4 delta, trapezoid beyond; the box
  // truncation applies to differences, which live in [-2L, 2L]^d
  double acc = w[0] * ball_volume(d, t0);
  for (std::size_t i = 0; i + 1 < n; ++i)
    acc += 0.5 * (w[i] + w[i + 1]) * (ball_volume(d, nodes[i + 1]) - ball_volume(d, nodes[i]));
  return acc;
}

inline double general_modulus_l1(const Kernel& k, double delta) {
  const int d = k.dim();
  const double L = k.box();
  std::vector<double> nodes;
  for (double s : geometric_grid(4 * delta, std::max(2 * L, 8 * delta), 24)) nodes.push_back(s);
  auto shell = [&](double lo, double hi, int level) {
    const int na = d == 1 ? (4 << level) + 1 : 3;
    std::vector<Point> sp;
    double best = 0.0;
    for (int a0 = 0; a0 < na; ++a0)
      for (int a1 = 0; a1 < (d == 2 ? na : 1); ++a1) {
        Point y = Point::zero(d);
        y[0] = -L + 2.0 * L * a0 / (na - 1);
        if (d == 2) y[1] = -L + 2.0 * L * a1 / (na - 1);
        for (double s : {lo, 0.5 * (lo + hi)}) {
          detail::sphere_points(d, s, 2, sp);
          for (auto& v : sp) {
            Point y2 = y + v;
            if (!in_box(y2, L)) continue;
            best = std::max(best, general_oscillation(k, y2, y, delta, 2));
          }
        }
      }
    return best;
  };
  std::vector<double> w(nodes.size());
  for (std::size_t i = 0; i < nodes.size(); ++i)
    w[i] = shell(nodes[i], i + 1 < nodes.size() ? nodes[i + 1] : nodes[i], 0);
  for (std::size_t i = w.size() - 1; i-- > 0;) w[i] = std::max(w[i], w[i + 1]);
  double acc = w[0] * ball_volume(d, nodes[0]);
  for (std::size_t i = 0; i + 1 < nodes.size(); ++i)
    acc += w[i] * (ball_volume(d, nodes[i + 1]) - ball_volume(d, nodes[i]));
  return acc;
}

}  // namespace detail

inline KernelConditionReport kernel_condition_constants(const Kernel& k, double alpha,
                                                        std::vector<double> delta_grid = default_delta_grid()) {
  require(alpha > 0 && alpha <= 1, "kernel condition: alpha must lie in (0, 1]");
  require(!delta_grid.empty(), "kernel condition: delta grid must be nonempty");
  for (double dl : delta_grid) require(dl > 0 && dl <= 1, "kernel condition: deltas must lie in (0, 1]");
  std::sort(delta_grid.begin(), delta_grid.end());
  KernelConditionReport r;
  r.alpha = alpha;
  r.deltas = delta_grid;
  if (k.is_zero()) {
    r.modulus_terms.assign(delta_grid.size(), 0.0);
    r.singularity_terms.assign(delta_grid.size(), 0.0);
    return r;
  }
  const auto prof = radial_dominator(k);
  r.norm_rk = prof.l1_norm;
  r.tail_bound = prof.tail_bound;
  for (double dl : delta_grid) {
    const double sing = std::pow(dl, -alpha) * prof.ball_integral(dl);
    const double mod = std::pow(dl, -alpha) *
                       (k.is_convolution() ? detail::modulus_envelope_l1(k, dl) : detail::general_modulus_l1(k, dl));
    r.singularity_terms.push_back(sing);
    r.modulus_terms.push_back(mod);
    r.sup_singularity_term = std::max(r.sup_singularity_term, sing);
    r.sup_modulus_term = std::max(r.sup_modulus_term, mod);
  }
  r.D0 = r.norm_rk + r.sup_modulus_term + r.sup_singularity_term;
  const bool ds = detail::diverges(delta_grid, r.singularity_terms);
  const bool dm = detail::diverges(delta_grid, r.modulus_terms);
  if (!std::isfinite(r.norm_rk) || ds || dm) {
    r.holds = false;
    r.diagnostic = std::string("condition fails for this alpha: ") +
                   (!std::isfinite(r.norm_rk) ? "r_K is not integrable"
                    : ds                      ? "singularity term grows as delta -> 0"
                                              : "modulus term grows as delta -> 0");
    r.D0 = kInf;
  }
  return r;
}

// ---- Fourier symbol -------------------------------------------------------

// g^(xi) = int g(x) e^{-i x xi} dx over the box, for convolution kernels
inline std::complex<double> fourier_symbol_at(const Kernel& k, const Point& xi, double rel = 1e-11) {
  if (!k.is_convolution()) throw UnsupportedError("fourier symbol: kernel is not of convolution type");
  require(xi.d == k.dim(), "fourier symbol: frequency dimension mismatch");
  if (k.is_zero()) return {0.0, 0.0};
  const double L = k.box();
  const int d = k.dim();
  QuadOptions o{rel, 1e-300, 400};
  // pieces short enough that every piece sees at most half a period
  auto pieces = [&](double w) {
    std::vector<double> br{0.0};
    const double step = std::min(1.0, std::numbers::pi / std::max(std::abs(w), 1e-300));
    for (double s = step; s < L; s += step) br.push_back(s);
    br.push_back(L);
    return br;
  };
  auto line = [&](auto&& f, double w) {
    auto br = pieces(w);
    QuadResult acc;
    for (std::size_t i = 0; i + 1 < br.size(); ++i)
      acc += (i == 0 && k.singular()) ? integrate_toward(f, br[0], br[1], 0.0, o) : integrate(f, br[i], br[i + 1], o);
    return acc.value;
  };
  if (d == 1) {
    const double w = xi[0];
    auto fc = [&](double x) { return (k.profile(Point(x)) + k.profile(Point(-x))) * std::cos(w * x); };
    double re = line(fc, w);
    double im = 0.0;
    if (!k.even()) {
      auto fs = [&](double x) { return (k.profile(Point(x)) - k.profile(Point(-x))) * std::sin(w * x); };
      im = -line(fs, w);
    }
    return {re, im};
  }
  // d = 2
  if (k.coord_even()) {
    auto outer = [&](double x0) {
      auto inner = [&](double x1) { return k.profile(Point(x0, x1)) * std::cos(xi[1] * x1); };
      return std::cos(xi[0] * x0) * line(inner, xi[1]);
    };
    return {4.0 * line(outer, xi[0]), 0.0};
  }
  auto part = [&](bool imag) {
    auto outer = [&](double x0) {
      auto inner = [&](double x1) {
        double acc = 0.0;
        for (int s0 : {1, -1})
          for (int s1 : {1, -1}) {
            const double ph = xi[0] * s0 * x0 + xi[1] * s1 * x1;
            acc += k.profile(Point(s0 * x0, s1 * x1)) * (imag ? -std::sin(ph) : std::cos(ph));
          }
        return acc;
      };
      return line(inner, xi[1]);
    };
    return line(outer, xi[0]);
  };
  return {part(false), part(true)};
}

inline std::vector<std::complex<double>> fourier_symbol(const Kernel& k, const std::vector<Point>& xi) {
  std::vector<std::complex<double>> out(xi.size());
  parallel_for(xi.size(), [&](std::size_t i) { out[i] = fourier_symbol_at(k, xi[i]); });
  return out;
}

inline std::vector<double> fourier_symbol_1d(const Kernel& k, const std::vector<double>& xi) {
  std::vector<Point> pts;
  for (double v : xi) pts.emplace_back(v);
  auto c = fourier_symbol(k, pts);
  std::vector<double> out;
  for (auto& z : c) out.push_back(z.real());
  return out;
}

// ---- Wiener amalgam condition -------------------------------------------

struct WienerReport {
  double first_term = 0.0;
  double sup_modulus_term = 0.0;
  double value = 0.0;
};

namespace detail {

// sum over integer cells of the sampled sup of h on k + [-1/2, 1/2)^d
template <class H>
double amalgam_norm(int d, double reach, H&& h, int m) {
  const int kmax = int(std::ceil(reach + 0.5));
  std::vector<double> offs;
  for (int j = 0; j < m; ++j) offs.push_back(-0.5 + double(j) / m);
  offs.push_back(0.5 - 1e-9);
  const int span = 2 * kmax + 1;
  std::vector<double> cell(d == 1 ? span : span * span, 0.0);
  parallel_for(cell.size(), [&](std::size_t idx) {
    const int k0 = int(idx % span) - kmax;
    const int k1 = int(idx / span) - kmax;
    double best = 0.0;
    for (double a : offs) {
      if (d == 1) {
        best = std::max(best, std::abs(h(Point(k0 + a))));
        continue;
      }
      for (double b : offs) best = std::max(best, std::abs(h(Point(k0 + a, k1 + b))));
    }
    cell[idx] = best;
  });
  double s = 0.0;
  for (double c : cell) s += c;
  return s;
}

template <class H>
double amalgam_refined(int d, double reach, H&& h) {
  int m = d == 1 ? 32 : 8;
  double prev = amalgam_norm(d, reach, h, m);
  for (int it = 0; it < 3; ++it) {
    m *= 2;
    const double cur = amalgam_norm(d, reach, h, m);
    if (std::abs(cur - prev) <= 0.01 * std::max(cur, 1e-300)) return cur;
    prev = cur;
  }
  return prev;
}

// sup over sampled anchors y of |F(y, v + y)|
template <class F>
double sup_over_anchor(const Kernel& k, const Point& v, F&& f) {
  const int d = k.dim();
  const double L = k.box();
  const int na = d == 1 ? 33 : 9;
  double best = 0.0;
  for (int a0 = 0; a0 < na; ++a0)
    for (int a1 = 0; a1 < (d == 2 ? na : 1); ++a1) {
      Point y = Point::zero(d);
      y[0] = -L + 2.0 * L * a0 / (na - 1);
      if (d == 2) y[1] = -L + 2.0 * L * a1 / (na - 1);
      Point y2 = v + y;
      if (!in_box(y2, L)) continue;
      best = std::max(best, std::abs(f(y, y2)));
    }
  return best;
}

}  // namespace detail

// left side of the Wiener amalgam regularity condition; sup over delta_grid
inline WienerReport wiener_amalgam_condition(const Kernel& k, double alpha,
                                             std::vector<double> delta_grid = default_delta_grid()) {
  require(alpha > 0 && alpha <= 1, "wiener amalgam: alpha must lie in (0, 1]");
  require(!delta_grid.empty(), "wiener amalgam: delta grid must be nonempty");
  for (double dl : delta_grid) require(dl > 0 && dl <= 1, "wiener amalgam: deltas must lie in (0, 1]");
  if (k.singular()) throw InapplicableError("+inf / condition inapplicable: kernel is singular on the diagonal");
  std::sort(delta_grid.begin(), delta_grid.end());
  const int d = k.dim();
  const double reach = 2 * k.box();
  WienerReport r;
  if (k.is_zero()) return r;
  if (k.is_convolution()) {
    r.first_term = detail::amalgam_refined(d, reach, [&](const Point& v) { return k.profile(-v); });
  } else {
    r.first_term = detail::amalgam_refined(d, reach, [&](const Point& v) {
      return detail::sup_over_anchor(k, v, [&](const Point& a, const Point& b) { return k(a, b); });
    });
  }
  std::vector<double> q;
  for (double dl : delta_grid) {
    double w;
    if (k.is_convolution()) {
      w = detail::amalgam_refined(d, reach, [&](const Point& v) {
        return detail::conv_oscillation(k, -v, dl, d == 1 ? 16 : 4);
      });
    } else {
      w = detail::amalgam_norm(d, reach, [&](const Point& v) {
        return detail::sup_over_anchor(k, v, [&](const Point& a, const Point& b) {
          return detail::general_oscillation(k, a, b, dl, 2);
        });
      }, d == 1 ? 8 : 2);
    }
    q.push_back(std::pow(dl, -alpha) * w);
    r.sup_modulus_term = std::max(r.sup_modulus_term, q.back());
  }
  if (detail::diverges(delta_grid, q))
    throw InapplicableError("+inf / condition inapplicable: modulus term grows as delta -> 0");
  r.value = r.first_term + r.sup_modulus_term;
  return r;
}

}  // namespace lio
