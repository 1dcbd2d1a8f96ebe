#pragma once

// Adaptive Gauss-Kronrod (7/15) with a global error heap, helpers for
// breakpoints and for integrable endpoint singularities, Gauss-Legendre
// rules for tensor products.

#include <algorithm>
#include <cmath>
#include <queue>
#include <vector>

#include "lio/core.hpp"

namespace lio {

struct QuadResult {
  double value = 0.0;
  double error = 0.0;
  long evals = 0;
  bool converged = true;

  QuadResult& operator+=(const QuadResult& o) {
    value += o.value;
    error += o.error;
    evals += o.evals;
    converged = converged && o.converged;
    return *this;
  }
};

struct QuadOptions {
  double rel = 1e-10;
  double abs = 1e-15;
  int max_panels = 2000;
};

namespace detail {

inline constexpr double kXgk[8] = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
inline constexpr double kWgk[8] = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
inline constexpr double kWg[4] = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Panel {
  double a, b, value, error;
  bool operator<(const Panel& o) const { return error < o.error; }
};

template <class F>
Panel gk15(F& f, double a, double b) {
  const double c = 0.5 * (a + b), h = 0.5 * (b - a);
  const double fc = f(c);
  double k = fc * kWgk[7], g = fc * kWg[3];
  for (int j = 0; j < 7; ++j) {
    const double dx = h * kXgk[j];
    const double s = f(c - dx) + f(c + dx);
    k += kWgk[j] * s;
    if (j % 2 == 1) g += kWg[j / 2] * s;
  }
  return {a, b, k * h, std::abs((k - g) * h)};
}

}  // namespace detail

// adaptive integral of f over [a, b]; f must be finite at interior nodes
template <class F>
QuadResult integrate(F&& f, double a, double b, const QuadOptions& opt = {}) {
  QuadResult out;
  if (a == b) return out;
  double sign = 1.0;
  if (b < a) {
    std::swap(a, b);
    sign = -1.0;
  }
  std::priority_queue<detail::Panel> heap;
  auto first = detail::gk15(f, a, b);
  out.evals = 15;
  double total = first.value, err = first.error;
  heap.push(first);
  int panels = 1;
  while (err > std::max(opt.abs, opt.rel * std::abs(total))) {
    if (panels >= opt.max_panels) {
      out.converged = false;
      break;
    }
    auto top = heap.top();
    const double mid = 0.5 * (top.a + top.b);
    if (!(mid > top.a && mid < top.b) || (top.b - top.a) < 1e-15 * std::max(1.0, std::abs(mid))) {
      // cannot split further; accept what we have
      out.converged = err <= 1e-6 * std::max(1.0, std::abs(total));
      break;
    }
    heap.pop();
    auto l = detail::gk15(f, top.a, mid);
    auto r = detail::gk15(f, mid, top.b);
    out.evals += 30;
    total += l.value + r.value - top.value;
    err += l.error + r.error - top.error;
    heap.push(l);
    heap.push(r);
    ++panels;
  }
  // recompute the sums to shed accumulated cancellation
  total = 0.0;
  err = 0.0;
  while (!heap.empty()) {
    total += heap.top().value;
    err += heap.top().error;
    heap.pop();
  }
  out.value = sign * total;
  out.error = err;
  if (!std::isfinite(out.value)) out.converged = false;
  return out;
}

// integrate over consecutive intervals of an increasing breakpoint list
template <class F>
QuadResult integrate_breaks(F&& f, std::vector<double> pts, const QuadOptions& opt = {}) {
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  QuadResult out;
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) out += integrate(f, pts[i], pts[i + 1], opt);
  return out;
}

// integral over [a, b] where f may blow up (integrably) at endpoint `s`
// (s == a or s == b). Dyadic shells toward s, stopped once they stop mattering.
template <class F>
QuadResult integrate_toward(F&& f, double a, double b, double s, const QuadOptions& opt = {},
                            int max_levels = 60) {
  QuadResult out;
  if (a == b) return out;
  const double other = (s == a) ? b : a;
  const double dir = other > s ? 1.0 : -1.0;
  const double len = std::abs(other - s);
  double far = len;
  double running = 0.0;
  int quiet = 0;
  for (int k = 0; k < max_levels; ++k) {
    const double near = far * 0.5;
    auto piece = integrate(f, s + dir * near, s + dir * far, opt);
    out += piece;
    running += std::abs(piece.value);
    far = near;
    if (k >= 6 && std::abs(piece.value) <= std::max(opt.abs, opt.rel * running) * 1e-2) {
      if (++quiet >= 3) break;
    } else {
      quiet = 0;
    }
    if (k == max_levels - 1) out.converged = false;
  }
  // innermost shell; Kronrod nodes are interior so s itself is never sampled.
  // Below round-off scale the shell is dropped.
  if (far > 1e-13 * std::max(1.0, std::abs(s))) {
    auto in = integrate(f, s, s + dir * far, QuadOptions{opt.rel, opt.abs, 50});
    in.converged = std::isfinite(in.value);
    out += in;
  }
  if (dir < 0) {
    // shells were integrated from s outward with reversed limits
    out.value = -out.value;
  }
  if (a > b) out.value = -out.value;
  if (!std::isfinite(out.value)) out.converged = false;
  return out;
}

// [a, b] with a possible singular point s inside (or not)
template <class F>
QuadResult integrate_around(F&& f, double a, double b, double s, const QuadOptions& opt = {}) {
  if (s <= a) return s == a ? integrate_toward(f, a, b, a, opt) : integrate(f, a, b, opt);
  if (s >= b) return s == b ? integrate_toward(f, a, b, b, opt) : integrate(f, a, b, opt);
  QuadResult out = integrate_toward(f, a, s, s, opt);
  out += integrate_toward(f, s, b, s, opt);
  return out;
}

// n point Gauss-Legendre nodes/weights on [-1, 1]
struct GaussRule {
  std::vector<double> x, w;
};

inline GaussRule gauss_legendre(int n) {
  require(n >= 1, "Gauss-Legendre order must be positive");
  GaussRule r;
  r.x.resize(n);
  r.w.resize(n);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double z = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = 0.0;
      for (int j = 0; j < n; ++j) {
        const double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * j + 1.0) * z * p1 - j * p2) / (j + 1.0);
      }
      dp = n * (z * p0 - p1) / (z * z - 1.0);
      const double dz = p0 / dp;
      z -= dz;
      if (std::abs(dz) < 1e-16) break;
    }
    r.x[i] = -z;
    r.x[n - 1 - i] = z;
    r.w[i] = r.w[n - 1 - i] = 2.0 / ((1.0 - z * z) * dp * dp);
  }
  return r;
}

}  // namespace lio
