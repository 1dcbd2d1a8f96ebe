#pragma once

// Dyadic lattices 2^-n Z^d inside [-L, L)^d, their cells, and the Haar
// projection P_n onto piecewise constants.

#include <cmath>
#include <functional>
#include <vector>

#include "lio/core.hpp"
#include "lio/quadrature.hpp"

namespace lio {

class DyadicGrid {
 public:
  DyadicGrid() = default;
  DyadicGrid(int d, int n, double L) : d_(d), n_(n), L_(L) {
    check_dim(d);
    require(L > 0, "grid: box half width must be positive");
    h_ = std::ldexp(1.0, -n);
    k0_ = long(std::ceil(-L / h_ - 1e-9));
    const long k1 = long(std::ceil(L / h_ - 1e-9)) - 1;  // lambda < L
    m_ = k1 - k0_ + 1;
    require(m_ >= 1, "grid: box holds no lattice point");
    size_ = d == 1 ? std::size_t(m_) : std::size_t(m_) * std::size_t(m_);
  }

  int dim() const { return d_; }
  int level() const { return n_; }
  double box() const { return L_; }
  double spacing() const { return h_; }
  long per_axis() const { return m_; }
  long first_index() const { return k0_; }
  std::size_t size() const { return size_; }
  // 2^{nd}
  double scale() const { return std::pow(2.0, double(n_) * d_); }

  long axis_index(std::size_t i, int axis) const {
    if (d_ == 1) return long(i);
    return axis == 0 ? long(i / m_) : long(i % m_);
  }
  std::size_t linear(long i0, long i1 = 0) const {
    return d_ == 1 ? std::size_t(i0) : std::size_t(i0) * m_ + std::size_t(i1);
  }
  // integer lattice coordinate k with lambda = k h
  long lattice(std::size_t i, int axis) const { return k0_ + axis_index(i, axis); }

  Point point(std::size_t i) const {
    Point p = Point::zero(d_);
    for (int a = 0; a < d_; ++a) p[a] = double(lattice(i, a)) * h_;
    return p;
  }
  Cube cell(std::size_t i) const { return Cube(point(i), 0.5 * h_); }
  double cell_volume() const { return std::pow(h_, d_); }

  // index of the cell containing x, or -1 outside
  long locate(const Point& x) const {
    long idx[2] = {0, 0};
    for (int a = 0; a < d_; ++a) {
      const long k = long(std::floor(x[a] / h_ + 0.5));
      const long i = k - k0_;
      if (i < 0 || i >= m_) return -1;
      idx[a] = i;
    }
    return long(linear(idx[0], idx[1]));
  }

  bool same_shape(const DyadicGrid& o) const { return d_ == o.d_ && n_ == o.n_ && L_ == o.L_; }

 private:
  int d_ = 1, n_ = 0;
  double L_ = 1.0, h_ = 1.0;
  long k0_ = 0, m_ = 0;
  std::size_t size_ = 0;
};

// integral of f over a cube; breakpoints at 0 on every axis so that weights
// and profiles with a kink or blow up at the origin stay accurate
inline QuadResult integrate_cube(const std::function<double(const Point&)>& f, const Cube& q,
                                 const QuadOptions& opt = {1e-12, 1e-300, 400}) {
  const int d = q.dim();
  auto breaks = [&](int axis) {
    std::vector<double> b{q.lo(axis), q.hi(axis)};
    if (q.lo(axis) < 0 && q.hi(axis) > 0) b.insert(b.begin() + 1, 0.0);
    return b;
  };
  auto line = [&](auto&& g, int axis) {
    auto b = breaks(axis);
    QuadResult acc;
    for (std::size_t i = 0; i + 1 < b.size(); ++i) {
      if (b[i] == 0.0) acc += integrate_toward(g, b[i], b[i + 1], 0.0, opt);
      else if (b[i + 1] == 0.0) acc += integrate_toward(g, b[i], b[i + 1], 0.0, opt);
      else acc += integrate(g, b[i], b[i + 1], opt);
    }
    return acc;
  };
  if (d == 1) return line([&](double x) { return f(Point(x)); }, 0);
  QuadResult inner_total;
  auto outer = [&](double x0) {
    auto r = line([&](double x1) { return f(Point(x0, x1)); }, 1);
    inner_total.converged = inner_total.converged && r.converged;
    inner_total.evals += r.evals;
    return r.value;
  };
  QuadResult out = line(outer, 0);
  out.converged = out.converged && inner_total.converged;
  out.evals += inner_total.evals;
  return out;
}

struct Projection {
  DyadicGrid grid;
  std::vector<double> coeffs;    // <f, phi_{n, 2^n lambda}>
  std::vector<double> averages;  // cell averages, the values of P_n f

  double operator()(const Point& x) const {
    const long i = grid.locate(x);
    return i < 0 ? 0.0 : averages[std::size_t(i)];
  }
};

// Haar projection P_n f. phi_{n,k} = 2^{nd/2} chi_cell, so the coefficient
// is 2^{nd/2} times the cell integral and P_n f is the cell average
inline Projection project(const std::function<double(const Point&)>& f, const DyadicGrid& grid) {
  Projection pr;
  pr.grid = grid;
  pr.coeffs.resize(grid.size());
  pr.averages.resize(grid.size());
  const double norm = std::sqrt(grid.scale());
  const double vol = grid.cell_volume();
  parallel_for(grid.size(), [&](std::size_t i) {
    const auto r = integrate_cube(f, grid.cell(i));
    if (!r.converged) throw QuadratureError("project: cell quadrature did not converge", r.error);
    pr.coeffs[i] = norm * r.value;
    pr.averages[i] = r.value / vol;
  });
  return pr;
}

}  // namespace lio
