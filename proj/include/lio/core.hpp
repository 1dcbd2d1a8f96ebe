#pragma once

// Points, cubes, errors, seeded randomness and a small thread pool helper.
// Everything here is dimension-generic for d in {1, 2}.

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace lio {

inline constexpr int kMaxDim = 2;
inline constexpr double kInf = std::numeric_limits<double>::infinity();

// ---- errors -------------------------------------------------------------

class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& what)
      : std::runtime_error(what), kind_(std::move(kind)) {}
  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

struct DomainError : Error {
  explicit DomainError(const std::string& w) : Error("domain", w) {}
};
struct PreconditionError : Error {
  explicit PreconditionError(const std::string& w) : Error("precondition", w) {}
};
struct QuadratureError : Error {
  QuadratureError(const std::string& w, double achieved)
      : Error("quadrature", w), achieved_(achieved) {}
  double achieved() const noexcept { return achieved_; }

 private:
  double achieved_;
};
struct SamplingError : Error {
  explicit SamplingError(const std::string& w) : Error("sampling", w) {}
};
struct ParseError : Error {
  ParseError(std::string field, const std::string& w)
      : Error("parse", w), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};
struct UnsupportedError : Error {
  explicit UnsupportedError(const std::string& w) : Error("unsupported", w) {}
};
// the Wiener amalgam condition on a kernel that cannot satisfy it
struct InapplicableError : Error {
  explicit InapplicableError(const std::string& w) : Error("inapplicable", w) {}
};

inline void require(bool ok, const std::string& msg) {
  if (!ok) throw PreconditionError(msg);
}

inline void check_dim(int d) {
  if (d < 1 || d > kMaxDim)
    throw UnsupportedError("dimension " + std::to_string(d) + " not supported (d must be 1 or 2)");
}

// ---- geometry -----------------------------------------------------------

struct Point {
  std::array<double, kMaxDim> x{};
  int d = 1;

  Point() = default;
  explicit Point(double a) : x{a, 0.0}, d(1) {}
  Point(double a, double b) : x{a, b}, d(2) {}
  static Point zero(int dim) {
    Point p;
    p.d = dim;
    return p;
  }

  double& operator[](int i) { return x[i]; }
  double operator[](int i) const { return x[i]; }

  // |x| is the max norm throughout
  double norm() const {
    double m = 0.0;
    for (int i = 0; i < d; ++i) m = std::max(m, std::abs(x[i]));
    return m;
  }
  double euclid() const {
    double s = 0.0;
    for (int i = 0; i < d; ++i) s += x[i] * x[i];
    return std::sqrt(s);
  }
  Point operator+(const Point& o) const {
    Point r = *this;
    for (int i = 0; i < d; ++i) r.x[i] += o.x[i];
    return r;
  }
  Point operator-(const Point& o) const {
    Point r = *this;
    for (int i = 0; i < d; ++i) r.x[i] -= o.x[i];
    return r;
  }
  Point operator-() const {
    Point r = *this;
    for (int i = 0; i < d; ++i) r.x[i] = -r.x[i];
    return r;
  }
  Point operator*(double s) const {
    Point r = *this;
    for (int i = 0; i < d; ++i) r.x[i] *= s;
    return r;
  }
  bool operator==(const Point& o) const {
    if (d != o.d) return false;
    for (int i = 0; i < d; ++i)
      if (x[i] != o.x[i]) return false;
    return true;
  }
};

// axis parallel cube: center c, half side r, i.e. c + [-r, r]^d
struct Cube {
  Point center;
  double half = 0.5;

  Cube() = default;
  Cube(Point c, double r) : center(c), half(r) {}

  int dim() const { return center.d; }
  double lo(int i) const { return center[i] - half; }
  double hi(int i) const { return center[i] + half; }
  double side() const { return 2.0 * half; }
  double volume() const { return std::pow(2.0 * half, center.d); }
  Cube scaled(double k) const { return Cube(center, half * k); }
  bool inside_box(double L, double slack = 1e-12) const {
    for (int i = 0; i < center.d; ++i)
      if (lo(i) < -L - slack || hi(i) > L + slack) return false;
    return true;
  }
  bool contains(const Point& p) const {
    for (int i = 0; i < center.d; ++i)
      if (p[i] < lo(i) || p[i] > hi(i)) return false;
    return true;
  }
};

inline bool in_box(const Point& p, double L, double slack = 1e-12) {
  for (int i = 0; i < p.d; ++i)
    if (std::abs(p[i]) > L + slack) return false;
  return true;
}

// volume of the max-norm ball of radius r in R^d, and its radial density
inline double ball_volume(int d, double r) { return std::pow(2.0 * r, d); }
inline double sphere_density(int d, double r) {
  return 2.0 * d * std::pow(2.0 * r, d - 1);
}

// ---- randomness ---------------------------------------------------------

// seeded generator with platform independent uniform/normal draws
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0x5eed) { reseed(seed); }
  void reseed(std::uint64_t seed) {
    std::uint64_t z = seed;
    for (auto& s : s_) s = splitmix(z);
  }
  std::uint64_t next() {
    const std::uint64_t r = rotl(s_[1] * 5, 7) * 9;
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return r;
  }
  double uniform() { return double(next() >> 11) * 0x1.0p-53; }
  double uniform(double a, double b) { return a + (b - a) * uniform(); }
  // integer in [0, n)
  std::uint64_t below(std::uint64_t n) { return n ? next() % n : 0; }
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double rad = std::sqrt(-2.0 * std::log(u1));
    spare_ = rad * std::sin(2.0 * std::numbers::pi * u2);
    has_spare_ = true;
    return rad * std::cos(2.0 * std::numbers::pi * u2);
  }
  // independent child stream, used to keep parallel work deterministic
  Rng split(std::uint64_t salt) {
    return Rng(next() ^ (salt * 0x9e3779b97f4a7c15ULL));
  }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
  static std::uint64_t splitmix(std::uint64_t& z) {
    z += 0x9e3779b97f4a7c15ULL;
    std::uint64_t r = z;
    r = (r ^ (r >> 30)) * 0xbf58476d1ce4e5b9ULL;
    r = (r ^ (r >> 27)) * 0x94d049bb133111ebULL;
    return r ^ (r >> 31);
  }
  std::uint64_t s_[4]{};
  bool has_spare_ = false;
  double spare_ = 0.0;
};

// ---- threads ------------------------------------------------------------

inline int& thread_budget() {
  static int n = 1;
  return n;
}
inline void set_threads(int k) {
  if (k <= 0) k = int(std::max(1u, std::thread::hardware_concurrency()));
  thread_budget() = k;
}

// runs fn(i) for i in [0, count); results must be written to slot i so the
// outcome does not depend on the schedule
template <class F>
void parallel_for(std::size_t count, F&& fn, int threads = 0) {
  if (threads <= 0) threads = thread_budget();
  if (threads <= 1 || count < 2) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errs(threads);
  std::vector<std::thread> pool;
  const int used = int(std::min<std::size_t>(threads, count));
  for (int t = 0; t < used; ++t) {
    pool.emplace_back([&, t] {
      try {
        for (std::size_t i = next++; i < count; i = next++) fn(i);
      } catch (...) {
        errs[t] = std::current_exception();
        next = count;
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& e : errs)
    if (e) std::rethrow_exception(e);
}

// ---- misc ---------------------------------------------------------------

inline std::uint64_t fnv1a(const void* data, std::size_t bytes,
                           std::uint64_t h = 0xcbf29ce484222325ULL) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < bytes; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::vector<double> geometric_grid(double a, double b, int count) {
  require(a > 0 && b > a && count >= 2, "geometric grid needs 0 < a < b and count >= 2");
  std::vector<double> g(count);
  const double q = std::log(b / a) / (count - 1);
  for (int i = 0; i < count; ++i) g[i] = a * std::exp(q * i);
  g.back() = b;
  return g;
}

inline std::vector<double> linspace(double a, double b, int count) {
  std::vector<double> g(count);
  for (int i = 0; i < count; ++i) g[i] = count == 1 ? a : a + (b - a) * i / (count - 1);
  return g;
}

// default delta grid for sup over delta: 2^0 .. 2^-14
inline std::vector<double> default_delta_grid() {
  std::vector<double> g;
  for (int j = 14; j >= 0; --j) g.push_back(std::ldexp(1.0, -j));
  return g;
}

}  // namespace lio
