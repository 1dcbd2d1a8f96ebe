#pragma once

// Run configuration: "key = value" lines under [section] headers, '#' or ';'
// comments. Parsing validates every field and names it on failure; to_text()
// writes the canonical form, which parses back to an equal config.

#include <algorithm>
#include <charconv>
#include <complex>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "lio/kernels.hpp"
#include "lio/weights.hpp"

namespace lio {

namespace cfg {

inline std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

inline std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream is(s);
  while (std::getline(is, cur, sep)) {
    cur = trim(cur);
    if (!cur.empty()) out.push_back(cur);
  }
  return out;
}

// shortest text that reads back to the same double
inline std::string exact(double v) {
  char buf[64];
  auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

inline std::string exact(std::complex<double> z) {
  if (z.imag() == 0.0) return exact(z.real());
  std::string im = exact(std::abs(z.imag())) + "i";
  if (z.real() == 0.0) return (z.imag() < 0 ? "-" : "") + im;
  return exact(z.real()) + (z.imag() < 0 ? "-" : "+") + im;
}

inline long parse_int(const std::string& field, const std::string& s) {
  long v = 0;
  auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (r.ec != std::errc() || r.ptr != s.data() + s.size())
    throw ParseError(field, "field '" + field + "': expected an integer, got '" + s + "'");
  return v;
}

inline std::uint64_t parse_u64(const std::string& field, const std::string& s) {
  std::uint64_t v = 0;
  auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (r.ec != std::errc() || r.ptr != s.data() + s.size())
    throw ParseError(field, "field '" + field + "': expected an unsigned integer, got '" + s + "'");
  return v;
}

// "a", "a+bi", "a-bi", "bi"
inline std::complex<double> parse_complex(const std::string& field, std::string s) {
  s.erase(std::remove(s.begin(), s.end(), ' '), s.end());
  if (s.empty()) throw ParseError(field, "field '" + field + "': empty number");
  if (s.back() != 'i') return {parse_number(field, s), 0.0};
  s.pop_back();
  // split at the last sign that is not an exponent sign or the leading one
  std::size_t cut = std::string::npos;
  for (std::size_t i = s.size(); i-- > 1;)
    if ((s[i] == '+' || s[i] == '-') && s[i - 1] != 'e' && s[i - 1] != 'E') {
      cut = i;
      break;
    }
  if (cut == std::string::npos) {
    if (s.empty() || s == "+" || s == "-") return {0.0, s == "-" ? -1.0 : 1.0};
    return {0.0, parse_number(field, s)};
  }
  const std::string re = s.substr(0, cut), im = s.substr(cut);
  const double b = (im == "+" ? 1.0 : im == "-" ? -1.0 : parse_number(field, im));
  return {parse_number(field, re), b};
}

}  // namespace cfg

struct RunConfig {
  // [run]
  std::uint64_t seed = 1;
  int threads = 0;
  std::string out = "lio-out";
  // [operator]
  std::string kernel = "conv-exp:scale=1";
  int d = 1;
  double L = 32.0;
  int n = 6;
  double alpha = 1.0;
  std::vector<double> delta_grid = default_delta_grid();
  // [weights]: the i-th weight is measured in L^{p_i}
  std::vector<std::string> weights{"trivial", "power:alpha=0.5", "power:alpha=-0.5", "trivial"};
  std::vector<double> p{2.0, 2.0, 1.0, 3.0};
  // [scan]
  std::vector<std::complex<double>> z{-0.5, 0.0, 0.25, 0.5, 0.75, 1.0, 1.5};
  double theta_low = 0.05;
  double theta_high = 0.2;
  // [bootstrap]
  double boot_p = 2.0;
  std::string boot_weight = "trivial";
  double boot_p_target = 1.0;
  std::string boot_weight_target = "trivial";
  double D1 = 0.125;
  // [acceptance]
  std::string fixture;  // empty: the fixture shipped with the sources

  bool operator==(const RunConfig&) const = default;

  Kernel make_kernel() const { return parse_kernel(kernel, d, L, "operator.kernel"); }
  Weight make_weight(std::size_t i) const {
    return parse_weight(weights.at(i), d, "weights.list[" + std::to_string(i) + "]");
  }

  // checks that do not need the other sections
  void validate() const {
    auto bad = [](const std::string& f, const std::string& m) { throw ParseError(f, "field '" + f + "': " + m); };
    if (threads < 0) bad("run.threads", "must be >= 0");
    if (out.empty()) bad("run.out", "must not be empty");
    if (d < 1 || d > 2) bad("operator.d", "must be 1 or 2");
    if (!(L > 0) || !std::isfinite(L)) bad("operator.L", "must be positive");
    if (n < 0 || n > 12) bad("operator.n", "must lie in [0, 12]");
    if (!(alpha > 0 && alpha <= 1)) bad("operator.alpha", "must lie in (0, 1]");
    if (delta_grid.empty()) bad("operator.delta_grid", "must not be empty");
    for (double v : delta_grid)
      if (!(v > 0 && v <= 1)) bad("operator.delta_grid", "entries must lie in (0, 1]");
    if (weights.empty()) bad("weights.list", "must not be empty");
    if (p.size() != weights.size()) bad("weights.p", "needs one exponent per weight");
    for (double v : p)
      if (!(v >= 1) || !std::isfinite(v)) bad("weights.p", "exponents must be finite and >= 1");
    if (z.empty()) bad("scan.z", "must not be empty");
    if (!(theta_low > 0 && theta_low < theta_high)) bad("scan.theta_low", "need 0 < theta_low < theta_high");
    if (!(boot_p >= 1)) bad("bootstrap.p", "must be >= 1");
    if (!(boot_p_target >= 1)) bad("bootstrap.p_target", "must be >= 1");
    if (!(D1 > 0 && D1 < 1)) bad("bootstrap.D1", "must lie in (0, 1)");
    make_kernel();
    for (std::size_t i = 0; i < weights.size(); ++i) make_weight(i);
    parse_weight(boot_weight, d, "bootstrap.weight");
    parse_weight(boot_weight_target, d, "bootstrap.weight_target");
  }

  std::string to_text() const {
    std::ostringstream os;
    auto list = [](const auto& v, const char* sep) {
      std::string s;
      for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) s += sep;
        if constexpr (std::is_same_v<std::decay_t<decltype(v[i])>, std::string>) s += v[i];
        else s += cfg::exact(v[i]);
      }
      return s;
    };
    os << "[run]\n"
       << "seed = " << seed << "\n"
       << "threads = " << threads << "\n"
       << "out = " << out << "\n\n"
       << "[operator]\n"
       << "kernel = " << kernel << "\n"
       << "d = " << d << "\n"
       << "L = " << cfg::exact(L) << "\n"
       << "n = " << n << "\n"
       << "alpha = " << cfg::exact(alpha) << "\n"
       << "delta_grid = " << list(delta_grid, ", ") << "\n\n"
       << "[weights]\n"
       << "list = " << list(weights, "; ") << "\n"
       << "p = " << list(p, ", ") << "\n\n"
       << "[scan]\n"
       << "z = " << list(z, ", ") << "\n"
       << "theta_low = " << cfg::exact(theta_low) << "\n"
       << "theta_high = " << cfg::exact(theta_high) << "\n\n"
       << "[bootstrap]\n"
       << "p = " << cfg::exact(boot_p) << "\n"
       << "weight = " << boot_weight << "\n"
       << "p_target = " << cfg::exact(boot_p_target) << "\n"
       << "weight_target = " << boot_weight_target << "\n"
       << "D1 = " << cfg::exact(D1) << "\n\n"
       << "[acceptance]\n"
       << "fixture = " << fixture << "\n";
    return os.str();
  }

  static RunConfig parse(const std::string& text) {
    RunConfig c;
    std::string section;
    std::istringstream is(text);
    std::string line;
    int lineno = 0;
    std::map<std::string, int> seen;
    while (std::getline(is, line)) {
      ++lineno;
      line = cfg::trim(line);
      if (line.empty() || line[0] == '#' || line[0] == ';') continue;
      if (line.front() == '[') {
        if (line.back() != ']') throw ParseError("config", "line " + std::to_string(lineno) + ": bad section header");
        section = cfg::trim(line.substr(1, line.size() - 2));
        continue;
      }
      const auto eq = line.find('=');
      if (eq == std::string::npos)
        throw ParseError("config", "line " + std::to_string(lineno) + ": expected 'key = value'");
      const std::string key = cfg::trim(line.substr(0, eq)), val = cfg::trim(line.substr(eq + 1));
      const std::string f = section + "." + key;
      if (seen[f]++) throw ParseError(f, "field '" + f + "' given twice");
      c.set(f, val);
    }
    c.validate();
    return c;
  }

  static RunConfig load(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ParseError("config", "cannot read config file '" + path + "'");
    std::stringstream ss;
    ss << f.rdbuf();
    return parse(ss.str());
  }

  // LIO_OUT_DIR is the only environment override
  void apply_environment() {
    if (const char* e = std::getenv("LIO_OUT_DIR"); e && *e) out = e;
  }

  void set(const std::string& f, const std::string& v) {
    auto num = [&] { return parse_number(f, v); };
    auto nums = [&] {
      std::vector<double> r;
      for (auto& t : cfg::split(v, ',')) r.push_back(parse_number(f, t));
      return r;
    };
    if (f == "run.seed") seed = cfg::parse_u64(f, v);
    else if (f == "run.threads") threads = int(cfg::parse_int(f, v));
    else if (f == "run.out") out = v;
    else if (f == "operator.kernel") kernel = v;
    else if (f == "operator.d") d = int(cfg::parse_int(f, v));
    else if (f == "operator.L") L = num();
    else if (f == "operator.n") n = int(cfg::parse_int(f, v));
    else if (f == "operator.alpha") alpha = num();
    else if (f == "operator.delta_grid") delta_grid = v == "default" ? default_delta_grid() : nums();
    else if (f == "weights.list") weights = cfg::split(v, ';');
    else if (f == "weights.p") p = nums();
    else if (f == "scan.z") {
      z.clear();
      for (auto& t : cfg::split(v, ',')) z.push_back(cfg::parse_complex(f, t));
    } else if (f == "scan.theta_low") theta_low = num();
    else if (f == "scan.theta_high") theta_high = num();
    else if (f == "bootstrap.p") boot_p = num();
    else if (f == "bootstrap.weight") boot_weight = v;
    else if (f == "bootstrap.p_target") boot_p_target = num();
    else if (f == "bootstrap.weight_target") boot_weight_target = v;
    else if (f == "bootstrap.D1") D1 = num();
    else if (f == "acceptance.fixture") fixture = v;
    else throw ParseError(f, "unknown field '" + f + "'");
  }
};

}  // namespace lio
