#pragma once

// The six commands behind the liostab front end. Each writes its artifacts
// into cfg.out and returns 0 (all checks hold) or 1 (some check failed).
// Configuration problems surface as exceptions for the caller to map to 2.

#include <filesystem>
#include <functional>
#include <iostream>
#include <string>
#include <vector>

#include "lio/acceptance.hpp"
#include "lio/config.hpp"
#include "lio/report_io.hpp"

namespace lio {

namespace fs = std::filesystem;

struct CommandResult {
  int exit_code = 0;
  std::vector<std::string> artifacts;  // relative to cfg.out
  json summary;
};

inline const std::vector<std::string>& command_names() {
  static const std::vector<std::string> n{"kernel-audit", "weight-audit",   "discretize",
                                          "stability-scan", "bootstrap-plan", "verify-all"};
  return n;
}

namespace detail {

struct Sink {
  fs::path dir;
  CommandResult* res;
  void csv(const std::string& name, const CsvTable& t) {
    write_text(dir / name, t.str());
    res->artifacts.push_back(name);
  }
  void js(const std::string& name, const json& j) {
    write_json(dir / name, j);
    res->artifacts.push_back(name);
  }
};

inline json cube_json(const Cube& q) {
  json c = json::array();
  for (int a = 0; a < q.dim(); ++a) c.push_back(q.center[a]);
  return json{{"center", c}, {"side", q.side()}};
}

inline std::vector<std::string> cube_columns(int d, std::vector<std::string> rest) {
  std::vector<std::string> c{"center_0"};
  if (d == 2) c.push_back("center_1");
  c.push_back("side");
  c.insert(c.end(), rest.begin(), rest.end());
  return c;
}

inline std::vector<CsvField> cube_fields(const Cube& q, std::vector<CsvField> rest) {
  std::vector<CsvField> f{q.center[0]};
  if (q.dim() == 2) f.push_back(q.center[1]);
  f.push_back(q.side());
  f.insert(f.end(), rest.begin(), rest.end());
  return f;
}

inline CsvTable inequality_table(const InequalityReport& rep, int d) {
  CsvTable t(rep.statement, cube_columns(d, {"n", "r", "value", "lower", "upper", "margin"}));
  for (auto& r : rep.rows)
    t.row(cube_fields(r.cube, {(long long)r.n, r.r, r.value, r.lower, r.upper, r.margin}));
  return t;
}

inline json inequality_json(const InequalityReport& rep) {
  return json{{"statement", rep.statement},
              {"rows", rep.rows.size()},
              {"violations", rep.violations},
              {"skipped", rep.skipped},
              {"worst_margin", num_json(rep.worst_margin)},
              {"measured_constant", num_json(rep.measured_constant)},
              {"note", rep.note}};
}

inline std::string pair_tag(std::size_t i, double p) { return "w" + std::to_string(i) + "_p" + fmt_num(p); }

}  // namespace detail

inline CommandResult kernel_audit(const RunConfig& cfg) {
  CommandResult res;
  detail::Sink out{cfg.out, &res};
  const Kernel k = cfg.make_kernel();
  const auto rep = kernel_condition_constants(k, cfg.alpha, cfg.delta_grid);
  CsvTable t("def:kernel-condition", {"delta", "modulus_term", "singularity_term"});
  for (std::size_t i = 0; i < rep.deltas.size(); ++i)
    t.row({rep.deltas[i], rep.modulus_terms[i], rep.singularity_terms[i]});
  out.csv("kernel_condition.csv", t);
  json j{{"statement", "def:kernel-condition"},
         {"kernel", cfg.kernel},
         {"d", cfg.d},
         {"L", cfg.L},
         {"alpha", cfg.alpha},
         {"norm_rk", num_json(rep.norm_rk)},
         {"tail_bound", num_json(rep.tail_bound)},
         {"sup_modulus_term", num_json(rep.sup_modulus_term)},
         {"sup_singularity_term", num_json(rep.sup_singularity_term)},
         {"D0", num_json(rep.D0)},
         {"holds", rep.holds},
         {"diagnostic", rep.diagnostic}};
  try {
    const auto w = wiener_amalgam_condition(k, cfg.alpha, cfg.delta_grid);
    j["wiener_amalgam"] = json{{"first_term", num_json(w.first_term)},
                               {"sup_modulus_term", num_json(w.sup_modulus_term)},
                               {"value", num_json(w.value)}};
  } catch (const InapplicableError& e) {
    j["wiener_amalgam"] = json{{"inapplicable", e.what()}};
  }
  out.js("kernel_audit.json", j);
  res.summary = j;
  res.exit_code = rep.holds ? 0 : 1;
  return res;
}

inline CommandResult weight_audit(const RunConfig& cfg) {
  CommandResult res;
  detail::Sink out{cfg.out, &res};
  json list = json::array();
  bool ok = true;
  for (std::size_t i = 0; i < cfg.weights.size(); ++i) {
    const Weight w = cfg.make_weight(i);
    const double p = cfg.p[i];
    const std::string tag = detail::pair_tag(i, p);
    const auto fam = default_cube_family(cfg.d, cfg.L, cfg.seed);
    const auto ap = ap_bound_estimate(w, p, fam, cfg.L);
    CsvTable t("def:ap-weight", detail::cube_columns(cfg.d, {"quotient"}));
    for (auto& q : fam.cubes)
      if (q.inside_box(cfg.L)) t.row(detail::cube_fields(q, {ap_quotient(w, p, q)}));
    out.csv("weight_" + tag + "_ap.csv", t);
    json j{{"weight", cfg.weights[i]},
           {"p", p},
           {"ap", json{{"value", num_json(ap.value)},
                       {"finite", ap.finite},
                       {"is_lower_bound", ap.is_lower_bound},
                       {"cube_family", ap.cube_family},
                       {"cubes", ap.cubes},
                       {"argmax", detail::cube_json(ap.argmax)},
                       {"note", ap.note}}}};
    if (!ap.finite) {
      j["note"] = "not an A_p weight on the sampled cubes; the A_p consequences are not checked";
      list.push_back(j);
      continue;
    }
    const auto dbl = doubling_check(w, p, 1.0, 3, dyadic_cubes(cfg.d, std::min(cfg.L, 2.0), 0, 4), ap.value, cfg.L, cfg.D1);
    out.csv("weight_" + tag + "_doubling.csv", detail::inequality_table(dbl, cfg.d));
    j["doubling"] = detail::inequality_json(dbl);
    ok = ok && dbl.violations == 0;
    const double delta = reverse_holder_r0(p, cfg.d) / ap.value;
    json rh = json::array();
    InequalityReport all;
    all.statement = "prop:reverse-holder";
    for (double r : {0.25, 0.5, 1.0}) {
      const auto rep = reverse_holder_check(w, p, r, delta, fam, ap.value);
      rh.push_back(detail::inequality_json(rep));
      all.rows.insert(all.rows.end(), rep.rows.begin(), rep.rows.end());
      ok = ok && rep.violations == 0;
    }
    out.csv("weight_" + tag + "_reverse_holder.csv", detail::inequality_table(all, cfg.d));
    j["reverse_holder"] = json{{"delta", delta}, {"reports", rh}};
    const auto bmo = bmo_norm_estimate(w, fam);
    const double cap = p * std::log(2.0) + 2.0 * std::log(ap.value);
    j["bmo"] = json{{"statement", "lem:bmo"},
                    {"value", num_json(bmo.value)},
                    {"bound", num_json(cap)},
                    {"margin", num_json(cap - bmo.value)},
                    {"argmax", detail::cube_json(bmo.argmax)}};
    ok = ok && bmo.value <= cap + 1e-3;
    list.push_back(j);
  }
  json s{{"statement", "def:ap-weight"}, {"weights", list}, {"all_hold", ok}};
  out.js("weight_audit.json", s);
  res.summary = s;
  res.exit_code = ok ? 0 : 1;
  return res;
}

inline CommandResult discretize(const RunConfig& cfg) {
  CommandResult res;
  detail::Sink out{cfg.out, &res};
  const Kernel k = cfg.make_kernel();
  const DyadicGrid g(cfg.d, cfg.n, cfg.L);
  const auto A = assemble_an(k, g);
  fs::create_directories(cfg.out);
  write_binary(A, (fs::path(cfg.out) / "an.bin").string());
  res.artifacts.push_back("an.bin");
  if (A.size() <= 1024) {
    std::ostringstream os;
    write_csv(A, os);
    write_text(fs::path(cfg.out) / "an.csv", os.str());
    res.artifacts.push_back("an.csv");
  }
  const auto rep = off_diagonal_check(A, radial_dominator(k));
  CsvTable t("prop:offdiagonal-decay",
             {"n", "points", "storage", "checked", "violations", "worst_margin", "near_bound", "max_far_ratio"});
  t.row({(long long)cfg.n, (long long)A.size(), std::string(to_string(A.storage)), (long long)rep.checked,
         (long long)rep.violations, rep.worst_margin, rep.near_bound, rep.max_far_ratio});
  out.csv("offdiagonal.csv", t);
  json j{{"statement", "prop:offdiagonal-decay"},
         {"kernel", cfg.kernel},
         {"n", cfg.n},
         {"points", A.size()},
         {"storage", to_string(A.storage)},
         {"checked", rep.checked},
         {"violations", rep.violations},
         {"worst_margin", num_json(rep.worst_margin)},
         {"worst_entry", json::array({rep.worst_i, rep.worst_j})},
         {"near_bound", num_json(rep.near_bound)},
         {"max_far_ratio", num_json(rep.max_far_ratio)}};
  out.js("offdiagonal.json", j);
  res.summary = j;
  res.exit_code = rep.violations == 0 ? 0 : 1;
  return res;
}

inline CommandResult stability_scan_command(const RunConfig& cfg) {
  CommandResult res;
  detail::Sink out{cfg.out, &res};
  const Kernel k = cfg.make_kernel();
  std::vector<WeightPair> pairs;
  for (std::size_t i = 0; i < cfg.weights.size(); ++i) pairs.push_back({cfg.p[i], cfg.make_weight(i)});
  ScanOptions so;
  so.theta_low = cfg.theta_low;
  so.theta_high = cfg.theta_high;
  so.solver.seed = cfg.seed;
  so.reference = k.is_convolution();
  const auto rep = spectrum_scan(k, cfg.z, pairs, cfg.n, so);
  CsvTable t("thm:stability-set", {"z_re", "z_im", "p", "weight", "s_hat", "method", "witness_norm", "class"});
  json zs = json::array();
  json in = json::array(), outs = json::array(), amb = json::array();
  bool conflict = false;
  for (std::size_t i = 0; i < rep.z.size(); ++i) {
    bool any_in = false, any_out = false;
    json row = json::array();
    for (std::size_t j = 0; j < pairs.size(); ++j) {
      const auto& e = rep.s[i][j];
      t.row({rep.z[i].real(), rep.z[i].imag(), pairs[j].p, cfg.weights[j], e.s_hat, std::string(to_string(e.method)),
             e.witness_norm, std::string(to_string(rep.cls[i][j]))});
      any_in = any_in || rep.cls[i][j] == ZClass::in;
      any_out = any_out || rep.cls[i][j] == ZClass::out;
      row.push_back(json{{"p", pairs[j].p},
                         {"weight", cfg.weights[j]},
                         {"s_hat", num_json(e.s_hat)},
                         {"method", to_string(e.method)},
                         {"converged", e.converged},
                         {"witness_hash", e.witness_hash},
                         {"class", to_string(rep.cls[i][j])}});
    }
    conflict = conflict || (any_in && any_out);
    const json z = json::array({rep.z[i].real(), rep.z[i].imag()});
    (rep.agree[i] ? (rep.cls[i].front() == ZClass::in ? in : outs) : amb).push_back(z);
    json zr{{"z", z}, {"pairs", row}, {"agree", bool(rep.agree[i])}};
    if (rep.has_reference) zr["distance_to_reference"] = num_json(rep.reference.distance(rep.z[i]));
    zs.push_back(zr);
  }
  out.csv("stability_scan.csv", t);
  json j{{"statement", "thm:stability-set"},
         {"kernel", cfg.kernel},
         {"n", cfg.n},
         {"L", cfg.L},
         {"theta_low", cfg.theta_low},
         {"theta_high", cfg.theta_high},
         {"in", in},
         {"out", outs},
         {"ambiguous_or_disagreeing", amb},
         {"all_agree", rep.all_agree},
         {"conflicting_classifications", conflict},
         {"points", zs},
         {"warnings", rep.warnings},
         {"note", "for p != 2 s_hat is the smallest quotient found by descent, an upper bound of the infimum"}};
  if (rep.has_reference) {
    json ref{{"real_valued", rep.reference.real_valued}};
    if (rep.reference.real_valued) {
      json iv = json::array();
      for (auto& [a, b] : rep.reference.intervals) iv.push_back(json::array({a, b}));
      ref["intervals"] = iv;
    } else {
      ref["max_imag"] = rep.reference.max_imag;
      ref["samples"] = rep.reference.points.size();
    }
    j["reference_spectrum"] = ref;
  }
  out.js("stability_scan.json", j);
  res.summary = j;
  res.exit_code = conflict ? 1 : 0;
  return res;
}

inline CommandResult bootstrap_plan_command(const RunConfig& cfg) {
  CommandResult res;
  detail::Sink out{cfg.out, &res};
  const Weight w = parse_weight(cfg.boot_weight, cfg.d, "bootstrap.weight");
  const Weight wt = parse_weight(cfg.boot_weight_target, cfg.d, "bootstrap.weight_target");
  const auto fam = default_cube_family(cfg.d, cfg.L, cfg.seed);
  auto ap_of = [&](const Weight& x, double p) {
    return x.kind() == WeightKind::trivial ? 1.0 : ap_bound_estimate(x, p, fam, cfg.L).value;
  };
  const double a = ap_of(w, cfg.boot_p), at = ap_of(wt, cfg.boot_p_target);
  if (!std::isfinite(at))
    throw PreconditionError("bootstrap.weight_target: not an A_p' weight by estimate (sampled A_p' is infinite)");
  const auto P = bootstrap_plan(cfg.boot_p, w.kind() == WeightKind::trivial, a, cfg.boot_p_target,
                                wt.kind() == WeightKind::trivial, at, cfg.alpha, cfg.d, cfg.D1);
  json st = json::array();
  for (auto& s : P.stages)
    st.push_back(json{{"move", to_string(s.move)},
                      {"weight", s.weight},
                      {"p_in", s.p_in},
                      {"p_out", s.p_out},
                      {"r_in", s.r_in},
                      {"r_out", s.r_out},
                      {"s", s.s},
                      {"bound", s.bound},
                      {"admissible", s.admissible}});
  json j{{"statement", P.statement},
         {"d", P.d},
         {"alpha", P.alpha},
         {"p", P.p},
         {"weight", cfg.boot_weight},
         {"ap", P.ap},
         {"p_target", P.p_target},
         {"weight_target", cfg.boot_weight_target},
         {"ap_target", P.ap_target},
         {"D1", P.D1},
         {"r0", P.r0},
         {"r0_target", P.r0_target},
         {"delta0", P.delta0},
         {"delta1", P.delta1},
         {"delta2", P.delta2},
         {"delta0_target", P.delta0_target},
         {"delta1_target", P.delta1_target},
         {"l0", P.l0},
         {"l1", P.l1},
         {"l3", P.l3},
         {"s_exponent", P.s_exponent},
         {"valid", P.valid},
         {"note", P.note},
         {"stages", st}};
  out.js("bootstrap_plan.json", j);
  res.summary = j;
  res.exit_code = P.valid ? 0 : 1;
  return res;
}

inline CommandResult verify_all(const RunConfig& cfg, std::ostream* progress = nullptr) {
  CommandResult res;
  detail::Sink out{cfg.out, &res};
  AcceptanceOptions o;
  o.seed = cfg.seed;
  if (!cfg.fixture.empty()) o.fixture = cfg.fixture;
  AcceptanceSuite suite(o);
  CsvTable t("acceptance-suite", {"criterion", "name", "statement", "pass", "value", "bound", "margin", "detail"});
  json list = json::array();
  int failed = 0;
  suite.run_all([&](const CriterionResult& r) {
    if (progress) *progress << r.line() << std::endl;
    t.row({(long long)r.id, r.name, r.statement, std::string(r.pass ? "pass" : "fail"), r.value, r.bound, r.margin,
           r.detail});
    json j = r.to_json();
    j.erase("seconds");  // artifacts stay byte identical across runs
    list.push_back(j);
    failed += r.pass ? 0 : 1;
  });
  out.csv("acceptance.csv", t);
  json s{{"statement", "acceptance-suite"}, {"criteria", list}, {"failed", failed}, {"passed", int(list.size()) - failed}};
  out.js("acceptance.json", s);
  res.summary = s;
  res.exit_code = failed ? 1 : 0;
  return res;
}

inline CommandResult run_command(const std::string& name, const RunConfig& cfg, std::ostream* progress = nullptr) {
  set_threads(cfg.threads);
  fs::create_directories(cfg.out);
  CommandResult r;
  if (name == "kernel-audit") r = kernel_audit(cfg);
  else if (name == "weight-audit") r = weight_audit(cfg);
  else if (name == "discretize") r = discretize(cfg);
  else if (name == "stability-scan") r = stability_scan_command(cfg);
  else if (name == "bootstrap-plan") r = bootstrap_plan_command(cfg);
  else if (name == "verify-all") r = verify_all(cfg, progress);
  else throw ParseError("command", "unknown command '" + name + "'");
  write_text(fs::path(cfg.out) / "config.ini", cfg.to_text());
  r.artifacts.push_back("config.ini");
  return r;
}

// {"error": kind, "field": ..., "message": ...}
inline json error_json(const std::exception& e) {
  json j{{"error", "internal"}, {"message", e.what()}};
  if (auto* le = dynamic_cast<const Error*>(&e)) j["error"] = le->kind();
  if (auto* pe = dynamic_cast<const ParseError*>(&e)) j["field"] = pe->field();
  return j;
}

// configuration problems exit with 2, failed computations with 1
inline int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const ParseError*>(&e) || dynamic_cast<const PreconditionError*>(&e) ||
      dynamic_cast<const UnsupportedError*>(&e) || dynamic_cast<const DomainError*>(&e))
    return 2;
  return 1;
}

}  // namespace lio
