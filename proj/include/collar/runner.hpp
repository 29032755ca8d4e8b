#pragma once

// Scenario runner: stages in dependency order, one CheckResult per check.
// A stage with a failing check turns every later selected stage into skips.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "collar/catalog.hpp"
#include "collar/genphase.hpp"
#include "collar/jet.hpp"
#include "collar/opsymb.hpp"
#include "collar/oscint.hpp"
#include "collar/report.hpp"
#include "collar/scenario.hpp"
#include "collar/sgphase.hpp"
#include "collar/symplecto.hpp"

namespace collar {

struct GridPreset {
  std::string name;
  int samples = 200;  // collar samples for the map and phase checks
  int fd_points = 100;
  UniformityOptions uniformity;
  ConjugationGrid conjugation;
  std::vector<double> apply_x = linspace(-3.0, 3.0, 61);
  std::vector<double> l2_x = linspace(-6.0, 6.0, 601);
  std::vector<double> truncated_x = linspace(0.25, 3.0, 12);
};

inline std::vector<std::string> grid_preset_names() { return {"default", "quick"}; }

inline GridPreset grid_preset(const std::string& name) {
  GridPreset g;
  g.name = name;
  if (name == "default") return g;
  if (name == "quick") {
    g.samples = 50;
    g.fd_points = 25;
    g.uniformity.u = linspace(-1.0, 1.0, 3);
    g.uniformity.rungs = dyadic_ladder(6);
    g.uniformity.grid = {sg_ladder(0.25, 50.0, 10), sg_ladder(0.25, 50.0, 10)};
    g.uniformity.layer_nodes = 8;
    g.conjugation.brackets = dyadic_ladder(6);
    g.conjugation.t = linspace(-8.0, 8.0, 81);
    g.apply_x = linspace(-3.0, 3.0, 25);
    g.l2_x = linspace(-6.0, 6.0, 301);
    return g;
  }
  throw Error(ErrorKind::ValidationError, "unknown grid preset '" + name + "'");
}

inline std::vector<std::string> margin_preset_names() { return {"default", "strict", "loose"}; }

// "default" keeps the scenario's own margins.
inline Margins margin_preset(const std::string& name, const Margins& base) {
  if (name == "default") return base;
  Margins m;
  if (name == "strict") {
    m.c_min = 5e-2;
    m.eps_min = 5e-2;
    m.C_max = 1e3;
    m.nondeg_delta = 1e-2;
    m.uniformity = 2.5;
    return m;
  }
  if (name == "loose") {
    m.c_min = 1e-3;
    m.eps_min = 1e-3;
    m.C_max = 1e6;
    m.nondeg_delta = 1e-4;
    m.uniformity = 5.0;
    return m;
  }
  throw Error(ErrorKind::ValidationError, "unknown margin preset '" + name + "'");
}

inline std::string grid_fingerprint(const GridPreset& g) {
  std::ostringstream o;
  auto put = [&](const char* key, const std::vector<double>& v) {
    o << key << ":";
    for (double x : v) o << " " << num(x);
    o << "\n";
  };
  o << "preset " << g.name << "\nsamples " << g.samples << "\nfd_points " << g.fd_points << "\n";
  put("uniformity.u", g.uniformity.u);
  put("uniformity.rungs", g.uniformity.rungs);
  put("sg.t", g.uniformity.grid.t);
  put("sg.tau", g.uniformity.grid.tau);
  o << "layer_nodes " << g.uniformity.layer_nodes << "\n";
  put("conj.brackets", g.conjugation.brackets);
  put("conj.t", g.conjugation.t);
  o << "conj.panel " << num(g.conjugation.panel) << "\n";
  const GridSpec bs = default_bs_grid();
  put("bs.x_tangential", bs.x_tangential);
  put("bs.x_normal", bs.x_normal);
  put("bs.brackets", bs.brackets);
  put("bs.normal_brackets", bs.normal_brackets);
  o << "bs.directions " << bs.directions << "\n";
  put("apply_x", g.apply_x);
  put("l2_x", g.l2_x);
  put("truncated_x", g.truncated_x);
  return o.str();
}

inline std::string grid_hash(const GridPreset& g) { return sha256_hex(grid_fingerprint(g)); }

inline const std::vector<std::string>& stage_checks(const std::string& stage) {
  static const std::map<std::string, std::vector<std::string>> m{
      {"symplecto",
       {"check_symplectic", "check_boundary_preserving", "induced_boundary_map", "check_jacobian_structure",
        "map_homogeneity"}},
      {"genphase",
       {"boundary_phase", "check_generating", "check_nondegeneracy", "check_admissibility", "normal_coeffs",
        "phase_invariants", "fd_crosscheck"}},
      {"sgphase", {"calibrate", "verify_P1", "verify_P2", "verify_P3", "check_uniformity"}},
      {"oscint", {"apply_normal_op", "halving_consistency", "l2_bound", "apply_truncated_op", "decay_exponent"}},
      {"opsymb", {"group_action", "seminorms", "symbol_order", "tilde_amplitude", "transpose_check"}},
  };
  auto it = m.find(stage);
  if (it == m.end()) throw Error(ErrorKind::ValidationError, "unknown stage '" + stage + "'");
  return it->second;
}

struct RunOptions {
  std::vector<std::string> stages;  // empty: the scenario's own check list
  std::string grid;                 // empty: the scenario's preset
  std::string margin = "default";
  std::optional<std::uint64_t> seed;
};

namespace detail {

inline std::string point_text(const std::vector<double>& p) {
  std::string s = "(";
  for (std::size_t i = 0; i < p.size(); ++i) s += (i ? ", " : "") + num(p[i]);
  return s + ")";
}

inline std::string index_text(const MultiIndex& m) {
  std::string s;
  for (int v : m) s += std::to_string(v);
  return s.empty() ? "-" : s;
}

// Largest |symbolic - central difference| / max(1, |symbolic|) over first and
// second partials of e in the phase-space variables.
inline double fd_sweep(const Expr& e, const VarLayout& lay, const std::vector<Point>& pts, int& evaluations) {
  std::vector<int> vars;
  for (int i = 0; i < lay.dim(); ++i) {
    vars.push_back(lay.x(i));
    vars.push_back(lay.k(i));
  }
  double worst = 0.0;
  const double h = 1e-5;
  auto sweep = [&](const Expr& f) {
    Tape tf(f);
    for (int v : vars) {
      Tape tdf(differentiate(f, v));
      for (Point q : pts) {
        q.resize(std::max<std::size_t>(q.size(), tf.arity()), 0.0);
        const double sym = tdf.eval1(q);
        const double x0 = q[v];
        q[v] = x0 + h;
        const double fp = tf.eval1(q);
        q[v] = x0 - h;
        const double fm = tf.eval1(q);
        worst = std::max(worst, std::fabs(sym - (fp - fm) / (2 * h)) / std::max(1.0, std::fabs(sym)));
        ++evaluations;
      }
    }
  };
  sweep(e);
  for (int v : vars) sweep(differentiate(e, v));
  return worst;
}

class Runner {
 public:
  Runner(const Scenario& s, const RunOptions& opt) : s_(s) {
    validate(s_);
    preset_ = grid_preset(opt.grid.empty() ? s_.grid : opt.grid);
    margin_name_ = opt.margin;
    margins_ = margin_preset(opt.margin, s_.margins);
    seed_ = opt.seed ? *opt.seed : s_.seed;
    stages_ = opt.stages.empty() ? s_.checks : opt.stages;
    for (const auto& st : stages_) stage_checks(st);
    std::vector<std::string> ordered;
    for (const auto& st : stage_names())
      if (std::find(stages_.begin(), stages_.end(), st) != stages_.end()) ordered.push_back(st);
    stages_ = ordered;
  }

  RunReport run() {
    RunReport r;
    r.scenario = s_.name;
    r.seed = seed_;
    r.grid = preset_.name;
    r.margin = margin_name_;
    r.stages = stages_;
    r.conventions = conventions_stamp();
    r.environment = environment_stamp();
    r.grid_hash = grid_hash(preset_);
    std::string blocked;
    for (const auto& st : stages_) {
      if (!blocked.empty()) {
        for (const auto& c : stage_checks(st)) skip(c, st, "stage " + blocked + " failed");
        continue;
      }
      const std::size_t first = results_.size();
      if (st == "symplecto") symplecto();
      if (st == "genphase") genphase();
      if (st == "sgphase") sgphase();
      if (st == "oscint") oscint();
      if (st == "opsymb") opsymb();
      for (std::size_t i = first; i < results_.size(); ++i)
        if (results_[i].status == CheckStatus::Fail) blocked = st;
    }
    r.checks = results_;
    r.hash = report_hash(r);
    return r;
  }

 private:
  // Runs one check; mathematical errors become a failure, infrastructure
  // errors propagate.
  void attempt(const std::string& name, const std::string& stage, const std::function<void(CheckResult&)>& body) {
    CheckResult c;
    c.name = name;
    c.stage = stage;
    try {
      body(c);
    } catch (const Error& e) {
      if (e.infrastructure()) throw;
      c.status = CheckStatus::Fail;
      c.message = e.what();
    }
    results_.push_back(std::move(c));
  }

  void skip(const std::string& name, const std::string& stage, const std::string& why) {
    CheckResult c;
    c.name = name;
    c.stage = stage;
    c.status = CheckStatus::Skipped;
    c.message = why;
    results_.push_back(std::move(c));
  }

  const CheckResult* find(const std::string& name) const {
    for (const auto& c : results_)
      if (c.name == name) return &c;
    return nullptr;
  }
  bool passed(const std::string& name) const {
    const auto* c = find(name);
    return c && c->status == CheckStatus::Pass;
  }

  static void verdict(CheckResult& c, bool ok, const std::string& why) {
    c.status = ok ? CheckStatus::Pass : CheckStatus::Fail;
    if (!ok) c.message = why;
  }

  const VarLayout& lay() const { return lay_; }

  std::vector<Point> samples(std::uint64_t salt, bool boundary = false) const {
    return collar_samples(lay_, s_.collar, preset_.samples, seed_ * 1000 + salt, boundary);
  }

  void symplecto() {
    const std::string st = "symplecto";
    if (!s_.map) {
      for (const auto& c : stage_checks(st)) skip(c, st, "scenario has no map");
      return;
    }
    const SymplectoMap chi = build_map(s_, *s_.map);
    const auto pts = samples(1), bs = samples(2, true);
    attempt("check_symplectic", st, [&](CheckResult& c) {
      auto r = check_symplectic(chi, pts);
      c.metrics = {{"residual", r.residual}, {"det_defect", r.det_defect}, {"tol", r.tol}};
      verdict(c, r.pass, "J^T Omega J - Omega = " + num(r.residual) + " at " + point_text(r.worst_point));
    });
    attempt("check_boundary_preserving", st, [&](CheckResult& c) {
      auto r = check_boundary_preserving(chi, bs);
      c.metrics = {{"sup", r.sup}, {"tol", 1e-12}};
      verdict(c, r.pass, "x_n = " + num(r.sup) + " on the boundary at " + point_text(r.worst_point));
    });
    if (!passed("check_boundary_preserving")) {
      skip("induced_boundary_map", st, "map is not boundary preserving");
    } else {
      attempt("induced_boundary_map", st, [&](CheckResult& c) {
        auto b = induced_boundary_map(chi, bs);
        c.metrics = {{"eta_n_residual", b.eta_n_residual},
                     {"eta_prime_residual", b.eta_prime_residual},
                     {"linearity_residual", b.linearity_residual},
                     {"det_defect", b.det_defect}};
        verdict(c, b.det_defect <= 1e-8, "boundary map det defect " + num(b.det_defect));
      });
    }
    if (!passed("check_symplectic") || !passed("check_boundary_preserving")) {
      skip("check_jacobian_structure", st, "needs a symplectic, boundary preserving map");
    } else {
      attempt("check_jacobian_structure", st, [&](CheckResult& c) {
        auto r = check_jacobian_structure(chi, bs, pts);
        c.metrics = {{"zero_block_max", r.zero_block_max},
                     {"det_boundary_defect", r.det_boundary_defect},
                     {"product_defect", r.product_defect},
                     {"min_normal_derivative", r.min_normal_derivative}};
        verdict(c, r.pass, "structure violated at " + point_text(r.worst_point));
      });
    }
    attempt("map_homogeneity", st, [&](CheckResult& c) {
      const double d = map_homogeneity_defect(chi, pts);
      c.metrics = {{"defect", d}, {"tol", 1e-12}};
      verdict(c, d <= 1e-12, "homogeneity defect " + num(d));
    });
  }

  void genphase() {
    const std::string st = "genphase";
    const GeneratingPhase g = build_phase(s_);
    const auto pts = samples(3);
    attempt("boundary_phase", st, [&](CheckResult& c) {
      auto r = boundary_phase(g);
      c.metrics = {{"xi_n_residual", r.xi_n_residual},
                   {"linearity_residual", r.linearity_residual},
                   {"phi_residual", r.phi_residual}};
      verdict(c, r.pass, "boundary phase residual at " + point_text(r.worst_point));
    });
    const CheckResult* sym = find("check_symplectic");
    if (!s_.map) {
      skip("check_generating", st, "scenario has no map");
    } else if (sym && std::any_of(results_.begin(), results_.end(), [](const CheckResult& c) {
                 return c.stage == "symplecto" && c.status != CheckStatus::Pass;
               })) {
      skip("check_generating", st, "map checks did not all pass");
    } else {
      attempt("check_generating", st, [&](CheckResult& c) {
        auto r = check_generating(g, build_map(s_, *s_.map), pts, 1e-9);
        c.metrics = {{"residual", r.residual}, {"tol", r.tol}};
        verdict(c, r.pass, "graph residual " + num(r.residual) + " at " + point_text(r.worst_point));
      });
    }
    attempt("check_nondegeneracy", st, [&](CheckResult& c) {
      auto r = check_nondegeneracy(g, margins_.nondeg_delta);
      c.metrics = {{"min_abs", r.min_abs}, {"max_abs", r.max_abs}, {"sign", static_cast<double>(r.sign)}, {"delta", r.delta}};
      nondeg_min_ = r.min_abs;
      verdict(c, r.pass, "min |d_xn d_xin psi| = " + num(r.min_abs) + " at " + point_text(r.worst_point));
    });
    attempt("check_admissibility", st, [&](CheckResult& c) {
      auto r = check_admissibility(g);
      c.metrics = {{"residual", r.residual}};
      Table t{"components", {"component", "degree", "residual", "combos", "pass"}, {}};
      for (const auto& comp : r.components)
        t.rows.push_back({comp.name, num(comp.degree), num(comp.transmission.residual),
                          std::to_string(comp.transmission.combos), comp.transmission.pass ? "1" : "0"});
      c.tables.push_back(t);
      verdict(c, r.pass, "transmission residual " + num(r.residual) + " in " + r.worst);
    });
    if (!passed("check_admissibility")) {
      skip("normal_coeffs", st, "phase is not admissible");
    } else {
      attempt("normal_coeffs", st, [&](CheckResult& c) {
        auto r = normal_coeffs(g);
        c.metrics = {{"sum_residual", r.sum_residual},
                     {"euler_residual", r.euler_residual},
                     {"kappa", r.kappa},
                     {"degenerate", r.degenerate ? 1.0 : 0.0}};
        verdict(c, r.pass, "q+ + q- residual " + num(r.sum_residual) + " at " + point_text(r.worst_x));
        if (r.degenerate) c.message = "q+ and q- both vanish within tolerance";
      });
    }
    attempt("phase_invariants", st, [&](CheckResult& c) {
      auto r = phase_invariants(g, pts);
      c.metrics = {{"euler_residual", r.euler_residual}, {"normal_vanishing", r.normal_vanishing}};
      verdict(c, r.pass, "phase invariants violated");
    });
    attempt("fd_crosscheck", st, [&](CheckResult& c) {
      std::vector<std::pair<std::string, Expr>> exprs{{"psi", g.psi}};
      auto add_map = [&](const char* tag, const MapSpec& m) {
        for (std::size_t i = 0; i < m.x.size(); ++i)
          exprs.emplace_back(std::string(tag) + ".x" + std::to_string(i + 1), parse(m.x[i], lay_));
        for (std::size_t i = 0; i < m.xi.size(); ++i)
          exprs.emplace_back(std::string(tag) + ".xi" + std::to_string(i + 1), parse(m.xi[i], lay_));
      };
      if (s_.map) add_map("map", *s_.map);
      if (s_.inverse) add_map("inverse", *s_.inverse);
      exprs.emplace_back("a.re", parse(s_.amplitude.re, lay_));
      exprs.emplace_back("a.im", parse(s_.amplitude.im, lay_));
      auto fd_pts = collar_samples(lay_, s_.collar, preset_.fd_points, seed_ * 1000 + 4);
      Table t{"expressions", {"expression", "worst", "evaluations"}, {}};
      double worst = 0.0;
      int total = 0;
      std::string at;
      for (const auto& [name, e] : exprs) {
        int ev = 0;
        const double w = fd_sweep(e, lay_, fd_pts, ev);
        t.rows.push_back({name, num(w), std::to_string(ev)});
        total += ev;
        if (w > worst || at.empty()) at = name;
        worst = std::max(worst, w);
      }
      c.tables.push_back(t);
      c.metrics = {{"worst", worst}, {"tol", 1e-6}, {"expressions", static_cast<double>(exprs.size())},
                   {"evaluations", static_cast<double>(total)}};
      verdict(c, worst <= 1e-6, "finite differences disagree in " + at);
    });
  }

  void sgphase() {
    const std::string st = "sgphase";
    const GeneratingPhase g = build_phase(s_);
    UniformityOptions opt = preset_.uniformity;
    opt.margins = margins_;
    std::optional<Calibration> cal;
    attempt("calibrate", st, [&](CheckResult& c) {
      cal = calibrate(g, opt);
      c.metrics = {{"k", cal->k}, {"K", cal->K}, {"trials", static_cast<double>(cal->trials.size())},
                   {"worst_ratio", cal->certificate.worst_ratio}};
      Table t{"trials", {"k", "K", "all_pass", "uniform", "worst_ratio"}, {}};
      for (const auto& tr : cal->trials)
        t.rows.push_back({num(tr.k), num(tr.K), tr.all_pass ? "1" : "0", tr.uniform ? "1" : "0", num(tr.worst_ratio)});
      c.tables.push_back(t);
      const bool budget = cal->K <= 16.0 && cal->k >= s_.collar / 32.0;
      verdict(c, budget, "calibrated outside the search budget");
    });
    if (!cal || !passed("calibrate")) {
      for (const char* n : {"verify_P1", "verify_P2", "verify_P3", "check_uniformity"}) skip(n, st, "calibration failed");
      return;
    }
    const auto& cert = cal->certificate;
    attempt("verify_P1", st, [&](CheckResult& c) {
      const int A = 3;
      Table t{"constants", {"a", "alpha", "C", "x_prime", "bracket", "t", "tau"}, {}};
      double top = 0.0;
      bool ok = true;
      for (int a = 0; a <= A; ++a)
        for (int al = 0; al <= A; ++al) {
          double best = -1.0;
          const UniformitySample* at = nullptr;
          for (const auto& smp : cert.samples) {
            const double v = smp.constants.c(a, al);
            if (v > best) {
              best = v;
              at = &smp;
            }
          }
          const auto w = at->constants.C_worst[a * (A + 1) + al];
          t.rows.push_back({std::to_string(a), std::to_string(al), num(best), point_text(at->x_prime), num(at->bracket),
                            num(w[0]), num(w[1])});
          top = std::max(top, best);
        }
      for (const auto& smp : cert.samples) ok = ok && smp.constants.p1;
      c.tables.push_back(t);
      c.metrics = {{"C_max_observed", top}, {"C_max", margins_.C_max}};
      verdict(c, ok, "P1 bound exceeded");
    });
    attempt("verify_P2", st, [&](CheckResult& c) {
      double ct = INFINITY, Ct = 0, ctau = INFINITY, Ctau = 0;
      bool ok = true;
      for (const auto& smp : cert.samples) {
        ct = std::min(ct, smp.constants.c_t);
        Ct = std::max(Ct, smp.constants.C_t);
        ctau = std::min(ctau, smp.constants.c_tau);
        Ctau = std::max(Ctau, smp.constants.C_tau);
        ok = ok && smp.constants.p2;
      }
      c.metrics = {{"c_t", ct}, {"C_t", Ct}, {"c_tau", ctau}, {"C_tau", Ctau}, {"c_min", margins_.c_min}};
      verdict(c, ok, "P2 bounds violated");
    });
    attempt("verify_P3", st, [&](CheckResult& c) {
      double eps = INFINITY;
      int flips = 0;
      bool ok = true;
      for (const auto& smp : cert.samples) {
        eps = std::min(eps, smp.constants.eps);
        flips += smp.constants.sign_change ? 1 : 0;
        ok = ok && smp.constants.p3;
      }
      c.metrics = {{"eps", eps}, {"sign_changes", static_cast<double>(flips)}, {"eps_min", margins_.eps_min}};
      verdict(c, ok, "P3 violated");
    });
    attempt("check_uniformity", st, [&](CheckResult& c) {
      Table t{"spread", {"constant", "min", "max", "ratio", "structural"}, {}};
      for (std::size_t i = 0; i < cert.names.size(); ++i)
        t.rows.push_back({cert.names[i], num(cert.min[i]), num(cert.max[i]), num(cert.ratio[i]),
                          cert.structural[i] ? "1" : "0"});
      c.tables.push_back(t);
      c.metrics = {{"worst_ratio", cert.worst_ratio},
                   {"limit", cert.limit},
                   {"table_worst_ratio", cert.table_worst_ratio},
                   {"samples", static_cast<double>(cert.samples.size())}};
      verdict(c, cert.pass, "ratio of " + cert.worst_constant + " is " + num(cert.worst_ratio));
    });
  }

  std::vector<SchwartzFn> whole_line_functions() const {
    std::vector<SchwartzFn> us;
    for (const auto& name : s_.test_functions) {
      auto u = test_function(name);
      if (!u.half_line()) us.push_back(std::move(u));
    }
    return us;
  }

  void oscint() {
    const std::string st = "oscint";
    const NormalOperatorSpec sp = normal_spec(s_);
    const auto us = whole_line_functions();
    attempt("apply_normal_op", st, [&](CheckResult& c) {
      Table t{"values", {"u", "x_n", "re", "im", "err_est"}, {}};
      double worst = 0.0;
      for (const auto& u : us) {
        auto r = apply_normal_op(sp, u, preset_.apply_x);
        for (std::size_t i = 0; i < r.x.size(); ++i)
          t.rows.push_back({u.name(), num(r.x[i]), num(r.value[i].real()), num(r.value[i].imag()), num(r.error[i])});
        c.metrics.emplace_back("max_error_" + u.name(), r.max_error());
        worst = std::max(worst, r.max_error());
      }
      c.tables.push_back(t);
      c.metrics.emplace_back("budget", sp.quad.budget);
      verdict(c, worst <= sp.quad.budget, "error estimate above budget");
    });
    attempt("halving_consistency", st, [&](CheckResult& c) {
      double lo = 1.0;
      for (const auto& u : us) {
        const double f = halving_consistency(sp, u, preset_.apply_x);
        c.metrics.emplace_back("fraction_" + u.name(), f);
        lo = std::min(lo, f);
      }
      c.metrics.emplace_back("min_fraction", lo);
      verdict(c, lo >= 0.95, "halving changed results beyond the estimate at more than 5% of points");
    });
    const Expr dd = differentiate(differentiate(sp.phase.phi, lay_.xn()), lay_.xn());
    if (!dd.is_const(0.0)) {
      skip("l2_bound", st, "phase is not linear in x_n");
    } else {
      attempt("l2_bound", st, [&](CheckResult& c) {
        if (!std::isfinite(nondeg_min_)) nondeg_min_ = check_nondegeneracy(sp.phase, margins_.nondeg_delta).min_abs;
        const double factor = 1.0 / std::sqrt(nondeg_min_);
        double worst = 0.0;
        for (const auto& u : us) {
          auto r = apply_normal_op(sp, u, preset_.l2_x);
          std::vector<cplx> uv;
          for (double x : preset_.l2_x) uv.push_back(u(x));
          const double ratio = discrete_l2(r.x, r.value) / discrete_l2(preset_.l2_x, uv);
          c.metrics.emplace_back("ratio_" + u.name(), ratio);
          worst = std::max(worst, ratio);
        }
        c.metrics.emplace_back("bound", 1.05 * factor);
        verdict(c, worst <= 1.05 * factor, "L2 ratio " + num(worst) + " above the bound");
      });
    }
    attempt("apply_truncated_op", st, [&](CheckResult& c) {
      auto u = exp_half_line();
      auto r = apply_truncated_op(sp, u, preset_.truncated_x);
      Table t{"values", {"x_n", "re", "im", "err_est"}, {}};
      for (std::size_t i = 0; i < r.x.size(); ++i)
        t.rows.push_back({num(r.x[i]), num(r.value[i].real()), num(r.value[i].imag()), num(r.error[i])});
      c.tables.push_back(t);
      c.metrics = {{"max_error", r.max_error()}, {"budget", sp.quad.budget}};
      c.message = "mode " + to_string(r.mode);
      verdict(c, r.max_error() <= sp.quad.budget, "error estimate above budget");
    });
    attempt("decay_exponent", st, [&](CheckResult& c) {
      auto d = measure_decay(exp_half_line());
      c.metrics = {{"exponent", d.exponent}, {"positive", d.positive.slope}, {"negative", d.negative.slope}, {"target", -1.0}};
      verdict(c, std::fabs(d.exponent + 1.0) <= 0.05, "decay exponent " + num(d.exponent));
    });
  }

  void opsymb() {
    const std::string st = "opsymb";
    const NormalOperatorSpec sp = normal_spec(s_);
    const auto us = whole_line_functions();
    attempt("group_action", st, [&](CheckResult& c) {
      const SchwartzFn u = us.empty() ? hermite_function(1) : us.front();
      double law = 0.0, iso = 0.0;
      auto l2 = [](const SchwartzFn& f, double R) {
        const Nodes q = gauss_panels(-R, R, R / 200);
        double s = 0.0;
        for (std::size_t i = 0; i < q.x.size(); ++i) s += q.w[i] * f(q.x[i]) * f(q.x[i]);
        return std::sqrt(s);
      };
      const double R = u.decay_radius();
      const double n0 = l2(u, R);
      for (double lam : {1e-3, 1e-2, 1e-1, 1.0, 1e1, 1e2, 1e3}) {
        for (double mu : {0.5, 3.0}) {
          auto a = apply_group_action(apply_group_action(u, lam), mu);
          auto b = apply_group_action(u, lam * mu);
          for (double t : {-1.3, 0.0, 0.02, 0.7}) law = std::max(law, std::fabs(a(t) - b(t)) / std::max(1.0, std::fabs(b(t))));
        }
        iso = std::max(iso, std::fabs(l2(apply_group_action(u, lam), R / lam) - n0));
      }
      c.metrics = {{"law_residual", law}, {"isometry_defect", iso}};
      verdict(c, law <= 1e-12 && iso <= 1e-9, "group law or isometry violated");
    });
    attempt("seminorms", st, [&](CheckResult& c) {
      Table t{"values", {"u", "l", "s", "raw", "cumulative"}, {}};
      bool ok = true;
      for (const auto& u : us) {
        ok = ok && seminorms_monotone(u);
        for (int l = 0; l <= 2; ++l)
          for (int s = 0; s <= 2; ++s)
            t.rows.push_back({u.name(), std::to_string(l), std::to_string(s), num(schwartz_seminorm(u, l, s)),
                              num(schwartz_seminorm_upto(u, l, s))});
      }
      c.tables.push_back(t);
      c.metrics = {{"functions", static_cast<double>(us.size())}};
      verdict(c, ok, "cumulative seminorms not monotone");
    });
    attempt("symbol_order", st, [&](CheckResult& c) {
      auto sw = certify_symbol_order(sp, us, 2, 2, 2, preset_.conjugation);
      Table fits{"fits", {"alpha", "beta", "l", "s", "slope", "target", "residual", "worst", "vanishing", "pass"}, {}};
      Table rungs{"rungs", {"alpha", "beta", "l", "s", "bracket", "value"}, {}};
      int bad = 0;
      for (const auto& f : sw.fits) {
        fits.rows.push_back({index_text(f.alpha), index_text(f.beta), std::to_string(f.l), std::to_string(f.s),
                             num(f.fit.slope), num(f.target), num(f.residual), f.worst, f.fit.vanishing ? "1" : "0",
                             f.pass ? "1" : "0"});
        for (std::size_t i = 0; i < f.brackets.size(); ++i)
          rungs.rows.push_back({index_text(f.alpha), index_text(f.beta), std::to_string(f.l), std::to_string(f.s),
                                num(f.brackets[i]), num(f.values[i])});
        bad += f.pass ? 0 : 1;
      }
      c.tables.push_back(fits);
      c.tables.push_back(rungs);
      c.metrics = {{"fits", static_cast<double>(sw.fits.size())},
                   {"worst_excess", sw.worst_excess},
                   {"tol", kOrderTol},
                   {"max_quadrature_error", sw.max_error}};
      verdict(c, sw.pass && sw.max_error <= sp.quad.budget, std::to_string(bad) + " fits above target");
    });
    attempt("tilde_amplitude", st, [&](CheckResult& c) {
      const int m = lay_.dim() - 1;
      MultiIndex e1(m, 0), zero(m, 0);
      e1[0] = 1;
      bool ok = true;
      Table t{"cases", {"alpha", "beta", "exponent", "tangential_bound", "xi_order", "normal_bound", "pass"}, {}};
      for (const auto& [al, be] : std::vector<std::pair<MultiIndex, MultiIndex>>{{e1, zero}, {zero, e1}}) {
        auto r = check_tilde_amplitude(sp, al, be);
        t.rows.push_back({index_text(al), index_text(be), num(r.report.exponent), num(r.tangential_bound),
                          num(r.report.xi_order), num(r.normal_bound), r.pass ? "1" : "0"});
        const std::string tag = total_order(al) ? "_dx" : "_dxi";
        c.metrics.emplace_back("exponent" + tag, r.report.exponent);
        c.metrics.emplace_back("xi_order" + tag, r.report.xi_order);
        ok = ok && r.pass;
      }
      c.tables.push_back(t);
      verdict(c, ok, "derived amplitude outside its symbol class");
      if (ok && std::isinf(c.metric("exponent_dxi")) && std::isinf(c.metric("exponent_dx")))
        c.message = "both derived amplitudes vanish";
    });
    attempt("transpose_check", st, [&](CheckResult& c) {
      auto r = transpose_check(sp, hermite_function(1), hermite_function(2));
      c.metrics = {{"residual", r.residual}, {"lhs_re", r.lhs.real()}, {"lhs_im", r.lhs.imag()}, {"tol", 1e-6}};
      verdict(c, r.pass, "pairing residual " + num(r.residual));
    });
  }

  Scenario s_;
  VarLayout lay_{s_.n};
  GridPreset preset_;
  std::string margin_name_;
  Margins margins_;
  std::uint64_t seed_ = 1;
  std::vector<std::string> stages_;
  std::vector<CheckResult> results_;
  double nondeg_min_ = INFINITY;
};

}  // namespace detail

inline RunReport run_scenario(const Scenario& s, const RunOptions& opt = {}) {
  return detail::Runner(s, opt).run();
}

// Scenario by catalog name, or a JSON file when the name is not in the catalog.
inline Scenario resolve_scenario(const std::string& name_or_path) {
  for (const auto& s : catalog())
    if (s.name == name_or_path) return s;
  if (std::filesystem::exists(name_or_path)) return load_scenario(name_or_path);
  throw Error(ErrorKind::UnknownScenario, "'" + name_or_path + "' is neither a catalog name nor a file");
}

}  // namespace collar
