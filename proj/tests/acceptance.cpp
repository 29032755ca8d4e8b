// Acceptance run: one PASS/FAIL line per criterion, exit 1 if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "collar/runner.hpp"

using namespace collar;

namespace {

struct Outcome {
  bool pass = true;
  std::ostringstream note;
  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      note << " [missed: " << what << "]";
    }
  }
};

NormalOperatorSpec with_amplitude(const std::string& scenario, const std::string& re, double order) {
  auto sp = normal_spec(catalog_entry(scenario));
  sp.a_re = parse(re, sp.phase.lay);
  sp.a_im = constant(0.0);
  sp.order = order;
  return sp;
}

std::vector<SchwartzFn> hermites() {
  std::vector<SchwartzFn> us;
  for (int j = 0; j <= 4; ++j) us.push_back(hermite_function(j));
  return us;
}

std::vector<Scenario> positives() {
  std::vector<Scenario> v;
  for (const auto& s : catalog())
    if (is_positive(s)) v.push_back(s);
  return v;
}

// 1. *Phi = t tau for the identity at K = 1 on the pinned 41 x 41 grid.
void identity_exactness(Outcome& o) {
  const Scenario s = catalog_entry("identity");
  const GeneratingPhase g = build_phase(s);
  const SgGrid grid = default_sg_grid();
  o.require(grid.t.size() == 41 && grid.tau.size() == 41, "41 x 41 grid");
  auto fam = std::make_shared<const StarPhiFamily>(g, 3);
  double worst = 0.0, p2 = 0.0, p3 = 0.0, c1 = 0.0;
  for (double xp : {-1.0, 0.3, 1.0})
    for (double kp : {0.0, 2.0, -40.0}) {
      RegularizedPhase phi(fam, {xp}, {kp}, s.collar / 2, 1.0);
      for (double t : grid.t)
        for (double tau : grid.tau)
          worst = std::max(worst, std::fabs(phi.value(t, tau) - t * tau) / std::max(1.0, std::fabs(t * tau)));
      auto pc = phase_constants(phi, grid, s.margins);
      for (double v : pc.C) c1 = std::max(c1, v);
      p2 = std::max({p2, std::fabs(pc.c_t - 1), std::fabs(pc.C_t - 1), std::fabs(pc.c_tau - 1), std::fabs(pc.C_tau - 1)});
      p3 = std::max(p3, std::fabs(pc.eps - 1));
    }
  o.require(worst <= 4 * std::numeric_limits<double>::epsilon(), "*Phi = t tau");
  o.require(c1 <= 1.0 + 1e-12, "C_{a alpha} <= 1");
  o.require(p2 <= 1e-12, "P2 constants = 1");
  o.require(p3 <= 1e-12, "P3 eps = 1");
  o.note << "max rel |*Phi - t tau| " << num(worst) << ", max C " << num(c1) << ", P2 dev " << num(p2) << ", P3 dev "
         << num(p3);
}

// 2. Calibration and P1-P3 with uniformity for the three curved positives.
void desk_calibration(Outcome& o) {
  for (const char* name : {"dilation", "quadratic-collar", "boundary-shear"}) {
    const auto t0 = std::chrono::steady_clock::now();
    const Scenario s = catalog_entry(name);
    UniformityOptions opt;
    opt.margins = s.margins;
    o.require(opt.u.size() == 9 && opt.rungs.size() == 9 && opt.rungs.back() == 256.0, "9 x 9 samples");
    try {
      const Calibration cal = calibrate(build_phase(s), opt);
      const auto& c = cal.certificate;
      bool p = true;
      for (const auto& smp : c.samples) p = p && smp.constants.p1 && smp.constants.p2 && smp.constants.p3;
      const double dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      o.require(cal.K <= 16 && cal.k >= s.collar / 32, std::string(name) + " budget");
      o.require(p && c.samples.size() == 81, std::string(name) + " P1-P3");
      o.require(c.worst_ratio <= 3.0, std::string(name) + " uniformity");
      o.require(dt < 60.0, std::string(name) + " runtime");
      o.note << name << ": k=" << num(cal.k) << " K=" << num(cal.K) << " ratio=" << num(c.worst_ratio) << " ("
             << num(dt) << " s); ";
    } catch (const Error& e) {
      o.require(false, std::string(name) + ": " + e.what());
    }
  }
}

// 3. q+ + q- and homogeneity on the positives, the |xi| term on the negative.
void transmission(Outcome& o) {
  double sum = 0.0, hom = 0.0;
  for (const auto& s : positives()) {
    const GeneratingPhase g = build_phase(s);
    auto nc = normal_coeffs(g);
    sum = std::max(sum, nc.sum_residual);
    const VarLayout lay = s.layout();
    const auto pts = collar_samples(lay, s.collar, 40, 5);
    for (const auto& mi : indices_upto(2 * lay.dim(), 2)) {
      std::vector<int> seq;
      int fiber = 0;
      for (int i = 0; i < lay.dim(); ++i) {
        seq.insert(seq.end(), mi[i], lay.x(i));
        seq.insert(seq.end(), mi[lay.dim() + i], lay.k(i));
        fiber += mi[lay.dim() + i];
      }
      const Expr d = differentiate(g.psi, seq);
      for (const auto& p : pts)
        for (double lam : {2.0, 10.0, 100.0}) hom = std::max(hom, homogeneity_defect(d, p, lay, 1.0 - fiber, lam));
    }
  }
  const auto bad = check_admissibility(build_phase(catalog_entry("bad-transmission")));
  o.require(sum <= 1e-10, "q+ + q- <= 1e-10");
  o.require(hom <= 1e-12, "homogeneity <= 1e-12");
  o.require(!bad.pass && bad.residual >= 0.1, "bad-transmission residual >= 0.1");
  o.note << "q+ + q- " << num(sum) << ", homogeneity " << num(hom) << ", bad-transmission " << num(bad.residual);
}

// 4. Jacobian structure on the positives, negatives fail their own check only.
void structure(Outcome& o) {
  double zb = 0, det = 0, prod = 0;
  for (const auto& s : positives()) {
    if (!s.map) continue;
    const auto chi = build_map(s, *s.map);
    const VarLayout lay = s.layout();
    auto r = check_jacobian_structure(chi, collar_samples(lay, s.collar, 200, 2, true),
                                      collar_samples(lay, s.collar, 200, 3));
    zb = std::max(zb, r.zero_block_max);
    det = std::max(det, r.det_boundary_defect);
    prod = std::max(prod, r.product_defect);
    o.require(r.min_normal_derivative > 0.1, s.name + " normal derivative bounded away from 0");
  }
  o.require(zb <= 1e-10 && det <= 1e-8 && prod <= 1e-8, "structure tolerances");
  for (const char* name : {"bad-boundary-shift", "bad-symplectic"}) {
    RunOptions opt;
    opt.stages = {"symplecto"};
    const auto r = run_scenario(catalog_entry(name), opt);
    o.require(r.failed() == std::vector<std::string>{catalog_entry(name).intended_failure},
              std::string(name) + " fails exactly its check");
    o.note << name << " -> " << (r.failed().empty() ? "-" : r.failed().front()) << "; ";
  }
  o.note << "zero blocks " << num(zb) << ", det " << num(det) << ", product " << num(prod);
}

// 5. Identity reproduces u; dilation gives u(e^g x_n), g = sin(x1)/2 at x1 = 0.3.
void operator_identity(Outcome& o) {
  const auto xs = linspace(-3.0, 3.0, 121);
  double id = 0.0, dil = 0.0;
  const auto sid = normal_spec(catalog_entry("identity"));
  const auto sdil = normal_spec(catalog_entry("dilation"));
  const double s = std::exp(std::sin(sdil.x_prime[0]) / 2);
  for (int j = 0; j <= 4; ++j) {
    const auto u = hermite_function(j);
    auto r = apply_normal_op(sid, u, xs);
    auto q = apply_normal_op(sdil, u, xs);
    for (std::size_t i = 0; i < xs.size(); ++i) {
      const double x = xs[i];
      id = std::max(id, std::abs(r.value[i] - hermite_value(j, x) * std::exp(-x * x / 2)));
      const double y = s * x;
      dil = std::max(dil, std::abs(q.value[i] - hermite_value(j, y) * std::exp(-y * y / 2)));
    }
  }
  o.require(id <= 1e-6, "identity reproduction");
  o.require(dil <= 1e-6, "dilation reproduction");
  o.note << "identity max err " << num(id) << ", dilation max err " << num(dil);
}

// 6. Slopes over the sweep, with the decay target tracking xi'-derivatives,
//    plus the exact power-law control.
void symbol_order(Outcome& o) {
  double excess = -INFINITY;
  int fits = 0;
  for (const auto& s : positives()) {
    auto sw = certify_symbol_order(normal_spec(s), hermites());
    o.require(sw.pass, s.name + " sweep");
    o.require(sw.fits.size() == 81, s.name + " 81 fits");
    for (const auto& f : sw.fits) o.require(f.brackets.size() == 9 && f.brackets.back() == 256.0, "9 rungs to 256");
    excess = std::max(excess, sw.worst_excess);
    fits += static_cast<int>(sw.fits.size());
  }
  auto ctl = estimate_symbol_order(with_amplitude("identity", "sqrt(1 + k1^2)", 1.0), {0}, {0}, 0, 0, hermites());
  o.require(std::fabs(ctl.fit.slope - 1.0) <= 0.02, "control slope 1 +- 0.02");
  o.note << fits << " fits, worst slope - target " << num(excess) << ", control slope " << num(ctl.fit.slope);
}

// 7. Amplitudes from one x'- and one xi'-derivative in their symbol classes.
void tilde(Outcome& o) {
  const auto dx = check_tilde_amplitude(normal_spec(catalog_entry("dilation")), {1}, {0});
  const auto sp = with_amplitude("dilation", "(1 + x1^2/2)*sqrt(1 + k1^2 + kn^2)", 1.0);
  const auto dxi = check_tilde_amplitude(sp, {0}, {1});
  const auto both = check_tilde_amplitude(sp, {1}, {1});
  for (const auto* c : {&dx, &dxi, &both}) {
    o.require(c->pass, "BS membership");
    o.require(std::isfinite(c->report.exponent), "non-vanishing derived amplitude");
    o.require(c->report.exponent <= c->tangential_bound + 0.15 && c->report.xi_order <= c->normal_bound + 0.15,
              "within +0.15");
  }
  o.note << "d_x: " << num(dx.report.exponent) << "/" << num(dx.report.xi_order) << " vs " << num(dx.tangential_bound)
         << "/" << num(dx.normal_bound) << "; d_xi: " << num(dxi.report.exponent) << "/" << num(dxi.report.xi_order)
         << " vs " << num(dxi.tangential_bound) << "/" << num(dxi.normal_bound) << "; both: "
         << num(both.report.exponent) << "/" << num(both.report.xi_order);
}

double trapezoid(const std::function<double(double)>& f, double a, double b, int N) {
  double s = 0.0;
  const double h = (b - a) / N;
  for (int i = 0; i <= N; ++i) s += (i == 0 || i == N ? 0.5 : 1.0) * f(a + i * h);
  return s * h;
}

// 8. Transpose pairing on the three listed specs, each against a brute-force value.
void duality(Outcome& o) {
  const auto h0 = hermite_function(0), h1 = hermite_function(1), h2 = hermite_function(2), h3 = hermite_function(3);
  const auto a = transpose_check(normal_spec(catalog_entry("identity")), h1, h3);
  o.require(a.residual <= 1e-9, "identity residual 1e-9");

  const auto sdil = normal_spec(catalog_entry("dilation"));
  const double s = std::exp(std::sin(sdil.x_prime[0]) / 2);
  const auto b = transpose_check(sdil, h0, h2);
  const double bb = trapezoid([&](double x) { return h0(s * x) * h2(x); }, -20, 20, 200000);
  o.require(b.residual <= 1e-6 && std::abs(b.lhs - bb) <= 1e-8, "dilation residual and brute force");

  const auto c = transpose_check(with_amplitude("identity", "1/(1 + kn^2)", -2.0), h0, h2);
  auto conv = [](double x) {
    return 0.5 * std::sqrt(M_PI / 2) * std::exp(0.5) *
           (std::exp(-x) * std::erfc((1 - x) / std::sqrt(2.0)) + std::exp(x) * std::erfc((1 + x) / std::sqrt(2.0)));
  };
  const double cb = trapezoid([&](double x) { return conv(x) * h2(x); }, -20, 20, 200000);
  o.require(c.residual <= 1e-6 && std::abs(c.lhs - cb) <= 1e-8, "bracket kernel residual and brute force");
  o.note << "residuals " << num(a.residual) << ", " << num(b.residual) << ", " << num(c.residual);
}

// 9. Finite differences, halving consistency, determinism.
void hygiene(Outcome& o) {
  double fd = 0.0;
  int exprs = 0;
  for (const auto& s : catalog()) {
    const VarLayout lay = s.layout();
    std::vector<Expr> es{parse(s.phase, lay), parse(s.amplitude.re, lay), parse(s.amplitude.im, lay)};
    for (const auto* m : {&s.map, &s.inverse})
      if (*m) {
        for (const auto& e : (*m)->x) es.push_back(parse(e, lay));
        for (const auto& e : (*m)->xi) es.push_back(parse(e, lay));
      }
    const auto pts = collar_samples(lay, s.collar, 100, 99);
    for (const auto& e : es) {
      int ev = 0;
      fd = std::max(fd, detail::fd_sweep(e, lay, pts, ev));
      ++exprs;
    }
  }
  o.require(fd <= 1e-6, "fd_crosscheck <= 1e-6");
  double halving = 1.0;
  const auto xs = linspace(-3.0, 3.0, 61);
  for (const auto& s : positives())
    for (const auto& u : hermites()) halving = std::min(halving, halving_consistency(normal_spec(s), u, xs));
  o.require(halving >= 0.95, "halving consistency >= 95%");
  RunOptions opt;
  opt.grid = "quick";
  const auto r1 = run_scenario(catalog_entry("dilation"), opt);
  const auto r2 = run_scenario(catalog_entry("dilation"), opt);
  o.require(csv_bundle(r1) == csv_bundle(r2) && to_json(r1).dump() == to_json(r2).dump(), "byte-identical reruns");
  o.note << exprs << " expressions, worst fd " << num(fd) << ", min halving fraction " << num(halving)
         << ", reruns identical " << (csv_bundle(r1) == csv_bundle(r2) ? "yes" : "no");
}

// 10. Decay of the transform of e^{-t} on the half line, with the modulus
//     checked against 1/sqrt(1 + xi^2).
void hplus_decay(Outcome& o) {
  const auto u = exp_half_line();
  const auto d = measure_decay(u);
  o.require(std::fabs(d.exponent + 1.0) <= 0.05, "exponent -1 +- 0.05");
  const std::vector<double> xis{10.0, 100.0, 1000.0, -37.0};
  SchwartzFn plain("exp_half_numeric", u.expr(), {}, true);
  const auto F = half_line_ft(plain, xis);
  double rel = 0.0;
  for (std::size_t i = 0; i < xis.size(); ++i)
    rel = std::max(rel, std::fabs(std::abs(F.value[i]) * std::sqrt(1 + xis[i] * xis[i]) - 1.0));
  o.require(rel <= 1e-8, "numeric modulus matches closed form");
  o.note << "exponent " << num(d.exponent) << " (xi > 0: " << num(d.positive.slope) << ", xi < 0: "
         << num(d.negative.slope) << "), numeric modulus rel err " << num(rel);
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* title;
    double budget;  // seconds, 0 = none stated
    void (*body)(Outcome&);
  };
  const std::vector<Criterion> criteria{
      {1, "identity exactness", 5, identity_exactness},
      {2, "calibration and P1-P3 on the curved catalog", 0, desk_calibration},
      {3, "transmission and homogeneity", 10, transmission},
      {4, "Jacobian structure and map negatives", 10, structure},
      {5, "operator reproduces identity and dilation", 30, operator_identity},
      {6, "symbol order of the conjugated family", 120, symbol_order},
      {7, "derived amplitudes in their symbol classes", 60, tilde},
      {8, "transpose pairing", 0, duality},
      {9, "numerical hygiene", 0, hygiene},
      {10, "half-line transform decays to first order", 0, hplus_decay},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    Outcome o;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      c.body(o);
    } catch (const std::exception& e) {
      o.require(false, e.what());
    }
    const double dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (c.budget > 0 && dt >= c.budget) o.require(false, "runtime budget " + num(c.budget) + " s");
    failed += o.pass ? 0 : 1;
    char head[96];
    std::snprintf(head, sizeof head, "criterion %2d %s  %-45s %7.2f s  ", c.id, o.pass ? "PASS" : "FAIL", c.title, dt);
    std::cout << head << o.note.str() << std::endl;
  }
  std::cout << (failed ? "acceptance: " + std::to_string(failed) + " criteria failed" : std::string("acceptance: all criteria pass"))
            << std::endl;
  return failed ? 1 : 0;
}
