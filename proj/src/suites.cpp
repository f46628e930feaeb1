#include "ttriple/suites.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

#include "ttriple/affinegeom.hpp"
#include "ttriple/bundlemaps.hpp"
#include "ttriple/fieldtheory.hpp"
#include "ttriple/mechanics.hpp"
#include "ttriple/models.hpp"
#include "ttriple/numerics.hpp"

namespace ttriple {

namespace {

PropertyResult at_most(std::string suite, std::string name, double value, double threshold, std::string detail = {}) {
  return {std::move(suite), std::move(name), value, threshold, Comparison::at_most, false, std::move(detail)};
}

PropertyResult at_least(std::string suite, std::string name, double value, double threshold,
                        std::string detail = {}) {
  return {std::move(suite), std::move(name), value, threshold, Comparison::at_least, false, std::move(detail)};
}

double max_diff(const Vec& a, const Vec& b) {
  if (a.size() != b.size()) return std::numeric_limits<double>::infinity();
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
  return d;
}

double max_abs(const Vec& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

Vec concat(std::initializer_list<Vec> parts) {
  Vec out;
  for (const auto& p : parts) out.insert(out.end(), p.begin(), p.end());
  return out;
}

Vec neg(Vec v) {
  for (double& x : v) x = -x;
  return v;
}

struct IntSource {
  std::mt19937_64 rng;
  std::uniform_int_distribution<int> d{-9, 9};
  explicit IntSource(std::uint64_t seed) : rng(seed) {}
  Vec operator()(std::size_t n) {
    Vec v(n);
    for (double& x : v) x = d(rng);
    return v;
  }
};

Vec uniform(std::mt19937_64& rng, std::size_t n, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> d(lo, hi);
  Vec v(n);
  for (double& x : v) x = d(rng);
  return v;
}

Vec trace(const J1PhasePoint& pt) {
  Vec t(pt.shape.k, 0.0);
  for (std::size_t a = 0; a < pt.shape.k; ++a)
    for (std::size_t j = 0; j < pt.shape.m; ++j) t[a] += pt.pjet_at(j, a, j);
  return t;
}

std::size_t text_mismatches(const std::vector<std::string>& got, const std::vector<std::string>& want) {
  std::size_t bad = got.size() > want.size() ? got.size() - want.size() : want.size() - got.size();
  for (std::size_t i = 0; i < std::min(got.size(), want.size()); ++i)
    if (got[i] != want[i]) ++bad;
  return bad;
}

Grid square(std::size_t n, double lo, double hi) {
  const double h = (hi - lo) / static_cast<double>(n - 1);
  return Grid{{n, n}, {lo, lo}, {h, h}};
}

Grid cube(std::size_t m, std::size_t n, double lo, double hi) {
  const double h = (hi - lo) / static_cast<double>(n - 1);
  return Grid{std::vector<std::size_t>(m, n), Vec(m, lo), Vec(m, h)};
}

MechModel oscillator() { return MechModel{{"q"}, parse("0.5*(v_q^2 - q^2)"), std::nullopt, ""}; }

// Bundles.

std::vector<PropertyResult> bundle_formulas(const SuiteOptions& o) {
  IntSource ints(o.seed);
  double dk = 0, dk2 = 0, da = 0, dai = 0, db = 0, dr = 0, dr2 = 0, dbra = 0, daf = 0, dbf = 0, dkf = 0;
  for (int t = 0; t < o.trials; ++t) {
    const std::size_t n = 1 + std::size_t(t) % 4;
    const TTMPoint u{ints(n), ints(n), ints(n), ints(n)};
    const TTMPoint ku = kappa(u);
    dk = std::max(dk, max_diff(flatten(ku), concat({u.x, u.dx, u.xdot, u.dxdot})));
    dk2 = std::max(dk2, max_diff(flatten(kappa(ku)), flatten(u)));

    const TTStarMPoint X{ints(n), ints(n), ints(n), ints(n)};
    const auto a = alpha_mech(X);
    da = std::max(da, max_diff(flatten(a), concat({X.x, X.xdot, X.pdot, X.p})));
    dai = std::max(dai, max_diff(flatten(alpha_mech_inverse(a)), flatten(X)));
    const auto b = beta_mech(X);
    db = std::max(db, max_diff(flatten(b), concat({X.x, X.p, neg(X.pdot), X.xdot})));
    dbra = std::max(dbra, max_diff(flatten(r_map(a)), flatten(b)));

    const CotangentOfBundlePoint c{ints(n), ints(n), ints(n), ints(n)};
    dr = std::max(dr, max_diff(flatten(r_map(c)), concat({c.base, c.pfiber, neg(c.pbase), c.fiber})));
    dr2 = std::max(dr2, max_diff(flatten(r_map(r_map(c))), flatten(c)));

    const FieldShape sh{1 + std::size_t(t) % 3, 1 + std::size_t(t / 3) % 3};
    const J1PhasePoint P{sh, ints(sh.m), ints(sh.k), ints(sh.m * sh.k), ints(sh.m * sh.k), ints(sh.m * sh.k * sh.m)};
    const Vec tr = trace(P);
    daf = std::max(daf, max_diff(flatten(alpha_field(P)), concat({P.x, P.y, P.yjet, tr, P.p})));
    dbf = std::max(dbf, max_diff(flatten(beta_field(P)), concat({P.x, P.y, P.p, neg(tr), P.yjet})));

    const VJ1Point V{sh, ints(sh.m), ints(sh.k), ints(sh.m * sh.k), ints(sh.k), ints(sh.m * sh.k)};
    const J1VPoint kv = kappa_field(V);
    dkf = std::max(dkf, max_diff(flatten(kv), concat({V.x, V.y, V.dy, V.yjet, V.dyjet})));
    dkf = std::max(dkf, max_diff(flatten(kappa_field_inverse(kv)), flatten(V)));
  }
  const std::string s = "bundles";
  return {at_most(s, "kappa_formula", dk, 0.0, "(x, xdot, dx, dxdot) -> (x, dx, xdot, dxdot)"),
          at_most(s, "kappa_involution", dk2, 0.0),
          at_most(s, "alpha_mech_formula", da, 0.0, "(x, p, xdot, pdot) -> (x, xdot, pdot, p)"),
          at_most(s, "alpha_mech_inverse", dai, 0.0),
          at_most(s, "beta_mech_formula", db, 0.0, "(x, p, xdot, pdot) -> (x, p, -pdot, xdot)"),
          at_most(s, "r_map_formula", dr, 0.0, "(x, y, p, xi) -> (x, xi, -p, y)"),
          at_most(s, "r_map_involution", dr2, 0.0),
          at_most(s, "beta_is_r_after_alpha", dbra, 0.0),
          at_most(s, "alpha_field_formula", daf, 0.0, "(x, y, p, yjet, pjet) -> (x, y, yjet, tr pjet, p)"),
          at_most(s, "beta_field_formula", dbf, 0.0, "(x, y, p, yjet, pjet) -> (x, y, p, -tr pjet, yjet)"),
          at_most(s, "kappa_field_formula", dkf, 0.0)};
}

// Phase space of an affine dual versus the cotangent bundle.

std::vector<PropertyResult> theorem1(const SuiteOptions& o) {
  const Theorem1SuiteReport r = theorem1_suite(o.trials, o.seed);
  const std::string s = "theorem1";
  const std::string n = std::to_string(r.instances) + " instances";
  return {at_most(s, "complement_independence", r.max_independence, 1e-10, n),
          at_most(s, "symplectic_pullback", r.max_symplecto, 1e-10, n),
          at_most(s, "w_zero_exact", r.trivial_case_exact ? 0.0 : 1.0, 0.0, "W = {0} gives the identity"),
          at_most(s, "w_full_exact", r.full_case_exact ? 0.0 : 1.0, 0.0, "W = V gives -R_V")};
}

// Mechanics.

std::vector<PropertyResult> mech_golden(const SuiteOptions&) {
  const auto e = find_model("ho");
  return {at_most("mechanics", "ho_derived_text", double(text_mismatches(derived_text(e), e.expected)), 0.0)};
}

std::vector<PropertyResult> triple_consistency(const SuiteOptions& o) {
  const MechModel m = oscillator();
  const HamiltonizeResult r = hamiltonize(m);
  std::vector<PropertyResult> out;
  out.push_back(at_most("mechanics", "hamiltonize_symbolic", r.symbolic() ? 0.0 : 1.0, 0.0));
  if (!r.symbolic()) return out;
  MechModel mh = m;
  mh.H = r.hamiltonian();
  const ImplicitSystem lsys = lagrangian_dynamics(m), hsys = hamiltonian_dynamics(mh);
  const Expr px = diff(*m.L, "v_q"), fx = diff(*m.L, "q");
  std::mt19937_64 rng(o.seed);
  double worst = 0.0, lworst = 0.0;
  for (int t = 0; t < o.trials; ++t) {
    const Vec xv = uniform(rng, 2, -2.0, 2.0);
    const PointTuple pt{{"q", xv[0]}, {"v_q", xv[1]}};
    const TTStarMPoint tup{{xv[0]}, {evaluate(px, pt)}, {xv[1]}, {evaluate(fx, pt)}};
    lworst = std::max(lworst, max_abs(dynamics_residual(lsys, tup)));
    worst = std::max(worst, max_abs(dynamics_residual(hsys, tup)));
  }
  out.push_back(at_most("mechanics", "lagrangian_tuples_on_shell", lworst, 1e-12));
  out.push_back(at_most("mechanics", "triple_consistency", worst, 1e-9,
                        "Hamilton residual at " + std::to_string(o.trials) + " Lagrangian on-shell tuples"));

  std::uniform_real_distribution<double> d(-1.0, 1.0);
  const Vec z0{d(rng), d(rng)};
  const Trajectory a = integrate_phase(lsys, z0, 0.0, 10.0, 0.01);
  const Trajectory b = integrate_phase(hsys, z0, 0.0, 10.0, 0.01);
  double traj = std::numeric_limits<double>::infinity();
  if (a.complete() && b.complete() && a.states.size() == b.states.size()) {
    traj = 0.0;
    for (std::size_t k = 0; k < a.states.size(); ++k) traj = std::max(traj, max_diff(a.states[k], b.states[k]));
  }
  out.push_back(at_most("mechanics", "trajectory_agreement", traj, 1e-6, "t in [0, 10], h = 0.01"));
  return out;
}

std::vector<PropertyResult> energy_drift(const SuiteOptions&) {
  MechModel m = oscillator();
  m.H = parse("0.5*(p_q^2 + q^2)");
  NewtonConfig cfg;
  cfg.tol = 1e-10;
  const Trajectory tr = integrate_phase(hamiltonian_dynamics(m), {1.0, 0.0}, 0.0, 100.0, 0.01, cfg);
  double drift = tr.complete() ? 0.0 : std::numeric_limits<double>::infinity();
  auto H = [](const Vec& z) { return 0.5 * (z[0] * z[0] + z[1] * z[1]); };
  for (const auto& z : tr.states) drift = std::max(drift, std::abs(H(z) - H(tr.states.front())));
  return {at_most("mechanics", "energy_drift", drift, 1e-8,
                  std::to_string(tr.states.size() - 1) + " steps, Newton tol 1e-10")};
}

std::vector<PropertyResult> symplecticity(const SuiteOptions&) {
  const MechModel pend{{"q"}, parse("0.5*v_q^2 + cos(q)"), std::nullopt, ""};
  const ImplicitSystem sys = lagrangian_dynamics(pend);
  NewtonConfig cfg;
  cfg.tol = 1e-12;
  const Trajectory tr = integrate_phase(sys, {1.0, 0.2}, 0.0, 5.0, 0.05, cfg);
  double worst = tr.complete() ? 0.0 : std::numeric_limits<double>::infinity();
  const double h = tr.times[1] - tr.times[0];
  for (std::size_t k = 0; k + 1 < tr.states.size(); k += 5)
    worst = std::max(worst, symplecticity_defect(step_jacobian(sys, tr.times[k], h, tr.states[k], tr.states[k + 1])));
  return {at_most("mechanics", "symplecticity", worst, 1e-8, "pendulum, |J^T Omega J - Omega|")};
}

std::vector<PropertyResult> action_slope(const SuiteOptions&) {
  const MechModel ho = oscillator();
  std::vector<double> errs;
  for (int N : {64, 128, 256, 512}) {
    PathSample p{0.0, 1.0, {}};
    std::vector<Vec> dq;
    for (int k = 0; k < N; ++k) {
      const double t = double(k) / (N - 1);
      p.q.push_back({std::sin(t)});
      dq.push_back({t * (1.0 - t)});
    }
    const ActionVariation av = action_variation(ho, p, dq);
    errs.push_back(std::abs(av.lhs - av.rhs));
  }
  double slope = std::numeric_limits<double>::infinity();
  for (std::size_t i = 1; i < errs.size(); ++i) slope = std::min(slope, std::log2(errs[i - 1] / errs[i]));
  return {at_least("mechanics", "action_variation_slope", slope, 1.9, "N = 64..512, worst pairwise slope")};
}

std::vector<PropertyResult> singular(const SuiteOptions&) {
  const MechModel m{{"x1", "x2"}, parse("0.5*(v_x1 - v_x2)^2"), std::nullopt, ""};
  const HamiltonizeResult r = hamiltonize(m);
  const Trajectory tr = integrate_phase(lagrangian_dynamics(m), {0.1, -0.2, 0.7, -0.7}, 0.0, 10.0, 0.01);
  double worst = tr.complete() ? 0.0 : std::numeric_limits<double>::infinity();
  for (const auto& z : tr.states) worst = std::max(worst, std::abs(z[2] + z[3]));
  return {at_most("mechanics", "singular_generating_family", r.singular() ? 0.0 : 1.0, 0.0,
                  "hamiltonize returns a generating family"),
          at_most("mechanics", "singular_momentum_constraint", worst, 1e-9,
                  std::to_string(tr.states.size() - 1) + " steps, max |p1 + p2|")};
}

// Field.

FieldModel scalar2() { return find_model("scalar2").field(); }

double residual_max(const FieldModel& fm, std::size_t n, const std::function<Vec(const Vec&)>& y) {
  return pde_residual(fm, sample_section(square(n, 0.0, 1.0), 1, y), ResidualKind::el).max;
}

std::vector<PropertyResult> scalar_checks(const SuiteOptions&) {
  const FieldModel s = scalar2();
  const std::string f = "field";
  std::vector<PropertyResult> out;
  const VarTable vt = field_el_vars(s);
  const auto el = field_el(s);
  out.push_back(at_most(f, "scalar_el_is_laplacian",
                        (el.size() == 1 && format_equation(el[0], &vt) == "y_d1d1 + y_d2d2 = 0" &&
                         format_equation_latex(el[0], &vt) == "y_{11} + y_{22} = 0")
                            ? 0.0
                            : 1.0,
                        0.0, "y_{11} + y_{22} = 0"));

  const Grid g = square(21, -1.0, 1.0);
  const double harm =
      pde_residual(s, sample_section(g, 1, [](const Vec& x) { return Vec{x[0] * x[0] - x[1] * x[1]}; }), ResidualKind::el)
          .max;
  out.push_back(at_most(f, "harmonic_residual", harm, 1e-10, "phi = x1^2 - x2^2"));
  const double bowl =
      pde_residual(s, sample_section(g, 1, [](const Vec& x) { return Vec{x[0] * x[0]}; }), ResidualKind::el).max;
  out.push_back(at_most(f, "bowl_residual", std::abs(bowl - 2.0), 1e-9, "phi = x1^2 gives 2"));

  auto phi = [](const Vec& x) { return Vec{std::exp(x[0]) * std::sin(x[1])}; };
  double prev = residual_max(s, 17, phi), slope = std::numeric_limits<double>::infinity();
  for (std::size_t n : {33u, 65u, 129u}) {
    const double e = residual_max(s, n, phi);
    slope = std::min(slope, std::log2(prev / e));
    prev = e;
  }
  out.push_back(at_least(f, "convergence_slope", slope, 1.9, "exp(x1) sin(x2), h = 1/16 .. 1/128"));

  auto y = [](const Vec& x) { return Vec{x[0] * x[0] - x[1] * x[1] + 0.5 * x[0] * x[1]}; };
  auto p = [](const Vec& x) { return Vec{2 * x[0] + 0.5 * x[1], -2 * x[1] + 0.5 * x[0]}; };
  const PhaseSection sec = sample_section(square(15, -1, 2), 1, y, p);
  const double l = pde_residual(s, sec, ResidualKind::el).max;
  const double d = pde_residual(s, sec, ResidualKind::dynamics).max;
  const double h = pde_residual(s, sec, ResidualKind::hamilton).max;
  out.push_back(at_most(f, "lagrangian_hamiltonian_agreement", std::max({l, std::abs(l - h), std::abs(d - h)}), 1e-8,
                        "on-shell section, H = 1/2 p ^ *p"));
  return out;
}

std::vector<PropertyResult> maxwell_constant(const SuiteOptions&) {
  const double c = 0.7;
  const PhaseSection sec =
      sample_section(square(11, -1, 1), 2, [c](const Vec& x) { return Vec{-c * x[1], c * x[0]}; });
  return {at_most("field", "maxwell_constant_F", pde_residual(find_model("em2").field(), sec, ResidualKind::el).max,
                  1e-10)};
}

std::vector<PropertyResult> m1_reduction(const SuiteOptions&) {
  const FieldModel fm{{"t"}, {"q", "r"}, parse("0.5*(q_d1^2 + exp(q)*r_d1^2) - t*q*r + sin(r)*q_d1"),
                      parse("0.5*(p1_q^2 + p1_r^2) + t*q^2*r"), {}};
  const MechModel mm = as_mechanics(fm);
  const auto names = mechanics_renaming(fm);
  std::size_t bad = 0;
  auto compare = [&](const std::vector<Expr>& a, const std::vector<Expr>& b) {
    if (a.size() != b.size()) {
      ++bad;
      return;
    }
    for (std::size_t i = 0; i < a.size(); ++i)
      if (rename(a[i], names) != b[i]) ++bad;
  };
  compare(field_dynamics(fm).equations, lagrangian_dynamics(mm).equations);
  compare(hamilton_field_equations(fm).equations, hamiltonian_dynamics(mm).equations);
  compare(field_el(fm), euler_lagrange(mm));
  compare(field_legendre(fm).momenta, legendre(mm).momenta);
  return {at_most("field", "m1_reduction", double(bad), 0.0, "structural mismatches after renaming")};
}

std::vector<PropertyResult> parallel_matches_serial(const SuiteOptions&) {
  const FieldModel fm{{"x1", "x2"}, {"u", "w"}, parse("0.5*(u_d1^2 + w_d2^2) + sin(u)*w_d1*u_d2 - exp(w)*u_d1"),
                      parse("0.5*(p1_u^2 + p2_w^2) + u*w"), {}};
  auto y = [](const Vec& x) { return Vec{std::sin(x[0] * x[1]), std::cos(x[0]) + x[1]}; };
  auto p = [](const Vec& x) { return Vec{x[0], x[1] * x[1], std::exp(-x[0]), x[0] * x[1]}; };
  const PhaseSection sec = sample_section(Grid{{25, 17}, {-1, 0}, {0.05, 0.08}}, 2, y, p);
  double d = 0.0;
  for (auto which : {ResidualKind::el, ResidualKind::dynamics, ResidualKind::hamilton}) {
    const ResidualGrid a = pde_residual(fm, sec, which), b = pde_residual_serial(fm, sec, which);
    d = std::max(d, a.nodes == b.nodes ? max_diff(a.values, b.values) : std::numeric_limits<double>::infinity());
  }
  return {at_most("field", "openmp_matches_serial", d, 0.0)};
}

// Models.

std::vector<PropertyResult> golden(const SuiteOptions&) {
  std::vector<PropertyResult> out;
  for (const auto& e : catalog(true))
    out.push_back(at_most("models", "golden_" + e.name, double(text_mismatches(derived_text(e), e.expected)), 0.0,
                          "mismatching lines"));
  return out;
}

std::vector<PropertyResult> em_momentum(const SuiteOptions& o) {
  std::vector<PropertyResult> out;
  for (std::size_t m : {2u, 3u}) {
    const FieldModel fm = find_model("em" + std::to_string(m)).field();
    const MomentumSplit split = momentum_split(fm, field_legendre(fm));
    double nonzero = 0;
    for (const auto& row : split.symmetric)
      for (const auto& e : row)
        if (!e.is_number(0.0)) ++nonzero;
    const std::string tag = "_m" + std::to_string(m);
    out.push_back(at_most("models", "em_symmetric_momentum_symbolic" + tag, nonzero, 0.0, "nonzero entries"));
    const GeneratingFamilyCheck g = em_generating_family_check(m, o.trials, o.seed);
    out.push_back(at_most("models", "em_symmetric_momentum_sampled" + tag, g.max_symmetric_momentum, 1e-10));
    out.push_back(at_most("models", "em_generating_family_on_image" + tag, g.max_gradient_on_image, 1e-10,
                          std::to_string(g.samples) + " random jets"));
    out.push_back(at_least("models", "em_generating_family_off_image" + tag, g.min_gradient_off_image, 1e-6,
                           "smallest gradient after perturbing off the image"));
  }
  return out;
}

// A smooth potential and the exact gradient of a cubic gauge function.
Vec em_potential(const Vec& x) {
  Vec A(x.size());
  for (std::size_t a = 0; a < x.size(); ++a) {
    double s = 0.3 * double(a + 1);
    for (std::size_t i = 0; i < x.size(); ++i) s += double(i + a + 1) * 0.4 * x[i];
    A[a] = std::sin(s) + 0.2 * x[(a + 1) % x.size()] * x[a];
  }
  return A;
}

Vec cubic_gauge_gradient(const Vec& x) {
  Vec g(x.size());
  g[0] = 2 * x[0] * x[1] - 1.5 * x[0] * x[0];
  g[1] = x[0] * x[0] + 0.9 * x[1] * x[1];
  if (x.size() == 3) {
    g[0] += x[1] * x[2];
    g[1] += x[0] * x[2];
    g[2] = x[0] * x[1] + x[2] * x[2];
  }
  return g;
}

std::vector<PropertyResult> em_gauge(const SuiteOptions&) {
  std::vector<PropertyResult> out;
  for (std::size_t m : {2u, 3u}) {
    const FieldModel fm = find_model("em" + std::to_string(m)).field();
    const Grid grid = cube(m, m == 2 ? 17 : 9, -0.5, 1.0);
    const auto a = pde_residual(fm, sample_section(grid, m, em_potential), ResidualKind::el);
    const auto b = pde_residual(fm,
                                sample_section(grid, m,
                                               [m](const Vec& x) {
                                                 Vec A = em_potential(x);
                                                 const Vec d = cubic_gauge_gradient(x);
                                                 for (std::size_t i = 0; i < m; ++i) A[i] += d[i];
                                                 return A;
                                               }),
                                ResidualKind::el);
    out.push_back(at_most("models", "em_gauge_invariance_m" + std::to_string(m), max_diff(a.values, b.values), 1e-8,
                          "A versus A + d(chi), chi cubic"));
  }
  return out;
}

std::vector<PropertyResult> alpha2(const SuiteOptions& o) {
  const FieldShape sh = find_model("vector2").field().shape();
  IntSource ints(o.seed);
  double worst = 0.0;
  for (int t = 0; t < o.trials; ++t) {
    const J1PhasePoint P{sh, ints(sh.m), ints(sh.k), ints(sh.m * sh.k), ints(sh.m * sh.k), ints(sh.m * sh.k * sh.m)};
    const VPlusJ1Point out = alpha_field(P);
    Vec tr(sh.k, 0.0);
    for (std::size_t a = 0; a < sh.k; ++a)
      for (std::size_t j = 0; j < sh.m; ++j) tr[a] += P.pjet[(j * sh.k + a) * sh.m + j];
    worst = std::max({worst, max_diff(out.piy, tr), max_diff(out.pijet, P.p), max_diff(out.yjet, P.yjet),
                      max_diff(out.y, P.y), max_diff(out.x, P.x)});
  }
  return {at_most("models", "alpha2_formula", worst, 0.0, "(x, p^j_a, p^k_bl) -> (x, sum_j p^j_aj, p^k_b)")};
}

std::vector<PropertyResult> timedep(const SuiteOptions&) {
  const FieldModel fm = find_model("timedep").field();
  const MechModel mm = as_mechanics(fm);
  const auto names = mechanics_renaming(fm);
  std::size_t bad = text_mismatches(derived_text(mm), derived_text(find_model("ho").mech()));
  if (mm.time != "t") ++bad;
  const auto fd = field_dynamics(fm).equations, md = lagrangian_dynamics(mm).equations;
  if (fd.size() != md.size()) ++bad;
  for (std::size_t i = 0; i < std::min(fd.size(), md.size()); ++i)
    if (rename(fd[i], names) != md[i]) ++bad;
  return {at_most("models", "timedep_reduction", double(bad), 0.0, "field over t versus the oscillator")};
}

}  // namespace

const std::vector<std::string>& suite_names() {
  static const std::vector<std::string> names{"bundles", "theorem1", "mechanics", "field", "models"};
  return names;
}

const std::vector<Check>& checks() {
  static const std::vector<Check> all{
      {"bundles", "coordinate_formulas", bundle_formulas},
      {"theorem1", "theorem1_suite", theorem1},
      {"mechanics", "derived_text", mech_golden},
      {"mechanics", "triple_consistency", triple_consistency},
      {"mechanics", "energy_drift", energy_drift},
      {"mechanics", "symplecticity", symplecticity},
      {"mechanics", "action_variation", action_slope},
      {"mechanics", "singular", singular},
      {"field", "scalar", scalar_checks},
      {"field", "maxwell_constant_F", maxwell_constant},
      {"field", "m1_reduction", m1_reduction},
      {"field", "openmp_matches_serial", parallel_matches_serial},
      {"models", "golden", golden},
      {"models", "em_momentum", em_momentum},
      {"models", "em_gauge", em_gauge},
      {"models", "alpha2", alpha2},
      {"models", "timedep", timedep},
  };
  return all;
}

std::vector<PropertyResult> run_check(const Check& c, const SuiteOptions& opts) {
  std::vector<PropertyResult> out;
  try {
    out = c.run(opts);
  } catch (const std::exception& e) {
    out = {at_most(c.suite, c.name, std::numeric_limits<double>::infinity(), 0.0, std::string("error: ") + e.what())};
  }
  for (auto& r : out) {
    if (opts.tol && r.comparison == Comparison::at_most) r.threshold = *opts.tol;
    r.pass = r.comparison == Comparison::at_most ? r.value <= r.threshold : r.value >= r.threshold;
  }
  return out;
}

std::vector<PropertyResult> run_suite(const std::string& suite, const SuiteOptions& opts) {
  if (suite != "all" && std::find(suite_names().begin(), suite_names().end(), suite) == suite_names().end())
    throw Error("unknown suite '" + suite + "'");
  std::vector<PropertyResult> out;
  for (const auto& c : checks()) {
    if (suite != "all" && c.suite != suite) continue;
    auto r = run_check(c, opts);
    out.insert(out.end(), r.begin(), r.end());
  }
  return out;
}

}  // namespace ttriple
