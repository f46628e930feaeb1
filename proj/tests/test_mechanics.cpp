#include <doctest.h>

#include <cmath>
#include <random>

#include "test_support.hpp"
#include "ttriple/bundlemaps.hpp"
#include "ttriple/mechanics.hpp"

using namespace ttriple;

namespace {

MechModel lag(std::vector<std::string> coords, const std::string& L, const std::string& time = "") {
  return MechModel{std::move(coords), parse(L), std::nullopt, time};
}

bool same(const Expr& a, const Expr& b) { return simplify(a - b).is_number(0.0); }

PointTuple point(const MechModel& m, const Vec& x, const Vec& v) {
  PointTuple pt;
  for (std::size_t i = 0; i < m.dim(); ++i) {
    pt[m.coords[i]] = x[i];
    pt[m.velocity(i)] = v[i];
  }
  return pt;
}

Vec grad(const Expr& e, const std::vector<std::string>& names, const PointTuple& pt) {
  Vec g;
  for (const auto& n : names) g.push_back(evaluate(diff(e, n), pt));
  return g;
}

double max_abs(const Vec& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

PathSample sampled(int N, double t0, double t1, const std::function<Vec(double)>& q) {
  PathSample p{t0, t1, {}};
  for (int k = 0; k < N; ++k) p.q.push_back(q(t0 + (t1 - t0) * k / (N - 1)));
  return p;
}

std::vector<Vec> sampled_variation(const PathSample& p, const std::function<Vec(double)>& dq) {
  std::vector<Vec> out;
  const auto N = static_cast<double>(p.q.size());
  for (std::size_t k = 0; k < p.q.size(); ++k) out.push_back(dq(p.t0 + (p.t1 - p.t0) * k / (N - 1)));
  return out;
}

}  // namespace

TEST_CASE("statics: constitutive set") {
  StaticsModel s{{"q"}, parse("0.5*q^2"), std::nullopt, {}};
  CHECK(constitutive_set(s, {3.0}) == Vec{3.0});

  StaticsModel c{{"a", "b"}, parse("7"), std::nullopt, {}};
  CHECK(constitutive_set(c, {1.0, -2.0}) == Vec{0.0, 0.0});

  std::mt19937_64 rng(11);
  const std::vector<std::string> names{"a", "b"};
  for (int trial = 0; trial < 20; ++trial) {
    Expr U = parse("0");
    std::uniform_int_distribution<int> coeff(-4, 4), power(0, 3);
    for (int t = 0; t < 4; ++t) {
      U = U + Expr(coeff(rng)) * pow(Expr::variable("a"), Expr(power(rng))) * pow(Expr::variable("b"), Expr(power(rng)));
    }
    const StaticsModel r{names, U, std::nullopt, {}};
    const Vec q = test::random_vec(rng, 2);
    const Vec fd = fd_gradient([&](const Vec& x) { return evaluate(U, {{"a", x[0]}, {"b", x[1]}}); }, q, 1e-5);
    const Vec dU = constitutive_set(r, q);
    for (int i = 0; i < 2; ++i) CHECK(dU[i] == doctest::Approx(fd[i]).epsilon(1e-8));
  }
  StaticsModel none{{"q"}, std::nullopt, parse("dq_q"), {}};
  CHECK_THROWS_AS(constitutive_set(none, {0.0}), Error);
}

TEST_CASE("statics: equilibrium by sampling") {
  StaticsModel s{{"q"}, parse("0.5*q^2"), std::nullopt, {}};
  CHECK(equilibrium_test(s, {0.0}, 32).pass);

  const EquilibriumVerdict off = equilibrium_test(s, {1.0}, 32);
  CHECK_FALSE(off.pass);
  REQUIRE(off.violating.size() == 1);
  CHECK(off.violating[0] == doctest::Approx(-1.0));
  CHECK(off.value == doctest::Approx(-1.0));

  StaticsModel abs_cost{{"q"}, std::nullopt, parse("sqrt(dq_q^2)"), {}};
  CHECK(equilibrium_test(abs_cost, {0.0}, 32).pass);

  StaticsModel half{{"q"}, std::nullopt, parse("dq_q"), [](const Vec&, const Vec& dq) { return dq[0] >= 0.0; }};
  for (double q : {-2.0, 0.0, 5.0}) {
    const EquilibriumVerdict v = equilibrium_test(half, {q}, 32);
    CHECK(v.pass);
    CHECK(v.samples == 32);
  }
  half.admissible = {};
  CHECK_FALSE(equilibrium_test(half, {0.0}, 32).pass);
}

TEST_CASE("statics: positive homogeneity of the cost") {
  StaticsModel w{{"a", "b"}, std::nullopt, parse("sqrt(dq_a^2 + dq_b^2)*exp(a) + b*dq_a"), {}};
  CHECK(homogeneity_defect(w, 100) <= 1e-12);
  StaticsModel nonhom{{"a"}, std::nullopt, parse("dq_a^2"), {}};
  CHECK(homogeneity_defect(nonhom, 100) > 1e-3);
}

TEST_CASE("lagrangian dynamics: examples and golden text") {
  const MechModel ho = lag({"q"}, "0.5*(v_q^2 - q^2)");
  const ImplicitSystem d = lagrangian_dynamics(ho);
  REQUIRE(d.equations.size() == 2);
  CHECK(d.text() == std::vector<std::string>{"p_q - v_q = 0", "pdot_q + q = 0"});
  CHECK(d.latex() == std::vector<std::string>{"p_{q} - \\dot{q} = 0", "\\dot{p}_{q} + q = 0"});
  CHECK_FALSE(d.is_algebraic(0));

  const MechModel sing = lag({"x1", "x2"}, "0.5*(v_x1 - v_x2)^2");
  const ImplicitSystem s = lagrangian_dynamics(sing);
  REQUIRE(s.equations.size() == 4);
  CHECK(same(s.equations[0], parse("p_x1 - (v_x1 - v_x2)")));
  CHECK(same(s.equations[1], parse("p_x2 + (v_x1 - v_x2)")));
  CHECK(same(s.equations[2], parse("pdot_x1")));
  CHECK(same(s.equations[3], parse("pdot_x2")));
  CHECK(same(s.equations[0] + s.equations[1], parse("p_x1 + p_x2")));

  const MechModel pot = lag({"q"}, "0.5*v_q^2 - (q^4 + sin(q))");
  const ImplicitSystem g = lagrangian_dynamics(pot);
  CHECK(same(g.equations[0], parse("p_q - v_q")));
  CHECK(same(g.equations[1], parse("pdot_q + 4*q^3 + cos(q)")));
}

TEST_CASE("lagrangian dynamics: validation") {
  CHECK_THROWS_AS(lagrangian_dynamics(lag({"q"}, "0.5*v_r^2")), Error);
  CHECK_THROWS_AS(lagrangian_dynamics(MechModel{{"q"}, std::nullopt, parse("0.5*p_q^2"), ""}), Error);
  CHECK_THROWS_AS(MechModel({}, parse("1"), std::nullopt, "").validate(), Error);
  CHECK_NOTHROW(lag({"q"}, "0.5*v_q^2 + t*q", "t").validate());
  CHECK_THROWS_AS(lag({"q"}, "0.5*v_q^2 + t*q").validate(), Error);
}

TEST_CASE("euler-lagrange: examples and golden text") {
  const MechModel ho = lag({"q"}, "0.5*(v_q^2 - q^2)");
  const auto el = euler_lagrange(ho);
  const VarTable vt = euler_lagrange_vars(ho);
  CHECK(format_equation(el[0], &vt) == "qddot + q = 0");
  CHECK(format_equation_latex(el[0], &vt) == "\\ddot{q} + q = 0");

  const auto free = euler_lagrange(lag({"q"}, "0.5*v_q^2"));
  CHECK(same(free[0], parse("-qddot")));

  const auto ex = euler_lagrange(lag({"q"}, "0.5*exp(q)*v_q^2"));
  CHECK(same(ex[0], parse("0.5*exp(q)*v_q^2 - exp(q)*v_q^2 - exp(q)*qddot")));

  const auto td = euler_lagrange(lag({"q"}, "0.5*t^2*v_q^2", "t"));
  CHECK(same(td[0], parse("-(2*t*v_q + t^2*qddot)")));
}

TEST_CASE("euler-lagrange residual matches the action-gradient oracle") {
  // Perturbing q by a bump localized on interior nodes isolates the EL
  // term: the boundary term vanishes.
  const MechModel m = lag({"q"}, "0.5*exp(q)*v_q^2");
  double prev = 0.0;
  for (int N : {65, 129, 257, 513}) {
    const PathSample p = sampled(N, 0.0, 1.0, [](double t) { return Vec{0.3 * std::sin(2.0 * t) + 0.1 * t}; });
    const auto dq = sampled_variation(p, [](double t) { return Vec{std::pow(t * (1.0 - t), 3) * std::cos(t)}; });
    const ActionVariation av = action_variation(m, p, dq);
    const double err = std::abs(av.lhs - av.rhs);
    if (prev > 0.0) CHECK(std::log2(prev / err) >= 1.9);
    prev = err;
  }
}

TEST_CASE("legendre map and Hessian probe") {
  const MechModel ho = lag({"q"}, "0.5*(v_q^2 - q^2)");
  const LegendreMap lm = legendre(ho);
  CHECK(same(lm.momenta[0], parse("v_q")));
  CHECK(hessian_rank(lm, ho, {0.3}, {-1.0}) == 1);
  CHECK(probe_hessian(ho).min_rank == 1);

  const MechModel sing = lag({"x1", "x2"}, "0.5*(v_x1 - v_x2)^2");
  const HessianProbe sp = probe_hessian(sing);
  CHECK(sp.points == 32);
  CHECK(sp.min_rank == 1);
  CHECK(sp.max_rank == 1);
  CHECK(sp.min_abs_eigenvalue <= 1e-12);

  const MechModel quartic = lag({"q"}, "0.25*v_q^4");
  const LegendreMap ql = legendre(quartic);
  CHECK(same(ql.momenta[0], parse("v_q^3")));
  CHECK(hessian_rank(ql, quartic, {0.0}, {0.0}) == 0);
  CHECK(hessian_rank(ql, quartic, {0.0}, {1e-3}) == 1);
  CHECK(probe_hessian(quartic).min_rank == 1);
}

TEST_CASE("hamiltonize: quadratic Lagrangians") {
  const HamiltonizeResult ho = hamiltonize(lag({"q"}, "0.5*(v_q^2 - q^2)"));
  REQUIRE(ho.symbolic());
  CHECK(same(ho.hamiltonian(), parse("0.5*(p_q^2 + q^2)")));

  const HamiltonizeResult fr = hamiltonize(lag({"q"}, "0.5*v_q^2"));
  REQUIRE(fr.symbolic());
  CHECK(same(fr.hamiltonian(), parse("0.5*p_q^2")));

  // Coupled mass matrix with a gyroscopic term.
  const MechModel m = lag({"a", "b"}, "v_a^2 + v_a*v_b + v_b^2 + a*v_b - cos(b)");
  const HamiltonizeResult r = hamiltonize(m);
  REQUIRE(r.symbolic());
  std::mt19937_64 rng(5);
  for (int k = 0; k < 20; ++k) {
    const Vec x = test::random_vec(rng, 2), v = test::random_vec(rng, 2);
    const PointTuple pt = point(m, x, v);
    const Vec p = grad(*m.L, m.velocities(), pt);
    const double H = evaluate(r.hamiltonian(), {{"a", x[0]}, {"b", x[1]}, {"p_a", p[0]}, {"p_b", p[1]}});
    CHECK(H == doctest::Approx(p[0] * v[0] + p[1] * v[1] - evaluate(*m.L, pt)).epsilon(1e-12));
  }
}

TEST_CASE("hamiltonize: singular Lagrangian gives the generating family") {
  const MechModel m = lag({"x1", "x2"}, "0.5*(v_x1 - v_x2)^2");
  const HamiltonizeResult r = hamiltonize(m);
  REQUIRE(r.singular());
  const GeneratingFamilyReport& f = r.family();
  CHECK(same(f.family, parse("0.5*(v_x1 - v_x2)^2 - p_x1*v_x1 - p_x2*v_x2")));
  CHECK(f.parameters == std::vector<std::string>{"v_x1", "v_x2"});
  CHECK(f.probe.min_rank == 1);
  CHECK_FALSE(f.reason.empty());
  // Critical points of the family in v recover the Legendre relations.
  for (std::size_t i = 0; i < 2; ++i) {
    CHECK(same(diff(f.family, f.parameters[i]), lagrangian_dynamics(m).equations[i] * Expr(-1.0)));
  }
}

TEST_CASE("hamiltonize: non-quadratic Lagrangian falls back to Newton") {
  const MechModel m = lag({"q"}, "0.25*v_q^4 + 0.5*v_q^2 - q^2");
  const HamiltonizeResult r = hamiltonize(m);
  REQUIRE(std::holds_alternative<NumericHamiltonian>(r.value));
  const auto& nh = std::get<NumericHamiltonian>(r.value);
  for (double v : {-1.3, -0.2, 0.5, 2.0}) {
    const double q = 0.4, p = v * v * v + v;
    CHECK(nh.velocity({q}, {p})[0] == doctest::Approx(v).epsilon(1e-10));
    CHECK(nh({q}, {p}) == doctest::Approx(p * v - (0.25 * std::pow(v, 4) + 0.5 * v * v - q * q)).epsilon(1e-10));
  }
  const MechModel pure = lag({"q"}, "0.25*v_q^4");
  const HamiltonizeResult pr = hamiltonize(pure);
  const auto& pq = std::get<NumericHamiltonian>(pr.value);
  CHECK(pq({0.0}, {8.0}) == doctest::Approx(0.75 * std::pow(8.0, 4.0 / 3.0)).epsilon(1e-10));
}

TEST_CASE("hamiltonian dynamics and beta consistency") {
  const MechModel ho{{"q"}, std::nullopt, parse("0.5*(p_q^2 + q^2)"), ""};
  const ImplicitSystem d = hamiltonian_dynamics(ho);
  REQUIRE(d.rhs.size() == 2);
  CHECK(same(d.rhs[0], parse("p_q")));
  CHECK(same(d.rhs[1], parse("-q")));

  const MechModel gen{{"a", "b"}, std::nullopt, parse("0.5*(p_a^2 + p_b^2) + a^2*b - b^3/3"), ""};
  const ImplicitSystem g = hamiltonian_dynamics(gen);
  CHECK(same(g.rhs[2], parse("-2*a*b")));
  CHECK(same(g.rhs[3], parse("b^2 - a^2")));

  std::mt19937_64 rng(9);
  for (int k = 0; k < 50; ++k) {
    const Vec x = test::random_vec(rng, 2), p = test::random_vec(rng, 2);
    const PointTuple pt{{"a", x[0]}, {"b", x[1]}, {"p_a", p[0]}, {"p_b", p[1]}};
    const Vec Hx = grad(*gen.H, gen.coords, pt), Hp = grad(*gen.H, gen.momenta(), pt);
    const CotangentOfBundlePoint dH{x, p, Hx, Hp};
    const TTStarMPoint tuple{x, p, Hp, {-Hx[0], -Hx[1]}};
    CHECK(beta_mech(tuple) == dH);
    CHECK(max_abs(dynamics_residual(g, tuple)) <= 1e-14);
  }
}

TEST_CASE("triple consistency for a hyperregular Lagrangian") {
  const MechModel m = lag({"a", "b"}, "0.5*exp(a)*v_a^2 + 0.5*(1 + b^2)*v_b^2 + v_a*v_b*0.25 + sin(a)*v_b - a*b");
  const HamiltonizeResult r = hamiltonize(m);
  REQUIRE(r.symbolic());
  MechModel mh = m;
  mh.H = r.hamiltonian();
  const ImplicitSystem lsys = lagrangian_dynamics(m), hsys = hamiltonian_dynamics(mh);

  std::mt19937_64 rng(21);
  for (int k = 0; k < 100; ++k) {
    const Vec x = test::random_vec(rng, 2), v = test::random_vec(rng, 2);
    const PointTuple pt = point(m, x, v);
    const TTStarMPoint tup{x, grad(*m.L, m.velocities(), pt), v, grad(*m.L, m.coords, pt)};
    CHECK(max_abs(dynamics_residual(lsys, tup)) <= 1e-12);
    CHECK(max_abs(dynamics_residual(hsys, tup)) <= 1e-9);

    // And back: Hamilton's equations produce Lagrangian tuples.
    const Vec p = test::random_vec(rng, 2);
    const PointTuple hp{{"a", x[0]}, {"b", x[1]}, {"p_a", p[0]}, {"p_b", p[1]}};
    const Vec Hp = grad(*mh.H, mh.momenta(), hp), Hx = grad(*mh.H, mh.coords, hp);
    const TTStarMPoint back{x, p, Hp, {-Hx[0], -Hx[1]}};
    CHECK(max_abs(dynamics_residual(hsys, back)) <= 1e-12);
    CHECK(max_abs(dynamics_residual(lsys, back)) <= 1e-9);
  }
}

TEST_CASE("alpha consistency") {
  const MechModel m = lag({"a", "b"}, "0.5*(v_a^2 + v_b^2) + v_a*b - cos(a)*b^2");
  const ImplicitSystem sys = lagrangian_dynamics(m);
  std::mt19937_64 rng(4);
  for (int k = 0; k < 50; ++k) {
    const Vec x = test::random_vec(rng, 2), v = test::random_vec(rng, 2);
    const PointTuple pt = point(m, x, v);
    const Vec Lx = grad(*m.L, m.coords, pt), Lv = grad(*m.L, m.velocities(), pt);
    const CotangentOfBundlePoint dL{x, v, Lx, Lv};
    const TTStarMPoint on = alpha_mech_inverse(dL);
    CHECK(alpha_mech(on) == dL);
    CHECK(max_abs(dynamics_residual(sys, on)) <= 1e-14);

    TTStarMPoint off = on;
    off.pdot[k % 2] += 0.5;
    CHECK_FALSE(alpha_mech(off) == dL);
    CHECK(max_abs(dynamics_residual(sys, off)) == doctest::Approx(0.5));
  }
}

TEST_CASE("action variation: harmonic oscillator convergence") {
  const MechModel ho = lag({"q"}, "0.5*(v_q^2 - q^2)");
  std::vector<double> errs;
  for (int N : {64, 128, 256, 512}) {
    const PathSample p = sampled(N, 0.0, 1.0, [](double t) { return Vec{std::sin(t)}; });
    const auto dq = sampled_variation(p, [](double t) { return Vec{t * (1.0 - t)}; });
    const ActionVariation av = action_variation(ho, p, dq);
    errs.push_back(std::abs(av.lhs - av.rhs));
  }
  for (std::size_t i = 1; i < errs.size(); ++i) CHECK(std::log2(errs[i - 1] / errs[i]) >= 1.9);
}

TEST_CASE("action variation: boundary term and degenerate inputs") {
  const MechModel ho = lag({"q"}, "0.5*(v_q^2 - q^2)");
  const PathSample p = sampled(256, 0.0, 1.0, [](double t) { return Vec{std::sin(t)}; });

  const ActionVariation zero = action_variation(ho, p, std::vector<Vec>(256, Vec{0.0}));
  CHECK(zero.lhs == 0.0);
  CHECK(zero.rhs == 0.0);

  // sin t solves the oscillator, so a variation fixed at the ends gives ~0.
  const auto fixed = sampled_variation(p, [](double t) { return Vec{std::sin(3.0 * t) * t * (1.0 - t)}; });
  const ActionVariation onshell = action_variation(ho, p, fixed);
  CHECK(std::abs(onshell.lhs) <= 1e-4);
  CHECK(std::abs(onshell.rhs) <= 1e-4);

  // On shell a constant shift sees only the boundary momenta cos 1 - cos 0.
  const ActionVariation shift = action_variation(ho, p, std::vector<Vec>(256, Vec{1.0}));
  const double exact = std::cos(1.0) - 1.0;
  CHECK(shift.rhs == doctest::Approx(exact).epsilon(1e-4));
  CHECK(shift.lhs == doctest::Approx(exact).epsilon(1e-4));

  const PathSample coarse = sampled(15, 0.0, 1.0, [](double t) { return Vec{t}; });
  CHECK_THROWS_AS(action_variation(ho, coarse, std::vector<Vec>(15, Vec{0.0})), Error);
  CHECK_THROWS_AS(action_variation(ho, p, std::vector<Vec>(10, Vec{0.0})), ShapeError);
}

TEST_CASE("action variation: two degrees of freedom with explicit time") {
  const MechModel m = lag({"a", "b"}, "0.5*(v_a^2 + (1 + t)*v_b^2) - a*b*t", "t");
  std::vector<double> errs;
  for (int N : {64, 128, 256, 512}) {
    const PathSample p = sampled(N, 0.5, 2.0, [](double t) { return Vec{std::cos(t), t * t}; });
    const auto dq = sampled_variation(p, [](double t) { return Vec{std::exp(-t), std::sin(t)}; });
    const ActionVariation av = action_variation(m, p, dq);
    errs.push_back(std::abs(av.lhs - av.rhs));
  }
  for (std::size_t i = 1; i < errs.size(); ++i) CHECK(std::log2(errs[i - 1] / errs[i]) >= 1.9);
}
