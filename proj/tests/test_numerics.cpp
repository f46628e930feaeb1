#include <doctest.h>

#include <cmath>
#include <numbers>
#include <sstream>

#include "test_support.hpp"
#include "ttriple/mechanics.hpp"
#include "ttriple/numerics.hpp"

using namespace ttriple;

namespace {

MechModel oscillator() { return MechModel{{"q"}, parse("0.5*(v_q^2 - q^2)"), parse("0.5*(p_q^2 + q^2)"), ""}; }

NewtonConfig tight() {
  NewtonConfig cfg;
  cfg.tol = 1e-12;
  return cfg;
}

// Implicit midpoint on qdot = p, pdot = -q is the Cayley transform of the
// rotation generator: a rotation by theta with tan(theta/2) = h/2.
std::pair<double, double> cayley_state(double h, int steps) {
  const double theta = 2.0 * std::atan(0.5 * h);
  return {std::cos(steps * theta), -std::sin(steps * theta)};
}

double global_error(const ImplicitSystem& sys, double h) {
  const Trajectory tr = integrate_phase(sys, {1.0, 0.0}, 0.0, 1.0, h, tight());
  const Vec& z = tr.states.back();
  return std::hypot(z[0] - std::cos(1.0), z[1] + std::sin(1.0));
}

}  // namespace

TEST_CASE("newton: scalar root and linear system") {
  NewtonConfig cfg;
  const NewtonResult r = newton_solve({parse("x^2 - 4")}, {"x"}, {1.0}, cfg);
  CHECK(r.x[0] == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(r.residual <= cfg.tol);

  const NewtonResult lin = newton_solve({parse("2*x + y - 3"), parse("x - y")}, {"x", "y"}, {5.0, -7.0}, cfg);
  CHECK(lin.iterations == 1);
  CHECK(lin.x[0] == doctest::Approx(1.0));
  CHECK(lin.x[1] == doctest::Approx(1.0));
}

TEST_CASE("newton: parameters, singular Jacobian and non-convergence") {
  NewtonConfig cfg;
  const NewtonResult r = newton_solve({parse("x^3 - a")}, {"x"}, {1.0}, cfg, {{"a", 27.0}});
  CHECK(r.x[0] == doctest::Approx(3.0));

  try {
    newton_solve({parse("x + y - 1"), parse("2*x + 2*y - 2")}, {"x", "y"}, {0.0, 0.0}, cfg);
    FAIL("expected singular Jacobian");
  } catch (const NewtonError& e) {
    CHECK(e.kind() == NewtonError::Kind::singular_jacobian);
  }

  NewtonConfig few = cfg;
  few.max_iter = 2;
  try {
    newton_solve({parse("exp(x) - 1000")}, {"x"}, {0.0}, few);
    FAIL("expected non-convergence");
  } catch (const NewtonError& e) {
    CHECK(e.kind() == NewtonError::Kind::no_convergence);
  }

  NewtonConfig bad;
  bad.tol = 0.0;
  CHECK_THROWS_AS(bad.validate(), Error);
}

TEST_CASE("newton: finite-difference Jacobian agrees with symbolic") {
  NewtonConfig fd;
  fd.jacobian = NewtonConfig::Jacobian::fd;
  const std::vector<Expr> F{parse("sin(x) + y^2 - 1"), parse("x*y - 0.25")};
  const NewtonResult a = newton_solve(F, {"x", "y"}, {0.5, 0.5}, NewtonConfig{});
  const NewtonResult b = newton_solve(F, {"x", "y"}, {0.5, 0.5}, fd);
  CHECK(a.x[0] == doctest::Approx(b.x[0]).epsilon(1e-9));
  CHECK(a.x[1] == doctest::Approx(b.x[1]).epsilon(1e-9));
}

TEST_CASE("integrate: harmonic oscillator matches the Cayley rotation") {
  const ImplicitSystem sys = lagrangian_dynamics(oscillator());
  const double h = 0.01;
  const Trajectory tr = integrate_phase(sys, {1.0, 0.0}, 0.0, 2.0 * std::numbers::pi, h, tight());
  REQUIRE(tr.complete());
  const int steps = static_cast<int>(tr.states.size()) - 1;
  CHECK(steps == 629);
  CHECK(tr.times.back() == doctest::Approx(2.0 * std::numbers::pi).epsilon(1e-15));
  const double heff = tr.times[1] - tr.times[0];
  for (int k : {1, 100, steps}) {
    const auto [x, p] = cayley_state(heff, k);
    CHECK(std::abs(tr.states[k][0] - x) <= 1e-10);
    CHECK(std::abs(tr.states[k][1] - p) <= 1e-10);
  }
  // Distance from the exact period is the scheme's phase error, of order T h^2 / 12.
  const double err = std::hypot(tr.states.back()[0] - 1.0, tr.states.back()[1]);
  CHECK(err <= 2.0 * std::numbers::pi * heff * heff / 12.0 * 1.01);
  for (std::size_t k = 1; k < tr.times.size(); ++k) CHECK(tr.times[k] > tr.times[k - 1]);
}

TEST_CASE("integrate: second-order convergence") {
  const ImplicitSystem sys = lagrangian_dynamics(oscillator());
  double prev = global_error(sys, 0.1);
  for (double h : {0.05, 0.025, 0.0125}) {
    const double e = global_error(sys, h);
    CHECK(std::log2(prev / e) >= 1.9);
    prev = e;
  }
}

TEST_CASE("integrate: Hamiltonian and Lagrangian forms agree") {
  const MechModel m = oscillator();
  const Trajectory a = integrate_phase(lagrangian_dynamics(m), {0.3, -0.8}, 0.0, 3.0, 0.05, tight());
  const Trajectory b = integrate_phase(hamiltonian_dynamics(m), {0.3, -0.8}, 0.0, 3.0, 0.05, tight());
  REQUIRE(a.states.size() == b.states.size());
  for (std::size_t k = 0; k < a.states.size(); ++k) {
    CHECK(std::abs(a.states[k][0] - b.states[k][0]) <= 1e-10);
    CHECK(std::abs(a.states[k][1] - b.states[k][1]) <= 1e-10);
  }
}

TEST_CASE("integrate: free particle is exact") {
  const MechModel m{{"q"}, parse("0.5*v_q^2"), std::nullopt, ""};
  const Trajectory tr = integrate_phase(lagrangian_dynamics(m), {0.25, 1.5}, 0.0, 2.0, 0.1, tight());
  REQUIRE(tr.complete());
  for (std::size_t k = 0; k < tr.times.size(); ++k) {
    CHECK(std::abs(tr.states[k][0] - (0.25 + 1.5 * tr.times[k])) <= 1e-13);
    CHECK(tr.states[k][1] == 1.5);
  }
}

TEST_CASE("integrate: singular Lagrangian keeps its constraint") {
  const MechModel m{{"x1", "x2"}, parse("0.5*(v_x1 - v_x2)^2"), std::nullopt, ""};
  const ImplicitSystem sys = lagrangian_dynamics(m);
  const Trajectory tr = integrate_phase(sys, {0.1, -0.2, 0.7, -0.7}, 0.0, 10.0, 0.01);
  REQUIRE(tr.complete());
  CHECK(tr.states.size() == 1001);
  double worst = 0.0;
  for (const auto& z : tr.states) worst = std::max(worst, std::abs(z[2] + z[3]));
  CHECK(worst <= 1e-9);
  // The relative coordinate moves with rate p1; the centre is free.
  const Vec& z = tr.states.back();
  CHECK((z[0] - z[1]) == doctest::Approx(0.3 + 0.7 * 10.0).epsilon(1e-9));

  try {
    integrate_phase(sys, {0.0, 0.0, 1.0, 1.0}, 0.0, 1.0, 0.1);
    FAIL("expected inconsistent initial data");
  } catch (const InconsistentInitialData& e) {
    CHECK(e.residual() > 1e-8);
  }
}

TEST_CASE("integrate: quadratic energy is conserved over 1e4 steps") {
  const MechModel m = oscillator();
  NewtonConfig cfg;  // tol 1e-10
  const Trajectory tr = integrate_phase(hamiltonian_dynamics(m), {1.0, 0.0}, 0.0, 100.0, 0.01, cfg);
  REQUIRE(tr.complete());
  CHECK(tr.states.size() == 10001);
  auto H = [](const Vec& z) { return 0.5 * (z[0] * z[0] + z[1] * z[1]); };
  double drift = 0.0;
  for (const auto& z : tr.states) drift = std::max(drift, std::abs(H(z) - H(tr.states.front())));
  CHECK(drift <= 10.0 * cfg.tol);
}

TEST_CASE("integrate: step map is symplectic") {
  const MechModel pend{{"q"}, parse("0.5*v_q^2 + cos(q)"), std::nullopt, ""};
  const ImplicitSystem sys = lagrangian_dynamics(pend);
  const Trajectory tr = integrate_phase(sys, {1.0, 0.2}, 0.0, 5.0, 0.05, tight());
  REQUIRE(tr.complete());
  const double h = tr.times[1] - tr.times[0];
  for (std::size_t k = 0; k + 1 < tr.states.size(); k += 10) {
    const Eigen::MatrixXd J = step_jacobian(sys, tr.times[k], h, tr.states[k], tr.states[k + 1]);
    CHECK(symplecticity_defect(J) <= 1e-8);
  }
  // A non-symplectic map is detected.
  Eigen::MatrixXd S = Eigen::MatrixXd::Identity(2, 2);
  S(0, 0) = 2.0;
  CHECK(symplecticity_defect(S) == doctest::Approx(1.0));
}

TEST_CASE("integrate: step Jacobian matches finite differences of the step") {
  const MechModel pend{{"q"}, parse("0.5*v_q^2 + cos(q)"), std::nullopt, ""};
  const ImplicitSystem sys = lagrangian_dynamics(pend);
  const double h = 0.1;
  const Vec z{0.4, -0.3};
  auto step = [&](const Vec& z0) { return integrate_phase(sys, z0, 0.0, h, h, tight()).states.back(); };
  const Eigen::MatrixXd J = step_jacobian(sys, 0.0, h, z, step(z));
  for (int j = 0; j < 2; ++j) {
    Vec zp = z, zm = z;
    zp[j] += 1e-6;
    zm[j] -= 1e-6;
    const Vec a = step(zp), b = step(zm);
    for (int i = 0; i < 2; ++i) CHECK(J(i, j) == doctest::Approx((a[i] - b[i]) / 2e-6).epsilon(1e-6));
  }
}

TEST_CASE("trajectory csv") {
  const Trajectory tr = integrate_phase(lagrangian_dynamics(oscillator()), {1.0, 0.0}, 0.0, 0.2, 0.1, tight());
  std::ostringstream os;
  tr.write_csv(os);
  std::istringstream is(os.str());
  std::string line;
  std::getline(is, line);
  CHECK(line == "t,x1,p1");
  int rows = 0;
  while (std::getline(is, line)) ++rows;
  CHECK(rows == 3);
}

TEST_CASE("fd_gradient") {
  const Vec g = fd_gradient([](const Vec& x) { return x[0] * x[0]; }, {3.0}, 1e-5);
  CHECK(std::abs(g[0] - 6.0) <= 1e-8);
  const Vec l = fd_gradient([](const Vec& x) { return 2.0 * x[0] - 3.0 * x[1]; }, {0.5, 0.25}, 1e-3);
  CHECK(std::abs(l[0] - 2.0) <= 1e-12);
  CHECK(std::abs(l[1] + 3.0) <= 1e-12);
  const Vec s = fd_gradient([](const Vec& x) { return std::sin(x[0]); }, {0.7}, 1e-5);
  CHECK(std::abs(s[0] - std::cos(0.7)) <= 1e-9);
}
