#include "ttriple/mechanics.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <random>
#include <set>

namespace ttriple {

namespace {

PointTuple assign(const std::vector<std::string>& names, const Vec& values, PointTuple pt = {}) {
  if (names.size() != values.size()) throw ShapeError("value count does not match variable count");
  for (std::size_t i = 0; i < names.size(); ++i) pt[names[i]] = values[i];
  return pt;
}

Vec eval_all(const std::vector<Expr>& es, const PointTuple& pt) {
  Vec out(es.size());
  for (std::size_t i = 0; i < es.size(); ++i) out[i] = evaluate(es[i], pt);
  return out;
}

bool mentions_any(const Expr& e, const std::vector<std::string>& names) {
  for (const auto& n : names) {
    if (contains_variable(e, n)) return true;
  }
  return false;
}

// Solve A v = b for v by Gaussian elimination on expressions. The pivot is
// the first entry that does not simplify to the zero constant.
std::vector<Expr> symbolic_solve(std::vector<std::vector<Expr>> A, std::vector<Expr> b, const VarTable* vars) {
  const std::size_t n = b.size();
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t piv = n;
    for (std::size_t r = c; r < n; ++r) {
      if (!simplify(A[r][c], vars).is_number(0.0)) {
        piv = r;
        break;
      }
    }
    if (piv == n) throw Error("velocity Hessian is structurally singular");
    std::swap(A[c], A[piv]);
    std::swap(b[c], b[piv]);
    for (std::size_t r = c + 1; r < n; ++r) {
      if (simplify(A[r][c], vars).is_number(0.0)) continue;
      const Expr f = A[r][c] / A[c][c];
      for (std::size_t k = c; k < n; ++k) A[r][k] = simplify(A[r][k] - f * A[c][k], vars);
      b[r] = simplify(b[r] - f * b[c], vars);
    }
  }
  std::vector<Expr> v(n);
  for (std::size_t i = n; i-- > 0;) {
    Expr acc = b[i];
    for (std::size_t k = i + 1; k < n; ++k) acc = acc - A[i][k] * v[k];
    v[i] = simplify(acc / A[i][i], vars);
  }
  return v;
}

}  // namespace

std::vector<std::string> MechModel::velocities() const {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < dim(); ++i) out.push_back(velocity(i));
  return out;
}

std::vector<std::string> MechModel::momenta() const {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < dim(); ++i) out.push_back(momentum(i));
  return out;
}

VarTable MechModel::vars() const {
  VarTable vt;
  for (std::size_t i = 0; i < dim(); ++i) {
    const std::string s = latex_identifier(coords[i]);
    vt.add(coords[i], VarRole::fiber, s);
    vt.add(velocity(i), VarRole::velocity, "\\dot{" + s + "}");
    vt.add(momentum(i), VarRole::momentum, "p_{" + s + "}");
    vt.add(momentum_rate(i), VarRole::momentum_jet, "\\dot{p}_{" + s + "}");
  }
  if (!time.empty()) vt.add(time, VarRole::base);
  return vt;
}

void MechModel::validate() const {
  if (coords.empty()) throw Error("mechanics model needs at least one coordinate");
  if (!L && !H) throw Error("mechanics model needs a Lagrangian or a Hamiltonian");
  std::set<std::string> seen;
  const VarTable table = vars();
  for (const auto& v : table.entries()) {
    if (!seen.insert(v.name).second) throw Error("duplicate variable name " + v.name);
  }
  auto check = [&](const Expr& e, const std::vector<std::string>& second, const char* what) {
    std::set<std::string> allowed(coords.begin(), coords.end());
    allowed.insert(second.begin(), second.end());
    if (!time.empty()) allowed.insert(time);
    for (const auto& v : free_variables(e)) {
      if (!allowed.count(v)) throw Error(std::string(what) + " uses undeclared variable " + v);
    }
  };
  if (L) check(*L, velocities(), "Lagrangian");
  if (H) check(*H, momenta(), "Hamiltonian");
}

// ---------------------------------------------------------------- statics

double StaticsModel::cost(const Vec& q, const Vec& dq) const {
  PointTuple pt = assign(coords, q);
  if (W) {
    for (std::size_t i = 0; i < coords.size(); ++i) pt[variation(i)] = dq.at(i);
    return evaluate(*W, pt);
  }
  const Vec dU = constitutive_set(*this, q);
  double s = 0.0;
  for (std::size_t i = 0; i < dU.size(); ++i) s += dU[i] * dq.at(i);
  return s;
}

Vec constitutive_set(const StaticsModel& s, const Vec& q) {
  if (!s.U) throw Error("constitutive_set needs a potential U");
  const PointTuple pt = assign(s.coords, q);
  Vec out(s.coords.size());
  for (std::size_t i = 0; i < s.coords.size(); ++i) out[i] = evaluate(diff(*s.U, s.coords[i]), pt);
  return out;
}

EquilibriumVerdict equilibrium_test(const StaticsModel& s, const Vec& q, int samples, std::uint64_t seed) {
  if (!s.W && !s.U) throw Error("equilibrium_test needs a cost W or a potential U");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd;
  const std::size_t n = s.coords.size();
  EquilibriumVerdict out;
  for (int k = 0; k < samples; ++k) {
    Vec dq(n);
    bool found = false;
    for (int attempt = 0; attempt < 1000 && !found; ++attempt) {
      double norm = 0.0;
      for (double& x : dq) {
        x = nd(rng);
        norm += x * x;
      }
      norm = std::sqrt(norm);
      if (norm == 0.0) continue;
      for (double& x : dq) x /= norm;
      found = !s.admissible || s.admissible(q, dq);
    }
    if (!found) continue;
    ++out.samples;
    const double w = s.cost(q, dq);
    if (w < -1e-12) {
      out.pass = false;
      out.violating = dq;
      out.value = w;
      return out;
    }
  }
  return out;
}

double homogeneity_defect(const StaticsModel& s, int samples, std::uint64_t seed) {
  if (!s.W) throw Error("homogeneity_defect needs a cost W");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0), tt(0.01, 3.0);
  const std::size_t n = s.coords.size();
  double worst = 0.0;
  for (int k = 0; k < samples; ++k) {
    Vec q(n), dq(n);
    for (double& x : q) x = u(rng);
    for (double& x : dq) x = u(rng);
    const double t = tt(rng);
    Vec tdq = dq;
    for (double& x : tdq) x *= t;
    worst = std::max(worst, std::abs(s.cost(q, tdq) - t * s.cost(q, dq)));
  }
  return worst;
}

// -------------------------------------------------------------- dynamics

ImplicitSystem lagrangian_dynamics(const MechModel& m) {
  m.validate();
  if (!m.L) throw Error("lagrangian_dynamics needs a Lagrangian");
  ImplicitSystem sys;
  sys.vars = m.vars();
  sys.independent = m.time;
  for (std::size_t j = 0; j < m.dim(); ++j) {
    const Expr pj = Expr::variable(m.momentum(j));
    sys.equations.push_back(simplify(pj - diff(*m.L, m.velocity(j), &sys.vars), &sys.vars));
  }
  for (std::size_t l = 0; l < m.dim(); ++l) {
    const Expr pdot = Expr::variable(m.momentum_rate(l));
    sys.equations.push_back(simplify(pdot - diff(*m.L, m.coords[l], &sys.vars), &sys.vars));
  }
  sys.state = m.coords;
  for (const auto& p : m.momenta()) sys.state.push_back(p);
  sys.rates = m.velocities();
  for (std::size_t i = 0; i < m.dim(); ++i) sys.rates.push_back(m.momentum_rate(i));
  return sys;
}

ImplicitSystem hamiltonian_dynamics(const MechModel& m) {
  m.validate();
  if (!m.H) throw Error("hamiltonian_dynamics needs a Hamiltonian");
  ImplicitSystem sys;
  sys.vars = m.vars();
  sys.independent = m.time;
  for (std::size_t j = 0; j < m.dim(); ++j) {
    const Expr rhs = diff(*m.H, m.momentum(j), &sys.vars);
    sys.rhs.push_back(rhs);
    sys.equations.push_back(simplify(Expr::variable(m.velocity(j)) - rhs, &sys.vars));
  }
  for (std::size_t j = 0; j < m.dim(); ++j) {
    const Expr rhs = simplify(-diff(*m.H, m.coords[j], &sys.vars), &sys.vars);
    sys.rhs.push_back(rhs);
    sys.equations.push_back(simplify(Expr::variable(m.momentum_rate(j)) - rhs, &sys.vars));
  }
  sys.state = m.coords;
  for (const auto& p : m.momenta()) sys.state.push_back(p);
  sys.rates = m.velocities();
  for (std::size_t i = 0; i < m.dim(); ++i) sys.rates.push_back(m.momentum_rate(i));
  return sys;
}

VarTable euler_lagrange_vars(const MechModel& m) {
  VarTable vt;
  for (std::size_t i = 0; i < m.dim(); ++i) {
    const std::string s = latex_identifier(m.coords[i]);
    vt.add(m.acceleration(i), VarRole::second_jet, "\\ddot{" + s + "}");
    vt.add(m.velocity(i), VarRole::velocity, "\\dot{" + s + "}");
    vt.add(m.coords[i], VarRole::fiber, s);
  }
  if (!m.time.empty()) vt.add(m.time, VarRole::base);
  return vt;
}

std::vector<Expr> euler_lagrange(const MechModel& m) {
  m.validate();
  if (!m.L) throw Error("euler_lagrange needs a Lagrangian");
  const VarTable vt = euler_lagrange_vars(m);
  std::vector<Expr> out;
  for (std::size_t i = 0; i < m.dim(); ++i) {
    const Expr dLdv = diff(*m.L, m.velocity(i), &vt);
    Expr total = m.time.empty() ? Expr(0.0) : diff(dLdv, m.time, &vt);
    for (std::size_t j = 0; j < m.dim(); ++j) {
      total = total + diff(dLdv, m.coords[j], &vt) * Expr::variable(m.velocity(j)) +
              diff(dLdv, m.velocity(j), &vt) * Expr::variable(m.acceleration(j));
    }
    out.push_back(simplify(diff(*m.L, m.coords[i], &vt) - total, &vt));
  }
  return out;
}

LegendreMap legendre(const MechModel& m) {
  m.validate();
  if (!m.L) throw Error("legendre needs a Lagrangian");
  const VarTable vt = m.vars();
  LegendreMap lm;
  for (std::size_t j = 0; j < m.dim(); ++j) lm.momenta.push_back(diff(*m.L, m.velocity(j), &vt));
  for (std::size_t i = 0; i < m.dim(); ++i) {
    std::vector<Expr> row;
    for (std::size_t j = 0; j < m.dim(); ++j) row.push_back(diff(lm.momenta[i], m.velocity(j), &vt));
    lm.hessian.push_back(std::move(row));
  }
  return lm;
}

namespace {

Eigen::VectorXd hessian_eigenvalues(const LegendreMap& lm, const MechModel& m, const Vec& x, const Vec& v) {
  PointTuple pt = assign(m.velocities(), v, assign(m.coords, x));
  if (!m.time.empty()) pt[m.time] = 0.0;
  const auto n = static_cast<Eigen::Index>(m.dim());
  Eigen::MatrixXd Hm(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) Hm(i, j) = evaluate(lm.hessian[i][j], pt);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (Hm + Hm.transpose()), Eigen::EigenvaluesOnly);
  return es.eigenvalues();
}

}  // namespace

int hessian_rank(const LegendreMap& lm, const MechModel& m, const Vec& x, const Vec& v, double threshold) {
  const Eigen::VectorXd ev = hessian_eigenvalues(lm, m, x, v);
  int r = 0;
  for (Eigen::Index i = 0; i < ev.size(); ++i) r += std::abs(ev(i)) > threshold ? 1 : 0;
  return r;
}

HessianProbe probe_hessian(const MechModel& m, int points, double box, std::uint64_t seed, double threshold) {
  const LegendreMap lm = legendre(m);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-box, box);
  HessianProbe pr;
  pr.min_rank = static_cast<int>(m.dim());
  pr.min_abs_eigenvalue = std::numeric_limits<double>::infinity();
  for (int k = 0; k < points; ++k) {
    Vec x(m.dim()), v(m.dim());
    for (double& c : x) c = u(rng);
    for (double& c : v) c = u(rng);
    Eigen::VectorXd ev;
    try {
      ev = hessian_eigenvalues(lm, m, x, v);
    } catch (const EvalError&) {
      continue;
    }
    ++pr.points;
    int r = 0;
    for (Eigen::Index i = 0; i < ev.size(); ++i) {
      r += std::abs(ev(i)) > threshold ? 1 : 0;
      if (std::abs(ev(i)) < pr.min_abs_eigenvalue) {
        pr.min_abs_eigenvalue = std::abs(ev(i));
        pr.worst_point = x;
        pr.worst_point.insert(pr.worst_point.end(), v.begin(), v.end());
      }
    }
    pr.min_rank = std::min(pr.min_rank, r);
    pr.max_rank = std::max(pr.max_rank, r);
  }
  if (pr.points == 0) throw Error("no probe point lies in the domain of the Lagrangian");
  return pr;
}

Vec NumericHamiltonian::velocity(const Vec& x, const Vec& p, double t) const {
  const LegendreMap lm = legendre(model);
  std::vector<Expr> F;
  for (std::size_t j = 0; j < model.dim(); ++j) F.push_back(lm.momenta[j] - Expr::variable(model.momentum(j)));
  PointTuple params = assign(model.momenta(), p, assign(model.coords, x));
  if (!model.time.empty()) params[model.time] = t;
  return newton_solve(F, model.velocities(), p, newton, params).x;
}

double NumericHamiltonian::operator()(const Vec& x, const Vec& p, double t) const {
  const Vec v = velocity(x, p, t);
  PointTuple pt = assign(model.velocities(), v, assign(model.coords, x));
  if (!model.time.empty()) pt[model.time] = t;
  double pv = 0.0;
  for (std::size_t j = 0; j < v.size(); ++j) pv += p[j] * v[j];
  return pv - evaluate(*model.L, pt);
}

HamiltonizeResult hamiltonize(const MechModel& m, const HamiltonizeOptions& opts) {
  m.validate();
  if (!m.L) throw Error("hamiltonize needs a Lagrangian");
  const VarTable vt = m.vars();
  HamiltonizeResult out;
  out.probe = probe_hessian(m, opts.probe_points, opts.box, opts.seed, opts.threshold);

  if (out.probe.min_abs_eigenvalue <= opts.threshold) {
    Expr fam = *m.L;
    for (std::size_t i = 0; i < m.dim(); ++i) {
      fam = fam - Expr::variable(m.momentum(i)) * Expr::variable(m.velocity(i));
    }
    GeneratingFamilyReport rep{simplify(fam, &vt), m.velocities(), out.probe,
                               "velocity Hessian has rank " + std::to_string(out.probe.min_rank) + " < " +
                                   std::to_string(m.dim()) + " at a probe point"};
    out.value = std::move(rep);
    return out;
  }

  const LegendreMap lm = legendre(m);
  bool quadratic = true;
  for (const auto& row : lm.hessian) {
    for (const auto& h : row) quadratic = quadratic && !mentions_any(h, m.velocities());
  }

  if (quadratic) {
    std::map<std::string, Expr> at_rest;
    for (const auto& v : m.velocities()) at_rest[v] = Expr(0.0);
    std::vector<Expr> rhs;
    for (std::size_t j = 0; j < m.dim(); ++j) {
      rhs.push_back(simplify(Expr::variable(m.momentum(j)) - substitute(lm.momenta[j], at_rest), &vt));
    }
    const std::vector<Expr> v = symbolic_solve(lm.hessian, rhs, &vt);
    std::map<std::string, Expr> sub;
    for (std::size_t j = 0; j < m.dim(); ++j) sub[m.velocity(j)] = v[j];
    Expr H = -substitute(*m.L, sub);
    for (std::size_t j = 0; j < m.dim(); ++j) H = Expr::variable(m.momentum(j)) * v[j] + H;
    out.value = simplify(H, &vt);
    return out;
  }

  NumericHamiltonian nh{m, opts.newton};
  // Invert the Legendre map at each probe point to confirm the procedure.
  std::mt19937_64 rng(opts.seed);
  std::uniform_real_distribution<double> u(-opts.box, opts.box);
  for (int k = 0; k < opts.probe_points; ++k) {
    Vec x(m.dim()), v(m.dim());
    for (double& c : x) c = u(rng);
    for (double& c : v) c = u(rng);
    PointTuple pt = assign(m.velocities(), v, assign(m.coords, x));
    if (!m.time.empty()) pt[m.time] = 0.0;
    Vec p;
    try {
      p = eval_all(lm.momenta, pt);
    } catch (const EvalError&) {
      continue;
    }
    nh.velocity(x, p);  // throws NewtonError on failure
  }
  out.value = std::move(nh);
  return out;
}

// ------------------------------------------------------------- variation

namespace {

struct Derivs {
  std::vector<Vec> v, a;
};

// Second-order stencils: central inside, one-sided at both ends.
Derivs path_derivatives(const std::vector<Vec>& q, double h) {
  const std::size_t N = q.size(), n = q.front().size();
  Derivs d{std::vector<Vec>(N, Vec(n)), std::vector<Vec>(N, Vec(n))};
  for (std::size_t k = 0; k < N; ++k) {
    for (std::size_t i = 0; i < n; ++i) {
      if (k == 0) {
        d.v[k][i] = (-3 * q[0][i] + 4 * q[1][i] - q[2][i]) / (2 * h);
        d.a[k][i] = (2 * q[0][i] - 5 * q[1][i] + 4 * q[2][i] - q[3][i]) / (h * h);
      } else if (k == N - 1) {
        d.v[k][i] = (3 * q[k][i] - 4 * q[k - 1][i] + q[k - 2][i]) / (2 * h);
        d.a[k][i] = (2 * q[k][i] - 5 * q[k - 1][i] + 4 * q[k - 2][i] - q[k - 3][i]) / (h * h);
      } else {
        d.v[k][i] = (q[k + 1][i] - q[k - 1][i]) / (2 * h);
        d.a[k][i] = (q[k + 1][i] - 2 * q[k][i] + q[k - 1][i]) / (h * h);
      }
    }
  }
  return d;
}

void check_path(const MechModel& m, const PathSample& path) {
  if (path.q.size() < 16) throw Error("grid too coarse: need at least 16 nodes");
  if (!(path.t1 > path.t0)) throw Error("path interval must have t1 > t0");
  for (const auto& row : path.q) {
    if (row.size() != m.dim()) throw ShapeError("path sample has the wrong dimension");
  }
}

std::vector<std::string> slot_names(const MechModel& m) {
  std::vector<std::string> s = m.coords;
  for (std::size_t i = 0; i < m.dim(); ++i) s.push_back(m.velocity(i));
  for (std::size_t i = 0; i < m.dim(); ++i) s.push_back(m.acceleration(i));
  s.push_back(m.time.empty() ? std::string("\x01t") : m.time);
  return s;
}

Vec slot_values(const Vec& q, const Vec& v, const Vec& a, double t) {
  Vec s = q;
  s.insert(s.end(), v.begin(), v.end());
  s.insert(s.end(), a.begin(), a.end());
  s.push_back(t);
  return s;
}

}  // namespace

double discrete_action(const MechModel& m, const PathSample& path) {
  check_path(m, path);
  const std::size_t N = path.q.size();
  const double h = (path.t1 - path.t0) / static_cast<double>(N - 1);
  const Derivs d = path_derivatives(path.q, h);
  const auto slots = slot_names(m);
  const CompiledExpr L(*m.L, slots);
  double S = 0.0;
  for (std::size_t k = 0; k < N; ++k) {
    const double w = (k == 0 || k == N - 1) ? 0.5 * h : h;
    S += w * L(slot_values(path.q[k], d.v[k], d.a[k], path.t0 + static_cast<double>(k) * h));
  }
  return S;
}

ActionVariation action_variation(const MechModel& m, const PathSample& path, const std::vector<Vec>& variation,
                                 double s) {
  m.validate();
  if (!m.L) throw Error("action_variation needs a Lagrangian");
  check_path(m, path);
  if (variation.size() != path.q.size()) throw ShapeError("variation must be sampled on the path grid");
  const std::size_t N = path.q.size(), n = m.dim();
  const double h = (path.t1 - path.t0) / static_cast<double>(N - 1);

  auto shifted = [&](double eps) {
    PathSample p = path;
    for (std::size_t k = 0; k < N; ++k)
      for (std::size_t i = 0; i < n; ++i) p.q[k][i] += eps * variation[k].at(i);
    return p;
  };
  ActionVariation out;
  out.lhs = (discrete_action(m, shifted(s)) - discrete_action(m, shifted(-s))) / (2.0 * s);

  const Derivs d = path_derivatives(path.q, h);
  const auto slots = slot_names(m);
  const VarTable vt = euler_lagrange_vars(m);
  std::vector<CompiledExpr> el, mom;
  for (const auto& e : euler_lagrange(m)) el.emplace_back(e, slots);
  for (std::size_t i = 0; i < n; ++i) mom.emplace_back(diff(*m.L, m.velocity(i), &vt), slots);

  double integral = 0.0;
  for (std::size_t k = 0; k < N; ++k) {
    const Vec vals = slot_values(path.q[k], d.v[k], d.a[k], path.t0 + static_cast<double>(k) * h);
    double pair = 0.0;
    for (std::size_t i = 0; i < n; ++i) pair += el[i](vals) * variation[k][i];
    integral += ((k == 0 || k == N - 1) ? 0.5 * h : h) * pair;
  }
  auto boundary = [&](std::size_t k) {
    const Vec vals = slot_values(path.q[k], d.v[k], d.a[k], path.t0 + static_cast<double>(k) * h);
    double b = 0.0;
    for (std::size_t i = 0; i < n; ++i) b += mom[i](vals) * variation[k][i];
    return b;
  };
  out.rhs = integral + boundary(N - 1) - boundary(0);
  return out;
}

Vec dynamics_residual(const ImplicitSystem& sys, const TTStarMPoint& pt, double t) {
  pt.validate();
  const std::size_t n = pt.dim();
  if (sys.state.size() != 2 * n || sys.rates.size() != 2 * n) throw ShapeError("system and point dimensions differ");
  PointTuple vals;
  for (std::size_t i = 0; i < n; ++i) {
    vals[sys.state[i]] = pt.x[i];
    vals[sys.state[n + i]] = pt.p[i];
    vals[sys.rates[i]] = pt.xdot[i];
    vals[sys.rates[n + i]] = pt.pdot[i];
  }
  if (!sys.independent.empty()) vals[sys.independent] = t;
  return eval_all(sys.equations, vals);
}

}  // namespace ttriple
