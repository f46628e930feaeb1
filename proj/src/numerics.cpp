#include "ttriple/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>

namespace ttriple {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

double inf_norm(const Vec& v) {
  double m = 0.0;
  for (double x : v) {
    if (!std::isfinite(x)) return std::numeric_limits<double>::infinity();
    m = std::max(m, std::abs(x));
  }
  return m;
}

void fd_jacobian(const ResidualFn& residual, const Vec& z, std::size_t m, double step, MatrixXd& J) {
  J.resize(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(z.size()));
  Vec f0(m), f1(m);
  residual(z, f0);
  Vec zz = z;
  for (std::size_t j = 0; j < z.size(); ++j) {
    const double h = step * std::max(1.0, std::abs(z[j]));
    zz[j] = z[j] + h;
    residual(zz, f1);
    zz[j] = z[j];
    for (std::size_t i = 0; i < m; ++i) J(i, j) = (f1[i] - f0[i]) / h;
  }
}

VectorXd min_norm_solve(const MatrixXd& J, const VectorXd& F) {
  Eigen::CompleteOrthogonalDecomposition<MatrixXd> cod(J);
  cod.setThreshold(1e-12);
  return cod.solve(F);
}

// The compiled residual and partial derivatives of an ImplicitSystem over
// the slot layout [t, state..., rates...].
class CompiledSystem {
 public:
  CompiledSystem(const ImplicitSystem& sys, const NewtonConfig& cfg) : cfg_(cfg) {
    S_ = sys.state.size();
    if (sys.rates.size() != S_) throw ShapeError("system needs one rate per state variable");
    slots_.push_back(sys.independent.empty() ? std::string("\x01t") : sys.independent);
    slots_.insert(slots_.end(), sys.state.begin(), sys.state.end());
    slots_.insert(slots_.end(), sys.rates.begin(), sys.rates.end());
    for (std::size_t e = 0; e < sys.equations.size(); ++e) {
      const Expr& eq = sys.equations[e];
      for (const auto& v : free_variables(eq)) {
        if (std::find(slots_.begin(), slots_.end(), v) == slots_.end()) {
          throw Error("equation " + std::to_string(e + 1) + " uses unknown variable " + v);
        }
      }
      eqs_.emplace_back(eq, slots_);
      algebraic_.push_back(sys.is_algebraic(e));
      std::vector<CompiledExpr> row;
      if (cfg_.jacobian == NewtonConfig::Jacobian::symbolic) {
        for (std::size_t j = 1; j < slots_.size(); ++j) row.emplace_back(diff(eq, slots_[j], &sys.vars), slots_);
      }
      partials_.push_back(std::move(row));
    }
  }

  std::size_t state_dim() const { return S_; }
  std::size_t equations() const { return eqs_.size(); }
  bool algebraic(std::size_t e) const { return algebraic_[e]; }

  double eval(std::size_t e, const Vec& vals) const { return eqs_[e](vals); }

  // d E_e / d slot (slot index >= 1)
  double partial(std::size_t e, std::size_t slot, const Vec& vals) const {
    if (!partials_[e].empty()) return partials_[e][slot - 1](vals);
    Vec vv = vals;
    const double h = 1e-6 * std::max(1.0, std::abs(vals[slot]));
    vv[slot] = vals[slot] + h;
    const double fp = eqs_[e](vv);
    vv[slot] = vals[slot] - h;
    const double fm = eqs_[e](vv);
    return (fp - fm) / (2.0 * h);
  }

  Vec values(double t, const Vec& state, const Vec& rates) const {
    Vec v;
    v.reserve(1 + 2 * S_);
    v.push_back(t);
    v.insert(v.end(), state.begin(), state.end());
    v.insert(v.end(), rates.begin(), rates.end());
    return v;
  }

  Vec mid_values(double t, double h, const Vec& z, const Vec& zn) const {
    Vec s(S_), r(S_);
    for (std::size_t i = 0; i < S_; ++i) {
      s[i] = 0.5 * (z[i] + zn[i]);
      r[i] = (zn[i] - z[i]) / h;
    }
    return values(t + 0.5 * h, s, r);
  }

  void step_residual(double t, double h, const Vec& z, const Vec& zn, Vec& F) const {
    const Vec mid = mid_values(t, h, z, zn);
    const Vec end = values(t + h, zn, Vec(S_, 0.0));
    F.resize(eqs_.size());
    for (std::size_t e = 0; e < eqs_.size(); ++e) F[e] = eval(e, algebraic_[e] ? end : mid);
  }

  // A = dR/dz_next, B = dR/dz.
  void step_jacobians(double t, double h, const Vec& z, const Vec& zn, MatrixXd& A, MatrixXd* B) const {
    const Vec mid = mid_values(t, h, z, zn);
    const Vec end = values(t + h, zn, Vec(S_, 0.0));
    const auto m = static_cast<Eigen::Index>(eqs_.size());
    const auto n = static_cast<Eigen::Index>(S_);
    A.setZero(m, n);
    if (B) B->setZero(m, n);
    for (std::size_t e = 0; e < eqs_.size(); ++e) {
      for (std::size_t j = 0; j < S_; ++j) {
        if (algebraic_[e]) {
          A(e, j) = partial(e, 1 + j, end);
        } else {
          const double ds = partial(e, 1 + j, mid);
          const double dr = partial(e, 1 + S_ + j, mid);
          A(e, j) = 0.5 * ds + dr / h;
          if (B) (*B)(e, j) = 0.5 * ds - dr / h;
        }
      }
    }
  }

  void rate_residual(double t, const Vec& z, const Vec& r, Vec& F) const {
    const Vec vals = values(t, z, r);
    F.resize(eqs_.size());
    for (std::size_t e = 0; e < eqs_.size(); ++e) F[e] = eval(e, vals);
  }

  void rate_jacobian(double t, const Vec& z, const Vec& r, MatrixXd& J) const {
    const Vec vals = values(t, z, r);
    J.setZero(static_cast<Eigen::Index>(eqs_.size()), static_cast<Eigen::Index>(S_));
    for (std::size_t e = 0; e < eqs_.size(); ++e) {
      if (algebraic_[e]) continue;
      for (std::size_t j = 0; j < S_; ++j) J(e, j) = partial(e, 1 + S_ + j, vals);
    }
  }

 private:
  NewtonConfig cfg_;
  std::size_t S_ = 0;
  std::vector<std::string> slots_;
  std::vector<CompiledExpr> eqs_;
  std::vector<bool> algebraic_;
  std::vector<std::vector<CompiledExpr>> partials_;
};

NewtonResult initial_rates_compiled(const CompiledSystem& cs, double t, const Vec& z, const Vec& guess,
                                    const NewtonConfig& cfg) {
  return least_squares_solve([&](const Vec& r, Vec& F) { cs.rate_residual(t, z, r, F); },
                             [&](const Vec& r, MatrixXd& J) { cs.rate_jacobian(t, z, r, J); }, cs.equations(),
                             guess, cfg);
}

}  // namespace

void NewtonConfig::validate() const {
  if (!(tol > 0.0)) throw Error("Newton tolerance must be positive");
  if (max_iter < 1) throw Error("Newton needs max_iter >= 1");
  if (!(fd_step > 0.0)) throw Error("finite-difference step must be positive");
}

NewtonResult newton_solve(const ResidualFn& residual, const JacobianFn& jacobian, std::size_t equations,
                          const Vec& guess, const NewtonConfig& cfg) {
  cfg.validate();
  if (equations != guess.size() && !cfg.allow_rank_deficient) {
    throw ShapeError("Newton needs a square system (" + std::to_string(equations) + " equations, " +
                     std::to_string(guess.size()) + " unknowns)");
  }
  NewtonResult res{guess, 0, 0.0};
  Vec F(equations);
  MatrixXd J;
  for (int it = 0;; ++it) {
    residual(res.x, F);
    res.residual = inf_norm(F);
    res.iterations = it;
    if (!std::isfinite(res.residual)) {
      throw NewtonError(NewtonError::Kind::no_convergence, "Newton: non-finite residual", res);
    }
    if (res.residual <= cfg.tol) return res;
    if (it == cfg.max_iter) {
      throw NewtonError(NewtonError::Kind::no_convergence,
                        "Newton: no convergence after " + std::to_string(it) + " iterations", res);
    }
    if (jacobian && cfg.jacobian == NewtonConfig::Jacobian::symbolic) {
      jacobian(res.x, J);
    } else {
      fd_jacobian(residual, res.x, equations, cfg.fd_step, J);
    }
    const VectorXd f = Eigen::Map<const VectorXd>(F.data(), static_cast<Eigen::Index>(F.size()));
    VectorXd dz;
    if (cfg.allow_rank_deficient) {
      dz = min_norm_solve(J, f);
    } else {
      Eigen::JacobiSVD<MatrixXd> svd(J, Eigen::ComputeThinU | Eigen::ComputeThinV);
      const auto& s = svd.singularValues();
      const double smax = s.size() ? s.maxCoeff() : 0.0, smin = s.size() ? s.minCoeff() : 0.0;
      if (!(smin > 0.0) || smax / smin > 1e14) {
        throw NewtonError(NewtonError::Kind::singular_jacobian, "Newton: singular Jacobian", res);
      }
      dz = svd.solve(f);
    }
    for (std::size_t j = 0; j < res.x.size(); ++j) res.x[j] -= dz(static_cast<Eigen::Index>(j));
  }
}

NewtonResult newton_solve(const std::vector<Expr>& F, const std::vector<std::string>& unknowns, const Vec& guess,
                          const NewtonConfig& cfg, const PointTuple& params) {
  if (F.size() != unknowns.size() || guess.size() != unknowns.size()) {
    throw ShapeError("newton_solve needs as many equations and guesses as unknowns");
  }
  std::vector<std::string> slots = unknowns;
  Vec base(unknowns.size(), 0.0);
  for (const auto& [name, value] : params) {
    if (std::find(unknowns.begin(), unknowns.end(), name) != unknowns.end()) continue;
    slots.push_back(name);
    base.push_back(value);
  }
  std::vector<CompiledExpr> f;
  std::vector<std::vector<CompiledExpr>> df(F.size());
  for (std::size_t i = 0; i < F.size(); ++i) {
    f.emplace_back(F[i], slots);
    if (cfg.jacobian == NewtonConfig::Jacobian::symbolic) {
      for (const auto& u : unknowns) df[i].emplace_back(diff(F[i], u), slots);
    }
  }
  auto fill = [&](const Vec& z) {
    Vec v = base;
    std::copy(z.begin(), z.end(), v.begin());
    return v;
  };
  ResidualFn res = [&](const Vec& z, Vec& out) {
    const Vec v = fill(z);
    out.resize(f.size());
    for (std::size_t i = 0; i < f.size(); ++i) out[i] = f[i](v);
  };
  JacobianFn jac;
  if (cfg.jacobian == NewtonConfig::Jacobian::symbolic) {
    jac = [&](const Vec& z, MatrixXd& J) {
      const Vec v = fill(z);
      J.resize(static_cast<Eigen::Index>(f.size()), static_cast<Eigen::Index>(unknowns.size()));
      for (std::size_t i = 0; i < f.size(); ++i)
        for (std::size_t j = 0; j < unknowns.size(); ++j) J(i, j) = df[i][j](v);
    };
  }
  return newton_solve(res, jac, F.size(), guess, cfg);
}

NewtonResult least_squares_solve(const ResidualFn& residual, const JacobianFn& jacobian, std::size_t equations,
                                 const Vec& guess, const NewtonConfig& cfg) {
  cfg.validate();
  NewtonResult res{guess, 0, 0.0};
  Vec F(equations);
  MatrixXd J;
  residual(res.x, F);
  res.residual = inf_norm(F);
  for (int it = 1; it <= cfg.max_iter && res.residual > cfg.tol; ++it) {
    if (jacobian && cfg.jacobian == NewtonConfig::Jacobian::symbolic) {
      jacobian(res.x, J);
    } else {
      fd_jacobian(residual, res.x, equations, cfg.fd_step, J);
    }
    const VectorXd f = Eigen::Map<const VectorXd>(F.data(), static_cast<Eigen::Index>(F.size()));
    const VectorXd dz = min_norm_solve(J, f);
    Vec trial = res.x;
    for (std::size_t j = 0; j < trial.size(); ++j) trial[j] -= dz(static_cast<Eigen::Index>(j));
    Vec Ft(equations);
    residual(trial, Ft);
    const double rt = inf_norm(Ft);
    if (!(rt < res.residual)) break;  // stationary: the remaining residual is the least-squares gap
    res.x = std::move(trial);
    F = std::move(Ft);
    res.residual = rt;
    res.iterations = it;
  }
  return res;
}

Vec fd_gradient(const std::function<double(const Vec&)>& f, const Vec& point, double step) {
  if (!(step > 0.0)) throw Error("fd_gradient step must be positive");
  Vec g(point.size());
  Vec p = point;
  for (std::size_t i = 0; i < point.size(); ++i) {
    p[i] = point[i] + step;
    const double fp = f(p);
    p[i] = point[i] - step;
    const double fm = f(p);
    p[i] = point[i];
    g[i] = (fp - fm) / (2.0 * step);
  }
  return g;
}

void Trajectory::write_csv(std::ostream& os) const {
  const std::size_t n = dim() / 2;
  os << "t";
  for (std::size_t i = 1; i <= n; ++i) os << ",x" << i;
  for (std::size_t i = 1; i <= n; ++i) os << ",p" << i;
  os << '\n';
  const auto old = os.precision(17);
  for (std::size_t k = 0; k < times.size(); ++k) {
    os << times[k];
    for (double v : states[k]) os << ',' << v;
    os << '\n';
  }
  os.precision(old);
}

NewtonResult initial_rates(const ImplicitSystem& sys, double t, const Vec& z, const NewtonConfig& cfg) {
  const CompiledSystem cs(sys, cfg);
  if (z.size() != cs.state_dim()) throw ShapeError("initial state has the wrong dimension");
  return initial_rates_compiled(cs, t, z, Vec(z.size(), 0.0), cfg);
}

Trajectory integrate_phase(const ImplicitSystem& sys, const Vec& z0, double t0, double t1, double h,
                           const NewtonConfig& cfg) {
  cfg.validate();
  if (!(h > 0.0) || !(t1 > t0)) throw Error("integrate_phase needs h > 0 and t1 > t0");
  const CompiledSystem cs(sys, cfg);
  if (z0.size() != cs.state_dim()) throw ShapeError("initial state has the wrong dimension");

  NewtonConfig lsq = cfg;
  lsq.max_iter = std::max(cfg.max_iter, 100);
  lsq.tol = std::min(cfg.tol, 1e-12);
  const NewtonResult r0 = initial_rates_compiled(cs, t0, z0, Vec(z0.size(), 0.0), lsq);
  if (r0.residual > 1e-8) {
    throw InconsistentInitialData("inconsistent initial data: residual " + std::to_string(r0.residual) +
                                      " for the best choice of rates",
                                  r0.residual);
  }

  const auto steps = static_cast<std::size_t>(std::ceil((t1 - t0) / h - 1e-9));
  const double he = (t1 - t0) / static_cast<double>(steps);

  NewtonConfig step_cfg = cfg;
  step_cfg.allow_rank_deficient = true;

  Trajectory tr;
  tr.times.push_back(t0);
  tr.states.push_back(z0);
  tr.constraint_residuals.push_back(r0.residual);

  Vec z = z0, rates = r0.x;
  for (std::size_t k = 0; k < steps; ++k) {
    const double t = t0 + static_cast<double>(k) * he;
    Vec guess(z.size());
    for (std::size_t i = 0; i < z.size(); ++i) guess[i] = z[i] + he * rates[i];
    NewtonResult step;
    try {
      step = newton_solve([&](const Vec& zn, Vec& F) { cs.step_residual(t, he, z, zn, F); },
                          [&](const Vec& zn, MatrixXd& A) { cs.step_jacobians(t, he, z, zn, A, nullptr); },
                          cs.equations(), guess, step_cfg);
    } catch (const NewtonError& err) {
      tr.failure = std::string(err.what()) + " at t = " + std::to_string(t);
      break;
    }
    MatrixXd A;
    cs.step_jacobians(t, he, z, step.x, A, nullptr);
    Eigen::CompleteOrthogonalDecomposition<MatrixXd> cod(A);
    cod.setThreshold(1e-12);
    tr.jacobian_ranks.push_back(static_cast<int>(cod.rank()));
    tr.newton_iterations.push_back(step.iterations);

    for (std::size_t i = 0; i < z.size(); ++i) rates[i] = (step.x[i] - z[i]) / he;
    z = step.x;
    const double tn = (k + 1 == steps) ? t1 : t0 + static_cast<double>(k + 1) * he;
    tr.times.push_back(tn);
    tr.states.push_back(z);
    tr.constraint_residuals.push_back(initial_rates_compiled(cs, tn, z, rates, lsq).residual);
  }
  return tr;
}

MatrixXd step_jacobian(const ImplicitSystem& sys, double t, double h, const Vec& z, const Vec& z_next) {
  const CompiledSystem cs(sys, NewtonConfig{});
  MatrixXd A, B;
  cs.step_jacobians(t, h, z, z_next, A, &B);
  Eigen::CompleteOrthogonalDecomposition<MatrixXd> cod(A);
  cod.setThreshold(1e-12);
  return -cod.solve(B);
}

double symplecticity_defect(const MatrixXd& J) {
  const Eigen::Index N = J.rows();
  if (J.cols() != N || N % 2 != 0) throw ShapeError("symplecticity_defect needs a square even-dimensional matrix");
  const Eigen::Index n = N / 2;
  MatrixXd Om = MatrixXd::Zero(N, N);
  for (Eigen::Index i = 0; i < n; ++i) {
    Om(n + i, i) = 1.0;
    Om(i, n + i) = -1.0;
  }
  return (J.transpose() * Om * J - Om).cwiseAbs().maxCoeff();
}

}  // namespace ttriple
