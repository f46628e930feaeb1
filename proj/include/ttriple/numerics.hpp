#pragma once

#include <Eigen/Dense>
#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "ttriple/bundlemaps.hpp"
#include "ttriple/symcore.hpp"
#include "ttriple/system.hpp"

namespace ttriple {

struct NewtonConfig {
  enum class Jacobian { symbolic, fd };

  double tol = 1e-10;
  int max_iter = 50;
  Jacobian jacobian = Jacobian::symbolic;
  // Take minimum-norm steps through singular Jacobians instead of failing.
  bool allow_rank_deficient = false;
  double fd_step = 1e-7;

  void validate() const;
};

struct NewtonResult {
  Vec x;
  int iterations = 0;
  double residual = 0.0;  // infinity norm at x
};

class NewtonError : public Error {
 public:
  enum class Kind { singular_jacobian, no_convergence };
  NewtonError(Kind kind, const std::string& what, NewtonResult last)
      : Error(what), kind_(kind), last_(std::move(last)) {}
  Kind kind() const { return kind_; }
  const NewtonResult& last() const { return last_; }

 private:
  Kind kind_;
  NewtonResult last_;
};

using ResidualFn = std::function<void(const Vec& z, Vec& out)>;
using JacobianFn = std::function<void(const Vec& z, Eigen::MatrixXd& out)>;

/// Newton iteration on a numeric residual. `jacobian` may be empty, in which
/// case forward differences with cfg.fd_step are used.
NewtonResult newton_solve(const ResidualFn& residual, const JacobianFn& jacobian, std::size_t equations,
                          const Vec& guess, const NewtonConfig& cfg);

/// Square symbolic system F(unknowns; params) = 0.
NewtonResult newton_solve(const std::vector<Expr>& F, const std::vector<std::string>& unknowns, const Vec& guess,
                          const NewtonConfig& cfg, const PointTuple& params = {});

/// Gauss-Newton with minimum-norm steps; returns the point reached and its
/// residual without requiring convergence. Works for rectangular systems.
NewtonResult least_squares_solve(const ResidualFn& residual, const JacobianFn& jacobian, std::size_t equations,
                                 const Vec& guess, const NewtonConfig& cfg);

/// Central differences per coordinate.
Vec fd_gradient(const std::function<double(const Vec&)>& f, const Vec& point, double step);

class InconsistentInitialData : public Error {
 public:
  InconsistentInitialData(const std::string& what, double residual) : Error(what), residual_(residual) {}
  double residual() const { return residual_; }

 private:
  double residual_;
};

struct Trajectory {
  std::vector<double> times;
  std::vector<Vec> states;  // x then p
  std::vector<int> newton_iterations;        // per step
  std::vector<double> constraint_residuals;  // max |algebraic equation| per node
  std::vector<int> jacobian_ranks;           // per step
  std::optional<std::string> failure;        // set when a step failed

  std::size_t dim() const { return states.empty() ? 0 : states.front().size(); }
  bool complete() const { return !failure.has_value(); }
  void write_csv(std::ostream& os) const;  // header t,x1..xn,p1..pn
};

/// Implicit-midpoint integration of sys from z0 over [t0, t1]. The step is
/// shrunk to (t1 - t0) / ceil((t1 - t0) / h) so the last node lands on t1.
/// Differential equations are evaluated at the midpoint with rates replaced
/// by difference quotients; algebraic equations at the step end.
Trajectory integrate_phase(const ImplicitSystem& sys, const Vec& z0, double t0, double t1, double h,
                           const NewtonConfig& cfg = {});

/// Smallest residual of sys at (t, z) over all rate values; zero iff z0 is
/// consistent initial data. Also returns the minimizing rates.
NewtonResult initial_rates(const ImplicitSystem& sys, double t, const Vec& z, const NewtonConfig& cfg = {});

/// Jacobian of the implicit-midpoint step map z -> z_next by implicit
/// differentiation of the step equations.
Eigen::MatrixXd step_jacobian(const ImplicitSystem& sys, double t, double h, const Vec& z, const Vec& z_next);

/// max |J^T Omega J - Omega| for Omega the canonical matrix of dp^dx on
/// z = (x, p).
double symplecticity_defect(const Eigen::MatrixXd& J);

}  // namespace ttriple
