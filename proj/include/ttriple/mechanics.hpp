#pragma once

#include <functional>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "ttriple/bundlemaps.hpp"
#include "ttriple/numerics.hpp"
#include "ttriple/symcore.hpp"
#include "ttriple/system.hpp"

namespace ttriple {

/// A configuration chart with a Lagrangian and/or a Hamiltonian.
/// For a coordinate named q the derived names are v_q (velocity),
/// p_q (momentum), pdot_q (momentum rate) and qddot (acceleration).
struct MechModel {
  std::vector<std::string> coords;
  std::optional<Expr> L;  // over (x, v[, time])
  std::optional<Expr> H;  // over (x, p[, time])
  std::string time;       // optional explicit time variable

  std::size_t dim() const { return coords.size(); }
  std::string velocity(std::size_t i) const { return "v_" + coords.at(i); }
  std::string momentum(std::size_t i) const { return "p_" + coords.at(i); }
  std::string momentum_rate(std::size_t i) const { return "pdot_" + coords.at(i); }
  std::string acceleration(std::size_t i) const { return coords.at(i) + "ddot"; }

  std::vector<std::string> velocities() const;
  std::vector<std::string> momenta() const;

  VarTable vars() const;
  void validate() const;
};

// Statics.

/// A potential U(q), an optional cost W(q, dq) positively homogeneous in
/// dq (variation names dq_<coord>), and an optional admissibility test for
/// virtual displacements. Without W, the cost is <dU(q), dq>.
struct StaticsModel {
  std::vector<std::string> coords;
  std::optional<Expr> U;
  std::optional<Expr> W;
  std::function<bool(const Vec& q, const Vec& dq)> admissible;

  std::string variation(std::size_t i) const { return "dq_" + coords.at(i); }
  double cost(const Vec& q, const Vec& dq) const;
};

Vec constitutive_set(const StaticsModel& s, const Vec& q);

struct EquilibriumVerdict {
  bool pass = true;
  int samples = 0;
  Vec violating;  // set when !pass
  double value = 0.0;
};

EquilibriumVerdict equilibrium_test(const StaticsModel& s, const Vec& q, int samples, std::uint64_t seed = 0);

/// max |W(q, t dq) - t W(q, dq)| over random samples; W must be present.
double homogeneity_defect(const StaticsModel& s, int samples, std::uint64_t seed = 0);

// Infinitesimal dynamics.

ImplicitSystem lagrangian_dynamics(const MechModel& m);
ImplicitSystem hamiltonian_dynamics(const MechModel& m);

/// dL/dx - d/dt dL/dv with accelerations as fresh symbols.
std::vector<Expr> euler_lagrange(const MechModel& m);
VarTable euler_lagrange_vars(const MechModel& m);

struct LegendreMap {
  std::vector<Expr> momenta;              // dL/dv_j
  std::vector<std::vector<Expr>> hessian;  // d2L/dv_i dv_j
};

LegendreMap legendre(const MechModel& m);

struct HessianProbe {
  int points = 0;
  int min_rank = 0;
  int max_rank = 0;
  double min_abs_eigenvalue = 0.0;
  Vec worst_point;  // (x, v) where the smallest eigenvalue occurred
};

/// Rank of the velocity Hessian at (x, v); eigenvalues with |lambda| <=
/// threshold count as zero.
int hessian_rank(const LegendreMap& lm, const MechModel& m, const Vec& x, const Vec& v, double threshold = 1e-8);
HessianProbe probe_hessian(const MechModel& m, int points = 32, double box = 1.0, std::uint64_t seed = 0,
                           double threshold = 1e-8);

struct HamiltonizeOptions {
  int probe_points = 32;
  double box = 1.0;
  std::uint64_t seed = 0;
  double threshold = 1e-8;
  NewtonConfig newton{};
};

/// Returned when the Hessian degenerates: the generating family
/// L(x, v) - <p, v> with v as parameters.
struct GeneratingFamilyReport {
  Expr family;
  std::vector<std::string> parameters;  // the velocity names
  HessianProbe probe;
  std::string reason;
};

/// H(x, p) computed pointwise by solving p = dL/dv for v.
struct NumericHamiltonian {
  MechModel model;
  NewtonConfig newton;
  double operator()(const Vec& x, const Vec& p, double t = 0.0) const;
  Vec velocity(const Vec& x, const Vec& p, double t = 0.0) const;
};

struct HamiltonizeResult {
  std::variant<Expr, NumericHamiltonian, GeneratingFamilyReport> value;
  HessianProbe probe;

  bool symbolic() const { return std::holds_alternative<Expr>(value); }
  bool singular() const { return std::holds_alternative<GeneratingFamilyReport>(value); }
  const Expr& hamiltonian() const { return std::get<Expr>(value); }
  const GeneratingFamilyReport& family() const { return std::get<GeneratingFamilyReport>(value); }
};

HamiltonizeResult hamiltonize(const MechModel& m, const HamiltonizeOptions& opts = {});

// Finite-interval variation.

struct PathSample {
  double t0 = 0.0, t1 = 1.0;
  std::vector<Vec> q;  // one row per node, uniform grid
};

struct ActionVariation {
  double lhs = 0.0;  // dS(q + s dq)/ds at 0 by central differences
  double rhs = 0.0;  // quadrature of <EL, dq> plus the boundary term
};

double discrete_action(const MechModel& m, const PathSample& path);
ActionVariation action_variation(const MechModel& m, const PathSample& path, const std::vector<Vec>& variation,
                                 double s = 1e-5);

/// Residuals of lagrangian_dynamics at (x, p, xdot, pdot).
Vec dynamics_residual(const ImplicitSystem& sys, const TTStarMPoint& pt, double t = 0.0);

}  // namespace ttriple
