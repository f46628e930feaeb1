#pragma once

// Canonical coordinate maps between the tangent and cotangent bundles of a
// configuration space, and their first-jet analogues for field theory.
//
// Flat index layouts (row-major, form index outermost):
//   yjet[i*k + a]           = y^a_i
//   p[j*k + b]              = p^j_b
//   pjet[(l*k + d)*m + i]   = p^l_{d,i}   (derivative index innermost)

#include <cstddef>
#include <vector>

#include "ttriple/symcore.hpp"

namespace ttriple {

using Vec = std::vector<double>;

class ShapeError : public Error {
 public:
  using Error::Error;
};

class BaseMismatchError : public Error {
 public:
  using Error::Error;
};

/// (x, xdot, dx, dxdot) on TTM.
struct TTMPoint {
  Vec x, xdot, dx, dxdot;
  std::size_t dim() const { return x.size(); }
  void validate() const;
  bool operator==(const TTMPoint&) const = default;
};

/// (x, p, xdot, pdot) on TT*M.
struct TTStarMPoint {
  Vec x, p, xdot, pdot;
  std::size_t dim() const { return x.size(); }
  void validate() const;
  bool operator==(const TTStarMPoint&) const = default;
};

/// (x, y, p, xi) on T*E for a vector bundle E of rank k over an
/// n-dimensional base.
struct CotangentOfBundlePoint {
  Vec base, fiber, pbase, pfiber;
  void validate() const;
  bool operator==(const CotangentOfBundlePoint&) const = default;
};

struct FieldShape {
  std::size_t m = 1;  // base dimension
  std::size_t k = 1;  // fiber dimension
  bool operator==(const FieldShape&) const = default;
};

/// (x, y, p, yjet, pjet) on J^1 PE.
struct J1PhasePoint {
  FieldShape shape;
  Vec x, y, p, yjet, pjet;
  void validate() const;
  bool operator==(const J1PhasePoint&) const = default;

  double p_at(std::size_t j, std::size_t b) const { return p[j * shape.k + b]; }
  double yjet_at(std::size_t a, std::size_t i) const { return yjet[i * shape.k + a]; }
  double pjet_at(std::size_t l, std::size_t d, std::size_t i) const {
    return pjet[(l * shape.k + d) * shape.m + i];
  }
};

/// (x, y, yjet, piy, pijet) on V+J^1 E.
struct VPlusJ1Point {
  FieldShape shape;
  Vec x, y, yjet, piy, pijet;
  void validate() const;
  bool operator==(const VPlusJ1Point&) const = default;
};

/// (x, y, p, py, yjet) on PJ^dagger E.
struct PJDaggerPoint {
  FieldShape shape;
  Vec x, y, p, py, yjet;
  void validate() const;
  bool operator==(const PJDaggerPoint&) const = default;
};

/// (x, y, yjet, dy, dyjet) on VJ^1 E.
struct VJ1Point {
  FieldShape shape;
  Vec x, y, yjet, dy, dyjet;
  void validate() const;
  bool operator==(const VJ1Point&) const = default;
};

/// (x, y, dy, yjet, dyjet) on J^1 VE.
struct J1VPoint {
  FieldShape shape;
  Vec x, y, dy, yjet, dyjet;
  void validate() const;
  bool operator==(const J1VPoint&) const = default;
};

// Mechanics maps.
TTMPoint kappa(const TTMPoint& pt);
CotangentOfBundlePoint alpha_mech(const TTStarMPoint& pt);
TTStarMPoint alpha_mech_inverse(const CotangentOfBundlePoint& pt);
CotangentOfBundlePoint beta_mech(const TTStarMPoint& pt);
CotangentOfBundlePoint r_map(const CotangentOfBundlePoint& pt);

/// d/dt <p(t), dchi(t)> for X in TT*M and Y = (dchi)' in TTM. Requires the
/// same base point and X.xdot == Y.dx.
double tangent_pairing(const TTStarMPoint& X, const TTMPoint& Y);

/// Covector evaluation <a, v> where v = (base, fiber) components of a
/// tangent vector at a.base/a.fiber.
double covector_pairing(const CotangentOfBundlePoint& a, const Vec& dbase, const Vec& dfiber);

// Field maps.
VPlusJ1Point alpha_field(const J1PhasePoint& pt);
PJDaggerPoint beta_field(const J1PhasePoint& pt);
J1VPoint kappa_field(const VJ1Point& pt);
VJ1Point kappa_field_inverse(const J1VPoint& pt);

/// <pi, dy> + <pijet, dyjet> for points over the same first jet.
double field_covector_pairing(const VPlusJ1Point& a, const J1VPoint& v);

/// Divergence of <p, dy> along first-order jets of p and dy:
/// sum p^i_{a,i} dy^a + p^i_a dy^a_i.
double field_pairing(const J1PhasePoint& P, const VJ1Point& V);

// Flat serializations in documented block order.
Vec flatten(const TTMPoint& pt);
Vec flatten(const TTStarMPoint& pt);
Vec flatten(const CotangentOfBundlePoint& pt);
Vec flatten(const J1PhasePoint& pt);
Vec flatten(const VPlusJ1Point& pt);
Vec flatten(const PJDaggerPoint& pt);
Vec flatten(const VJ1Point& pt);
Vec flatten(const J1VPoint& pt);

// Symplectic forms evaluated on pairs of tangent vectors. Each tangent
// vector is stored in the same block layout as the points of the space.

/// dpbase^dbase + dpfiber^dfiber on T*E (and on T*TM with fiber = xdot).
double omega_cotangent(const CotangentOfBundlePoint& u, const CotangentOfBundlePoint& w);
/// d_T omega_M = dpdot^dx + dp^dxdot on TT*M.
double omega_tangent_lift(const TTStarMPoint& u, const TTStarMPoint& w);
/// omega_M = dp^dx on T*M, vectors given as (dx, dp).
double omega_m(const Vec& ux, const Vec& up, const Vec& wx, const Vec& wp);

}  // namespace ttriple
