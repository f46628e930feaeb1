#pragma once

// Affine duals and phase spaces over a point, with a numeric realization of
// the canonical symplectomorphism P V^dag_W ~ T*V for a subspace W of V.

#include <Eigen/Dense>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "ttriple/bundlemaps.hpp"
#include "ttriple/symcore.hpp"

namespace ttriple {

/// W = span of the columns of basisW inside V = R^dimV.
struct SubspacePair {
  int dimV = 0;
  Eigen::MatrixXd basisW;  // dimV x dimW

  int dimW() const { return static_cast<int>(basisW.cols()); }
  void validate() const;
};

/// Columns spanning a complement U of W.
struct ComplementChoice {
  Eigen::MatrixXd basisU;  // dimV x (dimV - dimW)
};

/// a |-> linear . a + constant, real valued.
struct AffineDualElement {
  Vec linear;
  double constant = 0.0;

  double operator()(const Vec& a) const;
};

Vec affine_dual_projection(const AffineDualElement& phi);

/// Base point and differential of a section of the trivial AV-bundle
/// base x R, relative to the zero section.
struct AffineDifferential {
  Vec point;
  Vec covector;
};

AffineDifferential phase_of_avbundle(const Expr& F, const std::vector<std::string>& coords, const Vec& point);

/// Canonical data of (V, W) together with the maps induced by a complement U.
///   C: basis of the annihilator W^0; quotient coordinates q = C^T v.
///   F: V/W -> U, the inverse of q restricted to U.
///   G: W* -> U^0, covectors restricting to a on W and vanishing on U.
struct QuotientFrame {
  Eigen::MatrixXd C;
  Eigen::MatrixXd F;
  Eigen::MatrixXd G;
};

/// Basis of W^0. Depends only on W (identity when W = {0}).
Eigen::MatrixXd annihilator_basis(const SubspacePair& sp);
QuotientFrame quotient_frame(const SubspacePair& sp, const ComplementChoice& u);

/// A point of P V^dag_W written in the trivialization induced by U:
/// base (q, a) in V/W x W*, momenta (rho_q, rho_a) = dr_U(q, a).
struct PhasePoint {
  Vec q, a, rho_q, rho_a;
};

/// (v, alpha) in T*V = V x V*.
struct CotangentPoint {
  Vec v, alpha;
};

CotangentPoint theorem1_iso(const SubspacePair& sp, const ComplementChoice& u, const PhasePoint& pt);

/// A section of V^dag_W -> V/W x W* written intrinsically as
///   phi_{q,a}(v) = <E a, v> + g(q, a),  v in the fiber over q,
/// with E a the minimum-norm covector restricting to a on W and g quadratic
/// in z = (q, a): g(z) = z^T H z / 2 + grad^T z + c.
struct QuadraticSection {
  Eigen::MatrixXd H;
  Eigen::VectorXd grad;
  double c = 0.0;
};

/// Affine differential of the section at (q0, a0) in the trivialization of U.
PhasePoint affine_differential(const SubspacePair& sp, const ComplementChoice& u, const QuadraticSection& s,
                               const Vec& q0, const Vec& a0);

struct SymplectoReport {
  int trials = 0;
  double max_deviation = 0.0;
  int worst_trial = -1;
  Vec worst_u, worst_w;  // flat (q, a, rho_q, rho_a) tangent vectors
};

/// Compares the pull-back of dalpha^dv through theorem1_iso with
/// drho_q^dq + drho_a^da on random tangent pairs. Trials run in parallel,
/// each with its own seed derived from `seed`.
SymplectoReport check_symplecto(const SubspacePair& sp, const ComplementChoice& u, int trials,
                                std::uint64_t seed = 0);

struct Theorem1Instance {
  SubspacePair sp;
  ComplementChoice u, u2;
};

/// Entries uniform in [-1, 1]; draws with smallest singular value below
/// 1e-8 are rejected.
Theorem1Instance random_theorem1_instance(std::mt19937_64& rng, int dimV, int dimW);

struct Theorem1SuiteReport {
  int instances = 0;
  double max_independence = 0.0;  // max componentwise |iso_U - iso_U'|
  double max_symplecto = 0.0;
  bool trivial_case_exact = false;  // W = {0} gives the identity
  bool full_case_exact = false;     // W = V gives -R_V
};

Theorem1SuiteReport theorem1_suite(int instances, std::uint64_t seed, int max_dim = 6, int trials_per_instance = 8);

}  // namespace ttriple
