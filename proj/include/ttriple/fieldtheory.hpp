#pragma once

#include <Eigen/Dense>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "ttriple/bundlemaps.hpp"
#include "ttriple/mechanics.hpp"
#include "ttriple/symcore.hpp"
#include "ttriple/system.hpp"

namespace ttriple {

/// First-order field model on a trivial bundle with base coordinates
/// `bases` (m of them) and fiber coordinates `fibers` (k of them).
///
/// Derived names, with 1-based base indices i, j, l:
///   jet          <fiber>_d<i>          y_d1
///   second jet   <fiber>_d<i>d<j>, i<=j  y_d1d2
///   momentum     p<j>_<fiber>          p1_y
///   momentum jet p<l>_<fiber>_d<i>     p1_y_d1
///
/// L and H are density coefficients with respect to dx1 ^ ... ^ dxm.
struct FieldModel {
  std::vector<std::string> bases;
  std::vector<std::string> fibers;
  std::optional<Expr> L;
  std::optional<Expr> H;
  std::optional<Eigen::MatrixXd> metric;  // constant, symmetric, invertible

  std::size_t m() const { return bases.size(); }
  std::size_t k() const { return fibers.size(); }
  FieldShape shape() const { return {m(), k()}; }

  std::string jet(std::size_t a, std::size_t i) const;
  std::string jet2(std::size_t a, std::size_t i, std::size_t j) const;  // order-insensitive in i, j
  std::string momentum(std::size_t j, std::size_t b) const;
  std::string momentum_jet(std::size_t l, std::size_t d, std::size_t i) const;

  // Flat lists in the index layouts of J1PhasePoint.
  std::vector<std::string> jets() const;           // [i*k + a]
  std::vector<std::string> momenta() const;        // [j*k + b]
  std::vector<std::string> momentum_jets() const;  // [(l*k + d)*m + i]
  std::vector<std::string> second_jets() const;    // [(i*m + j)*k + a], symmetric duplicates

  VarTable vars() const;
  void validate() const;
};

/// Point of J^2 E: yjet2[(i*m + j)*k + a] = y^a_{ij}, symmetric in i, j.
struct FieldSample2 {
  FieldShape shape;
  Vec x, y, yjet, yjet2;
  void validate() const;
};

/// p^j_b - dL/dy^b_j = 0 for all (j, b), then sum_l p^l_{d,l} - dL/dy^d = 0.
/// For m = 1 the system carries state/rates like a mechanics system.
ImplicitSystem field_dynamics(const FieldModel& fm);

/// y^c_k - dH/dp^k_c = 0, then sum_l p^l_{d,l} + dH/dy^d = 0.
ImplicitSystem hamilton_field_equations(const FieldModel& fm);

struct FieldLegendre {
  std::vector<Expr> momenta;  // [j*k + b] = dL/dy^b_j
};

FieldLegendre field_legendre(const FieldModel& fm);

/// For k == m (potentials A_a indexed by base directions): the splits
/// p^i_j + p^j_i and p^i_j - p^j_i, simplified, as m x m tables.
struct MomentumSplit {
  std::vector<std::vector<Expr>> symmetric;
  std::vector<std::vector<Expr>> antisymmetric;
};

MomentumSplit momentum_split(const FieldModel& fm, const FieldLegendre& lm);

/// dL/dy^a - sum_i D_i (dL/dy^a_i) with D_i the total derivative on J^2 E.
std::vector<Expr> field_el(const FieldModel& fm);
VarTable field_el_vars(const FieldModel& fm);

/// The field_el expressions evaluated at a second-order jet.
Vec field_el_at(const FieldModel& fm, const FieldSample2& s);

// Gridded sections.

struct Grid {
  std::vector<std::size_t> dims;  // nodes per base direction
  Vec origin;
  Vec spacing;

  std::size_t m() const { return dims.size(); }
  std::size_t nodes() const;
  std::vector<std::size_t> multi_index(std::size_t node) const;  // row-major, last index fastest
  std::size_t node(const std::vector<std::size_t>& idx) const;
  Vec coordinates(std::size_t node) const;
  void validate() const;
};

/// Values of y (k per node) and optionally p (m*k per node, layout
/// [j*k + b]) on a uniform grid.
struct PhaseSection {
  Grid grid;
  std::size_t k = 1;
  Vec y;
  Vec p;  // empty for y-only data

  bool has_momenta() const { return !p.empty(); }
  void validate() const;

  void write_csv(std::ostream& os) const;
  static PhaseSection read_csv(std::istream& is);
  // Little-endian: "PSEC", u32 version, u32 m, u32 k, u32 has_p,
  // u64 dims[m], f64 origin[m], f64 spacing[m], then per node y[k], p[m*k].
  void write_binary(std::ostream& os) const;
  static PhaseSection read_binary(std::istream& is);
};

/// Samples y = f(x) (and p = g(x) when given) on the grid.
PhaseSection sample_section(const Grid& grid, std::size_t k, const std::function<Vec(const Vec&)>& y,
                            const std::function<Vec(const Vec&)>& p = {});

enum class ResidualKind { el, dynamics, hamilton };

struct ResidualGrid {
  std::vector<std::size_t> nodes;  // interior node ids
  std::size_t equations = 0;
  Vec values;                      // [n * equations + e]
  double max = 0.0;

  double node_max(std::size_t n) const;
};

/// Residuals of the chosen system at interior nodes with second-order
/// central differences. OpenMP-parallel over nodes.
ResidualGrid pde_residual(const FieldModel& fm, const PhaseSection& section, ResidualKind which);
/// Single-threaded reference implementation of pde_residual.
ResidualGrid pde_residual_serial(const FieldModel& fm, const PhaseSection& section, ResidualKind which);

// Exterior algebra for a constant metric.

/// Increasing index tuples of length `degree` in lexicographic order; the
/// coefficient layout of degree-forms.
std::vector<std::vector<std::size_t>> form_basis(std::size_t m, std::size_t degree);

/// Hodge star of a degree-form with volume sqrt|det g| dx1^...^dxm.
Vec hodge_star(const Eigen::MatrixXd& g, const Vec& form, std::size_t degree);
Vec hodge_star(const FieldModel& fm, const Vec& form, std::size_t degree);

// Canonical forms on PE.

/// Tangent vector at (x, y, p): components (dx, dy, dp) with dp in the
/// momentum layout [j*k + b].
struct PhaseTangent {
  Vec dx, dy, dp;
};

struct CanonicalForms {
  Vec theta;  // coefficients of eta_i, i = 1..m
  Vec omega;
};

/// theta(u)_i = p^i_a u.dy^a and omega(u, w)_i = u.dp^i_a w.dy^a - w.dp^i_a u.dy^a.
CanonicalForms canonical_forms_eval(FieldShape shape, const Vec& x, const Vec& y, const Vec& p, const PhaseTangent& u,
                                    const PhaseTangent& w);

struct JDaggerValue {
  double value = 0.0;  // A + B^j_a y^a_j
  Vec phase_part;      // B
};

/// Splits A eta + B^i_a dy^a ^ eta_i at the jet (y, yjet). B uses the
/// momentum layout [j*k + a].
JDaggerValue jdagger_eval(FieldShape shape, double A, const Vec& B, const Vec& y, const Vec& yjet);

// m = 1 degeneration.

/// Field names renamed to mechanics names: y_d1 -> v_y, p1_y -> p_y,
/// p1_y_d1 -> pdot_y, y_d1d1 -> yddot.
std::map<std::string, std::string> mechanics_renaming(const FieldModel& fm);

/// The mechanics model matching an m = 1 field model; the base coordinate
/// becomes the explicit time variable.
MechModel as_mechanics(const FieldModel& fm);

}  // namespace ttriple
