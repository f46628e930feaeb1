#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "ttriple/fieldtheory.hpp"
#include "ttriple/mechanics.hpp"

namespace ttriple {

enum class ModelKind { mechanics, field };

struct ModelCatalogEntry {
  std::string name;
  ModelKind kind;
  std::variant<MechModel, FieldModel> model;
  std::vector<std::string> expected;  // golden output of derived_text()
  std::string notes;

  const MechModel& mech() const { return std::get<MechModel>(model); }
  const FieldModel& field() const { return std::get<FieldModel>(model); }
};

/// Built-in models: ho, free, singular, timedep, scalar2, scalar3, vector2,
/// em2, em3, and em4 (Lorentzian) when requested.
std::vector<ModelCatalogEntry> catalog(bool include_lorentzian = false);
ModelCatalogEntry find_model(const std::string& name);

/// Stable text of the derived equations: "D: <eq>" lines for the dynamics
/// followed by "EL: <eq>" lines.
std::vector<std::string> derived_text(const ModelCatalogEntry& e);
std::vector<std::string> derived_text(const MechModel& m);
std::vector<std::string> derived_text(const FieldModel& fm);

// Model builders for constant metrics.

/// L = 1/2 sqrt|g| g^{ij} y_i y_j and H = 1/2 g_{ij} p^i p^j / sqrt|g|.
FieldModel scalar_field(const Eigen::MatrixXd& g);

/// Fibers A1..Am, F_ij = A_j_d_i - A_i_d_j and
/// L = 1/2 sqrt|g| sum_{i<j} F_ij F^ij.
FieldModel electromagnetic(const Eigen::MatrixXd& g);

/// Fibers y1..yk over a Euclidean base with
/// L = 1/2 sum (y^a_i)^2 - 1/2 mass^2 sum (y^a)^2 and the matching H.
FieldModel vector_field(std::size_t m, std::size_t k, double mass);

/// Field strength F_ij of an electromagnetic model, i < j, in
/// form_basis(m, 2) order.
std::vector<Expr> field_strength(const FieldModel& em);

struct GeneratingFamilyCheck {
  int samples = 0;
  double max_gradient_on_image = 0.0;   // |dH/d jet| with phi's linear part = lambda(j1A)
  double min_gradient_off_image = 0.0;  // same after perturbing phi off the image
  double max_symmetric_momentum = 0.0;  // |p^i_j + p^j_i| at lambda(j1A)
  bool symbolic_symmetric_zero = false;
  bool pass(double tol = 1e-10) const;
};

/// Samples random first jets j1A of the Euclidean electromagnetic model in
/// dimension m and checks the critical points of the generating family
/// H(phi, j1A) = phi(j1A) - L(j1A) in the jet directions.
GeneratingFamilyCheck em_generating_family_check(std::size_t m, int samples, std::uint64_t seed = 0);

}  // namespace ttriple
