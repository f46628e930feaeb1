#include "ttriple/models.hpp"

#include <cmath>
#include <limits>
#include <random>

namespace ttriple {

namespace {

Expr var(const std::string& n) { return Expr::variable(n); }

Expr scaled(double c, const Expr& e) {
  if (c == 1.0) return e;
  if (c == -1.0) return -e;
  return Expr(c) * e;
}

void add_term(std::optional<Expr>& acc, const Expr& t) { acc = acc ? *acc + t : t; }

std::vector<std::string> numbered(const std::string& stem, std::size_t n) {
  std::vector<std::string> out;
  for (std::size_t i = 1; i <= n; ++i) out.push_back(stem + std::to_string(i));
  return out;
}

MechModel mech(std::vector<std::string> coords, const std::string& L) {
  MechModel m;
  m.coords = std::move(coords);
  m.L = parse(L);
  return m;
}

ModelCatalogEntry mech_entry(std::string name, MechModel m, std::vector<std::string> expected, std::string notes) {
  return {std::move(name), ModelKind::mechanics, std::move(m), std::move(expected), std::move(notes)};
}

ModelCatalogEntry field_entry(std::string name, FieldModel m, std::vector<std::string> expected, std::string notes) {
  return {std::move(name), ModelKind::field, std::move(m), std::move(expected), std::move(notes)};
}

Eigen::MatrixXd euclidean(std::size_t m) { return Eigen::MatrixXd::Identity(Eigen::Index(m), Eigen::Index(m)); }

Eigen::MatrixXd lorentzian4() {
  Eigen::MatrixXd g = euclidean(4);
  g(0, 0) = -1.0;
  return g;
}

}  // namespace

FieldModel scalar_field(const Eigen::MatrixXd& g) {
  const auto m = std::size_t(g.rows());
  FieldModel fm;
  fm.bases = numbered("x", m);
  fm.fibers = {"y"};
  fm.metric = g;
  const Eigen::MatrixXd gi = g.inverse();
  const double vol = std::sqrt(std::abs(g.determinant()));
  std::optional<Expr> L, H;
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      const double cl = 0.5 * vol * gi(Eigen::Index(i), Eigen::Index(j));
      if (cl != 0.0) add_term(L, scaled(cl, var(fm.jet(0, i)) * var(fm.jet(0, j))));
      const double ch = 0.5 * g(Eigen::Index(i), Eigen::Index(j)) / vol;
      if (ch != 0.0) add_term(H, scaled(ch, var(fm.momentum(i, 0)) * var(fm.momentum(j, 0))));
    }
  }
  fm.L = simplify(*L);
  fm.H = simplify(*H);
  fm.validate();
  return fm;
}

std::vector<Expr> field_strength(const FieldModel& em) {
  if (em.k() != em.m()) throw ShapeError("field_strength: fiber count must equal base dimension");
  std::vector<Expr> F;
  for (const auto& ij : form_basis(em.m(), 2))
    F.push_back(var(em.jet(ij[1], ij[0])) - var(em.jet(ij[0], ij[1])));
  return F;
}

FieldModel electromagnetic(const Eigen::MatrixXd& g) {
  const auto m = std::size_t(g.rows());
  FieldModel fm;
  fm.bases = numbered("x", m);
  fm.fibers = numbered("A", m);
  fm.metric = g;
  const Eigen::MatrixXd gi = g.inverse();
  const double vol = std::sqrt(std::abs(g.determinant()));
  const auto basis = form_basis(m, 2);
  const auto F = field_strength(fm);
  std::optional<Expr> L;
  for (std::size_t I = 0; I < basis.size(); ++I) {
    const auto i = Eigen::Index(basis[I][0]), j = Eigen::Index(basis[I][1]);
    std::optional<Expr> up;
    double diag = 0.0;
    bool diagonal = true;
    for (std::size_t J = 0; J < basis.size(); ++J) {
      const auto a = Eigen::Index(basis[J][0]), b = Eigen::Index(basis[J][1]);
      const double c = gi(i, a) * gi(j, b) - gi(i, b) * gi(j, a);
      if (c == 0.0) continue;
      add_term(up, scaled(c, F[J]));
      if (J == I) diag = c;
      else diagonal = false;
    }
    if (!up) continue;
    if (diagonal) add_term(L, scaled(0.5 * vol * diag, pow(F[I], Expr(2.0))));
    else add_term(L, scaled(0.5 * vol, F[I] * *up));
  }
  fm.L = *L;
  fm.validate();
  return fm;
}

FieldModel vector_field(std::size_t m, std::size_t k, double mass) {
  FieldModel fm;
  fm.bases = numbered("x", m);
  fm.fibers = numbered("y", k);
  std::optional<Expr> L, H;
  const double mu2 = mass * mass;
  for (std::size_t a = 0; a < k; ++a) {
    for (std::size_t i = 0; i < m; ++i) {
      add_term(L, scaled(0.5, pow(var(fm.jet(a, i)), Expr(2.0))));
      add_term(H, scaled(0.5, pow(var(fm.momentum(i, a)), Expr(2.0))));
    }
    if (mu2 != 0.0) {
      add_term(L, scaled(-0.5 * mu2, pow(var(fm.fibers[a]), Expr(2.0))));
      add_term(H, scaled(0.5 * mu2, pow(var(fm.fibers[a]), Expr(2.0))));
    }
  }
  fm.L = simplify(*L);
  fm.H = simplify(*H);
  fm.validate();
  return fm;
}

std::vector<std::string> derived_text(const MechModel& m) {
  std::vector<std::string> out;
  for (const auto& line : lagrangian_dynamics(m).text()) out.push_back("D: " + line);
  const VarTable vt = euler_lagrange_vars(m);
  for (const auto& e : euler_lagrange(m)) out.push_back("EL: " + format_equation(e, &vt));
  return out;
}

std::vector<std::string> derived_text(const FieldModel& fm) {
  std::vector<std::string> out;
  for (const auto& line : field_dynamics(fm).text()) out.push_back("D: " + line);
  const VarTable vt = field_el_vars(fm);
  for (const auto& e : field_el(fm)) out.push_back("EL: " + format_equation(e, &vt));
  return out;
}

std::vector<std::string> derived_text(const ModelCatalogEntry& e) {
  return e.kind == ModelKind::mechanics ? derived_text(e.mech()) : derived_text(e.field());
}

std::vector<ModelCatalogEntry> catalog(bool include_lorentzian) {
  std::vector<ModelCatalogEntry> out;

  out.push_back(mech_entry("ho", mech({"q"}, "0.5*v_q^2 - 0.5*q^2"),
                           {"D: p_q - v_q = 0", "D: pdot_q + q = 0", "EL: qddot + q = 0"},
                           "harmonic oscillator, unit mass and frequency"));

  out.push_back(mech_entry("free", mech({"x"}, "0.5*v_x^2"), {"D: p_x - v_x = 0", "D: pdot_x = 0", "EL: xddot = 0"},
                           "free particle"));

  out.push_back(mech_entry("singular", mech({"x1", "x2"}, "0.5*(v_x1 - v_x2)^2"),
                           {"D: p_x1 - v_x1 + v_x2 = 0", "D: p_x2 + v_x1 - v_x2 = 0", "D: pdot_x1 = 0",
                            "D: pdot_x2 = 0", "EL: x1ddot - x2ddot = 0", "EL: x1ddot - x2ddot = 0"},
                           "velocity Hessian of rank 1; momenta satisfy p_x1 + p_x2 = 0"));

  {
    FieldModel fm;
    fm.bases = {"t"};
    fm.fibers = {"q"};
    fm.L = parse("0.5*q_d1^2 - 0.5*q^2");
    fm.H = parse("0.5*p1_q^2 + 0.5*q^2");
    out.push_back(field_entry("timedep", fm, {"D: p1_q - q_d1 = 0", "D: p1_q_d1 + q = 0", "EL: q_d1d1 + q = 0"},
                              "oscillator as a field over the time line E = Q x R -> R; reduces to ho"));
  }

  out.push_back(field_entry("scalar2", scalar_field(euclidean(2)),
                            {"D: p1_y - y_d1 = 0", "D: p2_y - y_d2 = 0", "D: p1_y_d1 + p2_y_d2 = 0",
                             "EL: y_d1d1 + y_d2d2 = 0"},
                            "L = 1/2 f ^ *f and H = 1/2 p ^ *p, flat metric; EL is the Laplace equation"));

  out.push_back(field_entry("scalar3", scalar_field(euclidean(3)),
                            {"D: p1_y - y_d1 = 0", "D: p2_y - y_d2 = 0", "D: p3_y - y_d3 = 0",
                             "D: p1_y_d1 + p2_y_d2 + p3_y_d3 = 0", "EL: y_d1d1 + y_d2d2 + y_d3d3 = 0"},
                            "scalar field in three flat dimensions"));

  out.push_back(field_entry(
      "vector2", vector_field(2, 2, 1.0),
      {"D: p1_y1 - y1_d1 = 0", "D: p1_y2 - y2_d1 = 0", "D: p2_y1 - y1_d2 = 0", "D: p2_y2 - y2_d2 = 0",
       "D: p1_y1_d1 + p2_y1_d2 + y1 = 0", "D: p1_y2_d1 + p2_y2_d2 + y2 = 0", "EL: y1_d1d1 + y1_d2d2 + y1 = 0",
       "EL: y2_d1d1 + y2_d2d2 + y2 = 0"},
      "linear theory of a 2-component field, unit mass; phase maps alpha = alpha1 x alpha2"));

  out.push_back(field_entry(
      "em2", electromagnetic(euclidean(2)),
      {"D: p1_A1 = 0", "D: p1_A2 + A1_d2 - A2_d1 = 0", "D: p2_A1 - A1_d2 + A2_d1 = 0", "D: p2_A2 = 0",
       "D: p1_A1_d1 + p2_A1_d2 = 0", "D: p1_A2_d1 + p2_A2_d2 = 0", "EL: A1_d2d2 - A2_d1d2 = 0",
       "EL: A1_d1d2 - A2_d1d1 = 0"},
      "F_ij = A_j_d_i - A_i_d_j, L = 1/2 sum_{i<j} F_ij F^ij = 1/2 F ^ *F with orientation dx1 ^ dx2; "
      "Euclidean signature"));

  out.push_back(field_entry("em3", electromagnetic(euclidean(3)), {"D: p1_A1 = 0", "D: p1_A2 + A1_d2 - A2_d1 = 0", "D: p1_A3 + A1_d3 - A3_d1 = 0",
                             "D: p2_A1 - A1_d2 + A2_d1 = 0", "D: p2_A2 = 0", "D: p2_A3 + A2_d3 - A3_d2 = 0",
                             "D: p3_A1 - A1_d3 + A3_d1 = 0", "D: p3_A2 - A2_d3 + A3_d2 = 0", "D: p3_A3 = 0",
                             "D: p1_A1_d1 + p2_A1_d2 + p3_A1_d3 = 0", "D: p1_A2_d1 + p2_A2_d2 + p3_A2_d3 = 0",
                             "D: p1_A3_d1 + p2_A3_d2 + p3_A3_d3 = 0",
                             "EL: A1_d2d2 + A1_d3d3 - A2_d1d2 - A3_d1d3 = 0",
                             "EL: A1_d1d2 - A2_d1d1 - A2_d3d3 + A3_d2d3 = 0",
                             "EL: A1_d1d3 + A2_d2d3 - A3_d1d1 - A3_d2d2 = 0"},
                            "three-dimensional Euclidean electromagnetics, same conventions as em2"));

  if (include_lorentzian)
    out.push_back(field_entry("em4", electromagnetic(lorentzian4()), {"D: p1_A1 = 0", "D: p1_A2 - A1_d2 + A2_d1 = 0", "D: p1_A3 - A1_d3 + A3_d1 = 0",
                               "D: p1_A4 - A1_d4 + A4_d1 = 0", "D: p2_A1 + A1_d2 - A2_d1 = 0", "D: p2_A2 = 0",
                               "D: p2_A3 + A2_d3 - A3_d2 = 0", "D: p2_A4 + A2_d4 - A4_d2 = 0",
                               "D: p3_A1 + A1_d3 - A3_d1 = 0", "D: p3_A2 - A2_d3 + A3_d2 = 0", "D: p3_A3 = 0",
                               "D: p3_A4 + A3_d4 - A4_d3 = 0", "D: p4_A1 + A1_d4 - A4_d1 = 0",
                               "D: p4_A2 - A2_d4 + A4_d2 = 0", "D: p4_A3 - A3_d4 + A4_d3 = 0", "D: p4_A4 = 0",
                               "D: p1_A1_d1 + p2_A1_d2 + p3_A1_d3 + p4_A1_d4 = 0",
                               "D: p1_A2_d1 + p2_A2_d2 + p3_A2_d3 + p4_A2_d4 = 0",
                               "D: p1_A3_d1 + p2_A3_d2 + p3_A3_d3 + p4_A3_d4 = 0",
                               "D: p1_A4_d1 + p2_A4_d2 + p3_A4_d3 + p4_A4_d4 = 0",
                               "EL: A1_d2d2 + A1_d3d3 + A1_d4d4 - A2_d1d2 - A3_d1d3 - A4_d1d4 = 0",
                               "EL: A1_d1d2 - A2_d1d1 + A2_d3d3 + A2_d4d4 - A3_d2d3 - A4_d2d4 = 0",
                               "EL: A1_d1d3 - A2_d2d3 - A3_d1d1 + A3_d2d2 + A3_d4d4 - A4_d3d4 = 0",
                               "EL: A1_d1d4 - A2_d2d4 - A3_d3d4 - A4_d1d1 + A4_d2d2 + A4_d3d3 = 0"},
                              "signature (-,+,+,+), x1 is time; indices raised with the inverse metric"));
  return out;
}

ModelCatalogEntry find_model(const std::string& name) {
  for (auto& e : catalog(true))
    if (e.name == name) return e;
  throw Error("unknown model '" + name + "'");
}

bool GeneratingFamilyCheck::pass(double tol) const {
  return samples > 0 && max_gradient_on_image <= tol && min_gradient_off_image > 1e-6 &&
         max_symmetric_momentum <= tol && symbolic_symmetric_zero;
}

GeneratingFamilyCheck em_generating_family_check(std::size_t m, int samples, std::uint64_t seed) {
  if (m < 2 || m > 3) throw Error("em_generating_family_check: m must be 2 or 3");
  const FieldModel fm = electromagnetic(euclidean(m));
  const std::size_t k = fm.k();
  const auto jets = fm.jets();
  const VarTable vt = field_el_vars(fm);

  // phi(j1A) = c + B^j_b A_b_d_j with B as symbols.
  std::vector<std::string> bnames;
  Expr phi = var("phi_c");
  for (std::size_t j = 0; j < m; ++j)
    for (std::size_t b = 0; b < k; ++b) {
      bnames.push_back("B" + std::to_string(j + 1) + "_" + std::to_string(b + 1));
      phi = phi + var(bnames.back()) * var(fm.jet(b, j));
    }
  const Expr H = phi - *fm.L;
  std::vector<Expr> grad;
  for (std::size_t j = 0; j < m; ++j)
    for (std::size_t b = 0; b < k; ++b) grad.push_back(simplify(diff(H, fm.jet(b, j), &vt), &vt));

  const FieldLegendre lm = field_legendre(fm);
  const MomentumSplit split = momentum_split(fm, lm);

  GeneratingFamilyCheck rep;
  rep.symbolic_symmetric_zero = true;
  for (const auto& row : split.symmetric)
    for (const auto& e : row)
      if (!e.is_number(0.0)) rep.symbolic_symmetric_zero = false;

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd;
  rep.min_gradient_off_image = std::numeric_limits<double>::infinity();
  for (int s = 0; s < samples; ++s) {
    PointTuple pt;
    for (std::size_t i = 0; i < m; ++i) pt[fm.bases[i]] = nd(rng);
    for (std::size_t a = 0; a < k; ++a) pt[fm.fibers[a]] = nd(rng);
    for (const auto& j : jets) pt[j] = nd(rng);
    pt["phi_c"] = nd(rng);

    Vec lambda(m * k);
    for (std::size_t i = 0; i < m * k; ++i) lambda[i] = evaluate(lm.momenta[i], pt);
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < m; ++j)
        rep.max_symmetric_momentum = std::max(
            rep.max_symmetric_momentum, std::abs(lambda[i * k + j] + lambda[j * k + i]));

    auto grad_norm = [&](const Vec& B) {
      for (std::size_t i = 0; i < bnames.size(); ++i) pt[bnames[i]] = B[i];
      double g = 0.0;
      for (const auto& e : grad) g = std::max(g, std::abs(evaluate(e, pt)));
      return g;
    };
    rep.max_gradient_on_image = std::max(rep.max_gradient_on_image, grad_norm(lambda));
    Vec off = lambda;
    for (double& b : off) b += 1e-3 * nd(rng);
    rep.min_gradient_off_image = std::min(rep.min_gradient_off_image, grad_norm(off));
    ++rep.samples;
  }
  return rep;
}

}  // namespace ttriple
