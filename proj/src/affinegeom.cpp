#include "ttriple/affinegeom.hpp"

#include <algorithm>
#include <cmath>

namespace ttriple {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

VectorXd to_eigen(const Vec& v) { return Eigen::Map<const VectorXd>(v.data(), static_cast<Eigen::Index>(v.size())); }

Vec to_vec(const VectorXd& v) { return Vec(v.data(), v.data() + v.size()); }

double smallest_singular_value(const MatrixXd& M) {
  if (M.cols() == 0) return 1.0;
  Eigen::JacobiSVD<MatrixXd> svd(M);
  return svd.singularValues().minCoeff();
}

MatrixXd random_matrix(std::mt19937_64& rng, int rows, int cols) {
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  MatrixXd M(rows, cols);
  for (int j = 0; j < cols; ++j) {
    for (int i = 0; i < rows; ++i) M(i, j) = d(rng);
  }
  return M;
}

void check_size(const Vec& v, int n, const char* what) {
  if (static_cast<int>(v.size()) != n) {
    throw ShapeError(std::string(what) + " has " + std::to_string(v.size()) + " entries, expected " +
                     std::to_string(n));
  }
}

// E a: minimum-norm covector on V restricting to a on W.
MatrixXd extension_matrix(const SubspacePair& sp) {
  const MatrixXd& B = sp.basisW;
  if (B.cols() == 0) return MatrixXd::Zero(sp.dimV, 0);
  return B * (B.transpose() * B).inverse();
}

PhasePoint unflatten(const VectorXd& z, int n, int k) {
  const int r = n - k;
  PhasePoint pt;
  pt.q = to_vec(z.segment(0, r));
  pt.a = to_vec(z.segment(r, k));
  pt.rho_q = to_vec(z.segment(r + k, r));
  pt.rho_a = to_vec(z.segment(2 * r + k, k));
  return pt;
}

double source_form(const VectorXd& u, const VectorXd& w, int n, int k) {
  const int r = n - k;
  const int half = n;
  double s = 0.0;
  for (int i = 0; i < r; ++i) s += u(half + i) * w(i) - u(i) * w(half + i);
  for (int i = 0; i < k; ++i) s += u(half + r + i) * w(r + i) - u(r + i) * w(half + r + i);
  return s;
}

double target_form(const CotangentPoint& u, const CotangentPoint& w) {
  double s = 0.0;
  for (std::size_t i = 0; i < u.v.size(); ++i) s += u.alpha[i] * w.v[i] - u.v[i] * w.alpha[i];
  return s;
}

std::uint64_t trial_seed(std::uint64_t seed, std::uint64_t trial) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(trial), static_cast<std::uint32_t>(trial >> 32)};
  std::uint32_t words[2];
  seq.generate(words, words + 2);
  return (static_cast<std::uint64_t>(words[0]) << 32) | words[1];
}

}  // namespace

void SubspacePair::validate() const {
  if (dimV < 0 || basisW.rows() != dimV) throw ShapeError("basisW must have dimV rows");
  if (basisW.cols() > dimV) throw ShapeError("dim W exceeds dim V");
  if (basisW.cols() > 0 && smallest_singular_value(basisW) < 1e-8) {
    throw Error("basisW columns are linearly dependent");
  }
}

double AffineDualElement::operator()(const Vec& a) const {
  check_size(a, static_cast<int>(linear.size()), "argument");
  double s = constant;
  for (std::size_t i = 0; i < a.size(); ++i) s += linear[i] * a[i];
  return s;
}

Vec affine_dual_projection(const AffineDualElement& phi) { return phi.linear; }

AffineDifferential phase_of_avbundle(const Expr& F, const std::vector<std::string>& coords, const Vec& point) {
  check_size(point, static_cast<int>(coords.size()), "point");
  PointTuple pt;
  for (std::size_t i = 0; i < coords.size(); ++i) pt[coords[i]] = point[i];
  AffineDifferential out{point, Vec(coords.size())};
  for (std::size_t i = 0; i < coords.size(); ++i) out.covector[i] = evaluate(diff(F, coords[i]), pt);
  return out;
}

MatrixXd annihilator_basis(const SubspacePair& sp) {
  const int n = sp.dimV, k = sp.dimW();
  if (k == 0) return MatrixXd::Identity(n, n);
  Eigen::JacobiSVD<MatrixXd> svd(sp.basisW.transpose(), Eigen::ComputeFullV);
  return svd.matrixV().rightCols(n - k);
}

QuotientFrame quotient_frame(const SubspacePair& sp, const ComplementChoice& u) {
  sp.validate();
  const int n = sp.dimV, k = sp.dimW();
  if (u.basisU.rows() != n || u.basisU.cols() != n - k) throw ShapeError("basisU must be dimV x (dimV - dimW)");
  MatrixXd M(n, n);
  M << sp.basisW, u.basisU;
  if (smallest_singular_value(M) < 1e-8) throw Error("complement does not span V together with W");

  QuotientFrame fr;
  fr.C = annihilator_basis(sp);
  if (k == 0) {
    // U = V and q = v.
    fr.F = MatrixXd::Identity(n, n);
  } else {
    fr.F = u.basisU * (fr.C.transpose() * u.basisU).inverse();
  }
  MatrixXd rhs = MatrixXd::Zero(n, k);
  rhs.topRows(k) = MatrixXd::Identity(k, k);
  fr.G = M.transpose().fullPivLu().solve(rhs);
  return fr;
}

CotangentPoint theorem1_iso(const SubspacePair& sp, const ComplementChoice& u, const PhasePoint& pt) {
  const int n = sp.dimV, k = sp.dimW();
  check_size(pt.q, n - k, "q");
  check_size(pt.a, k, "a");
  check_size(pt.rho_q, n - k, "rho_q");
  check_size(pt.rho_a, k, "rho_a");
  const QuotientFrame fr = quotient_frame(sp, u);
  // r(q0 + dq, a0 + da) = <b, F(q0 + dq)> - <G(a0 + da), w> has differential
  // (rho_q, rho_a) exactly when b = C rho_q and w = -B rho_a.
  const VectorXd v = fr.F * to_eigen(pt.q) - sp.basisW * to_eigen(pt.rho_a);
  const VectorXd alpha = fr.G * to_eigen(pt.a) + fr.C * to_eigen(pt.rho_q);
  return {to_vec(v), to_vec(alpha)};
}

PhasePoint affine_differential(const SubspacePair& sp, const ComplementChoice& u, const QuadraticSection& s,
                               const Vec& q0, const Vec& a0) {
  const int n = sp.dimV, k = sp.dimW();
  check_size(q0, n - k, "q0");
  check_size(a0, k, "a0");
  if (s.H.rows() != n || s.H.cols() != n || s.grad.size() != n) throw ShapeError("section must be quadratic in (q, a)");
  const QuotientFrame fr = quotient_frame(sp, u);
  const MatrixXd E = extension_matrix(sp);

  VectorXd z(n);
  z << to_eigen(q0), to_eigen(a0);
  const VectorXd dg = 0.5 * (s.H + s.H.transpose()) * z + s.grad;

  // r_U(q, a) = phi_{q,a}(F q) = a^T E^T F q + g(q, a)
  PhasePoint pt{q0, a0, {}, {}};
  pt.rho_q = to_vec(fr.F.transpose() * (E * to_eigen(a0)) + dg.head(n - k));
  pt.rho_a = to_vec(E.transpose() * (fr.F * to_eigen(q0)) + dg.tail(k));
  return pt;
}

SymplectoReport check_symplecto(const SubspacePair& sp, const ComplementChoice& u, int trials, std::uint64_t seed) {
  if (trials < 1) throw Error("trials must be at least 1");
  const int n = sp.dimV, k = sp.dimW();
  quotient_frame(sp, u);  // rank check before the parallel region

  std::vector<double> dev(static_cast<std::size_t>(trials));
  std::vector<VectorXd> us(dev.size()), ws(dev.size());
#pragma omp parallel for schedule(static)
  for (int t = 0; t < trials; ++t) {
    std::mt19937_64 rng(trial_seed(seed, static_cast<std::uint64_t>(t)));
    std::uniform_real_distribution<double> d(-1.0, 1.0);
    VectorXd du(2 * n), dw(2 * n);
    for (int i = 0; i < 2 * n; ++i) du(i) = d(rng);
    for (int i = 0; i < 2 * n; ++i) dw(i) = d(rng);
    // The map is linear, so its tangent map is the map itself.
    const CotangentPoint Tu = theorem1_iso(sp, u, unflatten(du, n, k));
    const CotangentPoint Tw = theorem1_iso(sp, u, unflatten(dw, n, k));
    dev[t] = std::abs(target_form(Tu, Tw) - source_form(du, dw, n, k));
    us[t] = du;
    ws[t] = dw;
  }

  SymplectoReport rep;
  rep.trials = trials;
  for (int t = 0; t < trials; ++t) {
    if (rep.worst_trial < 0 || dev[t] > rep.max_deviation) {
      rep.max_deviation = dev[t];
      rep.worst_trial = t;
    }
  }
  rep.worst_u = to_vec(us[rep.worst_trial]);
  rep.worst_w = to_vec(ws[rep.worst_trial]);
  return rep;
}

Theorem1Instance random_theorem1_instance(std::mt19937_64& rng, int dimV, int dimW) {
  if (dimV < 1 || dimW < 0 || dimW > dimV) throw Error("need 0 <= dimW <= dimV and dimV >= 1");
  for (;;) {
    Theorem1Instance inst;
    inst.sp = {dimV, random_matrix(rng, dimV, dimW)};
    inst.u = {random_matrix(rng, dimV, dimV - dimW)};
    inst.u2 = {random_matrix(rng, dimV, dimV - dimW)};
    if (dimW > 0 && smallest_singular_value(inst.sp.basisW) < 1e-8) continue;
    MatrixXd M1(dimV, dimV), M2(dimV, dimV);
    M1 << inst.sp.basisW, inst.u.basisU;
    M2 << inst.sp.basisW, inst.u2.basisU;
    if (smallest_singular_value(M1) < 1e-8 || smallest_singular_value(M2) < 1e-8) continue;
    return inst;
  }
}

Theorem1SuiteReport theorem1_suite(int instances, std::uint64_t seed, int max_dim, int trials_per_instance) {
  if (instances < 1 || max_dim < 1) throw Error("theorem1_suite needs instances >= 1 and max_dim >= 1");
  std::vector<double> indep(static_cast<std::size_t>(instances)), sympl(indep.size());

#pragma omp parallel for schedule(dynamic)
  for (int i = 0; i < instances; ++i) {
    const std::uint64_t s = trial_seed(seed, static_cast<std::uint64_t>(i));
    std::mt19937_64 rng(s);
    const int n = std::uniform_int_distribution<int>(1, max_dim)(rng);
    const int k = std::uniform_int_distribution<int>(0, n)(rng);
    const Theorem1Instance inst = random_theorem1_instance(rng, n, k);

    QuadraticSection sec{random_matrix(rng, n, n), random_matrix(rng, n, 1).col(0), 0.3};
    const Vec q0 = to_vec(random_matrix(rng, n - k, 1).col(0));
    const Vec a0 = to_vec(random_matrix(rng, k, 1).col(0));
    const CotangentPoint o1 = theorem1_iso(inst.sp, inst.u, affine_differential(inst.sp, inst.u, sec, q0, a0));
    const CotangentPoint o2 = theorem1_iso(inst.sp, inst.u2, affine_differential(inst.sp, inst.u2, sec, q0, a0));
    double d = 0.0;
    for (int j = 0; j < n; ++j) {
      d = std::max({d, std::abs(o1.v[j] - o2.v[j]), std::abs(o1.alpha[j] - o2.alpha[j])});
    }
    indep[i] = d;
    sympl[i] = std::max(check_symplecto(inst.sp, inst.u, trials_per_instance, s).max_deviation,
                        check_symplecto(inst.sp, inst.u2, trials_per_instance, s + 1).max_deviation);
  }

  Theorem1SuiteReport rep;
  rep.instances = instances;
  rep.max_independence = *std::max_element(indep.begin(), indep.end());
  rep.max_symplecto = *std::max_element(sympl.begin(), sympl.end());

  std::mt19937_64 rng(trial_seed(seed, 0xffffffffull));
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  rep.trivial_case_exact = true;
  rep.full_case_exact = true;
  for (int n = 1; n <= max_dim; ++n) {
    auto draw = [&](int len) {
      Vec v(static_cast<std::size_t>(len));
      for (double& x : v) x = d(rng);
      return v;
    };
    // W = {0}: the identity of T*V for every admissible complement.
    const SubspacePair zero{n, MatrixXd::Zero(n, 0)};
    const ComplementChoice whole{random_matrix(rng, n, n)};
    const PhasePoint p0{draw(n), {}, draw(n), {}};
    const CotangentPoint i0 = theorem1_iso(zero, whole, p0);
    rep.trivial_case_exact = rep.trivial_case_exact && i0.v == p0.q && i0.alpha == p0.rho_q &&
                             check_symplecto(zero, whole, 4, seed).max_deviation == 0.0;

    // W = V: -R_V undoes the map, with V* written in the dual basis.
    const SubspacePair full{n, MatrixXd::Identity(n, n)};
    const ComplementChoice none{MatrixXd::Zero(n, 0)};
    const PhasePoint p1{{}, draw(n), {}, draw(n)};
    const CotangentPoint i1 = theorem1_iso(full, none, p1);
    CotangentOfBundlePoint back = r_map(CotangentOfBundlePoint{{}, i1.v, {}, i1.alpha});
    for (double& x : back.pfiber) x = -x;
    rep.full_case_exact = rep.full_case_exact && back.fiber == p1.a && back.pfiber == p1.rho_a;
  }
  return rep;
}

}  // namespace ttriple
