#include "ttriple/bundlemaps.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace ttriple {

namespace {

void require_size(const Vec& v, std::size_t n, const char* what) {
  if (v.size() != n) {
    throw ShapeError(std::string(what) + " has " + std::to_string(v.size()) + " entries, expected " +
                     std::to_string(n));
  }
}

double dot(const Vec& a, const Vec& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

Vec negated(Vec v) {
  for (double& x : v) x = -x;
  return v;
}

bool close(const Vec& a, const Vec& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (std::abs(a[i] - b[i]) > 1e-12 * (1.0 + std::abs(a[i]))) return false;
  }
  return true;
}

Vec concat(std::initializer_list<const Vec*> blocks) {
  Vec out;
  for (const Vec* b : blocks) out.insert(out.end(), b->begin(), b->end());
  return out;
}

// sum_l p^l_{d,l}
Vec pjet_trace(const J1PhasePoint& pt) {
  const auto [m, k] = pt.shape;
  Vec tr(k, 0.0);
  for (std::size_t d = 0; d < k; ++d) {
    for (std::size_t l = 0; l < m; ++l) tr[d] += pt.pjet_at(l, d, l);
  }
  return tr;
}

}  // namespace

void TTMPoint::validate() const {
  if (x.empty()) throw ShapeError("TTM point has dimension 0");
  require_size(xdot, x.size(), "xdot");
  require_size(dx, x.size(), "dx");
  require_size(dxdot, x.size(), "dxdot");
}

void TTStarMPoint::validate() const {
  if (x.empty()) throw ShapeError("TT*M point has dimension 0");
  require_size(p, x.size(), "p");
  require_size(xdot, x.size(), "xdot");
  require_size(pdot, x.size(), "pdot");
}

void CotangentOfBundlePoint::validate() const {
  require_size(pbase, base.size(), "pbase");
  require_size(pfiber, fiber.size(), "pfiber");
}

void J1PhasePoint::validate() const {
  const auto [m, k] = shape;
  require_size(x, m, "x");
  require_size(y, k, "y");
  require_size(p, m * k, "p");
  require_size(yjet, m * k, "yjet");
  require_size(pjet, m * m * k, "pjet");
}

void VPlusJ1Point::validate() const {
  const auto [m, k] = shape;
  require_size(x, m, "x");
  require_size(y, k, "y");
  require_size(yjet, m * k, "yjet");
  require_size(piy, k, "piy");
  require_size(pijet, m * k, "pijet");
}

void PJDaggerPoint::validate() const {
  const auto [m, k] = shape;
  require_size(x, m, "x");
  require_size(y, k, "y");
  require_size(p, m * k, "p");
  require_size(py, k, "py");
  require_size(yjet, m * k, "yjet");
}

void VJ1Point::validate() const {
  const auto [m, k] = shape;
  require_size(x, m, "x");
  require_size(y, k, "y");
  require_size(yjet, m * k, "yjet");
  require_size(dy, k, "dy");
  require_size(dyjet, m * k, "dyjet");
}

void J1VPoint::validate() const {
  const auto [m, k] = shape;
  require_size(x, m, "x");
  require_size(y, k, "y");
  require_size(dy, k, "dy");
  require_size(yjet, m * k, "yjet");
  require_size(dyjet, m * k, "dyjet");
}

TTMPoint kappa(const TTMPoint& pt) {
  pt.validate();
  return TTMPoint{pt.x, pt.dx, pt.xdot, pt.dxdot};
}

CotangentOfBundlePoint alpha_mech(const TTStarMPoint& pt) {
  pt.validate();
  return CotangentOfBundlePoint{pt.x, pt.xdot, pt.pdot, pt.p};
}

TTStarMPoint alpha_mech_inverse(const CotangentOfBundlePoint& pt) {
  pt.validate();
  if (pt.fiber.size() != pt.base.size()) throw ShapeError("alpha_mech_inverse needs a point of T*TM");
  return TTStarMPoint{pt.base, pt.pfiber, pt.fiber, pt.pbase};
}

CotangentOfBundlePoint beta_mech(const TTStarMPoint& pt) {
  pt.validate();
  return CotangentOfBundlePoint{pt.x, pt.p, negated(pt.pdot), pt.xdot};
}

CotangentOfBundlePoint r_map(const CotangentOfBundlePoint& pt) {
  pt.validate();
  return CotangentOfBundlePoint{pt.base, pt.pfiber, negated(pt.pbase), pt.fiber};
}

double tangent_pairing(const TTStarMPoint& X, const TTMPoint& Y) {
  X.validate();
  Y.validate();
  if (X.dim() != Y.dim()) throw ShapeError("tangent_pairing: dimension mismatch");
  if (!close(X.x, Y.x)) throw BaseMismatchError("tangent_pairing: base points differ");
  if (!close(X.xdot, Y.dx)) throw BaseMismatchError("tangent_pairing: base velocities differ");
  return dot(X.pdot, Y.xdot) + dot(X.p, Y.dxdot);
}

double covector_pairing(const CotangentOfBundlePoint& a, const Vec& dbase, const Vec& dfiber) {
  a.validate();
  require_size(dbase, a.base.size(), "dbase");
  require_size(dfiber, a.fiber.size(), "dfiber");
  return dot(a.pbase, dbase) + dot(a.pfiber, dfiber);
}

VPlusJ1Point alpha_field(const J1PhasePoint& pt) {
  pt.validate();
  return VPlusJ1Point{pt.shape, pt.x, pt.y, pt.yjet, pjet_trace(pt), pt.p};
}

PJDaggerPoint beta_field(const J1PhasePoint& pt) {
  pt.validate();
  return PJDaggerPoint{pt.shape, pt.x, pt.y, pt.p, negated(pjet_trace(pt)), pt.yjet};
}

J1VPoint kappa_field(const VJ1Point& pt) {
  pt.validate();
  return J1VPoint{pt.shape, pt.x, pt.y, pt.dy, pt.yjet, pt.dyjet};
}

VJ1Point kappa_field_inverse(const J1VPoint& pt) {
  pt.validate();
  return VJ1Point{pt.shape, pt.x, pt.y, pt.yjet, pt.dy, pt.dyjet};
}

double field_covector_pairing(const VPlusJ1Point& a, const J1VPoint& v) {
  a.validate();
  v.validate();
  if (a.shape != v.shape) throw ShapeError("field_covector_pairing: shape mismatch");
  if (!close(a.x, v.x) || !close(a.y, v.y) || !close(a.yjet, v.yjet)) {
    throw BaseMismatchError("field_covector_pairing: points lie over different jets");
  }
  return dot(a.piy, v.dy) + dot(a.pijet, v.dyjet);
}

double field_pairing(const J1PhasePoint& P, const VJ1Point& V) {
  P.validate();
  V.validate();
  if (P.shape != V.shape) throw ShapeError("field_pairing: shape mismatch");
  if (!close(P.x, V.x) || !close(P.y, V.y) || !close(P.yjet, V.yjet)) {
    throw BaseMismatchError("field_pairing: points lie over different jets");
  }
  const auto [m, k] = P.shape;
  double s = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t a = 0; a < k; ++a) {
      s += P.pjet_at(i, a, i) * V.dy[a] + P.p_at(i, a) * V.dyjet[i * k + a];
    }
  }
  return s;
}

Vec flatten(const TTMPoint& pt) { return concat({&pt.x, &pt.xdot, &pt.dx, &pt.dxdot}); }
Vec flatten(const TTStarMPoint& pt) { return concat({&pt.x, &pt.p, &pt.xdot, &pt.pdot}); }
Vec flatten(const CotangentOfBundlePoint& pt) { return concat({&pt.base, &pt.fiber, &pt.pbase, &pt.pfiber}); }
Vec flatten(const J1PhasePoint& pt) { return concat({&pt.x, &pt.y, &pt.p, &pt.yjet, &pt.pjet}); }
Vec flatten(const VPlusJ1Point& pt) { return concat({&pt.x, &pt.y, &pt.yjet, &pt.piy, &pt.pijet}); }
Vec flatten(const PJDaggerPoint& pt) { return concat({&pt.x, &pt.y, &pt.p, &pt.py, &pt.yjet}); }
Vec flatten(const VJ1Point& pt) { return concat({&pt.x, &pt.y, &pt.yjet, &pt.dy, &pt.dyjet}); }
Vec flatten(const J1VPoint& pt) { return concat({&pt.x, &pt.y, &pt.dy, &pt.yjet, &pt.dyjet}); }

double omega_cotangent(const CotangentOfBundlePoint& u, const CotangentOfBundlePoint& w) {
  u.validate();
  w.validate();
  return dot(u.pbase, w.base) - dot(u.base, w.pbase) + dot(u.pfiber, w.fiber) - dot(u.fiber, w.pfiber);
}

double omega_tangent_lift(const TTStarMPoint& u, const TTStarMPoint& w) {
  u.validate();
  w.validate();
  return dot(u.pdot, w.x) - dot(u.x, w.pdot) + dot(u.p, w.xdot) - dot(u.xdot, w.p);
}

double omega_m(const Vec& ux, const Vec& up, const Vec& wx, const Vec& wp) {
  require_size(up, ux.size(), "up");
  require_size(wx, ux.size(), "wx");
  require_size(wp, ux.size(), "wp");
  return dot(up, wx) - dot(ux, wp);
}

}  // namespace ttriple
