#include "ttriple/fieldtheory.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <exception>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>

namespace ttriple {

namespace {

std::string idx(std::size_t i) { return std::to_string(i + 1); }

void require_shape(bool ok, const char* what) {
  if (!ok) throw ShapeError(what);
}

}  // namespace

// ------------------------------------------------------------------ model

std::string FieldModel::jet(std::size_t a, std::size_t i) const {
  return fibers.at(a) + "_d" + idx(i);
}

std::string FieldModel::jet2(std::size_t a, std::size_t i, std::size_t j) const {
  if (i > j) std::swap(i, j);
  return fibers.at(a) + "_d" + idx(i) + "d" + idx(j);
}

std::string FieldModel::momentum(std::size_t j, std::size_t b) const { return "p" + idx(j) + "_" + fibers.at(b); }

std::string FieldModel::momentum_jet(std::size_t l, std::size_t d, std::size_t i) const {
  return momentum(l, d) + "_d" + idx(i);
}

std::vector<std::string> FieldModel::jets() const {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < m(); ++i)
    for (std::size_t a = 0; a < k(); ++a) out.push_back(jet(a, i));
  return out;
}

std::vector<std::string> FieldModel::momenta() const {
  std::vector<std::string> out;
  for (std::size_t j = 0; j < m(); ++j)
    for (std::size_t b = 0; b < k(); ++b) out.push_back(momentum(j, b));
  return out;
}

std::vector<std::string> FieldModel::momentum_jets() const {
  std::vector<std::string> out;
  for (std::size_t l = 0; l < m(); ++l)
    for (std::size_t d = 0; d < k(); ++d)
      for (std::size_t i = 0; i < m(); ++i) out.push_back(momentum_jet(l, d, i));
  return out;
}

std::vector<std::string> FieldModel::second_jets() const {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < m(); ++i)
    for (std::size_t j = 0; j < m(); ++j)
      for (std::size_t a = 0; a < k(); ++a) out.push_back(jet2(a, i, j));
  return out;
}

VarTable FieldModel::vars() const {
  VarTable vt;
  for (std::size_t a = 0; a < k(); ++a) {
    const auto [stem, index] = split_index(fibers[a]);
    const std::string s = latex_identifier(fibers[a]);
    auto sub = [&](const std::string& extra) {
      return stem + "_{" + (index.empty() ? extra : index + "," + extra) + "}";
    };
    vt.add(fibers[a], VarRole::fiber, s);
    for (std::size_t i = 0; i < m(); ++i) vt.add(jet(a, i), VarRole::velocity, sub(idx(i)));
    for (std::size_t i = 0; i < m(); ++i)
      for (std::size_t j = i; j < m(); ++j) vt.add(jet2(a, i, j), VarRole::second_jet, sub(idx(i) + idx(j)));
    for (std::size_t j = 0; j < m(); ++j) vt.add(momentum(j, a), VarRole::momentum, "p^{" + idx(j) + "}_{" + s + "}");
    for (std::size_t l = 0; l < m(); ++l)
      for (std::size_t i = 0; i < m(); ++i)
        vt.add(momentum_jet(l, a, i), VarRole::momentum_jet, "p^{" + idx(l) + "}_{" + s + "," + idx(i) + "}");
  }
  for (const auto& b : bases) vt.add(b, VarRole::base, latex_identifier(b));
  return vt;
}

void FieldModel::validate() const {
  if (bases.empty() || fibers.empty()) throw Error("field model needs base and fiber coordinates");
  if (!L && !H) throw Error("field model needs a Lagrangian or a Hamiltonian");
  std::set<std::string> seen;
  const VarTable table = vars();
  for (const auto& e : table.entries()) {
    if (!seen.insert(e.name).second) throw Error("duplicate variable name " + e.name);
  }
  auto check = [&](const Expr& e, const std::vector<std::string>& extra, const char* what) {
    std::set<std::string> allowed(bases.begin(), bases.end());
    allowed.insert(fibers.begin(), fibers.end());
    allowed.insert(extra.begin(), extra.end());
    for (const auto& v : free_variables(e)) {
      if (!allowed.count(v)) throw Error(std::string(what) + " uses undeclared variable " + v);
    }
  };
  if (L) check(*L, jets(), "Lagrangian");
  if (H) check(*H, momenta(), "Hamiltonian");
  if (metric) {
    const Eigen::MatrixXd& g = *metric;
    const auto n = static_cast<Eigen::Index>(m());
    require_shape(g.rows() == n && g.cols() == n, "metric must be m x m");
    if ((g - g.transpose()).cwiseAbs().maxCoeff() > 1e-12) throw Error("metric must be symmetric");
    if (std::abs(g.determinant()) <= 1e-12) throw Error("metric must be invertible");
  }
}

void FieldSample2::validate() const {
  const std::size_t m = shape.m, k = shape.k;
  require_shape(x.size() == m && y.size() == k && yjet.size() == m * k && yjet2.size() == m * m * k,
                "FieldSample2: component sizes do not match the shape");
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < m; ++j)
      for (std::size_t a = 0; a < k; ++a) {
        if (std::abs(yjet2[(i * m + j) * k + a] - yjet2[(j * m + i) * k + a]) > 1e-12) {
          throw Error("FieldSample2: second jets must be symmetric");
        }
      }
}

// ------------------------------------------------------------ derivations

namespace {

Expr momentum_trace(const FieldModel& fm, std::size_t d) {
  Expr tr = Expr::variable(fm.momentum_jet(0, d, 0));
  for (std::size_t l = 1; l < fm.m(); ++l) tr = tr + Expr::variable(fm.momentum_jet(l, d, l));
  return tr;
}

void set_state(const FieldModel& fm, ImplicitSystem& sys) {
  if (fm.m() != 1) return;
  sys.independent = fm.bases[0];
  sys.state = fm.fibers;
  for (const auto& p : fm.momenta()) sys.state.push_back(p);
  sys.rates = fm.jets();
  for (std::size_t d = 0; d < fm.k(); ++d) sys.rates.push_back(fm.momentum_jet(0, d, 0));
}

}  // namespace

ImplicitSystem field_dynamics(const FieldModel& fm) {
  fm.validate();
  if (!fm.L) throw Error("field_dynamics needs a Lagrangian");
  ImplicitSystem sys;
  sys.vars = fm.vars();
  for (std::size_t j = 0; j < fm.m(); ++j)
    for (std::size_t b = 0; b < fm.k(); ++b) {
      const Expr p = Expr::variable(fm.momentum(j, b));
      sys.equations.push_back(simplify(p - diff(*fm.L, fm.jet(b, j), &sys.vars), &sys.vars));
    }
  for (std::size_t d = 0; d < fm.k(); ++d) {
    sys.equations.push_back(simplify(momentum_trace(fm, d) - diff(*fm.L, fm.fibers[d], &sys.vars), &sys.vars));
  }
  set_state(fm, sys);
  return sys;
}

ImplicitSystem hamilton_field_equations(const FieldModel& fm) {
  fm.validate();
  if (!fm.H) throw Error("hamilton_field_equations needs a Hamiltonian");
  ImplicitSystem sys;
  sys.vars = fm.vars();
  for (std::size_t kk = 0; kk < fm.m(); ++kk)
    for (std::size_t c = 0; c < fm.k(); ++c) {
      const Expr rhs = diff(*fm.H, fm.momentum(kk, c), &sys.vars);
      sys.rhs.push_back(rhs);
      sys.equations.push_back(simplify(Expr::variable(fm.jet(c, kk)) - rhs, &sys.vars));
    }
  for (std::size_t d = 0; d < fm.k(); ++d) {
    const Expr rhs = simplify(-diff(*fm.H, fm.fibers[d], &sys.vars), &sys.vars);
    sys.rhs.push_back(rhs);
    sys.equations.push_back(simplify(momentum_trace(fm, d) - rhs, &sys.vars));
  }
  set_state(fm, sys);
  return sys;
}

FieldLegendre field_legendre(const FieldModel& fm) {
  fm.validate();
  if (!fm.L) throw Error("field_legendre needs a Lagrangian");
  const VarTable vt = fm.vars();
  FieldLegendre out;
  for (std::size_t j = 0; j < fm.m(); ++j)
    for (std::size_t b = 0; b < fm.k(); ++b) out.momenta.push_back(diff(*fm.L, fm.jet(b, j), &vt));
  return out;
}

MomentumSplit momentum_split(const FieldModel& fm, const FieldLegendre& lm) {
  if (fm.k() != fm.m()) throw ShapeError("momentum_split needs one fiber per base direction");
  require_shape(lm.momenta.size() == fm.m() * fm.k(), "momentum_split: wrong number of momenta");
  const VarTable vt = fm.vars();
  const std::size_t m = fm.m();
  MomentumSplit out;
  out.symmetric.assign(m, std::vector<Expr>(m));
  out.antisymmetric.assign(m, std::vector<Expr>(m));
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < m; ++j) {
      const Expr& pij = lm.momenta[i * m + j];
      const Expr& pji = lm.momenta[j * m + i];
      out.symmetric[i][j] = simplify(pij + pji, &vt);
      out.antisymmetric[i][j] = simplify(pij - pji, &vt);
    }
  return out;
}

VarTable field_el_vars(const FieldModel& fm) { return fm.vars(); }

std::vector<Expr> field_el(const FieldModel& fm) {
  fm.validate();
  if (!fm.L) throw Error("field_el needs a Lagrangian");
  const VarTable vt = field_el_vars(fm);
  const std::size_t m = fm.m(), k = fm.k();
  std::vector<Expr> out;
  for (std::size_t a = 0; a < k; ++a) {
    Expr divergence(0.0);
    for (std::size_t i = 0; i < m; ++i) {
      const Expr f = diff(*fm.L, fm.jet(a, i), &vt);
      Expr Di = diff(f, fm.bases[i], &vt);
      for (std::size_t b = 0; b < k; ++b) {
        Di = Di + diff(f, fm.fibers[b], &vt) * Expr::variable(fm.jet(b, i));
        for (std::size_t j = 0; j < m; ++j) {
          Di = Di + diff(f, fm.jet(b, j), &vt) * Expr::variable(fm.jet2(b, i, j));
        }
      }
      divergence = divergence + Di;
    }
    out.push_back(simplify(diff(*fm.L, fm.fibers[a], &vt) - divergence, &vt));
  }
  return out;
}

Vec field_el_at(const FieldModel& fm, const FieldSample2& s) {
  s.validate();
  require_shape(s.shape == fm.shape(), "field_el_at: sample shape differs from the model");
  const std::size_t m = fm.m(), k = fm.k();
  PointTuple pt;
  for (std::size_t i = 0; i < m; ++i) pt[fm.bases[i]] = s.x[i];
  for (std::size_t a = 0; a < k; ++a) pt[fm.fibers[a]] = s.y[a];
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t a = 0; a < k; ++a) pt[fm.jet(a, i)] = s.yjet[i * k + a];
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = i; j < m; ++j)
      for (std::size_t a = 0; a < k; ++a) pt[fm.jet2(a, i, j)] = s.yjet2[(i * m + j) * k + a];
  Vec out;
  for (const auto& e : field_el(fm)) out.push_back(evaluate(e, pt));
  return out;
}

// ------------------------------------------------------------------- grids

std::size_t Grid::nodes() const {
  std::size_t n = 1;
  for (auto d : dims) n *= d;
  return n;
}

std::vector<std::size_t> Grid::multi_index(std::size_t node) const {
  std::vector<std::size_t> out(dims.size());
  for (std::size_t i = dims.size(); i-- > 0;) {
    out[i] = node % dims[i];
    node /= dims[i];
  }
  return out;
}

std::size_t Grid::node(const std::vector<std::size_t>& index) const {
  std::size_t n = 0;
  for (std::size_t i = 0; i < dims.size(); ++i) n = n * dims[i] + index[i];
  return n;
}

Vec Grid::coordinates(std::size_t node) const {
  const auto mi = multi_index(node);
  Vec x(dims.size());
  for (std::size_t i = 0; i < dims.size(); ++i) x[i] = origin[i] + static_cast<double>(mi[i]) * spacing[i];
  return x;
}

void Grid::validate() const {
  require_shape(!dims.empty() && origin.size() == dims.size() && spacing.size() == dims.size(),
                "grid: dims, origin and spacing must have one entry per base direction");
  for (std::size_t i = 0; i < dims.size(); ++i) {
    if (dims[i] == 0) throw ShapeError("grid: every direction needs at least one node");
    if (!(spacing[i] > 0.0)) throw Error("grid: spacing must be positive");
  }
}

void PhaseSection::validate() const {
  grid.validate();
  require_shape(k >= 1, "section: fiber dimension must be positive");
  require_shape(y.size() == grid.nodes() * k, "section: y has the wrong number of values");
  require_shape(p.empty() || p.size() == grid.nodes() * grid.m() * k, "section: p has the wrong number of values");
}

PhaseSection sample_section(const Grid& grid, std::size_t k, const std::function<Vec(const Vec&)>& y,
                            const std::function<Vec(const Vec&)>& p) {
  grid.validate();
  PhaseSection s{grid, k, {}, {}};
  for (std::size_t n = 0; n < grid.nodes(); ++n) {
    const Vec x = grid.coordinates(n);
    const Vec yv = y(x);
    require_shape(yv.size() == k, "sample_section: y returned the wrong size");
    s.y.insert(s.y.end(), yv.begin(), yv.end());
    if (p) {
      const Vec pv = p(x);
      require_shape(pv.size() == grid.m() * k, "sample_section: p returned the wrong size");
      s.p.insert(s.p.end(), pv.begin(), pv.end());
    }
  }
  return s;
}

// CSV layout: key rows (section, m, k, dims, origin, spacing, momenta), a
// column header, then one row per node in row-major order.
void PhaseSection::write_csv(std::ostream& os) const {
  validate();
  const std::size_t m = grid.m();
  auto row = [&](const char* key, const auto& vals) {
    os << key;
    for (const auto& v : vals) os << ',' << v;
    os << '\n';
  };
  os.precision(17);
  os << "section,1\nm," << m << "\nk," << k << '\n';
  row("dims", grid.dims);
  row("origin", grid.origin);
  row("spacing", grid.spacing);
  os << "momenta," << (has_momenta() ? 1 : 0) << '\n';
  for (std::size_t i = 0; i < m; ++i) os << (i ? "," : "") << 'x' << i + 1;
  for (std::size_t a = 0; a < k; ++a) os << ",y" << a + 1;
  if (has_momenta())
    for (std::size_t j = 0; j < m; ++j)
      for (std::size_t b = 0; b < k; ++b) os << ",p" << j + 1 << '_' << b + 1;
  os << '\n';
  for (std::size_t n = 0; n < grid.nodes(); ++n) {
    const Vec x = grid.coordinates(n);
    for (std::size_t i = 0; i < m; ++i) os << (i ? "," : "") << x[i];
    for (std::size_t a = 0; a < k; ++a) os << ',' << y[n * k + a];
    if (has_momenta())
      for (std::size_t c = 0; c < m * k; ++c) os << ',' << p[n * m * k + c];
    os << '\n';
  }
}

namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  return out;
}

double to_double(const std::string& s, std::size_t line) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size() && s.find_first_not_of(" \t\r", used) != std::string::npos) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw Error("section csv line " + std::to_string(line) + ": bad number '" + s + "'");
  }
}

}  // namespace

PhaseSection PhaseSection::read_csv(std::istream& is) {
  std::string line;
  std::size_t lineno = 0;
  auto next = [&](const char* key) {
    if (!std::getline(is, line)) throw Error(std::string("section csv: missing '") + key + "' row");
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    auto cells = split_csv(line);
    if (cells.empty() || cells[0] != key) {
      throw Error("section csv line " + std::to_string(lineno) + ": expected '" + key + "'");
    }
    cells.erase(cells.begin());
    return cells;
  };
  auto numbers = [&](const std::vector<std::string>& cells) {
    Vec v;
    for (const auto& c : cells) v.push_back(to_double(c, lineno));
    return v;
  };
  auto count = [&](const std::vector<std::string>& cells) {
    if (cells.size() != 1) throw Error("section csv line " + std::to_string(lineno) + ": expected one value");
    const double v = to_double(cells[0], lineno);
    if (v < 0 || v != std::floor(v)) throw Error("section csv line " + std::to_string(lineno) + ": expected a count");
    return static_cast<std::size_t>(v);
  };

  if (count(next("section")) != 1) throw Error("section csv: unsupported version");
  const std::size_t m = count(next("m"));
  PhaseSection s;
  s.k = count(next("k"));
  for (double d : numbers(next("dims"))) s.grid.dims.push_back(static_cast<std::size_t>(d));
  s.grid.origin = numbers(next("origin"));
  s.grid.spacing = numbers(next("spacing"));
  const bool momenta = count(next("momenta")) == 1;
  require_shape(s.grid.dims.size() == m, "section csv: dims does not have m entries");
  s.grid.validate();
  if (!std::getline(is, line)) throw Error("section csv: missing column header");
  ++lineno;
  const std::size_t width = m + s.k + (momenta ? m * s.k : 0);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  require_shape(split_csv(line).size() == width, "section csv: column header does not match m and k");

  std::size_t rows = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto cells = split_csv(line);
    if (cells.size() != width) throw ShapeError("section csv line " + std::to_string(lineno) + ": wrong column count");
    for (std::size_t c = m; c < m + s.k; ++c) s.y.push_back(to_double(cells[c], lineno));
    for (std::size_t c = m + s.k; c < width; ++c) s.p.push_back(to_double(cells[c], lineno));
    ++rows;
  }
  if (rows != s.grid.nodes()) {
    throw ShapeError("section csv: " + std::to_string(rows) + " rows for " + std::to_string(s.grid.nodes()) +
                     " grid nodes");
  }
  s.validate();
  return s;
}

namespace {

template <class T>
void put_le(std::ostream& os, T value) {
  using U = std::conditional_t<sizeof(T) == 8, std::uint64_t, std::uint32_t>;
  const U bits = std::bit_cast<U>(value);
  char bytes[sizeof(U)];
  for (std::size_t i = 0; i < sizeof(U); ++i) bytes[i] = static_cast<char>((bits >> (8 * i)) & 0xff);
  os.write(bytes, sizeof(U));
}

template <class T>
T get_le(std::istream& is) {
  using U = std::conditional_t<sizeof(T) == 8, std::uint64_t, std::uint32_t>;
  unsigned char bytes[sizeof(U)];
  if (!is.read(reinterpret_cast<char*>(bytes), sizeof(U))) throw ShapeError("section binary: truncated data");
  U bits = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) bits |= static_cast<U>(bytes[i]) << (8 * i);
  return std::bit_cast<T>(bits);
}

}  // namespace

void PhaseSection::write_binary(std::ostream& os) const {
  validate();
  const std::size_t m = grid.m();
  os.write("PSEC", 4);
  put_le<std::uint32_t>(os, 1);
  put_le<std::uint32_t>(os, static_cast<std::uint32_t>(m));
  put_le<std::uint32_t>(os, static_cast<std::uint32_t>(k));
  put_le<std::uint32_t>(os, has_momenta() ? 1u : 0u);
  for (auto d : grid.dims) put_le<std::uint64_t>(os, d);
  for (double v : grid.origin) put_le<double>(os, v);
  for (double v : grid.spacing) put_le<double>(os, v);
  for (std::size_t n = 0; n < grid.nodes(); ++n) {
    for (std::size_t a = 0; a < k; ++a) put_le<double>(os, y[n * k + a]);
    if (has_momenta())
      for (std::size_t c = 0; c < m * k; ++c) put_le<double>(os, p[n * m * k + c]);
  }
}

PhaseSection PhaseSection::read_binary(std::istream& is) {
  char magic[4];
  if (!is.read(magic, 4) || std::memcmp(magic, "PSEC", 4) != 0) throw Error("section binary: bad magic");
  if (get_le<std::uint32_t>(is) != 1) throw Error("section binary: unsupported version");
  const std::size_t m = get_le<std::uint32_t>(is);
  PhaseSection s;
  s.k = get_le<std::uint32_t>(is);
  const bool momenta = get_le<std::uint32_t>(is) == 1;
  for (std::size_t i = 0; i < m; ++i) s.grid.dims.push_back(get_le<std::uint64_t>(is));
  for (std::size_t i = 0; i < m; ++i) s.grid.origin.push_back(get_le<double>(is));
  for (std::size_t i = 0; i < m; ++i) s.grid.spacing.push_back(get_le<double>(is));
  s.grid.validate();
  for (std::size_t n = 0; n < s.grid.nodes(); ++n) {
    for (std::size_t a = 0; a < s.k; ++a) s.y.push_back(get_le<double>(is));
    if (momenta)
      for (std::size_t c = 0; c < m * s.k; ++c) s.p.push_back(get_le<double>(is));
  }
  s.validate();
  return s;
}

// --------------------------------------------------------------- residuals

double ResidualGrid::node_max(std::size_t n) const {
  double r = 0.0;
  for (std::size_t e = 0; e < equations; ++e) r = std::max(r, std::abs(values[n * equations + e]));
  return r;
}

namespace {

struct ResidualPlan {
  std::vector<CompiledExpr> exprs;
  bool needs_p = false;
  bool needs_second = false;
};

ResidualPlan plan(const FieldModel& fm, ResidualKind which) {
  std::vector<Expr> eqs;
  ResidualPlan out;
  switch (which) {
    case ResidualKind::el:
      eqs = field_el(fm);
      out.needs_second = true;
      break;
    case ResidualKind::dynamics:
      eqs = field_dynamics(fm).equations;
      out.needs_p = true;
      break;
    case ResidualKind::hamilton:
      eqs = hamilton_field_equations(fm).equations;
      out.needs_p = true;
      break;
  }
  // Slots: x, y, jets, second jets (full m*m*k table), momenta, momentum jets.
  std::vector<std::string> slots = fm.bases;
  slots.insert(slots.end(), fm.fibers.begin(), fm.fibers.end());
  for (const auto& v : fm.jets()) slots.push_back(v);
  for (const auto& v : fm.second_jets()) slots.push_back(v);
  for (const auto& v : fm.momenta()) slots.push_back(v);
  for (const auto& v : fm.momentum_jets()) slots.push_back(v);
  for (const auto& e : eqs) out.exprs.emplace_back(e, slots);
  return out;
}

// Fills the slot vector at an interior node with order-2 central differences.
void node_slots(const FieldModel& fm, const PhaseSection& s, const ResidualPlan& pl, std::size_t node, Vec& v) {
  const Grid& g = s.grid;
  const std::size_t m = fm.m(), k = fm.k();
  const auto mi = g.multi_index(node);
  std::vector<std::size_t> stride(m, 1);
  for (std::size_t i = m - 1; i-- > 0;) stride[i] = stride[i + 1] * g.dims[i + 1];

  std::size_t at = 0;
  for (std::size_t i = 0; i < m; ++i) v[at++] = g.origin[i] + static_cast<double>(mi[i]) * g.spacing[i];
  auto Y = [&](std::size_t n, std::size_t a) { return s.y[n * k + a]; };
  for (std::size_t a = 0; a < k; ++a) v[at++] = Y(node, a);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t a = 0; a < k; ++a)
      v[at++] = (Y(node + stride[i], a) - Y(node - stride[i], a)) / (2.0 * g.spacing[i]);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < m; ++j)
      for (std::size_t a = 0; a < k; ++a) {
        if (!pl.needs_second) {
          v[at++] = 0.0;
        } else if (i == j) {
          const double h = g.spacing[i];
          v[at++] = (Y(node + stride[i], a) - 2.0 * Y(node, a) + Y(node - stride[i], a)) / (h * h);
        } else {
          const double pp = Y(node + stride[i] + stride[j], a), pm = Y(node + stride[i] - stride[j], a);
          const double mp = Y(node - stride[i] + stride[j], a), mm = Y(node - stride[i] - stride[j], a);
          v[at++] = (pp - pm - mp + mm) / (4.0 * g.spacing[i] * g.spacing[j]);
        }
      }
  const std::size_t mk = m * k;
  for (std::size_t c = 0; c < mk; ++c) v[at++] = pl.needs_p ? s.p[node * mk + c] : 0.0;
  for (std::size_t l = 0; l < m; ++l)
    for (std::size_t d = 0; d < k; ++d)
      for (std::size_t i = 0; i < m; ++i) {
        if (!pl.needs_p) {
          v[at++] = 0.0;
          continue;
        }
        const std::size_t c = l * k + d;
        v[at++] = (s.p[(node + stride[i]) * mk + c] - s.p[(node - stride[i]) * mk + c]) / (2.0 * g.spacing[i]);
      }
}

std::vector<std::size_t> interior_nodes(const Grid& g) {
  for (auto d : g.dims) {
    if (d < 3) throw Error("grid too small: every direction needs at least 3 nodes");
  }
  std::vector<std::size_t> out;
  for (std::size_t n = 0; n < g.nodes(); ++n) {
    const auto mi = g.multi_index(n);
    bool inside = true;
    for (std::size_t i = 0; i < mi.size(); ++i) inside = inside && mi[i] > 0 && mi[i] + 1 < g.dims[i];
    if (inside) out.push_back(n);
  }
  return out;
}

ResidualGrid residual_setup(const FieldModel& fm, const PhaseSection& s, ResidualKind which, ResidualPlan& pl) {
  s.validate();
  require_shape(s.grid.m() == fm.m() && s.k == fm.k(), "pde_residual: section shape differs from the model");
  pl = plan(fm, which);
  if (pl.needs_p && !s.has_momenta()) throw ShapeError("pde_residual: this system needs momentum data");
  ResidualGrid out;
  out.nodes = interior_nodes(s.grid);
  out.equations = pl.exprs.size();
  out.values.assign(out.nodes.size() * out.equations, 0.0);
  return out;
}

std::size_t slot_count(const FieldModel& fm) {
  const std::size_t m = fm.m(), k = fm.k();
  return m + k + m * k + m * m * k + m * k + m * k * m;
}

void finish(ResidualGrid& out) {
  out.max = 0.0;
  for (double v : out.values) out.max = std::max(out.max, std::abs(v));
}

}  // namespace

ResidualGrid pde_residual_serial(const FieldModel& fm, const PhaseSection& section, ResidualKind which) {
  ResidualPlan pl;
  ResidualGrid out = residual_setup(fm, section, which, pl);
  Vec slots(slot_count(fm));
  for (std::size_t n = 0; n < out.nodes.size(); ++n) {
    node_slots(fm, section, pl, out.nodes[n], slots);
    for (std::size_t e = 0; e < out.equations; ++e) out.values[n * out.equations + e] = pl.exprs[e](slots);
  }
  finish(out);
  return out;
}

ResidualGrid pde_residual(const FieldModel& fm, const PhaseSection& section, ResidualKind which) {
  ResidualPlan pl;
  ResidualGrid out = residual_setup(fm, section, which, pl);
  const auto count = static_cast<std::ptrdiff_t>(out.nodes.size());
  const std::size_t nslots = slot_count(fm);
  std::exception_ptr failure;
#pragma omp parallel
  {
    Vec slots(nslots);
#pragma omp for schedule(static)
    for (std::ptrdiff_t n = 0; n < count; ++n) {
      try {
        const auto u = static_cast<std::size_t>(n);
        node_slots(fm, section, pl, out.nodes[u], slots);
        for (std::size_t e = 0; e < out.equations; ++e) out.values[u * out.equations + e] = pl.exprs[e](slots);
      } catch (...) {
#pragma omp critical
        if (!failure) failure = std::current_exception();
      }
    }
  }
  if (failure) std::rethrow_exception(failure);
  finish(out);
  return out;
}

// ------------------------------------------------------- exterior algebra

std::vector<std::vector<std::size_t>> form_basis(std::size_t m, std::size_t degree) {
  if (degree > m) throw Error("form degree exceeds the dimension");
  std::vector<std::vector<std::size_t>> out;
  std::vector<std::size_t> cur(degree);
  for (std::size_t i = 0; i < degree; ++i) cur[i] = i;
  while (true) {
    out.push_back(cur);
    std::size_t i = degree;
    while (i > 0 && cur[i - 1] == m - degree + i - 1) --i;
    if (i == 0) break;
    ++cur[i - 1];
    for (std::size_t j = i; j < degree; ++j) cur[j] = cur[j - 1] + 1;
  }
  return out;
}

namespace {

int permutation_sign(const std::vector<std::size_t>& seq) {
  int sign = 1;
  for (std::size_t i = 0; i < seq.size(); ++i)
    for (std::size_t j = i + 1; j < seq.size(); ++j) {
      if (seq[i] == seq[j]) return 0;
      if (seq[i] > seq[j]) sign = -sign;
    }
  return sign;
}

}  // namespace

Vec hodge_star(const Eigen::MatrixXd& g, const Vec& form, std::size_t degree) {
  const auto m = static_cast<std::size_t>(g.rows());
  require_shape(g.cols() == g.rows(), "hodge_star: metric must be square");
  const double det = g.determinant();
  if (std::abs(det) <= 1e-12) throw Error("hodge_star: metric must be invertible");
  const auto from = form_basis(m, degree), to = form_basis(m, m - degree);
  require_shape(form.size() == from.size(), "hodge_star: coefficient count does not match the degree");
  const Eigen::MatrixXd ginv = g.inverse();
  const auto d = static_cast<Eigen::Index>(degree);

  // Raise all indices: alpha^I = sum_K det(ginv[I, K]) alpha_K.
  Vec raised(from.size(), 0.0);
  for (std::size_t I = 0; I < from.size(); ++I)
    for (std::size_t K = 0; K < from.size(); ++K) {
      Eigen::MatrixXd minor(d, d);
      for (Eigen::Index r = 0; r < d; ++r)
        for (Eigen::Index c = 0; c < d; ++c)
          minor(r, c) = ginv(static_cast<Eigen::Index>(from[I][r]), static_cast<Eigen::Index>(from[K][c]));
      raised[I] += (d == 0 ? 1.0 : minor.determinant()) * form[K];
    }

  const double vol = std::sqrt(std::abs(det));
  Vec out(to.size(), 0.0);
  for (std::size_t J = 0; J < to.size(); ++J)
    for (std::size_t I = 0; I < from.size(); ++I) {
      std::vector<std::size_t> seq = from[I];
      seq.insert(seq.end(), to[J].begin(), to[J].end());
      out[J] += vol * permutation_sign(seq) * raised[I];
    }
  return out;
}

Vec hodge_star(const FieldModel& fm, const Vec& form, std::size_t degree) {
  if (!fm.metric) throw Error("hodge_star: the model has no metric");
  return hodge_star(*fm.metric, form, degree);
}

// --------------------------------------------------------- canonical forms

CanonicalForms canonical_forms_eval(FieldShape shape, const Vec& x, const Vec& y, const Vec& p, const PhaseTangent& u,
                                    const PhaseTangent& w) {
  const std::size_t m = shape.m, k = shape.k;
  auto sized = [&](const PhaseTangent& t) { return t.dx.size() == m && t.dy.size() == k && t.dp.size() == m * k; };
  require_shape(x.size() == m && y.size() == k && p.size() == m * k && sized(u) && sized(w),
                "canonical_forms_eval: component sizes do not match the shape");
  CanonicalForms out{Vec(m, 0.0), Vec(m, 0.0)};
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t a = 0; a < k; ++a) {
      out.theta[i] += p[i * k + a] * u.dy[a];
      out.omega[i] += u.dp[i * k + a] * w.dy[a] - w.dp[i * k + a] * u.dy[a];
    }
  return out;
}

JDaggerValue jdagger_eval(FieldShape shape, double A, const Vec& B, const Vec& y, const Vec& yjet) {
  const std::size_t m = shape.m, k = shape.k;
  require_shape(B.size() == m * k && y.size() == k && yjet.size() == m * k,
                "jdagger_eval: component sizes do not match the shape");
  JDaggerValue out{A, B};
  for (std::size_t c = 0; c < m * k; ++c) out.value += B[c] * yjet[c];
  return out;
}

// ------------------------------------------------------------ degeneration

std::map<std::string, std::string> mechanics_renaming(const FieldModel& fm) {
  if (fm.m() != 1) throw Error("mechanics_renaming needs a one-dimensional base");
  std::map<std::string, std::string> out;
  for (std::size_t a = 0; a < fm.k(); ++a) {
    const std::string& f = fm.fibers[a];
    out[fm.jet(a, 0)] = "v_" + f;
    out[fm.jet2(a, 0, 0)] = f + "ddot";
    out[fm.momentum(0, a)] = "p_" + f;
    out[fm.momentum_jet(0, a, 0)] = "pdot_" + f;
  }
  return out;
}

MechModel as_mechanics(const FieldModel& fm) {
  fm.validate();
  const auto names = mechanics_renaming(fm);
  MechModel mm{fm.fibers, std::nullopt, std::nullopt, fm.bases[0]};
  if (fm.L) mm.L = rename(*fm.L, names);
  if (fm.H) mm.H = rename(*fm.H, names);
  return mm;
}

}  // namespace ttriple
