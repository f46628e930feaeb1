#include "ttriple/symcore.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <numbers>
#include <set>
#include <utility>

namespace ttriple {

struct Expr::Node {
  Op op = Op::constant;
  double value = 0.0;
  std::string name;
  // Null-initialized so that building the shared zero constant does not
  // recurse into Expr's default constructor.
  Expr a{std::shared_ptr<const Node>()};
  Expr b{std::shared_ptr<const Node>()};
  bool has_a = false;
  bool has_b = false;
};

namespace {

std::shared_ptr<const Expr::Node> make_constant_node(double v) {
  auto n = std::make_shared<Expr::Node>();
  n->op = Op::constant;
  n->value = v;
  return n;
}

}  // namespace

bool is_unary(Op op) {
  switch (op) {
    case Op::neg:
    case Op::sin:
    case Op::cos:
    case Op::tan:
    case Op::exp:
    case Op::log:
    case Op::sqrt:
      return true;
    default:
      return false;
  }
}

bool is_binary(Op op) {
  switch (op) {
    case Op::add:
    case Op::sub:
    case Op::mul:
    case Op::div:
    case Op::pow:
      return true;
    default:
      return false;
  }
}

const char* function_name(Op op) {
  switch (op) {
    case Op::sin: return "sin";
    case Op::cos: return "cos";
    case Op::tan: return "tan";
    case Op::exp: return "exp";
    case Op::log: return "log";
    case Op::sqrt: return "sqrt";
    default: return "";
  }
}

Expr::Expr() : node_(nullptr) {
  static const std::shared_ptr<const Node> zero = make_constant_node(0.0);
  node_ = zero;
}

Expr::Expr(double value) : node_(make_constant_node(value)) {}

Expr Expr::constant(double value) { return Expr(value); }

Expr Expr::named_constant(const std::string& name) {
  auto n = std::make_shared<Node>();
  n->op = Op::constant;
  if (name == "pi") {
    n->value = std::numbers::pi;
  } else if (name == "e") {
    n->value = std::numbers::e;
  } else {
    throw Error("unknown named constant '" + name + "'");
  }
  n->name = name;
  return Expr(std::shared_ptr<const Node>(std::move(n)));
}

Expr Expr::variable(const std::string& name) {
  auto n = std::make_shared<Node>();
  n->op = Op::variable;
  n->name = name;
  return Expr(std::shared_ptr<const Node>(std::move(n)));
}

Expr Expr::unary(Op op, Expr arg) {
  if (!is_unary(op)) throw Error("not a unary operator");
  auto n = std::make_shared<Node>();
  n->op = op;
  n->a = std::move(arg);
  n->has_a = true;
  return Expr(std::shared_ptr<const Node>(std::move(n)));
}

Expr Expr::binary(Op op, Expr lhs, Expr rhs) {
  if (!is_binary(op)) throw Error("not a binary operator");
  auto n = std::make_shared<Node>();
  n->op = op;
  n->a = std::move(lhs);
  n->b = std::move(rhs);
  n->has_a = n->has_b = true;
  return Expr(std::shared_ptr<const Node>(std::move(n)));
}

Op Expr::op() const { return node_->op; }
double Expr::value() const { return node_->value; }
const std::string& Expr::name() const { return node_->name; }

std::size_t Expr::arity() const {
  return (node_->has_a ? 1 : 0) + (node_->has_b ? 1 : 0);
}

const Expr& Expr::arg(std::size_t i) const {
  if (i >= arity()) throw Error("expression argument index out of range");
  return i == 0 ? node_->a : node_->b;
}

bool Expr::operator==(const Expr& other) const {
  if (node_ == other.node_) return true;
  const Node& x = *node_;
  const Node& y = *other.node_;
  if (x.op != y.op) return false;
  switch (x.op) {
    case Op::constant:
      // Bitwise-equal values; named constants compare by name.
      return x.name == y.name && (x.value == y.value || (std::isnan(x.value) && std::isnan(y.value)));
    case Op::variable:
      return x.name == y.name;
    default:
      if (x.has_b) return x.a == y.a && x.b == y.b;
      return x.a == y.a;
  }
}

Expr operator-(const Expr& a) { return Expr::unary(Op::neg, a); }
Expr operator+(const Expr& a, const Expr& b) { return Expr::binary(Op::add, a, b); }
Expr operator-(const Expr& a, const Expr& b) { return Expr::binary(Op::sub, a, b); }
Expr operator*(const Expr& a, const Expr& b) { return Expr::binary(Op::mul, a, b); }
Expr operator/(const Expr& a, const Expr& b) { return Expr::binary(Op::div, a, b); }
Expr pow(const Expr& base, const Expr& exponent) { return Expr::binary(Op::pow, base, exponent); }
Expr sin(const Expr& a) { return Expr::unary(Op::sin, a); }
Expr cos(const Expr& a) { return Expr::unary(Op::cos, a); }
Expr tan(const Expr& a) { return Expr::unary(Op::tan, a); }
Expr exp(const Expr& a) { return Expr::unary(Op::exp, a); }
Expr log(const Expr& a) { return Expr::unary(Op::log, a); }
Expr sqrt(const Expr& a) { return Expr::unary(Op::sqrt, a); }

// ---------------------------------------------------------------------------
// VarTable

void VarTable::add(const std::string& name, VarRole role, std::string latex) {
  if (index_.count(name)) throw Error("duplicate variable name '" + name + "'");
  index_[name] = entries_.size();
  entries_.push_back({name, role, latex.empty() ? name : std::move(latex)});
}

bool VarTable::contains(const std::string& name) const { return index_.count(name) > 0; }

const VarTable::Entry& VarTable::at(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw Error("unregistered variable '" + name + "'");
  return entries_[it->second];
}

std::vector<std::string> VarTable::names() const {
  std::vector<std::string> out;
  out.reserve(entries_.size());
  for (const auto& e : entries_) out.push_back(e.name);
  return out;
}

std::vector<std::string> VarTable::names(VarRole role) const {
  std::vector<std::string> out;
  for (const auto& e : entries_)
    if (e.role == role) out.push_back(e.name);
  return out;
}

std::optional<std::pair<int, std::size_t>> VarTable::rank(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) return std::nullopt;
  return std::make_pair(static_cast<int>(entries_[it->second].role), it->second);
}

std::pair<std::string, std::string> split_index(const std::string& name) {
  std::size_t cut = name.size();
  while (cut > 0 && std::isdigit(static_cast<unsigned char>(name[cut - 1]))) --cut;
  if (cut == 0 || cut == name.size()) return {name, ""};
  return {name.substr(0, cut), name.substr(cut)};
}

std::string latex_identifier(const std::string& name) {
  const auto [stem, index] = split_index(name);
  return index.empty() ? stem : stem + "_{" + index + "}";
}

std::string VarTable::latex(const std::string& name) const {
  auto it = index_.find(name);
  return it == index_.end() ? name : entries_[it->second].latex;
}

// ---------------------------------------------------------------------------
// Parser

namespace {

class Parser {
 public:
  explicit Parser(const std::string& src) : src_(src) {}

  Expr parse_all() {
    Expr e = expr();
    skip_ws();
    if (pos_ != src_.size()) fail("unexpected '" + std::string(1, src_[pos_]) + "'");
    return e;
  }

 private:
  [[noreturn]] void fail(const std::string& msg) const {
    throw ParseError(msg, pos_);
  }

  void skip_ws() {
    while (pos_ < src_.size() && std::isspace(static_cast<unsigned char>(src_[pos_]))) ++pos_;
  }

  bool peek(char c) {
    skip_ws();
    return pos_ < src_.size() && src_[pos_] == c;
  }

  Expr expr() {
    Expr lhs = term();
    for (;;) {
      if (peek('+')) {
        ++pos_;
        lhs = lhs + term();
      } else if (peek('-')) {
        ++pos_;
        lhs = lhs - term();
      } else {
        return lhs;
      }
    }
  }

  Expr term() {
    Expr lhs = factor();
    for (;;) {
      if (peek('*')) {
        ++pos_;
        lhs = lhs * factor();
      } else if (peek('/')) {
        ++pos_;
        lhs = lhs / factor();
      } else {
        return lhs;
      }
    }
  }

  Expr factor() {
    Expr base = unary();
    if (peek('^')) {
      ++pos_;
      return pow(base, factor());
    }
    return base;
  }

  Expr unary() {
    if (peek('-')) {
      ++pos_;
      skip_ws();
      if (pos_ < src_.size() && (std::isdigit(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '.')) {
        return Expr(-number());
      }
      return -unary();
    }
    return atom();
  }

  double number() {
    const std::size_t start = pos_;
    auto digits = [&] {
      std::size_t n = 0;
      while (pos_ < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_]))) {
        ++pos_;
        ++n;
      }
      return n;
    };
    std::size_t nd = digits();
    if (pos_ < src_.size() && src_[pos_] == '.') {
      ++pos_;
      nd += digits();
    }
    if (nd == 0) {
      pos_ = start;
      fail("malformed number");
    }
    if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
      const std::size_t save = pos_;
      ++pos_;
      if (pos_ < src_.size() && (src_[pos_] == '+' || src_[pos_] == '-')) ++pos_;
      if (digits() == 0) pos_ = save;  // "2e" is 2 followed by identifier e
    }
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(src_.data() + start, src_.data() + pos_, v);
    if (ec != std::errc() || ptr != src_.data() + pos_) {
      pos_ = start;
      fail("malformed number");
    }
    return v;
  }

  Expr atom() {
    skip_ws();
    if (pos_ >= src_.size()) fail("unexpected end of input");
    const char c = src_[pos_];
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return Expr(number());
    if (c == '(') {
      ++pos_;
      Expr inner = expr();
      if (!peek(')')) fail("expected ')'");
      ++pos_;
      return inner;
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      const std::size_t start = pos_;
      while (pos_ < src_.size() &&
             (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_'))
        ++pos_;
      std::string ident = src_.substr(start, pos_ - start);
      if (peek('(')) {
        static const std::array<std::pair<const char*, Op>, 6> funcs{{
            {"sin", Op::sin}, {"cos", Op::cos}, {"tan", Op::tan},
            {"exp", Op::exp}, {"log", Op::log}, {"sqrt", Op::sqrt},
        }};
        auto it = std::find_if(funcs.begin(), funcs.end(),
                               [&](const auto& f) { return ident == f.first; });
        if (it == funcs.end()) {
          pos_ = start;
          fail("unknown function '" + ident + "'");
        }
        ++pos_;
        Expr arg = expr();
        if (!peek(')')) fail("expected ')'");
        ++pos_;
        return Expr::unary(it->second, arg);
      }
      if (ident == "pi" || ident == "e") return Expr::named_constant(ident);
      for (Op f : {Op::sin, Op::cos, Op::tan, Op::exp, Op::log, Op::sqrt}) {
        if (ident == function_name(f)) {
          fail("expected '(' after function name '" + ident + "'");
        }
      }
      return Expr::variable(ident);
    }
    fail("unexpected '" + std::string(1, c) + "'");
  }

  const std::string& src_;
  std::size_t pos_ = 0;
};

}  // namespace

Expr parse(const std::string& source) { return Parser(source).parse_all(); }

// ---------------------------------------------------------------------------
// Printing

namespace {

std::string format_number(double v) {
  std::array<char, 64> buf{};
  auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  if (ec != std::errc()) return std::to_string(v);
  return std::string(buf.data(), ptr);
}

// Precedence levels matching the grammar: sum < product < unary < power < atom.
int precedence(const Expr& e) {
  switch (e.op()) {
    case Op::add:
    case Op::sub:
      return 1;
    case Op::mul:
    case Op::div:
      return 2;
    case Op::neg:
      return 3;
    case Op::pow:
      return 4;
    case Op::constant:
      return (e.name().empty() && std::signbit(e.value())) ? 3 : 5;
    default:
      return 5;
  }
}

struct TextStyle {
  bool latex = false;
  const VarTable* vars = nullptr;
};

std::string print(const Expr& e, const TextStyle& st);

std::string wrap(const std::string& s, bool parens, const TextStyle& st) {
  if (!parens) return s;
  return st.latex ? "\\left(" + s + "\\right)" : "(" + s + ")";
}

std::string print(const Expr& e, const TextStyle& st) {
  switch (e.op()) {
    case Op::constant:
      if (!e.name().empty()) return st.latex && e.name() == "pi" ? "\\pi" : e.name();
      return format_number(e.value());
    case Op::variable:
      return st.latex && st.vars ? st.vars->latex(e.name()) : e.name();
    case Op::neg: {
      const Expr& a = e.arg(0);
      return "-" + wrap(print(a, st), precedence(a) < 5, st);
    }
    case Op::sin:
    case Op::cos:
    case Op::tan:
    case Op::exp:
    case Op::log:
    case Op::sqrt: {
      if (st.latex) {
        if (e.op() == Op::sqrt) return "\\sqrt{" + print(e.arg(0), st) + "}";
        return std::string("\\") + function_name(e.op()) + "\\left(" + print(e.arg(0), st) + "\\right)";
      }
      return std::string(function_name(e.op())) + "(" + print(e.arg(0), st) + ")";
    }
    case Op::add:
    case Op::sub: {
      const Expr& a = e.arg(0);
      const Expr& b = e.arg(1);
      std::string l = print(a, st);
      const int pb = precedence(b);
      std::string r = wrap(print(b, st), pb == 1 || pb == 3, st);
      return l + (e.op() == Op::add ? " + " : " - ") + r;
    }
    case Op::mul:
    case Op::div: {
      const Expr& a = e.arg(0);
      const Expr& b = e.arg(1);
      if (st.latex && e.op() == Op::div) {
        return "\\frac{" + print(a, st) + "}{" + print(b, st) + "}";
      }
      std::string l = wrap(print(a, st), precedence(a) < 2, st);
      std::string r = wrap(print(b, st), precedence(b) <= 3, st);
      if (st.latex) return l + " " + r;
      return l + (e.op() == Op::mul ? "*" : "/") + r;
    }
    case Op::pow: {
      const Expr& a = e.arg(0);
      const Expr& b = e.arg(1);
      std::string l = wrap(print(a, st), precedence(a) < 5, st);
      if (st.latex) return l + "^{" + print(b, st) + "}";
      std::string r = wrap(print(b, st), precedence(b) < 4, st);
      return l + "^" + r;
    }
  }
  return {};
}

}  // namespace

std::string to_string(const Expr& e) { return print(e, TextStyle{}); }

std::string to_latex(const Expr& e, const VarTable* vars) {
  return print(e, TextStyle{true, vars});
}

// ---------------------------------------------------------------------------
// Evaluation

namespace {

double apply_unary(Op op, double a, const Expr& src) {
  switch (op) {
    case Op::neg: return -a;
    case Op::sin: return std::sin(a);
    case Op::cos: return std::cos(a);
    case Op::tan: return std::tan(a);
    case Op::exp: return std::exp(a);
    case Op::log:
      if (!(a > 0.0))
        throw EvalError(EvalError::Kind::domain, "log of non-positive value in " + to_string(src),
                        to_string(src));
      return std::log(a);
    case Op::sqrt:
      if (a < 0.0)
        throw EvalError(EvalError::Kind::domain, "sqrt of negative value in " + to_string(src),
                        to_string(src));
      return std::sqrt(a);
    default:
      throw Error("bad unary op");
  }
}

double apply_binary(Op op, double a, double b, const Expr& src) {
  switch (op) {
    case Op::add: return a + b;
    case Op::sub: return a - b;
    case Op::mul: return a * b;
    case Op::div:
      if (b == 0.0)
        throw EvalError(EvalError::Kind::division_by_zero, "division by zero in " + to_string(src),
                        to_string(src));
      return a / b;
    case Op::pow:
      if (a < 0.0 && std::trunc(b) != b)
        throw EvalError(EvalError::Kind::domain,
                        "negative base with non-integer exponent in " + to_string(src), to_string(src));
      if (a == 0.0 && b < 0.0)
        throw EvalError(EvalError::Kind::division_by_zero, "zero to a negative power in " + to_string(src),
                        to_string(src));
      return std::pow(a, b);
    default:
      throw Error("bad binary op");
  }
}

double eval_rec(const Expr& e, const PointTuple& pt) {
  switch (e.op()) {
    case Op::constant:
      return e.value();
    case Op::variable: {
      auto it = pt.find(e.name());
      if (it == pt.end())
        throw EvalError(EvalError::Kind::unassigned_variable, "unassigned variable '" + e.name() + "'",
                        e.name());
      return it->second;
    }
    default:
      if (is_unary(e.op())) return apply_unary(e.op(), eval_rec(e.arg(0), pt), e);
      return apply_binary(e.op(), eval_rec(e.arg(0), pt), eval_rec(e.arg(1), pt), e);
  }
}

}  // namespace

double evaluate(const Expr& e, const PointTuple& point) { return eval_rec(e, point); }

CompiledExpr::CompiledExpr(const Expr& e, std::span<const std::string> slots) {
  std::size_t depth = 0;
  std::function<void(const Expr&)> emit = [&](const Expr& n) {
    if (n.op() == Op::constant) {
      code_.push_back({Op::constant, n.value(), 0, n});
      max_stack_ = std::max(max_stack_, ++depth);
      return;
    }
    if (n.op() == Op::variable) {
      auto it = std::find(slots.begin(), slots.end(), n.name());
      if (it == slots.end())
        throw EvalError(EvalError::Kind::unassigned_variable, "unassigned variable '" + n.name() + "'",
                        n.name());
      code_.push_back({Op::variable, 0.0, static_cast<std::size_t>(it - slots.begin()), n});
      max_stack_ = std::max(max_stack_, ++depth);
      return;
    }
    emit(n.arg(0));
    if (is_binary(n.op())) {
      emit(n.arg(1));
      --depth;
    }
    code_.push_back({n.op(), 0.0, 0, n});
  };
  emit(e);
}

double CompiledExpr::operator()(std::span<const double> values) const {
  constexpr std::size_t kInline = 32;
  std::array<double, kInline> small{};
  std::vector<double> big;
  double* stack = small.data();
  if (max_stack_ > kInline) {
    big.resize(max_stack_);
    stack = big.data();
  }
  std::size_t top = 0;
  for (const Instr& ins : code_) {
    switch (ins.op) {
      case Op::constant:
        stack[top++] = ins.value;
        break;
      case Op::variable:
        stack[top++] = values[ins.slot];
        break;
      default:
        if (is_unary(ins.op)) {
          stack[top - 1] = apply_unary(ins.op, stack[top - 1], ins.source);
        } else {
          const double b = stack[--top];
          stack[top - 1] = apply_binary(ins.op, stack[top - 1], b, ins.source);
        }
    }
  }
  return code_.empty() ? 0.0 : stack[0];
}

// ---------------------------------------------------------------------------
// Structural utilities

bool contains_variable(const Expr& e, const std::string& var) {
  if (e.op() == Op::variable) return e.name() == var;
  for (std::size_t i = 0; i < e.arity(); ++i)
    if (contains_variable(e.arg(i), var)) return true;
  return false;
}

namespace {
void collect_vars(const Expr& e, std::set<std::string>& out) {
  if (e.op() == Op::variable) {
    out.insert(e.name());
    return;
  }
  for (std::size_t i = 0; i < e.arity(); ++i) collect_vars(e.arg(i), out);
}
}  // namespace

std::vector<std::string> free_variables(const Expr& e) {
  std::set<std::string> s;
  collect_vars(e, s);
  return {s.begin(), s.end()};
}

Expr substitute(const Expr& e, const std::map<std::string, Expr>& replacements) {
  switch (e.op()) {
    case Op::constant:
      return e;
    case Op::variable: {
      auto it = replacements.find(e.name());
      return it == replacements.end() ? e : it->second;
    }
    default:
      if (is_unary(e.op())) return Expr::unary(e.op(), substitute(e.arg(0), replacements));
      return Expr::binary(e.op(), substitute(e.arg(0), replacements), substitute(e.arg(1), replacements));
  }
}

Expr rename(const Expr& e, const std::map<std::string, std::string>& renames) {
  std::map<std::string, Expr> repl;
  for (const auto& [from, to] : renames) repl.emplace(from, Expr::variable(to));
  return substitute(e, repl);
}

// ---------------------------------------------------------------------------
// Simplification: polynomial normal form over opaque atoms.

namespace {

constexpr std::size_t kMaxTerms = 64;
constexpr int kMaxExpandPower = 6;

struct Factor {
  Expr atom;
  int exponent;
};

struct Term {
  std::vector<Factor> factors;  // sorted by atom order, exponents >= 1
  double coeff;
};

using Poly = std::vector<Term>;  // sorted by monomial order, merged, no zero coefficients

class Simplifier {
 public:
  explicit Simplifier(const VarTable* vars) : vars_(vars) {}

  Expr run(const Expr& e) { return from_poly(to_poly(e)); }

 private:
  // Total order on atoms: registered variables by (role, index), then
  // unregistered variables alphabetically, then named constants, then
  // compound atoms by printed form.
  int atom_compare(const Expr& a, const Expr& b) {
    if (a == b) return 0;
    auto category = [](const Expr& x) {
      if (x.op() == Op::variable) return 0;
      if (x.op() == Op::constant) return 1;
      return 2;
    };
    const int ca = category(a), cb = category(b);
    if (ca != cb) return ca < cb ? -1 : 1;
    if (ca == 0) {
      auto ra = vars_ ? vars_->rank(a.name()) : std::nullopt;
      auto rb = vars_ ? vars_->rank(b.name()) : std::nullopt;
      if (ra && rb) return *ra < *rb ? -1 : (*rb < *ra ? 1 : 0);
      if (ra) return -1;
      if (rb) return 1;
      return a.name() < b.name() ? -1 : (a.name() > b.name() ? 1 : 0);
    }
    const std::string sa = printed(a), sb = printed(b);
    return sa < sb ? -1 : (sa > sb ? 1 : 0);
  }

  const std::string& printed(const Expr& e) {
    auto it = print_cache_.find(e.id());
    if (it != print_cache_.end()) return it->second.second;
    return print_cache_.emplace(e.id(), std::make_pair(e, to_string(e))).first->second.second;
  }

  // Lexicographic monomial order: negative if a should be printed first.
  int monomial_compare(const std::vector<Factor>& a, const std::vector<Factor>& b) {
    const std::size_t n = std::min(a.size(), b.size());
    for (std::size_t i = 0; i < n; ++i) {
      const int c = atom_compare(a[i].atom, b[i].atom);
      if (c != 0) return c;
      if (a[i].exponent != b[i].exponent) return a[i].exponent > b[i].exponent ? -1 : 1;
    }
    if (a.size() == b.size()) return 0;
    return a.size() > b.size() ? -1 : 1;
  }

  Poly normalize(std::vector<Term> terms) {
    for (Term& t : terms) {
      std::sort(t.factors.begin(), t.factors.end(),
                [&](const Factor& x, const Factor& y) { return atom_compare(x.atom, y.atom) < 0; });
      std::vector<Factor> merged;
      for (Factor& f : t.factors) {
        if (!merged.empty() && atom_compare(merged.back().atom, f.atom) == 0) {
          merged.back().exponent += f.exponent;
        } else {
          merged.push_back(std::move(f));
        }
      }
      t.factors = std::move(merged);
    }
    std::stable_sort(terms.begin(), terms.end(), [&](const Term& x, const Term& y) {
      return monomial_compare(x.factors, y.factors) < 0;
    });
    Poly out;
    for (Term& t : terms) {
      if (!out.empty() && monomial_compare(out.back().factors, t.factors) == 0) {
        out.back().coeff += t.coeff;
      } else {
        out.push_back(std::move(t));
      }
    }
    std::erase_if(out, [](const Term& t) { return t.coeff == 0.0; });
    return out;
  }

  static Poly constant_poly(double c) {
    if (c == 0.0) return {};
    return {Term{{}, c}};
  }

  static std::optional<double> as_constant(const Poly& p) {
    if (p.empty()) return 0.0;
    if (p.size() == 1 && p[0].factors.empty()) return p[0].coeff;
    return std::nullopt;
  }

  Poly atom_poly(const Expr& atom) { return {Term{{Factor{atom, 1}}, 1.0}}; }

  Poly add(const Poly& a, const Poly& b, double sign) {
    std::vector<Term> terms(a.begin(), a.end());
    for (const Term& t : b) terms.push_back(Term{t.factors, sign * t.coeff});
    return normalize(std::move(terms));
  }

  std::optional<Poly> mul(const Poly& a, const Poly& b) {
    if (a.size() * b.size() > kMaxTerms) return std::nullopt;
    std::vector<Term> terms;
    terms.reserve(a.size() * b.size());
    for (const Term& x : a) {
      for (const Term& y : b) {
        Term t{x.factors, x.coeff * y.coeff};
        t.factors.insert(t.factors.end(), y.factors.begin(), y.factors.end());
        terms.push_back(std::move(t));
      }
    }
    return normalize(std::move(terms));
  }

  Poly scale(const Poly& a, double c) {
    std::vector<Term> terms(a.begin(), a.end());
    for (Term& t : terms) t.coeff *= c;
    return normalize(std::move(terms));
  }

  Poly fold_or_atom(Op op, const Poly& arg) {
    if (auto c = as_constant(arg)) {
      bool in_domain = true;
      if (op == Op::log && !(*c > 0.0)) in_domain = false;
      if (op == Op::sqrt && *c < 0.0) in_domain = false;
      if (in_domain) {
        const double v = apply_unary(op, *c, Expr());
        if (std::isfinite(v)) return constant_poly(v);
      }
    }
    return atom_poly(Expr::unary(op, from_poly(arg)));
  }

  Poly to_poly(const Expr& e) {
    switch (e.op()) {
      case Op::constant:
        if (!e.name().empty()) return atom_poly(e);
        return constant_poly(e.value());
      case Op::variable:
        return atom_poly(e);
      case Op::neg:
        return scale(to_poly(e.arg(0)), -1.0);
      case Op::sin:
      case Op::cos:
      case Op::tan:
      case Op::exp:
      case Op::log:
      case Op::sqrt:
        return fold_or_atom(e.op(), to_poly(e.arg(0)));
      case Op::add:
        return add(to_poly(e.arg(0)), to_poly(e.arg(1)), 1.0);
      case Op::sub:
        return add(to_poly(e.arg(0)), to_poly(e.arg(1)), -1.0);
      case Op::mul: {
        Poly a = to_poly(e.arg(0));
        Poly b = to_poly(e.arg(1));
        if (auto ca = as_constant(a)) return scale(b, *ca);
        if (auto cb = as_constant(b)) return scale(a, *cb);
        if (auto prod = mul(a, b)) return *prod;
        return atom_poly(from_poly(a) * from_poly(b));
      }
      case Op::div: {
        Poly num = to_poly(e.arg(0));
        Poly den = to_poly(e.arg(1));
        auto cd = as_constant(den);
        if (cd && *cd != 0.0) {
          if (*cd == 1.0) return num;
          return scale(num, 1.0 / *cd);
        }
        return atom_poly(from_poly(num) / from_poly(den));
      }
      case Op::pow:
        return pow_poly(to_poly(e.arg(0)), to_poly(e.arg(1)));
      default:
        throw Error("bad expression node");
    }
  }

  Poly pow_poly(const Poly& base, const Poly& exponent) {
    auto ce = as_constant(exponent);
    auto cb = as_constant(base);
    if (ce && *ce == 0.0) return constant_poly(1.0);
    if (ce && *ce == 1.0) return base;
    if (cb && *cb == 1.0) return constant_poly(1.0);
    if (cb && ce) {
      const double b = *cb, x = *ce;
      const bool ok = !(b < 0.0 && std::trunc(x) != x) && !(b == 0.0 && x < 0.0);
      if (ok) {
        const double v = std::pow(b, x);
        if (std::isfinite(v)) return constant_poly(v);
      }
    }
    const bool positive_int = ce && std::trunc(*ce) == *ce && *ce > 0.0 && *ce <= 1024.0;
    if (positive_int && base.size() == 1) {
      const int n = static_cast<int>(*ce);
      Term t = base[0];
      t.coeff = std::pow(t.coeff, n);
      if (std::isfinite(t.coeff)) {
        for (Factor& f : t.factors) f.exponent *= n;
        return normalize({t});
      }
    }
    if (positive_int && *ce <= kMaxExpandPower) {
      const int n = static_cast<int>(*ce);
      Poly acc = base;
      bool expanded = true;
      for (int i = 1; i < n; ++i) {
        auto next = mul(acc, base);
        if (!next) {
          expanded = false;
          break;
        }
        acc = std::move(*next);
      }
      if (expanded) return acc;
    }
    return atom_poly(pow(from_poly(base), from_poly(exponent)));
  }

  Expr term_expr(const Term& t, double coeff) {
    std::optional<Expr> prod;
    if (coeff != 1.0 || t.factors.empty()) prod = Expr(coeff);
    for (const Factor& f : t.factors) {
      Expr x = f.exponent == 1 ? f.atom : pow(f.atom, Expr(static_cast<double>(f.exponent)));
      prod = prod ? *prod * x : x;
    }
    return *prod;
  }

  Expr from_poly(const Poly& p) {
    if (p.empty()) return Expr(0.0);
    std::optional<Expr> acc;
    for (const Term& t : p) {
      if (!acc) {
        if (t.coeff == -1.0 && !t.factors.empty()) {
          acc = -term_expr(t, 1.0);
        } else {
          acc = term_expr(t, t.coeff);
        }
        continue;
      }
      if (t.coeff < 0.0) {
        acc = *acc - term_expr(t, -t.coeff);
      } else {
        acc = *acc + term_expr(t, t.coeff);
      }
    }
    return *acc;
  }

  const VarTable* vars_;
  std::map<const void*, std::pair<Expr, std::string>> print_cache_;
};

}  // namespace

Expr simplify(const Expr& e, const VarTable* vars) { return Simplifier(vars).run(e); }

// ---------------------------------------------------------------------------
// Differentiation

namespace {

Expr diff_raw(const Expr& e, const std::string& var) {
  if (!contains_variable(e, var)) return Expr(0.0);
  const auto d = [&](std::size_t i) { return diff_raw(e.arg(i), var); };
  switch (e.op()) {
    case Op::constant:
      return Expr(0.0);
    case Op::variable:
      return Expr(e.name() == var ? 1.0 : 0.0);
    case Op::neg:
      return -d(0);
    case Op::sin:
      return cos(e.arg(0)) * d(0);
    case Op::cos:
      return -(sin(e.arg(0)) * d(0));
    case Op::tan:
      return d(0) / pow(cos(e.arg(0)), Expr(2.0));
    case Op::exp:
      return e * d(0);
    case Op::log:
      return d(0) / e.arg(0);
    case Op::sqrt:
      return d(0) / (Expr(2.0) * e);
    case Op::add:
      return d(0) + d(1);
    case Op::sub:
      return d(0) - d(1);
    case Op::mul:
      return d(0) * e.arg(1) + e.arg(0) * d(1);
    case Op::div:
      return (d(0) * e.arg(1) - e.arg(0) * d(1)) / pow(e.arg(1), Expr(2.0));
    case Op::pow: {
      const Expr& base = e.arg(0);
      const Expr& ex = e.arg(1);
      if (!contains_variable(ex, var)) {
        return ex * pow(base, ex - Expr(1.0)) * d(0);
      }
      return e * (d(1) * log(base) + ex * d(0) / base);
    }
  }
  return Expr(0.0);
}

}  // namespace

Expr diff(const Expr& e, const std::string& var, const VarTable* vars) {
  return simplify(diff_raw(e, var), vars);
}

// ---------------------------------------------------------------------------
// Equations

namespace {

bool leading_negative(const Expr& e) {
  const Expr* cur = &e;
  while (cur->op() == Op::add || cur->op() == Op::sub || cur->op() == Op::mul) cur = &cur->arg(0);
  if (cur->op() == Op::neg) return true;
  return cur->op() == Op::constant && cur->name().empty() && cur->value() < 0.0;
}

}  // namespace

Expr normalize_sign(const Expr& e, const VarTable* vars) {
  Expr s = simplify(e, vars);
  if (leading_negative(s)) s = simplify(-s, vars);
  return s;
}

std::string format_equation(const Expr& e, const VarTable* vars) {
  return to_string(normalize_sign(e, vars)) + " = 0";
}

std::string format_equation_latex(const Expr& e, const VarTable* vars) {
  return to_latex(normalize_sign(e, vars), vars) + " = 0";
}

}  // namespace ttriple
