#pragma once

// Immutable symbolic expressions over named real variables: parsing,
// printing, differentiation, conservative simplification and evaluation.

#include <cstddef>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace ttriple {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t offset)
      : Error(what + " at offset " + std::to_string(offset)), offset_(offset) {}
  std::size_t offset() const { return offset_; }

 private:
  std::size_t offset_;
};

class EvalError : public Error {
 public:
  enum class Kind { unassigned_variable, division_by_zero, domain };

  EvalError(Kind kind, const std::string& what, std::string subexpression)
      : Error(what), kind_(kind), subexpression_(std::move(subexpression)) {}
  Kind kind() const { return kind_; }
  const std::string& subexpression() const { return subexpression_; }

 private:
  Kind kind_;
  std::string subexpression_;
};

enum class Op {
  constant,
  variable,
  neg,
  sin,
  cos,
  tan,
  exp,
  log,
  sqrt,
  add,
  sub,
  mul,
  div,
  pow,
};

bool is_unary(Op op);
bool is_binary(Op op);
const char* function_name(Op op);  // "sin", ... for the named unary ops

class Expr {
 public:
  Expr();  // the zero constant
  Expr(double value);  // NOLINT(google-explicit-constructor)

  static Expr constant(double value);
  static Expr named_constant(const std::string& name);  // "pi" or "e"
  static Expr variable(const std::string& name);
  static Expr unary(Op op, Expr arg);
  static Expr binary(Op op, Expr lhs, Expr rhs);

  Op op() const;
  double value() const;             // constants only
  const std::string& name() const;  // variables and named constants
  std::size_t arity() const;
  const Expr& arg(std::size_t i) const;

  bool is_constant() const { return op() == Op::constant; }
  bool is_number(double v) const { return is_constant() && value() == v; }
  bool is_variable() const { return op() == Op::variable; }

  // Structural identity; two equal trees print identically.
  bool operator==(const Expr& other) const;
  bool operator!=(const Expr& other) const { return !(*this == other); }

  // Identity of the shared node, useful as a cache key.
  const void* id() const { return node_.get(); }

  struct Node;  // opaque

 private:
  explicit Expr(std::shared_ptr<const Node> node) : node_(std::move(node)) {}
  std::shared_ptr<const Node> node_;
};

Expr operator-(const Expr& a);
Expr operator+(const Expr& a, const Expr& b);
Expr operator-(const Expr& a, const Expr& b);
Expr operator*(const Expr& a, const Expr& b);
Expr operator/(const Expr& a, const Expr& b);
Expr pow(const Expr& base, const Expr& exponent);
Expr sin(const Expr& a);
Expr cos(const Expr& a);
Expr tan(const Expr& a);
Expr exp(const Expr& a);
Expr log(const Expr& a);
Expr sqrt(const Expr& a);

/// Numeric assignment of coordinate values by variable name.
using PointTuple = std::map<std::string, double>;

/// Role of a registered variable. The order of the enumerators is the
/// order in which terms are printed within a sum.
enum class VarRole {
  second_jet,     // qddot, y_d1d2
  momentum_jet,   // pdot_q, p1_y_d1
  momentum,       // p_q, p1_y
  velocity,       // v_q, y_d1 (first jets)
  fiber,          // q, y
  base,           // t, x1
  auxiliary,
};

/// Ordered list of unique variable names with role tags. Also defines the
/// variable order used by simplify() and the LaTeX spelling of each name.
class VarTable {
 public:
  struct Entry {
    std::string name;
    VarRole role;
    std::string latex;
  };

  void add(const std::string& name, VarRole role, std::string latex = {});
  bool contains(const std::string& name) const;
  const Entry& at(const std::string& name) const;
  const std::vector<Entry>& entries() const { return entries_; }
  std::vector<std::string> names() const;
  std::vector<std::string> names(VarRole role) const;

  // Sort key: (role, registration index). Unknown names sort after all
  // registered ones, alphabetically.
  std::optional<std::pair<int, std::size_t>> rank(const std::string& name) const;
  std::string latex(const std::string& name) const;

 private:
  std::vector<Entry> entries_;
  std::map<std::string, std::size_t> index_;
};

Expr parse(const std::string& source);

std::string to_string(const Expr& e);
/// "x12" -> {"x", "12"}; names without a trailing number or made only of
/// digits give an empty index.
std::pair<std::string, std::string> split_index(const std::string& name);
/// "x12" -> "x_{12}", "q" -> "q".
std::string latex_identifier(const std::string& name);

std::string to_latex(const Expr& e, const VarTable* vars = nullptr);

/// Prints "<e> = 0", flipping the overall sign so that the leading term of
/// the simplified sum carries a positive coefficient.
std::string format_equation(const Expr& e, const VarTable* vars = nullptr);
std::string format_equation_latex(const Expr& e, const VarTable* vars = nullptr);
Expr normalize_sign(const Expr& e, const VarTable* vars = nullptr);

/// Symbolic partial derivative, returned simplified.
Expr diff(const Expr& e, const std::string& var, const VarTable* vars = nullptr);

/// Value-preserving normal form: constant folding, 0/1 identities, expansion
/// of small integer powers and products, like-term collection. Never cancels
/// across a potential singularity (x/x and x*(1/x) are left alone).
Expr simplify(const Expr& e, const VarTable* vars = nullptr);

double evaluate(const Expr& e, const PointTuple& point);

/// Replace variables by expressions (simultaneous substitution).
Expr substitute(const Expr& e, const std::map<std::string, Expr>& replacements);
Expr rename(const Expr& e, const std::map<std::string, std::string>& renames);

bool contains_variable(const Expr& e, const std::string& var);
std::vector<std::string> free_variables(const Expr& e);  // sorted, unique

/// Flat stack-machine form of an expression for repeated numeric evaluation
/// against a fixed variable layout.
class CompiledExpr {
 public:
  CompiledExpr() = default;
  CompiledExpr(const Expr& e, std::span<const std::string> slots);

  double operator()(std::span<const double> values) const;

 private:
  struct Instr {
    Op op;
    double value = 0.0;
    std::size_t slot = 0;
    Expr source;
  };
  std::vector<Instr> code_;
  std::size_t max_stack_ = 0;
};

}  // namespace ttriple
