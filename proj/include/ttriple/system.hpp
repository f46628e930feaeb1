#pragma once

#include <string>
#include <vector>

#include "ttriple/symcore.hpp"

namespace ttriple {

/// An implicit first-order system E(t, z, zdot) = 0. `state` lists the
/// differential variables and `rates` their time derivatives in the same
/// order. An equation mentioning no rate is algebraic.
struct ImplicitSystem {
  VarTable vars;
  std::vector<Expr> equations;
  std::vector<std::string> state;
  std::vector<std::string> rates;
  std::string independent;  // time variable, empty when autonomous

  // Set when the system is explicit: rates[i] = rhs[i].
  std::vector<Expr> rhs;

  bool is_algebraic(std::size_t equation) const;
  std::vector<std::string> text() const;   // "<expr> = 0" per equation
  std::vector<std::string> latex() const;
};

}  // namespace ttriple
