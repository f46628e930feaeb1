#include "ttriple/system.hpp"

namespace ttriple {

bool ImplicitSystem::is_algebraic(std::size_t equation) const {
  for (const auto& r : rates) {
    if (contains_variable(equations.at(equation), r)) return false;
  }
  return true;
}

std::vector<std::string> ImplicitSystem::text() const {
  std::vector<std::string> out;
  for (const auto& e : equations) out.push_back(format_equation(e, &vars));
  return out;
}

std::vector<std::string> ImplicitSystem::latex() const {
  std::vector<std::string> out;
  for (const auto& e : equations) out.push_back(format_equation_latex(e, &vars));
  return out;
}

}  // namespace ttriple
