#pragma once

// Sectioned key/value model files:
//
//   [model]        name = ho
//                  kind = mechanics | field
//   [coordinates]  fiber = [q]
//                  base = [t]        (field: x1..xm; mechanics: optional time)
//   [lagrangian]   expr = "0.5*v_q^2 - 0.5*q^2"
//   [hamiltonian]  expr = "..."
//   [metric]       diag = [1, 1]     (field only)
//   [grid]         dims = [...], origin = [...], spacing = [...]
//
// '#' and ';' start comments. Values are bare words, quoted strings or
// bracketed comma-separated lists.

#include <iosfwd>
#include <optional>
#include <string>
#include <variant>

#include "ttriple/fieldtheory.hpp"
#include "ttriple/mechanics.hpp"

namespace ttriple {

class ModelFileError : public Error {
 public:
  ModelFileError(std::size_t line, const std::string& what)
      : Error("line " + std::to_string(line) + ": " + what), line_(line), message_(what) {}
  std::size_t line() const { return line_; }
  const std::string& message() const { return message_; }

 private:
  std::size_t line_;
  std::string message_;
};

struct ModelFile {
  std::string name;
  std::variant<MechModel, FieldModel> model;
  std::optional<Grid> grid;

  bool is_field() const { return std::holds_alternative<FieldModel>(model); }
  const MechModel& mech() const { return std::get<MechModel>(model); }
  const FieldModel& field() const { return std::get<FieldModel>(model); }
};

ModelFile parse_model_file(std::istream& is);
ModelFile load_model_file(const std::string& path);

}  // namespace ttriple
