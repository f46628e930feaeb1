#include <doctest.h>

#include <sstream>

#include "ttriple/modelfile.hpp"

using namespace ttriple;

namespace {

ModelFile from(const std::string& text) {
  std::istringstream in(text);
  return parse_model_file(in);
}

std::size_t error_line(const std::string& text) {
  try {
    from(text);
  } catch (const ModelFileError& e) {
    return e.line();
  }
  return 0;
}

const char* const ho_text = R"ini(# oscillator
[model]
name = ho
kind = mechanics   ; trailing comment

[coordinates]
fiber = [q]

[lagrangian]
expr = "0.5*v_q^2 - 0.5*q^2"
)ini";

const char* const field_text = R"ini([model]
name = "plane"
kind = field
[coordinates]
base = [x1, x2]
fiber = [y]
[lagrangian]
expr = "0.5*(y_d1^2 + y_d2^2)"
[hamiltonian]
expr = "0.5*(p1_y^2 + p2_y^2)"
[metric]
diag = [1, -1]
[grid]
dims = [5, 7]
origin = [0, -1.5]
spacing = [0.25, 0.5]
)ini";

}  // namespace

TEST_CASE("model file: mechanics") {
  const ModelFile mf = from(ho_text);
  CHECK(mf.name == "ho");
  REQUIRE_FALSE(mf.is_field());
  CHECK(mf.mech().coords == std::vector<std::string>{"q"});
  CHECK(*mf.mech().L == parse("0.5*v_q^2 - 0.5*q^2"));
  CHECK_FALSE(mf.mech().H.has_value());
  CHECK(mf.mech().time.empty());
  CHECK_FALSE(mf.grid.has_value());
}

TEST_CASE("model file: mechanics with explicit time") {
  const ModelFile mf = from("[model]\nname=t\nkind=mechanics\n[coordinates]\nbase=[t]\nfiber=[q]\n"
                            "[lagrangian]\nexpr=\"0.5*t^2*v_q^2\"\n");
  CHECK(mf.mech().time == "t");
}

TEST_CASE("model file: field with metric and grid") {
  const ModelFile mf = from(field_text);
  CHECK(mf.name == "plane");
  REQUIRE(mf.is_field());
  const FieldModel& fm = mf.field();
  CHECK(fm.bases == std::vector<std::string>{"x1", "x2"});
  CHECK(fm.fibers == std::vector<std::string>{"y"});
  REQUIRE(fm.metric.has_value());
  CHECK((*fm.metric)(1, 1) == -1.0);
  CHECK((*fm.metric)(0, 1) == 0.0);
  REQUIRE(mf.grid.has_value());
  CHECK(mf.grid->dims == std::vector<std::size_t>{5, 7});
  CHECK(mf.grid->origin == Vec{0.0, -1.5});
  CHECK(mf.grid->spacing == Vec{0.25, 0.5});
}

TEST_CASE("model file: errors carry the line number") {
  CHECK(error_line("[model\nname = x\n") == 1);
  CHECK(error_line("[model]\nname = x\n[physics]\n") == 3);
  CHECK(error_line("name = x\n") == 1);
  CHECK(error_line("[model]\nname = x\ncolour = red\n") == 3);
  CHECK(error_line("[model]\nname = x\nname = y\n") == 3);
  CHECK(error_line("[model]\nname = x\nkind\n") == 3);
  CHECK(error_line("[model]\nname = x\nkind = quantum\n") == 3);
  CHECK(error_line("[model]\nname = x\nkind = mechanics\n[coordinates]\nfiber = q\n") == 5);
  CHECK(error_line("[model]\nname = x\nkind = mechanics\n[coordinates]\nfiber = [q, q]\n") == 5);
  CHECK(error_line("[model]\nname = x\nkind = mechanics\n[coordinates]\nfiber = [2q]\n") == 5);

  const std::string head = "[model]\nname = x\nkind = mechanics\n[coordinates]\nfiber = [q]\n";
  CHECK(error_line(head + "[lagrangian]\nexpr = \"0.5*v_q^2 - w\"\n") == 7);
  CHECK(error_line(head + "[lagrangian]\nexpr = \"0.5*v_q^2 +* q\"\n") == 7);
  CHECK(error_line(head + "[lagrangian]\nexpr = \"0.5*v_q^2\n") == 7);
  CHECK(error_line(head + "[hamiltonian]\nexpr = \"v_q*p_q\"\n") == 7);
  CHECK(error_line(head) == 5);  // no functional
  CHECK(error_line(head + "[lagrangian]\nexpr = \"v_q^2\"\n[metric]\ndiag = [1]\n") == 9);

  const std::string fhead = "[model]\nname = x\nkind = field\n[coordinates]\nbase = [x1, x2]\nfiber = [y]\n"
                            "[lagrangian]\nexpr = \"y_d1^2\"\n";
  CHECK(error_line(fhead + "[metric]\ndiag = [1]\n") == 10);
  CHECK(error_line(fhead + "[metric]\ndiag = [1, 0]\n") == 10);
  CHECK(error_line(fhead + "[metric]\ndiag = [1, one]\n") == 10);
  CHECK(error_line(fhead + "[grid]\ndims = [3]\norigin = [0]\nspacing = [1]\n") == 10);
  CHECK(error_line(fhead + "[grid]\ndims = [3, 3]\norigin = [0, 0]\n") == 10);
  CHECK(error_line(fhead + "[grid]\ndims = [3, 2.5]\norigin = [0, 0]\nspacing = [1, 1]\n") == 10);
  CHECK(error_line("[model]\nname = x\nkind = field\n[coordinates]\nfiber = [y]\n[lagrangian]\nexpr = \"y\"\n") == 5);
}

TEST_CASE("model file: load from disk") {
  const ModelFile mf = load_model_file(TTRIPLE_SOURCE_DIR "/models/scalar2.ini");
  CHECK(mf.name == "scalar2");
  CHECK(mf.field().m() == 2);
  CHECK_THROWS_AS(load_model_file(TTRIPLE_SOURCE_DIR "/models/missing.ini"), Error);
}
