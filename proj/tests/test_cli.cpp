#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "cli.hpp"

namespace {

struct Run {
  int code;
  std::string out, err;
};

Run run(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = ttriple::cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string model(const std::string& name) { return TTRIPLE_SOURCE_DIR "/models/" + name; }
std::string data(const std::string& name) { return TTRIPLE_SOURCE_DIR "/models/data/" + name; }

std::vector<std::vector<double>> csv_rows(const std::string& text, std::string* header = nullptr) {
  std::istringstream in(text);
  std::string line;
  std::getline(in, line);
  if (header) *header = line;
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    std::vector<double> r;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) r.push_back(std::stod(cell));
    rows.push_back(r);
  }
  return rows;
}

double max_residual(const std::string& out) {
  const auto at = out.find("max residual: ");
  REQUIRE(at != std::string::npos);
  return std::stod(out.substr(at + 14));
}

std::string temp_path(const std::string& name) { return std::string(TTRIPLE_BINARY_DIR) + "/" + name; }

}  // namespace

TEST_CASE("cli: derive oscillator") {
  const Run r = run({"derive", model("ho.ini")});
  CHECK(r.code == 0);
  CHECK(r.out ==
        "model ho (mechanics)\n"
        "dynamics:\n  p_q - v_q = 0\n  pdot_q + q = 0\n"
        "euler-lagrange:\n  qddot + q = 0\n"
        "legendre:\n  p_q = v_q\n");
  CHECK(run({"derive", model("ho.ini")}).out == r.out);

  const Run tex = run({"derive", model("ho.ini"), "--format", "latex"});
  CHECK(tex.out.find("\\ddot{q} + q = 0") != std::string::npos);
  CHECK(tex.out.find("\\dot{p}_{q} + q = 0") != std::string::npos);
}

TEST_CASE("cli: derive fields") {
  const Run s = run({"derive", model("scalar2.ini")});
  CHECK(s.code == 0);
  CHECK(s.out.find("euler-lagrange:\n  y_d1d1 + y_d2d2 = 0\n") != std::string::npos);
  CHECK(s.out.find("hamilton:\n") != std::string::npos);
  const Run tex = run({"derive", model("scalar2.ini"), "--format", "latex"});
  CHECK(tex.out.find("y_{11} + y_{22} = 0") != std::string::npos);

  const Run em = run({"derive", "--model", "em2"});
  CHECK(em.code == 0);
  CHECK(em.out.find("euler-lagrange:\n  A1_d2d2 - A2_d1d2 = 0\n  A1_d1d2 - A2_d1d1 = 0\n") != std::string::npos);
  CHECK(run({"derive", model("em2.ini")}).out.find("A1_d1d2 - A2_d1d1 = 0") != std::string::npos);
}

TEST_CASE("cli: parse errors exit 2 with the line") {
  const std::string bad = temp_path("bad_section.ini");
  {
    std::ofstream f(bad);
    f << "[model]\nname = x\nkind = mechanics\n[coordinates\nfiber = [q]\n";
  }
  const Run r = run({"derive", bad});
  CHECK(r.code == 2);
  CHECK(r.err.find("bad_section.ini:4:") != std::string::npos);

  CHECK(run({"derive", model("nope.ini")}).code == 2);
  CHECK(run({"derive", "--model", "nope"}).code == 2);
  CHECK(run({"derive"}).code == 2);
  CHECK(run({}).code == 2);
  CHECK(run({"derive", model("ho.ini"), "--format", "html"}).code == 2);
  CHECK(run({"frobnicate"}).code == 2);
}

TEST_CASE("cli: integrate oscillator over one period") {
  const std::string out = temp_path("ho_traj.csv");
  const Run r = run({"integrate", model("ho.ini"), "--z0", "1,0", "--t1", "6.2832", "--h", "0.01", "--out", out});
  REQUIRE(r.code == 0);
  CHECK(r.out.find("energy drift: ") != std::string::npos);
  std::ifstream f(out);
  std::stringstream ss;
  ss << f.rdbuf();
  std::string header;
  const auto rows = csv_rows(ss.str(), &header);
  CHECK(header == "t,x1,p1");
  REQUIRE(rows.size() == 630);
  // 629 implicit-midpoint steps rotate by 2 atan(h/2) each.
  const double h = 6.2832 / 629.0, theta = 2.0 * std::atan(0.5 * h);
  CHECK(std::abs(rows.back()[1] - std::cos(629 * theta)) <= 1e-9);
  CHECK(std::abs(rows.back()[2] + std::sin(629 * theta)) <= 1e-9);
  // Distance from the start is the scheme's phase error, about 4e-5.
  CHECK(std::hypot(rows.back()[1] - 1.0, rows.back()[2]) <= 5e-5);
}

TEST_CASE("cli: integrate free particle and singular model") {
  const Run r = run({"integrate", model("free.ini"), "--z0", "0.5,2", "--t1", "1", "--h", "0.125"});
  REQUIRE(r.code == 0);
  const auto rows = csv_rows(r.out);
  REQUIRE(rows.size() == 9);
  for (const auto& row : rows) {
    CHECK(row[1] == doctest::Approx(0.5 + 2.0 * row[0]).epsilon(1e-14));
    CHECK(row[2] == 2.0);
  }

  CHECK(run({"integrate", model("singular.ini"), "--z0", "0,0,1,1", "--t1", "1"}).code == 3);
  const Run ok = run({"integrate", model("singular.ini"), "--z0", "0,0,1,-1", "--t1", "10", "--h", "0.01"});
  REQUIRE(ok.code == 0);
  for (const auto& row : csv_rows(ok.out)) CHECK(std::abs(row[3] + row[4]) <= 1e-9);

  CHECK(run({"integrate", model("ho.ini"), "--z0", "1,0,0", "--t1", "1"}).code == 4);
  CHECK(run({"integrate", model("ho.ini"), "--z0", "1,x", "--t1", "1"}).code == 2);
  CHECK(run({"integrate", model("ho.ini"), "--t1", "1"}).code == 2);
  CHECK(run({"integrate", model("scalar2.ini"), "--z0", "1,0", "--t1", "1"}).code == 2);
}

TEST_CASE("cli: check emits a versioned JSON report") {
  const Run r = run({"check", "--suite", "bundles"});
  CHECK(r.code == 0);
  const auto j = nlohmann::json::parse(r.out);
  CHECK(j["schema_version"] == ttriple::cli::report_schema_version);
  CHECK(j["suite"] == "bundles");
  CHECK(j["pass"] == true);
  bool kappa = false;
  for (const auto& p : j["properties"]) {
    CHECK(p["pass"] == true);
    if (p["name"] == "kappa_involution") kappa = p["value"] == 0.0;
  }
  CHECK(kappa);

  const Run t1 = run({"check", "--suite", "theorem1", "--trials", "100", "--seed", "4"});
  CHECK(t1.code == 0);
  const auto jt = nlohmann::json::parse(t1.out);
  CHECK(jt["seed"] == 4);
  for (const auto& p : jt["properties"]) CHECK(p["value"].get<double>() <= 1e-10);

  CHECK(run({"check", "--suite", "models"}).code == 0);
  CHECK(run({"check", "--suite", "theorem1", "--tol", "1e-30"}).code == 1);
  CHECK(run({"check", "--suite", "gravity"}).code == 2);
  CHECK(run({"check", "--trials", "0"}).code == 2);

  const std::string path = temp_path("report.json");
  CHECK(run({"check", "--suite", "field", "--json", path}).code == 0);
  std::ifstream f(path);
  CHECK(nlohmann::json::parse(f)["suite"] == "field");
}

TEST_CASE("cli: residual") {
  const std::string per_node = temp_path("residual_nodes.csv");
  const Run h = run({"residual", model("scalar2.ini"), "--field-data", data("scalar2_harmonic.csv"), "--out", per_node});
  REQUIRE(h.code == 0);
  CHECK(max_residual(h.out) <= 1e-10);
  std::ifstream f(per_node);
  std::stringstream ss;
  ss << f.rdbuf();
  std::string header;
  CHECK(csv_rows(ss.str(), &header).size() == 19u * 19u);
  CHECK(header == "x1,x2,r1");

  const Run ham = run({"residual", model("scalar2.ini"), "--field-data", data("scalar2_harmonic.csv"), "--which",
                       "hamilton"});
  CHECK(ham.code == 0);
  CHECK(max_residual(ham.out) <= 1e-10);

  const Run bowl = run({"residual", model("scalar2.ini"), "--field-data", data("scalar2_bowl.csv")});
  CHECK(bowl.code == 0);
  CHECK(max_residual(bowl.out) == doctest::Approx(2.0).epsilon(1e-9));

  const Run em = run({"residual", "--model", "em2", "--field-data", data("em2_constant_field.csv")});
  CHECK(em.code == 0);
  CHECK(max_residual(em.out) <= 1e-10);

  CHECK(run({"residual", model("scalar2.ini"), "--field-data", data("em2_constant_field.csv")}).code == 4);
  CHECK(run({"residual", model("scalar2.ini"), "--field-data", data("scalar2_bowl.csv"), "--which", "hamilton"})
            .code == 4);
  CHECK(run({"residual", model("em2.ini"), "--field-data", data("em2_constant_field.csv"), "--which", "hamilton"})
            .code == 4);
  CHECK(run({"residual", model("ho.ini"), "--field-data", data("scalar2_bowl.csv")}).code == 2);
  CHECK(run({"residual", model("scalar2.ini"), "--field-data", data("missing.csv")}).code == 2);

  // Grid declared in the model file must match the data.
  const std::string small = temp_path("small.csv");
  {
    std::ofstream out(small);
    out << "section,1\nm,2\nk,1\ndims,3,3\norigin,0,0\nspacing,1,1\nmomenta,0\nx1,x2,y1\n";
    for (int i = 0; i < 9; ++i) out << i / 3 << "," << i % 3 << ",0\n";
  }
  CHECK(run({"residual", model("scalar2.ini"), "--field-data", small}).code == 4);
  CHECK(run({"residual", "--model", "scalar2", "--field-data", small}).code == 0);

  const std::string truncated = temp_path("truncated.csv");
  {
    std::ofstream out(truncated);
    out << "section,1\nm,2\nk,1\ndims,3,3\norigin,0,0\nspacing,1,1\nmomenta,0\nx1,x2,y1\n0,0,0\n";
  }
  CHECK(run({"residual", "--model", "scalar2", "--field-data", truncated}).code == 4);
}

TEST_CASE("cli: hamiltonize") {
  const Run ho = run({"hamiltonize", model("ho.ini")});
  CHECK(ho.code == 0);
  CHECK(ho.out.find("H = 0.5*p_q^2 + 0.5*q^2") != std::string::npos);

  const Run s = run({"hamiltonize", "--model", "singular"});
  CHECK(s.code == 0);
  CHECK(s.out.find("no single Hamiltonian") != std::string::npos);
  CHECK(s.out.find("generating family: ") != std::string::npos);
  CHECK(s.out.find("parameters: v_x1 v_x2") != std::string::npos);

  CHECK(run({"hamiltonize", "--model", "em2"}).code == 2);
}
