#include "cli.hpp"

#include <CLI11.hpp>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <json.hpp>
#include <ostream>
#include <sstream>

#include "ttriple/modelfile.hpp"
#include "ttriple/models.hpp"
#include "ttriple/numerics.hpp"
#include "ttriple/suites.hpp"

namespace ttriple::cli {

namespace {

class Failure : public std::runtime_error {
 public:
  Failure(int code, const std::string& what) : std::runtime_error(what), code(code) {}
  int code;
};

struct ModelSource {
  std::string file;
  std::string name;
};

ModelFile load(const ModelSource& src) {
  if (!src.file.empty() && !src.name.empty()) throw Failure(parse_error, "give either a model file or --model, not both");
  if (!src.name.empty()) {
    ModelCatalogEntry e;
    try {
      e = find_model(src.name);
    } catch (const Error& ex) {
      throw Failure(parse_error, ex.what());
    }
    return ModelFile{e.name, e.model, std::nullopt};
  }
  if (src.file.empty()) throw Failure(parse_error, "no model given (file argument or --model)");
  try {
    return load_model_file(src.file);
  } catch (const ModelFileError& ex) {
    throw Failure(parse_error, src.file + ":" + std::to_string(ex.line()) + ": " + ex.message());
  } catch (const Error& ex) {
    throw Failure(parse_error, ex.what());
  }
}

Vec parse_numbers(const std::string& s, const std::string& what) {
  Vec out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    double x = 0.0;
    try {
      x = std::stod(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    while (used < item.size() && std::isspace(static_cast<unsigned char>(item[used]))) ++used;
    if (item.empty() || used != item.size()) throw Failure(parse_error, what + ": not a number: '" + item + "'");
    out.push_back(x);
  }
  return out;
}

void print_lines(std::ostream& out, const std::string& title, const std::vector<std::string>& lines) {
  if (lines.empty()) return;
  out << title << ":\n";
  for (const auto& l : lines) out << "  " << l << "\n";
}

std::vector<std::string> equations(const ImplicitSystem& s, bool latex) { return latex ? s.latex() : s.text(); }

std::vector<std::string> assignments(const std::vector<std::string>& lhs, const std::vector<Expr>& rhs,
                                     const VarTable& vt, bool latex) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < lhs.size(); ++i) {
    const Expr r = simplify(rhs[i], &vt);
    out.push_back(latex ? vt.latex(lhs[i]) + " = " + to_latex(r, &vt) : lhs[i] + " = " + to_string(r));
  }
  return out;
}

void derive(const ModelFile& mf, bool latex, std::ostream& out) {
  out << "model " << mf.name << " (" << (mf.is_field() ? "field" : "mechanics") << ")\n";
  if (!mf.is_field()) {
    const MechModel& m = mf.mech();
    if (m.L) {
      print_lines(out, "dynamics", equations(lagrangian_dynamics(m), latex));
      const VarTable vt = euler_lagrange_vars(m);
      std::vector<std::string> el;
      for (const auto& e : euler_lagrange(m)) el.push_back(latex ? format_equation_latex(e, &vt) : format_equation(e, &vt));
      print_lines(out, "euler-lagrange", el);
      print_lines(out, "legendre", assignments(m.momenta(), legendre(m).momenta, m.vars(), latex));
    }
    if (m.H) print_lines(out, "hamilton", equations(hamiltonian_dynamics(m), latex));
    return;
  }
  const FieldModel& fm = mf.field();
  if (fm.L) {
    print_lines(out, "dynamics", equations(field_dynamics(fm), latex));
    const VarTable vt = field_el_vars(fm);
    std::vector<std::string> el;
    for (const auto& e : field_el(fm)) el.push_back(latex ? format_equation_latex(e, &vt) : format_equation(e, &vt));
    print_lines(out, "euler-lagrange", el);
    print_lines(out, "legendre", assignments(fm.momenta(), field_legendre(fm).momenta, fm.vars(), latex));
  }
  if (fm.H) print_lines(out, "hamilton", equations(hamilton_field_equations(fm), latex));
}

struct IntegrateArgs {
  std::string z0;
  double t0 = 0.0, t1 = 1.0, h = 0.01;
  std::string out;
};

int integrate(const ModelFile& mf, const IntegrateArgs& a, std::optional<double> tol, std::ostream& out,
              std::ostream& err) {
  if (mf.is_field()) throw Failure(parse_error, "integrate needs a mechanics model");
  const MechModel& m = mf.mech();
  const Vec z0 = parse_numbers(a.z0, "--z0");
  if (z0.size() != 2 * m.dim())
    throw Failure(shape_mismatch, "--z0 needs " + std::to_string(2 * m.dim()) + " values (coordinates then momenta)");
  if (!(a.h > 0.0) || !(a.t1 > a.t0)) throw Failure(parse_error, "need h > 0 and t1 > t0");
  NewtonConfig cfg;
  if (tol) cfg.tol = *tol;
  const ImplicitSystem sys = m.L ? lagrangian_dynamics(m) : hamiltonian_dynamics(m);

  Trajectory tr;
  try {
    tr = integrate_phase(sys, z0, a.t0, a.t1, a.h, cfg);
  } catch (const InconsistentInitialData& e) {
    throw Failure(inconsistent_initial_data, e.what());
  }

  if (a.out.empty() || a.out == "-") {
    tr.write_csv(out);
  } else {
    std::ofstream f(a.out);
    if (!f) throw Failure(check_failed, "cannot write '" + a.out + "'");
    tr.write_csv(f);
  }
  std::ostream& info = (a.out.empty() || a.out == "-") ? err : out;
  info << "steps: " << tr.states.size() - 1 << "\n";
  const Vec& z = tr.states.back();
  info << "final state:";
  for (double x : z) info << " " << std::setprecision(12) << x;
  info << "\n";

  // Energy drift for autonomous models with a symbolic Hamiltonian.
  std::optional<Expr> H = m.H;
  if (!H && m.L && m.time.empty()) {
    const HamiltonizeResult r = hamiltonize(m);
    if (r.symbolic()) H = r.hamiltonian();
  }
  if (H && m.time.empty()) {
    auto energy = [&](const Vec& s) {
      PointTuple pt;
      for (std::size_t i = 0; i < m.dim(); ++i) {
        pt[m.coords[i]] = s[i];
        pt[m.momentum(i)] = s[m.dim() + i];
      }
      return evaluate(*H, pt);
    };
    double drift = 0.0;
    const double e0 = energy(tr.states.front());
    for (const auto& s : tr.states) drift = std::max(drift, std::abs(energy(s) - e0));
    info << "energy drift: " << std::setprecision(3) << std::scientific << drift << std::defaultfloat << "\n";
  }
  if (!tr.complete()) {
    err << "integration stopped: " << *tr.failure << "\n";
    return check_failed;
  }
  return ok;
}

nlohmann::ordered_json to_json(const std::vector<PropertyResult>& results, const std::string& suite, const SuiteOptions& o) {
  nlohmann::ordered_json props = nlohmann::ordered_json::array();
  bool all = true;
  for (const auto& r : results) {
    all = all && r.pass;
    nlohmann::ordered_json value = std::isfinite(r.value) ? nlohmann::ordered_json(r.value) : nlohmann::ordered_json(nullptr);
    props.push_back({{"suite", r.suite},
                     {"name", r.name},
                     {"value", value},
                     {"threshold", r.threshold},
                     {"comparison", r.comparison == Comparison::at_most ? "at_most" : "at_least"},
                     {"pass", r.pass},
                     {"detail", r.detail}});
  }
  nlohmann::ordered_json j{{"schema_version", report_schema_version},
                   {"suite", suite},
                   {"seed", o.seed},
                   {"trials", o.trials},
                   {"tol", o.tol ? nlohmann::ordered_json(*o.tol) : nlohmann::ordered_json(nullptr)},
                   {"pass", all},
                   {"properties", props}};
  return j;
}

int check(const std::string& suite, const SuiteOptions& o, const std::string& json_out, std::ostream& out,
          std::ostream& err) {
  if (suite != "all" && std::find(suite_names().begin(), suite_names().end(), suite) == suite_names().end())
    throw Failure(parse_error, "unknown suite '" + suite + "'");
  if (o.trials < 1) throw Failure(parse_error, "--trials must be positive");
  const auto results = run_suite(suite, o);
  bool all = true;
  for (const auto& r : results) {
    all = all && r.pass;
    err << (r.pass ? "PASS " : "FAIL ") << r.suite << "/" << r.name << "  " << std::setprecision(3) << r.value
        << (r.comparison == Comparison::at_most ? " <= " : " >= ") << r.threshold << "\n";
  }
  const std::string text = to_json(results, suite, o).dump(2);
  if (json_out.empty() || json_out == "-") {
    out << text << "\n";
  } else {
    std::ofstream f(json_out);
    if (!f) throw Failure(check_failed, "cannot write '" + json_out + "'");
    f << text << "\n";
  }
  return all ? ok : check_failed;
}

ResidualKind residual_kind(const std::string& which) {
  if (which == "el") return ResidualKind::el;
  if (which == "hamilton") return ResidualKind::hamilton;
  if (which == "dynamics") return ResidualKind::dynamics;
  throw Failure(parse_error, "--which must be el, hamilton or dynamics");
}

int residual(const ModelFile& mf, const std::string& data, const std::string& which, const std::string& csv_out,
             std::ostream& out) {
  if (!mf.is_field()) throw Failure(parse_error, "residual needs a field model");
  const FieldModel& fm = mf.field();
  const ResidualKind kind = residual_kind(which);
  std::ifstream in(data);
  if (!in) throw Failure(parse_error, "cannot open field data '" + data + "'");
  PhaseSection sec;
  try {
    sec = PhaseSection::read_csv(in);
  } catch (const ShapeError& e) {
    throw Failure(shape_mismatch, data + ": " + e.what());
  } catch (const Error& e) {
    throw Failure(parse_error, data + ": " + e.what());
  }
  if (sec.grid.m() != fm.m() || sec.k != fm.k())
    throw Failure(shape_mismatch, "field data has m = " + std::to_string(sec.grid.m()) + ", k = " +
                                      std::to_string(sec.k) + " but the model has m = " + std::to_string(fm.m()) +
                                      ", k = " + std::to_string(fm.k()));
  if (mf.grid && (mf.grid->dims != sec.grid.dims))
    throw Failure(shape_mismatch, "field data grid does not match the model's [grid] dims");
  if (kind != ResidualKind::el && !sec.has_momenta())
    throw Failure(shape_mismatch, "--which " + which + " needs momentum columns in the field data");
  if (kind == ResidualKind::el && !fm.L) throw Failure(parse_error, "--which el needs a Lagrangian");
  if (kind == ResidualKind::hamilton && !fm.H) throw Failure(parse_error, "--which hamilton needs a Hamiltonian");

  ResidualGrid r;
  try {
    r = pde_residual(fm, sec, kind);
  } catch (const ShapeError& e) {
    throw Failure(shape_mismatch, e.what());
  }
  out << "interior nodes: " << r.nodes.size() << "\n";
  out << "max residual: " << std::setprecision(6) << std::scientific << r.max << std::defaultfloat << "\n";
  if (!csv_out.empty()) {
    std::ofstream f(csv_out);
    if (!f) throw Failure(check_failed, "cannot write '" + csv_out + "'");
    f << std::setprecision(17);
    for (std::size_t i = 0; i < fm.m(); ++i) f << "x" << i + 1 << ",";
    for (std::size_t e = 0; e < r.equations; ++e) f << "r" << e + 1 << (e + 1 < r.equations ? "," : "\n");
    for (std::size_t n = 0; n < r.nodes.size(); ++n) {
      for (double x : sec.grid.coordinates(r.nodes[n])) f << x << ",";
      for (std::size_t e = 0; e < r.equations; ++e)
        f << r.values[n * r.equations + e] << (e + 1 < r.equations ? "," : "\n");
    }
  }
  return ok;
}

int hamiltonize_cmd(const ModelFile& mf, std::uint64_t seed, bool latex, std::ostream& out) {
  if (mf.is_field()) throw Failure(parse_error, "hamiltonize needs a mechanics model");
  const MechModel& m = mf.mech();
  if (!m.L) throw Failure(parse_error, "hamiltonize needs a Lagrangian");
  HamiltonizeOptions opts;
  opts.seed = seed;
  const HamiltonizeResult r = hamiltonize(m, opts);
  const VarTable vt = m.vars();
  auto show = [&](const Expr& e) { return latex ? to_latex(e, &vt) : to_string(e); };
  out << "velocity Hessian rank: " << r.probe.min_rank << ".." << r.probe.max_rank << " of " << m.dim()
      << " over " << r.probe.points << " probe points\n";
  if (r.symbolic()) {
    out << "H = " << show(r.hamiltonian()) << "\n";
  } else if (r.singular()) {
    const auto& f = r.family();
    out << "no single Hamiltonian: " << f.reason << "\n";
    out << "generating family: " << show(f.family) << "\n";
    out << "parameters:";
    for (const auto& p : f.parameters) out << " " << p;
    out << "\n";
  } else {
    out << "H evaluated numerically by inverting the Legendre map with Newton's method\n";
  }
  return ok;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Derivations, integration and checks for Lagrangian and Hamiltonian models", "ttriple"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_help_all_flag("--help-all");

  std::uint64_t seed = 0;
  std::optional<double> tol;
  app.add_option("--seed", seed, "random seed")->capture_default_str();
  app.add_option("--tol", tol, "override tolerances (thresholds for check, Newton tolerance for integrate)");

  ModelSource src;
  auto add_model = [&src](CLI::App* sub) {
    sub->add_option("file", src.file, "model file");
    sub->add_option("--model", src.name, "built-in model name");
  };

  std::string format = "text";
  auto* derive_cmd = app.add_subcommand("derive", "print the derived equations and the Legendre map");
  add_model(derive_cmd);
  derive_cmd->add_option("--format", format, "text or latex")->check(CLI::IsMember({"text", "latex"}));

  IntegrateArgs ia;
  auto* integrate_cmd = app.add_subcommand("integrate", "integrate a mechanics model with implicit midpoint");
  integrate_cmd->set_help_flag("--help", "Print this help message and exit");
  add_model(integrate_cmd);
  integrate_cmd->add_option("--z0", ia.z0, "initial state x1..xn,p1..pn")->required();
  integrate_cmd->add_option("--t0", ia.t0, "start time")->capture_default_str();
  integrate_cmd->add_option("--t1", ia.t1, "end time")->required();
  integrate_cmd->add_option("--h", ia.h, "step size")->capture_default_str();
  integrate_cmd->add_option("--out", ia.out, "trajectory CSV (default stdout)");

  std::string suite = "all", json_out;
  SuiteOptions so;
  auto* check_cmd = app.add_subcommand("check", "run property suites and emit a JSON report");
  check_cmd->add_option("--suite", suite, "bundles, theorem1, mechanics, field, models or all")->capture_default_str();
  check_cmd->add_option("--trials", so.trials, "random trials per property")->capture_default_str();
  check_cmd->add_option("--json", json_out, "report file (default stdout)");

  std::string data, which = "el", residual_out;
  auto* residual_cmd = app.add_subcommand("residual", "discrete residual of a field model on gridded data");
  add_model(residual_cmd);
  residual_cmd->add_option("--field-data", data, "phase section CSV")->required();
  residual_cmd->add_option("--which", which, "el, hamilton or dynamics")->capture_default_str();
  residual_cmd->add_option("--out", residual_out, "per-node residual CSV");

  auto* hamiltonize_sub = app.add_subcommand("hamiltonize", "Hamiltonian of a Lagrangian or its generating family");
  add_model(hamiltonize_sub);
  hamiltonize_sub->add_option("--format", format, "text or latex")->check(CLI::IsMember({"text", "latex"}));

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return parse_error;
  }

  try {
    if (*derive_cmd) {
      derive(load(src), format == "latex", out);
      return ok;
    }
    if (*integrate_cmd) return integrate(load(src), ia, tol, out, err);
    if (*check_cmd) {
      so.seed = seed;
      so.tol = tol;
      return check(suite, so, json_out, out, err);
    }
    if (*residual_cmd) return residual(load(src), data, which, residual_out, out);
    if (*hamiltonize_sub) return hamiltonize_cmd(load(src), seed, format == "latex", out);
  } catch (const Failure& f) {
    err << "error: " << f.what() << "\n";
    return f.code;
  } catch (const ShapeError& e) {
    err << "error: " << e.what() << "\n";
    return shape_mismatch;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return check_failed;
  }
  return ok;
}

}  // namespace ttriple::cli
