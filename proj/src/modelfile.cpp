#include "ttriple/modelfile.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <map>
#include <set>

namespace ttriple {

namespace {

struct Value {
  std::string text;
  std::size_t line = 0;
};

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

// Drops a trailing comment outside quotes.
std::string strip_comment(const std::string& s) {
  bool quoted = false;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '"') quoted = !quoted;
    if (!quoted && (s[i] == '#' || s[i] == ';')) return s.substr(0, i);
  }
  return s;
}

std::string unquote(const Value& v) {
  const std::string& t = v.text;
  if (t.size() >= 2 && t.front() == '"' && t.back() == '"') return t.substr(1, t.size() - 2);
  if (!t.empty() && t.front() == '"') throw ModelFileError(v.line, "unterminated string");
  return t;
}

std::vector<std::string> list_items(const Value& v) {
  const std::string& t = v.text;
  if (t.size() < 2 || t.front() != '[' || t.back() != ']')
    throw ModelFileError(v.line, "expected a list in brackets");
  std::vector<std::string> out;
  const std::string body = trim(t.substr(1, t.size() - 2));
  if (body.empty()) return out;
  std::size_t start = 0;
  while (true) {
    const auto comma = body.find(',', start);
    const std::string item = trim(body.substr(start, comma == std::string::npos ? std::string::npos : comma - start));
    if (item.empty()) throw ModelFileError(v.line, "empty list item");
    out.push_back(unquote(Value{item, v.line}));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

std::vector<double> number_list(const Value& v) {
  std::vector<double> out;
  for (const auto& s : list_items(v)) {
    std::size_t used = 0;
    double x = 0.0;
    try {
      x = std::stod(s, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != s.size()) throw ModelFileError(v.line, "not a number: '" + s + "'");
    out.push_back(x);
  }
  return out;
}

bool valid_identifier(const std::string& s) {
  if (s.empty() || !(std::isalpha(static_cast<unsigned char>(s[0])) || s[0] == '_')) return false;
  return std::all_of(s.begin(), s.end(), [](char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; });
}

Expr parse_expr(const Value& v) {
  try {
    return parse(unquote(v));
  } catch (const ParseError& e) {
    throw ModelFileError(v.line, std::string("bad expression: ") + e.what());
  }
}

void check_names(const Expr& e, const std::set<std::string>& allowed, const Value& v, const std::string& what) {
  for (const auto& n : free_variables(e))
    if (!allowed.count(n)) throw ModelFileError(v.line, what + " uses undeclared variable '" + n + "'");
}

using Sections = std::map<std::string, std::map<std::string, Value>>;

const std::map<std::string, std::set<std::string>>& known_keys() {
  static const std::map<std::string, std::set<std::string>> keys{
      {"model", {"name", "kind"}},   {"coordinates", {"base", "fiber"}}, {"lagrangian", {"expr"}},
      {"hamiltonian", {"expr"}},     {"metric", {"diag"}},               {"grid", {"dims", "origin", "spacing"}}};
  return keys;
}

Sections read_sections(std::istream& is) {
  Sections out;
  std::string raw, section;
  std::size_t line = 0;
  while (std::getline(is, raw)) {
    ++line;
    const std::string s = trim(strip_comment(raw));
    if (s.empty()) continue;
    if (s.front() == '[') {
      if (s.back() != ']') throw ModelFileError(line, "malformed section header");
      section = trim(s.substr(1, s.size() - 2));
      if (!known_keys().count(section)) throw ModelFileError(line, "unknown section [" + section + "]");
      if (out.count(section)) throw ModelFileError(line, "duplicate section [" + section + "]");
      out[section];
      continue;
    }
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw ModelFileError(line, "expected key = value");
    if (section.empty()) throw ModelFileError(line, "key outside of a section");
    const std::string key = trim(s.substr(0, eq));
    const std::string value = trim(s.substr(eq + 1));
    if (!known_keys().at(section).count(key))
      throw ModelFileError(line, "unknown key '" + key + "' in [" + section + "]");
    if (out[section].count(key)) throw ModelFileError(line, "duplicate key '" + key + "'");
    if (value.empty()) throw ModelFileError(line, "empty value for '" + key + "'");
    out[section][key] = Value{value, line};
  }
  return out;
}

const Value* find(const Sections& s, const std::string& section, const std::string& key) {
  const auto it = s.find(section);
  if (it == s.end()) return nullptr;
  const auto kt = it->second.find(key);
  return kt == it->second.end() ? nullptr : &kt->second;
}

const Value& require(const Sections& s, const std::string& section, const std::string& key, std::size_t line) {
  if (const Value* v = find(s, section, key)) return *v;
  throw ModelFileError(line, "missing '" + key + "' in [" + section + "]");
}

std::vector<std::string> identifiers(const Value& v) {
  auto names = list_items(v);
  std::set<std::string> seen;
  for (const auto& n : names) {
    if (!valid_identifier(n)) throw ModelFileError(v.line, "invalid coordinate name '" + n + "'");
    if (!seen.insert(n).second) throw ModelFileError(v.line, "duplicate coordinate '" + n + "'");
  }
  return names;
}

}  // namespace

ModelFile parse_model_file(std::istream& is) {
  const Sections s = read_sections(is);
  // Line used for errors about absent entries: end of file.
  std::size_t last = 0;
  for (const auto& [_, kv] : s)
    for (const auto& [__, v] : kv) last = std::max(last, v.line);

  ModelFile mf;
  mf.name = unquote(require(s, "model", "name", last));
  const Value& kind = require(s, "model", "kind", last);
  const std::string k = unquote(kind);
  if (k != "mechanics" && k != "field") throw ModelFileError(kind.line, "kind must be mechanics or field");

  const Value& fiber_v = require(s, "coordinates", "fiber", last);
  const auto fibers = identifiers(fiber_v);
  if (fibers.empty()) throw ModelFileError(fiber_v.line, "at least one fiber coordinate is required");
  std::vector<std::string> bases;
  const Value* base_v = find(s, "coordinates", "base");
  if (base_v) bases = identifiers(*base_v);

  const Value* lv = find(s, "lagrangian", "expr");
  const Value* hv = find(s, "hamiltonian", "expr");
  if (!lv && !hv) throw ModelFileError(last, "a [lagrangian] or [hamiltonian] expression is required");

  if (k == "mechanics") {
    if (bases.size() > 1) throw ModelFileError(base_v->line, "mechanics models take at most one base (time) coordinate");
    if (find(s, "metric", "diag")) throw ModelFileError(find(s, "metric", "diag")->line, "[metric] applies to field models");
    if (find(s, "grid", "dims")) throw ModelFileError(find(s, "grid", "dims")->line, "[grid] applies to field models");
    MechModel m;
    m.coords = fibers;
    if (!bases.empty()) m.time = bases[0];
    std::set<std::string> common(fibers.begin(), fibers.end());
    if (!m.time.empty()) common.insert(m.time);
    if (lv) {
      m.L = parse_expr(*lv);
      auto allowed = common;
      for (const auto& v : m.velocities()) allowed.insert(v);
      check_names(*m.L, allowed, *lv, "lagrangian");
    }
    if (hv) {
      m.H = parse_expr(*hv);
      auto allowed = common;
      for (const auto& p : m.momenta()) allowed.insert(p);
      check_names(*m.H, allowed, *hv, "hamiltonian");
    }
    try {
      m.validate();
    } catch (const Error& e) {
      throw ModelFileError(fiber_v.line, e.what());
    }
    mf.model = std::move(m);
    return mf;
  }

  if (bases.empty()) throw ModelFileError(base_v ? base_v->line : fiber_v.line, "field models need base coordinates");
  FieldModel fm;
  fm.bases = bases;
  fm.fibers = fibers;
  std::set<std::string> common(fibers.begin(), fibers.end());
  common.insert(bases.begin(), bases.end());
  if (lv) {
    fm.L = parse_expr(*lv);
    auto allowed = common;
    for (const auto& j : fm.jets()) allowed.insert(j);
    check_names(*fm.L, allowed, *lv, "lagrangian");
  }
  if (hv) {
    fm.H = parse_expr(*hv);
    auto allowed = common;
    for (const auto& p : fm.momenta()) allowed.insert(p);
    check_names(*fm.H, allowed, *hv, "hamiltonian");
  }
  if (const Value* dv = find(s, "metric", "diag")) {
    const auto d = number_list(*dv);
    if (d.size() != bases.size()) throw ModelFileError(dv->line, "metric diagonal length must equal the base dimension");
    Eigen::MatrixXd g = Eigen::MatrixXd::Zero(Eigen::Index(d.size()), Eigen::Index(d.size()));
    for (std::size_t i = 0; i < d.size(); ++i) {
      if (d[i] == 0.0) throw ModelFileError(dv->line, "metric must be invertible");
      g(Eigen::Index(i), Eigen::Index(i)) = d[i];
    }
    fm.metric = g;
  }
  if (const Value* gv = find(s, "grid", "dims")) {
    Grid g;
    for (double x : number_list(*gv)) {
      if (x < 1 || x != std::floor(x)) throw ModelFileError(gv->line, "grid dims must be positive integers");
      g.dims.push_back(static_cast<std::size_t>(x));
    }
    g.origin = number_list(require(s, "grid", "origin", gv->line));
    g.spacing = number_list(require(s, "grid", "spacing", gv->line));
    if (g.dims.size() != bases.size() || g.origin.size() != bases.size() || g.spacing.size() != bases.size())
      throw ModelFileError(gv->line, "grid lists must have one entry per base coordinate");
    try {
      g.validate();
    } catch (const Error& e) {
      throw ModelFileError(gv->line, e.what());
    }
    mf.grid = g;
  } else if (find(s, "grid", "origin") || find(s, "grid", "spacing")) {
    throw ModelFileError(last, "missing 'dims' in [grid]");
  }
  try {
    fm.validate();
  } catch (const Error& e) {
    throw ModelFileError(fiber_v.line, e.what());
  }
  mf.model = std::move(fm);
  return mf;
}

ModelFile load_model_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open model file '" + path + "'");
  return parse_model_file(in);
}

}  // namespace ttriple
