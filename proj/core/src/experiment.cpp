#include "stochrate/experiment.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numbers>
#include <sstream>

#include "json.hpp"

namespace stochrate {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(trim(cur));
  return out;
}

Real to_real(const std::string& s, const std::string& what) {
  try {
    std::size_t pos = 0;
    const Real v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw config_error("invalid number '" + s + "' for " + what);
  }
}

Index to_index(const std::string& s, const std::string& what) {
  const Real v = to_real(s, what);
  if (v < 0 || std::floor(v) != v) throw config_error("expected integer for " + what);
  return static_cast<Index>(v);
}

std::vector<Real> parse_real_list(const std::string& s, const std::string& what) {
  std::vector<Real> out;
  for (const auto& item : split(s, ','))
    if (!item.empty()) out.push_back(to_real(item, what));
  if (out.empty()) throw config_error("empty list for " + what);
  return out;
}

std::vector<Real> parse_positive_list(const std::string& s, const std::string& what) {
  auto out = parse_real_list(s, what);
  for (Real v : out)
    if (v <= 0.0) throw config_error(what + " entries must be positive");
  return out;
}

}  // namespace

// ---- Config ----

Config Config::parse(const std::string& text) {
  Config cfg;
  std::istringstream in(text);
  std::string line;
  std::string current;
  while (std::getline(in, line)) {
    line = trim(line);
    if (line.empty() || line[0] == '#' || line[0] == ';') continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw config_error("malformed section header: " + line);
      current = trim(line.substr(1, line.size() - 2));
      cfg.sections_.emplace_back(current, Section{});
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw config_error("malformed line: " + line);
    if (current.empty()) throw config_error("key outside any section: " + line);
    std::string value = trim(line.substr(eq + 1));
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"')
      value = value.substr(1, value.size() - 2);
    cfg.sections_.back().second.emplace_back(trim(line.substr(0, eq)), value);
  }
  return cfg;
}

Config Config::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw config_error("cannot open config file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

std::string Config::emit() const {
  std::ostringstream out;
  for (const auto& [name, section] : sections_) {
    out << "[" << name << "]\n";
    for (const auto& [k, v] : section) out << k << " = " << v << "\n";
    out << "\n";
  }
  return out.str();
}

bool Config::has(const std::string& section, const std::string& key) const {
  for (const auto& [name, sec] : sections_)
    if (name == section)
      for (const auto& [k, v] : sec)
        if (k == key) return true;
  return false;
}

std::string Config::get(const std::string& section, const std::string& key) const {
  for (const auto& [name, sec] : sections_)
    if (name == section)
      for (const auto& [k, v] : sec)
        if (k == key) return v;
  throw config_error("missing key '" + key + "' in [" + section + "]");
}

std::string Config::get_or(const std::string& section, const std::string& key,
                           const std::string& fallback) const {
  return has(section, key) ? get(section, key) : fallback;
}

void Config::set(const std::string& section, const std::string& key,
                 const std::string& value) {
  for (auto& [name, sec] : sections_)
    if (name == section) {
      for (auto& [k, v] : sec)
        if (k == key) {
          v = value;
          return;
        }
      sec.emplace_back(key, value);
      return;
    }
  sections_.emplace_back(section, Section{{key, value}});
}

std::string fmt_real(Real v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

// ---- sicc expressions ----

namespace {

// Grammar: id | power:q | log:c | sum(a*F, b*G) | compose(F,G) | min(F,G)
// The scale separator inside sum() accepts '*' or the UTF-8 middle dot.
struct SiccParser {
  const std::string& s;
  std::size_t pos = 0;

  explicit SiccParser(const std::string& str) : s(str) {}

  void skip_ws() {
    while (pos < s.size() && (s[pos] == ' ' || s[pos] == '\t')) ++pos;
  }
  bool consume(char c) {
    skip_ws();
    if (pos < s.size() && s[pos] == c) {
      ++pos;
      return true;
    }
    return false;
  }
  void expect(char c) {
    if (!consume(c))
      throw config_error(std::string("sicc expression: expected '") + c + "' in " + s);
  }

  std::string token() {
    skip_ws();
    std::size_t start = pos;
    while (pos < s.size() && (std::isalnum(static_cast<unsigned char>(s[pos])) ||
                              s[pos] == ':' || s[pos] == '.' || s[pos] == '-' ||
                              s[pos] == '_'))
      ++pos;
    return s.substr(start, pos - start);
  }

  // consumes "a*" or "a<middle dot>" prefix, returns scale
  Real scale_prefix() {
    skip_ws();
    std::size_t start = pos;
    while (pos < s.size() && (std::isdigit(static_cast<unsigned char>(s[pos])) ||
                              s[pos] == '.' || s[pos] == '-'))
      ++pos;
    const Real v = to_real(s.substr(start, pos - start), "sicc scale");
    skip_ws();
    if (pos < s.size() && s[pos] == '*') {
      ++pos;
    } else if (pos + 1 < s.size() && static_cast<unsigned char>(s[pos]) == 0xC2 &&
               static_cast<unsigned char>(s[pos + 1]) == 0xB7) {
      pos += 2;
    } else {
      throw config_error("sicc expression: expected '*' after scale in " + s);
    }
    return v;
  }

  SiccFunction parse() {
    skip_ws();
    if (s.compare(pos, 4, "sum(") == 0) {
      pos += 4;
      const Real alpha = scale_prefix();
      SiccFunction f = parse();
      expect(',');
      const Real beta = scale_prefix();
      SiccFunction g = parse();
      expect(')');
      return sicc_combine(SiccCombine::Sum, f, g, alpha, beta);
    }
    if (s.compare(pos, 8, "compose(") == 0) {
      pos += 8;
      SiccFunction f = parse();
      expect(',');
      SiccFunction g = parse();
      expect(')');
      return sicc_combine(SiccCombine::Compose, f, g);
    }
    if (s.compare(pos, 4, "min(") == 0) {
      pos += 4;
      SiccFunction f = parse();
      expect(',');
      SiccFunction g = parse();
      expect(')');
      return sicc_combine(SiccCombine::Min, f, g);
    }
    const std::string tok = token();
    if (tok == "id") return sicc_id();
    if (tok == "sqrt") return sicc_power(0.5);
    if (tok.rfind("power:", 0) == 0) return sicc_power(to_real(tok.substr(6), "power:q"));
    if (tok.rfind("log:", 0) == 0) return sicc_log(to_real(tok.substr(4), "log:c"));
    throw config_error("unknown sicc function '" + tok + "'");
  }
};

std::function<Real(Real)> parse_convex_core(const std::string& expr) {
  if (expr == "id" || expr == "identity") return [](Real e) { return e; };
  if (expr == "square") return [](Real e) { return e * e; };
  if (expr.rfind("pow:", 0) == 0) {
    const Real p = to_real(expr.substr(4), "convex pow:p");
    if (p < 1.0) throw config_error("convex pow:p needs p >= 1");
    return [p](Real e) { return std::pow(e, p); };
  }
  if (expr.rfind("scale:", 0) == 0) {
    const Real c = to_real(expr.substr(6), "convex scale:c");
    if (c <= 0.0) throw config_error("convex scale:c needs c > 0");
    return [c](Real e) { return c * e; };
  }
  throw config_error("unknown convex expression '" + expr + "'");
}

}  // namespace

SiccFunction parse_sicc_expr(const std::string& expr) {
  SiccParser p(expr);
  SiccFunction f = p.parse();
  p.skip_ws();
  if (p.pos != expr.size())
    throw config_error("trailing characters in sicc expression: " + expr);
  return f;
}

RegularityModulus parse_reg_expr(const std::string& expr) {
  if (expr.rfind("convex:", 0) == 0)
    return reg_from_convex(parse_convex_core(expr.substr(7)));
  if (expr.rfind("quasi-contraction:", 0) == 0)
    return uniq_quasi_contraction(to_real(expr.substr(18), "quasi-contraction:r"));
  if (expr.rfind("sharp-min:", 0) == 0) {
    std::string rest = expr.substr(10);
    bool quarter = false;
    const auto q = rest.find(":quarter");
    if (q != std::string::npos) {
      quarter = true;
      rest = rest.substr(0, q);
    }
    return uniq_sharp_min(parse_convex_core(rest), quarter);
  }
  if (expr.rfind("strongly-quasiconvex:", 0) == 0)
    return uniq_strongly_quasiconvex(to_real(expr.substr(21), "mu"));
  if (expr == "frechet") return uniq_frechet();
  if (expr.rfind("prox-transfer:", 0) == 0) {
    const auto rest = expr.substr(14);
    const auto comma = rest.rfind(',');
    if (comma == std::string::npos)
      throw config_error("prox-transfer needs '<convex>,gamma'");
    const RegularityModulus inner =
        reg_from_convex(parse_convex_core(rest.substr(0, comma)));
    return uniq_prox_transfer(inner, to_real(rest.substr(comma + 1), "gamma"));
  }
  if (expr.rfind("ui:", 0) == 0) {
    const Real K = to_real(expr.substr(3), "ui:K");
    PointwiseLowerBound pi{[](Real e, Real l) { return e / l; }};
    UIModulus mu{[](Real e) { return std::min(e, 1.0); }};
    return reg_from_ui(pi, K, mu);
  }
  if (expr.rfind("bounded:", 0) == 0) {
    const Real K = to_real(expr.substr(8), "bounded:K");
    PointwiseLowerBound pi{[](Real e, Real) { return e; }};
    return reg_bounded(pi, K);
  }
  throw config_error("unknown regularity expression '" + expr + "'");
}

// ---- sequence expressions ----

SeqExpr parse_seq_expr(const std::string& expr) {
  SeqExpr s;
  s.label = expr;
  if (expr == "zero") {
    s.kind = SeqExpr::Kind::Zero;
    s.fn = [](Index) { return 0.0; };
    return s;
  }
  if (expr.rfind("const:", 0) == 0) {
    s.kind = SeqExpr::Kind::Const;
    s.p1 = to_real(expr.substr(6), "const:v");
    if (s.p1 <= 0.0) throw config_error("const:v needs v > 0");
    const Real v = s.p1;
    s.fn = [v](Index) { return v; };
    return s;
  }
  if (expr.rfind("inv:", 0) == 0) {
    s.kind = SeqExpr::Kind::Inv;
    s.p1 = to_real(expr.substr(4), "inv:c");
    if (s.p1 <= 0.0) throw config_error("inv:c needs c > 0");
    const Real c = s.p1;
    s.fn = [c](Index n) { return c / static_cast<Real>(n + 1); };
    return s;
  }
  if (expr.rfind("geom:", 0) == 0) {
    const auto parts = split(expr.substr(5), ',');
    if (parts.size() != 2) throw config_error("geom needs 'g,q'");
    s.kind = SeqExpr::Kind::Geom;
    s.p1 = to_real(parts[0], "geom g");
    s.p2 = to_real(parts[1], "geom q");
    if (s.p1 < 0.0 || s.p2 <= 0.0 || s.p2 >= 1.0)
      throw config_error("geom:g,q needs g >= 0 and q in (0,1)");
    const Real g = s.p1, q = s.p2;
    s.fn = [g, q](Index n) { return g * std::pow(q, static_cast<Real>(n)); };
    return s;
  }
  if (expr.rfind("harmonic:", 0) == 0) {
    const auto parts = split(expr.substr(9), ',');
    if (parts.size() != 2) throw config_error("harmonic needs 'beta,r'");
    s.kind = SeqExpr::Kind::Harmonic;
    s.p1 = to_real(parts[0], "harmonic beta");
    s.r = to_index(parts[1], "harmonic r");
    if (s.p1 <= 0.0 || s.r < 1) throw config_error("harmonic:beta,r needs beta > 0, r >= 1");
    const Real beta = s.p1;
    const Index r = s.r;
    s.fn = [beta, r](Index n) { return 1.0 / (beta * static_cast<Real>(n + r)); };
    return s;
  }
  if (expr.rfind("power:", 0) == 0) {
    s.kind = SeqExpr::Kind::Power;
    s.p1 = to_real(expr.substr(6), "power:p");
    if (s.p1 <= 0.5 || s.p1 > 1.0) throw config_error("power:p needs p in (1/2, 1]");
    const Real p = s.p1;
    s.fn = [p](Index n) { return std::pow(static_cast<Real>(n + 1), -p); };
    return s;
  }
  throw config_error("unknown sequence expression '" + expr + "'");
}

TailRate seq_pointwise_rate(const SeqExpr& s) {
  TailRate t;
  switch (s.kind) {
    case SeqExpr::Kind::Zero:
      t.fn = [](Real) { return Index{0}; };
      return t;
    case SeqExpr::Kind::Const: {
      const Real v = s.p1;
      t.fn = [v](Real eps) { return eps > v ? Index{0} : kIndexCap; };
      return t;
    }
    case SeqExpr::Kind::Inv: {
      const Real c = s.p1;
      t.fn = [c](Real eps) { return index_from_real(c / eps); };
      return t;
    }
    case SeqExpr::Kind::Geom: {
      const Real g = s.p1, q = s.p2;
      t.fn = [g, q](Real eps) { return geometric_crossing_index(g, q, eps); };
      return t;
    }
    case SeqExpr::Kind::Harmonic: {
      const Real beta = s.p1;
      const Index r = s.r;
      t.fn = [beta, r](Real eps) {
        const Real k = 1.0 / (beta * eps) + 1.0 - static_cast<Real>(r);
        return index_from_real(k);
      };
      return t;
    }
    case SeqExpr::Kind::Power: {
      const Real p = s.p1;
      t.fn = [p](Real eps) { return index_from_real(std::pow(eps, -1.0 / p)); };
      return t;
    }
  }
  throw config_error("seq_pointwise_rate: unsupported family " + s.label);
}

TailRate seq_sum_tail_rate(const SeqExpr& s) {
  TailRate t;
  switch (s.kind) {
    case SeqExpr::Kind::Zero:
      t.fn = [](Real) { return Index{0}; };
      return t;
    case SeqExpr::Kind::Geom: {
      const Real coeff = s.p1 / (1.0 - s.p2);
      const Real q = s.p2;
      t.fn = [coeff, q](Real eps) { return geometric_crossing_index(coeff, q, eps); };
      return t;
    }
    default:
      throw config_error("sum of '" + s.label + "' does not converge (no tail rate)");
  }
}

TailRate seq_sumsq_tail_rate(const SeqExpr& s) {
  TailRate t;
  switch (s.kind) {
    case SeqExpr::Kind::Zero:
      t.fn = [](Real) { return Index{0}; };
      return t;
    case SeqExpr::Kind::Geom: {
      const Real coeff = s.p1 * s.p1 / (1.0 - s.p2 * s.p2);
      const Real q2 = s.p2 * s.p2;
      t.fn = [coeff, q2](Real eps) { return geometric_crossing_index(coeff, q2, eps); };
      return t;
    }
    case SeqExpr::Kind::Inv: {
      // tail sum_{n>=k} c^2/(n+1)^2 < c^2/k for k >= 1
      const Real c2 = s.p1 * s.p1;
      t.fn = [c2](Real eps) { return sat_add(index_from_real(c2 / eps), 1); };
      return t;
    }
    case SeqExpr::Kind::Harmonic:
      return steps_harmonic(s.p1, s.r).chi_sq;
    case SeqExpr::Kind::Power:
      return steps_power(s.p1).chi_sq;
    default:
      throw config_error("sum of squares of '" + s.label + "' does not converge");
  }
}

DivergenceRate seq_divergence_rate(const SeqExpr& s) {
  switch (s.kind) {
    case SeqExpr::Kind::Const:
      return steps_const(s.p1).theta_sum;
    case SeqExpr::Kind::Inv: {
      // treat c/(n+1) as harmonic with beta = 1/c, r = 1
      return steps_harmonic(1.0 / s.p1, 1).theta_sum;
    }
    case SeqExpr::Kind::Harmonic:
      return steps_harmonic(s.p1, s.r).theta_sum;
    case SeqExpr::Kind::Power:
      return steps_power(s.p1).theta_sum;
    default:
      throw config_error("series '" + s.label + "' does not diverge (no divergence rate)");
  }
}

Real seq_sum_bound(const SeqExpr& s) {
  switch (s.kind) {
    case SeqExpr::Kind::Zero: return 0.0;
    case SeqExpr::Kind::Geom: return s.p1 / (1.0 - s.p2);
    default:
      throw config_error("sum of '" + s.label + "' has no finite bound");
  }
}

Real seq_sumsq_bound(const SeqExpr& s) {
  switch (s.kind) {
    case SeqExpr::Kind::Zero: return 0.0;
    case SeqExpr::Kind::Geom: return s.p1 * s.p1 / (1.0 - s.p2 * s.p2);
    case SeqExpr::Kind::Inv: return s.p1 * s.p1 * std::numbers::pi * std::numbers::pi / 6.0;
    case SeqExpr::Kind::Harmonic: return steps_harmonic(s.p1, s.r).sum_sq;
    case SeqExpr::Kind::Power: return steps_power(s.p1).sum_sq;
    default:
      throw config_error("sum of squares of '" + s.label + "' has no finite bound");
  }
}

StepSeq parse_steps_expr(const std::string& expr) {
  const SeqExpr s = parse_seq_expr(expr);
  switch (s.kind) {
    case SeqExpr::Kind::Const: return steps_const(s.p1);
    case SeqExpr::Kind::Harmonic: return steps_harmonic(s.p1, s.r);
    case SeqExpr::Kind::Power: return steps_power(s.p1);
    case SeqExpr::Kind::Inv: return steps_harmonic(1.0 / s.p1, 1);
    default:
      throw config_error("'" + expr + "' is not a valid step-size expression");
  }
}

TailRate parse_tail_expr(const std::string& expr) {
  if (expr == "zero") {
    TailRate t;
    t.fn = [](Real) { return Index{0}; };
    return t;
  }
  if (expr == "ceil-inv") {
    TailRate t;
    t.fn = [](Real eps) { return index_from_real(1.0 / eps); };
    return t;
  }
  if (expr.rfind("ceil-inv:", 0) == 0) {
    const Real c = to_real(expr.substr(9), "ceil-inv:c");
    TailRate t;
    t.fn = [c](Real eps) { return index_from_real(c / eps); };
    return t;
  }
  if (expr.rfind("geom:", 0) == 0) return seq_sum_tail_rate(parse_seq_expr(expr));
  throw config_error("unknown tail-rate expression '" + expr + "'");
}

DivergenceRate parse_div_expr(const std::string& expr) {
  if (expr.rfind("affine:", 0) == 0) {
    const Real u = to_real(expr.substr(7), "affine:u");
    if (u <= 0.0) throw config_error("affine:u needs u > 0");
    DivergenceRate d;
    d.fn = [u](Index k, Real b) { return sat_add(k, index_from_real(b / u)); };
    return d;
  }
  return seq_divergence_rate(parse_seq_expr(expr));
}

LiminfModulus parse_liminf_expr(const std::string& expr) {
  if (expr.rfind("shift:", 0) == 0) {
    const Real c = to_real(expr.substr(6), "shift:c");
    LiminfModulus l;
    l.fn = [c](Real eps, Index n) { return sat_add(n, index_from_real(c / eps)); };
    return l;
  }
  throw config_error("unknown liminf expression '" + expr + "'");
}

StatePoint parse_point(const std::string& text) {
  if (text.rfind("star:", 0) == 0) {
    const auto parts = split(text.substr(5), ',');
    if (parts.size() != 2) throw config_error("star point needs 'star:leg,t'");
    return make_star(static_cast<int>(to_index(parts[0], "star leg")),
                     to_real(parts[1], "star t"));
  }
  std::vector<Real> coords = parse_real_list(text, "point coordinates");
  return make_euclidean(std::move(coords));
}

// ---- model building ----

ProcessModel build_model(const Config& cfg) {
  const std::string name = cfg.get("model", "name");
  if (name == "counterexample") return counterexample_model();

  if (name.rfind("rm:", 0) == 0) {
    RMModelParams p;
    const std::string field = name.substr(3);
    if (field == "linear") p.field = RMField::LinearStronglyMonotone;
    else if (field == "cubic") p.field = RMField::Cubic1d;
    else if (field == "abs") p.field = RMField::AbsSubgradient1d;
    else throw config_error("unknown rm field '" + field + "'");
    p.beta = to_real(cfg.get_or("model", "beta", "1"), "beta");
    p.dim = static_cast<int>(to_index(cfg.get_or("model", "dim", "1"), "dim"));
    p.noise_sd = to_real(cfg.get_or("model", "noise_sd", "0"), "noise_sd");
    p.steps = parse_steps_expr(cfg.get("model", "steps"));
    p.x0 = parse_real_list(cfg.get("model", "x0"), "x0");
    return rm_model(p);
  }

  if (name == "km") {
    KMModelParams p;
    p.contraction_r = to_real(cfg.get_or("model", "r", "0.5"), "r");
    const SeqExpr lam = parse_seq_expr(cfg.get_or("model", "lambda", "const:0.5"));
    if (lam.kind != SeqExpr::Kind::Const)
      throw config_error("km model: lambda must be a const:v sequence");
    p.lambda = lam.fn;
    p.lambda_lo = p.lambda_hi = lam.p1;
    const SeqExpr noise = parse_seq_expr(cfg.get_or("model", "noise", "zero"));
    if (noise.kind == SeqExpr::Kind::Zero) {
      p.noise_sd = [](Index) { return 0.0; };
      p.noise_sd0 = 0.0;
      p.noise_decay = 0.5;
    } else if (noise.kind == SeqExpr::Kind::Geom) {
      p.noise_sd = noise.fn;
      p.noise_sd0 = noise.p1;
      p.noise_decay = noise.p2;
    } else {
      throw config_error("km model: noise must be zero or geom:g,q");
    }
    const std::string space = cfg.get_or("model", "space", "euclidean:1");
    if (space.rfind("star:", 0) == 0) {
      p.star = true;
      p.dim_or_legs = static_cast<int>(to_index(space.substr(5), "star legs"));
    } else if (space.rfind("euclidean:", 0) == 0) {
      p.dim_or_legs = static_cast<int>(to_index(space.substr(10), "euclidean dim"));
    } else {
      throw config_error("unknown space '" + space + "'");
    }
    p.x0 = parse_point(cfg.get("model", "x0"));
    return km_model(p);
  }

  if (name == "prox") {
    ProxModelParams p;
    const SeqExpr gamma = parse_seq_expr(cfg.get("model", "gamma"));
    p.gamma = gamma.fn;
    if (cfg.has("model", "gamma_lower"))
      p.gamma_lower = to_real(cfg.get("model", "gamma_lower"), "gamma_lower");
    else if (gamma.kind == SeqExpr::Kind::Const)
      p.gamma_lower = gamma.p1;
    else
      throw config_error("prox model: gamma_lower required for non-const gamma");
    const SeqExpr noise = parse_seq_expr(cfg.get_or("model", "noise", "zero"));
    p.noise_sd = noise.fn;
    if (noise.kind == SeqExpr::Kind::Geom) {
      p.noise_sd0 = noise.p1;
      p.noise_decay = noise.p2;
    } else if (noise.kind != SeqExpr::Kind::Zero) {
      throw config_error("prox model: noise must be zero or geom:g,q");
    }
    p.dim = static_cast<int>(to_index(cfg.get_or("model", "dim", "1"), "dim"));
    p.z = parse_real_list(cfg.get_or("model", "z", "0"), "z");
    p.x0 = parse_real_list(cfg.get("model", "x0"), "x0");
    return prox_model(p);
  }

  if (name == "splitting") {
    SplittingModelParams p;
    for (const auto& item : split(cfg.get("model", "anchors"), ';')) {
      const auto at = item.rfind('@');
      if (at == std::string::npos)
        throw config_error("anchor entries need 'point@weight'");
      SplittingAnchor a;
      a.point = parse_point(item.substr(0, at));
      a.weight = to_real(item.substr(at + 1), "anchor weight");
      p.anchors.push_back(a);
    }
    const SeqExpr lam = parse_seq_expr(cfg.get("model", "lambda"));
    p.lambda = lam.fn;
    p.lambda_sq_tail = seq_sumsq_tail_rate(lam);
    p.lambda_sq_sum = seq_sumsq_bound(lam);
    p.lambda_div = seq_divergence_rate(lam);
    const std::string space = cfg.get_or("model", "space", "star:3");
    if (space.rfind("star:", 0) == 0) {
      p.star = true;
      p.dim_or_legs = static_cast<int>(to_index(space.substr(5), "star legs"));
    } else if (space.rfind("euclidean:", 0) == 0) {
      p.star = false;
      p.dim_or_legs = static_cast<int>(to_index(space.substr(10), "euclidean dim"));
    } else {
      throw config_error("unknown space '" + space + "'");
    }
    p.x0 = parse_point(cfg.get_or("model", "x0", p.star ? "star:0,0" : "0"));
    return splitting_model(p);
  }

  if (name == "dvoretzky") {
    DvoretzkyModelParams p;
    const SeqExpr a = parse_seq_expr(cfg.get("model", "a"));
    const SeqExpr b = parse_seq_expr(cfg.get("model", "b"));
    const SeqExpr c = parse_seq_expr(cfg.get("model", "c"));
    const SeqExpr noise = parse_seq_expr(cfg.get_or("model", "noise", "zero"));
    p.a_seq = a.fn;
    p.b_seq = b.fn;
    p.c_seq = c.fn;
    p.noise_sd = noise.fn;
    p.dim = static_cast<int>(to_index(cfg.get_or("model", "dim", "1"), "dim"));
    p.A = a.fn(0);
    p.varphi_a = seq_pointwise_rate(a);
    p.B = seq_sum_bound(b);
    p.beta_b = seq_sum_tail_rate(b);
    p.C = seq_sumsq_bound(c);
    p.gamma_c = seq_sumsq_tail_rate(c);
    const Real dim_r = static_cast<Real>(p.dim);
    p.M = dim_r * seq_sumsq_bound(noise);
    const TailRate noise_sq = seq_sumsq_tail_rate(noise);
    p.mu_y.fn = [noise_sq, dim_r](Real eps) { return noise_sq(eps / dim_r); };
    p.theta_c = seq_divergence_rate(c);
    p.z = parse_real_list(cfg.get_or("model", "z", "0"), "z");
    p.x0 = parse_real_list(cfg.get("model", "x0"), "x0");
    return dvoretzky_model(p);
  }

  throw config_error("unknown model '" + name + "'");
}

MCConfig build_mc(const Config& cfg, std::optional<std::uint64_t> seed_override) {
  MCConfig mc;
  mc.trials = to_index(cfg.get_or("mc", "trials", "100000"), "trials");
  mc.horizon = to_index(cfg.get_or("mc", "horizon", "1000"), "horizon");
  mc.master_seed = to_index(cfg.get_or("mc", "seed", "12345"), "seed");
  mc.ci_multiplier = to_real(cfg.get_or("mc", "ci", "3"), "ci");
  if (seed_override) mc.master_seed = *seed_override;
  mc.validate();
  return mc;
}

// ---- theorem wiring ----

namespace {

struct TheoremEval {
  std::string selector;
  // bundle-style theorems
  RateBundle bundle;
  SiccFunction f;
  bool has_bundle = false;
  RateASFn metric_rate;  // the d-event rate of the quasi-Fejer theorem
  // fast bounds
  std::function<Real(Index)> mean_bound;
  std::function<Real(Index, Real)> exceed_bound_clamped;
  std::string fast_provenance;
  bool has_fast = false;
};

DivergenceRate model_theta_sum_a(const Config& cfg) {
  // divergence rate of sum a_n recovered from the model's step expression
  return parse_steps_expr(cfg.get("model", "steps")).theta_sum;
}

TheoremEval build_theorem(const Config& cfg, const MCConfig& mc) {
  TheoremEval ev;
  ev.selector = cfg.get("experiment", "theorem");
  const bool has_model = cfg.has("model", "name");
  ProcessModel model;
  if (has_model) model = build_model(cfg);
  const auto& cert = model.certified;

  auto moduli_f = [&]() { return parse_sicc_expr(cfg.get_or("moduli", "f", "id")); };
  auto moduli_tau = [&]() { return parse_reg_expr(cfg.get("moduli", "tau")); };
  auto scalar_or = [&](const std::string& key, const char* what) -> Real {
    if (cfg.has("moduli", key)) return to_real(cfg.get("moduli", key), what);
    if (has_model && cert.has(key)) return cert.at(key);
    throw config_error(std::string("missing key '") + key + "' in [moduli]");
  };

  if (ev.selector == "general") {
    GeneralSpec spec;
    spec.K = to_real(cfg.get_or("moduli", "K", "1"), "K");
    spec.f = moduli_f();
    if (cfg.has("moduli", "chi")) spec.chi = parse_tail_expr(cfg.get("moduli", "chi"));
    else if (has_model && cert.chi) spec.chi = cert.chi;
    else throw config_error("missing key 'chi' in [moduli]");
    const std::string lim = cfg.get_or("moduli", "liminf", "certified");
    if (lim == "certified") {
      if (!(has_model && cert.liminf))
        throw config_error("model has no certified liminf modulus; set 'liminf'");
      spec.liminf_mod = cert.liminf;
    } else {
      spec.liminf_mod = parse_liminf_expr(lim);
    }
    ev.bundle = rate_general(spec);
    ev.f = spec.f;
    ev.has_bundle = true;
    return ev;
  }

  if (ev.selector == "rs") {
    RSSpec spec;
    spec.f = moduli_f();
    spec.tau = moduli_tau();
    spec.K = scalar_or("K", "K");
    spec.L = scalar_or("L", "L");
    if (cfg.has("moduli", "M")) spec.M = to_real(cfg.get("moduli", "M"), "M");
    else if (has_model && cert.has("M_err")) spec.M = cert.at("M_err");
    else throw config_error("missing key 'M' in [moduli]");
    if (cfg.has("moduli", "theta")) spec.theta = parse_div_expr(cfg.get("moduli", "theta"));
    else if (has_model && cert.theta) spec.theta = cert.theta;
    else throw config_error("missing key 'theta' in [moduli]");
    if (cfg.has("moduli", "chi")) spec.chi = parse_tail_expr(cfg.get("moduli", "chi"));
    else if (has_model && cert.chi) spec.chi = cert.chi;
    else throw config_error("missing key 'chi' in [moduli]");
    ev.bundle = rate_rs(spec);
    ev.f = spec.f;
    ev.has_bundle = true;
    return ev;
  }

  if (ev.selector == "rm" || ev.selector == "rm-sqrt") {
    RMSpec spec;
    spec.f = moduli_f();
    spec.tau = moduli_tau();
    spec.c = scalar_or("c", "c");
    spec.d = scalar_or("d", "d");
    spec.L = scalar_or("L", "L");
    if (cfg.has("moduli", "M")) spec.M = to_real(cfg.get("moduli", "M"), "M");
    else if (has_model && cert.has("M_steps_sq")) spec.M = cert.at("M_steps_sq");
    else throw config_error("missing key 'M' in [moduli]");
    if (cfg.has("moduli", "theta")) spec.theta = parse_div_expr(cfg.get("moduli", "theta"));
    else if (has_model) spec.theta = model_theta_sum_a(cfg);
    else throw config_error("missing key 'theta' in [moduli]");
    if (cfg.has("moduli", "chi")) spec.chi = parse_tail_expr(cfg.get("moduli", "chi"));
    else if (has_model) spec.chi = parse_steps_expr(cfg.get("model", "steps")).chi_sq;
    else throw config_error("missing key 'chi' in [moduli]");
    ev.bundle = ev.selector == "rm" ? rate_rm(spec) : rate_rm_sqrt(spec);
    ev.f = spec.f;
    ev.has_bundle = true;
    return ev;
  }

  if (ev.selector == "fejer") {
    const RegularityModulus tau = moduli_tau();
    const Real K = scalar_or("K", "K");
    TailRate chi;
    if (cfg.has("moduli", "chi")) chi = parse_tail_expr(cfg.get("moduli", "chi"));
    else if (has_model && cert.chi) chi = cert.chi;
    else throw config_error("missing key 'chi' in [moduli]");
    LiminfModulus liminf;
    const std::string lim = cfg.get_or("moduli", "liminf", "certified");
    if (lim == "certified") {
      if (!(has_model && cert.liminf))
        throw config_error("model has no certified liminf modulus; set 'liminf'");
      liminf = cert.liminf;
    } else if (lim == "empirical") {
      if (!has_model) throw config_error("empirical liminf needs a model");
      const Index horizon = to_index(cfg.get_or("moduli", "calibration_horizon", "20000"),
                                     "calibration_horizon");
      const std::uint64_t trials =
          to_index(cfg.get_or("moduli", "calibration_trials", "2048"), "calibration_trials");
      liminf = empirical_liminf_modulus(model, horizon, trials,
                                        mc.master_seed ^ 0xCA11B7A7E5EEDull);
    } else {
      liminf = parse_liminf_expr(lim);
    }
    RegularityModulus consistency;
    const std::string cons = cfg.get_or("moduli", "consistency", "id");
    if (cons == "id") consistency = RegularityModulus{[](Real e) { return e; }, "id"};
    else if (cons == "square") consistency = RegularityModulus{[](Real e) { return e * e; }, "square"};
    else throw config_error("consistency must be 'id' or 'square'");
    const FejerRate fr = rate_fejer(tau, K, chi, liminf, consistency);
    ev.bundle.rho = fr.rho;
    // exceedance rows test the phi-event, so they take the phi-rate; the
    // metric-event rate is reported separately
    ev.bundle.rho_as = fr.rho_as;
    ev.metric_rate = fr.rho_metric;
    ev.bundle.provenance = fr.provenance + (lim == "empirical" ? "+empirical-liminf" : "");
    ev.f = sicc_id();
    ev.has_bundle = true;
    return ev;
  }

  if (ev.selector == "dvoretzky") {
    if (!has_model || model.name != "dvoretzky")
      throw config_error("dvoretzky theorem needs a dvoretzky model");
    DvoretzkySpec spec;
    spec.A = cert.at("A");
    spec.B = cert.at("B");
    spec.C = cert.at("C");
    spec.M = cert.at("M");
    spec.varphi_a = cert.varphi_a;
    spec.beta_b = cert.beta_b;
    spec.gamma_c = cert.gamma_c;
    spec.mu_y = cert.mu_y;
    spec.theta = cert.theta;
    spec.L_of = cert.L_of;
    ev.bundle.rho_as = rate_dvoretzky(spec);
    ev.bundle.provenance = "dvoretzky(A=" + fmt_real(spec.A) + ",B=" + fmt_real(spec.B) +
                           ",C=" + fmt_real(spec.C) + ",M=" + fmt_real(spec.M) + ")";
    ev.f = sicc_id();
    ev.has_bundle = true;
    return ev;
  }

  if (ev.selector == "rs-fast") {
    FastSpec spec;
    spec.c = to_real(cfg.get("moduli", "c"), "c");
    spec.d = to_real(cfg.get("moduli", "d"), "d");
    spec.r = to_index(cfg.get("moduli", "r"), "r");
    spec.t = to_real(cfg.get_or("moduli", "t", "1"), "t");
    spec.K = to_real(cfg.get_or("moduli", "K", "1"), "K");
    spec.L = to_real(cfg.get("moduli", "L"), "L");
    const FastRate fr = fast_rate_rs(spec);
    ev.mean_bound = fr.mean_bound;
    ev.exceed_bound_clamped = fr.exceed_bound_clamped;
    ev.fast_provenance = fr.provenance;
    ev.has_fast = true;
    return ev;
  }

  if (ev.selector == "strong-monotone") {
    const Real beta = scalar_or("beta", "beta");
    const Real c = scalar_or("c", "c");
    const Real d = scalar_or("d", "d");
    const Real L = scalar_or("L", "L");
    const Real K = scalar_or("K", "K");
    const Index r = to_index(cfg.get("moduli", "r"), "r");
    const StrongMonotoneRate sm = fast_rate_strongly_monotone(beta, c, d, r, L, K);
    ev.mean_bound = sm.mean_bound;
    ev.exceed_bound_clamped = sm.exceed_bound_clamped;
    ev.fast_provenance = sm.provenance;
    ev.has_fast = true;
    return ev;
  }

  throw config_error("unknown theorem '" + ev.selector + "'");
}

// ---- emission ----

constexpr const char* kRateSchema = "stochrate.rate.v1";
constexpr const char* kValidateSchema = "stochrate.validate.v1";
constexpr const char* kTrajectorySchema = "stochrate.trajectory.v1";

using Row = std::vector<std::string>;

void write_outputs(const std::string& out_dir, const std::string& stem,
                   const std::string& schema, const std::vector<std::string>& header,
                   const std::vector<Row>& rows, const std::string& format,
                   const Config& cfg) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);
  if (format == "csv" || format == "both") {
    std::ofstream csv(fs::path(out_dir) / (stem + ".csv"));
    csv << "# " << schema << "\n";
    for (std::size_t i = 0; i < header.size(); ++i)
      csv << header[i] << (i + 1 < header.size() ? "," : "\n");
    for (const auto& row : rows)
      for (std::size_t i = 0; i < row.size(); ++i)
        csv << row[i] << (i + 1 < row.size() ? "," : "\n");
  }
  if (format == "json" || format == "both") {
    nlohmann::json j;
    j["schema"] = schema;
    j["rows"] = nlohmann::json::array();
    for (const auto& row : rows) {
      nlohmann::json obj;
      for (std::size_t i = 0; i < header.size(); ++i) obj[header[i]] = row[i];
      j["rows"].push_back(obj);
    }
    std::ofstream js(fs::path(out_dir) / (stem + ".json"));
    js << j.dump(2) << "\n";
  }
  std::ofstream snap(fs::path(out_dir) / (stem + "_config.ini"));
  snap << cfg.emit();
}

std::string sanitize(const std::string& s) {
  std::string out = s;
  for (char& c : out)
    if (c == ',' || c == '\n') c = ';';
  return out;
}

std::string index_str(Index n) {
  return index_is_capped(n) ? "inf" : std::to_string(n);
}

Row row_from_validation(const std::string& kind, const ValidationRow& r) {
  return Row{kind,
             r.lambda ? fmt_real(*r.lambda) : "",
             fmt_real(r.epsilon),
             index_str(r.index),
             fmt_real(r.estimate.mean),
             fmt_real(r.estimate.std_err),
             std::to_string(r.estimate.trials),
             fmt_real(r.bound),
             r.feasible ? (r.pass ? "pass" : "fail") : "infeasible",
             sanitize(r.note)};
}

}  // namespace

// ---- commands ----

int run_catalog(std::ostream& out) {
  out << "sicc functions (moduli.f):\n"
         "  id                      identity on [0,inf)\n"
         "  power:q                 x^q, q in (0,1]; psi=a^q, kappa=eps^(1/q)\n"
         "  log:c                   log_c(1+x), c>1; psi=a, kappa=c^eps-1\n"
         "  sum(a*F, b*G)           a F + b G, a,b>0\n"
         "  compose(F,G), min(F,G)  closure operations\n"
         "\n"
         "regularity moduli (moduli.tau):\n"
         "  convex:{id|square|pow:p|scale:c}   Jensen route for convex tau\n"
         "  quasi-contraction:r     (1-r) eps, fixed points of quasi-contractions\n"
         "  sharp-min:<convex>[:quarter]       sharp minima (quarter: quasiconvex)\n"
         "  strongly-quasiconvex:mu (mu/8) eps^2\n"
         "  frechet                 eps^2, weighted Frechet means\n"
         "  prox-transfer:<convex>,gamma       min{tau(eps/2) gamma, eps/2}\n"
         "  ui:K                    uniform-integrability route (pi=eps/l, mu=min(eps,1))\n"
         "  bounded:K               a.s.-bounded route (pi=eps)\n"
         "\n"
         "models (model.name):\n"
         "  counterexample          product martingale on {0,2} draws\n"
         "  rm:linear               x - a_n(beta x + noise); beta, dim, noise_sd, steps, x0\n"
         "  rm:cubic, rm:abs        one-dimensional drift x^3 / sign(x)\n"
         "  km                      noisy Krasnoselskii-Mann; r, lambda, noise, space, x0\n"
         "  prox                    noisy proximal point; gamma, noise, z, x0\n"
         "  splitting               random-order splitting; anchors, lambda, space, x0\n"
         "  dvoretzky               shrinkage transfer; a, b, c, noise, z, x0\n"
         "\n"
         "step/scalar sequences: const:v | inv:c | geom:g,q | harmonic:beta,r | power:p | zero\n"
         "\n"
         "theorems (experiment.theorem):\n"
         "  general                 abstract supermartingale mean/a.s. rate\n"
         "  rs                      quantitative Robbins-Siegmund rate\n"
         "  rs-fast                 1/(n+r) mean bound + exceedance bound\n"
         "  strong-monotone         Robbins-Monro on strongly monotone fields\n"
         "  rm, rm-sqrt             Robbins-Monro rates (general f / f = sqrt)\n"
         "  dvoretzky               approximation-scheme a.s. rate\n"
         "  fejer                   stochastic quasi-Fejer mean/a.s./metric rates\n";
  return 0;
}

int run_rate(const Config& cfg, const CommandOptions& opt, std::ostream& log) {
  MCConfig mc = build_mc(cfg, opt.seed_override);
  const TheoremEval ev = build_theorem(cfg, mc);
  const std::vector<std::string> header = {"kind", "lambda", "epsilon", "n",
                                           "value", "provenance"};
  std::vector<Row> rows;

  if (ev.has_bundle) {
    if (ev.bundle.rho && cfg.has("grid", "epsilon")) {
      for (Real eps : parse_positive_list(cfg.get("grid", "epsilon"), "epsilon grid"))
        rows.push_back(Row{"rho", "", fmt_real(eps), index_str(ev.bundle.rho(eps)), "",
                           sanitize(ev.bundle.provenance)});
    }
    if (ev.bundle.rho_as && cfg.has("grid", "lambda")) {
      const auto lambdas = parse_positive_list(cfg.get("grid", "lambda"), "lambda grid");
      const auto epss = parse_positive_list(cfg.get("grid", "epsilon"), "epsilon grid");
      if (lambdas.size() != epss.size())
        throw config_error("lambda and epsilon grids must have equal length");
      for (std::size_t i = 0; i < lambdas.size(); ++i) {
        rows.push_back(Row{"rho_as", fmt_real(lambdas[i]), fmt_real(epss[i]),
                           index_str(ev.bundle.rho_as(lambdas[i], epss[i])), "",
                           sanitize(ev.bundle.provenance)});
        if (ev.metric_rate)
          rows.push_back(Row{"rho_metric", fmt_real(lambdas[i]), fmt_real(epss[i]),
                             index_str(ev.metric_rate(lambdas[i], epss[i])), "",
                             sanitize(ev.bundle.provenance)});
      }
    }
  }
  if (ev.has_fast) {
    for (Real nr : parse_real_list(cfg.get("grid", "indices"), "indices grid")) {
      const Index n = static_cast<Index>(nr);
      rows.push_back(Row{"mean_bound", "", "", std::to_string(n),
                         fmt_real(ev.mean_bound(n)), sanitize(ev.fast_provenance)});
      if (cfg.has("grid", "epsilon"))
        for (Real eps : parse_positive_list(cfg.get("grid", "epsilon"), "epsilon grid"))
          rows.push_back(Row{"exceed_bound", "", fmt_real(eps), std::to_string(n),
                             fmt_real(ev.exceed_bound_clamped(n, eps)),
                             sanitize(ev.fast_provenance)});
    }
  }

  write_outputs(opt.out_dir, "rate", kRateSchema, header, rows, opt.format, cfg);
  log << "rate: wrote " << rows.size() << " rows to " << opt.out_dir << "\n";
  return 0;
}

int run_validate(const Config& cfg, const CommandOptions& opt, std::ostream& log) {
  MCConfig mc = build_mc(cfg, opt.seed_override);
  const TheoremEval ev = build_theorem(cfg, mc);
  ProcessModel model = build_model(cfg);

  std::vector<ValidationRow> rows;
  std::vector<std::string> kinds;

  if (ev.has_bundle) {
    if (ev.bundle.rho && cfg.has("grid", "epsilon")) {
      for (auto& r : validate_mean_rate(model, ev.f, ev.bundle,
                                        parse_positive_list(cfg.get("grid", "epsilon"), "epsilon"),
                                        mc)) {
        rows.push_back(r);
        kinds.push_back("mean");
      }
    }
    if (ev.bundle.rho_as && cfg.has("grid", "lambda")) {
      const auto lambdas = parse_positive_list(cfg.get("grid", "lambda"), "lambda grid");
      const auto epss = parse_positive_list(cfg.get("grid", "epsilon"), "epsilon grid");
      if (lambdas.size() != epss.size())
        throw config_error("lambda and epsilon grids must have equal length");
      std::vector<std::pair<Real, Real>> pairs;
      for (std::size_t i = 0; i < lambdas.size(); ++i)
        pairs.emplace_back(lambdas[i], epss[i]);
      for (auto& r : validate_as_rate(model, ev.bundle.rho_as, pairs, mc)) {
        rows.push_back(r);
        kinds.push_back("as");
      }
    }
  }
  if (ev.has_fast) {
    std::vector<Index> indices;
    for (Real nr : parse_real_list(cfg.get("grid", "indices"), "indices grid"))
      indices.push_back(static_cast<Index>(nr));
    for (auto& r : validate_fast_bound(model, ev.mean_bound, indices, mc)) {
      rows.push_back(r);
      kinds.push_back("mean_bound");
    }
    if (cfg.has("grid", "epsilon")) {
      for (Index n : indices) {
        for (Real eps : parse_positive_list(cfg.get("grid", "epsilon"), "epsilon")) {
          ValidationRow row;
          row.epsilon = eps;
          row.index = n;
          row.bound = ev.exceed_bound_clamped(n, eps);
          if (n > mc.horizon) {
            row.feasible = false;
            row.note = "index beyond horizon";
          } else {
            row.estimate = estimate_sup_exceedance(model, n, eps, mc);
            row.pass =
                row.estimate.mean <= row.bound + mc.ci_multiplier * row.estimate.std_err;
          }
          rows.push_back(row);
          kinds.push_back("exceed");
        }
      }
    }
  }

  const std::vector<std::string> header = {"kind",  "lambda", "epsilon", "index",
                                           "mean",  "std_err", "trials",  "bound",
                                           "status", "note"};
  std::vector<Row> out_rows;
  std::size_t passed = 0, failed = 0, infeasible = 0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out_rows.push_back(row_from_validation(kinds[i], rows[i]));
    if (!rows[i].feasible) ++infeasible;
    else if (rows[i].pass) ++passed;
    else ++failed;
  }
  write_outputs(opt.out_dir, "validate", kValidateSchema, header, out_rows, opt.format, cfg);
  log << "passed/failed/infeasible: " << passed << "/" << failed << "/" << infeasible << "\n";
  if (infeasible > 0 && failed == 0)
    log << "warning: " << infeasible << " row(s) infeasible at horizon "
        << mc.horizon << "\n";
  return failed == 0 ? 0 : 1;
}

int run_trajectory(const Config& cfg, const CommandOptions& opt, std::ostream& log) {
  MCConfig mc = build_mc(cfg, opt.seed_override);
  ProcessModel model = build_model(cfg);
  Index count = to_index(cfg.get_or("experiment", "trajectories", "1"), "trajectories");
  if (opt.trajectories) count = *opt.trajectories;
  require_domain(count >= 1, "trajectory: count must be >= 1");

  const std::vector<std::string> header = {"trial", "n", "F", "dist"};
  std::vector<Row> rows;
  for (Index trial = 0; trial < count; ++trial) {
    RandomSource rs(mc.master_seed, trial);
    StatePoint x = model.initial(rs);
    for (Index n = 0; n <= mc.horizon; ++n) {
      rows.push_back(Row{std::to_string(trial), std::to_string(n),
                         fmt_real(model.functional(x)),
                         fmt_real(model.dist_functional(x))});
      if (n < mc.horizon) model.step(x, n, rs);
    }
  }
  write_outputs(opt.out_dir, "trajectory", kTrajectorySchema, header, rows, opt.format, cfg);
  log << "trajectory: wrote " << rows.size() << " rows to " << opt.out_dir << "\n";
  return 0;
}

}  // namespace stochrate
