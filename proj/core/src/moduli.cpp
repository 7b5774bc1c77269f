#include "stochrate/moduli.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

namespace stochrate {

SiccFunction sicc_power(Real q) {
  require_domain(q > 0.0 && q <= 1.0, "sicc_power: q must lie in (0,1]");
  SiccFunction f;
  f.label = "power:" + std::to_string(q);
  if (q == 1.0) {
    f.eval_fn = [](Real x) { return x; };
    f.psi_fn = [](Real a) { return a; };
    f.kappa_fn = [](Real e) { return e; };
  } else {
    f.eval_fn = [q](Real x) { return std::pow(x, q); };
    f.psi_fn = [q](Real a) { return std::pow(a, q); };
    f.kappa_fn = [q](Real e) { return std::pow(e, 1.0 / q); };
  }
  return f;
}

SiccFunction sicc_log(Real c) {
  require_domain(c > 1.0, "sicc_log: base must exceed 1");
  const Real lc = std::log(c);
  SiccFunction f;
  f.label = "log:" + std::to_string(c);
  f.eval_fn = [lc](Real x) { return std::log1p(x) / lc; };
  f.psi_fn = [](Real a) { return a; };
  f.kappa_fn = [lc](Real e) { return std::expm1(e * lc); };
  return f;
}

SiccFunction sicc_combine(SiccCombine kind, const SiccFunction& f,
                          const SiccFunction& g, Real alpha, Real beta) {
  SiccFunction out;
  switch (kind) {
    case SiccCombine::Sum: {
      require_domain(alpha > 0.0 && beta > 0.0, "sicc_combine: sum needs alpha, beta > 0");
      out.label = "sum(" + std::to_string(alpha) + "*" + f.label + "," +
                  std::to_string(beta) + "*" + g.label + ")";
      out.eval_fn = [f, g, alpha, beta](Real x) {
        return alpha * f.eval(x) + beta * g.eval(x);
      };
      out.psi_fn = [f, g](Real a) { return std::min(f.psi(a), g.psi(a)); };
      out.kappa_fn = [f, g, alpha, beta](Real e) {
        return std::min(f.kappa(e / (2.0 * alpha)), g.kappa(e / (2.0 * beta)));
      };
      break;
    }
    case SiccCombine::Compose: {
      out.label = "compose(" + f.label + "," + g.label + ")";
      out.eval_fn = [f, g](Real x) { return f.eval(g.eval(x)); };
      out.psi_fn = [f, g](Real a) { return f.psi(g.psi(a)); };
      // moduli of f o g: kappa_g o kappa_f
      out.kappa_fn = [f, g](Real e) { return g.kappa(f.kappa(e)); };
      break;
    }
    case SiccCombine::Min: {
      out.label = "min(" + f.label + "," + g.label + ")";
      out.eval_fn = [f, g](Real x) { return std::min(f.eval(x), g.eval(x)); };
      out.psi_fn = [f, g](Real a) { return std::min(f.psi(a), g.psi(a)); };
      out.kappa_fn = [f, g](Real e) { return std::max(f.kappa(e), g.kappa(e)); };
      break;
    }
  }
  return out;
}

bool PropertyReport::all_pass() const {
  for (const auto& c : checks)
    if (!c.pass) return false;
  return true;
}

std::string PropertyReport::summary() const {
  std::ostringstream os;
  for (const auto& c : checks) {
    os << (c.pass ? "pass " : "FAIL ") << c.name
       << " (worst violation " << c.worst_violation << ", " << c.samples
       << " samples)\n";
  }
  return os.str();
}

PropertyReport verify_sicc(const SiccFunction& f, std::uint64_t sample_count,
                           Real domain_bound, std::uint64_t seed) {
  require_domain(sample_count >= 1, "verify_sicc: need at least one sample");
  require_domain(domain_bound > 0.0, "verify_sicc: domain bound must be positive");

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<Real> ux(0.0, domain_bound);
  std::uniform_real_distribution<Real> ua(0.0, 1.0);
  std::uniform_real_distribution<Real> ue(0.0, 10.0);

  PropertyCheck zero{"eval(0)=0"};
  PropertyCheck incr{"strictly increasing"};
  PropertyCheck conc{"midpoint concavity"};
  PropertyCheck supm{"supermultiplicativity"};
  PropertyCheck psip{"psi positive on (0,1]"};
  PropertyCheck cont{"continuity at zero"};

  auto note = [](PropertyCheck& c, Real violation) {
    ++c.samples;
    if (violation > c.worst_violation) c.worst_violation = violation;
    if (violation > kSiccSlack) c.pass = false;
  };

  note(zero, std::fabs(f.eval(0.0)));

  for (std::uint64_t i = 0; i < sample_count; ++i) {
    Real x = ux(rng), y = ux(rng);
    if (x > y) std::swap(x, y);
    if (x < y) note(incr, f.eval(x) - f.eval(y));

    note(conc, 0.5 * (f.eval(x) + f.eval(y)) - f.eval(0.5 * (x + y)));

    const Real a = ua(rng);
    note(supm, f.eval(x) * f.psi(a) - f.eval(x * a));
    if (a > 0.0) note(psip, f.psi(a) > 0.0 ? 0.0 : 1.0);

    Real eps = ue(rng);
    if (eps <= 0.0) eps = 1e-6;
    const Real below = ua(rng);             // x' < kappa(eps)
    const Real xp = below * f.kappa(eps);
    if (xp < f.kappa(eps)) note(cont, f.eval(xp) - eps);
  }

  PropertyReport report;
  report.checks = {zero, incr, conc, supm, psip, cont};
  return report;
}

}  // namespace stochrate
