#pragma once

#include <functional>
#include <string>
#include <vector>

#include "stochrate/common.hpp"

namespace stochrate {

// An s.i.c.c. function: strictly increasing, concave, continuous on [0,inf)
// with f(0)=0, carrying two moduli,
//   psi   : [0,1] -> [0,1]  with f(x*a) >= f(x)*psi(a) and psi(a)>0 for a>0,
//   kappa : (0,inf) -> (0,inf) with x < kappa(eps)  =>  f(x) < eps.
// Moduli are plain callables; nothing symbolic is kept around.
struct SiccFunction {
  std::function<Real(Real)> eval_fn;
  std::function<Real(Real)> psi_fn;
  std::function<Real(Real)> kappa_fn;
  std::string label;

  Real eval(Real x) const {
    require_domain(x >= 0.0, "SiccFunction::eval: negative input");
    return eval_fn(x);
  }
  Real psi(Real a) const {
    require_domain(a >= 0.0 && a <= 1.0, "SiccFunction::psi: argument outside [0,1]");
    return psi_fn(a);
  }
  Real kappa(Real eps) const {
    require_domain(eps > 0.0, "SiccFunction::kappa: eps must be positive");
    return kappa_fn(eps);
  }
};

// rho: eps -> first index from which a mean bound holds.
struct RateFn {
  std::function<Index(Real)> fn;
  Index operator()(Real eps) const {
    require_domain(eps > 0.0, "RateFn: eps must be positive");
    return fn(eps);
  }
  explicit operator bool() const { return static_cast<bool>(fn); }
};

// rho': (lambda, eps) -> index for the almost-sure tail event.
struct RateASFn {
  std::function<Index(Real, Real)> fn;
  Index operator()(Real lambda, Real eps) const {
    require_domain(lambda > 0.0, "RateASFn: lambda must be positive");
    require_domain(eps > 0.0, "RateASFn: eps must be positive");
    return fn(lambda, eps);
  }
  explicit operator bool() const { return static_cast<bool>(fn); }
};

// phi: (eps, N) -> an index M >= N such that some n in [N; M] has mean < eps.
struct LiminfModulus {
  std::function<Index(Real, Index)> fn;
  Index operator()(Real eps, Index n) const {
    require_domain(eps > 0.0, "LiminfModulus: eps must be positive");
    const Index m = fn(eps, n);
    return m < n ? n : m;  // contract: output >= N
  }
  explicit operator bool() const { return static_cast<bool>(fn); }
};

// theta: (k, b) -> an index M >= k with sum_{i=k}^{M} u_i >= b.
struct DivergenceRate {
  std::function<Index(Index, Real)> fn;
  Index operator()(Index k, Real b) const {
    require_domain(b > 0.0, "DivergenceRate: b must be positive");
    const Index m = fn(k, b);
    return m < k ? k : m;
  }
  explicit operator bool() const { return static_cast<bool>(fn); }
};

// chi: eps -> index from which a series tail is below eps.
struct TailRate {
  std::function<Index(Real)> fn;
  Index operator()(Real eps) const {
    require_domain(eps > 0.0, "TailRate: eps must be positive");
    return fn(eps);
  }
  explicit operator bool() const { return static_cast<bool>(fn); }
};

// tau: eps -> delta realizing "E[V] < tau(eps)  =>  E[f(X)] < eps".
struct RegularityModulus {
  std::function<Real(Real)> fn;
  std::string label;
  Real operator()(Real eps) const {
    require_domain(eps > 0.0, "RegularityModulus: eps must be positive");
    const Real v = fn(eps);
    require_domain(v > 0.0, "RegularityModulus: modulus must be strictly positive");
    return v;
  }
  explicit operator bool() const { return static_cast<bool>(fn); }
};

// ---- catalog constructors ----

// x^q for q in (0,1]; moduli a^q and eps^(1/q).
SiccFunction sicc_power(Real q);

// log_c(1+x) for c > 1; moduli a and c^eps - 1.
SiccFunction sicc_log(Real c);

inline SiccFunction sicc_id() { return sicc_power(1.0); }

enum class SiccCombine { Sum, Compose, Min };

// Closure operations.  Sum uses alpha*f + beta*g with alpha, beta > 0.
SiccFunction sicc_combine(SiccCombine kind, const SiccFunction& f,
                          const SiccFunction& g, Real alpha = 1.0, Real beta = 1.0);

// ---- seeded property verification ----

struct PropertyCheck {
  std::string name;
  bool pass = true;
  Real worst_violation = 0.0;  // largest observed violation magnitude
  std::uint64_t samples = 0;
};

struct PropertyReport {
  std::vector<PropertyCheck> checks;
  bool all_pass() const;
  std::string summary() const;
};

// Checks the four SiccFunction invariants over seeded random samples drawn
// from [0, domain_bound] (x), [0,1] (a) and (0, 10] (eps).  Violations are
// measured against a 1e-12 additive slack.
PropertyReport verify_sicc(const SiccFunction& f, std::uint64_t sample_count,
                           Real domain_bound, std::uint64_t seed);

inline constexpr Real kSiccSlack = 1e-12;

}  // namespace stochrate
