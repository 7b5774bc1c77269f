#include "stochrate/rates.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace stochrate {

namespace {

std::string fmt(Real v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

}  // namespace

RateBundle rate_general(const GeneralSpec& spec) {
  require_domain(spec.K >= 1.0, "rate_general: K must be >= 1");
  const Real psiK = spec.f.psi(std::min(1.0, 1.0 / spec.K));
  const auto chi = spec.chi;
  const auto liminf = spec.liminf_mod;
  const auto f = spec.f;

  RateBundle out;
  out.provenance = "general(K=" + fmt(spec.K) + ",f=" + f.label + ")";
  out.rho.fn = [psiK, chi, liminf, f](Real eps) {
    const Real eps2 = eps * psiK / 2.0;
    return liminf(eps2, chi(f.kappa(eps2)));
  };
  RateFn rho = out.rho;
  out.rho_as.fn = [rho, f](Real lambda, Real eps) { return rho(lambda * f.eval(eps)); };
  return out;
}

LiminfModulus compose_liminf(const LiminfModulus& liminf_V, const RegularityModulus& tau) {
  LiminfModulus out;
  out.fn = [liminf_V, tau](Real eps, Index n) { return liminf_V(tau(eps), n); };
  return out;
}

Real qihou_sum_bound(Real init_bound, Real prod_bound, Real err_bound) {
  require_domain(init_bound > 0.0, "qihou_sum_bound: init bound must be positive");
  require_domain(prod_bound > 0.0, "qihou_sum_bound: product bound must be positive");
  require_domain(err_bound >= 0.0, "qihou_sum_bound: error bound must be nonnegative");
  return prod_bound * (init_bound + err_bound);
}

LiminfModulus liminf_from_sum(const DivergenceRate& theta, Real L) {
  require_domain(L > 0.0, "liminf_from_sum: L must be positive");
  LiminfModulus out;
  out.fn = [theta, L](Real eps, Index n) {
    require_domain(eps > 0.0, "liminf_from_sum: eps must be positive");
    return theta(n, L / eps);
  };
  return out;
}

RateBundle rate_rs(const RSSpec& spec) {
  require_domain(spec.K > 0.0 && spec.L > 0.0 && spec.M >= 0.0,
                 "rate_rs: K, L must be positive and M nonnegative");
  const Real psiK = spec.f.psi(std::min(1.0, 1.0 / spec.K));
  const Real budget = spec.K * (spec.L + spec.M);
  const auto chi = spec.chi;
  const auto theta = spec.theta;
  const auto tau = spec.tau;
  const auto f = spec.f;

  RateBundle out;
  out.provenance = "rs(K=" + fmt(spec.K) + ",L=" + fmt(spec.L) + ",M=" + fmt(spec.M) +
                   ",f=" + f.label + ",tau=" + tau.label + ")";
  out.rho.fn = [psiK, budget, chi, theta, tau, f](Real eps) {
    const Real eps2 = eps * psiK / 2.0;
    return theta(chi(f.kappa(eps2)), budget / tau(eps2));
  };
  RateFn rho = out.rho;
  out.rho_as.fn = [rho, f](Real lambda, Real eps) { return rho(lambda * f.eval(eps)); };
  return out;
}

RecurrenceBound recurrence_bound(Real c, Real d, Index r, Real x0) {
  require_domain(c > 1.0, "recurrence_bound: c must exceed 1");
  require_domain(d >= 0.0, "recurrence_bound: d must be nonnegative");
  require_domain(r >= 1, "recurrence_bound: r must be >= 1");
  require_domain(x0 >= 0.0, "recurrence_bound: x0 must be nonnegative");
  RecurrenceBound out;
  out.u = std::max(d / (c - 1.0), static_cast<Real>(r) * x0);
  const Real u = out.u;
  out.bound = [u, r](Index n) { return u / static_cast<Real>(n + r); };
  return out;
}

bool recurrence_dominance_holds(Real c, Index r) {
  for (Real m = static_cast<Real>(r); m < c; m += 1.0) {
    if ((c - 1.0) * (m + 1.0) > m * m) return false;
  }
  return true;
}

FastRate fast_rate_rs(const FastSpec& spec) {
  require_domain(spec.c > 1.0, "fast_rate_rs: c must exceed 1");
  require_domain(spec.d >= 0.0, "fast_rate_rs: d must be nonnegative");
  require_domain(spec.r >= 1, "fast_rate_rs: r must be >= 1");
  require_domain(spec.K >= 1.0, "fast_rate_rs: K must be >= 1");
  require_domain(spec.L >= 0.0, "fast_rate_rs: L must be nonnegative");

  FastRate out;
  out.provenance = "rs-fast(c=" + fmt(spec.c) + ",d=" + fmt(spec.d) + ",r=" +
                   std::to_string(spec.r) + ",t=" + fmt(spec.t) + ",K=" + fmt(spec.K) +
                   ",L=" + fmt(spec.L) + ")";
  out.u = std::max(spec.d / (spec.c - 1.0), static_cast<Real>(spec.r) * spec.L);
  const Real u = out.u;
  const Real d = spec.d;
  const Real K = spec.K;
  const Index r = spec.r;
  out.mean_bound = [u, r](Index n) { return u / static_cast<Real>(n + r); };
  out.exceed_bound = [u, d, K, r](Index n, Real eps) {
    require_domain(eps > 0.0, "exceed_bound: eps must be positive");
    return K * (u + 2.0 * d) / (eps * static_cast<Real>(n + r));
  };
  auto raw = out.exceed_bound;
  out.exceed_bound_clamped = [raw](Index n, Real eps) {
    return std::min(1.0, raw(n, eps));
  };
  return out;
}

Real dvoretzky_K(Real B, Real delta) { return (1.0 + B * B) * std::exp(delta * B); }

Real dvoretzky_M(Real B, Real C, Real M, Real delta) {
  return (1.0 + delta * B) * C + delta * (1.0 + delta * B) * B + M;
}

DvoretzkyParts rate_dvoretzky_parts(const DvoretzkySpec& spec, Real lambda, Real eps) {
  require_domain(lambda > 0.0, "rate_dvoretzky: lambda must be positive");
  require_domain(eps > 0.0, "rate_dvoretzky: eps must be positive");
  require_domain(spec.A > 0.0 && spec.B >= 0.0 && spec.C > 0.0 && spec.M > 0.0,
                 "rate_dvoretzky: bounds must be positive (B may be 0 when b_n == 0)");

  DvoretzkyParts p;
  p.delta = eps / 2.0;
  const Real B = spec.B;
  p.K_delta = dvoretzky_K(B, p.delta);
  p.M_delta = dvoretzky_M(B, spec.C, spec.M, p.delta);
  p.chi_arg = lambda * lambda * eps / (4.0 * p.K_delta);

  // chi_delta(e) = max{mu(e/3), gamma(e/(3(1+dB))), beta(e/(3d(1+dB)))};
  // with B == 0 the b-series is identically zero and its component drops.
  Index chi_d = std::max(spec.mu_y(p.chi_arg / 3.0),
                         spec.gamma_c(p.chi_arg / (3.0 * (1.0 + p.delta * B))));
  if (B > 0.0) {
    chi_d = std::max(chi_d,
                     spec.beta_b(p.chi_arg / (3.0 * p.delta * (1.0 + p.delta * B))));
  }
  p.chi_delta = chi_d;
  p.varphi_index = spec.varphi_a(p.delta);
  p.theta_start = std::max(p.chi_delta, p.varphi_index);
  p.theta_budget = 2.0 * p.K_delta * std::sqrt(p.K_delta) *
                   (spec.L_of(p.varphi_index) + p.M_delta) / (lambda * eps);
  p.index = spec.theta(p.theta_start, p.theta_budget);
  return p;
}

RateASFn rate_dvoretzky(const DvoretzkySpec& spec) {
  RateASFn out;
  out.fn = [spec](Real lambda, Real eps) {
    return rate_dvoretzky_parts(spec, lambda, eps).index;
  };
  return out;
}

FejerRate rate_fejer(const RegularityModulus& tau, Real K, const TailRate& chi,
                     const LiminfModulus& liminf_mod, const RegularityModulus& consistency) {
  require_domain(K > 0.0, "rate_fejer: K must be positive");

  FejerRate out;
  out.provenance = "fejer(K=" + fmt(K) + ",tau=" + tau.label + ")";
  out.rho.fn = [tau, K, chi, liminf_mod](Real eps) {
    const Real e = eps / (2.0 * K);
    return liminf_mod(tau(e), chi(e));
  };
  RateFn rho = out.rho;
  out.rho_as.fn = [rho](Real lambda, Real eps) { return rho(lambda * eps); };
  RateASFn rho_as = out.rho_as;
  out.rho_metric.fn = [rho_as, consistency](Real lambda, Real eps) {
    return rho_as(lambda, consistency(eps));
  };
  return out;
}

RateBundle rate_rm(const RMSpec& spec) {
  require_domain(spec.c > 0.0 && spec.L > 0.0 && spec.M > 0.0 && spec.d >= 0.0,
                 "rate_rm: constants must be positive (d may be 0)");
  const Real K1 = 0.5 * spec.f.psi(std::exp(-spec.c * spec.M));
  const Real K2 = std::exp(spec.c * spec.M) * (spec.L + spec.d * spec.M);
  const auto theta = spec.theta;
  const auto chi = spec.chi;
  const auto tau = spec.tau;
  const auto f = spec.f;
  const Real d = spec.d;

  RateBundle out;
  out.provenance = "rm(c=" + fmt(spec.c) + ",d=" + fmt(spec.d) + ",L=" + fmt(spec.L) +
                   ",M=" + fmt(spec.M) + ",f=" + f.label + ",tau=" + tau.label + ")";
  out.rho.fn = [K1, K2, theta, chi, tau, f, d](Real eps) {
    // d == 0 means a noise-free error series; the tail index collapses to 0
    const Index start = d == 0.0 ? Index{0} : chi(f.kappa(K1 * eps) / d);
    return theta(start, K2 / tau(K1 * eps));
  };
  RateFn rho = out.rho;
  out.rho_as.fn = [rho, f](Real lambda, Real eps) {
    return rho(lambda * f.eval(eps * eps));
  };
  return out;
}

RateBundle rate_rm_sqrt(const RMSpec& spec) {
  require_domain(spec.c > 0.0 && spec.L > 0.0 && spec.M > 0.0 && spec.d >= 0.0,
                 "rate_rm_sqrt: constants must be positive (d may be 0)");
  const Real K1 = 0.5 * std::exp(-spec.c * spec.M / 2.0);
  const Real K2 = std::exp(spec.c * spec.M) * (spec.L + spec.d * spec.M);
  const auto theta = spec.theta;
  const auto chi = spec.chi;
  const auto tau = spec.tau;
  const Real d = spec.d;

  RateBundle out;
  out.provenance = "rm-sqrt(c=" + fmt(spec.c) + ",d=" + fmt(spec.d) + ",L=" + fmt(spec.L) +
                   ",M=" + fmt(spec.M) + ",tau=" + tau.label + ")";
  out.rho.fn = [K1, K2, theta, chi, tau, d](Real eps) {
    const Index start = d == 0.0 ? Index{0} : chi((K1 * eps) * (K1 * eps) / d);
    return theta(start, K2 / tau(K1 * eps));
  };
  RateFn rho = out.rho;
  out.rho_as.fn = [rho](Real lambda, Real eps) { return rho(lambda * eps); };
  return out;
}

StrongMonotoneRate fast_rate_strongly_monotone(Real beta, Real c, Real d, Index r,
                                               Real L, Real K) {
  require_domain(beta > 0.0, "fast_rate_strongly_monotone: beta must be positive");
  require_domain(c > 0.0 && d >= 0.0 && L >= 0.0 && K >= 1.0,
                 "fast_rate_strongly_monotone: bad constants");
  if (static_cast<Real>(r) < 2.0 * c / (beta * beta))
    throw std::invalid_argument("fast_rate_strongly_monotone: need r >= 2c/beta^2");

  StrongMonotoneRate out;
  out.provenance = "strong-monotone(beta=" + fmt(beta) + ",c=" + fmt(c) + ",d=" +
                   fmt(d) + ",r=" + std::to_string(r) + ",L=" + fmt(L) + ",K=" +
                   fmt(K) + ")";
  out.step = [beta, r](Index n) { return 1.0 / (beta * static_cast<Real>(n + r)); };
  out.u = std::max({2.0 * d / beta, 2.0 * d / (beta * beta), static_cast<Real>(r) * L});
  const Real u = out.u;
  const Real d_eff = d / (beta * beta);  // error constant after instantiation
  out.mean_bound = [u, r](Index n) { return u / static_cast<Real>(n + r); };
  out.exceed_bound = [u, d_eff, K, r](Index n, Real eps) {
    require_domain(eps > 0.0, "exceed_bound: eps must be positive");
    return K * (u + 2.0 * d_eff) / (eps * static_cast<Real>(n + r));
  };
  auto raw = out.exceed_bound;
  out.exceed_bound_clamped = [raw](Index n, Real eps) {
    return std::min(1.0, raw(n, eps));
  };
  return out;
}

}  // namespace stochrate
