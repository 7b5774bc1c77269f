#pragma once

#include <functional>
#include <string>

#include "stochrate/common.hpp"
#include "stochrate/moduli.hpp"

namespace stochrate {

// A mean rate rho paired with its almost-sure rate rho'.  Every theorem
// constructor below fills rho_as as rho composed with a theorem-specific
// reduction of (lambda, eps), and snapshots its parameters in provenance.
struct RateBundle {
  RateFn rho;
  RateASFn rho_as;
  std::string provenance;
};

// ---- general supermartingale rate ----

// Inputs for the abstract rate: K bounds prod(1+A_i), chi is the tail rate
// for sum E[C_i], f slows the process down, liminf_mod witnesses
// liminf E[f(X_n)] = 0.
struct GeneralSpec {
  Real K = 1.0;  // >= 1
  TailRate chi;
  SiccFunction f;
  LiminfModulus liminf_mod;
};

// rho(eps) = liminf_mod(eps', chi(kappa(eps'))) with eps' = eps*psi(1/K)/2;
// rho_as(lambda, eps) = rho(lambda * f(eps)).
RateBundle rate_general(const GeneralSpec& spec);

// phi(eps, N) := liminf_V(tau(eps), N): routes a liminf modulus for an
// auxiliary process V through a regularity modulus.
LiminfModulus compose_liminf(const LiminfModulus& liminf_V, const RegularityModulus& tau);

// Bound on sum beta_i for nonnegative x_{n+1} <= (1+alpha_n)x_n - beta_n + gamma_n:
// returns prod_bound * (init_bound + err_bound).
Real qihou_sum_bound(Real init_bound, Real prod_bound, Real err_bound);

// From sum u_n v_n < L and a divergence rate theta for sum u_n, every window
// [N; theta(N, L/eps)] contains an index with v_n < eps.
LiminfModulus liminf_from_sum(const DivergenceRate& theta, Real L);

// ---- quantitative Robbins-Siegmund ----

struct RSSpec {
  Real K = 1.0;  // bound on prod(1 + a_i)
  Real L = 1.0;  // bound on E[X_0]
  Real M = 1.0;  // bound on sum E[C_i]
  TailRate chi;           // tail rate for sum E[C_i]
  DivergenceRate theta;   // divergence rate for sum u_i
  RegularityModulus tau;  // E[V_n] < tau(eps) => E[f(X_n)] < eps
  SiccFunction f;
};

// rho(eps) = theta(chi(kappa(eps')), K(L+M)/tau(eps')), eps' = eps*psi(1/K)/2;
// rho_as(lambda, eps) = rho(lambda * f(eps)).
RateBundle rate_rs(const RSSpec& spec);

// ---- deterministic 1/(n+r) recurrence ----

struct RecurrenceBound {
  Real u = 0.0;
  std::function<Real(Index)> bound;  // n -> u/(n+r)
};

// For nonnegative sequences with x_{n+1} <= (1 - c/(n+r)) x_n + d/(n+r)^2,
// c > 1, r >= 1: x_n <= u/(n+r) with u = max{d/(c-1), r*x0}.  The inductive
// argument needs the damping coefficient 1 - c/(n+r) to stay nonnegative
// wherever x_n > 0 matters; see dominance_holds below for the exact region.
RecurrenceBound recurrence_bound(Real c, Real d, Index r, Real x0);

// True iff the u/(n+r) envelope provably dominates the clamped worst-case
// iteration max(0, (1-c/(n+r))x_n + d/(n+r)^2) for every start x0 >= 0:
// requires (c-1)(m+1) <= m^2 for each integer m in [r, c).
bool recurrence_dominance_holds(Real c, Index r);

// ---- fast Robbins-Siegmund rates ----

struct FastSpec {
  Real c = 1.5;   // > 1
  Real d = 0.0;   // >= 0
  Index r = 1;    // >= 1
  Real t = 1.0;   // linear regularity constant (premise only)
  Real K = 1.0;   // >= 1, bound on prod(1 + a_i)
  Real L = 1.0;   // >= E[X_0]
};

struct FastRate {
  Real u = 0.0;
  std::string provenance;
  std::function<Real(Index)> mean_bound;          // n -> u/(n+r)
  std::function<Real(Index, Real)> exceed_bound;  // raw K(u+2d)/(eps(n+r))
  std::function<Real(Index, Real)> exceed_bound_clamped;  // min(1, raw)
};

// u = max{d/(c-1), r*L}; mean_bound(n) = u/(n+r);
// exceed_bound(n, eps) = K(u+2d)/(eps(n+r)).
FastRate fast_rate_rs(const FastSpec& spec);

// ---- quantitative Dvoretzky ----

struct DvoretzkySpec {
  Real A = 1.0, B = 1.0, C = 1.0, M = 1.0;  // bounds on a_n, sum b, sum c^2, sum E|y|^2
  TailRate varphi_a;  // a_n < eps from varphi_a(eps)
  TailRate beta_b;    // tail of sum b_n
  TailRate gamma_c;   // tail of sum c_n^2
  TailRate mu_y;      // tail of sum E|y_n|^2
  DivergenceRate theta;  // divergence rate for sum c_n
  std::function<Real(Index)> L_of;  // n -> bound on E[|x_n - z|^2]
};

// Intermediate quantities of the Dvoretzky rate, exposed so they can be
// checked independently when the final index is astronomically large.
struct DvoretzkyParts {
  Real delta = 0.0;
  Real K_delta = 0.0;
  Real M_delta = 0.0;
  Real chi_arg = 0.0;          // lambda^2 eps / (4 K_delta)
  Index chi_delta = 0;         // chi_{delta}(chi_arg)
  Index varphi_index = 0;      // varphi_a(eps/2)
  Index theta_start = 0;       // max of the two above
  Real theta_budget = 0.0;     // 2 K sqrt(K) (L_{varphi} + M_delta) / (lambda eps)
  Index index = 0;             // theta(theta_start, theta_budget)
};

DvoretzkyParts rate_dvoretzky_parts(const DvoretzkySpec& spec, Real lambda, Real eps);
RateASFn rate_dvoretzky(const DvoretzkySpec& spec);

// K_delta = (1+B^2) e^{delta B}
Real dvoretzky_K(Real B, Real delta);
// M_delta = (1+delta B) C + delta (1+delta B) B + M
Real dvoretzky_M(Real B, Real C, Real M, Real delta);

// ---- quasi-Fejer rate ----

struct FejerRate {
  RateFn rho;           // mean rate for E[phi(x_n, z)]
  RateASFn rho_as;      // a.s. rate for phi(x_n, z)
  RateASFn rho_metric;  // a.s. rate for d(x_n, z) via the consistency modulus
  std::string provenance;
};

// rho(eps) = liminf_mod(tau(eps/2K), chi(eps/2K)); rho_as(l, e) = rho(l*e);
// rho_metric(l, e) = rho_as(l, consistency(e)).
FejerRate rate_fejer(const RegularityModulus& tau, Real K, const TailRate& chi,
                     const LiminfModulus& liminf_mod, const RegularityModulus& consistency);

// ---- Robbins-Monro rates ----

struct RMSpec {
  Real c = 1.0;  // second-moment growth constant
  Real d = 1.0;  // second-moment noise constant (0 = noise free)
  Real L = 1.0;  // bound on |x0 - z|^2
  Real M = 1.0;  // bound on sum a_n^2
  DivergenceRate theta;   // divergence rate for sum a_n
  TailRate chi;           // tail rate for sum a_n^2
  RegularityModulus tau;
  SiccFunction f;
};

// K1 = psi(e^{-cM})/2, K2 = e^{cM}(L+dM);
// rho(eps) = theta(chi(kappa(K1 eps)/d), K2/tau(K1 eps));
// rho_as(lambda, eps) = rho(lambda * f(eps^2)).
RateBundle rate_rm(const RMSpec& spec);

// Simplified form for f = sqrt: K1 = e^{-cM/2}/2,
// rho(eps) = theta(chi((K1 eps)^2/d), K2/tau(K1 eps)); rho_as = rho(lambda eps).
RateBundle rate_rm_sqrt(const RMSpec& spec);

// ---- strongly monotone O(1/sqrt(n)) bounds ----

struct StrongMonotoneRate {
  std::function<Real(Index)> step;  // a_n = 1/(beta(n+r))
  Real u = 0.0;
  std::string provenance;
  std::function<Real(Index)> mean_bound;
  std::function<Real(Index, Real)> exceed_bound;
  std::function<Real(Index, Real)> exceed_bound_clamped;
};

// Steps a_n = 1/(beta(n+r)) with r >= 2c/beta^2.  u takes the max of the
// two consistent readings 2d/beta and 2d/beta^2 together with r*L, and the
// exceedance bound instantiates the fast RS bound with c=3/2, d -> d/beta^2.
StrongMonotoneRate fast_rate_strongly_monotone(Real beta, Real c, Real d, Index r,
                                               Real L, Real K);

}  // namespace stochrate
