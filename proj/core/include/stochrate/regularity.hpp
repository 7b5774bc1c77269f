#pragma once

#include <functional>

#include "stochrate/common.hpp"
#include "stochrate/moduli.hpp"

namespace stochrate {

// pi(eps, l): pointwise lower bound with "X in [eps, l]  =>  V >= pi(eps, l)".
struct PointwiseLowerBound {
  std::function<Real(Real, Real)> fn;
  Real operator()(Real eps, Real l) const {
    require_domain(eps > 0.0 && l > 0.0, "PointwiseLowerBound: arguments must be positive");
    const Real v = fn(eps, l);
    require_domain(v > 0.0, "PointwiseLowerBound: value must be positive");
    return v;
  }
};

// mu(eps) in (0,1]: uniform integrability modulus,
// P(A) <= mu(eps)  =>  E[X 1_A] <= eps.
struct UIModulus {
  std::function<Real(Real)> fn;
  Real operator()(Real eps) const {
    require_domain(eps > 0.0, "UIModulus: eps must be positive");
    const Real v = fn(eps);
    require_domain(v > 0.0 && v <= 1.0, "UIModulus: value must lie in (0,1]");
    return v;
  }
};

// Convex, strictly increasing tau with tau(0)=0.  Contract: if V >= tau(X)
// a.s. then E[V] < tau(eps) implies E[X] < eps (Jensen).  The convexity and
// monotonicity of the callable are validated on seeded samples; violations
// raise std::invalid_argument.
RegularityModulus reg_from_convex(const std::function<Real(Real)>& tau,
                                  std::uint64_t check_samples = 256);

// tau(eps) = pi(eps/4, K/mu(eps/4)) * mu(eps/4) / 2, valid under uniform
// integrability with modulus mu and E[X] <= K.
RegularityModulus reg_from_ui(const PointwiseLowerBound& pi, Real K, const UIModulus& mu);

// tau(eps) = pi(eps/2, K) * eps / (2K), valid when X <= K a.s.
RegularityModulus reg_bounded(const PointwiseLowerBound& pi, Real K);

// Fixed points of a quasi-contraction: tau(eps) = (1-r) eps for F(x) = d(x, Tx).
RegularityModulus uniq_quasi_contraction(Real r);

// Sharp minima: F(x) = f(x) - min f >= tau(d(x, z)).  With
// quasiconvex_quarter set, the uniformly quasiconvex derivation applies and
// the modulus is tau/4.
RegularityModulus uniq_sharp_min(const std::function<Real(Real)>& tau,
                                 bool quasiconvex_quarter);

// Strongly quasiconvex with parameter mu: modulus (mu/8) eps^2.
RegularityModulus uniq_strongly_quasiconvex(Real mu);

// Frechet mean of weighted squared distances: tau(eps) = eps^2.
RegularityModulus uniq_frechet();

// Transfers a modulus for F(x) = dist(0, Ax) to F'(x) = |x - J_{g A} x|:
// eps -> min{tau(eps/2) * gamma_lower, eps/2}.
RegularityModulus uniq_prox_transfer(const RegularityModulus& tau, Real gamma_lower);

// Error-bound route: callers that know tau(f(x)-min f) >= d(x, z) for a
// concave strictly increasing tau supply the inverse explicitly; it is used
// verbatim as the modulus.  No numeric inversion is attempted.
RegularityModulus uniq_from_error_bound(const std::function<Real(Real)>& tau_inverse,
                                        const std::string& label = "error-bound-inverse");

}  // namespace stochrate
