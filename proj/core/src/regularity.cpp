#include "stochrate/regularity.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace stochrate {

RegularityModulus reg_from_convex(const std::function<Real(Real)>& tau,
                                  std::uint64_t check_samples) {
  if (std::fabs(tau(0.0)) > 1e-12)
    throw std::invalid_argument("reg_from_convex: tau(0) must be 0");

  // Sampled midpoint convexity and strict monotonicity on [0, 100].
  std::mt19937_64 rng(0x726567756cull);
  std::uniform_real_distribution<Real> ux(0.0, 100.0);
  for (std::uint64_t i = 0; i < check_samples; ++i) {
    Real x = ux(rng), y = ux(rng);
    if (x > y) std::swap(x, y);
    if (tau(0.5 * (x + y)) > 0.5 * (tau(x) + tau(y)) + 1e-12)
      throw std::invalid_argument("reg_from_convex: sampled convexity violation");
    if (x < y && tau(x) >= tau(y))
      throw std::invalid_argument("reg_from_convex: sampled monotonicity violation");
  }

  RegularityModulus out;
  out.label = "convex";
  out.fn = tau;
  return out;
}

RegularityModulus reg_from_ui(const PointwiseLowerBound& pi, Real K, const UIModulus& mu) {
  require_domain(K > 0.0, "reg_from_ui: K must be positive");
  RegularityModulus out;
  out.label = "ui";
  out.fn = [pi, K, mu](Real eps) {
    const Real m = mu(eps / 4.0);
    return pi(eps / 4.0, K / m) * m / 2.0;
  };
  return out;
}

RegularityModulus reg_bounded(const PointwiseLowerBound& pi, Real K) {
  require_domain(K > 0.0, "reg_bounded: K must be positive");
  RegularityModulus out;
  out.label = "bounded";
  out.fn = [pi, K](Real eps) { return pi(eps / 2.0, K) * eps / (2.0 * K); };
  return out;
}

RegularityModulus uniq_quasi_contraction(Real r) {
  require_domain(r >= 0.0 && r < 1.0, "uniq_quasi_contraction: r must lie in [0,1)");
  RegularityModulus out;
  out.label = "quasi-contraction:" + std::to_string(r);
  out.fn = [r](Real eps) { return (1.0 - r) * eps; };
  return out;
}

RegularityModulus uniq_sharp_min(const std::function<Real(Real)>& tau,
                                 bool quasiconvex_quarter) {
  if (std::fabs(tau(0.0)) > 1e-12)
    throw std::invalid_argument("uniq_sharp_min: tau(0) must be 0");
  RegularityModulus out;
  out.label = quasiconvex_quarter ? "sharp-min/4" : "sharp-min";
  if (quasiconvex_quarter) {
    out.fn = [tau](Real eps) { return 0.25 * tau(eps); };
  } else {
    out.fn = tau;
  }
  return out;
}

RegularityModulus uniq_strongly_quasiconvex(Real mu) {
  require_domain(mu > 0.0, "uniq_strongly_quasiconvex: mu must be positive");
  return uniq_sharp_min([mu](Real e) { return 0.5 * mu * e * e; }, true);
}

RegularityModulus uniq_frechet() {
  RegularityModulus out;
  out.label = "frechet";
  out.fn = [](Real eps) { return eps * eps; };
  return out;
}

RegularityModulus uniq_prox_transfer(const RegularityModulus& tau, Real gamma_lower) {
  require_domain(gamma_lower > 0.0, "uniq_prox_transfer: gamma_lower must be positive");
  RegularityModulus out;
  out.label = "prox-transfer(" + tau.label + ")";
  out.fn = [tau, gamma_lower](Real eps) {
    return std::min(tau(eps / 2.0) * gamma_lower, eps / 2.0);
  };
  return out;
}

RegularityModulus uniq_from_error_bound(const std::function<Real(Real)>& tau_inverse,
                                        const std::string& label) {
  RegularityModulus out;
  out.label = label;
  out.fn = tau_inverse;
  return out;
}

}  // namespace stochrate
