#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "stochrate/common.hpp"
#include "stochrate/moduli.hpp"

namespace stochrate {

// ---- state space ----

// A point in either a Euclidean space (leg < 0, coords used) or on a star
// R-tree (leg >= 0 with radial coordinate t >= 0; t = 0 is the origin on
// every leg).
struct StatePoint {
  std::vector<Real> coords;
  int leg = -1;
  Real t = 0.0;

  bool is_star() const { return leg >= 0; }
};

StatePoint make_euclidean(std::vector<Real> coords);
StatePoint make_star(int leg, Real t);

// Star R-tree with a fixed number of legs glued at the origin.
struct StarSpace {
  int legs = 3;

  void check(const StatePoint& p) const;
  Real distance(const StatePoint& x, const StatePoint& y) const;
  // Arc-length parametrized geodesic from x to y, s in [0,1]; passes
  // through the origin when the legs differ.
  StatePoint geodesic(const StatePoint& x, const StatePoint& y, Real s) const;
};

Real euclidean_distance(const StatePoint& x, const StatePoint& y);

// ---- seeded randomness ----

// One stream per (master seed, trial index).  The stream seed is derived by
// a splitmix64 avalanche of master_seed xor mix(trial + odd constant); the
// exact recipe is fixed for reproducibility and documented in the README.
// Normal draws use the Marsaglia polar method on the stream's own uniforms,
// so results do not depend on the standard library's distributions.
class RandomSource {
 public:
  RandomSource(std::uint64_t master_seed, std::uint64_t trial_index);

  Real uniform();             // [0, 1)
  Real normal();              // standard normal
  bool bernoulli(Real p);
  std::uint64_t pick(std::uint64_t n);  // uniform on {0, ..., n-1}

  static std::uint64_t derive_stream_seed(std::uint64_t master_seed,
                                          std::uint64_t trial_index);

 private:
  std::uint64_t s_;  // splitmix64 state
  bool have_spare_ = false;
  Real spare_ = 0.0;
};

// ---- step-size sequences with certified rates ----

// A step sequence together with a divergence rate for sum a_n and a tail
// rate for sum a_n^2 (when finite).  theta and chi are conservative but
// proven for each family.
struct StepSeq {
  std::function<Real(Index)> a;
  DivergenceRate theta_sum;  // for sum a_n
  TailRate chi_sq;           // for sum a_n^2 (unset when divergent)
  Real sum_sq = 0.0;         // upper bound on sum a_n^2 (0 if divergent)
  std::string label;
};

StepSeq steps_const(Real v);
StepSeq steps_harmonic(Real beta, Index r);  // a_n = 1/(beta(n+r))
StepSeq steps_power(Real p);                 // a_n = (n+1)^-p, p in (1/2, 1]

// First k with C * q^k < eps (conservative by one); 0 when C < eps.
Index geometric_crossing_index(Real C, Real q, Real eps);

// ---- process models ----

// Certified quantitative data attached to a model; scalar constants by name
// plus the callable moduli the rate constructors consume.  Only the fields
// a model can actually certify are set.
struct CertifiedConstants {
  std::map<std::string, Real> scalar;
  DivergenceRate theta;        // divergence rate (model-specific series)
  TailRate chi;                // tail rate for the error series
  LiminfModulus liminf;        // liminf modulus for E[F(x_n)]
  std::function<Real(Index)> xi;     // per-step quasi-Fejer error bound
  std::function<Real(Index)> L_of;   // n -> bound on E[|x_n - z|^2]
  TailRate varphi_a, beta_b, gamma_c, mu_y;  // Dvoretzky ingredient rates

  Real at(const std::string& key) const;
  bool has(const std::string& key) const { return scalar.count(key) != 0; }
};

// A seeded stochastic iteration with known target z.  Stepping is pure
// given the RandomSource; models are immutable once built.
struct ProcessModel {
  std::string name;
  StatePoint init;
  StatePoint target;
  // Draws x_0 (identity for deterministic starts).
  std::function<StatePoint(RandomSource&)> init_draw;
  // In-place transition x_n -> x_{n+1}.
  std::function<void(StatePoint&, Index, RandomSource&)> step;
  std::function<Real(const StatePoint&)> functional;                   // F
  std::function<Real(const StatePoint&, const StatePoint&)> dist_map;  // phi
  bool nonneg_supermartingale = false;  // dist-functional certified supermartingale
  CertifiedConstants certified;

  StatePoint initial(RandomSource& rs) const {
    return init_draw ? init_draw(rs) : init;
  }
  Real dist_functional(const StatePoint& x) const { return dist_map(x, target); }
};

// Product martingale X_{n+1} = X_n * Y_{n+1}, Y iid on {0, 2} with equal
// probability; E[X_n] = 1 for all n while E[sqrt(X_n)] = (sqrt(2)/2)^{n+1}.
ProcessModel counterexample_model();

enum class RMField { LinearStronglyMonotone, Cubic1d, AbsSubgradient1d };

struct RMModelParams {
  RMField field = RMField::LinearStronglyMonotone;
  Real beta = 1.0;   // linear field slope
  int dim = 1;
  Real noise_sd = 1.0;
  StepSeq steps;
  std::vector<Real> x0;
};

// x_{n+1} = x_n - a_n (M(x_n) + g_n) with Gaussian noise.  dist_map is the
// squared norm; F(x) = <x - z, M(x)>.
ProcessModel rm_model(const RMModelParams& params);

struct KMModelParams {
  Real contraction_r = 0.5;
  std::function<Real(Index)> lambda;     // in [0,1]
  std::function<Real(Index)> noise_sd;   // per-step radial noise sd
  Real noise_decay = 0.5;                // geometric decay factor of noise_sd
  Real noise_sd0 = 0.0;                  // noise_sd(n) <= noise_sd0 * decay^n
  bool star = false;
  int dim_or_legs = 1;
  StatePoint x0;
  Real lambda_lo = 0.5, lambda_hi = 0.5;  // range of lambda_n (for certification)
};

// Noisy Krasnoselskii-Mann iteration toward the fixed point of the radial
// contraction T (scale by contraction_r toward the origin).  The noisy
// evaluation y_n perturbs the radial coordinate of Tx_n by a Gaussian
// clamped at three standard deviations, so d(y_n, Tx_n) <= 3 sd(n) a.s.
ProcessModel km_model(const KMModelParams& params);

struct ProxModelParams {
  std::function<Real(Index)> gamma;  // resolvent parameters, inf > 0
  Real gamma_lower = 1.0;
  std::function<Real(Index)> noise_sd;
  Real noise_sd0 = 0.0;   // noise_sd(n) <= noise_sd0 * noise_decay^n
  Real noise_decay = 0.5;
  int dim = 1;
  std::vector<Real> z;
  std::vector<Real> x0;
};

// Proximal point iteration for A = subdifferential of |.-z|^2/2, whose
// resolvent is (x + gamma z)/(1 + gamma), with additive Gaussian noise.
ProcessModel prox_model(const ProxModelParams& params);

struct SplittingAnchor {
  StatePoint point;
  Real weight = 0.0;
};

struct SplittingModelParams {
  std::vector<SplittingAnchor> anchors;  // weights must sum to 1
  std::function<Real(Index)> lambda;
  TailRate lambda_sq_tail;   // tail rate for sum lambda_k^2
  Real lambda_sq_sum = 0.0;  // bound on sum lambda_k^2
  DivergenceRate lambda_div; // divergence rate for sum lambda_k
  bool star = false;
  int dim_or_legs = 1;
  StatePoint x0;
};

// Random-order proximal splitting for f = sum w_n d^2(., a_n): at step k an
// anchor is drawn uniformly and the iterate moves toward it by the exact
// proximal parameter 2 lambda w / (1 + 2 lambda w).  The target is the
// weighted Frechet mean (closed form on star trees and Euclidean spaces).
ProcessModel splitting_model(const SplittingModelParams& params);

// Frechet mean of weighted anchors, exact (no iteration).
StatePoint frechet_mean_star(const StarSpace& space, const std::vector<SplittingAnchor>& anchors);
StatePoint frechet_mean_euclidean(const std::vector<SplittingAnchor>& anchors);

struct DvoretzkyModelParams {
  std::function<Real(Index)> a_seq, b_seq, c_seq, noise_sd;
  // certified bounds and rates for the four series
  Real A = 1.0, B = 1.0, C = 1.0, M = 1.0;
  TailRate varphi_a, beta_b, gamma_c, mu_y;
  DivergenceRate theta_c;
  int dim = 1;
  std::vector<Real> z;
  std::vector<Real> x0;
};

// Soft-shrinkage transfer T_{n+1}(x) = z + (x-z) max{0, 1 - c_n/|x-z|} plus
// mean-zero Gaussian noise; satisfies the Dvoretzky transfer bound for the
// declared sequences.
ProcessModel dvoretzky_model(const DvoretzkyModelParams& params);

// ---- shared simulation helpers ----

// Runs `steps` transitions from the drawn initial state.
StatePoint simulate_to(const ProcessModel& model, Index n, RandomSource& rs);

// Empirically certifies a bound on sup_n E[d_map(x_n, z)] over a horizon
// (the quantitative data the KM/splitting analyses assume but do not
// construct).  Returns max over sampled indices of the estimate plus
// slack * std_err.
Real estimate_k_bound(const ProcessModel& model, Index horizon, std::uint64_t trials,
                      std::uint64_t master_seed, Real slack = 3.0);

// Empirically certified liminf modulus for E[F(x_n)]: scans a calibration
// run for first passage of the estimate (plus slack * SE) below eps.
// Clearly labeled as empirical in provenance; used where the closed-form
// modulus is astronomically conservative.
LiminfModulus empirical_liminf_modulus(const ProcessModel& model, Index horizon,
                                       std::uint64_t trials, std::uint64_t master_seed,
                                       Real slack = 3.0);

}  // namespace stochrate
