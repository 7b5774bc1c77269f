#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "stochrate/common.hpp"
#include "stochrate/moduli.hpp"
#include "stochrate/processes.hpp"
#include "stochrate/rates.hpp"

namespace stochrate {

struct MCConfig {
  std::uint64_t trials = 100000;  // >= 2
  Index horizon = 1000;           // >= 1
  std::uint64_t master_seed = 12345;
  Real ci_multiplier = 3.0;

  void validate() const {
    require_domain(trials >= 2, "MCConfig: need at least two trials");
    require_domain(horizon >= 1, "MCConfig: horizon must be >= 1");
    require_domain(ci_multiplier > 0.0, "MCConfig: ci multiplier must be positive");
  }
};

// Default truncation horizon for a rate index (recorded per report).
inline Index default_horizon(Index index) {
  if (index_is_capped(index)) return kIndexCap;
  return std::max(sat_add(index, 1000),
                  index > kIndexCap / 10 ? kIndexCap : index * 10);
}

struct EstimateWithCI {
  Real mean = 0.0;
  Real std_err = 0.0;  // sample sd / sqrt(trials)
  std::uint64_t trials = 0;
};

struct ValidationRow {
  Real epsilon = 0.0;
  std::optional<Real> lambda;
  Index index = 0;  // index produced by the rate under test
  EstimateWithCI estimate;
  Real bound = 0.0;
  bool pass = false;
  bool feasible = true;
  std::string note;
};

bool all_feasible_pass(const std::vector<ValidationRow>& rows);

// Mean of g(x_n) over seeded trials; trials run in parallel but are reduced
// in trial order, so results are bit-stable for a given MCConfig.
EstimateWithCI estimate_mean_functional(const ProcessModel& model,
                                        const std::function<Real(const StatePoint&)>& g,
                                        Index n, const MCConfig& cfg);

// Same, over an explicit trial index range [begin, end).
EstimateWithCI estimate_mean_functional_range(
    const ProcessModel& model, const std::function<Real(const StatePoint&)>& g, Index n,
    const MCConfig& cfg, std::uint64_t trial_begin, std::uint64_t trial_end);

// Fraction of trials in which the dist-functional reaches eps at some index
// in [N, horizon].  A truncated lower bound of the infinite-horizon event.
EstimateWithCI estimate_sup_exceedance(const ProcessModel& model, Index N, Real epsilon,
                                       const MCConfig& cfg);

// Ville's inequality check: for a model whose dist-functional is a certified
// nonnegative supermartingale, the truncated sup-exceedance estimate must
// stay below E[U_0]/a (plus CI slack).
ValidationRow ville_check(const ProcessModel& model, Real a, const MCConfig& cfg);

// For each eps: estimate E[f(X_{rho(eps)})] and require <= eps + ci*SE, plus
// two spot checks past the rate index.  Rows whose index exceeds the horizon
// are marked infeasible, not failed.
std::vector<ValidationRow> validate_mean_rate(const ProcessModel& model,
                                              const SiccFunction& f,
                                              const RateBundle& bundle,
                                              const std::vector<Real>& eps_list,
                                              const MCConfig& cfg);

// Per (lambda, eps): sup-exceedance from rate_as(lambda, eps) must be
// <= lambda + ci*SE.
std::vector<ValidationRow> validate_as_rate(const ProcessModel& model,
                                            const RateASFn& rate_as,
                                            const std::vector<std::pair<Real, Real>>& pairs,
                                            const MCConfig& cfg);

// Per index n: estimate of the dist-functional mean must be below
// mean_bound(n) + ci*SE.
std::vector<ValidationRow> validate_fast_bound(const ProcessModel& model,
                                               const std::function<Real(Index)>& mean_bound,
                                               const std::vector<Index>& sample_indices,
                                               const MCConfig& cfg);

}  // namespace stochrate
