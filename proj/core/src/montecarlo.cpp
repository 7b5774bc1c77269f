#include "stochrate/montecarlo.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

namespace stochrate {

namespace {

// Runs one double-valued sample per trial into a preallocated slot, split
// across a thread pool.  Aggregation happens afterwards in trial order.
void run_trials(std::uint64_t trial_begin, std::uint64_t trial_end,
                const std::function<Real(std::uint64_t)>& one_trial,
                std::vector<Real>& out) {
  const std::uint64_t count = trial_end - trial_begin;
  out.resize(count);
  unsigned workers = std::thread::hardware_concurrency();
  if (workers == 0) workers = 1;
  workers = static_cast<unsigned>(std::min<std::uint64_t>(workers, count));
  if (workers <= 1) {
    for (std::uint64_t t = 0; t < count; ++t) out[t] = one_trial(trial_begin + t);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers);
  const std::uint64_t chunk = (count + workers - 1) / workers;
  for (unsigned w = 0; w < workers; ++w) {
    const std::uint64_t lo = static_cast<std::uint64_t>(w) * chunk;
    const std::uint64_t hi = std::min(count, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([&, lo, hi]() {
      for (std::uint64_t t = lo; t < hi; ++t) out[t] = one_trial(trial_begin + t);
    });
  }
  for (auto& th : pool) th.join();
}

EstimateWithCI reduce(const std::vector<Real>& values) {
  EstimateWithCI est;
  est.trials = values.size();
  Real sum = 0.0;
  bool all_equal = true;
  for (Real v : values) {
    sum += v;  // fixed trial order
    if (v != values.front()) all_equal = false;
  }
  if (all_equal) {
    // deterministic samples: report the exact value, not summation noise
    est.mean = values.front();
    est.std_err = 0.0;
    return est;
  }
  est.mean = sum / static_cast<Real>(values.size());
  Real ss = 0.0;
  for (Real v : values) {
    const Real d = v - est.mean;
    ss += d * d;
  }
  const Real n = static_cast<Real>(values.size());
  est.std_err = n > 1 ? std::sqrt(ss / (n - 1.0) / n) : 0.0;
  return est;
}

}  // namespace

bool all_feasible_pass(const std::vector<ValidationRow>& rows) {
  for (const auto& r : rows)
    if (r.feasible && !r.pass) return false;
  return true;
}

EstimateWithCI estimate_mean_functional_range(
    const ProcessModel& model, const std::function<Real(const StatePoint&)>& g, Index n,
    const MCConfig& cfg, std::uint64_t trial_begin, std::uint64_t trial_end) {
  cfg.validate();
  if (n > cfg.horizon)
    throw std::out_of_range("estimate_mean_functional: index beyond horizon");
  std::vector<Real> values;
  run_trials(trial_begin, trial_end,
             [&](std::uint64_t trial) {
               RandomSource rs(cfg.master_seed, trial);
               const StatePoint x = simulate_to(model, n, rs);
               return g(x);
             },
             values);
  return reduce(values);
}

EstimateWithCI estimate_mean_functional(const ProcessModel& model,
                                        const std::function<Real(const StatePoint&)>& g,
                                        Index n, const MCConfig& cfg) {
  return estimate_mean_functional_range(model, g, n, cfg, 0, cfg.trials);
}

EstimateWithCI estimate_sup_exceedance(const ProcessModel& model, Index N, Real epsilon,
                                       const MCConfig& cfg) {
  cfg.validate();
  require_domain(epsilon > 0.0, "estimate_sup_exceedance: eps must be positive");
  if (N > cfg.horizon)
    throw std::out_of_range("estimate_sup_exceedance: start index beyond horizon");
  std::vector<Real> values;
  run_trials(0, cfg.trials,
             [&](std::uint64_t trial) {
               RandomSource rs(cfg.master_seed, trial);
               StatePoint x = model.initial(rs);
               for (Index k = 0; k < N; ++k) model.step(x, k, rs);
               for (Index k = N;; ++k) {
                 if (model.dist_functional(x) >= epsilon) return 1.0;
                 if (k >= cfg.horizon) break;
                 model.step(x, k, rs);
               }
               return 0.0;
             },
             values);
  return reduce(values);
}

ValidationRow ville_check(const ProcessModel& model, Real a, const MCConfig& cfg) {
  require_domain(a > 0.0, "ville_check: level must be positive");
  if (!model.nonneg_supermartingale)
    throw std::logic_error("ville_check: model is not certified as a nonnegative supermartingale");
  ValidationRow row;
  row.epsilon = a;
  row.index = 0;
  row.bound = model.certified.at("E_U0") / a;
  row.estimate = estimate_sup_exceedance(model, 0, a, cfg);
  row.pass = row.estimate.mean <= row.bound + cfg.ci_multiplier * row.estimate.std_err;
  row.note = "ville horizon=" + std::to_string(cfg.horizon);
  return row;
}

std::vector<ValidationRow> validate_mean_rate(const ProcessModel& model,
                                              const SiccFunction& f,
                                              const RateBundle& bundle,
                                              const std::vector<Real>& eps_list,
                                              const MCConfig& cfg) {
  std::vector<ValidationRow> rows;
  auto g = [&model, &f](const StatePoint& x) {
    return f.eval(model.dist_functional(x));
  };
  for (Real eps : eps_list) {
    const Index idx = bundle.rho(eps);
    ValidationRow row;
    row.epsilon = eps;
    row.index = idx;
    row.bound = eps;
    if (idx > cfg.horizon) {
      row.feasible = false;
      row.note = "rate index exceeds horizon " + std::to_string(cfg.horizon);
      rows.push_back(row);
      continue;
    }
    row.estimate = estimate_mean_functional(model, g, idx, cfg);
    row.pass = row.estimate.mean <= eps + cfg.ci_multiplier * row.estimate.std_err;
    rows.push_back(row);

    // spot-check two later indices; the guarantee is for every n >= rho(eps)
    const Index spots[2] = {idx + std::max<Index>(1, (cfg.horizon - idx) / 2), cfg.horizon};
    for (Index s : spots) {
      if (s <= idx || s > cfg.horizon) continue;
      ValidationRow spot;
      spot.epsilon = eps;
      spot.index = s;
      spot.bound = eps;
      spot.estimate = estimate_mean_functional(model, g, s, cfg);
      spot.pass = spot.estimate.mean <= eps + cfg.ci_multiplier * spot.estimate.std_err;
      spot.note = "spot-check";
      rows.push_back(spot);
    }
  }
  return rows;
}

std::vector<ValidationRow> validate_as_rate(const ProcessModel& model,
                                            const RateASFn& rate_as,
                                            const std::vector<std::pair<Real, Real>>& pairs,
                                            const MCConfig& cfg) {
  std::vector<ValidationRow> rows;
  for (const auto& [lambda, eps] : pairs) {
    const Index idx = rate_as(lambda, eps);
    ValidationRow row;
    row.epsilon = eps;
    row.lambda = lambda;
    row.index = idx;
    row.bound = lambda;
    if (idx > cfg.horizon) {
      row.feasible = false;
      row.note = "rate index exceeds horizon " + std::to_string(cfg.horizon);
    } else {
      row.estimate = estimate_sup_exceedance(model, idx, eps, cfg);
      row.pass = row.estimate.mean <= lambda + cfg.ci_multiplier * row.estimate.std_err;
    }
    rows.push_back(row);
  }
  return rows;
}

std::vector<ValidationRow> validate_fast_bound(const ProcessModel& model,
                                               const std::function<Real(Index)>& mean_bound,
                                               const std::vector<Index>& sample_indices,
                                               const MCConfig& cfg) {
  std::vector<ValidationRow> rows;
  auto g = [&model](const StatePoint& x) { return model.dist_functional(x); };
  for (Index n : sample_indices) {
    ValidationRow row;
    row.index = n;
    row.bound = mean_bound(n);
    row.epsilon = row.bound;
    if (n > cfg.horizon) {
      row.feasible = false;
      row.note = "index beyond horizon";
    } else {
      row.estimate = estimate_mean_functional(model, g, n, cfg);
      row.pass = row.estimate.mean <= row.bound + cfg.ci_multiplier * row.estimate.std_err;
    }
    rows.push_back(row);
  }
  return rows;
}

}  // namespace stochrate
