#include <benchmark/benchmark.h>

#include <cmath>

#include "stochrate/montecarlo.hpp"
#include "stochrate/regularity.hpp"

using namespace stochrate;

namespace {

ProcessModel bench_rm_model() {
  RMModelParams p;
  p.field = RMField::LinearStronglyMonotone;
  p.beta = 1.0;
  p.dim = 1;
  p.noise_sd = 1.0;
  p.steps = steps_harmonic(1.0, 2);
  p.x0 = {1.0};
  return rm_model(p);
}

ProcessModel bench_splitting_model() {
  SplittingModelParams p;
  p.anchors = {{make_star(0, 1.0), 0.8}, {make_star(1, 1.0), 0.1}, {make_star(2, 1.0), 0.1}};
  p.lambda = [](Index k) { return 1.0 / static_cast<Real>(k + 1); };
  p.lambda_sq_tail.fn = [](Real e) { return sat_add(index_from_real(1.0 / e), 1); };
  p.lambda_sq_sum = 1.6449340668482264;
  p.lambda_div.fn = [](Index k, Real b) {
    const Real target = std::log(static_cast<Real>(k + 1)) + b;
    return target > 42.0 ? kIndexCap : index_from_real(std::exp(target));
  };
  p.star = true;
  p.dim_or_legs = 3;
  p.x0 = make_star(0, 0.0);
  return splitting_model(p);
}

void BM_RMStep(benchmark::State& state) {
  const ProcessModel m = bench_rm_model();
  RandomSource rs(1, 0);
  StatePoint x = m.initial(rs);
  Index n = 0;
  for (auto _ : state) {
    m.step(x, n++, rs);
    benchmark::DoNotOptimize(x.coords[0]);
  }
}
BENCHMARK(BM_RMStep);

void BM_SplittingStep(benchmark::State& state) {
  const ProcessModel m = bench_splitting_model();
  RandomSource rs(1, 0);
  StatePoint x = m.initial(rs);
  Index n = 0;
  for (auto _ : state) {
    m.step(x, n++, rs);
    benchmark::DoNotOptimize(x.t);
  }
}
BENCHMARK(BM_SplittingStep);

void BM_RateRSEval(benchmark::State& state) {
  const ProcessModel m = bench_rm_model();
  RSSpec spec;
  spec.K = m.certified.at("K");
  spec.L = m.certified.at("L");
  spec.M = m.certified.at("M_err");
  spec.chi = m.certified.chi;
  spec.theta = m.certified.theta;
  spec.tau = uniq_quasi_contraction(0.0);
  spec.f = sicc_id();
  const RateBundle bundle = rate_rs(spec);
  for (auto _ : state) benchmark::DoNotOptimize(bundle.rho(0.5));
}
BENCHMARK(BM_RateRSEval);

void BM_MeanEstimate(benchmark::State& state) {
  const ProcessModel m = bench_rm_model();
  MCConfig cfg;
  cfg.trials = static_cast<std::uint64_t>(state.range(0));
  cfg.horizon = 64;
  cfg.master_seed = 2;
  auto g = [&m](const StatePoint& x) { return m.dist_functional(x); };
  for (auto _ : state) {
    const auto est = estimate_mean_functional(m, g, 64, cfg);
    benchmark::DoNotOptimize(est.mean);
  }
}
BENCHMARK(BM_MeanEstimate)->Arg(1024)->Arg(8192);

}  // namespace

BENCHMARK_MAIN();
