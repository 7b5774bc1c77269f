#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <random>

#include "doctest.h"
#include "stochrate/processes.hpp"

using namespace stochrate;

namespace {

// deterministic trajectory helper (noise-free models still consume draws)
StatePoint run_steps(const ProcessModel& m, Index n, std::uint64_t seed = 0,
                     std::uint64_t trial = 0) {
  RandomSource rs(seed, trial);
  return simulate_to(m, n, rs);
}

KMModelParams km_params(Real r, Real lam, Real sd0, Real decay, Real x0) {
  KMModelParams p;
  p.contraction_r = r;
  p.lambda = [lam](Index) { return lam; };
  p.lambda_lo = p.lambda_hi = lam;
  p.noise_sd = [sd0, decay](Index n) { return sd0 * std::pow(decay, static_cast<Real>(n)); };
  p.noise_sd0 = sd0;
  p.noise_decay = decay;
  p.x0 = make_euclidean({x0});
  p.dim_or_legs = 1;
  return p;
}

}  // namespace

TEST_CASE("star tree distances and geodesics") {
  StarSpace space{3};
  CHECK(space.distance(make_star(1, 2.0), make_star(1, 0.5)) == doctest::Approx(1.5));
  CHECK(space.distance(make_star(1, 2.0), make_star(2, 1.0)) == doctest::Approx(3.0));
  CHECK(space.distance(make_star(0, 0.0), make_star(2, 0.0)) == doctest::Approx(0.0));

  const StatePoint mid = space.geodesic(make_star(1, 2.0), make_star(2, 1.0), 2.0 / 3.0);
  CHECK(mid.leg == 2);
  CHECK(mid.t == doctest::Approx(0.0));
  const StatePoint p = space.geodesic(make_star(1, 2.0), make_star(2, 1.0), 5.0 / 6.0);
  CHECK(p.leg == 2);
  CHECK(p.t == doctest::Approx(0.5));

  CHECK_THROWS_AS(space.distance(make_star(3, 1.0), make_star(0, 1.0)), std::domain_error);
}

TEST_CASE("star tree satisfies the CN inequality") {
  StarSpace space{4};
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<Real> ut(0.0, 5.0);
  auto random_point = [&]() { return make_star(static_cast<int>(rng() % 4), ut(rng)); };
  Real worst = 0.0;
  for (int i = 0; i < 10000; ++i) {
    const StatePoint x = random_point(), y = random_point(), w = random_point();
    for (Real lam : {0.0, 0.25, 0.5, 0.75, 1.0}) {
      const StatePoint m = space.geodesic(x, y, lam);
      const Real lhs = std::pow(space.distance(m, w), 2);
      const Real rhs = (1.0 - lam) * std::pow(space.distance(x, w), 2) +
                       lam * std::pow(space.distance(y, w), 2) -
                       lam * (1.0 - lam) * std::pow(space.distance(x, y), 2);
      worst = std::max(worst, lhs - rhs);
    }
  }
  CHECK(worst <= 1e-10);
}

TEST_CASE("random source is reproducible per (seed, trial)") {
  RandomSource a(42, 7), b(42, 7), c(42, 8);
  bool all_equal = true, any_diff = false;
  for (int i = 0; i < 1000; ++i) {
    const Real va = a.uniform(), vb = b.uniform(), vc = c.uniform();
    if (va != vb) all_equal = false;
    if (va != vc) any_diff = true;
    CHECK(va >= 0.0);
    CHECK(va < 1.0);
  }
  CHECK(all_equal);
  CHECK(any_diff);

  // normals have roughly the right first two moments
  RandomSource g(9, 0);
  Real sum = 0.0, sumsq = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const Real v = g.normal();
    sum += v;
    sumsq += v * v;
  }
  CHECK(std::fabs(sum / n) < 0.01);
  CHECK(std::fabs(sumsq / n - 1.0) < 0.02);
}

TEST_CASE("counterexample martingale: exact enumeration") {
  const ProcessModel m = counterexample_model();
  CHECK(m.nonneg_supermartingale);
  const Real eta = std::sqrt(2.0) / 2.0;
  CHECK(0.5 * 0.0 + 0.5 * std::sqrt(2.0) == doctest::Approx(eta));

  // enumerate all 2^(n+1) draw paths; X_n is the product of the first n+1 draws
  for (int n = 0; n <= 12; ++n) {
    const int draws = n + 1;
    const std::uint64_t paths = 1ull << draws;
    Real mean = 0.0, mean_sqrt = 0.0;
    for (std::uint64_t mask = 0; mask < paths; ++mask) {
      Real x = 1.0;
      for (int k = 0; k < draws; ++k) x *= (mask >> k) & 1 ? 2.0 : 0.0;
      mean += x;
      mean_sqrt += std::sqrt(x);
    }
    mean /= static_cast<Real>(paths);
    mean_sqrt /= static_cast<Real>(paths);
    CHECK(std::fabs(mean - 1.0) <= 1e-12);
    CHECK(std::fabs(mean_sqrt - std::pow(eta, n + 1)) <= 1e-12);
  }

  // the model's own step reproduces the same distribution shape
  RandomSource rs(4, 0);
  const StatePoint x9 = simulate_to(m, 9, rs);
  CHECK((x9.coords[0] == 0.0 || x9.coords[0] == 1024.0));
}

TEST_CASE("rm model steps and conditional second moment") {
  RMModelParams p;
  p.field = RMField::LinearStronglyMonotone;
  p.beta = 1.0;
  p.dim = 1;
  p.noise_sd = 0.0;
  p.steps = steps_const(0.5);
  p.x0 = {1.0};
  const ProcessModel lin = rm_model(p);
  CHECK(run_steps(lin, 1).coords[0] == doctest::Approx(0.5));
  CHECK(lin.certified.at("c") == doctest::Approx(1.0));  // beta^2
  CHECK(lin.certified.at("d") == doctest::Approx(0.0));

  // E[y^2 | x] = x^2 + sd^2 exactly for the linear field: conditional MC
  const Real sd = 0.7;
  for (Real x : {0.5, 1.0, 2.0}) {
    RandomSource rs(123, 5);
    const int n = 200000;
    Real sum = 0.0, sumsq = 0.0;
    for (int i = 0; i < n; ++i) {
      const Real y = x + sd * rs.normal();
      sum += y * y;
      sumsq += y * y * y * y;
    }
    const Real mean = sum / n;
    const Real expected = x * x + sd * sd;
    const Real se = std::sqrt((sumsq / n - mean * mean) / n);
    CHECK(std::fabs(mean - expected) <= 3.0 * se);
  }

  RMModelParams pc = p;
  pc.field = RMField::Cubic1d;
  pc.steps = steps_const(0.1);
  pc.x0 = {2.0};
  const ProcessModel cubic = rm_model(pc);
  CHECK(run_steps(cubic, 1).coords[0] == doctest::Approx(1.2));  // 2 - 0.1*8
  CHECK(cubic.functional(make_euclidean({2.0})) == doctest::Approx(16.0));  // x^4

  RMModelParams pa = p;
  pa.field = RMField::AbsSubgradient1d;
  pa.steps = steps_const(0.25);
  pa.x0 = {1.0};
  const ProcessModel abs_m = rm_model(pa);
  CHECK(run_steps(abs_m, 1).coords[0] == doctest::Approx(0.75));
  CHECK(abs_m.functional(make_euclidean({-0.5})) == doctest::Approx(0.5));
}

TEST_CASE("km model steps on line and star") {
  const ProcessModel m = km_model(km_params(0.5, 0.5, 0.0, 0.5, 4.0));
  CHECK(run_steps(m, 1).coords[0] == doctest::Approx(3.0));  // 0.5*4 + 0.5*2
  CHECK(m.functional(make_euclidean({4.0})) == doctest::Approx(2.0));  // (1-r)|x|

  KMModelParams sp = km_params(0.0, 0.5, 0.0, 0.5, 0.0);
  sp.star = true;
  sp.dim_or_legs = 3;
  sp.x0 = make_star(2, 1.0);
  const ProcessModel sm = km_model(sp);
  const StatePoint next = run_steps(sm, 1);
  CHECK(next.leg == 2);
  CHECK(next.t == doctest::Approx(0.5));  // geodesic midpoint toward the origin

  // noise is clamped: d(y_n, T x_n) <= 3 sd(n) makes the a.s. envelope valid
  const ProcessModel noisy = km_model(km_params(0.5, 0.5, 0.1, 0.5, 1.0));
  RandomSource rs(5, 3);
  StatePoint x = noisy.initial(rs);
  Real env = 1.0;
  for (Index n = 0; n < 60; ++n) {
    noisy.step(x, n, rs);
    const Real sd_n = 0.1 * std::pow(0.5, static_cast<Real>(n));
    env = (1.0 - 0.5 * 0.5) * env + 0.5 * 3.0 * sd_n;
    CHECK(std::fabs(x.coords[0]) <= env + 1e-12);
  }

  // certified geometric liminf modulus is a valid bound on E[F(x_n)]
  const auto& liminf = noisy.certified.liminf;
  const Index idx = liminf(1e-3, 0);
  CHECK(idx < 100);
  CHECK(idx >= 1);
}

TEST_CASE("prox model resolvent identities") {
  ProxModelParams p;
  p.gamma = [](Index) { return 1.0; };
  p.gamma_lower = 1.0;
  p.noise_sd = [](Index) { return 0.0; };
  p.dim = 1;
  p.z = {0.0};
  p.x0 = {2.0};
  const ProcessModel m = prox_model(p);
  CHECK(run_steps(m, 1).coords[0] == doctest::Approx(1.0));  // (x + gamma z)/(1+gamma)

  // resolvent inequality |J_{l g} x - x| <= (2 - l) |J_g x - x| at
  // g = 2, l = 1/2, x = 3, z = 0 via the closed form x/(1+gamma)
  const Real left = std::fabs(3.0 / (1.0 + 1.0) - 3.0);       // J_1(3) = 1.5
  const Real right = (2.0 - 0.5) * std::fabs(3.0 / 3.0 - 3.0);  // 1.5 * 2
  CHECK(left == doctest::Approx(1.5));
  CHECK(right == doctest::Approx(3.0));
  CHECK(left <= right);

  // firm nonexpansiveness of the linear resolvent, exact in 1-D
  std::mt19937_64 rng(71);
  std::uniform_real_distribution<Real> ux(-5.0, 5.0);
  for (Real gamma : {0.5, 1.0, 2.0, 7.0}) {
    const Real a = 1.0 / (1.0 + gamma);
    CHECK(a * a + (gamma * a) * (gamma * a) <= 1.0 + 1e-15);
    for (int i = 0; i < 50; ++i) {
      const Real x = ux(rng), y = ux(rng);
      const Real jx = x * a, jy = y * a;
      const Real lhs = (jx - jy) * (jx - jy) +
                       ((x - jx) - (y - jy)) * ((x - jx) - (y - jy));
      CHECK(lhs <= (x - y) * (x - y) + 1e-12);
    }
  }
  CHECK(m.functional(make_euclidean({2.0})) == doctest::Approx(1.0));  // |x - J x|
}

TEST_CASE("splitting model: proximal step against minimization oracle") {
  SplittingModelParams p;
  p.anchors = {{make_euclidean({1.0}), 1.0}};
  p.lambda = [](Index) { return 0.5; };
  p.lambda_sq_tail.fn = [](Real) { return Index{0}; };
  p.lambda_sq_sum = 0.25;
  p.lambda_div.fn = [](Index k, Real b) { return sat_add(k, index_from_real(2.0 * b)); };
  p.star = false;
  p.dim_or_legs = 1;
  p.x0 = make_euclidean({0.0});
  const ProcessModel m = splitting_model(p);
  CHECK(run_steps(m, 1).coords[0] == doctest::Approx(0.5));  // t = 1/(1+1) from 0

  // 1-D oracle: ternary search of w(y-a)^2 + (y-x)^2 / (2 lam)
  std::mt19937_64 rng(81);
  std::uniform_real_distribution<Real> ux(-3.0, 3.0);
  std::uniform_real_distribution<Real> uw(0.05, 1.0);
  std::uniform_real_distribution<Real> ul(0.05, 2.0);
  Real worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const Real x = ux(rng), a = ux(rng), w = uw(rng), lam = ul(rng);
    const Real frac = 2.0 * lam * w / (1.0 + 2.0 * lam * w);
    const Real stepped = x + frac * (a - x);
    auto objective = [&](Real y) {
      return w * (y - a) * (y - a) + (y - x) * (y - x) / (2.0 * lam);
    };
    Real lo = std::min(x, a) - 1.0, hi = std::max(x, a) + 1.0;
    for (int it = 0; it < 200; ++it) {
      const Real m1 = lo + (hi - lo) / 3.0, m2 = hi - (hi - lo) / 3.0;
      if (objective(m1) < objective(m2)) hi = m2;
      else lo = m1;
    }
    worst = std::max(worst, std::fabs(stepped - 0.5 * (lo + hi)));
  }
  CHECK(worst <= 1e-4);
}

TEST_CASE("Frechet means on the star tree") {
  StarSpace space{3};
  std::vector<SplittingAnchor> symmetric = {{make_star(0, 1.0), 1.0 / 3.0},
                                            {make_star(1, 1.0), 1.0 / 3.0},
                                            {make_star(2, 1.0), 1.0 / 3.0}};
  const StatePoint origin = frechet_mean_star(space, symmetric);
  CHECK(origin.t == doctest::Approx(0.0));

  std::vector<SplittingAnchor> skewed = {{make_star(0, 1.0), 0.8},
                                         {make_star(1, 1.0), 0.1},
                                         {make_star(2, 1.0), 0.1}};
  const StatePoint mean = frechet_mean_star(space, skewed);
  CHECK(mean.leg == 0);
  CHECK(mean.t == doctest::Approx(0.6));

  // grid-search oracle over all legs
  Real best = std::numeric_limits<Real>::infinity();
  int best_leg = -1;
  Real best_t = 0.0;
  for (int leg = 0; leg < 3; ++leg) {
    for (Real t = 0.0; t <= 2.0; t += 1e-4) {
      Real f = 0.0;
      for (const auto& a : skewed) {
        const Real d = space.distance(make_star(leg, t), a.point);
        f += a.weight * d * d;
      }
      if (f < best) {
        best = f;
        best_leg = leg;
        best_t = t;
      }
    }
  }
  CHECK(best_leg == 0);
  CHECK(best_t == doctest::Approx(0.6).epsilon(1e-3));
  CHECK(best == doctest::Approx(0.64).epsilon(1e-6));
}

TEST_CASE("dvoretzky model shrinkage") {
  DvoretzkyModelParams p;
  p.a_seq = [](Index n) { return 1.0 / static_cast<Real>(n + 1); };
  p.b_seq = [](Index n) { return std::pow(0.5, static_cast<Real>(n)); };
  p.c_seq = [](Index) { return 1.0; };
  p.noise_sd = [](Index) { return 0.0; };
  p.A = 1.0;
  p.B = 2.0;
  p.C = 1.0;
  p.M = 1.0;
  p.varphi_a.fn = [](Real e) { return index_from_real(1.0 / e); };
  p.beta_b.fn = [](Real e) { return geometric_crossing_index(2.0, 0.5, e); };
  p.gamma_c.fn = [](Real e) { return index_from_real(1.0 / e); };
  p.mu_y.fn = [](Real) { return Index{0}; };
  p.theta_c.fn = [](Index k, Real b) { return sat_add(k, index_from_real(b)); };
  p.dim = 1;
  p.z = {0.0};
  p.x0 = {5.0};
  const ProcessModel m = dvoretzky_model(p);
  CHECK(run_steps(m, 1).coords[0] == doctest::Approx(4.0));  // (5 - 1)^+

  DvoretzkyModelParams close = p;
  close.x0 = {0.4};
  close.c_seq = [](Index) { return 1.0; };
  CHECK(run_steps(dvoretzky_model(close), 1).coords[0] == doctest::Approx(0.0));

  // transfer bound (D - c)^+ <= max{a, (1+b) D - c} for sampled nonnegatives
  std::mt19937_64 rng(91);
  std::uniform_real_distribution<Real> u(0.0, 4.0);
  for (int i = 0; i < 5000; ++i) {
    const Real D = u(rng), a = u(rng), b = u(rng), c = u(rng);
    const Real lhs = std::max(0.0, D - c);
    const Real rhs = std::max(a, (1.0 + b) * D - c);
    CHECK(lhs <= rhs + 1e-15);
  }
}

TEST_CASE("step sequences carry valid divergence and tail rates") {
  std::mt19937_64 rng(101);
  std::uniform_real_distribution<Real> ub(0.1, 12.0);
  const StepSeq seqs[] = {steps_const(0.7), steps_harmonic(1.0, 2), steps_power(0.6)};
  for (const auto& s : seqs) {
    for (int i = 0; i < 30; ++i) {
      const Index k = rng() % 20;
      const Real b = ub(rng);
      const Index m = s.theta_sum(k, b);
      if (index_is_capped(m)) continue;
      Real sum = 0.0;
      for (Index n = k; n <= m; ++n) sum += s.a(n);
      CHECK(sum >= b - 1e-9);
    }
    if (!s.chi_sq) continue;
    for (Real eps : {0.5, 0.05, 0.005}) {
      const Index k = s.chi_sq(eps);
      Real tail = 0.0;
      for (Index n = k; n < k + 4000000; ++n) {
        tail += s.a(n) * s.a(n);
        if (s.a(n) * s.a(n) < 1e-18 * eps) break;
      }
      CHECK(tail < eps);
    }
    if (s.sum_sq > 0.0) {
      Real total = 0.0;
      for (Index n = 0; n < 2000000; ++n) total += s.a(n) * s.a(n);
      CHECK(total <= s.sum_sq + 1e-9);
    }
  }
}

TEST_CASE("quasi-Fejer drift: compensated distances are nonincreasing") {
  // n -> E[d(x_n,z)] - sum_{k<n} xi_k must be nonincreasing within 3 SE
  const ProcessModel km = km_model(km_params(0.5, 0.5, 0.1, 0.5, 1.0));

  SplittingModelParams sp;
  sp.anchors = {{make_star(0, 1.0), 0.8}, {make_star(1, 1.0), 0.1}, {make_star(2, 1.0), 0.1}};
  sp.lambda = [](Index k) { return 1.0 / static_cast<Real>(k + 1); };
  sp.lambda_sq_tail.fn = [](Real e) { return sat_add(index_from_real(1.0 / e), 1); };
  sp.lambda_sq_sum = 1.6449340668482264;
  sp.lambda_div.fn = [](Index k, Real b) {
    const Real target = std::log(static_cast<Real>(k + 1)) + b;
    return target > 42.0 ? kIndexCap : index_from_real(std::exp(target));
  };
  sp.star = true;
  sp.dim_or_legs = 3;
  sp.x0 = make_star(0, 0.0);
  const ProcessModel split = splitting_model(sp);

  for (const ProcessModel* model : {&km, &split}) {
    const Index horizon = 60;
    const std::uint64_t trials = 4000;
    std::vector<Real> sum(horizon + 1, 0.0), sumsq(horizon + 1, 0.0);
    for (std::uint64_t t = 0; t < trials; ++t) {
      RandomSource rs(2025, t);
      StatePoint x = model->initial(rs);
      for (Index n = 0; n <= horizon; ++n) {
        const Real v = model->dist_functional(x);
        sum[n] += v;
        sumsq[n] += v * v;
        if (n < horizon) model->step(x, n, rs);
      }
    }
    Real xi_acc = 0.0;
    Real prev = sum[0] / trials;
    Real prev_se = 0.0;
    for (Index n = 1; n <= horizon; ++n) {
      xi_acc += model->certified.xi(n - 1);
      const Real mean = sum[n] / trials;
      const Real var = std::max(0.0, (sumsq[n] - trials * mean * mean) / (trials - 1.0));
      const Real se = std::sqrt(var / trials);
      CHECK(mean - xi_acc <= prev + 3.0 * (se + prev_se));
      prev = mean - xi_acc;
      prev_se = se;
    }
  }
}

TEST_CASE("regularity contract bridges to the simulated processes") {
  // whenever E^[F(x_n)] < tau(eps) - 3 SE we must see E^[dist(x_n)] < eps + 3 SE
  struct Pairing {
    ProcessModel model;
    std::function<Real(Real)> tau;
  };
  RMModelParams rp;
  rp.field = RMField::LinearStronglyMonotone;
  rp.beta = 1.0;
  rp.dim = 1;
  rp.noise_sd = 0.05;
  rp.steps = steps_harmonic(1.0, 2);
  rp.x0 = {1.0};

  SplittingModelParams sp;
  sp.anchors = {{make_star(0, 1.0), 0.8}, {make_star(1, 1.0), 0.1}, {make_star(2, 1.0), 0.1}};
  sp.lambda = [](Index k) { return 1.0 / static_cast<Real>(k + 1); };
  sp.lambda_sq_tail.fn = [](Real e) { return sat_add(index_from_real(1.0 / e), 1); };
  sp.lambda_sq_sum = 1.6449340668482264;
  sp.lambda_div.fn = [](Index k, Real b) {
    const Real target = std::log(static_cast<Real>(k + 1)) + b;
    return target > 42.0 ? kIndexCap : index_from_real(std::exp(target));
  };
  sp.star = true;
  sp.dim_or_legs = 3;
  sp.x0 = make_star(0, 0.0);

  std::vector<Pairing> pairings;
  // km with the quasi-contraction modulus tau(eps) = (1-r) eps, phi = d
  pairings.push_back({km_model(km_params(0.5, 0.5, 0.1, 0.5, 1.0)),
                      [](Real e) { return 0.5 * e; }});
  // rm linear: V = beta |x|^2 against X = |x|^2 with the linear modulus
  pairings.push_back({rm_model(rp), [](Real e) { return 1.0 * e; }});
  // splitting with the Frechet modulus tau(eps) = eps^2, phi = d^2
  pairings.push_back({splitting_model(sp), [](Real e) { return e * e; }});

  const std::uint64_t trials = 3000;
  const Index indices[] = {0, 1, 2, 3, 4, 5, 6, 8, 10, 12, 14, 16, 18, 20,
                           22, 24, 26, 28, 30, 32};
  for (const auto& pairing : pairings) {
    const ProcessModel& model = pairing.model;
    for (Real eps : {0.5, 0.1, 0.02}) {
      const Real tau_eps = pairing.tau(eps);
      for (Index n : indices) {
        Real fsum = 0.0, fsq = 0.0, dsum = 0.0, dsq = 0.0;
        for (std::uint64_t t = 0; t < trials; ++t) {
          RandomSource rs(777, t);
          const StatePoint x = simulate_to(model, n, rs);
          const Real F = model.functional(x);
          const Real D = model.dist_functional(x);
          fsum += F;
          fsq += F * F;
          dsum += D;
          dsq += D * D;
        }
        const Real fmean = fsum / trials;
        const Real fse = std::sqrt(std::max(0.0, fsq / trials - fmean * fmean) / trials);
        const Real dmean = dsum / trials;
        const Real dse = std::sqrt(std::max(0.0, dsq / trials - dmean * dmean) / trials);
        if (fmean < tau_eps - 3.0 * fse) CHECK(dmean < eps + 3.0 * dse);
      }
    }
  }
}
