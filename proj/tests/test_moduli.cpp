#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <random>

#include "doctest.h"
#include "stochrate/moduli.hpp"

using namespace stochrate;

TEST_CASE("power catalog function") {
  const SiccFunction id = sicc_power(1.0);
  CHECK(id.eval(4.0) == doctest::Approx(4.0));
  CHECK(id.psi(0.5) == doctest::Approx(0.5));
  CHECK(id.kappa(0.1) == doctest::Approx(0.1));

  const SiccFunction sqrt_f = sicc_power(0.5);
  CHECK(sqrt_f.eval(4.0) == doctest::Approx(2.0));
  CHECK(sqrt_f.kappa(0.1) == doctest::Approx(0.01));
  // independent evaluation of the supermultiplicativity modulus at 0.25
  CHECK(sqrt_f.psi(0.25) == doctest::Approx(std::sqrt(0.25)));
  CHECK(sqrt_f.psi(0.25) == doctest::Approx(0.5));

  CHECK_THROWS_AS(sicc_power(0.0), std::domain_error);
  CHECK_THROWS_AS(sicc_power(1.5), std::domain_error);
  CHECK_THROWS_AS(sqrt_f.eval(-1.0), std::domain_error);
}

TEST_CASE("log catalog function") {
  const SiccFunction f = sicc_log(2.0);
  CHECK(f.eval(1.0) == doctest::Approx(1.0));       // log2(2)
  CHECK(f.kappa(1.0) == doctest::Approx(1.0));      // 2^1 - 1
  CHECK(f.psi(0.3) == doctest::Approx(0.3));
  const SiccFunction g = sicc_log(7.5);
  CHECK(g.psi(0.3) == doctest::Approx(0.3));        // psi = a for every base
  CHECK_THROWS_AS(sicc_log(1.0), std::domain_error);
}

TEST_CASE("closure operations") {
  const SiccFunction id = sicc_id();
  const SiccFunction sqrt_f = sicc_power(0.5);

  const SiccFunction s = sicc_combine(SiccCombine::Sum, id, id, 0.5, 0.5);
  CHECK(s.eval(3.0) == doctest::Approx(3.0));

  const SiccFunction c = sicc_combine(SiccCombine::Compose, sqrt_f, sqrt_f);
  CHECK(c.eval(16.0) == doctest::Approx(2.0));
  // kappa of the composition applied by hand: (0.1^2)^2
  CHECK(c.kappa(0.1) == doctest::Approx(0.0001));

  const SiccFunction m = sicc_combine(SiccCombine::Min, sqrt_f, id);
  CHECK(m.eval(4.0) == doctest::Approx(2.0));
  CHECK(m.eval(0.25) == doctest::Approx(0.25));

  CHECK_THROWS_AS(sicc_combine(SiccCombine::Sum, id, id, 0.0, 1.0), std::domain_error);
}

TEST_CASE("verify_sicc on catalog and a broken function") {
  CHECK(verify_sicc(sicc_power(0.5), 10000, 1000.0, 7).all_pass());
  CHECK(verify_sicc(sicc_log(2.0), 10000, 1000.0, 7).all_pass());

  // x^2 is convex; the midpoint concavity check must fire.
  SiccFunction bad;
  bad.label = "square";
  bad.eval_fn = [](Real x) { return x * x; };
  bad.psi_fn = [](Real a) { return a * a; };
  bad.kappa_fn = [](Real e) { return std::sqrt(e); };
  const PropertyReport report = verify_sicc(bad, 10000, 1000.0, 7);
  CHECK(!report.all_pass());
  bool concavity_failed = false;
  for (const auto& c : report.checks)
    if (c.name == "midpoint concavity" && !c.pass) concavity_failed = true;
  CHECK(concavity_failed);
}

TEST_CASE("combined functions inherit validity") {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<Real> uq(0.1, 1.0);
  std::uniform_real_distribution<Real> uc(1.5, 9.0);
  for (int i = 0; i < 5; ++i) {
    const SiccFunction f = sicc_power(uq(rng));
    const SiccFunction g = sicc_log(uc(rng));
    const auto kind = static_cast<SiccCombine>(i % 3);
    const SiccFunction h = sicc_combine(kind, f, g, 0.5 + uq(rng), 0.5 + uq(rng));
    CHECK(verify_sicc(h, 4000, 100.0, 1000 + i).all_pass());
  }
}

TEST_CASE("kappa is monotone nondecreasing on sampled grids") {
  const SiccFunction fs[] = {sicc_power(0.5), sicc_power(1.0), sicc_log(2.0),
                             sicc_combine(SiccCombine::Sum, sicc_power(0.5),
                                          sicc_log(2.0), 1.0, 2.0),
                             sicc_combine(SiccCombine::Min, sicc_power(0.5), sicc_id())};
  for (const auto& f : fs) {
    Real prev = f.kappa(1e-4);
    for (Real eps = 2e-4; eps < 10.0; eps *= 1.7) {
      const Real cur = f.kappa(eps);
      CHECK(cur >= prev - 1e-15);
      prev = cur;
    }
  }
}
