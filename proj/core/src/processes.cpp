#include "stochrate/processes.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <numbers>

namespace stochrate {

namespace {

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ull;

std::uint64_t splitmix_mix(std::uint64_t x) {
  x += kGolden;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

Real lerp_point(Real a, Real b, Real s) { return a + (b - a) * s; }

}  // namespace

Index geometric_crossing_index(Real C, Real q, Real eps) {
  require_domain(q > 0.0 && q < 1.0, "geometric_crossing_index: q must lie in (0,1)");
  if (C <= 0.0 || C < eps) return 0;
  const Real ratio = std::log(eps / C) / std::log(q);
  return sat_add(index_from_real(ratio), 1);
}

// ---- state space ----

StatePoint make_euclidean(std::vector<Real> coords) {
  StatePoint p;
  p.coords = std::move(coords);
  return p;
}

StatePoint make_star(int leg, Real t) {
  require_domain(leg >= 0, "make_star: leg must be nonnegative");
  require_domain(t >= 0.0, "make_star: radial coordinate must be nonnegative");
  StatePoint p;
  p.leg = leg;
  p.t = t;
  return p;
}

void StarSpace::check(const StatePoint& p) const {
  require_domain(p.is_star(), "StarSpace: point is not a star point");
  require_domain(p.leg < legs, "StarSpace: leg index out of range");
  require_domain(p.t >= 0.0, "StarSpace: negative radial coordinate");
}

Real StarSpace::distance(const StatePoint& x, const StatePoint& y) const {
  check(x);
  check(y);
  if (x.leg == y.leg) return std::fabs(x.t - y.t);
  return x.t + y.t;  // path through the origin
}

StatePoint StarSpace::geodesic(const StatePoint& x, const StatePoint& y, Real s) const {
  check(x);
  check(y);
  require_domain(s >= 0.0 && s <= 1.0, "StarSpace::geodesic: parameter outside [0,1]");
  const Real total = distance(x, y);
  if (total == 0.0) return x;
  const Real walked = s * total;
  if (x.leg == y.leg) return make_star(x.leg, lerp_point(x.t, y.t, s));
  if (walked < x.t) return make_star(x.leg, x.t - walked);
  return make_star(y.leg, walked - x.t);
}

Real euclidean_distance(const StatePoint& x, const StatePoint& y) {
  require_domain(!x.is_star() && !y.is_star() && x.coords.size() == y.coords.size(),
                 "euclidean_distance: mismatched points");
  Real s = 0.0;
  for (std::size_t i = 0; i < x.coords.size(); ++i) {
    const Real d = x.coords[i] - y.coords[i];
    s += d * d;
  }
  return std::sqrt(s);
}

// ---- seeded randomness ----

std::uint64_t RandomSource::derive_stream_seed(std::uint64_t master_seed,
                                               std::uint64_t trial_index) {
  return splitmix_mix(master_seed ^ splitmix_mix(trial_index));
}

RandomSource::RandomSource(std::uint64_t master_seed, std::uint64_t trial_index)
    : s_(derive_stream_seed(master_seed, trial_index)) {}

Real RandomSource::uniform() {
  const std::uint64_t z = splitmix_mix(s_ += kGolden);
  return static_cast<Real>(z >> 11) * 0x1.0p-53;
}

Real RandomSource::normal() {
  if (have_spare_) {
    have_spare_ = false;
    return spare_;
  }
  Real u, v, s;
  do {
    u = 2.0 * uniform() - 1.0;
    v = 2.0 * uniform() - 1.0;
    s = u * u + v * v;
  } while (s >= 1.0 || s == 0.0);
  const Real factor = std::sqrt(-2.0 * std::log(s) / s);
  spare_ = v * factor;
  have_spare_ = true;
  return u * factor;
}

bool RandomSource::bernoulli(Real p) { return uniform() < p; }

std::uint64_t RandomSource::pick(std::uint64_t n) {
  require_domain(n >= 1, "RandomSource::pick: empty range");
  const std::uint64_t i = static_cast<std::uint64_t>(uniform() * static_cast<Real>(n));
  return i >= n ? n - 1 : i;
}

// ---- step sequences ----

StepSeq steps_const(Real v) {
  require_domain(v > 0.0, "steps_const: step must be positive");
  StepSeq s;
  s.label = "const:" + std::to_string(v);
  s.a = [v](Index) { return v; };
  s.theta_sum.fn = [v](Index k, Real b) { return sat_add(k, index_from_real(b / v)); };
  // sum of squares diverges; chi_sq left unset
  s.sum_sq = 0.0;
  return s;
}

StepSeq steps_harmonic(Real beta, Index r) {
  require_domain(beta > 0.0, "steps_harmonic: beta must be positive");
  require_domain(r >= 1, "steps_harmonic: r must be >= 1");
  StepSeq s;
  s.label = "harmonic:" + std::to_string(beta) + "," + std::to_string(r);
  s.a = [beta, r](Index n) { return 1.0 / (beta * static_cast<Real>(n + r)); };
  // sum_{n=k}^{m} 1/(n+r) >= ln((m+r+1)/(k+r)); solve for m, saturating.
  s.theta_sum.fn = [beta, r](Index k, Real b) {
    const Real needed = beta * b;
    const Real log_target = std::log(static_cast<Real>(k + r)) + needed;
    if (log_target > 42.0) return kIndexCap;  // past 4e18
    const Real m = std::exp(log_target) - static_cast<Real>(r) - 1.0;
    return std::max(k, index_from_real(m));
  };
  // tail sum_{n=k} 1/(beta^2 (n+r)^2) < 1/(beta^2 (k+r-1))
  s.chi_sq.fn = [beta, r](Real eps) {
    const Real k = 1.0 / (beta * beta * eps) + 2.0 - static_cast<Real>(r);
    return index_from_real(k);
  };
  Real trigamma = std::numbers::pi * std::numbers::pi / 6.0;
  for (Index j = 1; j < r; ++j) trigamma -= 1.0 / (static_cast<Real>(j) * static_cast<Real>(j));
  s.sum_sq = trigamma / (beta * beta);
  return s;
}

StepSeq steps_power(Real p) {
  require_domain(p > 0.5 && p <= 1.0, "steps_power: p must lie in (1/2, 1]");
  if (p == 1.0) return steps_harmonic(1.0, 1);
  StepSeq s;
  s.label = "power:" + std::to_string(p);
  s.a = [p](Index n) { return std::pow(static_cast<Real>(n + 1), -p); };
  s.theta_sum.fn = [p](Index k, Real b) {
    const Real base = std::pow(static_cast<Real>(k + 1), 1.0 - p) + b * (1.0 - p);
    const Real m = std::pow(base, 1.0 / (1.0 - p));
    return std::max(k, index_from_real(m));  // m stands for m+2; conservative
  };
  s.chi_sq.fn = [p](Real eps) {
    const Real k = std::pow(1.0 / (eps * (2.0 * p - 1.0)), 1.0 / (2.0 * p - 1.0));
    return sat_add(index_from_real(k), 1);
  };
  Real acc = 0.0;
  const Index scan = 100000;
  for (Index n = 0; n < scan; ++n) acc += std::pow(static_cast<Real>(n + 1), -2.0 * p);
  acc += std::pow(static_cast<Real>(scan), 1.0 - 2.0 * p) / (2.0 * p - 1.0);
  s.sum_sq = acc;
  return s;
}

// ---- certified constants ----

Real CertifiedConstants::at(const std::string& key) const {
  auto it = scalar.find(key);
  if (it == scalar.end())
    throw std::out_of_range("CertifiedConstants: missing key '" + key + "'");
  return it->second;
}

// ---- models ----

ProcessModel counterexample_model() {
  ProcessModel m;
  m.name = "counterexample";
  m.init = make_euclidean({1.0});  // placeholder; x0 is drawn
  m.target = make_euclidean({0.0});
  m.init_draw = [](RandomSource& rs) {
    return make_euclidean({rs.bernoulli(0.5) ? 2.0 : 0.0});
  };
  m.step = [](StatePoint& x, Index, RandomSource& rs) {
    x.coords[0] *= rs.bernoulli(0.5) ? 2.0 : 0.0;
  };
  m.functional = [](const StatePoint& x) { return std::sqrt(x.coords[0]); };
  m.dist_map = [](const StatePoint& x, const StatePoint& z) {
    return std::fabs(x.coords[0] - z.coords[0]);
  };
  m.nonneg_supermartingale = true;

  const Real eta = std::sqrt(2.0) / 2.0;
  m.certified.scalar = {{"E_U0", 1.0}, {"E_Xn", 1.0}, {"eta", eta}, {"K", 1.0}};
  // E[sqrt(X_n)] = eta^{n+1}, so a liminf modulus for E[F(x_n)] is explicit.
  m.certified.liminf.fn = [eta](Real eps, Index n) {
    if (eps >= 1.0) return n;
    const Index first = index_from_real(std::log(eps) / std::log(eta));
    return std::max(n, first);
  };
  m.certified.chi.fn = [](Real) { return Index{0}; };  // error terms are zero
  return m;
}

ProcessModel rm_model(const RMModelParams& params) {
  require_domain(params.noise_sd >= 0.0, "rm_model: noise sd must be nonnegative");
  require_domain(params.dim >= 1, "rm_model: dimension must be >= 1");
  if (params.field != RMField::LinearStronglyMonotone)
    require_domain(params.dim == 1, "rm_model: cubic/abs fields are one-dimensional");
  require_domain(params.x0.size() == static_cast<std::size_t>(params.dim),
                 "rm_model: x0 dimension mismatch");
  require_domain(static_cast<bool>(params.steps.a), "rm_model: missing step sequence");

  ProcessModel m;
  const int dim = params.dim;
  const Real sd = params.noise_sd;
  const Real beta = params.beta;
  const auto field = params.field;
  const auto a = params.steps.a;

  m.init = make_euclidean(params.x0);
  m.target = make_euclidean(std::vector<Real>(dim, 0.0));
  m.step = [field, beta, sd, a, dim](StatePoint& x, Index n, RandomSource& rs) {
    const Real an = a(n);
    for (int i = 0; i < dim; ++i) {
      const Real xi = x.coords[i];
      Real drift = 0.0;
      switch (field) {
        case RMField::LinearStronglyMonotone: drift = beta * xi; break;
        case RMField::Cubic1d: drift = xi * xi * xi; break;
        case RMField::AbsSubgradient1d:
          drift = xi > 0.0 ? 1.0 : (xi < 0.0 ? -1.0 : 0.0);
          break;
      }
      x.coords[i] = xi - an * (drift + sd * rs.normal());
    }
  };
  m.functional = [field, beta, dim](const StatePoint& x) {
    Real v = 0.0;
    for (int i = 0; i < dim; ++i) {
      const Real xi = x.coords[i];
      switch (field) {
        case RMField::LinearStronglyMonotone: v += beta * xi * xi; break;
        case RMField::Cubic1d: v += xi * xi * xi * xi; break;
        case RMField::AbsSubgradient1d: v += std::fabs(xi); break;
      }
    }
    return v;
  };
  m.dist_map = [](const StatePoint& x, const StatePoint& z) {
    const Real d = euclidean_distance(x, z);
    return d * d;
  };

  Real x0_sq = 0.0;
  for (Real v : params.x0) x0_sq += v * v;
  const Real d_noise = static_cast<Real>(dim) * sd * sd;
  auto& c = m.certified;
  c.scalar["d"] = d_noise;
  c.scalar["L"] = x0_sq;
  c.scalar["M_steps_sq"] = params.steps.sum_sq;
  switch (field) {
    case RMField::LinearStronglyMonotone:
      m.name = "rm:linear";
      // E[|y_n|^2 | F_n] = beta^2 |x_n|^2 + dim sd^2 exactly
      c.scalar["beta"] = beta;
      c.scalar["c"] = beta * beta;
      break;
    case RMField::Cubic1d:
      m.name = "rm:cubic";
      c.scalar["uniform_monotonicity_power"] = 4.0;  // <x, x^3> = x^4
      break;
    case RMField::AbsSubgradient1d:
      m.name = "rm:abs";
      c.scalar["c"] = 1e-9;  // E[y^2 | F] <= 1 + sd^2, any positive c works
      c.scalar["d"] = 1.0 + sd * sd;
      break;
  }
  if (c.has("c") && params.steps.sum_sq > 0.0) {
    const Real cM = c.at("c") * params.steps.sum_sq;
    c.scalar["M_err"] = c.at("d") * params.steps.sum_sq;
    c.scalar["K"] = std::exp(cM);
  }
  // Robbins-Siegmund shape: u_n = 2 a_n and C_n = a_n^2 d_n.
  const auto theta_a = params.steps.theta_sum;
  c.theta.fn = [theta_a](Index k, Real b) { return theta_a(k, b / 2.0); };
  if (params.steps.chi_sq && d_noise > 0.0) {
    const auto chi_sq = params.steps.chi_sq;
    const Real dn = c.at("d");
    c.chi.fn = [chi_sq, dn](Real eps) { return chi_sq(eps / dn); };
  } else {
    c.chi.fn = [](Real) { return Index{0}; };
  }
  return m;
}

ProcessModel km_model(const KMModelParams& params) {
  require_domain(params.contraction_r >= 0.0 && params.contraction_r < 1.0,
                 "km_model: contraction factor must lie in [0,1)");
  require_domain(static_cast<bool>(params.lambda) && static_cast<bool>(params.noise_sd),
                 "km_model: missing lambda or noise sequence");
  require_domain(params.lambda_lo >= 0.0 && params.lambda_hi <= 1.0 &&
                     params.lambda_lo <= params.lambda_hi,
                 "km_model: lambda range outside [0,1]");
  require_domain(params.noise_decay > 0.0 && params.noise_decay < 1.0,
                 "km_model: noise decay factor must lie in (0,1)");

  ProcessModel m;
  m.name = "km";
  const Real r = params.contraction_r;
  const auto lambda = params.lambda;
  const auto sd = params.noise_sd;
  const bool star = params.star;
  StarSpace space{params.dim_or_legs};

  if (star) {
    space.check(params.x0);
    m.init = params.x0;
    m.target = make_star(0, 0.0);
  } else {
    require_domain(params.x0.coords.size() == static_cast<std::size_t>(params.dim_or_legs),
                   "km_model: x0 dimension mismatch");
    m.init = params.x0;
    m.target = make_euclidean(std::vector<Real>(params.dim_or_legs, 0.0));
  }

  m.step = [r, lambda, sd, star, space](StatePoint& x, Index n, RandomSource& rs) {
    const Real s = sd(n);
    Real delta = s * rs.normal();
    delta = std::clamp(delta, -3.0 * s, 3.0 * s);
    const Real lam = lambda(n);
    if (star) {
      // T scales the radial coordinate; y perturbs it, clamped at the origin
      const Real tT = r * x.t;
      const Real ty = std::max(0.0, tT + delta);
      const StatePoint y = make_star(x.leg, ty);
      x = space.geodesic(x, y, lam);
    } else {
      const std::size_t dim = x.coords.size();
      Real norm = 0.0;
      for (std::size_t i = 0; i < dim; ++i) norm += r * x.coords[i] * r * x.coords[i];
      norm = std::sqrt(norm);
      std::vector<Real> y(dim, 0.0);
      const Real scale = norm > 0.0 ? std::max(0.0, norm + delta) / norm : 0.0;
      for (std::size_t i = 0; i < dim; ++i) y[i] = r * x.coords[i] * scale;
      for (std::size_t i = 0; i < dim; ++i)
        x.coords[i] = lerp_point(x.coords[i], y[i], lam);
    }
  };
  if (star) {
    m.functional = [r](const StatePoint& x) { return (1.0 - r) * x.t; };
    m.dist_map = [space](const StatePoint& x, const StatePoint& z) {
      return space.distance(x, z);
    };
  } else {
    m.functional = [r](const StatePoint& x) {
      StatePoint origin = make_euclidean(std::vector<Real>(x.coords.size(), 0.0));
      return (1.0 - r) * euclidean_distance(x, origin);
    };
    m.dist_map = [](const StatePoint& x, const StatePoint& z) {
      return euclidean_distance(x, z);
    };
  }

  // Certified data.  xi_n = lambda_n * 3 sd(n) bounds the quasi-Fejer error.
  auto& c = m.certified;
  const Real sd0 = params.noise_sd0;
  const Real q = params.noise_decay;
  const Real lam_hi = params.lambda_hi;
  const Real S = 3.0 * lam_hi * sd0 / (1.0 - q);  // bound on sum xi_n
  const Real D0 = star ? params.x0.t : euclidean_distance(params.x0, m.target);
  const Real K_bound = (D0 + S) * (D0 + S);  // a.s. bound on d^2(x_n, z)
  c.scalar = {{"K", 1.0},  // zeta_n == 0
              {"S", S},
              {"D0", D0},
              {"K_bound", K_bound},
              {"L_sum", K_bound + S * (4.0 * std::sqrt(K_bound) + 1.0)},
              {"contraction_r", r}};
  c.xi = [lambda, sd](Index n) { return lambda(n) * 3.0 * sd(n); };
  c.chi.fn = [S, q](Real eps) { return geometric_crossing_index(S, q, eps); };
  if (params.lambda_lo == params.lambda_hi && lam_hi > 0.0 && lam_hi < 1.0) {
    const Real w = lam_hi * (1.0 - lam_hi);  // per-step weight lambda(1-lambda)
    c.theta.fn = [w](Index k, Real b) { return sat_add(k, index_from_real(b / w)); };
  }

  // Geometric liminf modulus from the a.s. contraction envelope
  //   env_{k+1} = (1 - lambda_k (1-r)) env_k + lambda_k 3 sd(k),
  // valid since F(x_n) = (1-r) d(x_n, origin) <= (1-r) env_n a.s.
  const Index cap = 100000;
  auto fbound = std::make_shared<std::vector<Real>>();
  fbound->reserve(cap + 1);
  Real env = D0;
  for (Index k = 0; k <= cap; ++k) {
    fbound->push_back((1.0 - r) * env);
    env = (1.0 - lambda(k) * (1.0 - r)) * env + lambda(k) * 3.0 * sd(k);
  }
  c.liminf.fn = [fbound](Real eps, Index n) {
    for (Index k = n; k < fbound->size(); ++k)
      if ((*fbound)[k] < eps) return k;
    return kIndexCap;
  };
  return m;
}

ProcessModel prox_model(const ProxModelParams& params) {
  require_domain(params.gamma_lower > 0.0, "prox_model: gamma lower bound must be positive");
  require_domain(static_cast<bool>(params.gamma), "prox_model: missing gamma sequence");
  require_domain(params.z.size() == params.x0.size() &&
                     params.z.size() == static_cast<std::size_t>(params.dim),
                 "prox_model: dimension mismatch");

  ProcessModel m;
  m.name = "prox";
  const auto gamma = params.gamma;
  const auto sd = params.noise_sd;
  const int dim = params.dim;
  const std::vector<Real> z = params.z;
  const Real gl = params.gamma_lower;

  m.init = make_euclidean(params.x0);
  m.target = make_euclidean(params.z);
  m.step = [gamma, sd, dim, z](StatePoint& x, Index n, RandomSource& rs) {
    const Real g = gamma(n);
    require_domain(g > 0.0, "prox_model: gamma must stay positive");
    const Real s = sd ? sd(n) : 0.0;
    for (int i = 0; i < dim; ++i)
      x.coords[i] = (x.coords[i] + g * z[i]) / (1.0 + g) + s * rs.normal();
  };
  // F'(x) = |x - J_{gl A} x| = (gl/(1+gl)) |x - z| for the quadratic potential
  m.functional = [gl, z, dim](const StatePoint& x) {
    Real sq = 0.0;
    for (int i = 0; i < dim; ++i) {
      const Real d = x.coords[i] - z[i];
      sq += d * d;
    }
    return gl / (1.0 + gl) * std::sqrt(sq);
  };
  m.dist_map = [](const StatePoint& x, const StatePoint& y) {
    return euclidean_distance(x, y);
  };

  auto& c = m.certified;
  c.scalar["K"] = 1.0;
  c.scalar["gamma_lower"] = gl;
  const Real sdim = std::sqrt(static_cast<Real>(dim));
  if (sd) c.xi = [sd, sdim](Index n) { return sd(n) * sdim; };

  // Geometric noise supports the full analytic certification: sum of the
  // error envelopes S, the a.s. second-moment bound, the liminf window
  // N + 4 L / eps^2 for E[|x_n - J_{gl} x_n|], and the xi tail rate.
  require_domain(params.noise_decay > 0.0 && params.noise_decay < 1.0,
                 "prox_model: noise decay factor must lie in (0,1)");
  const Real q = params.noise_decay;
  const Real S = params.noise_sd0 * sdim / (1.0 - q);
  Real d0 = 0.0;
  for (int i = 0; i < dim; ++i) {
    const Real diff = params.x0[static_cast<std::size_t>(i)] - z[static_cast<std::size_t>(i)];
    d0 += diff * diff;
  }
  d0 = std::sqrt(d0);
  const Real K_bound = (d0 + S) * (d0 + S);
  const Real L_sum = K_bound + S * (2.0 * std::sqrt(K_bound) + 1.0);
  c.scalar["S"] = S;
  c.scalar["K_bound"] = K_bound;
  c.scalar["L_sum"] = L_sum;
  if (params.noise_sd0 * sdim <= 1.0) {  // window needs E[|eps_n|^2] <= 1
    c.liminf.fn = [L_sum](Real eps, Index n) {
      return sat_add(n, index_from_real(4.0 * L_sum / (eps * eps)));
    };
  }
  c.chi.fn = [S, q](Real eps) { return geometric_crossing_index(S, q, eps); };
  return m;
}

StatePoint frechet_mean_euclidean(const std::vector<SplittingAnchor>& anchors) {
  require_domain(!anchors.empty(), "frechet_mean: no anchors");
  const std::size_t dim = anchors.front().point.coords.size();
  std::vector<Real> z(dim, 0.0);
  for (const auto& a : anchors)
    for (std::size_t i = 0; i < dim; ++i) z[i] += a.weight * a.point.coords[i];
  return make_euclidean(z);
}

StatePoint frechet_mean_star(const StarSpace& space,
                             const std::vector<SplittingAnchor>& anchors) {
  require_domain(!anchors.empty(), "frechet_mean: no anchors");
  // On each leg the problem is one-dimensional: anchors on the leg sit at
  // +t, all others at -t.  Minimize the weighted quadratic, clamp at the
  // origin, and take the best leg.
  StatePoint best = make_star(0, 0.0);
  Real best_value = std::numeric_limits<Real>::infinity();
  for (int leg = 0; leg < space.legs; ++leg) {
    Real mean = 0.0;
    for (const auto& a : anchors) {
      space.check(a.point);
      mean += a.weight * (a.point.leg == leg ? a.point.t : -a.point.t);
    }
    const Real u = std::max(0.0, mean);
    const StatePoint cand = make_star(leg, u);
    Real value = 0.0;
    for (const auto& a : anchors) {
      const Real d = space.distance(cand, a.point);
      value += a.weight * d * d;
    }
    if (value < best_value) {
      best_value = value;
      best = cand;
    }
  }
  return best;
}

ProcessModel splitting_model(const SplittingModelParams& params) {
  require_domain(!params.anchors.empty(), "splitting_model: no anchors");
  require_domain(static_cast<bool>(params.lambda), "splitting_model: missing lambda");
  Real wsum = 0.0;
  for (const auto& a : params.anchors) {
    require_domain(a.weight > 0.0, "splitting_model: weights must be positive");
    wsum += a.weight;
  }
  if (std::fabs(wsum - 1.0) > 1e-12)
    throw config_error("splitting_model: weights must sum to 1");

  ProcessModel m;
  m.name = "splitting";
  const bool star = params.star;
  StarSpace space{params.dim_or_legs};
  const auto anchors = params.anchors;
  const auto lambda = params.lambda;

  m.init = params.x0;
  m.target = star ? frechet_mean_star(space, anchors) : frechet_mean_euclidean(anchors);

  auto dist = [star, space](const StatePoint& x, const StatePoint& y) {
    return star ? space.distance(x, y) : euclidean_distance(x, y);
  };
  Real min_f = 0.0;
  for (const auto& a : anchors) {
    const Real d = dist(m.target, a.point);
    min_f += a.weight * d * d;
  }

  m.step = [star, space, anchors, lambda](StatePoint& x, Index k, RandomSource& rs) {
    const auto& a = anchors[rs.pick(anchors.size())];
    const Real lam = lambda(k);
    const Real frac = 2.0 * lam * a.weight / (1.0 + 2.0 * lam * a.weight);
    if (star) {
      x = space.geodesic(x, a.point, frac);
    } else {
      for (std::size_t i = 0; i < x.coords.size(); ++i)
        x.coords[i] = lerp_point(x.coords[i], a.point.coords[i], frac);
    }
  };
  m.functional = [anchors, dist, min_f](const StatePoint& x) {
    Real f = 0.0;
    for (const auto& a : anchors) {
      const Real d = dist(x, a.point);
      f += a.weight * d * d;
    }
    return std::max(0.0, f - min_f);
  };
  m.dist_map = [dist](const StatePoint& x, const StatePoint& y) {
    const Real d = dist(x, y);
    return d * d;
  };

  // Iterates stay in the ball of radius R around the origin spanned by the
  // start point and the anchors; f_i is (4 R w_i)-Lipschitz there.
  StatePoint origin = star ? make_star(0, 0.0)
                           : make_euclidean(std::vector<Real>(params.x0.coords.size(), 0.0));
  Real R = dist(params.x0, origin);
  Real wmax = 0.0;
  for (const auto& a : anchors) {
    R = std::max(R, dist(a.point, origin));
    wmax = std::max(wmax, a.weight);
  }
  const Real L_lip = 4.0 * R * wmax;
  const Real d0 = dist(params.x0, m.target);
  const Real n_anchors = static_cast<Real>(anchors.size());

  auto& c = m.certified;
  c.scalar = {{"K", 1.0},
              {"R", R},
              {"L_lip", L_lip},
              {"min_f", min_f},
              {"d0_sq", d0 * d0},
              {"anchors", n_anchors},
              {"lambda_sq_sum", params.lambda_sq_sum},
              {"L_sum", d0 * d0 + 4.0 * L_lip * L_lip * params.lambda_sq_sum}};
  c.xi = [lambda, L_lip](Index k) {
    return 4.0 * lambda(k) * lambda(k) * L_lip * L_lip;
  };
  if (params.lambda_sq_tail) {
    const auto tail = params.lambda_sq_tail;
    const Real scale = 4.0 * L_lip * L_lip;
    c.chi.fn = [tail, scale](Real eps) { return tail(eps / scale); };
  }
  if (params.lambda_div) {
    const auto div = params.lambda_div;
    // series in the descent term is sum 2 lambda_k / N
    c.theta.fn = [div, n_anchors](Index k, Real b) {
      return div(k, b * n_anchors / 2.0);
    };
  }
  return m;
}

ProcessModel dvoretzky_model(const DvoretzkyModelParams& params) {
  require_domain(static_cast<bool>(params.a_seq) && static_cast<bool>(params.b_seq) &&
                     static_cast<bool>(params.c_seq),
                 "dvoretzky_model: missing sequences");
  require_domain(params.z.size() == params.x0.size() &&
                     params.z.size() == static_cast<std::size_t>(params.dim),
                 "dvoretzky_model: dimension mismatch");

  ProcessModel m;
  m.name = "dvoretzky";
  const auto c_seq = params.c_seq;
  const auto sd = params.noise_sd;
  const int dim = params.dim;
  const std::vector<Real> z = params.z;

  m.init = make_euclidean(params.x0);
  m.target = make_euclidean(params.z);
  m.step = [c_seq, sd, dim, z](StatePoint& x, Index n, RandomSource& rs) {
    Real d2 = 0.0;
    for (int i = 0; i < dim; ++i) {
      const Real d = x.coords[i] - z[i];
      d2 += d * d;
    }
    const Real dist = std::sqrt(d2);
    const Real factor = dist > 0.0 ? std::max(0.0, 1.0 - c_seq(n) / dist) : 0.0;
    const Real s = sd ? sd(n) : 0.0;
    for (int i = 0; i < dim; ++i)
      x.coords[i] = z[i] + (x.coords[i] - z[i]) * factor + s * rs.normal();
  };
  m.functional = [z, dim](const StatePoint& x) {
    Real d2 = 0.0;
    for (int i = 0; i < dim; ++i) {
      const Real d = x.coords[i] - z[i];
      d2 += d * d;
    }
    return std::sqrt(d2);
  };
  m.dist_map = [](const StatePoint& x, const StatePoint& y) {
    return euclidean_distance(x, y);
  };

  auto& c = m.certified;
  c.scalar = {{"A", params.A}, {"B", params.B}, {"C", params.C}, {"M", params.M}};
  c.varphi_a = params.varphi_a;
  c.beta_b = params.beta_b;
  c.gamma_c = params.gamma_c;
  c.mu_y = params.mu_y;
  c.theta = params.theta_c;
  // Shrinkage never expands, so E[|x_n - z|^2] <= |x0 - z|^2 + sum sd^2 dim.
  Real x0z_sq = 0.0;
  for (int i = 0; i < dim; ++i) {
    const Real d = params.x0[i] - params.z[i];
    x0z_sq += d * d;
  }
  const Index prefix_cap = 4096;
  auto prefix = std::make_shared<std::vector<Real>>();
  prefix->reserve(prefix_cap + 1);
  Real acc = x0z_sq;
  for (Index k = 0; k <= prefix_cap; ++k) {
    prefix->push_back(acc);
    const Real s = sd ? sd(k) : 0.0;
    acc += static_cast<Real>(dim) * s * s;
  }
  const Real total = x0z_sq + static_cast<Real>(dim) * params.M;
  c.L_of = [prefix, total](Index n) {
    return n < prefix->size() ? (*prefix)[n] : total;
  };
  return m;
}

// ---- simulation helpers ----

StatePoint simulate_to(const ProcessModel& model, Index n, RandomSource& rs) {
  StatePoint x = model.initial(rs);
  for (Index k = 0; k < n; ++k) model.step(x, k, rs);
  return x;
}

Real estimate_k_bound(const ProcessModel& model, Index horizon, std::uint64_t trials,
                      std::uint64_t master_seed, Real slack) {
  require_domain(trials >= 2, "estimate_k_bound: need at least two trials");
  std::vector<Real> sum(horizon + 1, 0.0), sumsq(horizon + 1, 0.0);
  for (std::uint64_t t = 0; t < trials; ++t) {
    RandomSource rs(master_seed, t);
    StatePoint x = model.initial(rs);
    for (Index n = 0; n <= horizon; ++n) {
      const Real v = model.dist_functional(x);
      sum[n] += v;
      sumsq[n] += v * v;
      if (n < horizon) model.step(x, n, rs);
    }
  }
  Real bound = 0.0;
  const Real tn = static_cast<Real>(trials);
  for (Index n = 0; n <= horizon; ++n) {
    const Real mean = sum[n] / tn;
    const Real var = std::max(0.0, (sumsq[n] - tn * mean * mean) / (tn - 1.0));
    bound = std::max(bound, mean + slack * std::sqrt(var / tn));
  }
  return bound;
}

LiminfModulus empirical_liminf_modulus(const ProcessModel& model, Index horizon,
                                       std::uint64_t trials, std::uint64_t master_seed,
                                       Real slack) {
  require_domain(trials >= 2, "empirical_liminf_modulus: need at least two trials");
  auto upper = std::make_shared<std::vector<Real>>(horizon + 1, 0.0);
  std::vector<Real> sumsq(horizon + 1, 0.0);
  for (std::uint64_t t = 0; t < trials; ++t) {
    RandomSource rs(master_seed, t);
    StatePoint x = model.initial(rs);
    for (Index n = 0; n <= horizon; ++n) {
      const Real v = model.functional(x);
      (*upper)[n] += v;
      sumsq[n] += v * v;
      if (n < horizon) model.step(x, n, rs);
    }
  }
  const Real tn = static_cast<Real>(trials);
  for (Index n = 0; n <= horizon; ++n) {
    const Real mean = (*upper)[n] / tn;
    const Real var = std::max(0.0, (sumsq[n] - tn * mean * mean) / (tn - 1.0));
    (*upper)[n] = mean + slack * std::sqrt(var / tn);
  }
  LiminfModulus out;
  out.fn = [upper](Real eps, Index n) {
    for (Index k = n; k < upper->size(); ++k)
      if ((*upper)[k] < eps) return k;
    return kIndexCap;
  };
  return out;
}

}  // namespace stochrate
