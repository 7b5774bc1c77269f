#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>

namespace stochrate {

using Real = double;
using Index = std::uint64_t;

// Iteration indices saturate at kIndexCap instead of overflowing.  A rate
// that evaluates to kIndexCap is "infeasible at any practical horizon" and
// is reported as such by the validation layer.
inline constexpr Index kIndexCap = Index{1} << 62;

inline bool index_is_capped(Index n) { return n >= kIndexCap; }

// Ceil a real to an index, saturating.  Negative values clamp to 0.
inline Index index_from_real(Real x) {
  if (std::isnan(x)) throw std::domain_error("index_from_real: nan");
  if (x <= 0.0) return 0;
  const Real c = std::ceil(x);
  if (c >= static_cast<Real>(kIndexCap)) return kIndexCap;
  return static_cast<Index>(c);
}

inline Index sat_add(Index a, Index b) {
  if (a >= kIndexCap || b >= kIndexCap) return kIndexCap;
  const Index s = a + b;
  return s >= kIndexCap ? kIndexCap : s;
}

// Raised for malformed experiment configurations (CLI exit code 2).
struct config_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline void require_domain(bool cond, const char* msg) {
  if (!cond) throw std::domain_error(msg);
}

}  // namespace stochrate
