#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "stochrate/common.hpp"
#include "stochrate/moduli.hpp"
#include "stochrate/montecarlo.hpp"
#include "stochrate/processes.hpp"
#include "stochrate/rates.hpp"
#include "stochrate/regularity.hpp"

namespace stochrate {

// Flat key-value/section config format.  Section and key order is preserved
// so an emitted snapshot is byte-stable.
class Config {
 public:
  using Section = std::vector<std::pair<std::string, std::string>>;

  static Config parse(const std::string& text);
  static Config load(const std::string& path);
  std::string emit() const;

  bool has(const std::string& section, const std::string& key) const;
  // Throws config_error naming the missing section/key.
  std::string get(const std::string& section, const std::string& key) const;
  std::string get_or(const std::string& section, const std::string& key,
                     const std::string& fallback) const;
  void set(const std::string& section, const std::string& key, const std::string& value);

  bool operator==(const Config& other) const { return sections_ == other.sections_; }

 private:
  std::vector<std::pair<std::string, Section>> sections_;
};

// ---- expression grammars (closed, documented in `catalog`) ----

// SiccFunction: id | power:q | log:c | sum(a*F, b*G) | compose(F,G) | min(F,G)
SiccFunction parse_sicc_expr(const std::string& expr);

// RegularityModulus: convex:{id|square|pow:p|scale:c} | quasi-contraction:r |
// sharp-min:<convex>[:quarter] | strongly-quasiconvex:mu | frechet |
// prox-transfer:<convex>,gamma | ui:K | bounded:K
RegularityModulus parse_reg_expr(const std::string& expr);

// Scalar sequences: const:v | inv:c (c/(n+1)) | geom:g,q (g q^n) |
// harmonic:beta,r (1/(beta(n+r))) | power:p ((n+1)^-p) | zero
struct SeqExpr {
  enum class Kind { Const, Inv, Geom, Harmonic, Power, Zero } kind;
  Real p1 = 0.0, p2 = 0.0;
  Index r = 1;
  std::function<Real(Index)> fn;
  std::string label;
};
SeqExpr parse_seq_expr(const std::string& expr);

// Certified rates for a parsed sequence; each throws config_error when the
// family does not support the request.
TailRate seq_pointwise_rate(const SeqExpr& s);   // first n with a_n < eps
TailRate seq_sum_tail_rate(const SeqExpr& s);    // tail of sum a_n
TailRate seq_sumsq_tail_rate(const SeqExpr& s);  // tail of sum a_n^2
DivergenceRate seq_divergence_rate(const SeqExpr& s);
Real seq_sum_bound(const SeqExpr& s);    // upper bound on sum a_n
Real seq_sumsq_bound(const SeqExpr& s);  // upper bound on sum a_n^2

StepSeq parse_steps_expr(const std::string& expr);

// chi: zero | ceil-inv[:c] | geom:g,q ; theta: affine:u ; liminf: shift:c
TailRate parse_tail_expr(const std::string& expr);
DivergenceRate parse_div_expr(const std::string& expr);
LiminfModulus parse_liminf_expr(const std::string& expr);

StatePoint parse_point(const std::string& text);  // "1,0" or "star:leg,t"

// Builds the model named in [model] with its certified constants.
ProcessModel build_model(const Config& cfg);

MCConfig build_mc(const Config& cfg, std::optional<std::uint64_t> seed_override);

// ---- commands (exit codes: 0 ok / all pass, 1 validation failure, 2 config) ----

struct CommandOptions {
  std::string out_dir = ".";
  std::string format = "csv";  // csv | json | both
  std::optional<std::uint64_t> seed_override;
  std::optional<Index> trajectories;
};

int run_catalog(std::ostream& out);
int run_rate(const Config& cfg, const CommandOptions& opt, std::ostream& log);
int run_validate(const Config& cfg, const CommandOptions& opt, std::ostream& log);
int run_trajectory(const Config& cfg, const CommandOptions& opt, std::ostream& log);

// Deterministic numeric formatting used by every emitter.
std::string fmt_real(Real v);

}  // namespace stochrate
