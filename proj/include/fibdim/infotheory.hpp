#pragma once

#include "fibdim/rng.hpp"

#include <cstddef>
#include <string>
#include <vector>

namespace fibdim {

inline constexpr int kMaxJointVariables = 4;
inline constexpr std::size_t kMaxAlphabet = 64;
// Multiply nats by this to display bits.
inline constexpr double kBitsPerNat = 1.4426950408889634;

struct Variable {
  std::string name;
  std::vector<std::string> alphabet;
};

// A group of variable names treated as one variable, e.g. {"Y", "Z"}.
using VariableSet = std::vector<std::string>;

// Finite joint distribution over up to four named variables. The table is
// row-major in variable order (the last variable varies fastest).
class DiscreteJoint {
 public:
  // Entries must be nonnegative and sum to 1 within 1e-14.
  DiscreteJoint(std::vector<Variable> variables, std::vector<double> table);

  const std::vector<Variable>& variables() const { return variables_; }
  const std::vector<double>& table() const { return table_; }
  std::size_t cells() const { return table_.size(); }
  int index_of(const std::string& name) const;

  double probability(const std::vector<std::size_t>& symbols) const;
  // Joint of the named variables, in the given order.
  DiscreteJoint marginal(const VariableSet& keep) const;

 private:
  std::vector<Variable> variables_;
  std::vector<double> table_;
};

// Variables named by single letters with symbols "0", "1", ...
DiscreteJoint make_joint(const std::vector<std::string>& names, const std::vector<std::size_t>& sizes,
                         std::vector<double> table);

// Shannon entropy of the joint of `vars`, in nats, 0 log 0 = 0.
double entropy(const DiscreteJoint& j, const VariableSet& vars);

// Sum over cells of p(x,y) log(p(x,y) / (p(x) p(y))). X and Y must be
// disjoint and non-empty.
double mutual_information(const DiscreteJoint& j, const VariableSet& x, const VariableSet& y);

// Sum over w with p(w) > 0 of p(w) I(X, Y | W = w). An empty W gives I(X, Y).
double conditional_mutual_information(const DiscreteJoint& j, const VariableSet& x, const VariableSet& y,
                                      const VariableSet& w);

struct ChainRuleCheck {
  double lhs = 0.0;  // I(X, (Y, Z) | W)
  double rhs = 0.0;  // I(X, Y | (Z, W)) + I(X, Z | W)
  double residual = 0.0;
};
ChainRuleCheck chain_rule_check(const DiscreteJoint& j, const VariableSet& x, const VariableSet& y,
                                const VariableSet& z, const VariableSet& w);

// E log of the density of the joint of (X, Y) against the product of the
// given marginals. Throws AbsolutelyContinuousViolation naming the cell when
// the joint charges a cell of product measure 0.
double density_form_information(const DiscreteJoint& xy, const std::vector<double>& px,
                                const std::vector<double>& py);

struct GypCheck {
  double partition_form = 0.0;  // H(X) + H(Y) - H(X, Y)
  double density_form = 0.0;
  double residual = 0.0;
};
// X and Y are single variables.
GypCheck gyp_check(const DiscreteJoint& j, const std::string& x, const std::string& y);

// A finite sequence only bounds the liminf through continuity: term n can
// sit below the limit by at most the entropy continuity modulus at its total
// variation distance, applied to H(X), H(Y) and H(X, Y).
struct SemicontinuityReport {
  std::vector<double> values;          // I(X_n, Y_n)
  std::vector<double> tv_to_limit;     // total variation distance to the limit
  std::vector<double> upper_bounds;    // values plus the continuity modulus
  double limit_value = 0.0;
  double tail_min = 0.0;               // min of values over the last half
  double tail_bound = 0.0;             // min of upper_bounds over the last half
  bool holds = false;                  // limit_value <= tail_bound + 1e-10
};
SemicontinuityReport semicontinuity_smoke(const std::vector<DiscreteJoint>& sequence, const DiscreteJoint& limit,
                                          const VariableSet& x, const VariableSet& y);

// X, Y fair +-1 and Z = XY.
DiscreteJoint xor_example();
// X1 = Y1, X2 = Y1 + Y2, X3 = Y1 + Y2 + Y3 with fair +-1 steps.
DiscreteJoint markov_example();

// Dirichlet(alpha) table over the given alphabet sizes.
DiscreteJoint random_joint(const std::vector<std::size_t>& sizes, double alpha, const SeededSampler& sampler,
                           std::uint64_t index);

// (1 - eps) j + eps uniform.
DiscreteJoint mix_with_uniform(const DiscreteJoint& j, double eps);

// Joint of the atom index "A" and the bin "AF" (2^k equal bins of [0, pi))
// of an image point: images[a] holds samples of A_a applied to the
// stationary measure.
DiscreteJoint action_image_joint(const std::vector<double>& probabilities,
                                 const std::vector<std::vector<double>>& images, int k);

// CSV: one column per variable (symbols) and a final column "p".
DiscreteJoint read_joint_csv(const std::string& path);
void write_joint_csv(const DiscreteJoint& j, const std::string& path);

}  // namespace fibdim
