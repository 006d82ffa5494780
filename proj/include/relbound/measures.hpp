#pragma once

// Symbolic probability measures on ∂F_k, evaluated exactly on the cylinder algebra.
//
// A Measure is an immutable expression tree:
//   harmonic(k)            hitting measure of the simple random walk on F_k
//   cond(base; w1, ...)    base conditioned on the disjoint union of cylinders [w_i]
//   tr(g; base)            push-forward g·base, i.e. (g·base)(A) = base(g⁻¹A)
//   mix(p1:m1, ...)        convex combination
// Nodes are shared, so copying a Measure is cheap.

#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "relbound/freegroup.hpp"
#include "relbound/rational.hpp"

namespace relbound {

/// Finitely supported probability measure on F_k (the step law of a random walk).
class StepDistribution {
 public:
  /// Weights must be positive and sum to exactly 1.
  StepDistribution(int rank, std::map<Word, Rational> weights);

  /// Uniform on the 2k generators and their inverses.
  static StepDistribution simple(int rank);
  static StepDistribution dirac(const Word& g);

  int rank() const { return rank_; }
  const std::map<Word, Rational>& weights() const { return weights_; }
  std::size_t support_size() const { return weights_.size(); }
  /// Weight of g (zero off the support).
  Rational operator()(const Word& g) const;

  bool operator==(const StepDistribution&) const = default;

 private:
  int rank_;
  std::map<Word, Rational> weights_;
};

/// Law of the product of independent draws from first and second.
StepDistribution convolve(const StepDistribution& first, const StepDistribution& second);

struct Component;

class Measure {
 public:
  enum class Kind { Harmonic, Conditioned, Translated, Mixture };

  static Measure harmonic(int rank);
  /// Throws EvaluationError when base gives the cylinders zero mass.
  static Measure conditioned(const Measure& base, std::vector<Word> cylinders);
  /// Collapses nested translations and drops translation by the identity.
  static Measure translated(const Word& g, const Measure& base);
  static Measure mixture(const std::vector<std::pair<Rational, Measure>>& parts);

  /// Parses the serialized expression text produced by str().
  static Measure parse(std::string_view text);

  int rank() const;
  Kind kind() const;

  // Accessors; each is valid only for the matching kind.
  const Measure& base() const;
  const Word& shift() const;
  const std::vector<Word>& cylinders() const;
  const Rational& conditioning_mass() const;
  const std::vector<Component>& components() const;

  std::string str() const;

  struct Node;

 private:
  explicit Measure(std::shared_ptr<const Node> node) : node_(std::move(node)) {}
  std::shared_ptr<const Node> node_;
};

struct Component {
  Rational weight;
  Measure measure;
};

/// Exact mass of s under m.
Rational eval(const Measure& m, const BoundarySet& s);
inline Rational eval(const Measure& m, const Word& cylinder) { return eval(m, BoundarySet::cylinder(cylinder)); }

/// Σ_g mu(g)·(g·m) as a mixture expression.
Measure convolve_push(const StepDistribution& mu, const Measure& m);

/// ½ Σ_{|w| = depth} |m1([w]) − m2([w])|.
Rational tv_distance_at_depth(const Measure& m1, const Measure& m2, std::size_t depth);

struct ProbeStep {
  Word word;
  Rational mass;
  bool operator==(const ProbeStep&) const = default;
};

/// Greedy descent through the cylinder tree, choosing the heaviest child at
/// every level (ties go to the smaller letter) down to the given depth.
std::vector<ProbeStep> concentration_probe(const Measure& m, std::size_t depth);

}  // namespace relbound
