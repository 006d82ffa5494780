#pragma once

// Finite-base factor systems π: (X, ν) → (Y, η) over F_k and exact checkers.
//
// The total space is X = ∂F_k × Z, where Z is a finite F_k-set of "tags"
// (a single point when X is just the boundary, Z = Y for product systems).
// A space may also drop the boundary coordinate entirely (X = Z), which is how
// finite relatively measure-preserving systems such as the identity factor are
// expressed. Fibers of π are finite unions of tagged cylinders, so every
// disintegration is a conditional measure.

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "relbound/freegroup.hpp"
#include "relbound/measures.hpp"
#include "relbound/rational.hpp"

namespace relbound {

/// How a generator table is extended to words.
enum class ActionMode {
  Strict,          ///< the table must satisfy the group law; violations are precondition errors
  GeneratorLevel,  ///< letterwise extension without checking the group law
};

struct ActionViolation {
  Word g;
  Word h;
  int point;
};

/// A finite set with an action of the generators (and their inverses) given by tables.
class FiniteAction {
 public:
  /// table[letter code][point] = image of point under that letter.
  FiniteAction(int rank, std::vector<std::string> labels, std::vector<std::vector<int>> table);

  static FiniteAction trivial(int rank, std::string label = "*");
  /// Z/2 = {0, 1}, every generator and inverse acting by the swap.
  static FiniteAction flip(int rank);

  int rank() const { return rank_; }
  int size() const { return static_cast<int>(labels_.size()); }
  const std::string& label(int point) const { return labels_.at(static_cast<std::size_t>(point)); }
  const std::vector<std::string>& labels() const { return labels_; }
  /// Index of a label; throws UsageError when unknown.
  int index_of(const std::string& label) const;

  int act(Letter l, int point) const;
  /// Letterwise extension: g = l₁⋯lₘ acts as l₁(l₂(⋯(lₘ·point))).
  int act(const Word& g, int point) const;

  /// First (g, h, y) in the radius ball with (gh)·y ≠ g·(h·y).
  std::optional<ActionViolation> composition_violation(std::size_t radius) const;
  /// Throws PreconditionError in Strict mode when the group law fails on the ball.
  void require(ActionMode mode, std::size_t radius = 3) const;

 private:
  int rank_;
  std::vector<std::string> labels_;
  std::vector<std::vector<int>> table_;
};

/// Base space (Y, η) with its generator action.
class FiniteBase {
 public:
  /// η must be positive and sum to 1.
  FiniteBase(FiniteAction action, std::vector<Rational> eta);
  static FiniteBase uniform(FiniteAction action);

  const FiniteAction& action() const { return action_; }
  const std::vector<Rational>& eta() const { return eta_; }
  int size() const { return action_.size(); }
  int rank() const { return action_.rank(); }

 private:
  FiniteAction action_;
  std::vector<Rational> eta_;
};

/// X = ∂F_k × Z, optionally without the boundary coordinate.
struct TotalSpace {
  FiniteAction tags;
  bool has_boundary = true;

  int rank() const { return tags.rank(); }
};

/// A measurable rectangle S × {z} in X.
struct SpaceSet {
  int tag;
  BoundarySet set;

  std::string str(const TotalSpace& space) const;
  bool operator==(const SpaceSet&) const = default;
};

/// Cells of X up to a depth: for each tag, Full and every cylinder with 1 ≤ |w| ≤ depth
/// (only Full when the space has no boundary coordinate).
std::vector<SpaceSet> cells(const TotalSpace& space, std::size_t depth);

/// Probability measure on X: a distribution over tags, each carrying a boundary measure.
class SpaceMeasure {
 public:
  struct Part {
    int tag;
    Rational weight;
    std::optional<Measure> boundary;  ///< empty when the space has no boundary coordinate
  };

  /// Parts must have distinct tags and positive weights summing to 1.
  explicit SpaceMeasure(std::vector<Part> parts);
  static SpaceMeasure on_boundary(const Measure& m) { return SpaceMeasure({{0, Rational(1), m}}); }

  const std::vector<Part>& parts() const { return parts_; }
  /// Weight of a tag (zero when absent).
  Rational tag_weight(int tag) const;
  const Part* find(int tag) const;
  std::string str(const TotalSpace& space) const;

 private:
  std::vector<Part> parts_;  // sorted by tag
};

Rational eval(const SpaceMeasure& m, const SpaceSet& s);
/// g·m, moving tags through the tag action and translating boundary parts.
SpaceMeasure translate(const Word& g, const SpaceMeasure& m, const FiniteAction& tags);

/// Part of a fiber: a tag slice restricted to a disjoint union of cylinders
/// ({ε} means the whole slice).
struct FiberPiece {
  int tag;
  std::vector<Word> cylinders;
};
using Fiber = std::vector<FiberPiece>;

class FactorSystem {
 public:
  FactorSystem(std::string name, TotalSpace space, FiniteBase base, SpaceMeasure total, std::vector<Fiber> fibers,
               std::vector<SpaceMeasure> disintegration);

  const std::string& name() const { return name_; }
  const TotalSpace& space() const { return space_; }
  const FiniteBase& base() const { return base_; }
  const SpaceMeasure& total() const { return total_; }
  const std::vector<Fiber>& fibers() const { return fibers_; }
  /// ν_y.
  const SpaceMeasure& fiber_measure(int y) const { return disintegration_.at(static_cast<std::size_t>(y)); }
  int rank() const { return space_.rank(); }

 private:
  std::string name_;
  TotalSpace space_;
  FiniteBase base_;
  SpaceMeasure total_;
  std::vector<Fiber> fibers_;
  std::vector<SpaceMeasure> disintegration_;
};

/// Conditional-measure disintegration: ν_y = ν(· ∩ π⁻¹(y)) / ν(π⁻¹(y)), η(y) = ν(π⁻¹(y)).
/// When eta is supplied it must agree with the fiber masses.
/// Throws EvaluationError for a null fiber and UsageError for overlapping fibers.
FactorSystem disintegrate(std::string name, const TotalSpace& space, const SpaceMeasure& total,
                          const FiniteAction& base_action, std::vector<Fiber> fibers,
                          const std::optional<std::vector<Rational>>& eta = std::nullopt);

/// ∂F_2 → {z1, z2}, [a^{±1}] ↦ z1, [b^{±1}] ↦ z2, with the generator table
/// a^{±1}z = z1, b^{±1}z = z2 (which is not a group action).
FactorSystem nonexample_system();
/// pr₂: (∂F_k, ν) ⊗ (Y, η) → (Y, η), disintegration ν ⊗ δ_y. Y must carry a group action.
FactorSystem product_system(const FiniteBase& base, const Measure& nu);
/// (∂F_k, ν) → one point.
FactorSystem one_point_system(const Measure& nu);
/// id: (Y, η) → (Y, η) for a finite Y; ν_y = δ_y.
FactorSystem identity_system(const FiniteBase& base);
/// σ: merge every fiber into one point (the composite X → Y → ⋆).
FactorSystem collapse_to_point(const FactorSystem& sys);
/// Push forward along κ: X = ∂F_k × Z → Z, keeping the same base. Requires each
/// tag slice to lie in a single fiber.
FactorSystem forget_boundary(const FactorSystem& sys);

// ---------------------------------------------------------------------------
// Exact checks

struct Residual {
  int label;
  std::optional<Word> element;  ///< group element for checks indexed by g
  SpaceSet cell;
  Rational lhs;
  Rational rhs;

  Rational difference() const { return lhs - rhs; }
};

struct ExactReport {
  std::string check;
  std::size_t depth = 0;
  std::vector<Residual> entries;  ///< every evaluated (label, cell) pair

  std::size_t checked() const { return entries.size(); }
  std::size_t residual_count() const;
  Rational max_residual() const;  ///< largest |lhs − rhs|
  bool passed() const { return residual_count() == 0; }
  /// First n entries with a nonzero residual.
  std::vector<Residual> witnesses(std::size_t n) const;
};

/// For every label y and cell of depth ≤ d: LHS = Σ_g μ(g)·(g·ν_{g⁻¹y})(cell), RHS = ν_y(cell).
ExactReport check_relative_stationarity(const FactorSystem& sys, const StepDistribution& mu, std::size_t depth,
                                        ActionMode mode = ActionMode::Strict);

struct MeasurePreservationResult {
  bool holds = true;
  std::size_t checked = 0;
  std::optional<Residual> witness;  ///< first failure
};

/// g·ν_{g⁻¹y} = ν_y on every cell of depth ≤ d, for every |g| ≤ radius.
MeasurePreservationResult check_relatively_measure_preserving(const FactorSystem& sys, std::size_t radius,
                                                              std::size_t depth,
                                                              ActionMode mode = ActionMode::Strict);

/// P_{ν_y}(f)(g) = (g·ν_{g⁻¹y})(f).
Rational harmonic_transform(const FactorSystem& sys, int y, const SpaceSet& f, const Word& g,
                            ActionMode mode = ActionMode::Strict);
/// Residuals P(g) − Σ_h μ(h)·P(gh) (stored as lhs = Σ_h μ(h)P(gh), rhs = P(g)) for all |g| ≤ radius.
ExactReport check_harmonicity(const FactorSystem& sys, const StepDistribution& mu, int y, const SpaceSet& f,
                              std::size_t radius, ActionMode mode = ActionMode::Strict);

/// Which term list to use when evaluating the non-example's averaged measure at [ab].
enum class Convention {
  Strict,         ///< (g·ν_{g⁻¹z1})([ab]) = ν_{g⁻¹z1}(g⁻¹[ab]) for every term
  PaperTermList,  ///< the printed term list, whose a⁻¹ term is evaluated on [ab] itself
};

struct NonexampleTerm {
  Word g;
  int label;
  BoundarySet set;
  Rational value;
};

struct NonexampleComputation {
  Convention convention;
  std::vector<NonexampleTerm> terms;
  Rational four_lhs;  ///< Σ of the four terms (= 4·LHS at [ab])
  Rational four_rhs;  ///< 4·ν_{z1}([ab])
  Rational residual() const { return (four_lhs - four_rhs) / 4; }
};

NonexampleComputation nonexample_terms(Convention convention);

}  // namespace relbound
