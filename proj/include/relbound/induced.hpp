#pragma once

// Induced actions from a finite-index subgroup Λ ≤ F_k.
//
// With transversal T = [t₀ = ε, t₁, …] and α(γ, t_iΛ) = λ the unique element of Λ
// with γ·t_i·λ ∈ T, the induced action on Γ/Λ × Y is
//   γ·(t_iΛ, y) = (γ t_i α Λ, α⁻¹·y).

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "relbound/factor.hpp"
#include "relbound/measures.hpp"
#include "relbound/trajectory.hpp"

namespace relbound {

struct SubgroupSpec {
  std::string name;
  int rank = 2;
  std::function<bool(const Word&)> membership;
  std::vector<Word> transversal;

  std::size_t index() const { return transversal.size(); }
};

/// Words of even length in F_k; T = [ε, a].
SubgroupSpec even_length_subgroup(int rank = 2);

/// Throws UsageError unless t₀ = ε, ε ∈ Λ, every γ in the radius ball lies in exactly one
/// coset, and Λ is closed under inverse and product on that ball.
void validate(const SubgroupSpec& spec, std::size_t radius = 5);

/// The unique j with t_j⁻¹γ ∈ Λ.
std::size_t coset_of(const SubgroupSpec& spec, const Word& gamma);
/// α(γ, t_iΛ) = (t_j⁻¹ γ t_i)⁻¹ with j = coset_of(γ t_i); the postconditions λ ∈ Λ and
/// γ t_i λ ∈ T are checked.
Word cocycle(const SubgroupSpec& spec, const Word& gamma, std::size_t i);

/// Point of Γ/Λ × Prob(Y): a coset index and a measure on Y = ∂F_k.
struct InducedPoint {
  std::size_t coset;
  Measure measure;
};

InducedPoint induced_action(const SubgroupSpec& spec, const Word& gamma, const InducedPoint& p);

/// μ̃(t_i s t_i⁻¹) = μ_Λ(s). Throws UsageError when supp μ_Λ ⊄ Λ.
StepDistribution conjugate_walk(const StepDistribution& mu_lambda, const SubgroupSpec& spec, std::size_t i);

/// Γ/Λ × (∂F_k, ν) with ν a μ_Λ-stationary measure of the Λ-space Y and η on the cosets.
struct InducedSystem {
  SubgroupSpec spec;
  Measure nu;
  StepDistribution mu_lambda;
  std::vector<Rational> eta;

  /// Checks supp μ_Λ ⊆ Λ, the subgroup spec, and η.
  InducedSystem(SubgroupSpec spec, Measure nu, StepDistribution mu_lambda, std::vector<Rational> eta);
  /// Even-length subgroup of F₂, ν = harmonic(2), μ_Λ = μ∗μ, η uniform.
  static InducedSystem even_length_instance();
};

struct FiberStationarityReport {
  ExactReport precondition;  ///< μ_Λ-stationarity of ν
  ExactReport fiber;         ///< Σ_s μ_Λ(s)·[induced_action(t_i s t_i⁻¹, (i, ν))]₂ vs ν
  bool coset_fixed = true;   ///< every t_i s t_i⁻¹ fixes the coset i
  bool precondition_holds() const { return precondition.passed(); }
  bool passed() const { return precondition_holds() && fiber.passed() && coset_fixed; }
};

/// The fiber check is skipped (left empty) when the precondition fails.
FiberStationarityReport verify_fiber_stationarity(const InducedSystem& sys, std::size_t i, std::size_t depth);

struct ProjectionBoundaryReport {
  FiberStationarityReport stationarity;
  ProximalityReport proximality;  ///< probe tag = coset, tags_constant = coset constancy
  std::size_t equivariance_checked = 0;
  std::size_t equivariance_failures = 0;
};

/// Walks from μ̃ = conjugate_walk(μ_Λ, i) acting on (i, ν); random γ test
/// γ·Proj(t_iΛ, m) = Proj(γ·(t_iΛ, m)) against the membership predicate.
ProjectionBoundaryReport verify_projection_boundary(const InducedSystem& sys, std::size_t i, std::size_t exact_depth,
                                                    const ProximalityParams& params);

}  // namespace relbound
