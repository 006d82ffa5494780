#pragma once

// Seeded random walks and the statistics built on trajectory limits.
//
// The orbit measure at step n of a walk ω = (g₁, g₂, …) started over y is
//   g₁⋯gₙ · ν_{yₙ},   yₙ = gₙ⁻¹(⋯(g₁⁻¹·y)),
// with the base point tracked one increment at a time.

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "relbound/factor.hpp"
#include "relbound/measures.hpp"

namespace relbound {

/// splitmix64 finalizer.
std::uint64_t splitmix64(std::uint64_t x);
/// Per-sample seed: hash(master, y index, sample index).
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t y_index, std::uint64_t sample_index);

/// Inverse-CDF lookup against a uniform 64-bit draw, with exact thresholds ⌊F_i·2⁶⁴⌋
/// (so each outcome probability is off by at most 2⁻⁶⁴).
class ThresholdTable {
 public:
  /// Probabilities must be positive and sum to 1.
  explicit ThresholdTable(const std::vector<Rational>& probabilities);
  std::size_t operator()(std::uint64_t u) const;

 private:
  std::vector<unsigned __int128> thresholds_;
};

/// Draws from mu over its support in shortlex order.
class StepSampler {
 public:
  explicit StepSampler(const StepDistribution& mu);
  const Word& operator()(std::mt19937_64& rng) const;

 private:
  std::vector<Word> support_;
  ThresholdTable table_;
};

struct WalkSample {
  std::uint64_t seed = 0;
  std::vector<Word> increments;
  std::vector<Word> prefixes;  ///< prefixes[n] = g₁⋯gₙ reduced; prefixes[0] = ε

  std::size_t steps() const { return increments.size(); }
  /// (g, g₁, g₂, …).
  WalkSample shifted(const Word& g) const;
};

WalkSample sample_walk(const StepDistribution& mu, std::size_t steps, std::uint64_t seed);
/// Walk with the given increments (seed 0).
WalkSample walk_from(int rank, std::vector<Word> increments);

/// yₙ for the walk; requires n ≤ steps.
int tracked_base_point(const FactorSystem& sys, int y, const WalkSample& walk, std::size_t n,
                       ActionMode mode = ActionMode::Strict);
SpaceMeasure orbit_measure(const FactorSystem& sys, int y, const WalkSample& walk, std::size_t n,
                           ActionMode mode = ActionMode::Strict);

/// Greedy probe of a measure on X: the heaviest tag (lowest index on ties), then the
/// boundary probe inside it. Masses are masses in X.
struct SpaceProbe {
  int tag = 0;
  std::vector<ProbeStep> path;  ///< empty without a boundary coordinate
  Rational mass;                ///< mass of the final cell
};
SpaceProbe probe(const SpaceMeasure& m, bool has_boundary, std::size_t depth);

struct TrajectoryStep {
  std::size_t n;
  std::size_t word_length;
  SpaceProbe probe;
};

struct TrajectoryDiagnostics {
  std::uint64_t seed = 0;
  std::vector<TrajectoryStep> steps;  ///< n = 0, …, N
  std::optional<std::size_t> first_passage;  ///< first n with probe mass ≥ τ
  bool tags_constant = true;  ///< tag distribution of the orbit measure unchanged along the walk
};

struct ProximalityParams {
  std::size_t samples = 200;
  std::size_t steps = 60;
  std::size_t depth = 3;
  Rational tau = make_rational(99, 100);
  std::uint64_t seed = 0;
  ActionMode mode = ActionMode::Strict;
};

struct ProximalityReport {
  std::size_t depth = 0;
  Rational tau;
  std::vector<TrajectoryDiagnostics> trajectories;  ///< sorted by sample index

  std::size_t concentrated() const;  ///< samples with final probe mass ≥ τ
  double fraction() const;
  double tag_constancy() const;
  std::vector<std::optional<std::size_t>> first_passages() const;
  /// Rows (sample_id, n, word_length, probe_depth, probe_mass_num, probe_mass_den).
  std::string csv() const;
};

ProximalityReport proximality_diagnostic(const FactorSystem& sys, const StepDistribution& mu, int y,
                                         const ProximalityParams& params);

struct MonteCarloSummary {
  std::size_t samples = 0;
  Rational exact_mean;  ///< mean of the sampled exact values
  double mean = 0;
  double std_error = 0;  ///< sample standard deviation / √M
  std::optional<Rational> target;

  /// |mean − target| ≤ width·std_error (exact equality when std_error is 0).
  bool within(double width) const;
};

/// Mean over M walks of orbit_N(cell); the target is ν_y(cell).
MonteCarloSummary barycenter_estimate(const FactorSystem& sys, const StepDistribution& mu, int y,
                                      const SpaceSet& cell, std::size_t samples, std::size_t steps,
                                      std::uint64_t seed, ActionMode mode = ActionMode::Strict);

/// One-step conditional expectation along the walk: for |g| ≤ r,
/// lhs = Σ_h μ(h)·orbit_{(g,h)}(f), rhs = orbit_{(g)}(f).
ExactReport martingale_check(const FactorSystem& sys, const StepDistribution& mu, int y, const SpaceSet& f,
                             std::size_t radius, ActionMode mode = ActionMode::Strict);

/// Coupled estimate of (ν∨ζ)(c1 × c2) at truncation N, with y ∼ η drawn per sample.
/// target is Σ_y η(y)·ν_y(c1)·ζ_y(c2) when sys1 is relatively measure-preserving.
MonteCarloSummary joining_estimate(const FactorSystem& sys1, const FactorSystem& sys2, const StepDistribution& mu,
                                   const SpaceSet& c1, const SpaceSet& c2, std::size_t samples, std::size_t steps,
                                   std::uint64_t seed, ActionMode mode = ActionMode::Strict);

struct StructureReport {
  std::size_t instances = 0;
  std::size_t cells_compared = 0;
  std::size_t factorization_failures = 0;
  std::size_t equivariance_failures = 0;
  bool passed() const { return factorization_failures == 0 && equivariance_failures == 0; }
};

/// Sampled (y, ω, n ≤ max_steps, g ∈ supp μ): (i) the Prob(X) atom, pushed one increment at a
/// time, equals the orbit measure on the depth-d grid; (ii) g·orbit(g⁻¹y, ω, n) = orbit(y, gω, n+1).
StructureReport structure_check(const FactorSystem& sys, const StepDistribution& mu, std::size_t instances,
                                std::size_t max_steps, std::size_t depth, std::uint64_t seed,
                                ActionMode mode = ActionMode::Strict);

struct ProductBoundaryReport {
  ExactReport stationarity;
  ProximalityReport proximality;
  std::size_t factorization_checked = 0;
  std::size_t factorization_failures = 0;  ///< orbit ≠ δ_y ⊗ wₙν on the depth grid
};

/// pr₂: Poi ⊗ (Y, η) → (Y, η): exact stationarity at exact_depth, proximality over y,
/// and the factorization of the final orbit measure as δ_y ⊗ w_Nν.
ProductBoundaryReport verify_product_is_relative_boundary(const FiniteBase& base, const Measure& nu,
                                                          const StepDistribution& mu, int y,
                                                          std::size_t exact_depth,
                                                          const ProximalityParams& params);

}  // namespace relbound
