#include "relbound/induced.hpp"

#include <algorithm>
#include <map>
#include <random>

#include "relbound/errors.hpp"

namespace relbound {

SubgroupSpec even_length_subgroup(int rank) {
  return SubgroupSpec{"even-length", rank, [](const Word& w) { return w.size() % 2 == 0; },
                      {Word(rank), Word::generator(rank, 0)}};
}

void validate(const SubgroupSpec& spec, std::size_t radius) {
  if (spec.transversal.empty() || !spec.transversal.front().empty()) {
    throw UsageError("transversal must start with the identity");
  }
  for (const auto& t : spec.transversal) {
    if (t.rank() != spec.rank) throw UsageError("transversal element has the wrong rank");
  }
  if (!spec.membership(Word(spec.rank))) throw UsageError("subgroup predicate rejects the identity");
  const auto words = ball(spec.rank, radius);
  for (const auto& g : words) {
    std::size_t hits = 0;
    for (const auto& t : spec.transversal) hits += spec.membership(invert(t) * g);
    if (hits != 1) throw UsageError("transversal is not sound at " + g.str());
    if (spec.membership(g) != spec.membership(invert(g))) throw UsageError("subgroup not closed under inverse at " + g.str());
  }
  const auto small = ball(spec.rank, std::min<std::size_t>(radius, 3));
  for (const auto& g : small) {
    if (!spec.membership(g)) continue;
    for (const auto& h : small) {
      if (spec.membership(h) && !spec.membership(g * h)) {
        throw UsageError("subgroup not closed under product at " + g.str() + "·" + h.str());
      }
    }
  }
}

std::size_t coset_of(const SubgroupSpec& spec, const Word& gamma) {
  std::size_t found = spec.index();
  for (std::size_t j = 0; j < spec.index(); ++j) {
    if (!spec.membership(invert(spec.transversal[j]) * gamma)) continue;
    if (found != spec.index()) throw EvaluationError("two cosets contain " + gamma.str());
    found = j;
  }
  if (found == spec.index()) throw EvaluationError("no coset contains " + gamma.str());
  return found;
}

Word cocycle(const SubgroupSpec& spec, const Word& gamma, std::size_t i) {
  const Word& ti = spec.transversal.at(i);
  const std::size_t j = coset_of(spec, gamma * ti);
  const Word lambda = invert(invert(spec.transversal[j]) * gamma * ti);
  if (!spec.membership(lambda) || gamma * ti * lambda != spec.transversal[j]) {
    throw EvaluationError("cocycle postcondition fails at " + gamma.str());
  }
  return lambda;
}

InducedPoint induced_action(const SubgroupSpec& spec, const Word& gamma, const InducedPoint& p) {
  return {coset_of(spec, gamma * spec.transversal.at(p.coset)),
          Measure::translated(invert(cocycle(spec, gamma, p.coset)), p.measure)};
}

StepDistribution conjugate_walk(const StepDistribution& mu_lambda, const SubgroupSpec& spec, std::size_t i) {
  const Word& t = spec.transversal.at(i);
  std::map<Word, Rational> out;
  for (const auto& [s, p] : mu_lambda.weights()) {
    if (!spec.membership(s)) throw UsageError("step " + s.str() + " is not in the subgroup");
    out.emplace(t * s * invert(t), p);
  }
  if (out.size() != mu_lambda.support_size()) throw EvaluationError("conjugation merged support points");
  return StepDistribution(mu_lambda.rank(), std::move(out));
}

InducedSystem::InducedSystem(SubgroupSpec spec_, Measure nu_, StepDistribution mu_lambda_, std::vector<Rational> eta_)
    : spec(std::move(spec_)), nu(std::move(nu_)), mu_lambda(std::move(mu_lambda_)), eta(std::move(eta_)) {
  validate(spec);
  if (nu.rank() != spec.rank || mu_lambda.rank() != spec.rank) throw UsageError("rank mismatch in induced system");
  for (const auto& [s, p] : mu_lambda.weights()) {
    if (!spec.membership(s)) throw UsageError("supp μ_Λ contains " + s.str() + ", not in the subgroup");
  }
  if (eta.size() != spec.index()) throw UsageError("η needs one weight per coset");
  Rational total = 0;
  for (const auto& e : eta) {
    if (e <= 0) throw UsageError("η weight is not positive");
    total += e;
  }
  if (total != 1) throw UsageError("η weights sum to " + to_string(total));
}

InducedSystem InducedSystem::even_length_instance() {
  const auto mu = StepDistribution::simple(2);
  return InducedSystem(even_length_subgroup(2), Measure::harmonic(2), convolve(mu, mu),
                       {make_rational(1, 2), make_rational(1, 2)});
}

FiberStationarityReport verify_fiber_stationarity(const InducedSystem& sys, std::size_t i, std::size_t depth) {
  const auto words = ball(sys.spec.rank, depth);
  FiberStationarityReport report{{"lambda-stationarity", depth, {}}, {"fiber-stationarity", depth, {}}, true};
  const Measure pushed = convolve_push(sys.mu_lambda, sys.nu);
  for (const auto& w : words) {
    report.precondition.entries.push_back(
        {0, std::nullopt, SpaceSet{0, BoundarySet::cylinder(w)}, eval(pushed, w), eval(sys.nu, w)});
  }
  if (!report.precondition_holds()) return report;

  const Word& t = sys.spec.transversal.at(i);
  std::vector<std::pair<Rational, Measure>> terms;
  for (const auto& [s, p] : sys.mu_lambda.weights()) {
    const InducedPoint moved = induced_action(sys.spec, t * s * invert(t), {i, sys.nu});
    report.coset_fixed = report.coset_fixed && moved.coset == i;
    terms.emplace_back(p, moved.measure);
  }
  for (const auto& w : words) {
    Rational lhs = 0;
    for (const auto& [p, m] : terms) lhs += p * eval(m, w);
    report.fiber.entries.push_back(
        {static_cast<int>(i), std::nullopt, SpaceSet{0, BoundarySet::cylinder(w)}, std::move(lhs), eval(sys.nu, w)});
  }
  return report;
}

ProjectionBoundaryReport verify_projection_boundary(const InducedSystem& sys, std::size_t i, std::size_t exact_depth,
                                                    const ProximalityParams& params) {
  if (params.tau <= 0 || params.tau >= 1) throw UsageError("tau must lie in (0, 1)");
  if (params.depth == 0) throw UsageError("probe depth must be positive");
  ProjectionBoundaryReport report{verify_fiber_stationarity(sys, i, exact_depth), {params.depth, params.tau, {}}, 0, 0};
  const StepDistribution tilde = conjugate_walk(sys.mu_lambda, sys.spec, i);
  const InducedPoint start{i, sys.nu};
  for (std::size_t s = 0; s < params.samples; ++s) {
    const auto walk = sample_walk(tilde, params.steps, derive_seed(params.seed, i, s));
    TrajectoryDiagnostics diag;
    diag.seed = walk.seed;
    for (std::size_t n = 0; n <= params.steps; ++n) {
      const InducedPoint p = induced_action(sys.spec, walk.prefixes[n], start);
      diag.tags_constant = diag.tags_constant && p.coset == i;
      SpaceProbe pr{static_cast<int>(p.coset), concentration_probe(p.measure, params.depth), 0};
      pr.mass = pr.path.back().mass;
      if (!diag.first_passage && pr.mass >= params.tau) diag.first_passage = n;
      diag.steps.push_back({n, walk.prefixes[n].size(), std::move(pr)});
    }
    report.proximality.trajectories.push_back(std::move(diag));

    // γ·t_iΛ against the image coset, decided by the membership predicate.
    std::mt19937_64 rng(derive_seed(params.seed, sys.spec.index() + i, s));
    const Word gamma = walk.prefixes.back() * sample_walk(StepDistribution::simple(sys.spec.rank), 3, rng()).prefixes.back();
    const InducedPoint image = induced_action(sys.spec, gamma, start);
    ++report.equivariance_checked;
    const Word probe_word = invert(sys.spec.transversal[image.coset]) * gamma * sys.spec.transversal[i];
    report.equivariance_failures += !sys.spec.membership(probe_word);
  }
  return report;
}

}  // namespace relbound
