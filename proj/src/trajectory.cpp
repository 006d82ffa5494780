#include "relbound/trajectory.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "relbound/errors.hpp"

namespace relbound {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t y_index, std::uint64_t sample_index) {
  return splitmix64(splitmix64(splitmix64(master) ^ y_index) ^ sample_index);
}

// ---------------------------------------------------------------------------
// Sampling

ThresholdTable::ThresholdTable(const std::vector<Rational>& probabilities) {
  if (probabilities.empty()) throw UsageError("empty distribution");
  Rational cum = 0;
  mpz_class two64;
  mpz_ui_pow_ui(two64.get_mpz_t(), 2, 64);
  for (const auto& p : probabilities) {
    if (p <= 0) throw UsageError("distribution weight is not positive");
    cum += p;
    mpz_class t;
    mpz_fdiv_q(t.get_mpz_t(), mpz_class(cum.get_num() * two64).get_mpz_t(), cum.get_den().get_mpz_t());
    if (t > two64) throw UsageError("distribution weights exceed 1");
    static_assert(sizeof(unsigned long) == 8);
    const mpz_class high = t >> 64;
    const mpz_class low = t - (high << 64);
    thresholds_.push_back((static_cast<unsigned __int128>(high.get_ui()) << 64) | low.get_ui());
  }
  if (cum != 1) throw UsageError("distribution weights sum to " + to_string(cum));
}

std::size_t ThresholdTable::operator()(std::uint64_t u) const {
  const auto it = std::upper_bound(thresholds_.begin(), thresholds_.end(), static_cast<unsigned __int128>(u));
  return static_cast<std::size_t>(it - thresholds_.begin());
}

namespace {

std::vector<Rational> weights_of(const StepDistribution& mu) {
  std::vector<Rational> w;
  for (const auto& [g, p] : mu.weights()) w.push_back(p);
  return w;
}

std::vector<Word> support_of(const StepDistribution& mu) {
  std::vector<Word> s;
  for (const auto& [g, p] : mu.weights()) s.push_back(g);
  return s;
}

}  // namespace

StepSampler::StepSampler(const StepDistribution& mu) : support_(support_of(mu)), table_(weights_of(mu)) {}

const Word& StepSampler::operator()(std::mt19937_64& rng) const { return support_[table_(rng())]; }

WalkSample WalkSample::shifted(const Word& g) const {
  std::vector<Word> inc{g};
  inc.insert(inc.end(), increments.begin(), increments.end());
  WalkSample w = walk_from(g.rank(), std::move(inc));
  w.seed = seed;
  return w;
}

WalkSample walk_from(int rank, std::vector<Word> increments) {
  WalkSample w;
  w.prefixes.reserve(increments.size() + 1);
  w.prefixes.emplace_back(rank);
  for (const auto& g : increments) {
    if (g.rank() != rank) throw UsageError("walk increment has the wrong rank");
    w.prefixes.push_back(w.prefixes.back() * g);
  }
  w.increments = std::move(increments);
  return w;
}

WalkSample sample_walk(const StepDistribution& mu, std::size_t steps, std::uint64_t seed) {
  const StepSampler sampler(mu);
  std::mt19937_64 rng(seed);
  std::vector<Word> inc;
  inc.reserve(steps);
  for (std::size_t i = 0; i < steps; ++i) inc.push_back(sampler(rng));
  WalkSample w = walk_from(mu.rank(), std::move(inc));
  w.seed = seed;
  return w;
}

// ---------------------------------------------------------------------------
// Orbit measures

namespace {

// y₀, y₁, …, y_n.
std::vector<int> tracked_points(const FactorSystem& sys, int y, const WalkSample& walk, std::size_t n) {
  if (n > walk.steps()) throw UsageError("step index beyond the walk length");
  if (y < 0 || y >= sys.base().size()) throw UsageError("base label out of range");
  std::vector<int> pts{y};
  for (std::size_t i = 0; i < n; ++i) pts.push_back(sys.base().action().act(invert(walk.increments[i]), pts.back()));
  return pts;
}

SpaceMeasure orbit_at(const FactorSystem& sys, const WalkSample& walk, std::size_t n, int y_n) {
  return translate(walk.prefixes[n], sys.fiber_measure(y_n), sys.space().tags);
}

bool agree_on(const SpaceMeasure& a, const SpaceMeasure& b, const std::vector<SpaceSet>& grid) {
  return std::all_of(grid.begin(), grid.end(), [&](const SpaceSet& c) { return eval(a, c) == eval(b, c); });
}

}  // namespace

int tracked_base_point(const FactorSystem& sys, int y, const WalkSample& walk, std::size_t n, ActionMode mode) {
  sys.base().action().require(mode);
  return tracked_points(sys, y, walk, n).back();
}

SpaceMeasure orbit_measure(const FactorSystem& sys, int y, const WalkSample& walk, std::size_t n, ActionMode mode) {
  return orbit_at(sys, walk, n, tracked_base_point(sys, y, walk, n, mode));
}

// ---------------------------------------------------------------------------
// Proximality

SpaceProbe probe(const SpaceMeasure& m, bool has_boundary, std::size_t depth) {
  const SpaceMeasure::Part* best = nullptr;
  for (const auto& p : m.parts()) {
    if (!best || p.weight > best->weight) best = &p;
  }
  SpaceProbe out{best->tag, {}, best->weight};
  if (has_boundary && best->boundary) {
    out.path = concentration_probe(*best->boundary, depth);
    for (auto& step : out.path) step.mass *= best->weight;
    out.mass = out.path.back().mass;
  }
  return out;
}

std::size_t ProximalityReport::concentrated() const {
  return static_cast<std::size_t>(std::count_if(trajectories.begin(), trajectories.end(), [&](const auto& t) {
    return t.steps.back().probe.mass >= tau;
  }));
}

double ProximalityReport::fraction() const {
  return trajectories.empty() ? 0.0 : static_cast<double>(concentrated()) / static_cast<double>(trajectories.size());
}

double ProximalityReport::tag_constancy() const {
  if (trajectories.empty()) return 0.0;
  const auto n = std::count_if(trajectories.begin(), trajectories.end(), [](const auto& t) { return t.tags_constant; });
  return static_cast<double>(n) / static_cast<double>(trajectories.size());
}

std::vector<std::optional<std::size_t>> ProximalityReport::first_passages() const {
  std::vector<std::optional<std::size_t>> out;
  for (const auto& t : trajectories) out.push_back(t.first_passage);
  return out;
}

std::string ProximalityReport::csv() const {
  std::ostringstream os;
  os << "sample_id,n,word_length,probe_depth,probe_mass_num,probe_mass_den\n";
  for (std::size_t s = 0; s < trajectories.size(); ++s) {
    for (const auto& step : trajectories[s].steps) {
      os << s << ',' << step.n << ',' << step.word_length << ',' << depth << ',' << step.probe.mass.get_num().get_str()
         << ',' << step.probe.mass.get_den().get_str() << '\n';
    }
  }
  return os.str();
}

ProximalityReport proximality_diagnostic(const FactorSystem& sys, const StepDistribution& mu, int y,
                                         const ProximalityParams& params) {
  if (params.tau <= 0 || params.tau >= 1) throw UsageError("tau must lie in (0, 1)");
  if (params.depth == 0) throw UsageError("probe depth must be positive");
  if (mu.rank() != sys.rank()) throw UsageError("rank mismatch between μ and the factor system");
  sys.base().action().require(params.mode);
  ProximalityReport report{params.depth, params.tau, {}};
  report.trajectories.reserve(params.samples);
  for (std::size_t s = 0; s < params.samples; ++s) {
    const auto walk = sample_walk(mu, params.steps, derive_seed(params.seed, static_cast<std::uint64_t>(y), s));
    const auto pts = tracked_points(sys, y, walk, params.steps);
    TrajectoryDiagnostics diag;
    diag.seed = walk.seed;
    std::vector<std::pair<int, Rational>> initial_tags;
    for (std::size_t n = 0; n <= params.steps; ++n) {
      const SpaceMeasure orbit = orbit_at(sys, walk, n, pts[n]);
      std::vector<std::pair<int, Rational>> tags;
      for (const auto& p : orbit.parts()) tags.emplace_back(p.tag, p.weight);
      if (n == 0) initial_tags = tags;
      diag.tags_constant = diag.tags_constant && tags == initial_tags;
      diag.steps.push_back({n, walk.prefixes[n].size(), probe(orbit, sys.space().has_boundary, params.depth)});
      if (!diag.first_passage && diag.steps.back().probe.mass >= params.tau) diag.first_passage = n;
    }
    report.trajectories.push_back(std::move(diag));
  }
  return report;
}

// ---------------------------------------------------------------------------
// Monte Carlo means

bool MonteCarloSummary::within(double width) const {
  if (!target) return false;
  if (std_error == 0) return exact_mean == *target;
  return std::fabs(mean - target->get_d()) <= width * std_error;
}

namespace {

MonteCarloSummary summarize(const std::vector<Rational>& values) {
  MonteCarloSummary out;
  out.samples = values.size();
  if (values.empty()) return out;
  Rational sum = 0;
  Rational sum_sq = 0;
  for (const auto& v : values) {
    sum += v;
    sum_sq += v * v;
  }
  const Rational m(static_cast<long>(values.size()));
  out.exact_mean = sum / m;
  out.mean = out.exact_mean.get_d();
  if (values.size() > 1) {
    const Rational var = (sum_sq - m * out.exact_mean * out.exact_mean) / (m - 1);
    out.std_error = std::sqrt(var.get_d() / m.get_d());
  }
  return out;
}

}  // namespace

MonteCarloSummary barycenter_estimate(const FactorSystem& sys, const StepDistribution& mu, int y,
                                      const SpaceSet& cell, std::size_t samples, std::size_t steps,
                                      std::uint64_t seed, ActionMode mode) {
  if (mu.rank() != sys.rank()) throw UsageError("rank mismatch between μ and the factor system");
  sys.base().action().require(mode);
  std::vector<Rational> values;
  values.reserve(samples);
  for (std::size_t s = 0; s < samples; ++s) {
    const auto walk = sample_walk(mu, steps, derive_seed(seed, static_cast<std::uint64_t>(y), s));
    values.push_back(eval(orbit_at(sys, walk, steps, tracked_points(sys, y, walk, steps).back()), cell));
  }
  auto out = summarize(values);
  out.target = eval(sys.fiber_measure(y), cell);
  return out;
}

ExactReport martingale_check(const FactorSystem& sys, const StepDistribution& mu, int y, const SpaceSet& f,
                             std::size_t radius, ActionMode mode) {
  if (mu.rank() != sys.rank()) throw UsageError("rank mismatch between μ and the factor system");
  sys.base().action().require(mode);
  ExactReport report{"martingale", radius, {}};
  const auto value = [&](const WalkSample& walk) {
    return eval(orbit_at(sys, walk, walk.steps(), tracked_points(sys, y, walk, walk.steps()).back()), f);
  };
  for (const auto& g : ball(sys.rank(), radius)) {
    Rational lhs = 0;
    for (const auto& [h, p] : mu.weights()) lhs += p * value(walk_from(sys.rank(), {g, h}));
    report.entries.push_back({y, g, f, std::move(lhs), value(walk_from(sys.rank(), {g}))});
  }
  return report;
}

MonteCarloSummary joining_estimate(const FactorSystem& sys1, const FactorSystem& sys2, const StepDistribution& mu,
                                   const SpaceSet& c1, const SpaceSet& c2, std::size_t samples, std::size_t steps,
                                   std::uint64_t seed, ActionMode mode) {
  if (sys1.base().action().labels() != sys2.base().action().labels() || sys1.base().eta() != sys2.base().eta()) {
    throw UsageError("joined systems must share base labels and η");
  }
  if (mu.rank() != sys1.rank() || mu.rank() != sys2.rank()) throw UsageError("rank mismatch in joining");
  sys1.base().action().require(mode);
  sys2.base().action().require(mode);
  const ThresholdTable base_draw(sys1.base().eta());
  const StepSampler sampler(mu);
  std::vector<Rational> values;
  values.reserve(samples);
  for (std::size_t s = 0; s < samples; ++s) {
    std::mt19937_64 rng(derive_seed(seed, 0, s));
    const int y = static_cast<int>(base_draw(rng()));
    std::vector<Word> inc;
    for (std::size_t i = 0; i < steps; ++i) inc.push_back(sampler(rng));
    const WalkSample walk = walk_from(mu.rank(), std::move(inc));
    const Rational v1 = eval(orbit_at(sys1, walk, steps, tracked_points(sys1, y, walk, steps).back()), c1);
    const Rational v2 = v1 == 0 ? Rational(0)
                                : eval(orbit_at(sys2, walk, steps, tracked_points(sys2, y, walk, steps).back()), c2);
    values.push_back(v1 * v2);
  }
  auto out = summarize(values);
  if (check_relatively_measure_preserving(sys1, 2, 2, mode).holds) {
    Rational exact = 0;
    for (int y = 0; y < sys1.base().size(); ++y) {
      exact += sys1.base().eta()[static_cast<std::size_t>(y)] * eval(sys1.fiber_measure(y), c1) *
               eval(sys2.fiber_measure(y), c2);
    }
    out.target = exact;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Structure and product checks

StructureReport structure_check(const FactorSystem& sys, const StepDistribution& mu, std::size_t instances,
                                std::size_t max_steps, std::size_t depth, std::uint64_t seed, ActionMode mode) {
  if (mu.rank() != sys.rank()) throw UsageError("rank mismatch between μ and the factor system");
  sys.base().action().require(mode);
  const auto grid = cells(sys.space(), depth);
  const auto& tags = sys.space().tags;
  const StepSampler sampler(mu);
  StructureReport report;
  for (std::size_t i = 0; i < instances; ++i) {
    std::mt19937_64 rng(derive_seed(seed, 0, i));
    const int y = static_cast<int>(std::uniform_int_distribution<int>(0, sys.base().size() - 1)(rng));
    const std::size_t n = std::uniform_int_distribution<std::size_t>(0, max_steps)(rng);
    const Word g = sampler(rng);
    std::vector<Word> inc;
    for (std::size_t k = 0; k < n; ++k) inc.push_back(sampler(rng));
    const WalkSample walk = walk_from(sys.rank(), std::move(inc));

    // (i) atom of ξ pushed increment by increment vs the orbit measure.
    const auto pts = tracked_points(sys, y, walk, n);
    SpaceMeasure atom = sys.fiber_measure(pts[n]);
    for (std::size_t k = n; k-- > 0;) atom = translate(walk.increments[k], atom, tags);
    report.factorization_failures += !agree_on(atom, orbit_at(sys, walk, n, pts[n]), grid);

    // (ii) equivariance.
    const int shifted_y = sys.base().action().act(invert(g), y);
    const SpaceMeasure lhs = translate(g, orbit_at(sys, walk, n, tracked_points(sys, shifted_y, walk, n).back()), tags);
    const WalkSample gw = walk.shifted(g);
    const SpaceMeasure rhs = orbit_at(sys, gw, n + 1, tracked_points(sys, y, gw, n + 1).back());
    report.equivariance_failures += !agree_on(lhs, rhs, grid);

    report.cells_compared += 2 * grid.size();
    ++report.instances;
  }
  return report;
}

ProductBoundaryReport verify_product_is_relative_boundary(const FiniteBase& base, const Measure& nu,
                                                          const StepDistribution& mu, int y,
                                                          std::size_t exact_depth,
                                                          const ProximalityParams& params) {
  const FactorSystem sys = product_system(base, nu);
  ProductBoundaryReport report{check_relative_stationarity(sys, mu, exact_depth), {}, 0, 0};
  report.proximality = proximality_diagnostic(sys, mu, y, params);
  const auto grid = cells(sys.space(), params.depth);
  for (std::size_t s = 0; s < params.samples; ++s) {
    const auto walk = sample_walk(mu, params.steps, derive_seed(params.seed, static_cast<std::uint64_t>(y), s));
    const SpaceMeasure orbit = orbit_measure(sys, y, walk, params.steps);
    const SpaceMeasure expected({{y, Rational(1), Measure::translated(walk.prefixes.back(), nu)}});
    ++report.factorization_checked;
    report.factorization_failures += !agree_on(orbit, expected, grid);
  }
  return report;
}

}  // namespace relbound
