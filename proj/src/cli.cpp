#include "relbound/cli.hpp"

#include <algorithm>
#include <cerrno>
#include <chrono>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <stdexcept>

#include "CLI11.hpp"
#include "relbound/errors.hpp"
#include "relbound/factor.hpp"
#include "relbound/induced.hpp"
#include "relbound/trajectory.hpp"

namespace relbound::cli {

namespace {

const std::vector<std::string> kOutputKeys{"out", "csv"};

}  // namespace

const std::vector<CatalogEntry>& catalog() {
  static const std::vector<CatalogEntry> entries{
      {"nonexample", "Relative stationarity: a non-example",
       "two-point base with a generator table; reproduces the failure of relative stationarity at [ab]",
       {{"convention", "strict"}, {"action", "generator-level"}, {"depth", "3"}}},
      {"stationarity", "Relative stationarity: definition",
       "exact relative stationarity check on every cell up to the given depth",
       {{"system", "one-point"}, {"k", "2"}, {"depth", "6"}, {"action", "strict"}}},
      {"proximality", "Relative proximality: definition",
       "concentration of orbit measures along sampled walks",
       {{"system", "one-point"}, {"k", "2"}, {"y", ""}, {"M", "200"}, {"N", "60"}, {"depth", "3"},
        {"tau", "0.99"}, {"seed", "1"}, {"min-fraction", "0.9"}, {"action", "strict"}}},
      {"barycenter", "Relative proximality: existence and barycenter theorem",
       "Monte Carlo mean of orbit measures against the fiber measure",
       {{"system", "one-point"}, {"k", "2"}, {"y", ""}, {"cylinder", "a"}, {"M", "2000"}, {"N", "40"},
        {"seed", "1"}, {"sigma", "4"}, {"action", "strict"}}},
      {"martingale", "Relative proximality: existence and barycenter theorem, martingale step",
       "exact one-step conditional expectation identity on a ball",
       {{"system", "product"}, {"k", "2"}, {"y", ""}, {"cylinder", "a"}, {"radius", "3"}, {"action", "strict"}}},
      {"joining", "Relative structure theorem: relative joinings",
       "coupled joining estimates against the product formula and the diagonal",
       {{"k", "2"}, {"cylinder", "a"}, {"cylinder2", "b"}, {"M", "2000"}, {"N", "40"}, {"seed", "1"},
        {"sigma", "4"}, {"diagonal-bound", "0.01"}}},
      {"induced", "Relative boundaries: induced action from a finite-index subgroup",
       "cocycle, induced action, fiber stationarity and the coset projection for even-length words in F_2",
       {{"coset", "1"}, {"depth", "4"}, {"triples", "1000"}, {"pairs", "500"}, {"M", "200"}, {"N", "40"},
        {"probe-depth", "3"}, {"tau", "0.99"}, {"seed", "1"}, {"min-fraction", "0.9"}}},
      {"poisson-product", "The relative Poisson boundary: a construction",
       "product with the Poisson boundary over Z/2: exact stationarity, proximality and factorization",
       {{"k", "2"}, {"y", ""}, {"depth", "4"}, {"M", "200"}, {"N", "60"}, {"probe-depth", "3"}, {"tau", "0.99"},
        {"seed", "1"}, {"min-fraction", "0.9"}}},
      {"structure", "Relative structure theorem",
       "sampled factorization and equivariance identities for the joined disintegration",
       {{"system", "product"}, {"k", "2"}, {"M", "500"}, {"N", "10"}, {"depth", "3"}, {"seed", "1"},
        {"action", "strict"}}},
  };
  return entries;
}

const CatalogEntry& catalog_entry(const std::string& name) {
  for (const auto& e : catalog()) {
    if (e.name == name) return e;
  }
  throw UsageError("unknown experiment \"" + name + "\" (see `relbound list`)");
}

const std::vector<std::string>& known_keys() {
  static const std::vector<std::string> keys = [] {
    std::set<std::string> all(kOutputKeys.begin(), kOutputKeys.end());
    for (const auto& e : catalog()) {
      for (const auto& [k, v] : e.defaults) all.insert(k);
    }
    return std::vector<std::string>(all.begin(), all.end());
  }();
  return keys;
}

// ---------------------------------------------------------------------------
// Settings

namespace {

class Settings {
 public:
  Settings(const ExperimentConfig& config, const CatalogEntry& entry) : entry_(entry) {
    for (const auto& [k, v] : entry.defaults) values_[k] = v;
    for (const auto& [k, v] : config.values) {
      if (std::find(kOutputKeys.begin(), kOutputKeys.end(), k) != kOutputKeys.end()) continue;
      if (!values_.count(k)) {
        if (std::find(known_keys().begin(), known_keys().end(), k) == known_keys().end()) {
          throw UsageError("unknown key \"" + k + "\"");
        }
        throw UsageError("key \"" + k + "\" does not apply to experiment " + entry.name);
      }
      values_[k] = v;
    }
  }

  const std::string& text(const std::string& key) const { return values_.at(key); }

  std::size_t count(const std::string& key, std::size_t lo, std::size_t hi) {
    const std::string& s = text(key);
    std::size_t pos = 0;
    unsigned long long v = 0;
    try {
      if (s.empty() || s[0] == '-') throw std::invalid_argument(s);
      v = std::stoull(s, &pos);
    } catch (const std::exception&) {
      throw UsageError("key \"" + key + "\": expected a non-negative integer, got \"" + s + "\"");
    }
    if (pos != s.size()) throw UsageError("key \"" + key + "\": expected a non-negative integer, got \"" + s + "\"");
    if (v < lo || v > hi) {
      throw UsageError("key \"" + key + "\": " + s + " outside [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
    }
    echo_[key] = v;
    return static_cast<std::size_t>(v);
  }

  std::uint64_t seed() {
    const std::string& s = text("seed");
    std::size_t pos = 0;
    std::uint64_t v = 0;
    try {
      if (s.empty() || s[0] == '-') throw std::invalid_argument(s);
      v = std::stoull(s, &pos);
    } catch (const std::exception&) {
      throw UsageError("key \"seed\": expected an unsigned 64-bit integer, got \"" + s + "\"");
    }
    if (pos != s.size()) throw UsageError("key \"seed\": expected an unsigned 64-bit integer, got \"" + s + "\"");
    echo_["seed"] = v;
    return v;
  }

  Rational rational(const std::string& key, bool open_unit) {
    Rational r;
    try {
      r = parse_rational(text(key));
    } catch (const UsageError& e) {
      throw UsageError("key \"" + key + "\": " + e.what());
    }
    if (open_unit && (r <= 0 || r >= 1)) throw UsageError("key \"" + key + "\": must lie in (0, 1)");
    if (!open_unit && r <= 0) throw UsageError("key \"" + key + "\": must be positive");
    echo_[key] = to_string(r);
    return r;
  }

  std::string choice(const std::string& key, const std::vector<std::string>& allowed,
                     const std::map<std::string, std::string>& aliases = {}) {
    std::string s = text(key);
    if (auto it = aliases.find(s); it != aliases.end()) s = it->second;
    if (std::find(allowed.begin(), allowed.end(), s) == allowed.end()) {
      std::string list;
      for (const auto& a : allowed) list += (list.empty() ? "" : ", ") + a;
      throw UsageError("key \"" + key + "\": \"" + s + "\" is not one of " + list);
    }
    echo_[key] = s;
    return s;
  }

  ActionMode action() { return choice("action", {"strict", "generator-level"}) == "strict" ? ActionMode::Strict
                                                                                           : ActionMode::GeneratorLevel; }

  int rank() { return static_cast<int>(count("k", 2, kMaxRank)); }

  Word word(const std::string& key, int rank) {
    try {
      const Word w = Word::parse(text(key), rank);
      echo_[key] = w.str();
      return w;
    } catch (const UsageError& e) {
      throw UsageError("key \"" + key + "\": " + e.what());
    }
  }

  /// Echo of the resolved settings in catalog order.
  Json echo() const {
    Json j = Json::object();
    for (const auto& [k, v] : entry_.defaults) {
      auto it = echo_.find(k);
      j[k] = it != echo_.end() ? it->second : Json(values_.at(k));
    }
    return j;
  }

  void set_echo(const std::string& key, Json v) { echo_[key] = std::move(v); }

 private:
  const CatalogEntry& entry_;
  std::map<std::string, std::string> values_;
  std::map<std::string, Json> echo_;
};

constexpr std::size_t kMaxDepth = 8;
constexpr std::size_t kMaxRadius = 4;
constexpr std::size_t kMaxSamples = 1000000;
constexpr std::size_t kMaxSteps = 100000;

FactorSystem build_system(const std::string& name, int rank) {
  if (name == "one-point") return one_point_system(Measure::harmonic(rank));
  if (name == "product") return product_system(FiniteBase::uniform(FiniteAction::flip(rank)), Measure::harmonic(rank));
  if (name == "identity") return identity_system(FiniteBase::uniform(FiniteAction::flip(rank)));
  if (rank != 2) throw UsageError("key \"k\": the non-example lives on F_2");
  return nonexample_system();
}

const std::vector<std::string> kSystems{"one-point", "product", "identity", "nonexample"};

int resolve_label(Settings& s, const FactorSystem& sys) {
  const std::string& label = s.text("y");
  const int y = label.empty() ? 0 : sys.base().action().index_of(label);
  s.set_echo("y", sys.base().action().label(y));
  return y;
}

// Cell [w] in the slice over y (tag y when the tags are the base itself, the single tag otherwise).
SpaceSet resolve_cell(Settings& s, const std::string& key, const FactorSystem& sys, int y) {
  const Word w = s.word(key, sys.rank());
  const int tag = sys.space().tags.labels() == sys.base().action().labels() ? y : 0;
  if (!sys.space().has_boundary && !w.empty()) throw UsageError("key \"" + key + "\": this system has no boundary coordinate");
  return SpaceSet{tag, BoundarySet::cylinder(w)};
}

using Namer = std::function<std::string(const SpaceSet&)>;
using LabelNamer = std::function<std::string(int)>;

Json residual_json(const Residual& r, const std::string& cell, const std::string& label) {
  Json j;
  j["label"] = label;
  j["element"] = r.element ? Json(r.element->str()) : Json(nullptr);
  j["cell"] = cell;
  j["lhs"] = to_string(r.lhs);
  j["rhs"] = to_string(r.rhs);
  j["residual"] = to_string(r.difference());
  return j;
}

Json check_json(const ExactReport& rep, const Namer& cell_name, const LabelNamer& label_name) {
  Json j;
  j["check"] = rep.check;
  j["depth"] = rep.depth;
  j["checked"] = rep.checked();
  j["residual_count"] = rep.residual_count();
  j["max_residual"] = to_string(rep.max_residual());
  Json w = Json::array();
  for (const auto& r : rep.witnesses(5)) w.push_back(residual_json(r, cell_name(r.cell), label_name(r.label)));
  j["witnesses"] = std::move(w);
  return j;
}

Json check_json(const ExactReport& rep, const FactorSystem& sys) {
  return check_json(
      rep, [&sys](const SpaceSet& c) { return c.str(sys.space()); },
      [&sys](int y) { return sys.base().action().label(y); });
}

std::string boundary_name(const SpaceSet& c) { return c.set.str(); }
std::string coset_name(int i) { return "coset " + std::to_string(i); }

Json mc_json(const MonteCarloSummary& m, std::size_t steps, double sigma) {
  Json j;
  j["samples"] = m.samples;
  j["steps"] = steps;
  j["mean"] = m.mean;
  j["stderr"] = m.std_error;
  j["target"] = m.target ? Json(to_string(*m.target)) : Json(nullptr);
  j["target_value"] = m.target ? Json(m.target->get_d()) : Json(nullptr);
  j["band_sigma"] = sigma;
  j["within_band"] = m.target ? Json(m.within(sigma)) : Json(nullptr);
  return j;
}

Json proximality_json(const ProximalityReport& rep, const Rational& min_fraction) {
  Json j;
  j["samples"] = rep.trajectories.size();
  j["steps"] = rep.trajectories.empty() ? 0 : rep.trajectories.front().steps.size() - 1;
  j["probe_depth"] = rep.depth;
  j["tau"] = to_string(rep.tau);
  j["concentrated"] = rep.concentrated();
  j["fraction"] = rep.fraction();
  j["min_fraction"] = to_string(min_fraction);
  j["coordinate_constancy"] = rep.tag_constancy();
  Json fp = Json::array();
  std::size_t reached = 0;
  for (const auto& f : rep.first_passages()) {
    fp.push_back(f ? Json(*f) : Json(nullptr));
    reached += f.has_value();
  }
  j["first_passage_reached"] = reached;
  j["first_passage"] = std::move(fp);
  return j;
}

bool proximal_enough(const ProximalityReport& rep, const Rational& min_fraction) {
  return make_rational(static_cast<long>(rep.concentrated()),
                       static_cast<long>(std::max<std::size_t>(rep.trajectories.size(), 1))) >= min_fraction &&
         rep.tag_constancy() == 1.0;
}

Word random_word(std::mt19937_64& rng, int rank, std::size_t max_len) {
  const std::size_t len = std::uniform_int_distribution<std::size_t>(0, max_len)(rng);
  std::uniform_int_distribution<int> letter(0, 2 * rank - 1);
  std::vector<Letter> letters;
  while (letters.size() < len) {
    const int c = letter(rng);
    const Letter l(c / 2, c % 2 == 1);
    if (!letters.empty() && letters.back() == l.inverse()) continue;
    letters.push_back(l);
  }
  return Word(rank, std::move(letters));
}

// ---------------------------------------------------------------------------
// Experiments

Outcome nonexample(Settings& s) {
  const std::string convention = s.choice("convention", {"strict", "paper-term-list"}, {{"term-list", "paper-term-list"}});
  const ActionMode mode = s.action();
  const std::size_t depth = s.count("depth", 2, kMaxDepth);
  const FactorSystem sys = nonexample_system();
  const auto comp = nonexample_terms(convention == "strict" ? Convention::Strict : Convention::PaperTermList);
  const auto generic = check_relative_stationarity(sys, StepDistribution::simple(2), depth, mode);

  Outcome out;
  Json& r = out.record;
  r["cylinder"] = "[ab]";
  r["label"] = "z1";
  Json terms = Json::array();
  for (const auto& t : comp.terms) {
    terms.push_back({{"g", t.g.str()}, {"source_label", sys.base().action().label(t.label)}, {"set", t.set.str()},
                     {"value", to_string(t.value)}});
  }
  r["terms"] = std::move(terms);
  r["four_lhs"] = to_string(comp.four_lhs);
  r["four_rhs"] = to_string(comp.four_rhs);
  r["lhs"] = to_string(Rational(comp.four_lhs / 4));
  r["rhs"] = to_string(Rational(comp.four_rhs / 4));
  r["residual"] = to_string(comp.residual());

  bool reproduced = comp.residual() != 0 && !generic.passed();
  if (convention == "paper-term-list") {
    reproduced = reproduced && comp.four_lhs == make_rational(5, 18) && comp.four_rhs == make_rational(2, 3);
  } else {
    const SpaceSet ab{0, BoundarySet::cylinder(Word::parse("ab", 2))};
    for (const auto& e : generic.entries) {
      if (e.label == 0 && e.cell == ab) reproduced = reproduced && 4 * e.lhs == comp.four_lhs && 4 * e.rhs == comp.four_rhs;
    }
  }
  r["verdict"] = comp.residual() != 0 ? "not relatively μ-stationary" : "relatively μ-stationary";
  r["status"] = reproduced ? "non-stationarity reproduced" : "non-stationarity not reproduced";
  r["checks"] = Json::array({check_json(generic, sys)});
  r["passed"] = reproduced;
  out.exit_code = reproduced ? 0 : 1;
  return out;
}

Outcome stationarity(Settings& s) {
  const std::string name = s.choice("system", kSystems);
  const int rank = s.rank();
  const std::size_t depth = s.count("depth", 0, kMaxDepth);
  const ActionMode mode = s.action();
  const FactorSystem sys = build_system(name, rank);
  const auto rep = check_relative_stationarity(sys, StepDistribution::simple(rank), depth, mode);
  Outcome out;
  out.record["checks"] = Json::array({check_json(rep, sys)});
  out.record["verdict"] = rep.passed() ? "relatively μ-stationary" : "not relatively μ-stationary";
  out.record["passed"] = rep.passed();
  out.exit_code = rep.passed() ? 0 : 1;
  return out;
}

Outcome proximality(Settings& s) {
  const std::string name = s.choice("system", kSystems);
  const int rank = s.rank();
  const FactorSystem sys = build_system(name, rank);
  const int y = resolve_label(s, sys);
  ProximalityParams p;
  p.samples = s.count("M", 1, kMaxSamples);
  p.steps = s.count("N", 0, kMaxSteps);
  p.depth = s.count("depth", 1, kMaxDepth);
  p.tau = s.rational("tau", true);
  p.seed = s.seed();
  p.mode = s.action();
  const Rational min_fraction = s.rational("min-fraction", false);
  const auto rep = proximality_diagnostic(sys, StepDistribution::simple(rank), y, p);
  const bool ok = proximal_enough(rep, min_fraction);
  Outcome out;
  out.record["proximality"] = proximality_json(rep, min_fraction);
  out.record["verdict"] = ok ? "orbit measures concentrate" : "concentration below threshold";
  out.record["passed"] = ok;
  out.csv = rep.csv();
  out.exit_code = ok ? 0 : 1;
  return out;
}

Outcome barycenter(Settings& s) {
  const std::string name = s.choice("system", kSystems);
  const int rank = s.rank();
  const FactorSystem sys = build_system(name, rank);
  const int y = resolve_label(s, sys);
  const SpaceSet cell = resolve_cell(s, "cylinder", sys, y);
  const std::size_t m = s.count("M", 1, kMaxSamples);
  const std::size_t n = s.count("N", 0, kMaxSteps);
  const std::uint64_t seed = s.seed();
  const double sigma = s.rational("sigma", false).get_d();
  const ActionMode mode = s.action();
  const auto est = barycenter_estimate(sys, StepDistribution::simple(rank), y, cell, m, n, seed, mode);
  Outcome out;
  out.record["cell"] = cell.str(sys.space());
  out.record["estimate"] = mc_json(est, n, sigma);
  if (name == "nonexample") {
    out.record["verdict"] = "informational: the system is not relatively μ-stationary";
    out.record["passed"] = true;
    return out;
  }
  const bool ok = est.within(sigma);
  out.record["verdict"] = ok ? "barycenter equation within band" : "barycenter equation outside band";
  out.record["passed"] = ok;
  out.exit_code = ok ? 0 : 1;
  return out;
}

Outcome martingale(Settings& s) {
  const std::string name = s.choice("system", kSystems);
  const int rank = s.rank();
  const FactorSystem sys = build_system(name, rank);
  const int y = resolve_label(s, sys);
  const SpaceSet f = resolve_cell(s, "cylinder", sys, y);
  const std::size_t radius = s.count("radius", 0, kMaxRadius);
  const ActionMode mode = s.action();
  const auto mu = StepDistribution::simple(rank);
  const auto walk = martingale_check(sys, mu, y, f, radius, mode);
  const auto transform = check_harmonicity(sys, mu, y, f, radius, mode);
  bool agree = walk.entries.size() == transform.entries.size();
  for (std::size_t i = 0; agree && i < walk.entries.size(); ++i) {
    agree = walk.entries[i].lhs == transform.entries[i].lhs && walk.entries[i].rhs == transform.entries[i].rhs;
  }
  Outcome out;
  out.record["cell"] = f.str(sys.space());
  out.record["checks"] = Json::array({check_json(walk, sys), check_json(transform, sys)});
  out.record["routes_agree"] = agree;
  const bool ok = walk.passed() && transform.passed();
  out.record["verdict"] = ok ? "harmonic on the ball" : "not harmonic on the ball";
  out.record["passed"] = ok;
  out.exit_code = ok ? 0 : 1;
  return out;
}

Outcome joining(Settings& s) {
  const int rank = s.rank();
  const FiniteBase base = FiniteBase::uniform(FiniteAction::flip(rank));
  const FactorSystem id = identity_system(base);
  const FactorSystem prod = product_system(base, Measure::harmonic(rank));
  const FactorSystem one = one_point_system(Measure::harmonic(rank));
  const Word w1 = s.word("cylinder", rank);
  const Word w2 = s.word("cylinder2", rank);
  const std::size_t m = s.count("M", 1, kMaxSamples);
  const std::size_t n = s.count("N", 0, kMaxSteps);
  const std::uint64_t seed = s.seed();
  const double sigma = s.rational("sigma", false).get_d();
  const Rational bound = s.rational("diagonal-bound", false);
  const auto mu = StepDistribution::simple(rank);

  const SpaceSet full{0, BoundarySet::full(rank)};
  const auto pr = joining_estimate(id, prod, mu, full, SpaceSet{0, BoundarySet::cylinder(w1)}, m, n, seed);
  const auto off = joining_estimate(one, one, mu, SpaceSet{0, BoundarySet::cylinder(w1)},
                                    SpaceSet{0, BoundarySet::cylinder(w2)}, m, n, seed);
  const auto diag = joining_estimate(one, one, mu, SpaceSet{0, BoundarySet::cylinder(w1)},
                                     SpaceSet{0, BoundarySet::cylinder(w1)}, m, n, seed);
  const bool disjoint = !w1.is_prefix_of(w2) && !w2.is_prefix_of(w1);
  const bool product_ok = pr.within(sigma);
  const bool diagonal_ok = !disjoint || off.exact_mean <= bound;

  Outcome out;
  Json& r = out.record;
  r["identity_product"] = mc_json(pr, n, sigma);
  r["identity_product"]["cells"] = "Full@0 × [" + w1.str() + "]@0";
  r["self_off_diagonal"] = mc_json(off, n, sigma);
  r["self_off_diagonal"]["cells"] = "[" + w1.str() + "] × [" + w2.str() + "]";
  r["self_off_diagonal"]["disjoint"] = disjoint;
  r["self_off_diagonal"]["bound"] = to_string(bound);
  r["self_diagonal"] = mc_json(diag, n, sigma);
  r["self_diagonal"]["cells"] = "[" + w1.str() + "] × [" + w1.str() + "]";
  const bool ok = product_ok && diagonal_ok;
  r["verdict"] = ok ? "joining matches the product formula and concentrates on the diagonal"
                    : "joining check failed";
  r["passed"] = ok;
  out.exit_code = ok ? 0 : 1;
  return out;
}

Outcome induced(Settings& s) {
  const InducedSystem sys = InducedSystem::even_length_instance();
  const std::size_t i = s.count("coset", 0, sys.spec.index() - 1);
  const std::size_t depth = s.count("depth", 0, kMaxDepth);
  const std::size_t triples = s.count("triples", 0, kMaxSamples);
  const std::size_t pairs = s.count("pairs", 0, kMaxSamples);
  ProximalityParams p;
  p.samples = s.count("M", 1, kMaxSamples);
  p.steps = s.count("N", 0, kMaxSteps);
  p.depth = s.count("probe-depth", 1, kMaxDepth);
  p.tau = s.rational("tau", true);
  p.seed = s.seed();
  const Rational min_fraction = s.rational("min-fraction", false);
  const auto& spec = sys.spec;

  std::mt19937_64 rng(derive_seed(p.seed, 0, 0));
  std::size_t identity_failures = 0, inverse_failures = 0, printed_alpha_failures = 0;
  for (std::size_t t = 0; t < triples; ++t) {
    const Word g1 = random_word(rng, spec.rank, 6);
    const Word g2 = random_word(rng, spec.rank, 6);
    const std::size_t x = std::uniform_int_distribution<std::size_t>(0, spec.index() - 1)(rng);
    const std::size_t g2x = coset_of(spec, g2 * spec.transversal[x]);
    const Word lhs = cocycle(spec, g1 * g2, x);
    const Word a1 = cocycle(spec, g1, g2x);
    const Word a2 = cocycle(spec, g2, x);
    identity_failures += lhs != a2 * a1;
    inverse_failures += invert(lhs) != invert(a1) * invert(a2);
    printed_alpha_failures += lhs != a1 * a2;
  }

  const Measure m = Measure::conditioned(sys.nu, {Word::parse("ab", 2), Word::parse("B", 2)});
  std::size_t composition_failures = 0;
  const auto grid = ball(spec.rank, 3);
  for (std::size_t t = 0; t < pairs; ++t) {
    const Word g1 = random_word(rng, spec.rank, 6);
    const Word g2 = random_word(rng, spec.rank, 6);
    const InducedPoint pt{std::uniform_int_distribution<std::size_t>(0, spec.index() - 1)(rng), m};
    const auto direct = induced_action(spec, g1 * g2, pt);
    const auto stepwise = induced_action(spec, g1, induced_action(spec, g2, pt));
    bool same = direct.coset == stepwise.coset;
    for (const auto& w : grid) same = same && eval(direct.measure, w) == eval(stepwise.measure, w);
    composition_failures += !same;
  }

  const auto proj = verify_projection_boundary(sys, i, depth, p);
  Outcome out;
  Json& r = out.record;
  r["subgroup"] = spec.name;
  r["transversal"] = Json::array({"e", "a"});
  r["cocycle"] = {{"triples", triples},
                  {"identity", "α(γ₁γ₂,x) = α(γ₂,x)·α(γ₁,γ₂x)"},
                  {"identity_failures", identity_failures},
                  {"inverse_cocycle_identity", "α⁻¹(γ₁γ₂,x) = α⁻¹(γ₁,γ₂x)·α⁻¹(γ₂,x)"},
                  {"inverse_cocycle_failures", inverse_failures},
                  {"printed_order_for_alpha_failures", printed_alpha_failures}};
  r["composition"] = {{"pairs", pairs}, {"depth", 3}, {"failures", composition_failures}};
  Json checks = Json::array({check_json(proj.stationarity.precondition, boundary_name, coset_name)});
  if (proj.stationarity.precondition_holds()) checks.push_back(check_json(proj.stationarity.fiber, boundary_name, coset_name));
  r["checks"] = std::move(checks);
  r["coset_fixed_by_conjugated_support"] = proj.stationarity.coset_fixed;
  r["proximality"] = proximality_json(proj.proximality, min_fraction);
  r["projection_equivariance"] = {{"checked", proj.equivariance_checked}, {"failures", proj.equivariance_failures}};
  const bool ok = identity_failures == 0 && inverse_failures == 0 && composition_failures == 0 &&
                  proj.stationarity.passed() && proximal_enough(proj.proximality, min_fraction) &&
                  proj.equivariance_failures == 0;
  r["verdict"] = ok ? "coset projection is a relative boundary (exact checks + sampled concentration)"
                    : "induced-action check failed";
  r["passed"] = ok;
  out.csv = proj.proximality.csv();
  out.exit_code = ok ? 0 : 1;
  return out;
}

Outcome poisson_product(Settings& s) {
  const int rank = s.rank();
  const FiniteBase base = FiniteBase::uniform(FiniteAction::flip(rank));
  const std::string& label = s.text("y");
  const int y = label.empty() ? 0 : base.action().index_of(label);
  s.set_echo("y", base.action().label(y));
  const std::size_t depth = s.count("depth", 0, kMaxDepth);
  ProximalityParams p;
  p.samples = s.count("M", 1, kMaxSamples);
  p.steps = s.count("N", 0, kMaxSteps);
  p.depth = s.count("probe-depth", 1, kMaxDepth);
  p.tau = s.rational("tau", true);
  p.seed = s.seed();
  const Rational min_fraction = s.rational("min-fraction", false);
  const auto rep = verify_product_is_relative_boundary(base, Measure::harmonic(rank), StepDistribution::simple(rank), y,
                                                       depth, p);
  const TotalSpace space{base.action(), true};
  Outcome out;
  Json& r = out.record;
  r["checks"] = Json::array({check_json(
      rep.stationarity, [&](const SpaceSet& c) { return c.str(space); },
      [&](int label) { return base.action().label(label); })});
  r["proximality"] = proximality_json(rep.proximality, min_fraction);
  r["factorization"] = {{"checked", rep.factorization_checked}, {"failures", rep.factorization_failures}};
  const bool ok = rep.stationarity.passed() && proximal_enough(rep.proximality, min_fraction) &&
                  rep.factorization_failures == 0;
  r["verdict"] = ok ? "projection is a relative μ-boundary (exact stationarity + sampled proximality)"
                    : "relative boundary check failed";
  r["passed"] = ok;
  out.csv = rep.proximality.csv();
  out.exit_code = ok ? 0 : 1;
  return out;
}

Outcome structure(Settings& s) {
  const std::string name = s.choice("system", kSystems);
  const int rank = s.rank();
  const std::size_t m = s.count("M", 0, kMaxSamples);
  const std::size_t n = s.count("N", 0, kMaxSteps);
  const std::size_t depth = s.count("depth", 0, kMaxDepth);
  const std::uint64_t seed = s.seed();
  const ActionMode mode = s.action();
  const FactorSystem sys = build_system(name, rank);
  const auto rep = structure_check(sys, StepDistribution::simple(rank), m, n, depth, seed, mode);
  Outcome out;
  out.record["instances"] = rep.instances;
  out.record["cells_compared"] = rep.cells_compared;
  out.record["factorization_failures"] = rep.factorization_failures;
  out.record["equivariance_failures"] = rep.equivariance_failures;
  out.record["verdict"] = rep.passed() ? "sample-level identities hold" : "sample-level identity violated";
  out.record["passed"] = rep.passed();
  out.exit_code = rep.passed() ? 0 : 1;
  return out;
}

}  // namespace

Outcome run(const ExperimentConfig& config) {
  const CatalogEntry& entry = catalog_entry(config.experiment);
  Settings settings(config, entry);
  const auto start = std::chrono::steady_clock::now();
  Outcome body;
  if (entry.name == "nonexample") body = nonexample(settings);
  else if (entry.name == "stationarity") body = stationarity(settings);
  else if (entry.name == "proximality") body = proximality(settings);
  else if (entry.name == "barycenter") body = barycenter(settings);
  else if (entry.name == "martingale") body = martingale(settings);
  else if (entry.name == "joining") body = joining(settings);
  else if (entry.name == "induced") body = induced(settings);
  else if (entry.name == "poisson-product") body = poisson_product(settings);
  else body = structure(settings);
  const auto elapsed = std::chrono::steady_clock::now() - start;

  Outcome out;
  out.record["experiment"] = entry.name;
  out.record["section"] = entry.section;
  out.record["config"] = settings.echo();
  for (auto& [k, v] : body.record.items()) out.record[k] = v;
  if (config.timing) out.record["timing_ms"] = std::chrono::duration<double, std::milli>(elapsed).count();
  out.csv = std::move(body.csv);
  out.exit_code = body.exit_code;
  return out;
}

std::string emit_json(const std::vector<Json>& records) {
  Json arr = Json::array();
  for (const auto& r : records) arr.push_back(r);
  return arr.dump(2) + "\n";
}

void write_atomically(const std::string& path, const std::string& content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot open " + tmp + ": " + std::strerror(errno));
    f << content;
    f.flush();
    if (!f) throw std::runtime_error("cannot write " + tmp + ": " + std::strerror(errno));
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0) {
    const std::string err = std::strerror(errno);
    std::remove(tmp.c_str());
    throw std::runtime_error("cannot rename " + tmp + " to " + path + ": " + err);
  }
}

// ---------------------------------------------------------------------------
// Command line

namespace {

std::string catalog_text() {
  std::string out;
  for (const auto& e : catalog()) {
    out += e.name + "\n  section: " + e.section + "\n  " + e.summary + "\n  defaults:";
    for (const auto& [k, v] : e.defaults) out += " " + k + "=" + (v.empty() ? "(first label)" : v);
    out += "\n";
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"relbound: exact and Monte Carlo checks for relative stationary systems over free groups"};
  app.footer("Experiments: run `relbound list` for the catalog with defaults.\n"
             "Exit codes: 0 all checks pass, 1 a checked property is violated, 2 usage or configuration error.");
  std::string experiment;
  app.add_option("experiment", experiment, "experiment name, or `list`")->required();
  std::map<std::string, std::string> raw;
  for (const auto& key : known_keys()) {
    raw[key];
    app.add_option("--" + key, raw[key]);
  }
  std::string timing = "false";
  app.add_option("--timing", timing, "add wall-clock timing to the report (breaks byte-stability)")
      ->check(CLI::IsMember({"true", "false"}));
  app.set_config("--config", "", "flat key=value file with the same keys as the options");
  app.allow_config_extras(false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    std::cout << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    std::cerr << "relbound: " << e.what() << "\n";
    return 2;
  }

  if (experiment == "list") {
    std::cout << catalog_text();
    return 0;
  }

  try {
    ExperimentConfig config;
    config.experiment = experiment;
    config.timing = timing == "true";
    for (const auto& key : known_keys()) {
      if (app.get_option("--" + key)->count() > 0) config.values[key] = raw[key];
    }
    Outcome outcome = run(config);
    const std::string json = emit_json({outcome.record});
    if (config.values.count("csv")) {
      if (!outcome.csv) throw UsageError("key \"csv\" does not apply to experiment " + experiment);
      write_atomically(config.values["csv"], *outcome.csv);
    }
    if (config.values.count("out")) write_atomically(config.values["out"], json);
    std::cout << json;
    return outcome.exit_code;
  } catch (const std::exception& e) {
    std::cerr << "relbound: " << e.what() << "\n";
    return 2;
  }
}

}  // namespace relbound::cli
