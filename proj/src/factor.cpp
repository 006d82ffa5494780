#include "relbound/factor.hpp"

#include <algorithm>
#include <map>

#include "relbound/errors.hpp"

namespace relbound {

// ---------------------------------------------------------------------------
// FiniteAction

FiniteAction::FiniteAction(int rank, std::vector<std::string> labels, std::vector<std::vector<int>> table)
    : rank_(rank), labels_(std::move(labels)), table_(std::move(table)) {
  (void)Word(rank);
  if (labels_.empty()) throw UsageError("finite action needs at least one point");
  if (table_.size() != static_cast<std::size_t>(2 * rank)) {
    throw UsageError("action table needs one row per generator and inverse (" + std::to_string(2 * rank) + ")");
  }
  for (std::size_t code = 0; code < table_.size(); ++code) {
    if (table_[code].size() != labels_.size()) throw UsageError("action table row has the wrong length");
    for (int image : table_[code]) {
      if (image < 0 || image >= size()) {
        throw UsageError("action table maps outside the point set (letter " +
                         std::string(1, Letter::from_code(static_cast<int>(code)).symbol()) + ")");
      }
    }
  }
}

FiniteAction FiniteAction::trivial(int rank, std::string label) {
  return FiniteAction(rank, {std::move(label)}, std::vector<std::vector<int>>(static_cast<std::size_t>(2 * rank), {0}));
}

FiniteAction FiniteAction::flip(int rank) {
  return FiniteAction(rank, {"0", "1"}, std::vector<std::vector<int>>(static_cast<std::size_t>(2 * rank), {1, 0}));
}

int FiniteAction::index_of(const std::string& label) const {
  auto it = std::find(labels_.begin(), labels_.end(), label);
  if (it == labels_.end()) throw UsageError("unknown base label \"" + label + "\"");
  return static_cast<int>(it - labels_.begin());
}

int FiniteAction::act(Letter l, int point) const {
  if (l.generator() >= rank_) throw UsageError("letter outside the action's rank");
  return table_[static_cast<std::size_t>(l.code())].at(static_cast<std::size_t>(point));
}

int FiniteAction::act(const Word& g, int point) const {
  if (g.rank() != rank_) throw UsageError("rank mismatch between word and action");
  auto letters = g.letters();
  for (auto it = letters.rbegin(); it != letters.rend(); ++it) point = act(*it, point);
  return point;
}

std::optional<ActionViolation> FiniteAction::composition_violation(std::size_t radius) const {
  const auto words = ball(rank_, radius);
  for (const Word& g : words) {
    for (const Word& h : words) {
      for (int y = 0; y < size(); ++y) {
        if (act(g * h, y) != act(g, act(h, y))) return ActionViolation{g, h, y};
      }
    }
  }
  return std::nullopt;
}

void FiniteAction::require(ActionMode mode, std::size_t radius) const {
  if (mode != ActionMode::Strict) return;
  if (auto v = composition_violation(radius)) {
    throw PreconditionError("base action violates the group law: (" + v->g.str() + "·" + v->h.str() + ")·" +
                            label(v->point) + " = " + label(act(v->g * v->h, v->point)) + " but " + v->g.str() +
                            "·(" + v->h.str() + "·" + label(v->point) + ") = " +
                            label(act(v->g, act(v->h, v->point))));
  }
}

// ---------------------------------------------------------------------------
// FiniteBase

FiniteBase::FiniteBase(FiniteAction action, std::vector<Rational> eta)
    : action_(std::move(action)), eta_(std::move(eta)) {
  if (eta_.size() != static_cast<std::size_t>(action_.size())) throw UsageError("η has the wrong number of points");
  Rational total = 0;
  for (const auto& p : eta_) {
    if (p <= 0) throw UsageError("η must be positive on every base point");
    total += p;
  }
  if (total != 1) throw UsageError("η sums to " + to_string(total) + ", not 1");
}

FiniteBase FiniteBase::uniform(FiniteAction action) {
  const int n = action.size();
  return FiniteBase(std::move(action), std::vector<Rational>(static_cast<std::size_t>(n), make_rational(1, n)));
}

// ---------------------------------------------------------------------------
// Sets and measures on X

std::string SpaceSet::str(const TotalSpace& space) const {
  return set.str() + "@" + space.tags.label(tag);
}

std::vector<SpaceSet> cells(const TotalSpace& space, std::size_t depth) {
  std::vector<SpaceSet> out;
  const auto words = space.has_boundary ? ball(space.rank(), depth) : std::vector<Word>{Word(space.rank())};
  for (int z = 0; z < space.tags.size(); ++z) {
    for (const Word& w : words) out.push_back(SpaceSet{z, BoundarySet::cylinder(w)});
  }
  return out;
}

SpaceMeasure::SpaceMeasure(std::vector<Part> parts) : parts_(std::move(parts)) {
  if (parts_.empty()) throw UsageError("space measure with no parts");
  std::sort(parts_.begin(), parts_.end(), [](const Part& a, const Part& b) { return a.tag < b.tag; });
  Rational total = 0;
  for (std::size_t i = 0; i < parts_.size(); ++i) {
    if (i > 0 && parts_[i].tag == parts_[i - 1].tag) throw UsageError("space measure repeats a tag");
    if (parts_[i].weight <= 0) throw UsageError("space measure weight is not positive");
    total += parts_[i].weight;
  }
  if (total != 1) throw UsageError("space measure weights sum to " + to_string(total));
}

const SpaceMeasure::Part* SpaceMeasure::find(int tag) const {
  auto it = std::lower_bound(parts_.begin(), parts_.end(), tag, [](const Part& p, int t) { return p.tag < t; });
  return it != parts_.end() && it->tag == tag ? &*it : nullptr;
}

Rational SpaceMeasure::tag_weight(int tag) const {
  const Part* p = find(tag);
  return p ? p->weight : Rational(0);
}

std::string SpaceMeasure::str(const TotalSpace& space) const {
  std::string s;
  for (const auto& p : parts_) {
    if (!s.empty()) s += " + ";
    s += to_string(p.weight) + "·δ_" + space.tags.label(p.tag);
    if (p.boundary) s += "⊗" + p.boundary->str();
  }
  return s;
}

Rational eval(const SpaceMeasure& m, const SpaceSet& s) {
  const auto* part = m.find(s.tag);
  if (!part) return 0;
  if (part->boundary) return part->weight * eval(*part->boundary, s.set);
  switch (s.set.kind()) {
    case BoundarySet::Kind::Full: return part->weight;
    case BoundarySet::Kind::Empty: return 0;
    default: throw UsageError("cylinder query on a space without a boundary coordinate");
  }
}

SpaceMeasure translate(const Word& g, const SpaceMeasure& m, const FiniteAction& tags) {
  std::vector<SpaceMeasure::Part> parts;
  parts.reserve(m.parts().size());
  for (const auto& p : m.parts()) {
    std::optional<Measure> b;
    if (p.boundary) b = Measure::translated(g, *p.boundary);
    parts.push_back({tags.act(g, p.tag), p.weight, std::move(b)});
  }
  return SpaceMeasure(std::move(parts));
}

// ---------------------------------------------------------------------------
// Factor systems

FactorSystem::FactorSystem(std::string name, TotalSpace space, FiniteBase base, SpaceMeasure total,
                           std::vector<Fiber> fibers, std::vector<SpaceMeasure> disintegration)
    : name_(std::move(name)),
      space_(std::move(space)),
      base_(std::move(base)),
      total_(std::move(total)),
      fibers_(std::move(fibers)),
      disintegration_(std::move(disintegration)) {
  if (base_.rank() != space_.rank()) throw UsageError("base and total space have different ranks");
  if (fibers_.size() != static_cast<std::size_t>(base_.size()) || disintegration_.size() != fibers_.size()) {
    throw UsageError("one fiber and one fiber measure per base point required");
  }
  // X is a G-space: its tag action must satisfy the group law.
  space_.tags.require(ActionMode::Strict, 2);
}

namespace {

bool whole_slice(const FiberPiece& p) { return p.cylinders.size() == 1 && p.cylinders.front().empty(); }

FiberPiece normalized(FiberPiece p, int rank) {
  if (p.cylinders.empty()) p.cylinders.push_back(Word(rank));
  for (const Word& c : p.cylinders) {
    if (c.empty() && p.cylinders.size() > 1) throw UsageError("a whole tag slice cannot be combined with cylinders");
  }
  return p;
}

}  // namespace

FactorSystem disintegrate(std::string name, const TotalSpace& space, const SpaceMeasure& total,
                          const FiniteAction& base_action, std::vector<Fiber> fibers,
                          const std::optional<std::vector<Rational>>& eta) {
  const int rank = space.rank();
  if (fibers.size() != static_cast<std::size_t>(base_action.size())) throw UsageError("one fiber per base point");

  std::map<int, std::vector<Word>> used;  // tag → cylinders already assigned
  std::vector<Rational> masses;
  std::vector<SpaceMeasure> measures;
  for (std::size_t y = 0; y < fibers.size(); ++y) {
    Fiber& fiber = fibers[y];
    std::vector<SpaceMeasure::Part> parts;
    Rational fiber_mass = 0;
    std::vector<Rational> piece_mass;
    for (auto& piece : fiber) {
      piece = normalized(std::move(piece), rank);
      if (piece.tag < 0 || piece.tag >= space.tags.size()) throw UsageError("fiber piece uses an unknown tag");
      if (!space.has_boundary && !whole_slice(piece)) {
        throw UsageError("fiber cylinders on a space without a boundary coordinate");
      }
      for (const Word& c : piece.cylinders) {
        for (const Word& prev : used[piece.tag]) {
          if (prev.is_prefix_of(c) || c.is_prefix_of(prev)) {
            throw UsageError("fibers overlap at " + SpaceSet{piece.tag, BoundarySet::cylinder(c)}.str(space));
          }
        }
      }
      used[piece.tag].insert(used[piece.tag].end(), piece.cylinders.begin(), piece.cylinders.end());

      const auto* part = total.find(piece.tag);
      Rational mass = 0;
      if (part) {
        if (whole_slice(piece)) {
          mass = part->weight;
        } else {
          for (const Word& c : piece.cylinders) mass += part->weight * eval(*part->boundary, c);
        }
      }
      piece_mass.push_back(mass);
      fiber_mass += mass;
    }
    if (fiber_mass == 0) {
      throw EvaluationError("fiber of " + base_action.label(static_cast<int>(y)) + " has zero mass");
    }
    for (std::size_t i = 0; i < fiber.size(); ++i) {
      if (piece_mass[i] == 0) continue;
      const auto& piece = fiber[i];
      const auto* part = total.find(piece.tag);
      std::optional<Measure> b;
      if (part->boundary) {
        b = whole_slice(piece) ? *part->boundary : Measure::conditioned(*part->boundary, piece.cylinders);
      }
      parts.push_back({piece.tag, piece_mass[i] / fiber_mass, std::move(b)});
    }
    masses.push_back(fiber_mass);
    measures.emplace_back(std::move(parts));
  }

  Rational covered = 0;
  for (const auto& m : masses) covered += m;
  if (covered != 1) throw UsageError("fibers cover only " + to_string(covered) + " of the total mass");
  if (eta && *eta != masses) throw UsageError("supplied η does not match the fiber masses");

  FiniteBase base(base_action, masses);
  return FactorSystem(std::move(name), space, std::move(base), total, std::move(fibers), std::move(measures));
}

FactorSystem nonexample_system() {
  const int rank = 2;
  // Rows: a, A, b, B. a^{±1} sends everything to z1, b^{±1} to z2.
  FiniteAction base(rank, {"z1", "z2"}, {{0, 0}, {0, 0}, {1, 1}, {1, 1}});
  TotalSpace space{FiniteAction::trivial(rank), true};
  const auto total = SpaceMeasure::on_boundary(Measure::harmonic(rank));
  auto w = [](const char* s) { return Word::parse(s, 2); };
  std::vector<Fiber> fibers{{{0, {w("a"), w("A")}}}, {{0, {w("b"), w("B")}}}};
  return disintegrate("nonexample", space, total, base, std::move(fibers));
}

FactorSystem product_system(const FiniteBase& base, const Measure& nu) {
  if (nu.rank() != base.rank()) throw UsageError("rank mismatch between ν and the base");
  base.action().require(ActionMode::Strict, 3);
  TotalSpace space{base.action(), true};
  std::vector<SpaceMeasure::Part> parts;
  std::vector<Fiber> fibers;
  for (int y = 0; y < base.size(); ++y) {
    parts.push_back({y, base.eta()[static_cast<std::size_t>(y)], nu});
    fibers.push_back({{y, {}}});
  }
  return disintegrate("product", space, SpaceMeasure(std::move(parts)), base.action(), std::move(fibers),
                      base.eta());
}

FactorSystem one_point_system(const Measure& nu) {
  auto sys = product_system(FiniteBase(FiniteAction::trivial(nu.rank()), {Rational(1)}), nu);
  return FactorSystem("one-point", sys.space(), sys.base(), sys.total(), sys.fibers(), {sys.fiber_measure(0)});
}

FactorSystem identity_system(const FiniteBase& base) {
  base.action().require(ActionMode::Strict, 3);
  TotalSpace space{base.action(), false};
  std::vector<SpaceMeasure::Part> parts;
  std::vector<Fiber> fibers;
  for (int y = 0; y < base.size(); ++y) {
    parts.push_back({y, base.eta()[static_cast<std::size_t>(y)], std::nullopt});
    fibers.push_back({{y, {}}});
  }
  return disintegrate("identity", space, SpaceMeasure(std::move(parts)), base.action(), std::move(fibers),
                      base.eta());
}

FactorSystem collapse_to_point(const FactorSystem& sys) {
  std::map<int, std::vector<Word>> merged;
  for (const auto& fiber : sys.fibers()) {
    for (const auto& piece : fiber) {
      auto& cyl = merged[piece.tag];
      cyl.insert(cyl.end(), piece.cylinders.begin(), piece.cylinders.end());
    }
  }
  Fiber single;
  for (auto& [tag, cyl] : merged) {
    const bool whole = std::any_of(cyl.begin(), cyl.end(), [](const Word& c) { return c.empty(); });
    single.push_back({tag, whole ? std::vector<Word>{Word(sys.rank())} : cyl});
  }
  return disintegrate(sys.name() + "/point", sys.space(), sys.total(), FiniteAction::trivial(sys.rank()),
                      {std::move(single)});
}

FactorSystem forget_boundary(const FactorSystem& sys) {
  TotalSpace space{sys.space().tags, false};
  std::vector<SpaceMeasure::Part> parts;
  for (const auto& p : sys.total().parts()) parts.push_back({p.tag, p.weight, std::nullopt});
  std::vector<Fiber> fibers;
  for (const auto& fiber : sys.fibers()) {
    Fiber f;
    for (const auto& piece : fiber) {
      if (!whole_slice(piece)) throw UsageError("fiber splits a tag slice; the boundary coordinate cannot be dropped");
      f.push_back({piece.tag, {}});
    }
    fibers.push_back(std::move(f));
  }
  return disintegrate(sys.name() + "/tags", space, SpaceMeasure(std::move(parts)), sys.base().action(),
                      std::move(fibers), sys.base().eta());
}

// ---------------------------------------------------------------------------
// Reports

std::size_t ExactReport::residual_count() const {
  return static_cast<std::size_t>(
      std::count_if(entries.begin(), entries.end(), [](const Residual& r) { return r.lhs != r.rhs; }));
}

Rational ExactReport::max_residual() const {
  Rational best = 0;
  for (const auto& r : entries) best = std::max(best, abs(r.difference()));
  return best;
}

std::vector<Residual> ExactReport::witnesses(std::size_t n) const {
  std::vector<Residual> out;
  for (const auto& r : entries) {
    if (out.size() >= n) break;
    if (r.lhs != r.rhs) out.push_back(r);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Checks

namespace {

SpaceMeasure pulled_back(const FactorSystem& sys, const Word& g, int y) {
  const int source = sys.base().action().act(invert(g), y);
  return translate(g, sys.fiber_measure(source), sys.space().tags);
}

}  // namespace

ExactReport check_relative_stationarity(const FactorSystem& sys, const StepDistribution& mu, std::size_t depth,
                                        ActionMode mode) {
  if (mu.rank() != sys.rank()) throw UsageError("rank mismatch between μ and the factor system");
  sys.base().action().require(mode);
  ExactReport report{"relative-stationarity", depth, {}};
  const auto grid = cells(sys.space(), depth);
  for (int y = 0; y < sys.base().size(); ++y) {
    std::vector<std::pair<Rational, SpaceMeasure>> terms;
    for (const auto& [g, p] : mu.weights()) terms.emplace_back(p, pulled_back(sys, g, y));
    for (const auto& cell : grid) {
      Rational lhs = 0;
      for (const auto& [p, m] : terms) lhs += p * eval(m, cell);
      report.entries.push_back({y, std::nullopt, cell, std::move(lhs), eval(sys.fiber_measure(y), cell)});
    }
  }
  return report;
}

MeasurePreservationResult check_relatively_measure_preserving(const FactorSystem& sys, std::size_t radius,
                                                              std::size_t depth, ActionMode mode) {
  sys.base().action().require(mode, std::max<std::size_t>(radius, 1));
  MeasurePreservationResult result;
  const auto grid = cells(sys.space(), depth);
  for (const Word& g : ball(sys.rank(), radius)) {
    for (int y = 0; y < sys.base().size(); ++y) {
      const SpaceMeasure moved = pulled_back(sys, g, y);
      for (const auto& cell : grid) {
        ++result.checked;
        Rational lhs = eval(moved, cell);
        Rational rhs = eval(sys.fiber_measure(y), cell);
        if (lhs != rhs) {
          result.holds = false;
          result.witness = Residual{y, g, cell, std::move(lhs), std::move(rhs)};
          return result;
        }
      }
    }
  }
  return result;
}

Rational harmonic_transform(const FactorSystem& sys, int y, const SpaceSet& f, const Word& g, ActionMode mode) {
  sys.base().action().require(mode, std::max<std::size_t>(g.size(), 1));
  return eval(pulled_back(sys, g, y), f);
}

ExactReport check_harmonicity(const FactorSystem& sys, const StepDistribution& mu, int y, const SpaceSet& f,
                              std::size_t radius, ActionMode mode) {
  std::size_t reach = 0;
  for (const auto& [h, p] : mu.weights()) reach = std::max(reach, h.size());
  sys.base().action().require(mode, std::max<std::size_t>(radius + reach, 1));
  std::map<Word, Rational> cache;
  auto transform = [&](const Word& g) -> const Rational& {
    auto it = cache.find(g);
    if (it == cache.end()) it = cache.emplace(g, eval(pulled_back(sys, g, y), f)).first;
    return it->second;
  };
  ExactReport report{"harmonicity", radius, {}};
  for (const Word& g : ball(sys.rank(), radius)) {
    Rational averaged = 0;
    for (const auto& [h, p] : mu.weights()) averaged += p * transform(g * h);
    report.entries.push_back({y, g, f, std::move(averaged), transform(g)});
  }
  return report;
}

NonexampleComputation nonexample_terms(Convention convention) {
  const FactorSystem sys = nonexample_system();
  const auto& action = sys.base().action();
  const int z1 = action.index_of("z1");
  auto w = [](const char* s) { return Word::parse(s, 2); };
  const BoundarySet target = BoundarySet::cylinder(w("ab"));
  // Printed sets for the terms g = a, a⁻¹, b, b⁻¹ in that order.
  const std::vector<BoundarySet> printed{BoundarySet::cylinder(w("b")), BoundarySet::cylinder(w("ab")),
                                         BoundarySet::cylinder(w("Bab")), BoundarySet::cylinder(w("bab"))};
  const std::vector<Word> gs{w("a"), w("A"), w("b"), w("B")};

  NonexampleComputation out{convention, {}, 0, 0};
  for (std::size_t i = 0; i < gs.size(); ++i) {
    const int label = action.act(invert(gs[i]), z1);
    BoundarySet set = convention == Convention::Strict ? preimage(gs[i], target) : printed[i];
    Rational value = eval(sys.fiber_measure(label), SpaceSet{0, set});
    out.four_lhs += value;
    out.terms.push_back({gs[i], label, std::move(set), std::move(value)});
  }
  out.four_rhs = 4 * eval(sys.fiber_measure(z1), SpaceSet{0, target});
  return out;
}

}  // namespace relbound
