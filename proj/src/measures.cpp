#include "relbound/measures.hpp"

#include <cctype>
#include <optional>
#include <variant>

#include "relbound/errors.hpp"

namespace relbound {

// ---------------------------------------------------------------------------
// StepDistribution

StepDistribution::StepDistribution(int rank, std::map<Word, Rational> weights)
    : rank_(rank), weights_(std::move(weights)) {
  if (weights_.empty()) throw UsageError("step distribution has empty support");
  Rational total = 0;
  for (const auto& [g, p] : weights_) {
    if (g.rank() != rank_) throw UsageError("step distribution word " + g.str() + " has the wrong rank");
    if (p <= 0) throw UsageError("step distribution weight at " + g.str() + " is not positive");
    total += p;
  }
  if (total != 1) throw UsageError("step distribution weights sum to " + to_string(total) + ", not 1");
}

StepDistribution StepDistribution::simple(int rank) {
  std::map<Word, Rational> w;
  const Rational p = make_rational(1, 2 * rank);
  for (int code = 0; code < 2 * rank; ++code) w.emplace(Word(rank, {Letter::from_code(code)}), p);
  return StepDistribution(rank, std::move(w));
}

StepDistribution StepDistribution::dirac(const Word& g) { return StepDistribution(g.rank(), {{g, Rational(1)}}); }

Rational StepDistribution::operator()(const Word& g) const {
  auto it = weights_.find(g);
  return it == weights_.end() ? Rational(0) : it->second;
}

StepDistribution convolve(const StepDistribution& first, const StepDistribution& second) {
  if (first.rank() != second.rank()) throw UsageError("rank mismatch in convolve");
  std::map<Word, Rational> out;
  for (const auto& [g, p] : first.weights()) {
    for (const auto& [h, q] : second.weights()) out[g * h] += p * q;
  }
  return StepDistribution(first.rank(), std::move(out));
}

// ---------------------------------------------------------------------------
// Measure nodes

namespace {

struct HarmonicNode {};
struct ConditionedNode {
  Measure base;
  std::vector<Word> cylinders;
  Rational mass;
};
struct TranslatedNode {
  Word g;
  Measure base;
};
struct MixtureNode {
  std::vector<Component> parts;
};

}  // namespace

struct Measure::Node {
  int rank;
  std::variant<HarmonicNode, ConditionedNode, TranslatedNode, MixtureNode> body;
};

Measure Measure::harmonic(int rank) {
  (void)Word(rank);  // validates rank
  return Measure(std::make_shared<const Node>(Node{rank, HarmonicNode{}}));
}

Measure Measure::conditioned(const Measure& base, std::vector<Word> cylinders) {
  if (cylinders.empty()) throw UsageError("conditioning on an empty list of cylinders");
  for (std::size_t i = 0; i < cylinders.size(); ++i) {
    if (cylinders[i].rank() != base.rank()) throw UsageError("rank mismatch in conditioning cylinder");
    for (std::size_t j = 0; j < i; ++j) {
      if (cylinders[i].is_prefix_of(cylinders[j]) || cylinders[j].is_prefix_of(cylinders[i])) {
        throw UsageError("conditioning cylinders " + cylinders[j].str() + " and " + cylinders[i].str() +
                         " are nested");
      }
    }
  }
  Rational mass = 0;
  for (const Word& c : cylinders) mass += eval(base, BoundarySet::cylinder(c));
  if (mass == 0) throw EvaluationError("conditioning set has zero mass under " + base.str());
  const int rank = base.rank();
  return Measure(
      std::make_shared<const Node>(Node{rank, ConditionedNode{base, std::move(cylinders), std::move(mass)}}));
}

Measure Measure::translated(const Word& g, const Measure& base) {
  if (g.rank() != base.rank()) throw UsageError("rank mismatch in translation");
  if (g.empty()) return base;
  if (base.kind() == Kind::Translated) return translated(g * base.shift(), base.base());
  return Measure(std::make_shared<const Node>(Node{base.rank(), TranslatedNode{g, base}}));
}

Measure Measure::mixture(const std::vector<std::pair<Rational, Measure>>& parts) {
  if (parts.empty()) throw UsageError("mixture with no components");
  const int rank = parts.front().second.rank();
  Rational total = 0;
  std::vector<Component> comps;
  comps.reserve(parts.size());
  for (const auto& [p, m] : parts) {
    if (p <= 0) throw UsageError("mixture weight " + to_string(p) + " is not positive");
    if (m.rank() != rank) throw UsageError("rank mismatch inside mixture");
    total += p;
    comps.push_back(Component{p, m});
  }
  if (total != 1) throw UsageError("mixture weights sum to " + to_string(total) + ", not 1");
  return Measure(std::make_shared<const Node>(Node{rank, MixtureNode{std::move(comps)}}));
}

int Measure::rank() const { return node_->rank; }

Measure::Kind Measure::kind() const { return static_cast<Kind>(node_->body.index()); }

const Measure& Measure::base() const {
  if (auto* c = std::get_if<ConditionedNode>(&node_->body)) return c->base;
  if (auto* t = std::get_if<TranslatedNode>(&node_->body)) return t->base;
  throw UsageError("measure has no base");
}

const Word& Measure::shift() const { return std::get<TranslatedNode>(node_->body).g; }
const std::vector<Word>& Measure::cylinders() const { return std::get<ConditionedNode>(node_->body).cylinders; }
const Rational& Measure::conditioning_mass() const { return std::get<ConditionedNode>(node_->body).mass; }
const std::vector<Component>& Measure::components() const { return std::get<MixtureNode>(node_->body).parts; }

std::string Measure::str() const {
  switch (kind()) {
    case Kind::Harmonic:
      return "harmonic(" + std::to_string(rank()) + ")";
    case Kind::Conditioned: {
      std::string s = "cond(" + base().str() + ";";
      const auto& cyl = cylinders();
      for (std::size_t i = 0; i < cyl.size(); ++i) s += (i ? "," : " ") + cyl[i].str();
      return s + ")";
    }
    case Kind::Translated:
      return "tr(" + shift().str() + "; " + base().str() + ")";
    case Kind::Mixture: {
      std::string s = "mix(";
      const auto& parts = components();
      for (std::size_t i = 0; i < parts.size(); ++i) {
        if (i) s += ", ";
        s += to_string(parts[i].weight) + ":" + parts[i].measure.str();
      }
      return s + ")";
    }
  }
  return {};
}

// ---------------------------------------------------------------------------
// Parsing

namespace {

class ExprParser {
 public:
  explicit ExprParser(std::string_view text) : text_(text) {}

  Measure parse_all() {
    Measure m = parse_expr();
    skip_ws();
    if (pos_ != text_.size()) fail("trailing characters");
    return m;
  }

 private:
  [[noreturn]] void fail(const std::string& what) const {
    throw UsageError("measure expression: " + what + " at offset " + std::to_string(pos_) + " in \"" +
                     std::string(text_) + "\"");
  }

  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  void expect(char c) {
    skip_ws();
    if (pos_ >= text_.size() || text_[pos_] != c) fail(std::string("expected '") + c + "'");
    ++pos_;
  }

  bool accept(char c) {
    skip_ws();
    if (pos_ < text_.size() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  std::string_view token() {
    skip_ws();
    const std::size_t start = pos_;
    while (pos_ < text_.size() && (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '/' ||
                                   text_[pos_] == '-')) {
      ++pos_;
    }
    if (start == pos_) fail("expected a token");
    return text_.substr(start, pos_ - start);
  }

  Measure parse_expr() {
    const std::string_view head = token();
    expect('(');
    if (head == "harmonic") {
      const auto k = std::stoi(std::string(token()));
      expect(')');
      return Measure::harmonic(k);
    }
    if (head == "cond") {
      Measure base = parse_expr();
      expect(';');
      std::vector<std::string_view> words{token()};
      while (accept(',')) words.push_back(token());
      expect(')');
      std::vector<Word> cyl;
      for (auto w : words) cyl.push_back(Word::parse(w, base.rank()));
      return Measure::conditioned(base, std::move(cyl));
    }
    if (head == "tr") {
      const std::string_view g = token();
      expect(';');
      Measure base = parse_expr();
      expect(')');
      return Measure::translated(Word::parse(g, base.rank()), base);
    }
    if (head == "mix") {
      std::vector<std::pair<Rational, Measure>> parts;
      do {
        Rational p = parse_rational(token());
        expect(':');
        parts.emplace_back(std::move(p), parse_expr());
      } while (accept(','));
      expect(')');
      return Measure::mixture(parts);
    }
    fail("unknown constructor \"" + std::string(head) + "\"");
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

}  // namespace

Measure Measure::parse(std::string_view text) { return ExprParser(text).parse_all(); }

// ---------------------------------------------------------------------------
// Evaluation

namespace {

Rational harmonic_cylinder(int rank, std::size_t length) {
  if (length == 0) return 1;
  mpz_class den;
  mpz_ui_pow_ui(den.get_mpz_t(), static_cast<unsigned long>(2 * rank - 1), static_cast<unsigned long>(length - 1));
  den *= 2 * rank;
  Rational r(mpz_class(1), den);
  return r;
}

Rational eval_cylinder(const Measure& m, const Word& w);

Rational eval_set(const Measure& m, const BoundarySet& s) {
  switch (s.kind()) {
    case BoundarySet::Kind::Full: return 1;
    case BoundarySet::Kind::Empty: return 0;
    case BoundarySet::Kind::Cylinder: return eval_cylinder(m, s.word());
    case BoundarySet::Kind::CoCylinder: return 1 - eval_cylinder(m, s.word());
  }
  return 0;
}

Rational eval_cylinder(const Measure& m, const Word& w) {
  switch (m.kind()) {
    case Measure::Kind::Harmonic:
      return harmonic_cylinder(m.rank(), w.size());
    case Measure::Kind::Conditioned: {
      // [c] ∩ [w] is the longer cylinder when the two are nested, else empty.
      Rational inside = 0;
      for (const Word& c : m.cylinders()) {
        if (w.is_prefix_of(c)) {
          inside += eval_cylinder(m.base(), c);
        } else if (c.is_prefix_of(w)) {
          inside += eval_cylinder(m.base(), w);
        }
      }
      return inside / m.conditioning_mass();
    }
    case Measure::Kind::Translated:
      return eval_set(m.base(), preimage(m.shift(), BoundarySet::cylinder(w)));
    case Measure::Kind::Mixture: {
      Rational total = 0;
      for (const auto& c : m.components()) total += c.weight * eval_cylinder(c.measure, w);
      return total;
    }
  }
  return 0;
}

}  // namespace

Rational eval(const Measure& m, const BoundarySet& s) {
  if (m.rank() != s.rank()) throw UsageError("rank mismatch between measure and set");
  return eval_set(m, s);
}

Measure convolve_push(const StepDistribution& mu, const Measure& m) {
  if (mu.rank() != m.rank()) throw UsageError("rank mismatch in convolve_push");
  std::vector<std::pair<Rational, Measure>> parts;
  parts.reserve(mu.support_size());
  for (const auto& [g, p] : mu.weights()) parts.emplace_back(p, Measure::translated(g, m));
  return Measure::mixture(parts);
}

Rational tv_distance_at_depth(const Measure& m1, const Measure& m2, std::size_t depth) {
  if (m1.rank() != m2.rank()) throw UsageError("rank mismatch in tv_distance_at_depth");
  if (depth < 1) throw UsageError("tv distance depth must be at least 1");
  Rational total = 0;
  for (const Word& w : sphere(m1.rank(), depth)) total += abs(Rational(eval(m1, w) - eval(m2, w)));
  return total / 2;
}

std::vector<ProbeStep> concentration_probe(const Measure& m, std::size_t depth) {
  if (depth < 1) throw UsageError("probe depth must be at least 1");
  std::vector<ProbeStep> path;
  Word current(m.rank());
  for (std::size_t level = 0; level < depth; ++level) {
    std::optional<ProbeStep> best;
    for (Word& child : children(current)) {
      Rational mass = eval(m, child);
      if (!best || mass > best->mass) best = ProbeStep{std::move(child), std::move(mass)};
    }
    current = best->word;
    path.push_back(std::move(*best));
  }
  return path;
}

}  // namespace relbound
