#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "relbound/errors.hpp"
#include "relbound/measures.hpp"

using namespace relbound;
using oracle::word;

namespace {

Rational q(long p, long d) { return make_rational(p, d); }

// Random expression with nesting depth ≤ levels.
Measure random_measure(std::mt19937_64& rng, int rank, int levels) {
  const Measure nu = Measure::harmonic(rank);
  if (levels == 0) return nu;
  std::uniform_int_distribution<int> pick(0, 3);
  switch (pick(rng)) {
    case 0:
      return nu;
    case 1: {
      const Measure base = random_measure(rng, rank, levels - 1);
      // Two disjoint cylinders: distinct depth-2 words.
      const auto s2 = sphere(rank, 2);
      std::uniform_int_distribution<std::size_t> idx(0, s2.size() - 1);
      for (;;) {
        std::size_t i = idx(rng), j = idx(rng);
        if (i == j) j = (j + 1) % s2.size();
        if (eval(base, s2[i]) + eval(base, s2[j]) > 0) return Measure::conditioned(base, {s2[i], s2[j]});
      }
    }
    case 2:
      return Measure::translated(Word::parse(oracle::random_reduced(rng, rank, 3), rank),
                                 random_measure(rng, rank, levels - 1));
    default: {
      const Measure m1 = random_measure(rng, rank, levels - 1);
      const Measure m2 = random_measure(rng, rank, levels - 1);
      return Measure::mixture({{q(1, 3), m1}, {q(2, 3), m2}});
    }
  }
}

}  // namespace

TEST_CASE("rational serialization") {
  CHECK(to_string(q(10, 36)) == "5/18");
  CHECK(to_string(Rational(0)) == "0/1");
  CHECK(to_string(Rational(1)) == "1/1");
  CHECK(to_string(q(-7, 72)) == "-7/72");
  CHECK(parse_rational("10/36") == q(5, 18));
  CHECK(parse_rational("3") == 3);
  CHECK(parse_rational("0.99") == q(99, 100));
  CHECK(parse_rational("-1.5") == q(-3, 2));
  CHECK(parse_rational(".25") == q(1, 4));
  CHECK_THROWS_AS(parse_rational("0.9x"), UsageError);
  CHECK_THROWS_AS(parse_rational("1/0"), UsageError);
  CHECK_THROWS_AS(parse_rational("x/2"), UsageError);
}

TEST_CASE("step distributions") {
  const auto mu = StepDistribution::simple(2);
  CHECK(mu.support_size() == 4);
  CHECK(mu(word("a")) == q(1, 4));
  CHECK(mu(word("ab")) == 0);
  CHECK_THROWS_AS(StepDistribution(2, {{word("a"), q(1, 2)}}), UsageError);
  CHECK_THROWS_AS(StepDistribution(2, {{word("a"), q(3, 2)}, {word("b"), q(-1, 2)}}), UsageError);

  // μ∗μ by brute-force product enumeration: 1/4 at ε, 1/16 on each of the 12 length-2 words.
  const auto mu2 = convolve(mu, mu);
  CHECK(mu2.support_size() == 13);
  CHECK(mu2(Word(2)) == q(1, 4));
  for (const auto& s : oracle::sphere(2, 2)) CHECK(mu2(word(s)) == q(1, 16));
}

TEST_CASE("eval examples") {
  const Measure nu = Measure::harmonic(2);
  CHECK(eval(nu, word("ab")) == q(1, 12));
  CHECK(eval(nu, word("ab")) == oracle::uniform_share(1, 2, 2));
  CHECK(eval(nu, BoundarySet::full(2)) == 1);
  const Measure nu_z1 = Measure::conditioned(nu, {word("a"), word("A")});
  CHECK(eval(Measure::translated(word("a"), nu_z1), word("ab")) == 0);
  CHECK(eval(nu_z1, word("ab")) == q(1, 6));
  CHECK(eval(Measure::harmonic(3), word("ab", 3)) == q(1, 30));
  CHECK_THROWS_AS(eval(nu, BoundarySet::cylinder(word("a", 3))), UsageError);
}

TEST_CASE("conditioning errors") {
  const Measure nu = Measure::harmonic(2);
  CHECK_THROWS_AS(Measure::conditioned(nu, {word("a"), word("ab")}), UsageError);
  const Measure point = Measure::conditioned(nu, {word("ab")});
  CHECK_THROWS_AS(Measure::conditioned(point, {word("b")}), EvaluationError);
  CHECK_THROWS_AS(Measure::mixture({{q(1, 2), nu}}), UsageError);
}

TEST_CASE("translated harmonic measure matches enumeration") {
  std::mt19937_64 rng(5);
  for (int rank : {2, 3}) {
    const Measure nu = Measure::harmonic(rank);
    for (int trial = 0; trial < 60; ++trial) {
      const auto g = oracle::random_reduced(rng, rank, 3);
      auto w = oracle::random_reduced(rng, rank, 3);
      if (w.empty()) w = "b";
      const Measure m = Measure::translated(Word::parse(g, rank), nu);
      CHECK_MESSAGE(eval(m, Word::parse(w, rank)) == oracle::harmonic_translate_mass(g, w, rank),
                    "g=" << g << " w=" << w);
    }
  }
}

TEST_CASE("conditioned measure matches enumeration") {
  const Measure nu = Measure::harmonic(2);
  const Measure m = Measure::conditioned(nu, {word("ab"), word("B")});
  const std::size_t depth = 4;
  const auto cells = oracle::sphere(2, depth);
  auto in_cond = [](const std::string& u) { return u.rfind("ab", 0) == 0 || u.rfind("B", 0) == 0; };
  std::size_t cond_count = 0;
  for (const auto& u : cells) cond_count += in_cond(u);
  for (const std::string w : {"a", "ab", "aba", "B", "Ba", "b", "abAB"}) {
    std::size_t hit = 0;
    for (const auto& u : cells) hit += in_cond(u) && u.rfind(w, 0) == 0;
    CHECK_MESSAGE(eval(m, word(w)) == make_rational(static_cast<long>(hit), static_cast<long>(cond_count)), w);
  }
}

TEST_CASE("convolve_push examples") {
  const auto mu = StepDistribution::simple(2);
  const Measure nu = Measure::harmonic(2);
  const Measure pushed = convolve_push(mu, nu);
  Rational expect = 0;
  for (const std::string g : {"a", "A", "b", "B"}) expect += q(1, 4) * oracle::harmonic_translate_mass(g, "a", 2);
  CHECK(expect == q(1, 4));
  CHECK(eval(pushed, word("a")) == expect);

  const auto delta = StepDistribution::dirac(Word(2));
  const Measure cond = Measure::conditioned(nu, {word("ab"), word("B")});
  const Measure id_push = convolve_push(delta, cond);
  for (std::size_t d = 1; d <= 6; ++d) {
    for (const auto& w : sphere(2, d)) REQUIRE(eval(id_push, w) == eval(cond, w));
  }
}

TEST_CASE("harmonic measure is stationary for the simple walk (exhaustive to depth 6)") {
  for (int rank : {2, 3}) {
    const Measure nu = Measure::harmonic(rank);
    const Measure pushed = convolve_push(StepDistribution::simple(rank), nu);
    std::size_t mismatches = 0;
    for (const auto& w : ball(rank, 6)) mismatches += eval(pushed, w) != eval(nu, w);
    CHECK(mismatches == 0);
  }
}

TEST_CASE("tv distance examples") {
  const Measure nu = Measure::harmonic(2);
  const Measure a_nu = Measure::translated(word("a"), nu);
  CHECK(tv_distance_at_depth(nu, nu, 4) == 0);
  Rational oracle_tv = 0;
  for (const std::string w : {"a", "A", "b", "B"}) {
    oracle_tv += abs(Rational(oracle::harmonic_translate_mass("a", w, 2) - q(1, 4)));
  }
  CHECK(tv_distance_at_depth(nu, a_nu, 1) == oracle_tv / 2);
  CHECK(tv_distance_at_depth(nu, a_nu, 1) == q(1, 2));
  CHECK(tv_distance_at_depth(nu, Measure::mixture({{Rational(1), nu}}), 3) == 0);
  Rational prev = 0;
  for (std::size_t d = 1; d <= 5; ++d) {
    const Rational tv = tv_distance_at_depth(nu, a_nu, d);
    CHECK(tv >= prev);
    prev = tv;
  }
}

TEST_CASE("concentration probe examples") {
  const Measure nu = Measure::harmonic(2);
  CHECK(concentration_probe(nu, 1) == std::vector<ProbeStep>{{word("a"), q(1, 4)}});
  const Measure ab_nu = Measure::translated(word("ab"), nu);
  CHECK(oracle::harmonic_translate_mass("ab", "a", 2) == q(11, 12));
  CHECK(concentration_probe(ab_nu, 1) == std::vector<ProbeStep>{{word("a"), q(11, 12)}});
  const Measure forced = Measure::conditioned(nu, {word("ab")});
  CHECK(concentration_probe(forced, 2) == std::vector<ProbeStep>{{word("a"), 1}, {word("ab"), 1}});
  CHECK_THROWS_AS(concentration_probe(nu, 0), UsageError);
}

TEST_CASE("measure expression properties on random expressions") {
  std::mt19937_64 rng(99);
  for (int rank : {2, 3}) {
    for (int trial = 0; trial < 120; ++trial) {
      const Measure m = random_measure(rng, rank, 3);
      const Word w = Word::parse(oracle::random_reduced(rng, rank, 4), rank);
      const Word g = Word::parse(oracle::random_reduced(rng, rank, 4), rank);
      const Word h = Word::parse(oracle::random_reduced(rng, rank, 4), rank);

      // Additivity over children.
      Rational sum = 0;
      for (const auto& c : children(w)) sum += eval(m, c);
      CHECK(sum == eval(m, BoundarySet::cylinder(w)));
      // Complement.
      if (!w.empty()) {
        CHECK(eval(m, BoundarySet::cylinder(w)) + eval(m, BoundarySet::cocylinder(w)) == 1);
      }
      CHECK(eval(m, BoundarySet::full(rank)) == 1);
      // Translate composition, checked against sequential preimages.
      const BoundarySet s = BoundarySet::cylinder(w);
      const Measure gh = Measure::translated(g, Measure::translated(h, m));
      CHECK(eval(gh, s) == eval(Measure::translated(g * h, m), s));
      CHECK(eval(gh, s) == eval(m, preimage(h, preimage(g, s))));
      // Serialization round trip preserves the expression.
      const Measure back = Measure::parse(m.str());
      CHECK(back.str() == m.str());
      CHECK(eval(back, s) == eval(m, s));
      // Probe soundness.
      for (const auto& step : concentration_probe(m, 3)) CHECK(step.mass == eval(m, step.word));
    }
  }
}

TEST_CASE("translation collapsing keeps expressions shallow") {
  const Measure nu = Measure::harmonic(2);
  Measure m = nu;
  for (int i = 0; i < 50; ++i) m = Measure::translated(word(i % 2 ? "a" : "b"), m);
  CHECK(m.kind() == Measure::Kind::Translated);
  CHECK(m.base().kind() == Measure::Kind::Harmonic);
  CHECK(Measure::translated(Word(2), nu).kind() == Measure::Kind::Harmonic);
  CHECK(Measure::parse("tr(ab; harmonic(2))").str() == "tr(ab; harmonic(2))");
  CHECK(Measure::parse("mix(1/4:harmonic(2), 3/4:cond(harmonic(2); a,A))").str() ==
        "mix(1/4:harmonic(2), 3/4:cond(harmonic(2); a,A))");
  CHECK_THROWS_AS(Measure::parse("foo(2)"), UsageError);
  CHECK_THROWS_AS(Measure::parse("harmonic(2) x"), UsageError);
}
