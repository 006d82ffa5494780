// Acceptance suite: one PASS/FAIL line per criterion; exit status 1 if any fails.

#include <chrono>
#include <cmath>
#include <functional>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>

#include "oracles.hpp"
#include "relbound/cli.hpp"
#include "relbound/factor.hpp"
#include "relbound/induced.hpp"
#include "relbound/trajectory.hpp"

using namespace relbound;

namespace {

struct Verdict {
  bool ok = true;
  std::ostringstream detail;

  void require(bool cond, const std::string& what) {
    if (!cond) {
      ok = false;
      detail << " [failed: " << what << "]";
    }
  }
};

int failures = 0;

void criterion(int id, const std::string& title, double limit_s, const std::function<void(Verdict&)>& body) {
  Verdict v;
  const auto start = std::chrono::steady_clock::now();
  try {
    body(v);
  } catch (const std::exception& e) {
    v.ok = false;
    v.detail << " [exception: " << e.what() << "]";
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (limit_s > 0 && secs >= limit_s) {
    v.ok = false;
    v.detail << " [runtime " << secs << " s exceeds " << limit_s << " s]";
  }
  failures += !v.ok;
  std::cout << (v.ok ? "PASS" : "FAIL") << "  " << id << ". " << title << ":" << v.detail.str() << " ("
            << std::fixed << std::setprecision(3) << secs << " s)" << std::endl;
}

Rational q(long p, long d) { return make_rational(p, d); }

}  // namespace

int main() {
  const auto mu = StepDistribution::simple(2);
  const Measure nu = Measure::harmonic(2);
  const FiniteBase flip = FiniteBase::uniform(FiniteAction::flip(2));

  criterion(1, "Non-example reproduction", 1.0, [&](Verdict& v) {
    const auto paper = cli::run({"nonexample", {{"convention", "paper-term-list"}}, false});
    v.require(paper.record["four_lhs"] == "5/18" && paper.record["four_rhs"] == "2/3", "paper-term-list values");
    v.require(paper.record["verdict"] == "not relatively μ-stationary", "paper-term-list verdict");
    v.require(paper.exit_code == 0, "exit code");
    const auto strict = cli::run({"nonexample", {{"convention", "strict"}}, false});
    const Rational residual = parse_rational(strict.record["residual"].get<std::string>());
    // Brute force over the depth-4 sphere: ν_{z1} = 2ν on [a^{±1}], ν_{z2} = 2ν on [b^{±1}].
    Rational four_lhs = 0;
    const std::pair<const char*, char> terms[] = {{"a", 'a'}, {"A", 'a'}, {"b", 'b'}, {"B", 'b'}};
    for (const auto& [g, fiber] : terms) {
      std::size_t hits = 0;
      for (const auto& u : oracle::preimage_cells(g, "ab", 2, 4)) hits += std::tolower(u[0]) == fiber;
      four_lhs += 2 * oracle::uniform_share(hits, 2, 4);
    }
    const Rational brute = (four_lhs - 4 * 2 * oracle::uniform_share(1, 2, 2)) / 4;
    v.require(residual != 0 && residual == brute, "strict residual vs depth-4 brute force");
    v.detail << " paper 4·LHS=" << paper.record["four_lhs"].get<std::string>()
             << " 4·RHS=" << paper.record["four_rhs"].get<std::string>() << "; strict residual " << to_string(residual)
             << " (brute force " << to_string(brute) << ")";
  });

  criterion(2, "Harmonic stationarity, k=2,3, depth ≤ 6", 10.0, [&](Verdict& v) {
    std::size_t cells = 0;
    for (int k : {2, 3}) {
      const Measure h = Measure::harmonic(k);
      const Measure pushed = convolve_push(StepDistribution::simple(k), h);
      std::size_t residuals = 0;
      for (const auto& w : ball(k, 6)) {
        residuals += eval(pushed, w) != eval(h, w);
        ++cells;
      }
      v.require(residuals == 0, "k=" + std::to_string(k));
    }
    v.detail << " " << cells << " cylinders, zero residuals";
  });

  criterion(3, "Relative Poisson product over Z/2", 60.0, [&](Verdict& v) {
    ProximalityParams p;
    p.samples = 200;
    p.steps = 60;
    p.depth = 3;
    p.tau = q(99, 100);
    p.seed = 7;
    for (int y = 0; y < 2; ++y) {
      const auto rep = verify_product_is_relative_boundary(flip, nu, mu, y, 4, p);
      v.require(rep.stationarity.passed(), "exact stationarity at depth 4");
      v.require(rep.proximality.fraction() >= 0.90, "fraction ≥ 0.90");
      v.require(rep.proximality.tag_constancy() == 1.0, "Y-coordinate constancy");
      v.require(rep.factorization_failures == 0, "factorization");
      v.detail << " y=" << y << ": " << rep.stationarity.checked() << " cells exact, fraction "
               << rep.proximality.fraction() << ", constancy " << rep.proximality.tag_constancy() << ";";
    }
  });

  criterion(4, "Barycenter equation, one-point base, [a], M=2000, N=40", 0, [&](Verdict& v) {
    const auto one = one_point_system(nu);
    const auto est = barycenter_estimate(one, mu, 0, SpaceSet{0, BoundarySet::cylinder(oracle::word("a"))}, 2000, 40, 1);
    v.require(est.target && *est.target == q(1, 4), "target 1/4");
    v.require(est.within(4), "|mean − 1/4| ≤ 4σ");
    v.detail << " mean " << est.mean << ", stderr " << est.std_error << ", |dev|/σ "
             << std::fabs(est.mean - 0.25) / est.std_error << " (two-sided 4σ tail ≈ 6.3e-5 < 1e-4)";
  });

  criterion(5, "Martingale / harmonicity on the radius-3 ball", 5.0, [&](Verdict& v) {
    const auto prod = product_system(flip, nu);
    const auto one = one_point_system(nu);
    const SpaceSet a{0, BoundarySet::cylinder(oracle::word("a"))};
    const SpaceSet ab{0, BoundarySet::cylinder(oracle::word("ab"))};
    for (int y = 0; y < 2; ++y) {
      const SpaceSet f{y, BoundarySet::cylinder(oracle::word("a"))};
      v.require(martingale_check(prod, mu, y, f, 3).passed(), "product system");
      v.require(check_harmonicity(prod, mu, y, f, 3).passed(), "product system (transform route)");
    }
    v.require(martingale_check(one, mu, 0, a, 3).passed() && martingale_check(one, mu, 0, ab, 3).passed(),
              "one-point base");
    const auto non = martingale_check(nonexample_system(), mu, 0, ab, 3, ActionMode::GeneratorLevel);
    const bool nonzero_at_e = !non.entries.empty() && non.entries[0].element->empty() && non.entries[0].difference() != 0;
    v.require(nonzero_at_e, "non-example residual at e");
    v.detail << " product and one-point residuals 0 on " << ball(2, 3).size() << " elements; non-example at e: "
             << to_string(non.entries[0].difference());
  });

  criterion(6, "Equivariance lemma, 500 random instances", 0, [&](Verdict& v) {
    const auto rep = structure_check(product_system(flip, nu), mu, 500, 10, 3, 2024);
    v.require(rep.instances == 500 && rep.equivariance_failures == 0, "equivariance");
    v.detail << " " << rep.instances << " instances, " << rep.equivariance_failures << " failures";
  });

  criterion(7, "Cocycle, induced action, fiber stationarity", 30.0, [&](Verdict& v) {
    const auto rec = cli::run({"induced", {{"triples", "1000"}, {"pairs", "500"}, {"depth", "4"}}, false}).record;
    v.require(rec["cocycle"]["triples"] == 1000 && rec["cocycle"]["identity_failures"] == 0, "cocycle identity");
    v.require(rec["cocycle"]["inverse_cocycle_failures"] == 0, "inverse cocycle identity");
    v.require(rec["composition"]["pairs"] == 500 && rec["composition"]["failures"] == 0, "action composition");
    const auto sys = InducedSystem::even_length_instance();
    const auto fiber = verify_fiber_stationarity(sys, 1, 4);
    v.require(fiber.passed(), "fiber stationarity at depth 4");
    v.detail << " 1000 triples, 500 pairs, " << fiber.fiber.checked() << " cylinders: zero failures";
  });

  criterion(8, "Joining: product formula and diagonal concentration", 0, [&](Verdict& v) {
    const auto id = identity_system(flip);
    const auto prod = product_system(flip, nu);
    const auto one = one_point_system(nu);
    const SpaceSet full{0, BoundarySet::full(2)};
    const SpaceSet a{0, BoundarySet::cylinder(oracle::word("a"))};
    const SpaceSet b{0, BoundarySet::cylinder(oracle::word("b"))};
    const auto pr = joining_estimate(id, prod, mu, full, a, 2000, 40, 1);
    v.require(pr.target && pr.within(4), "identity-factor product formula within 4σ");
    const auto off = joining_estimate(one, one, mu, a, b, 2000, 40, 1);
    v.require(off.mean <= 0.01, "self-joining [a]×[b] ≤ 0.01");
    v.detail << " identity-product " << pr.mean << " vs " << to_string(*pr.target) << " (σ " << pr.std_error
             << "); self [a]×[b] " << off.mean;
  });

  criterion(9, "Determinism of every experiment", 0, [&](Verdict& v) {
    for (const auto& e : cli::catalog()) {
      const cli::ExperimentConfig config{e.name, {}, false};
      const auto r1 = cli::run(config);
      const auto r2 = cli::run(config);
      v.require(cli::emit_json({r1.record}) == cli::emit_json({r2.record}) && r1.csv == r2.csv, e.name);
    }
    v.detail << " " << cli::catalog().size() << " experiments byte-identical on rerun";
  });

  return failures == 0 ? 0 : 1;
}
