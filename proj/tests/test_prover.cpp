#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "cohlog/model.hpp"
#include "cohlog/parse.hpp"
#include "cohlog/prover.hpp"
#include "oracles.hpp"

using namespace cohlog;
using namespace cohlog::testing;

static Theory loadTheory(const std::string& file) {
  return parseTheory(readFile(fixturePath(file)));
}

static const Budget kB{10, 4, 4};

TEST_CASE("P2 proves its axiom and refutes the converse") {
  Theory p2 = loadTheory("p2.thy");

  ProofResult fwd = proveSequent(p2, parseSequentText("P |- Q", p2), kB);
  CHECK(fwd.outcome == Outcome::Proved);
  std::string why;
  CHECK(validateTrace(p2, parseSequentText("P |- Q", p2), fwd.trace, &why));

  Sequent conv = parseSequentText("Q |- P", p2);
  ProofResult back = proveSequent(p2, conv, kB);
  REQUIRE(back.outcome == Outcome::Refuted);
  REQUIRE(back.countermodel.has_value());
  const FiniteModel& m = *back.countermodel;
  // Frozen countermodel: Q true, P false.
  CHECK(m.relations.at("Q").count({}) == 1);
  CHECK(m.relations.at("P").count({}) == 0);
  // Independent re-check: the countermodel satisfies the theory and breaks
  // the sequent.
  CHECK(checkModel(m, p2).ok);
  CHECK_FALSE(holdsIn(m, conv));
}

TEST_CASE("P2 refutes the bare atom") {
  Theory p2 = loadTheory("p2.thy");
  ProofResult r = proveSequent(p2, parseSequentText("|- P", p2), kB);
  REQUIRE(r.outcome == Outcome::Refuted);
  CHECK(r.countermodel->relations.at("P").empty());
}

TEST_CASE("EQ chains transitivity across three steps") {
  Theory eq = loadTheory("eq.thy");
  Sequent s = parseSequentText("A(x, y), A(y, z), A(z, w) |- A(x, w)", eq);
  ProofResult r = proveSequent(eq, s, kB);
  CHECK(r.outcome == Outcome::Proved);
  std::string why;
  CHECK(validateTrace(eq, s, r.trace, &why));
}

TEST_CASE("EQ does not relate arbitrary pairs: diagonal countermodel") {
  Theory eq = loadTheory("eq.thy");
  Sequent s = parseSequentText("|- A(x, y)", eq);
  ProofResult r = proveSequent(eq, s, kB);
  REQUIRE(r.outcome == Outcome::Refuted);
  const FiniteModel& m = *r.countermodel;
  // Frozen: two elements, A is exactly the diagonal.
  REQUIRE(m.carriers.at("s").size() == 2);
  std::set<std::vector<int>> diagonal = {{0, 0}, {1, 1}};
  CHECK(m.relations.at("A") == diagonal);
  CHECK(checkModel(m, eq).ok);
  CHECK_FALSE(holdsIn(m, s));
}

TEST_CASE("EQ symmetry-transitivity composite: A(x,y) & A(x,z) entails A(y,z)") {
  Theory eq = loadTheory("eq.thy");
  Sequent s = parseSequentText("A(x, y), A(x, z) |- A(y, z)", eq);
  CHECK(proveSequent(eq, s, kB).outcome == Outcome::Proved);
}

TEST_CASE("TWO separates its constants with the canonical countermodel") {
  Theory two = loadTheory("two.thy");
  Sequent s = parseSequentText("[x:s, y:s] |- x = y", two);
  ProofResult r = proveSequent(two, s, kB);
  REQUIRE(r.outcome == Outcome::Refuted);
  const FiniteModel& m = *r.countermodel;
  // Frozen: two elements with a and b landing on different ones.
  REQUIRE(m.carriers.at("s").size() == 2);
  CHECK(m.functions.at("a").at({}) == 0);
  CHECK(m.functions.at("b").at({}) == 1);
  CHECK(checkModel(m, two).ok);
  CHECK_FALSE(holdsIn(m, s));
}

TEST_CASE("TWO proves its cover and inconsistency sequents") {
  Theory two = loadTheory("two.thy");
  CHECK(proveSequent(two, parseSequentText("[x:s] |- x = a | x = b", two), kB)
            .outcome == Outcome::Proved);
  CHECK(proveSequent(two, parseSequentText("a = b |- bot", two), kB).outcome ==
        Outcome::Proved);
  // Case analysis: everything equal to a or to b is covered.
  CHECK(proveSequent(two, parseSequentText("[x:s, y:s, z:s] x = y |- y = x", two), kB)
            .outcome == Outcome::Proved);
}

TEST_CASE("TWO decides equalities with constants by case split") {
  Theory two = loadTheory("two.thy");
  // x = a, x = b together are contradictory.
  CHECK(proveSequent(two, parseSequentText("x = a, x = b |- bot", two), kB).outcome ==
        Outcome::Proved);
}

TEST_CASE("injective-not-surjective needs an infinite model: Unknown") {
  Theory t = parseTheory(
      "theory INJ {\n"
      "  sort s\n"
      "  fun f : s -> s\n"
      "  ax inj: f(x) = f(y) |- x = y\n"
      "}");
  Sequent surj = parseSequentText("[x:s] |- exists y:s . f(y) = x", t);
  ProofResult r = proveSequent(t, surj, kB);
  CHECK(r.outcome == Outcome::Unknown);
  CHECK_FALSE(r.reason.empty());
}

TEST_CASE("classical nodes make proof search return Unknown") {
  Theory c = parseTheory("theory C classical { rel P ax lem: |- P | not P }");
  ProofResult r = proveSequent(c, parseSequentText("|- P | not P", c), kB);
  CHECK(r.outcome == Outcome::Unknown);
  CHECK(r.reason.find("classical") != std::string::npos);
}

TEST_CASE("empty carriers are legitimate: existence claims can be refuted") {
  Theory t = parseTheory("theory E { sort s rel R : s }");
  ProofResult r = proveSequent(t, parseSequentText("|- exists x:s . R(x)", t), kB);
  REQUIRE(r.outcome == Outcome::Refuted);
  CHECK(r.countermodel->carriers.at("s").empty());
}

TEST_CASE("existential witnesses are created and reused") {
  Theory t = parseTheory(
      "theory W {\n"
      "  sort s\n"
      "  rel R : s * s\n"
      "  ax seed: [x:s] |- exists y:s . R(x, y)\n"
      "}");
  // Proving the seed itself needs one witness.
  CHECK(proveSequent(t, parseSequentText("[x:s] |- exists y:s . R(x, y)", t), kB)
            .outcome == Outcome::Proved);
  // Unbounded chains exhaust the witness budget rather than diverging.
  Sequent far = parseSequentText(
      "[x:s] |- exists a:s . exists b:s . exists c:s . exists d:s . exists e:s . "
      "R(x, a) & R(a, b) & R(b, c) & R(c, d) & R(d, e)",
      t);
  ProofResult r = proveSequent(t, far, kB);
  CHECK(r.outcome == Outcome::Unknown);
}

TEST_CASE("validateTrace rejects tampered traces") {
  Theory p2 = loadTheory("p2.thy");
  Sequent s = parseSequentText("P |- Q", p2);
  ProofResult r = proveSequent(p2, s, kB);
  REQUIRE(r.outcome == Outcome::Proved);

  std::vector<std::string> bad = r.trace;
  bad.push_back("apply made_up_rule [x=e0]");
  std::string why;
  CHECK_FALSE(validateTrace(p2, s, bad, &why));
  CHECK(why.find("made_up_rule") != std::string::npos);

  std::vector<std::string> empty;
  CHECK_FALSE(validateTrace(p2, s, empty, &why));
}

TEST_CASE("decidePropositional matches the independent valuation oracle") {
  Rng rng(20260819);
  for (int i = 0; i < 60; ++i) {
    Theory t = randomPropTheory(rng, "R" + std::to_string(i), 4, 6);
    for (int j = 0; j < 5; ++j) {
      Sequent s = randomPropSequent(rng, t.sig, "goal");
      CHECK(decidePropositional(t, s) == oracleProves(t, s));
    }
  }
}

TEST_CASE("decidePropositional rejects non-propositional signatures") {
  Theory eq = loadTheory("eq.thy");
  CHECK_THROWS_AS(decidePropositional(eq, parseSequentText("|- A(x, x)", eq)),
                  InputError);
}

TEST_CASE("prover agrees with the oracle on random propositional theories") {
  Rng rng(42);
  int proved = 0, refuted = 0;
  for (int i = 0; i < 60; ++i) {
    Theory t = randomPropTheory(rng, "R" + std::to_string(i), 4, 6);
    for (int j = 0; j < 5; ++j) {
      Sequent s = randomPropSequent(rng, t.sig, "goal");
      bool truth = oracleProves(t, s);
      ProofResult r = proveSequent(t, s, kB);
      // Soundness both ways, and no Unknown should be needed at this scale.
      REQUIRE(r.outcome != Outcome::Unknown);
      CHECK((r.outcome == Outcome::Proved) == truth);
      if (r.outcome == Outcome::Proved) {
        ++proved;
        std::string why;
        CHECK(validateTrace(t, s, r.trace, &why));
      } else {
        ++refuted;
        CHECK(checkModel(*r.countermodel, t).ok);
        CHECK_FALSE(holdsIn(*r.countermodel, s));
      }
    }
  }
  CHECK(proved > 20);   // the sample exercises both outcomes
  CHECK(refuted > 20);
}

TEST_CASE("budget monotonicity: raising budgets never loses a verdict") {
  Rng rng(7);
  Budget small{3, 1, 1};
  for (int i = 0; i < 25; ++i) {
    Theory t = randomPropTheory(rng, "R" + std::to_string(i), 3, 4);
    Sequent s = randomPropSequent(rng, t.sig, "goal");
    ProofResult lo = proveSequent(t, s, small);
    if (lo.outcome == Outcome::Unknown) continue;
    ProofResult hi = proveSequent(t, s, kB);
    CHECK(lo.outcome == hi.outcome);
  }
}

TEST_CASE("proofs are deterministic across runs") {
  Theory two = loadTheory("two.thy");
  Sequent s = parseSequentText("[x:s, y:s] |- x = y", two);
  ProofResult a = proveSequent(two, s, kB);
  ProofResult b = proveSequent(two, s, kB);
  CHECK(a.outcome == b.outcome);
  CHECK(a.trace == b.trace);
  REQUIRE(a.countermodel.has_value());
  CHECK(a.countermodel->key() == b.countermodel->key());
}

TEST_CASE("soundness against enumerated models of EQ") {
  Theory eq = loadTheory("eq.thy");
  // Every sequent the prover proves must hold in every model found by
  // exhaustive search.
  std::vector<Sequent> goals = {
      parseSequentText("A(x, y) |- A(y, x)", eq),
      parseSequentText("A(x, y), A(y, z) |- A(x, z)", eq),
      parseSequentText("|- A(x, x)", eq),
  };
  for (const auto& g : goals) {
    ProofResult r = proveSequent(eq, g, kB);
    REQUIRE(r.outcome == Outcome::Proved);
  }
  int models = 0;
  enumerateModels(eq, 2, [&](const FiniteModel& m) {
    ++models;
    for (const auto& g : goals) CHECK(holdsIn(m, g));
    return true;
  });
  CHECK(models > 0);
}

TEST_CASE("findCountermodel produces the smallest refutation in canonical order") {
  Theory eq = loadTheory("eq.thy");
  auto m = findCountermodel(eq, parseSequentText("A(x, y) |- x = y", eq), 2);
  REQUIRE(m.has_value());
  CHECK(m->carriers.at("s").size() == 2);
  // A relates a distinct pair without the equality.
  bool offDiagonal = false;
  for (const auto& tup : m->relations.at("A"))
    if (tup[0] != tup[1]) offDiagonal = true;
  CHECK(offDiagonal);
}
