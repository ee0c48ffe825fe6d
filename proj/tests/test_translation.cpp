#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "cohlog/model.hpp"
#include "cohlog/parse.hpp"
#include "cohlog/prover.hpp"
#include "cohlog/reconstrual.hpp"
#include "cohlog/subst.hpp"
#include "cohlog/tmap.hpp"
#include "oracles.hpp"

using namespace cohlog;
using cohlog::testing::fixturePath;

static const Budget kB{10, 4, 4};

static Theory loadTheory(const std::string& file) {
  return parseTheory(readFile(fixturePath(file)));
}

static Reconstrual loadTranslation(const std::string& file, const Theory& src,
                                   const Theory& dst) {
  return parseTranslation(readFile(fixturePath(file)), src, dst);
}

static const ObligationResult& entryNamed(const VerificationReport& rep,
                                          const std::string& name) {
  for (const auto& e : rep.entries)
    if (e.obligation.name == name) return e;
  throw std::runtime_error("no obligation named " + name);
}

TEST_CASE("identity reconstrual is the do-nothing translation") {
  Theory eq = loadTheory("eq.thy");
  Reconstrual id = identityReconstrual(eq);
  id.validate();

  FormulaPtr axy = parseFormulaText("A(x, y)", eq);
  CHECK(formulaEqual(applyReconstrual(id, axy), axy));

  Translation t = verifyTranslation(id, kB);
  CHECK(t.isTranslation == Flag::Proved);
  CHECK(t.isEqualityPreserving == Flag::Proved);
  CHECK(t.isStrong == Flag::Proved);
  CHECK(t.evidence.verdict() == Outcome::Proved);
}

TEST_CASE("discrete translation EQ -> TWO verifies strong") {
  Theory eq = loadTheory("eq.thy");
  Theory two = loadTheory("two.thy");
  Reconstrual f = loadTranslation("eq_to_two.tr", eq, two);

  Translation t = verifyTranslation(f, kB);
  CHECK(t.isTranslation == Flag::Proved);
  CHECK(t.isEqualityPreserving == Flag::Proved);
  CHECK(t.isStrong == Flag::Proved);
  // The per-axiom obligations carry the axiom labels.
  CHECK(entryNamed(t.evidence, "axiom:refl").proof.outcome == Outcome::Proved);
  CHECK(entryNamed(t.evidence, "axiom:symm").proof.outcome == Outcome::Proved);
  CHECK(entryNamed(t.evidence, "axiom:trans").proof.outcome == Outcome::Proved);
}

TEST_CASE("propositional collapse P2 -> FREE1 verifies") {
  Theory p2 = loadTheory("p2.thy");
  Theory free1 = loadTheory("free1.thy");
  Reconstrual f = loadTranslation("p2_to_free1.tr", p2, free1);

  Translation t = verifyTranslation(f, kB);
  CHECK(t.isTranslation == Flag::Proved);
  CHECK(entryNamed(t.evidence, "axiom:p_implies_q").proof.outcome == Outcome::Proved);
}

TEST_CASE("the P/Q swap is refuted with the expected countermodel") {
  Theory p2 = loadTheory("p2.thy");
  Reconstrual f = loadTranslation("p2_swap.tr", p2, p2);

  Translation t = verifyTranslation(f, kB);
  CHECK(t.isTranslation == Flag::Failed);
  const auto& bad = entryNamed(t.evidence, "axiom:p_implies_q");
  REQUIRE(bad.proof.outcome == Outcome::Refuted);
  REQUIRE(bad.proof.countermodel.has_value());
  const FiniteModel& m = *bad.proof.countermodel;
  CHECK(m.relations.at("Q").count({}) == 1);  // Q true
  CHECK(m.relations.at("P").count({}) == 0);  // P false
}

TEST_CASE("empty sort image collapses quantifiers") {
  Theory one = parseTheory("theory ONE { sort s }");
  Theory none = parseTheory("theory NONE { rel R }");
  Reconstrual f;
  f.name = "erase";
  f.src = one;
  f.dst = none;
  SortImage si;
  si.image = {};
  si.domain = SubstitutionClass{fTop(), {}};
  si.equality = SubstitutionClass{fTop(), {}};
  f.sortImages["s"] = si;
  f.validate();

  FormulaPtr phi = parseFormulaText("exists x:s . top", one);
  FormulaPtr img = applyReconstrual(f, phi);
  CHECK(freeContext(img).empty());
  // The image is a tautology: the witness block is empty.
  Sequent taut;
  taut.rhs = img;
  CHECK(proveSequent(none, taut, kB).outcome == Outcome::Proved);
}

TEST_CASE("the A-swap endomap of EQ is a translation") {
  Theory eq = loadTheory("eq.thy");
  Reconstrual swap = parseTranslation(
      "translation swap : EQ -> EQ { sort s -> (x : s) rel A(x, y) -> A(y, x) }",
      eq, eq);

  FormulaPtr chain = parseFormulaText("A(x, y) & A(y, z)", eq);
  CHECK(printFormula(applyReconstrual(swap, chain)) == "A(y, x) & A(z, y)");

  Translation t = verifyTranslation(swap, kB);
  CHECK(t.isTranslation == Flag::Proved);
  CHECK(t.isStrong == Flag::Proved);
}

TEST_CASE("composition: identities are neutral and swap squares to identity") {
  Theory eq = loadTheory("eq.thy");
  Reconstrual id = identityReconstrual(eq);
  Reconstrual swap = parseTranslation(
      "translation swap : EQ -> EQ { sort s -> (x : s) rel A(x, y) -> A(y, x) }",
      eq, eq);

  Reconstrual l = composeReconstruals(id, swap);
  Reconstrual r = composeReconstruals(swap, id);
  CHECK(l.relImages.at("A") == swap.relImages.at("A"));
  CHECK(r.relImages.at("A") == swap.relImages.at("A"));

  Reconstrual sq = composeReconstruals(swap, swap);
  CHECK(sq.relImages.at("A") == id.relImages.at("A"));

  // Bi-entailment of the squared image with the identity image, in EQ.
  const SubstitutionClass& img = sq.relImages.at("A");
  std::vector<TermPtr> vars;
  for (const auto& v : img.ctx) vars.push_back(mkVar(v.name, v.sort));
  FormulaPtr atom = fAtom("A", vars);
  Sequent fwd{"", {img.formula}, atom};
  Sequent bwd{"", {atom}, img.formula};
  CHECK(proveSequent(eq, fwd, Budget{3, 2, 2}).outcome == Outcome::Proved);
  CHECK(proveSequent(eq, bwd, Budget{3, 2, 2}).outcome == Outcome::Proved);
}

TEST_CASE("composite domains conjoin both layers") {
  Theory eq = loadTheory("eq.thy");
  Theory two = loadTheory("two.thy");
  Reconstrual f = loadTranslation("eq_to_two.tr", eq, two);
  Reconstrual idEq = identityReconstrual(eq);
  Reconstrual comp = composeReconstruals(f, idEq);
  comp.validate();
  CHECK(comp.src.name == "EQ");
  CHECK(comp.dst.name == "TWO");
  CHECK(comp.relImages.at("A") == f.relImages.at("A"));
}

TEST_CASE("pullback along the identity relabels carriers only") {
  Theory eq = loadTheory("eq.thy");
  Reconstrual id = identityReconstrual(eq);
  FiniteModel m;
  m.name = "m";
  m.carriers["s"] = {"p", "q", "r"};
  m.relations["A"] = {{0, 0}, {1, 1}, {2, 2}, {1, 2}, {2, 1}};
  REQUIRE(checkModel(m, eq).ok);

  FiniteModel pb = pullbackModel(id, m);
  CHECK(pb.carrierSize("s") == 3);
  CHECK(pb.relations.at("A") == m.relations.at("A"));
  CHECK(checkModel(pb, eq).ok);
}

TEST_CASE("pullback of the two-element TWO model along the discrete translation") {
  Theory eq = loadTheory("eq.thy");
  Theory two = loadTheory("two.thy");
  Reconstrual f = loadTranslation("eq_to_two.tr", eq, two);
  FiniteModel m2 = parseModel(readFile(fixturePath("two_model.mod")), two);
  REQUIRE(checkModel(m2, two).ok);

  FiniteModel pb = pullbackModel(f, m2);
  CHECK(pb.carrierSize("s") == 2);
  CHECK(pb.relations.at("A") == std::set<std::vector<int>>{{0, 0}, {1, 1}});
  CHECK(checkModel(pb, eq).ok);
}

TEST_CASE("pullback along a total relation image fills the table") {
  Theory eq = loadTheory("eq.thy");
  Reconstrual f = parseTranslation(
      "translation total : EQ -> EQ { sort s -> (x : s) rel A(x, y) -> top }", eq,
      eq);
  FiniteModel discrete;
  discrete.name = "discrete";
  discrete.carriers["s"] = {"0", "1"};
  discrete.relations["A"] = {{0, 0}, {1, 1}};
  REQUIRE(checkModel(discrete, eq).ok);

  FiniteModel pb = pullbackModel(f, discrete);
  CHECK(pb.relations.at("A").size() == 4);
  CHECK(checkModel(pb, eq).ok);
}

TEST_CASE("pullbacks of target models satisfy the source theory") {
  Theory eq = loadTheory("eq.thy");
  Theory two = loadTheory("two.thy");
  Theory p2 = loadTheory("p2.thy");
  Theory free1 = loadTheory("free1.thy");
  Reconstrual f = loadTranslation("eq_to_two.tr", eq, two);
  Reconstrual g = loadTranslation("p2_to_free1.tr", p2, free1);

  int seen = 0;
  enumerateModels(two, 2, [&](const FiniteModel& m) {
    FiniteModel pb = pullbackModel(f, m);
    CHECK(checkModel(pb, eq).ok);
    ++seen;
    return true;
  });
  CHECK(seen > 0);

  seen = 0;
  enumerateModels(free1, 1, [&](const FiniteModel& m) {
    FiniteModel pb = pullbackModel(g, m);
    CHECK(checkModel(pb, p2).ok);
    ++seen;
    return true;
  });
  CHECK(seen == 2);  // R true and R false
}

TEST_CASE("the trivial t-map on the identity verifies as an isomorphism") {
  Theory eq = loadTheory("eq.thy");
  Reconstrual id = identityReconstrual(eq);
  TMap chi = parseTMap(readFile(fixturePath("eq_id.tmap")), id, id);
  CHECK(chi.isoClaimed);

  VerificationReport rep = verifyTMap(chi, kB);
  CHECK(rep.verdict() == Outcome::Proved);
  CHECK(entryNamed(rep, "dom:s").proof.outcome == Outcome::Proved);
  CHECK(entryNamed(rep, "ex:s").proof.outcome == Outcome::Proved);
  CHECK(entryNamed(rep, "uniq:s").proof.outcome == Outcome::Proved);
  CHECK(entryNamed(rep, "onto:s").proof.outcome == Outcome::Proved);
  CHECK(entryNamed(rep, "inj:s").proof.outcome == Outcome::Proved);
  CHECK(entryNamed(rep, "nat:A").proof.outcome == Outcome::Proved);
  CHECK(entryNamed(rep, "nat:eq:s").proof.outcome == Outcome::Proved);
}

TEST_CASE("tmapAtContext conjoins per-variable components") {
  Theory eq = loadTheory("eq.thy");
  Reconstrual id = identityReconstrual(eq);
  TMap chi = parseTMap(readFile(fixturePath("eq_id.tmap")), id, id);

  Context ctx = {{"v1", "s"}, {"v2", "s"}};
  auto fromB = id.imageBlocks(Context{{"a1", "s"}, {"a2", "s"}});
  auto toB = id.imageBlocks(Context{{"b1", "s"}, {"b2", "s"}});
  FormulaPtr joint = tmapAtContext(chi, ctx, fromB, toB);
  CHECK(joint->kind == FK::And);
  CHECK(printFormula(joint) == "a1 = b1 & a2 = b2");
}

TEST_CASE("naturality fails for the swap against identity on the directed variant") {
  Theory dir = parseTheory(
      "theory DIR { sort s rel A : s * s "
      "ax refl: [x:s] |- A(x, x) "
      "ax trans: A(x, y), A(y, z) |- A(x, z) }");
  Reconstrual swap = parseTranslation(
      "translation swap : DIR -> DIR { sort s -> (x : s) rel A(x, y) -> A(y, x) }",
      dir, dir);
  CHECK(verifyTranslation(swap, kB).isTranslation == Flag::Proved);

  TMap chi;
  chi.name = "triv";
  chi.from = swap;
  chi.to = identityReconstrual(dir);
  chi.components["s"] = SubstitutionClass{
      fEq(mkVar("x", "s"), mkVar("y", "s")), {{"x", "s"}, {"y", "s"}}};

  VerificationReport rep = verifyTMap(chi, kB);
  CHECK(rep.verdict() == Outcome::Refuted);
  const auto& nat = entryNamed(rep, "nat:A");
  REQUIRE(nat.proof.outcome == Outcome::Refuted);
  REQUIRE(nat.proof.countermodel.has_value());
  CHECK(nat.proof.countermodel->carrierSize("s") == 2);
}

TEST_CASE("homotopy equivalence of a theory with itself via identities") {
  Theory eq = loadTheory("eq.thy");
  Reconstrual id = identityReconstrual(eq);
  TMap chi = parseTMap(readFile(fixturePath("eq_id.tmap")), id, id);

  VerificationReport rep = verifyHomotopyEquivalence(id, id, chi, chi, kB);
  CHECK(rep.verdict() == Outcome::Proved);
  for (const auto& e : rep.entries) CHECK(e.proof.outcome == Outcome::Proved);
}
