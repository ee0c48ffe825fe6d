#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <set>
#include <string>
#include <vector>

#include "cohlog/model.hpp"
#include "cohlog/morita.hpp"
#include "cohlog/parse.hpp"
#include "cohlog/proper.hpp"
#include "cohlog/prover.hpp"
#include "cohlog/reconstrual.hpp"
#include "cohlog/subst.hpp"
#include "oracles.hpp"

using namespace cohlog;
using cohlog::testing::fixturePath;

static const Budget kB{10, 4, 4};

static Theory loadTheory(const std::string& file) {
  return parseTheory(readFile(fixturePath(file)));
}

static const ObligationResult& entryNamed(const VerificationReport& rep,
                                          const std::string& name) {
  for (const auto& e : rep.entries)
    if (e.obligation.name == name) return e;
  throw std::runtime_error("no obligation named " + name);
}

static const Sequent& axiomLabeled(const std::vector<Sequent>& axs,
                                   const std::string& label) {
  for (const auto& a : axs)
    if (a.label == label) return a;
  throw std::runtime_error("no axiom labeled " + label);
}

// Compares a built sequent against its concrete syntax, both rendered by the
// same printer, so the check is insensitive to printer conventions.
static bool sameSequent(const Sequent& built, const std::string& expected,
                        const Theory& t) {
  return printSequent(built) == printSequent(parseSequentText(expected, t));
}

static SubstitutionClass classOver(const Theory& t, const Context& ctx,
                                   const std::string& text) {
  return SubstitutionClass{parseFormulaText(text, t, ctx), ctx};
}

static std::vector<std::string> obligationNames(const std::vector<Obligation>& obs) {
  std::vector<std::string> out;
  for (const auto& o : obs) out.push_back(o.name);
  return out;
}

static int countOutcome(const VerificationReport& rep, Outcome o) {
  int n = 0;
  for (const auto& e : rep.entries)
    if (e.proof.outcome == o) ++n;
  return n;
}

// ---------------------------------------------------------------------------
// Single extension steps: emitted signature, defining axioms, obligations.

TEST_CASE("quotient step emits surjection and kernel axioms plus equivalence obligations") {
  Theory eq = loadTheory("eq.thy");
  QuotientStep st{"sA", "p", classOver(eq, {{"x", "s"}, {"y", "s"}}, "A(x, y)")};
  ExtensionResult res = extendMorita(eq, st);

  CHECK(res.extended.name == "EQ+sA");
  CHECK(res.extended.sig.hasSort("sA"));
  REQUIRE(res.extended.sig.function("p") != nullptr);
  CHECK(res.extended.sig.function("p")->domain == std::vector<std::string>{"s"});
  CHECK(res.extended.sig.function("p")->codomain == "sA");

  REQUIRE(res.definingAxioms.size() == 3);
  CHECK(sameSequent(axiomLabeled(res.definingAxioms, "sA_surj"),
                    "[z:sA] |- exists x:s . p(x) = z", res.extended));
  CHECK(sameSequent(axiomLabeled(res.definingAxioms, "sA_ker_fwd"),
                    "p(x) = p(y) |- A(x, y)", res.extended));
  CHECK(sameSequent(axiomLabeled(res.definingAxioms, "sA_ker_bwd"),
                    "A(x, y) |- p(x) = p(y)", res.extended));
  // The defining axioms are appended to the extended theory.
  for (const auto& ax : res.definingAxioms)
    CHECK(printSequent(axiomLabeled(res.extended.axioms, ax.label)) == printSequent(ax));

  CHECK(obligationNames(res.obligations) ==
        std::vector<std::string>{"refl:sA", "symm:sA", "trans:sA"});
  for (const auto& o : res.obligations) CHECK(o.inTheory == "EQ");
  CHECK(sameSequent(res.obligations[0].sequent, "[x:s] |- A(x, x)", eq));
  CHECK(sameSequent(res.obligations[1].sequent, "A(x, y) |- A(y, x)", eq));
  CHECK(sameSequent(res.obligations[2].sequent, "A(x, y), A(y, z) |- A(x, z)", eq));

  VerificationReport rep = dischargeAll(res.obligations, {&eq}, kB);
  CHECK(rep.verdict() == Outcome::Proved);
  CHECK(rep.countProved() == 3);
}

TEST_CASE("terminal step emits inhabitation and uniqueness") {
  Theory eq = loadTheory("eq.thy");
  ExtensionResult res = extendMorita(eq, TerminalStep{"one"});

  CHECK(res.extended.name == "EQ+one");
  CHECK(res.extended.sig.hasSort("one"));
  REQUIRE(res.definingAxioms.size() == 2);
  CHECK(sameSequent(axiomLabeled(res.definingAxioms, "one_inhab"),
                    "|- exists x:one . x = x", res.extended));
  CHECK(sameSequent(axiomLabeled(res.definingAxioms, "one_unique"),
                    "[x:one, y:one] |- x = y", res.extended));
  CHECK(res.obligations.empty());
}

TEST_CASE("product step emits pairing and projection-jointly-mono axioms") {
  Theory eq = loadTheory("eq.thy");
  ExtensionResult res = extendMorita(eq, ProductStep{"P", {"s", "s"}, {"pr1", "pr2"}});

  CHECK(res.extended.name == "EQ+P");
  REQUIRE(res.definingAxioms.size() == 2);
  CHECK(sameSequent(axiomLabeled(res.definingAxioms, "P_pair"),
                    "[x1:s, x2:s] |- exists z:P . pr1(z) = x1 & pr2(z) = x2",
                    res.extended));
  CHECK(sameSequent(axiomLabeled(res.definingAxioms, "P_mono"),
                    "pr1(x) = pr1(y), pr2(x) = pr2(y) |- x = y", res.extended));
  CHECK(res.obligations.empty());
}

TEST_CASE("coproduct step with two summands emits cover, injectivity, disjointness") {
  Theory two = loadTheory("two.thy");
  ExtensionResult res = extendMorita(two, CoproductStep{"C", {"s", "s"}, {"i1", "i2"}});

  CHECK(res.extended.name == "TWO+C");
  REQUIRE(res.definingAxioms.size() == 4);
  CHECK(sameSequent(axiomLabeled(res.definingAxioms, "C_cover"),
                    "[z:C] |- (exists x:s . z = i1(x)) | (exists x:s . z = i2(x))",
                    res.extended));
  CHECK(sameSequent(axiomLabeled(res.definingAxioms, "C_inj_i1"),
                    "i1(x) = i1(y) |- x = y", res.extended));
  CHECK(sameSequent(axiomLabeled(res.definingAxioms, "C_inj_i2"),
                    "i2(x) = i2(y) |- x = y", res.extended));
  CHECK(sameSequent(axiomLabeled(res.definingAxioms, "C_disjoint"),
                    "i1(x1) = i2(x2) |- bot", res.extended));
  CHECK(res.obligations.empty());
}

TEST_CASE("subsort step emits membership in both directions and injectivity") {
  Theory eq = loadTheory("eq.thy");
  SubsortStep st{"refl_part", "inc", classOver(eq, {{"x", "s"}}, "A(x, x)")};
  ExtensionResult res = extendMorita(eq, st);

  CHECK(res.extended.name == "EQ+refl_part");
  REQUIRE(res.definingAxioms.size() == 3);
  CHECK(sameSequent(axiomLabeled(res.definingAxioms, "refl_part_in"),
                    "A(x, x) |- exists y:refl_part . inc(y) = x", res.extended));
  CHECK(sameSequent(axiomLabeled(res.definingAxioms, "refl_part_out"),
                    "exists y:refl_part . inc(y) = x |- A(x, x)", res.extended));
  CHECK(sameSequent(axiomLabeled(res.definingAxioms, "refl_part_mono"),
                    "[x:refl_part, y:refl_part] inc(x) = inc(y) |- x = y",
                    res.extended));
  CHECK(res.obligations.empty());
}

TEST_CASE("defined relation step emits both directions of its definition") {
  Theory eq = loadTheory("eq.thy");
  DefRelStep st{"B", classOver(eq, {{"x", "s"}, {"y", "s"}}, "A(x, y) | x = y")};
  ExtensionResult res = extendMorita(eq, st);

  CHECK(res.extended.name == "EQ+B");
  REQUIRE(res.definingAxioms.size() == 2);
  CHECK(sameSequent(axiomLabeled(res.definingAxioms, "B_fwd"),
                    "B(u1, u2) |- A(u1, u2) | u1 = u2", res.extended));
  CHECK(sameSequent(axiomLabeled(res.definingAxioms, "B_bwd"),
                    "A(u1, u2) | u1 = u2 |- B(u1, u2)", res.extended));
  CHECK(res.obligations.empty());
}

TEST_CASE("defined function step emits graph axioms and totality plus uniqueness obligations") {
  Theory two = loadTheory("two.thy");
  DefFunStep st{"other", classOver(two, {{"x", "s"}, {"y", "s"}},
                                   "(x = a & y = b) | (x = b & y = a)")};
  ExtensionResult res = extendMorita(two, st);

  CHECK(res.extended.name == "TWO+other");
  REQUIRE(res.definingAxioms.size() == 2);
  CHECK(sameSequent(
      axiomLabeled(res.definingAxioms, "other_fwd"),
      "other(u1) = y |- (u1 = a & y = b) | (u1 = b & y = a)", res.extended));
  CHECK(sameSequent(
      axiomLabeled(res.definingAxioms, "other_bwd"),
      "(u1 = a & y = b) | (u1 = b & y = a) |- other(u1) = y", res.extended));

  CHECK(obligationNames(res.obligations) ==
        std::vector<std::string>{"total:other", "uniq:other"});
  VerificationReport rep = dischargeAll(res.obligations, {&two}, kB);
  CHECK(rep.verdict() == Outcome::Proved);
}

TEST_CASE("defining axioms use the new symbol, obligations only the old signature") {
  Theory eq = loadTheory("eq.thy");
  Theory two = loadTheory("two.thy");
  struct Case {
    const Theory* base;
    ExtensionStep step;
  };
  std::vector<Case> cases;
  cases.push_back({&eq, QuotientStep{"sA", "p",
                                     classOver(eq, {{"x", "s"}, {"y", "s"}}, "A(x, y)")}});
  cases.push_back({&eq, TerminalStep{"one"}});
  cases.push_back({&eq, ProductStep{"P", {"s", "s"}, {"pr1", "pr2"}}});
  cases.push_back({&two, CoproductStep{"C", {"s", "s"}, {"i1", "i2"}}});
  cases.push_back({&eq, SubsortStep{"D", "inc", classOver(eq, {{"x", "s"}}, "A(x, x)")}});
  cases.push_back({&eq, DefRelStep{"B", classOver(eq, {{"x", "s"}, {"y", "s"}},
                                                  "A(y, x)")}});
  cases.push_back({&two, DefFunStep{"other",
                                    classOver(two, {{"x", "s"}, {"y", "s"}},
                                              "(x = a & y = b) | (x = b & y = a)")}});

  auto typechecksIn = [](const Theory& t, const Sequent& s) {
    try {
      for (const auto& f : s.lhs) typecheckFormula(t.sig, f, t.classical);
      typecheckFormula(t.sig, s.rhs, t.classical);
      return true;
    } catch (const InputError&) {
      return false;
    }
  };

  for (const auto& c : cases) {
    ExtensionResult res = extendMorita(*c.base, c.step);
    CAPTURE(stepKindName(c.step));
    CHECK(!res.definingAxioms.empty());
    for (const auto& ax : res.definingAxioms) {
      CAPTURE(ax.label);
      // New-symbol mention shows up as a typecheck failure over the base.
      CHECK(!typechecksIn(*c.base, ax));
      CHECK(typechecksIn(res.extended, ax));
    }
    for (const auto& o : res.obligations) {
      CAPTURE(o.name);
      CHECK(o.inTheory == c.base->name);
      CHECK(typechecksIn(*c.base, o.sequent));
    }
    // Each result is recognized and verified by the extension checker.
    ExtensionVerification ver = verifyExtension(*c.base, res.extended, kB);
    CHECK(ver.unclassified.empty());
    REQUIRE(ver.steps.size() == 1);
    CHECK(stepKindName(ver.steps[0]) == stepKindName(c.step));
    CHECK(ver.verdict() == Outcome::Proved);
  }
}

TEST_CASE("extension steps reject name collisions and shape errors") {
  Theory eq = loadTheory("eq.thy");
  CHECK_THROWS_AS(extendMorita(eq, TerminalStep{"s"}), InputError);
  CHECK_THROWS_AS(extendMorita(eq, TerminalStep{"A"}), InputError);
  CHECK_THROWS_AS(extendMorita(eq, ProductStep{"P", {"s", "s"}, {"pr1"}}), InputError);
  CHECK_THROWS_AS(extendMorita(eq, ProductStep{"P", {"s", "nosuch"}, {"pr1", "pr2"}}),
                  InputError);
  // Quotient context must be two variables over one sort.
  CHECK_THROWS_AS(extendMorita(eq, QuotientStep{"q", "p",
                                                classOver(eq, {{"x", "s"}}, "A(x, x)")}),
                  InputError);
  // Subsort predicate may not mention variables outside its context.
  SubstitutionClass bad{parseFormulaText("A(x, y)", eq), {{"x", "s"}}};
  CHECK_THROWS_AS(extendMorita(eq, SubsortStep{"D", "inc", bad}), InputError);
}

// ---------------------------------------------------------------------------
// Chains: parsing, elaboration, obligations, model transport.

static const char* kChainText = R"(# every step kind once
extend TWO {
  terminal unit
  product P = s * s via fst, snd
  coproduct C = s + s via inl, inr
  subsort A1 = { x : s | x = a } via ia
  quotient Q = s / [(x, y) | x = y] via q
  rel Same(x: s, y: s) := x = y
  fun swap(x: s) : s := [y | (x = a & y = b) | (x = b & y = a)]
}
)";

TEST_CASE("an extension chain covering every step kind elaborates and verifies") {
  Theory two = loadTheory("two.thy");
  std::string baseName;
  std::vector<RawExtStep> raw = parseExtensionFile(kChainText, &baseName);
  CHECK(baseName == "TWO");
  REQUIRE(raw.size() == 7);

  ChainResult chain = applyExtensionChain(two, raw);
  REQUIRE(chain.steps.size() == 7);
  REQUIRE(chain.results.size() == 7);
  CHECK(chain.top.name == "TWO+unit+P+C+A1+Q+Same+swap");
  for (const auto& s : {"unit", "P", "C", "A1", "Q"})
    CHECK(chain.top.sig.hasSort(s));
  CHECK(chain.top.sig.relation("Same") != nullptr);
  CHECK(chain.top.sig.function("swap") != nullptr);

  // Obligations: three from the quotient, two from the defined function.
  CHECK(obligationNames(chain.obligations) ==
        std::vector<std::string>{"refl:Q", "symm:Q", "trans:Q",
                                 "total:swap", "uniq:swap"});
  std::vector<const Theory*> stages{&two};
  for (const auto& r : chain.results) stages.push_back(&r.extended);
  VerificationReport rep = dischargeAll(chain.obligations, stages, kB);
  CHECK(rep.verdict() == Outcome::Proved);

  // The canonical two-element model pushes through the whole chain.
  FiniteModel m = parseModel(readFile(fixturePath("two_model.mod")), two);
  const Theory* base = &two;
  for (size_t i = 0; i < chain.steps.size(); ++i) {
    m = extendModel(m, *base, chain.steps[i]);
    base = &chain.results[i].extended;
  }
  CHECK(m.carrierSize("unit") == 1);
  CHECK(m.carrierSize("P") == 4);
  CHECK(m.carrierSize("C") == 4);
  CHECK(m.carrierSize("A1") == 1);
  CHECK(m.carrierSize("Q") == 2);
  CHECK(m.relations.at("Same").size() == 2);
  CHECK(m.functions.at("swap").at({0}) == 1);
  CHECK(m.functions.at("swap").at({1}) == 0);
  ModelCheckResult mc = checkModel(m, chain.top);
  CHECK(mc.ok);

  // Recovery classifies all seven steps and re-proves admissibility.
  ExtensionVerification ver = verifyExtension(two, chain.top, kB);
  CHECK(ver.unclassified.empty());
  CHECK(ver.steps.size() == 7);
  CHECK(ver.verdict() == Outcome::Proved);
}

TEST_CASE("chain elaboration reports the offending line on errors") {
  Theory two = loadTheory("two.thy");
  // Quotient over a sort that only a later step introduces.
  const char* text = R"(extend TWO {
  quotient Q = P / [(x, y) | x = y] via q
  product P = s * s via fst, snd
}
)";
  std::vector<RawExtStep> raw = parseExtensionFile(text);
  try {
    applyExtensionChain(two, raw);
    FAIL("expected InputError");
  } catch (const InputError& e) {
    CHECK(std::string(e.what()).find("line 2") != std::string::npos);
  }
}

// ---------------------------------------------------------------------------
// Extension verification: recovery of steps from a finished theory.

TEST_CASE("verifyExtension classifies a quotient and proves its admissibility") {
  Theory eq = loadTheory("eq.thy");
  QuotientStep st{"sA", "p", classOver(eq, {{"x", "s"}, {"y", "s"}}, "A(x, y)")};
  Theory eqq = extendMorita(eq, st).extended;

  ExtensionVerification ver = verifyExtension(eq, eqq, kB);
  CHECK(ver.unclassified.empty());
  REQUIRE(ver.classified.size() == 1);
  CHECK(ver.classified[0] == "quotient sA = s / [(x, y) | A(x, y)] via p");
  REQUIRE(ver.steps.size() == 1);
  CHECK(stepKindName(ver.steps[0]) == "quotient");
  CHECK(ver.verdict() == Outcome::Proved);
  CHECK(entryNamed(ver.report, "refl:sA").proof.outcome == Outcome::Proved);
  CHECK(entryNamed(ver.report, "symm:sA").proof.outcome == Outcome::Proved);
  CHECK(entryNamed(ver.report, "trans:sA").proof.outcome == Outcome::Proved);
}

TEST_CASE("verifyExtension flags an axiom that matches no schema") {
  Theory eq = loadTheory("eq.thy");
  Theory eqq = extendMorita(eq, QuotientStep{"sA", "p",
                                             classOver(eq, {{"x", "s"}, {"y", "s"}},
                                                       "A(x, y)")}).extended;
  Sequent extra = parseSequentText("[x:s] |- A(x, x)", eqq);
  extra.label = "extra";
  eqq.axioms.push_back(extra);

  ExtensionVerification ver = verifyExtension(eq, eqq, kB);
  REQUIRE(ver.unclassified.size() == 1);
  CHECK(ver.unclassified[0].find("unmatched axiom 'extra'") != std::string::npos);
  CHECK(ver.verdict() == Outcome::Refuted);
}

TEST_CASE("verifyExtension refutes a quotient by a non-equivalence") {
  Theory two = loadTheory("two.thy");
  QuotientStep st{"Q", "q", classOver(two, {{"x", "s"}, {"y", "s"}}, "x = a")};
  ExtensionResult res = extendMorita(two, st);

  VerificationReport direct = dischargeAll(res.obligations, {&two}, kB);
  CHECK(entryNamed(direct, "refl:Q").proof.outcome == Outcome::Refuted);

  ExtensionVerification ver = verifyExtension(two, res.extended, kB);
  CHECK(ver.unclassified.empty());
  CHECK(ver.verdict() == Outcome::Refuted);
}

TEST_CASE("verifyExtension flags a missing base axiom") {
  Theory eq = loadTheory("eq.thy");
  Theory gutted = extendMorita(eq, TerminalStep{"one"}).extended;
  gutted.axioms.erase(gutted.axioms.begin());  // drop refl

  ExtensionVerification ver = verifyExtension(eq, gutted, kB);
  REQUIRE(!ver.unclassified.empty());
  CHECK(ver.unclassified[0].find("base axiom 'refl' missing") != std::string::npos);
  CHECK(ver.verdict() == Outcome::Refuted);
}

// ---------------------------------------------------------------------------
// Inclusion translation and the quotient retraction package.

TEST_CASE("the inclusion into a quotient extension is conservative on base axioms") {
  Theory eq = loadTheory("eq.thy");
  Theory eqq = extendMorita(eq, QuotientStep{"sA", "p",
                                             classOver(eq, {{"x", "s"}, {"y", "s"}},
                                                       "A(x, y)")}).extended;
  InclusionResult inc = inclusionTranslation(eq, eqq, kB);
  CHECK(inc.inclusion.name == "incl");
  CHECK(inc.inclusion.src.name == "EQ");
  CHECK(inc.inclusion.dst.name == "EQ+sA");
  // Only the axioms typable over the old signature are re-proved there.
  REQUIRE(inc.conservativity.entries.size() == 3);
  CHECK(entryNamed(inc.conservativity, "conserv:refl").proof.outcome == Outcome::Proved);
  CHECK(entryNamed(inc.conservativity, "conserv:symm").proof.outcome == Outcome::Proved);
  CHECK(entryNamed(inc.conservativity, "conserv:trans").proof.outcome == Outcome::Proved);

  Translation t = verifyTranslation(inc.inclusion, kB);
  CHECK(t.isTranslation == Flag::Proved);
  CHECK(t.isStrong == Flag::Proved);
}

TEST_CASE("quotientRetraction assembles a homotopy equivalence with no unknowns") {
  Theory eq = loadTheory("eq.thy");
  Theory eqq = extendMorita(eq, QuotientStep{"sA", "p",
                                             classOver(eq, {{"x", "s"}, {"y", "s"}},
                                                       "A(x, y)")}).extended;
  RetractionPackage pack = quotientRetraction(eq, eqq, kB);
  CHECK(pack.inclusion.name == "incl");
  CHECK(pack.retraction.name == "retr");
  CHECK(pack.retraction.src.name == "EQ+sA");
  CHECK(pack.retraction.dst.name == "EQ");
  // The quotient sort retracts onto the base sort with the relation as equality.
  const SortImage& qi = pack.retraction.sortImage("sA");
  REQUIRE(qi.image.size() == 1);
  CHECK(qi.image[0].sort == "s");
  CHECK(!qi.equalityDefaulted);
  CHECK(printFormula(qi.equality.formula) == "A(x, y)");

  CHECK(pack.report.entries.size() == 52);
  CHECK(countOutcome(pack.report, Outcome::Unknown) == 0);
  CHECK(countOutcome(pack.report, Outcome::Refuted) == 0);
  CHECK(pack.report.verdict() == Outcome::Proved);
}

TEST_CASE("quotientRetraction rejects extensions that are not a single quotient") {
  Theory eq = loadTheory("eq.thy");
  Theory ext = extendMorita(eq, TerminalStep{"one"}).extended;
  CHECK_THROWS_AS(quotientRetraction(eq, ext, kB), InputError);
}

// ---------------------------------------------------------------------------
// Exact completion slice: quotients by provable equivalence relations.

TEST_CASE("exactCompletionSlice adds the provable quotients of EQ at depth 1") {
  Theory eq = loadTheory("eq.thy");
  ExactCompletionResult r = exactCompletionSlice(eq, 1, kB);
  CHECK(r.complete);
  CHECK(r.undecided.empty());
  REQUIRE(r.added.size() == 2);
  CHECK(r.added[0].sortName == "s_by_eq");
  CHECK(r.added[0].surjection == "p_s_by_eq");
  CHECK(printFormula(r.added[0].rel.formula) == "x = y");
  CHECK(r.added[1].sortName == "s_by_A");
  CHECK(r.added[1].surjection == "p_s_by_A");
  CHECK(printFormula(r.added[1].rel.formula) == "A(x, y)");
  CHECK(r.completed.sig.hasSort("s_by_eq"));
  CHECK(r.completed.sig.hasSort("s_by_A"));

  // Completing again quotients the fresh sorts by their equalities only; the
  // base quotients are recognized as already present.
  ExactCompletionResult again = exactCompletionSlice(r.completed, 1, kB);
  CHECK(again.complete);
  REQUIRE(again.added.size() == 2);
  CHECK(again.added[0].sortName == "s_by_eq_by_eq");
  CHECK(again.added[1].sortName == "s_by_A_by_eq");
}

TEST_CASE("exactCompletionSlice on TWO finds the conjunction relation at depth 3") {
  Theory two = loadTheory("two.thy");
  ExactCompletionResult shallow = exactCompletionSlice(two, 1, kB);
  CHECK(shallow.complete);
  REQUIRE(shallow.added.size() == 1);
  CHECK(shallow.added[0].sortName == "s_by_eq");

  ExactCompletionResult deep = exactCompletionSlice(two, 3, kB);
  CHECK(deep.complete);
  CHECK(deep.undecided.empty());
  REQUIRE(deep.added.size() == 2);
  CHECK(deep.added[0].sortName == "s_by_eq");
  CHECK(deep.added[1].sortName == "s_by_and");
}

TEST_CASE("exactCompletionSlice leaves a propositional theory untouched") {
  Theory p2 = loadTheory("p2.thy");
  ExactCompletionResult r = exactCompletionSlice(p2, 3, kB);
  CHECK(r.complete);
  CHECK(r.added.empty());
  CHECK(r.completed.sig.sorts == p2.sig.sorts);
}

TEST_CASE("candidate formula enumeration is deterministic and covers the cross split") {
  Theory two = loadTheory("two.thy");
  Context ctx{{"x", "s"}, {"y", "s"}};
  std::vector<FormulaPtr> cands = enumerateCandidateFormulas(two, ctx, 3);
  CHECK(cands.size() == 222);
  bool found = false;
  for (const auto& f : cands)
    if (printFormula(f) == "x = a | y = b") found = true;
  CHECK(found);
  // Deterministic: a second enumeration prints identically.
  std::vector<FormulaPtr> cands2 = enumerateCandidateFormulas(two, ctx, 3);
  REQUIRE(cands.size() == cands2.size());
  for (size_t i = 0; i < cands.size(); ++i)
    CHECK(printFormula(cands[i]) == printFormula(cands2[i]));
}

// ---------------------------------------------------------------------------
// Properness: realizations, transport, and the coproduct construction.

TEST_CASE("TWO has the canonical proper realization (x = a, x = b)") {
  Theory two = loadTheory("two.thy");
  std::vector<std::string> log;
  auto r = findProperRealization(two, 2, kB, &log);
  REQUIRE(r.has_value());
  REQUIRE(r->ctx.size() == 1);
  CHECK(r->ctx[0].sort == "s");
  CHECK(printFormula(r->phi) == "x = a");
  CHECK(printFormula(r->psi) == "x = b");
  CHECK(r->evidence.verdict() == Outcome::Proved);
  CHECK(log.empty());
}

TEST_CASE("EQ has no proper realization at depth 1 and the search is conclusive") {
  Theory eq = loadTheory("eq.thy");
  std::vector<std::string> log;
  auto r = findProperRealization(eq, 1, kB, &log);
  CHECK(!r.has_value());
  // Every candidate pair was refuted outright, none merely timed out.
  CHECK(log.empty());
}

TEST_CASE("properness transports along the identity and along the constant swap") {
  Theory two = loadTheory("two.thy");
  auto r = findProperRealization(two, 2, kB);
  REQUIRE(r.has_value());

  // Transported formulas are relativized images, so compare them by provable
  // equivalence rather than by print.
  auto equivalent = [&](const FormulaPtr& img, const std::string& text) {
    FormulaPtr want = parseFormulaText(text, two, {{"x", "s"}});
    Sequent fwd{"", {img}, want};
    Sequent bwd{"", {want}, img};
    return proveSequent(two, fwd, kB).outcome == Outcome::Proved &&
           proveSequent(two, bwd, kB).outcome == Outcome::Proved;
  };

  TransportResult idT = transportProperness(identityReconstrual(two), *r, kB);
  CHECK(idT.report.verdict() == Outcome::Proved);
  CHECK(equivalent(idT.transported.phi, "x = a"));
  CHECK(equivalent(idT.transported.psi, "x = b"));

  const char* swapText = R"(translation swapab : TWO -> TWO {
  sort s -> (x : s)
  fun a = y -> y = b
  fun b = y -> y = a
}
)";
  Reconstrual swap = parseTranslation(swapText, two, two);
  Translation ver = verifyTranslation(swap, kB);
  CHECK(ver.isTranslation == Flag::Proved);
  CHECK(ver.isStrong == Flag::Proved);

  TransportResult sw = transportProperness(swap, *r, kB);
  CHECK(sw.report.verdict() == Outcome::Proved);
  CHECK(equivalent(sw.transported.phi, "x = b"));
  CHECK(equivalent(sw.transported.psi, "x = a"));
}

TEST_CASE("eliminateCoproduct on TWO proves every admissibility and coproduct law") {
  Theory two = loadTheory("two.thy");
  auto r = findProperRealization(two, 2, kB);
  REQUIRE(r.has_value());

  CoproductElimination ce = eliminateCoproduct(two, *r, "s", "s", kB);
  CHECK(ce.coproductSort == "s_plus_s");
  CHECK(ce.injections == std::vector<std::string>{"inj1", "inj2"});
  REQUIRE(ce.chain.results.size() == 6);
  CHECK(ce.chain.results[0].extended.name == "TWO+tau");
  CHECK(ce.chain.results[1].extended.name == "TWO+tau+P");
  CHECK(ce.chain.results[2].extended.name == "TWO+tau+P+mix");
  CHECK(ce.chain.results[3].extended.name == "TWO+tau+P+mix+s_plus_s");
  CHECK(ce.chain.results[4].extended.name == "TWO+tau+P+mix+s_plus_s+inj1");
  CHECK(ce.chain.results[5].extended.name == "TWO+tau+P+mix+s_plus_s+inj1+inj2");

  const std::vector<std::string> want{
      "refl:s_plus_s", "symm:s_plus_s", "trans:s_plus_s",
      "total:inj1",    "uniq:inj1",
      "total:inj2",    "uniq:inj2",
      "law:cover",     "law:inj:1",     "law:inj:2", "law:disjoint"};
  REQUIRE(ce.report.entries.size() == want.size());
  for (const auto& name : want) {
    CAPTURE(name);
    CHECK(entryNamed(ce.report, name).proof.outcome == Outcome::Proved);
  }
  CHECK(ce.report.verdict() == Outcome::Proved);

  // The canonical two-element model extends through the construction; the
  // coproduct carrier has exactly the four expected classes.
  FiniteModel m = parseModel(readFile(fixturePath("two_model.mod")), two);
  const Theory* base = &two;
  for (size_t i = 0; i < ce.chain.steps.size(); ++i) {
    m = extendModel(m, *base, ce.chain.steps[i]);
    base = &ce.chain.results[i].extended;
  }
  CHECK(m.carrierSize("tau") == 2);
  CHECK(m.carrierSize("P") == 8);
  CHECK(m.carrierSize("s_plus_s") == 4);
  ModelCheckResult mc = checkModel(m, ce.chain.top);
  CHECK(mc.ok);
  // The two injections hit disjoint classes.
  std::set<int> hits;
  hits.insert(m.functions.at("inj1").at({0}));
  hits.insert(m.functions.at("inj1").at({1}));
  hits.insert(m.functions.at("inj2").at({0}));
  hits.insert(m.functions.at("inj2").at({1}));
  CHECK(hits.size() == 4);
}

// ---------------------------------------------------------------------------
// Equality repair: quotienting the target so the image equality is literal.

TEST_CASE("makeEqualityPreserving leaves a defaulted-equality reconstrual alone") {
  Theory eq = loadTheory("eq.thy");
  Reconstrual id = identityReconstrual(eq);
  EqualityRepair rep = makeEqualityPreserving(id, kB);
  CHECK(rep.extendedTarget.name == "EQ");
  CHECK(rep.evidence.entries.empty());
  CHECK(printFormula(rep.repaired.sortImage("s").equality.formula) ==
        printFormula(id.sortImage("s").equality.formula));
}

TEST_CASE("makeEqualityPreserving repairs the A-as-equality reconstrual on EQ") {
  Theory eq = loadTheory("eq.thy");
  Reconstrual f = identityReconstrual(eq);
  f.name = "coarse";
  SortImage& si = f.sortImages.at("s");
  si.equality = classOver(eq, {{"x", "s"}, {"y", "s"}}, "A(x, y)");
  si.equalityDefaulted = false;
  f.validate();

  // Reading A as equality is a translation but not equality-preserving.
  Translation before = verifyTranslation(f, kB);
  CHECK(before.isTranslation == Flag::Proved);
  CHECK(before.isEqualityPreserving == Flag::Failed);

  EqualityRepair rep = makeEqualityPreserving(f, kB);
  CHECK(rep.extendedTarget.name == "EQ+s_cls");
  CHECK(rep.extendedTarget.sig.hasSort("s_cls"));
  CHECK(entryNamed(rep.evidence, "agree_fwd:s").proof.outcome == Outcome::Refuted);
  CHECK(entryNamed(rep.evidence, "agree_bwd:s").proof.outcome == Outcome::Proved);
  CHECK(entryNamed(rep.evidence, "refl:s_cls").proof.outcome == Outcome::Proved);
  CHECK(entryNamed(rep.evidence, "symm:s_cls").proof.outcome == Outcome::Proved);
  CHECK(entryNamed(rep.evidence, "trans:s_cls").proof.outcome == Outcome::Proved);

  CHECK(rep.repaired.name == "coarse_repaired");
  CHECK(rep.repaired.dst.name == "EQ+s_cls");
  const SortImage& ri = rep.repaired.sortImage("s");
  REQUIRE(ri.image.size() == 1);
  CHECK(ri.image[0].sort == "s_cls");
  CHECK(ri.equalityDefaulted);

  Translation after = verifyTranslation(rep.repaired, kB);
  CHECK(after.isTranslation == Flag::Proved);
  CHECK(after.isEqualityPreserving == Flag::Proved);
  CHECK(after.isStrong == Flag::Proved);
  CHECK(after.evidence.entries.size() == 9);
  CHECK(after.evidence.verdict() == Outcome::Proved);
}
