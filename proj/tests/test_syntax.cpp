#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "cohlog/ast.hpp"
#include "cohlog/parse.hpp"
#include "cohlog/subst.hpp"
#include "oracles.hpp"

using namespace cohlog;
using cohlog::testing::fixturePath;

static Theory loadTheory(const std::string& file) {
  return parseTheory(readFile(fixturePath(file)));
}

TEST_CASE("fixture theories parse with the expected signatures") {
  Theory eq = loadTheory("eq.thy");
  CHECK(eq.name == "EQ");
  CHECK(eq.sig.sorts == std::vector<std::string>{"s"});
  REQUIRE(eq.sig.relations.size() == 1);
  CHECK(eq.sig.relations[0].name == "A");
  CHECK(eq.sig.relations[0].domain == std::vector<std::string>{"s", "s"});
  REQUIRE(eq.axioms.size() == 3);
  CHECK(eq.axioms[0].label == "refl");
  CHECK(eq.axioms[1].label == "symm");
  CHECK(eq.axioms[2].label == "trans");
  CHECK(eq.axioms[2].lhs.size() == 2);

  Theory p2 = loadTheory("p2.thy");
  CHECK(p2.sig.sorts.empty());
  CHECK(p2.sig.relations.size() == 2);
  REQUIRE(p2.axioms.size() == 1);
  CHECK(printSequent(p2.axioms[0]) == "P |- Q");

  Theory two = loadTheory("two.thy");
  CHECK(two.sig.functions.size() == 2);
  CHECK(two.sig.functions[0].domain.empty());
  REQUIRE(two.axioms.size() == 2);

  Theory free1 = loadTheory("free1.thy");
  CHECK(free1.sig.relations.size() == 1);
  CHECK(free1.axioms.empty());
}

TEST_CASE("theories survive a print-parse round trip") {
  for (const char* file : {"eq.thy", "p2.thy", "two.thy", "free1.thy"}) {
    Theory t = loadTheory(file);
    Theory back = parseTheory(printTheory(t));
    CHECK(back.name == t.name);
    CHECK(back.sig == t.sig);
    REQUIRE(back.axioms.size() == t.axioms.size());
    for (size_t i = 0; i < t.axioms.size(); ++i) {
      CHECK(back.axioms[i].label == t.axioms[i].label);
      CHECK(printSequent(back.axioms[i]) == printSequent(t.axioms[i]));
    }
  }
}

TEST_CASE("formula parsing respects precedence and right nesting") {
  Theory p2 = loadTheory("p2.thy");
  FormulaPtr f = parseFormulaText("P & Q | P", p2);
  // & binds tighter than |.
  REQUIRE(f->kind == FK::Or);
  CHECK(f->kids[0]->kind == FK::And);

  FormulaPtr g = parseFormulaText("P & Q & P", p2);
  REQUIRE(g->kind == FK::And);
  CHECK(g->kids[1]->kind == FK::And);  // chains nest to the right

  Theory eq = loadTheory("eq.thy");
  FormulaPtr h = parseFormulaText("exists x:s . A(x, y) & A(y, x)", eq);
  REQUIRE(h->kind == FK::Exists);  // quantifier scope extends right
  CHECK(h->kids[0]->kind == FK::And);
}

TEST_CASE("parse-print-parse is the identity on formulas") {
  Theory eq = loadTheory("eq.thy");
  for (const char* text :
       {"A(x, y)", "exists z:s . A(x, z) & A(z, y)", "x = y | A(x, x)",
        "top & bot", "exists x:s . exists y:s . A(x, y)"}) {
    FormulaPtr f = parseFormulaText(text, eq);
    FormulaPtr g = parseFormulaText(printFormula(f), eq);
    CHECK(formulaEqual(f, g));
  }
}

TEST_CASE("sort inference fills in unannotated variables") {
  Theory eq = loadTheory("eq.thy");
  FormulaPtr f = parseFormulaText("A(x, y)", eq);
  Context ctx = freeContext(f);
  REQUIRE(ctx.size() == 2);
  CHECK(ctx[0].name == "x");
  CHECK(ctx[0].sort == "s");
  CHECK(ctx[1].name == "y");

  // A single-sort theory also types bare equalities.
  FormulaPtr g = parseFormulaText("x = y", eq);
  CHECK(freeContext(g)[0].sort == "s");
}

TEST_CASE("sequent context blocks pin variable sorts") {
  Theory two = loadTheory("two.thy");
  Sequent s = parseSequentText("[x:s, y:s] x = y |- x = a", two);
  Context ctx = freeContext(s);
  REQUIRE(ctx.size() == 2);
  CHECK(ctx[0].sort == "s");

  // Printed sequents embed the context and reparse identically.
  Sequent back = parseSequentText(printSequent(s), two);
  CHECK(printSequent(back) == printSequent(s));
}

TEST_CASE("reserved names and bad inputs are rejected") {
  Theory eq = loadTheory("eq.thy");
  CHECK_THROWS_AS(parseFormulaText("A(_x, y)", eq), InputError);
  CHECK_THROWS_AS(parseFormulaText("B(x)", eq), InputError);       // unknown atom
  CHECK_THROWS_AS(parseFormulaText("A(x)", eq), InputError);       // arity
  CHECK_THROWS_AS(parseFormulaText("A(x, y) & x", eq), InputError);  // var as formula
  CHECK_THROWS_AS(parseTheory("theory Bad { sort s sort s }"), InputError);
  CHECK_THROWS_AS(parseTheory("theory Bad { rel A : nope }"), InputError);

  // One variable, two sorts.
  Theory m = parseTheory("theory M { sort s sort t rel P : s rel Q : t }");
  CHECK_THROWS_AS(parseFormulaText("P(x) & Q(x)", m), InputError);
}

TEST_CASE("classical connectives require classical mode") {
  CHECK_THROWS_AS(parseTheory("theory C { rel P ax bad: |- not P }"), InputError);
  Theory c = parseTheory("theory C classical { rel P ax ok: |- not P }");
  CHECK(c.classical);
  CHECK(c.axioms[0].rhs->kind == FK::Not);
}

TEST_CASE("alpha equivalence renames positionally but fixes shared names") {
  Theory eq = loadTheory("eq.thy");
  FormulaPtr axy = parseFormulaText("A(x, y)", eq);
  FormulaPtr auv = parseFormulaText("A(u, v)", eq);
  FormulaPtr ayx = parseFormulaText("A(y, x)", eq);
  CHECK(alphaEqual(axy, auv));       // renaming monotone in name order
  CHECK_FALSE(alphaEqual(axy, ayx)); // transposition is not a context renaming

  FormulaPtr exz = parseFormulaText("exists z:s . A(x, z)", eq);
  FormulaPtr exw = parseFormulaText("exists w:s . A(x, w)", eq);
  CHECK(alphaEqual(exz, exw));       // bound names never block equivalence

  // Equivalence on a small corpus: reflexive, symmetric, transitive.
  std::vector<FormulaPtr> fs = {axy, auv, ayx, exz, exw};
  for (const auto& f : fs) CHECK(alphaEqual(f, f));
  for (const auto& f : fs)
    for (const auto& g : fs) CHECK(alphaEqual(f, g) == alphaEqual(g, f));
  for (const auto& f : fs)
    for (const auto& g : fs)
      for (const auto& h : fs)
        if (alphaEqual(f, g) && alphaEqual(g, h)) CHECK(alphaEqual(f, h));
}

TEST_CASE("alphaEqualAt matches purely by context position") {
  Theory eq = loadTheory("eq.thy");
  FormulaPtr axy = parseFormulaText("A(x, y)", eq);
  FormulaPtr ayx = parseFormulaText("A(y, x)", eq);
  // At contexts [x, y] and [y, x] the two formulas are the same class.
  Context cxy = {{"x", "s"}, {"y", "s"}};
  Context cyx = {{"y", "s"}, {"x", "s"}};
  CHECK(alphaEqualAt(axy, cxy, ayx, cyx));
  CHECK_FALSE(alphaEqualAt(axy, cxy, ayx, cxy));
}

TEST_CASE("substitution is simultaneous and capture-avoiding") {
  Theory eq = loadTheory("eq.thy");
  // Swap x and y simultaneously.
  FormulaPtr f = parseFormulaText("A(x, y)", eq);
  Context ctx = {{"x", "s"}, {"y", "s"}};
  FormulaPtr swapped = substitute(f, ctx, {mkVar("y", "s"), mkVar("x", "s")});
  CHECK(printFormula(swapped) == "A(y, x)");

  // Substituting y for x under a binder for y must rename the binder.
  FormulaPtr g = parseFormulaText("exists y:s . A(x, y)", eq);
  FormulaPtr h = substitute(g, {{"x", "s"}}, {mkVar("y", "s")});
  REQUIRE(h->kind == FK::Exists);
  CHECK(h->var != "y");
  CHECK(alphaEqual(h, parseFormulaText("exists z:s . A(y, z)", eq)));
}

TEST_CASE("function graph unfolding reaches a variable-only normal form") {
  Theory t = parseTheory(
      "theory NEST {\n"
      "  sort s\n"
      "  fun f : s -> s\n"
      "  fun g : s -> s\n"
      "  rel R : s\n"
      "}");
  FormulaPtr f = parseFormulaText("R(g(f(x)))", t);
  FormulaPtr u = unfoldFunctionGraphs(f);

  // Innermost application first: exists y (f(x)=y & exists w (g(y)=w & R(w))).
  REQUIRE(u->kind == FK::Exists);
  REQUIRE(u->kids[0]->kind == FK::And);
  const FormulaPtr& fGraph = u->kids[0]->kids[0];
  REQUIRE(fGraph->kind == FK::Eq);
  CHECK(fGraph->args[0]->head == "f");
  CHECK(fGraph->args[0]->args[0]->isVar);
  const FormulaPtr& inner = u->kids[0]->kids[1];
  REQUIRE(inner->kind == FK::Exists);
  CHECK(inner->kids[0]->kids[0]->args[0]->head == "g");

  // Idempotent and context-preserving.
  CHECK(formulaEqual(unfoldFunctionGraphs(u), u));
  Context before = freeContext(f);
  Context after = freeContext(u);
  CHECK(before == after);
}

TEST_CASE("unfolding keeps graph equations whose head is already exposed") {
  Theory t = parseTheory(
      "theory G { sort s fun f : s -> s }");
  FormulaPtr f = parseFormulaText("f(x) = y", t);
  FormulaPtr u = unfoldFunctionGraphs(f);
  CHECK(formulaEqual(u, f));  // already graph-normal

  FormulaPtr nested = parseFormulaText("f(f(x)) = y", t);
  FormulaPtr v = unfoldFunctionGraphs(nested);
  REQUIRE(v->kind == FK::Exists);  // inner f(x) extracted, outer stays
  CHECK(v->kids[0]->kids[1]->kind == FK::Eq);
  CHECK(v->kids[0]->kids[1]->args[0]->head == "f");
}

TEST_CASE("unfolding a sequent unfolds both sides") {
  Theory t = parseTheory(
      "theory G { sort s fun f : s -> s rel R : s }");
  Sequent s = parseSequentText("R(f(x)) |- R(f(f(x)))", t);
  Sequent u = unfoldFunctionGraphs(s);
  CHECK(u.lhs[0]->kind == FK::Exists);
  CHECK(u.rhs->kind == FK::Exists);
}

TEST_CASE("substitution classes canonicalize alpha-variants to one key") {
  Theory eq = loadTheory("eq.thy");
  SubstitutionClass a = classOf(parseFormulaText("A(x, y)", eq));
  SubstitutionClass b = classOf(parseFormulaText("A(u, v)", eq));
  SubstitutionClass c = classOf(parseFormulaText("A(y, x)", eq));
  CHECK(a == b);
  CHECK(a.canonicalKey() == b.canonicalKey());
  // Positional classes identify A(x,y) with A(y,x) as classes: both are
  // "A applied to slot 1 and slot 2 of an (s, s) context".
  CHECK(a == c);

  SubstitutionClass d = classOf(parseFormulaText("A(x, x)", eq));
  CHECK_FALSE(a == d);
}

TEST_CASE("free contexts list variables by first occurrence") {
  Theory eq = loadTheory("eq.thy");
  Sequent s = parseSequentText("A(y, x) |- A(x, z)", eq);
  Context ctx = freeContext(s);
  REQUIRE(ctx.size() == 3);
  CHECK(ctx[0].name == "y");
  CHECK(ctx[1].name == "x");
  CHECK(ctx[2].name == "z");
}

TEST_CASE("theory validation rejects duplicate labels and bad typing") {
  Theory t = loadTheory("eq.thy");
  t.axioms.push_back(t.axioms[0]);  // duplicate label "refl"
  CHECK_THROWS_AS(t.validate(), InputError);
}

TEST_CASE("term and formula constructors enforce arity and sorts") {
  Theory two = loadTheory("two.thy");
  const FunDecl* a = two.sig.function("a");
  REQUIRE(a != nullptr);
  CHECK_THROWS_AS(mkApp(two.sig, "a", {mkVar("x", "s")}), InputError);
  CHECK_THROWS_AS(mkApp(two.sig, "missing", {}), InputError);
}

TEST_CASE("formulaCompare orders by size then print") {
  Theory eq = loadTheory("eq.thy");
  FormulaPtr small = parseFormulaText("A(x, y)", eq);
  FormulaPtr big = parseFormulaText("A(x, y) & A(y, x)", eq);
  CHECK(formulaCompare(small, big) < 0);
  CHECK(formulaCompare(big, small) > 0);
  CHECK(formulaCompare(small, small) == 0);
}
