#pragma once

// Alpha-equivalence, capture-avoiding substitution, function-graph unfolding,
// and substitution classes (formulas-in-context up to renaming).

#include "cohlog/ast.hpp"

namespace cohlog {

// True iff b is obtainable from a by a type-preserving bijective renaming
// that is monotone in variable-name order on the free variables (the i-th
// free name of a in lexicographic order maps to the i-th free name of b) and
// unrestricted on bound variables. Monotone bijections compose, so this is an
// equivalence relation. `A(x,y)` ~ `A(u,v)` but `A(x,y)` !~ `A(y,x)`: a
// transposition of the shared ambient context is not a context renaming.
bool alphaEqual(const FormulaPtr& a, const FormulaPtr& b);

// Comparison at explicit contexts: positional matching of ctxA against ctxB,
// no shared-name restriction. Contexts must cover the free variables.
bool alphaEqualAt(const FormulaPtr& a, const Context& ctxA, const FormulaPtr& b,
                  const Context& ctxB);

// Simultaneous capture-avoiding substitution of terms for the context
// variables. terms[i] replaces ctx[i]; sorts must match. Bound variables that
// would capture are renamed with the reserved fresh supply.
FormulaPtr substitute(const FormulaPtr& f, const Context& ctx,
                      const std::vector<TermPtr>& terms);

TermPtr substituteTerm(const TermPtr& t, const Context& ctx,
                       const std::vector<TermPtr>& terms);

// Renames every bound variable to a fresh reserved name (used before
// grounding so bound names never collide with context constants).
FormulaPtr freshenBound(const FormulaPtr& f, int& counter);

// Unfolds nested function applications into graph form: an atom argument
// f(t) becomes a fresh existential exists y. f(t) = y & ... applied
// innermost-first, left to right. After unfolding, function applications
// occur only as the left side of equalities f(x1,..,xn) = y with variable
// arguments. Idempotent; the free context is unchanged.
FormulaPtr unfoldFunctionGraphs(const FormulaPtr& f);
Sequent unfoldFunctionGraphs(const Sequent& s);

// ---------------------------------------------------------------------------
// Substitution classes: a formula together with an explicit ordered context
// extending its free context. Equality of classes is positional alpha
// equivalence at the explicit contexts.

struct SubstitutionClass {
  FormulaPtr formula;
  Context ctx;

  // Canonical representative: context renamed positionally to x1..xn, bound
  // variables renamed in traversal order. Two classes are equal iff their
  // canonical prints coincide.
  std::string canonicalKey() const;
  bool operator==(const SubstitutionClass& o) const;
  bool operator<(const SubstitutionClass& o) const;  // by (size, canonical key)
};

// Builds the class of f over its own free context.
SubstitutionClass classOf(const FormulaPtr& f);

// Concatenation class [phi & psi] over ctx1.ctx2 with psi's variables moved
// out of the way of ctx1 (contexts are made disjoint by renaming psi).
SubstitutionClass concatClass(const SubstitutionClass& a, const SubstitutionClass& b);

}  // namespace cohlog
