#include "cohlog/subst.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <set>

namespace cohlog {

// ---------------------------------------------------------------------------
// Alpha equivalence

namespace {

// Simultaneous walk comparing bound variables by binder depth and free
// variables through the positional context map.
struct AlphaCmp {
  const std::map<std::string, std::string>& freeMap;  // a-name -> b-name
  std::vector<std::string> boundA, boundB;

  bool vars(const std::string& a, const std::string& b) {
    // Innermost binder index, if bound.
    auto idxOf = [](const std::vector<std::string>& stack, const std::string& n) {
      for (size_t i = stack.size(); i-- > 0;)
        if (stack[i] == n) return static_cast<int>(i);
      return -1;
    };
    int ia = idxOf(boundA, a), ib = idxOf(boundB, b);
    if (ia != ib) return false;
    if (ia >= 0) return true;  // same binder level
    auto it = freeMap.find(a);
    return it != freeMap.end() && it->second == b;
  }

  bool terms(const TermPtr& a, const TermPtr& b) {
    if (a->isVar != b->isVar || a->sort != b->sort) return false;
    if (a->isVar) return vars(a->head, b->head);
    if (a->head != b->head || a->args.size() != b->args.size()) return false;
    for (size_t i = 0; i < a->args.size(); ++i)
      if (!terms(a->args[i], b->args[i])) return false;
    return true;
  }

  bool formulas(const FormulaPtr& a, const FormulaPtr& b) {
    if (a->kind != b->kind) return false;
    switch (a->kind) {
      case FK::Top:
      case FK::Bot:
        return true;
      case FK::Atom:
        if (a->rel != b->rel || a->args.size() != b->args.size()) return false;
        [[fallthrough]];
      case FK::Eq:
        for (size_t i = 0; i < a->args.size(); ++i)
          if (!terms(a->args[i], b->args[i])) return false;
        return true;
      case FK::And:
      case FK::Or:
        return formulas(a->kids[0], b->kids[0]) && formulas(a->kids[1], b->kids[1]);
      case FK::Not:
        return formulas(a->kids[0], b->kids[0]);
      case FK::Exists:
      case FK::Forall: {
        if (a->varSort != b->varSort) return false;
        boundA.push_back(a->var);
        boundB.push_back(b->var);
        bool ok = formulas(a->kids[0], b->kids[0]);
        boundA.pop_back();
        boundB.pop_back();
        return ok;
      }
    }
    return false;
  }
};

}  // namespace

bool alphaEqualAt(const FormulaPtr& a, const Context& ctxA, const FormulaPtr& b,
                  const Context& ctxB) {
  if (ctxA.size() != ctxB.size()) return false;
  std::map<std::string, std::string> freeMap;
  for (size_t i = 0; i < ctxA.size(); ++i) {
    if (ctxA[i].sort != ctxB[i].sort) return false;
    freeMap[ctxA[i].name] = ctxB[i].name;
  }
  AlphaCmp cmp{freeMap, {}, {}};
  return cmp.formulas(a, b);
}

bool alphaEqual(const FormulaPtr& a, const FormulaPtr& b) {
  Context ca = freeContext(a), cb = freeContext(b);
  if (ca.size() != cb.size()) return false;
  // The free renaming must respect the ambient order of variable names:
  // sort both contexts by name and match positionally. Monotone bijections
  // compose and invert, so the relation stays an equivalence, while a
  // transposition of a shared context (A(x,y) vs A(y,x)) is rejected.
  auto byName = [](const TypedVar& u, const TypedVar& v) { return u.name < v.name; };
  std::sort(ca.begin(), ca.end(), byName);
  std::sort(cb.begin(), cb.end(), byName);
  for (size_t i = 0; i < ca.size(); ++i)
    if (ca[i].sort != cb[i].sort) return false;
  return alphaEqualAt(a, ca, b, cb);
}

// ---------------------------------------------------------------------------
// Substitution

TermPtr substituteTerm(const TermPtr& t, const Context& ctx,
                       const std::vector<TermPtr>& terms) {
  if (t->isVar) {
    for (size_t i = 0; i < ctx.size(); ++i)
      if (ctx[i].name == t->head) {
        if (terms[i]->sort != t->sort)
          throw InputError("substitution for '" + t->head + "' has sort " +
                           terms[i]->sort + ", expected " + t->sort);
        return terms[i];
      }
    return t;
  }
  bool changed = false;
  std::vector<TermPtr> args;
  args.reserve(t->args.size());
  for (const auto& a : t->args) {
    args.push_back(substituteTerm(a, ctx, terms));
    changed = changed || args.back().get() != a.get();
  }
  if (!changed) return t;
  auto u = std::make_shared<Term>(*t);
  u->args = std::move(args);
  return u;
}

namespace {

void collectNames(const TermPtr& t, std::set<std::string>& out) {
  if (t->isVar) {
    out.insert(t->head);
    return;
  }
  for (const auto& a : t->args) collectNames(a, out);
}

// Index of a reserved variable name (_v<digits>), or -1. Fresh supplies must
// start above every index already present in their input: formulas are
// rewritten repeatedly (image application, unfolding, substitution), and a
// later pass that reused an index would capture the binders of an earlier one.
int reservedIndex(const std::string& n) {
  if (n.size() < 3 || n[0] != '_' || n[1] != 'v') return -1;
  long long v = 0;
  for (size_t i = 2; i < n.size(); ++i) {
    if (!isdigit(static_cast<unsigned char>(n[i]))) return -1;
    v = v * 10 + (n[i] - '0');
    if (v > 1'000'000'000) return 1'000'000'000;
  }
  return static_cast<int>(v);
}

void raiseAboveTerm(const TermPtr& t, int& floor_) {
  if (t->isVar) {
    floor_ = std::max(floor_, reservedIndex(t->head));
    return;
  }
  for (const auto& a : t->args) raiseAboveTerm(a, floor_);
}

void raiseAboveFormula(const FormulaPtr& f, int& floor_) {
  for (const auto& t : f->args) raiseAboveTerm(t, floor_);
  if (f->kind == FK::Exists || f->kind == FK::Forall)
    floor_ = std::max(floor_, reservedIndex(f->var));
  for (const auto& k : f->kids) raiseAboveFormula(k, floor_);
}

FormulaPtr substImpl(const FormulaPtr& f, std::map<std::string, TermPtr>& map,
                     const std::set<std::string>& avoid, int& fresh) {
  switch (f->kind) {
    case FK::Top:
    case FK::Bot:
      return f;
    case FK::Atom:
    case FK::Eq: {
      Context singles;
      std::vector<TermPtr> repl;
      for (const auto& [name, term] : map) {
        singles.push_back({name, term->sort});
        repl.push_back(term);
      }
      bool changed = false;
      std::vector<TermPtr> args;
      for (const auto& t : f->args) {
        args.push_back(substituteTerm(t, singles, repl));
        changed = changed || args.back().get() != t.get();
      }
      if (!changed) return f;
      auto g = std::make_shared<Formula>(*f);
      g->args = std::move(args);
      return g;
    }
    case FK::And:
    case FK::Or: {
      auto a = substImpl(f->kids[0], map, avoid, fresh);
      auto b = substImpl(f->kids[1], map, avoid, fresh);
      if (a.get() == f->kids[0].get() && b.get() == f->kids[1].get()) return f;
      auto g = std::make_shared<Formula>(*f);
      g->kids = {a, b};
      return g;
    }
    case FK::Not: {
      auto a = substImpl(f->kids[0], map, avoid, fresh);
      if (a.get() == f->kids[0].get()) return f;
      auto g = std::make_shared<Formula>(*f);
      g->kids = {a};
      return g;
    }
    case FK::Exists:
    case FK::Forall: {
      // Shadowing removes the binder's name from the active substitution.
      auto hidden = map.find(f->var);
      TermPtr saved;
      bool had = false;
      if (hidden != map.end()) {
        saved = hidden->second;
        had = true;
        map.erase(hidden);
      }
      std::string binder = f->var;
      FormulaPtr body = f->kids[0];
      if (avoid.count(binder)) {
        // Capture: some replacement term mentions this name; rename the
        // binder before substituting.
        std::string nb = freshVar(fresh);
        std::map<std::string, TermPtr> ren{{binder, mkVar(nb, f->varSort)}};
        std::set<std::string> none;
        body = substImpl(body, ren, none, fresh);
        binder = nb;
      }
      auto nbody = substImpl(body, map, avoid, fresh);
      if (had) map[f->var] = saved;
      if (binder == f->var && nbody.get() == f->kids[0].get()) return f;
      auto g = std::make_shared<Formula>(*f);
      g->var = binder;
      g->kids = {nbody};
      return g;
    }
  }
  return f;
}

}  // namespace

FormulaPtr substitute(const FormulaPtr& f, const Context& ctx,
                      const std::vector<TermPtr>& terms) {
  if (ctx.size() != terms.size())
    throw InputError("substitution arity mismatch: context has " +
                     std::to_string(ctx.size()) + " variables, got " +
                     std::to_string(terms.size()) + " terms");
  std::map<std::string, TermPtr> map;
  std::set<std::string> avoid;
  for (size_t i = 0; i < ctx.size(); ++i) {
    if (terms[i]->sort != ctx[i].sort)
      throw InputError("substitution for '" + ctx[i].name + "' has sort " +
                       terms[i]->sort + ", expected " + ctx[i].sort);
    map[ctx[i].name] = terms[i];
    collectNames(terms[i], avoid);
  }
  int fresh = 1000000;  // distinct range from parser-introduced names
  raiseAboveFormula(f, fresh);
  for (const auto& t : terms) raiseAboveTerm(t, fresh);
  return substImpl(f, map, avoid, fresh);
}

FormulaPtr freshenBound(const FormulaPtr& f, int& counter) {
  switch (f->kind) {
    case FK::Top:
    case FK::Bot:
    case FK::Atom:
    case FK::Eq:
      return f;
    case FK::And:
    case FK::Or: {
      auto a = freshenBound(f->kids[0], counter);
      auto b = freshenBound(f->kids[1], counter);
      if (a.get() == f->kids[0].get() && b.get() == f->kids[1].get()) return f;
      auto g = std::make_shared<Formula>(*f);
      g->kids = {a, b};
      return g;
    }
    case FK::Not: {
      auto a = freshenBound(f->kids[0], counter);
      auto g = std::make_shared<Formula>(*f);
      g->kids = {a};
      return g;
    }
    case FK::Exists:
    case FK::Forall: {
      std::string nb = freshVar(counter);
      std::map<std::string, TermPtr> ren{{f->var, mkVar(nb, f->varSort)}};
      std::set<std::string> none;
      int dummy = counter;
      auto body = substImpl(f->kids[0], ren, none, dummy);
      auto g = std::make_shared<Formula>(*f);
      g->var = nb;
      g->kids = {freshenBound(body, counter)};
      return g;
    }
  }
  return f;
}

// ---------------------------------------------------------------------------
// Function graph unfolding

namespace {

bool allVarArgs(const TermPtr& t) {
  for (const auto& a : t->args)
    if (!a->isVar) return false;
  return true;
}

// Post-order search for the first application all of whose arguments are
// variables (the innermost-leftmost extractable application). When found,
// replaces that occurrence by `repl` and reports the extracted application.
TermPtr extractFrom(const TermPtr& t, const TermPtr& repl, TermPtr& extracted) {
  if (t->isVar || extracted) return t;
  std::vector<TermPtr> args = t->args;
  for (auto& a : args) {
    a = extractFrom(a, repl, extracted);
    if (extracted) {
      auto u = std::make_shared<Term>(*t);
      u->args = std::move(args);
      return u;
    }
  }
  if (allVarArgs(t)) {
    extracted = t;
    return repl;
  }
  return t;
}

bool isGraphNormal(const FormulaPtr& f) {
  if (f->kind == FK::Eq) {
    const TermPtr& l = f->args[0];
    const TermPtr& r = f->args[1];
    if (l->isVar) return r->isVar;
    return allVarArgs(l) && r->isVar;
  }
  for (const auto& t : f->args)
    if (!t->isVar) return false;
  return true;
}

FormulaPtr unfoldAtom(const FormulaPtr& f, int& fresh) {
  if (isGraphNormal(f)) return f;
  // Choose the extraction site. For an equality whose left side is an
  // application, that root occurrence is exempt (it may become the graph
  // head); everything else is fair game, innermost-leftmost first.
  TermPtr extracted;
  std::vector<TermPtr> args = f->args;
  if (f->kind == FK::Eq && !args[0]->isVar) {
    // Scan the left side's arguments, then the whole right side.
    std::vector<TermPtr> largs = args[0]->args;
    for (auto& a : largs) {
      if (extracted) break;
      TermPtr witness = mkVar("_pending", a->sort);  // placeholder; fixed after
      a = extractFrom(a, witness, extracted);
    }
    if (extracted) {
      auto l = std::make_shared<Term>(*args[0]);
      l->args = std::move(largs);
      args[0] = l;
    } else {
      TermPtr witness = mkVar("_pending", "");
      args[1] = extractFrom(args[1], witness, extracted);
    }
  } else {
    for (auto& a : args) {
      if (extracted) break;
      TermPtr witness = mkVar("_pending", a->sort);
      a = extractFrom(a, witness, extracted);
    }
  }
  if (!extracted) return f;  // no extractable site (cannot happen on typed input)

  // Replace the placeholder with the real fresh variable of the right sort.
  std::string y = freshVar(fresh);
  TermPtr yv = mkVar(y, extracted->sort);
  struct Fix {
    TermPtr yv;
    TermPtr run(const TermPtr& t) {
      if (t->isVar) return t->head == "_pending" ? yv : t;
      std::vector<TermPtr> args;
      bool changed = false;
      for (const auto& a : t->args) {
        args.push_back(run(a));
        changed = changed || args.back().get() != a.get();
      }
      if (!changed) return t;
      auto u = std::make_shared<Term>(*t);
      u->args = std::move(args);
      return u;
    }
  } fix{yv};
  for (auto& a : args) a = fix.run(a);

  auto inner = std::make_shared<Formula>(*f);
  inner->args = std::move(args);
  FormulaPtr graph = fEq(extracted, yv);
  return fExists(y, extracted->sort, fAnd(graph, unfoldAtom(inner, fresh)));
}

FormulaPtr unfoldImpl(const FormulaPtr& f, int& fresh) {
  switch (f->kind) {
    case FK::Top:
    case FK::Bot:
      return f;
    case FK::Atom:
    case FK::Eq:
      return unfoldAtom(f, fresh);
    case FK::And:
    case FK::Or: {
      auto a = unfoldImpl(f->kids[0], fresh);
      auto b = unfoldImpl(f->kids[1], fresh);
      if (a.get() == f->kids[0].get() && b.get() == f->kids[1].get()) return f;
      auto g = std::make_shared<Formula>(*f);
      g->kids = {a, b};
      return g;
    }
    case FK::Not: {
      auto a = unfoldImpl(f->kids[0], fresh);
      if (a.get() == f->kids[0].get()) return f;
      auto g = std::make_shared<Formula>(*f);
      g->kids = {a};
      return g;
    }
    case FK::Exists:
    case FK::Forall: {
      auto body = unfoldImpl(f->kids[0], fresh);
      if (body.get() == f->kids[0].get()) return f;
      auto g = std::make_shared<Formula>(*f);
      g->kids = {body};
      return g;
    }
  }
  return f;
}

}  // namespace

FormulaPtr unfoldFunctionGraphs(const FormulaPtr& f) {
  int fresh = 2000000;  // separate range from substitution's fresh names
  raiseAboveFormula(f, fresh);
  return unfoldImpl(f, fresh);
}

Sequent unfoldFunctionGraphs(const Sequent& s) {
  Sequent out;
  out.label = s.label;
  for (const auto& f : s.lhs) out.lhs.push_back(unfoldFunctionGraphs(f));
  out.rhs = unfoldFunctionGraphs(s.rhs);
  return out;
}

// ---------------------------------------------------------------------------
// Substitution classes

namespace {

void canonPrintTerm(const TermPtr& t, const std::map<std::string, std::string>& freeMap,
                    std::vector<std::pair<std::string, std::string>>& boundStack,
                    std::string& out) {
  if (t->isVar) {
    for (size_t i = boundStack.size(); i-- > 0;)
      if (boundStack[i].first == t->head) {
        out += boundStack[i].second;
        return;
      }
    auto it = freeMap.find(t->head);
    out += (it != freeMap.end()) ? it->second : t->head;
    return;
  }
  out += t->head;
  if (!t->args.empty()) {
    out += "(";
    for (size_t i = 0; i < t->args.size(); ++i) {
      if (i) out += ",";
      canonPrintTerm(t->args[i], freeMap, boundStack, out);
    }
    out += ")";
  }
}

void canonPrint(const FormulaPtr& f, const std::map<std::string, std::string>& freeMap,
                std::vector<std::pair<std::string, std::string>>& boundStack,
                int& boundCounter, std::string& out) {
  switch (f->kind) {
    case FK::Top:
      out += "T";
      return;
    case FK::Bot:
      out += "F";
      return;
    case FK::Atom:
      out += f->rel;
      out += "(";
      for (size_t i = 0; i < f->args.size(); ++i) {
        if (i) out += ",";
        canonPrintTerm(f->args[i], freeMap, boundStack, out);
      }
      out += ")";
      return;
    case FK::Eq:
      out += "=(";
      canonPrintTerm(f->args[0], freeMap, boundStack, out);
      out += ",";
      canonPrintTerm(f->args[1], freeMap, boundStack, out);
      out += ")";
      return;
    case FK::And:
    case FK::Or:
      out += f->kind == FK::And ? "&(" : "|(";
      canonPrint(f->kids[0], freeMap, boundStack, boundCounter, out);
      out += ",";
      canonPrint(f->kids[1], freeMap, boundStack, boundCounter, out);
      out += ")";
      return;
    case FK::Not:
      out += "~(";
      canonPrint(f->kids[0], freeMap, boundStack, boundCounter, out);
      out += ")";
      return;
    case FK::Exists:
    case FK::Forall: {
      std::string b = "_b" + std::to_string(++boundCounter);
      out += (f->kind == FK::Exists ? "E" : "A");
      out += b + ":" + f->varSort + ".(";
      boundStack.emplace_back(f->var, b);
      canonPrint(f->kids[0], freeMap, boundStack, boundCounter, out);
      boundStack.pop_back();
      out += ")";
      return;
    }
  }
}

}  // namespace

std::string SubstitutionClass::canonicalKey() const {
  std::map<std::string, std::string> freeMap;
  std::string key = "[";
  for (size_t i = 0; i < ctx.size(); ++i) {
    freeMap[ctx[i].name] = "_c" + std::to_string(i + 1);
    if (i) key += ",";
    key += ctx[i].sort;
  }
  key += "]";
  std::vector<std::pair<std::string, std::string>> boundStack;
  int boundCounter = 0;
  canonPrint(formula, freeMap, boundStack, boundCounter, key);
  return key;
}

bool SubstitutionClass::operator==(const SubstitutionClass& o) const {
  return canonicalKey() == o.canonicalKey();
}

bool SubstitutionClass::operator<(const SubstitutionClass& o) const {
  int sa = formulaSize(formula), sb = formulaSize(o.formula);
  if (sa != sb) return sa < sb;
  return canonicalKey() < o.canonicalKey();
}

SubstitutionClass classOf(const FormulaPtr& f) {
  return SubstitutionClass{f, freeContext(f)};
}

SubstitutionClass concatClass(const SubstitutionClass& a, const SubstitutionClass& b) {
  std::set<std::string> taken;
  for (const auto& v : a.ctx) taken.insert(v.name);

  Context bctx;
  std::vector<TermPtr> repl;
  for (const auto& v : b.ctx) {
    std::string n = v.name;
    int k = 1;
    while (taken.count(n)) n = v.name + "_" + std::to_string(++k);
    taken.insert(n);
    bctx.push_back({n, v.sort});
    repl.push_back(mkVar(n, v.sort));
  }
  FormulaPtr bf = substitute(b.formula, b.ctx, repl);

  SubstitutionClass out;
  out.formula = fAnd(a.formula, bf);
  out.ctx = a.ctx;
  out.ctx.insert(out.ctx.end(), bctx.begin(), bctx.end());
  return out;
}

}  // namespace cohlog
