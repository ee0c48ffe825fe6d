#include "cohlog/ast.hpp"

#include <algorithm>
#include <sstream>

namespace cohlog {

// ---------------------------------------------------------------------------
// Signature

bool Signature::hasSort(const std::string& s) const {
  return std::find(sorts.begin(), sorts.end(), s) != sorts.end();
}

const RelDecl* Signature::relation(const std::string& name) const {
  for (const auto& r : relations)
    if (r.name == name) return &r;
  return nullptr;
}

const FunDecl* Signature::function(const std::string& name) const {
  for (const auto& f : functions)
    if (f.name == name) return &f;
  return nullptr;
}

void Signature::validate() const {
  std::map<std::string, std::string> seen;  // name -> kind
  auto claim = [&](const std::string& name, const std::string& kind) {
    if (name.empty()) throw InputError("empty name in signature");
    auto [it, fresh] = seen.emplace(name, kind);
    if (!fresh)
      throw InputError("signature declares '" + name + "' as both " + it->second +
                       " and " + kind);
  };
  for (const auto& s : sorts) claim(s, "sort");
  for (const auto& r : relations) {
    claim(r.name, "relation");
    for (const auto& d : r.domain)
      if (!hasSort(d))
        throw InputError("relation " + r.name + " uses unknown sort '" + d + "'");
  }
  for (const auto& f : functions) {
    claim(f.name, "function");
    for (const auto& d : f.domain)
      if (!hasSort(d))
        throw InputError("function " + f.name + " uses unknown sort '" + d + "'");
    if (!hasSort(f.codomain))
      throw InputError("function " + f.name + " uses unknown sort '" + f.codomain + "'");
  }
}

bool Signature::operator==(const Signature& other) const {
  if (sorts != other.sorts) return false;
  if (relations.size() != other.relations.size()) return false;
  if (functions.size() != other.functions.size()) return false;
  for (size_t i = 0; i < relations.size(); ++i)
    if (relations[i].name != other.relations[i].name ||
        relations[i].domain != other.relations[i].domain)
      return false;
  for (size_t i = 0; i < functions.size(); ++i)
    if (functions[i].name != other.functions[i].name ||
        functions[i].domain != other.functions[i].domain ||
        functions[i].codomain != other.functions[i].codomain)
      return false;
  return true;
}

// ---------------------------------------------------------------------------
// Terms

TermPtr mkVar(std::string name, std::string sort) {
  auto t = std::make_shared<Term>();
  t->isVar = true;
  t->head = std::move(name);
  t->sort = std::move(sort);
  return t;
}

TermPtr mkApp(const Signature& sig, const std::string& fun, std::vector<TermPtr> args) {
  const FunDecl* decl = sig.function(fun);
  if (!decl) throw InputError("unknown function '" + fun + "'");
  if (decl->domain.size() != args.size())
    throw InputError("function " + fun + " expects " +
                     std::to_string(decl->domain.size()) + " arguments, got " +
                     std::to_string(args.size()));
  for (size_t i = 0; i < args.size(); ++i)
    if (args[i]->sort != decl->domain[i])
      throw InputError("argument " + std::to_string(i + 1) + " of " + fun +
                       " has sort " + args[i]->sort + ", expected " + decl->domain[i]);
  auto t = std::make_shared<Term>();
  t->isVar = false;
  t->head = fun;
  t->sort = decl->codomain;
  t->args = std::move(args);
  return t;
}

bool termEqual(const TermPtr& a, const TermPtr& b) {
  if (a.get() == b.get()) return true;
  if (a->isVar != b->isVar || a->head != b->head || a->sort != b->sort) return false;
  if (a->args.size() != b->args.size()) return false;
  for (size_t i = 0; i < a->args.size(); ++i)
    if (!termEqual(a->args[i], b->args[i])) return false;
  return true;
}

int termSize(const TermPtr& t) {
  int n = 1;
  for (const auto& a : t->args) n += termSize(a);
  return n;
}

int termCompare(const TermPtr& a, const TermPtr& b) {
  int sa = termSize(a), sb = termSize(b);
  if (sa != sb) return sa < sb ? -1 : 1;
  if (a->isVar != b->isVar) return a->isVar ? -1 : 1;
  if (a->head != b->head) return a->head < b->head ? -1 : 1;
  if (a->sort != b->sort) return a->sort < b->sort ? -1 : 1;
  for (size_t i = 0; i < a->args.size() && i < b->args.size(); ++i) {
    int c = termCompare(a->args[i], b->args[i]);
    if (c != 0) return c;
  }
  if (a->args.size() != b->args.size())
    return a->args.size() < b->args.size() ? -1 : 1;
  return 0;
}

// ---------------------------------------------------------------------------
// Formula constructors

FormulaPtr fTop() {
  static FormulaPtr t = std::make_shared<Formula>(Formula{FK::Top, {}, {}, {}, {}, {}});
  return t;
}

FormulaPtr fBot() {
  static FormulaPtr b = std::make_shared<Formula>(Formula{FK::Bot, {}, {}, {}, {}, {}});
  return b;
}

FormulaPtr fAnd(FormulaPtr a, FormulaPtr b) {
  auto f = std::make_shared<Formula>();
  f->kind = FK::And;
  f->kids = {std::move(a), std::move(b)};
  return f;
}

FormulaPtr fOr(FormulaPtr a, FormulaPtr b) {
  auto f = std::make_shared<Formula>();
  f->kind = FK::Or;
  f->kids = {std::move(a), std::move(b)};
  return f;
}

FormulaPtr fExists(std::string var, std::string sort, FormulaPtr body) {
  auto f = std::make_shared<Formula>();
  f->kind = FK::Exists;
  f->var = std::move(var);
  f->varSort = std::move(sort);
  f->kids = {std::move(body)};
  return f;
}

FormulaPtr fForall(std::string var, std::string sort, FormulaPtr body) {
  auto f = std::make_shared<Formula>();
  f->kind = FK::Forall;
  f->var = std::move(var);
  f->varSort = std::move(sort);
  f->kids = {std::move(body)};
  return f;
}

FormulaPtr fNot(FormulaPtr a) {
  auto f = std::make_shared<Formula>();
  f->kind = FK::Not;
  f->kids = {std::move(a)};
  return f;
}

FormulaPtr fAtom(std::string rel, std::vector<TermPtr> args) {
  auto f = std::make_shared<Formula>();
  f->kind = FK::Atom;
  f->rel = std::move(rel);
  f->args = std::move(args);
  return f;
}

FormulaPtr fEq(TermPtr lhs, TermPtr rhs) {
  auto f = std::make_shared<Formula>();
  f->kind = FK::Eq;
  f->args = {std::move(lhs), std::move(rhs)};
  return f;
}

FormulaPtr fAndAll(const std::vector<FormulaPtr>& parts) {
  if (parts.empty()) return fTop();
  FormulaPtr acc = parts.back();
  for (size_t i = parts.size() - 1; i-- > 0;) acc = fAnd(parts[i], acc);
  return acc;
}

FormulaPtr fOrAll(const std::vector<FormulaPtr>& parts) {
  if (parts.empty()) return fBot();
  FormulaPtr acc = parts.back();
  for (size_t i = parts.size() - 1; i-- > 0;) acc = fOr(parts[i], acc);
  return acc;
}

int formulaSize(const FormulaPtr& f) {
  int n = 1;
  for (const auto& k : f->kids) n += formulaSize(k);
  return n;
}

bool formulaEqual(const FormulaPtr& a, const FormulaPtr& b) {
  if (a.get() == b.get()) return true;
  if (a->kind != b->kind || a->rel != b->rel || a->var != b->var ||
      a->varSort != b->varSort)
    return false;
  if (a->args.size() != b->args.size() || a->kids.size() != b->kids.size())
    return false;
  for (size_t i = 0; i < a->args.size(); ++i)
    if (!termEqual(a->args[i], b->args[i])) return false;
  for (size_t i = 0; i < a->kids.size(); ++i)
    if (!formulaEqual(a->kids[i], b->kids[i])) return false;
  return true;
}

int formulaCompare(const FormulaPtr& a, const FormulaPtr& b) {
  int sa = formulaSize(a), sb = formulaSize(b);
  if (sa != sb) return sa < sb ? -1 : 1;
  std::string pa = printFormula(a), pb = printFormula(b);
  if (pa != pb) return pa < pb ? -1 : 1;
  return 0;
}

// ---------------------------------------------------------------------------
// Contexts

static void collectTermVars(const TermPtr& t, const std::vector<std::string>& bound,
                            Context& out) {
  if (t->isVar) {
    if (std::find(bound.begin(), bound.end(), t->head) != bound.end()) return;
    for (const auto& v : out)
      if (v.name == t->head) return;
    out.push_back({t->head, t->sort});
    return;
  }
  for (const auto& a : t->args) collectTermVars(a, bound, out);
}

static void collectFree(const FormulaPtr& f, std::vector<std::string>& bound,
                        Context& out) {
  switch (f->kind) {
    case FK::Top:
    case FK::Bot:
      return;
    case FK::Atom:
    case FK::Eq:
      for (const auto& t : f->args) collectTermVars(t, bound, out);
      return;
    case FK::And:
    case FK::Or:
    case FK::Not:
      for (const auto& k : f->kids) collectFree(k, bound, out);
      return;
    case FK::Exists:
    case FK::Forall:
      bound.push_back(f->var);
      collectFree(f->kids[0], bound, out);
      bound.pop_back();
      return;
  }
}

Context freeContext(const FormulaPtr& f) {
  Context out;
  std::vector<std::string> bound;
  collectFree(f, bound, out);
  return out;
}

Context freeContextOfTerm(const TermPtr& t) {
  Context out;
  std::vector<std::string> bound;
  collectTermVars(t, bound, out);
  return out;
}

Context freeContext(const Sequent& s) {
  Context out;
  std::vector<std::string> bound;
  for (const auto& f : s.lhs) collectFree(f, bound, out);
  collectFree(s.rhs, bound, out);
  return out;
}

// ---------------------------------------------------------------------------
// Typing

namespace {

struct TypeEnv {
  const Signature& sig;
  bool classical;
  // Every variable name must be used at one sort throughout the formula,
  // whether free or bound; shadowing at a different sort is rejected to keep
  // printed formulas unambiguous.
  std::map<std::string, std::string> sortOf;

  void bindOrCheck(const std::string& name, const std::string& sort) {
    auto [it, fresh] = sortOf.emplace(name, sort);
    if (!fresh && it->second != sort)
      throw InputError("variable '" + name + "' used at sorts " + it->second +
                       " and " + sort);
  }

  void checkTerm(const TermPtr& t) {
    if (t->isVar) {
      if (!sig.hasSort(t->sort))
        throw InputError("variable '" + t->head + "' has unknown sort '" + t->sort + "'");
      bindOrCheck(t->head, t->sort);
      return;
    }
    const FunDecl* decl = sig.function(t->head);
    if (!decl) throw InputError("unknown function '" + t->head + "'");
    if (decl->domain.size() != t->args.size())
      throw InputError("function " + t->head + " applied to " +
                       std::to_string(t->args.size()) + " arguments, expects " +
                       std::to_string(decl->domain.size()));
    if (t->sort != decl->codomain)
      throw InputError("application of " + t->head + " tagged with sort " + t->sort);
    for (size_t i = 0; i < t->args.size(); ++i) {
      checkTerm(t->args[i]);
      if (t->args[i]->sort != decl->domain[i])
        throw InputError("argument " + std::to_string(i + 1) + " of " + t->head +
                         " has sort " + t->args[i]->sort + ", expected " +
                         decl->domain[i]);
    }
  }

  void check(const FormulaPtr& f) {
    switch (f->kind) {
      case FK::Top:
      case FK::Bot:
        return;
      case FK::Atom: {
        const RelDecl* decl = sig.relation(f->rel);
        if (!decl) throw InputError("unknown relation '" + f->rel + "'");
        if (decl->domain.size() != f->args.size())
          throw InputError("relation " + f->rel + " applied to " +
                           std::to_string(f->args.size()) + " arguments, expects " +
                           std::to_string(decl->domain.size()));
        for (size_t i = 0; i < f->args.size(); ++i) {
          checkTerm(f->args[i]);
          if (f->args[i]->sort != decl->domain[i])
            throw InputError("argument " + std::to_string(i + 1) + " of " + f->rel +
                             " has sort " + f->args[i]->sort + ", expected " +
                             decl->domain[i]);
        }
        return;
      }
      case FK::Eq:
        checkTerm(f->args[0]);
        checkTerm(f->args[1]);
        if (f->args[0]->sort != f->args[1]->sort)
          throw InputError("equality between sorts " + f->args[0]->sort + " and " +
                           f->args[1]->sort);
        return;
      case FK::And:
      case FK::Or:
        check(f->kids[0]);
        check(f->kids[1]);
        return;
      case FK::Not:
        if (!classical) throw InputError("negation requires classical mode");
        check(f->kids[0]);
        return;
      case FK::Forall:
        if (!classical)
          throw InputError("universal quantifier requires classical mode");
        [[fallthrough]];
      case FK::Exists:
        if (!sig.hasSort(f->varSort))
          throw InputError("quantifier binds unknown sort '" + f->varSort + "'");
        bindOrCheck(f->var, f->varSort);
        check(f->kids[0]);
        return;
    }
  }
};

}  // namespace

void typecheckFormula(const Signature& sig, const FormulaPtr& f, bool classical) {
  TypeEnv env{sig, classical, {}};
  env.check(f);
}

void Theory::validate() const {
  sig.validate();
  std::map<std::string, bool> labels;
  for (const auto& ax : axioms) {
    if (!ax.label.empty()) {
      auto [it, fresh] = labels.emplace(ax.label, true);
      if (!fresh) throw InputError("duplicate axiom label '" + ax.label + "'");
      (void)it;
    }
    TypeEnv env{sig, classical, {}};
    for (const auto& f : ax.lhs) env.check(f);
    env.check(ax.rhs);
  }
}

// ---------------------------------------------------------------------------
// Printing

std::string printTerm(const TermPtr& t) {
  if (t->isVar) return t->head;
  if (t->args.empty()) return t->head;
  std::string out = t->head + "(";
  for (size_t i = 0; i < t->args.size(); ++i) {
    if (i) out += ", ";
    out += printTerm(t->args[i]);
  }
  out += ")";
  return out;
}

namespace {

// Precedence levels: 0 quantifiers (weakest), 1 or, 2 and, 3 not/atomic.
int prec(FK k) {
  switch (k) {
    case FK::Exists:
    case FK::Forall:
      return 0;
    case FK::Or:
      return 1;
    case FK::And:
      return 2;
    default:
      return 3;
  }
}

void printInto(const FormulaPtr& f, int minPrec, std::string& out) {
  int p = prec(f->kind);
  bool paren = p < minPrec;
  if (paren) out += "(";
  switch (f->kind) {
    case FK::Top:
      out += "top";
      break;
    case FK::Bot:
      out += "bot";
      break;
    case FK::Atom:
      out += f->rel;
      if (!f->args.empty()) {
        out += "(";
        for (size_t i = 0; i < f->args.size(); ++i) {
          if (i) out += ", ";
          out += printTerm(f->args[i]);
        }
        out += ")";
      }
      break;
    case FK::Eq:
      out += printTerm(f->args[0]) + " = " + printTerm(f->args[1]);
      break;
    case FK::And:
      // Chains of the same connective print flat; the parser right-nests,
      // which matches the constructors' right fold.
      printInto(f->kids[0], 3, out);
      out += " & ";
      printInto(f->kids[1], 2, out);
      break;
    case FK::Or:
      printInto(f->kids[0], 2, out);
      out += " | ";
      printInto(f->kids[1], 1, out);
      break;
    case FK::Not:
      out += "not ";
      printInto(f->kids[0], 3, out);
      break;
    case FK::Exists:
      out += "exists " + f->var + ":" + f->varSort + ". ";
      printInto(f->kids[0], 0, out);
      break;
    case FK::Forall:
      out += "forall " + f->var + ":" + f->varSort + ". ";
      printInto(f->kids[0], 0, out);
      break;
  }
  if (paren) out += ")";
}

}  // namespace

std::string printFormula(const FormulaPtr& f) {
  std::string out;
  printInto(f, 0, out);
  return out;
}

std::string printSequent(const Sequent& s) {
  std::string out;
  // The context block pins variable sorts, so printed sequents reparse
  // identically even where sort inference would be ambiguous.
  Context ctx = freeContext(s);
  if (!ctx.empty()) out += "[" + printContext(ctx) + "] ";
  for (size_t i = 0; i < s.lhs.size(); ++i) {
    if (i) out += ", ";
    out += printFormula(s.lhs[i]);
  }
  if (!s.lhs.empty()) out += " ";
  out += "|- " + printFormula(s.rhs);
  return out;
}

std::string printContext(const Context& ctx) {
  std::string out;
  for (size_t i = 0; i < ctx.size(); ++i) {
    if (i) out += ", ";
    out += ctx[i].name + ":" + ctx[i].sort;
  }
  return out;
}

std::string printTheory(const Theory& t) {
  std::ostringstream out;
  out << "theory " << t.name << (t.classical ? " classical" : "") << " {\n";
  for (const auto& s : t.sig.sorts) out << "  sort " << s << "\n";
  for (const auto& r : t.sig.relations) {
    out << "  rel " << r.name;
    if (!r.domain.empty()) {
      out << " : ";
      for (size_t i = 0; i < r.domain.size(); ++i) {
        if (i) out << " * ";
        out << r.domain[i];
      }
    }
    out << "\n";
  }
  for (const auto& f : t.sig.functions) {
    out << "  fun " << f.name << " : ";
    for (size_t i = 0; i < f.domain.size(); ++i) {
      if (i) out << " * ";
      out << f.domain[i];
    }
    if (!f.domain.empty()) out << " -> ";
    out << f.codomain << "\n";
  }
  for (const auto& ax : t.axioms) {
    out << "  ax";
    if (!ax.label.empty()) out << " " << ax.label;
    out << ": " << printSequent(ax) << "\n";
  }
  out << "}\n";
  return out.str();
}

std::string freshVar(int& counter) { return "_v" + std::to_string(++counter); }

bool isReservedName(const std::string& name) {
  return !name.empty() && name[0] == '_';
}

}  // namespace cohlog
