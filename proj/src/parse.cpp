#include "cohlog/parse.hpp"

#include <algorithm>
#include <cctype>
#include <cstring>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include "cohlog/category.hpp"

namespace cohlog {

namespace {

// ---------------------------------------------------------------------------
// Lexer. '#' starts a comment to end of line. Multi-char punctuation is
// matched longest-first.

struct Token {
  enum Kind { Ident, Number, Punct, Str, End } kind = End;
  std::string text;
  int line = 0, col = 0;
};

struct Lexer {
  std::vector<Token> toks;

  explicit Lexer(const std::string& src) {
    int line = 1, col = 1;
    size_t i = 0;
    while (i < src.size()) {
      char c = src[i];
      if (c == '\n') {
        ++line;
        col = 1;
        ++i;
        continue;
      }
      if (c == ' ' || c == '\t' || c == '\r') {
        ++col;
        ++i;
        continue;
      }
      if (c == '#') {
        while (i < src.size() && src[i] != '\n') ++i;
        continue;
      }
      Token t;
      t.line = line;
      t.col = col;
      if (isalpha(static_cast<unsigned char>(c)) || c == '_') {
        size_t j = i;
        while (j < src.size() &&
               (isalnum(static_cast<unsigned char>(src[j])) || src[j] == '_'))
          ++j;
        t.kind = Token::Ident;
        t.text = src.substr(i, j - i);
        col += static_cast<int>(j - i);
        i = j;
      } else if (isdigit(static_cast<unsigned char>(c))) {
        size_t j = i;
        while (j < src.size() && isdigit(static_cast<unsigned char>(src[j]))) ++j;
        t.kind = Token::Number;
        t.text = src.substr(i, j - i);
        col += static_cast<int>(j - i);
        i = j;
      } else if (c == '"') {
        size_t j = i + 1;
        while (j < src.size() && src[j] != '"' && src[j] != '\n') ++j;
        if (j >= src.size() || src[j] != '"')
          throw InputError("line " + std::to_string(line) + ": unterminated string");
        t.kind = Token::Str;
        t.text = src.substr(i + 1, j - i - 1);
        col += static_cast<int>(j - i + 1);
        i = j + 1;
      } else {
        static const char* multi[] = {"|-", "->", "=>", ":="};
        t.kind = Token::Punct;
        t.text = std::string(1, c);
        for (const char* m : multi) {
          size_t len = strlen(m);
          if (src.compare(i, len, m) == 0) {
            t.text = m;
            break;
          }
        }
        col += static_cast<int>(t.text.size());
        i += t.text.size();
      }
      toks.push_back(std::move(t));
    }
    Token end;
    end.kind = Token::End;
    end.line = line;
    toks.push_back(end);
  }
};

struct Cursor {
  const std::vector<Token>& toks;
  size_t pos = 0;

  const Token& cur() const { return toks[pos]; }
  const Token& ahead(size_t k = 1) const {
    return toks[std::min(pos + k, toks.size() - 1)];
  }
  void advance() {
    if (pos + 1 < toks.size()) ++pos;
  }

  [[noreturn]] void fail(const std::string& msg) const {
    const Token& t = cur();
    std::string where = "line " + std::to_string(t.line) + ":" + std::to_string(t.col);
    std::string got = t.kind == Token::End ? "end of input" : "'" + t.text + "'";
    throw InputError(where + ": " + msg + " (got " + got + ")");
  }

  bool isPunct(const std::string& p) const {
    return cur().kind == Token::Punct && cur().text == p;
  }
  bool isIdent(const std::string& w) const {
    return cur().kind == Token::Ident && cur().text == w;
  }
  void expectPunct(const std::string& p) {
    if (!isPunct(p)) fail("expected '" + p + "'");
    advance();
  }
  void expectKeyword(const std::string& w) {
    if (!isIdent(w)) fail("expected '" + w + "'");
    advance();
  }
  std::string ident(const std::string& what) {
    if (cur().kind != Token::Ident) fail("expected " + what);
    std::string s = cur().text;
    advance();
    return s;
  }
  // User-facing names must not start with '_': that range is reserved for
  // generated fresh variables.
  std::string userIdent(const std::string& what) {
    std::string s = ident(what);
    if (isReservedName(s)) fail("names starting with '_' are reserved");
    return s;
  }
};

const std::set<std::string>& formulaKeywords() {
  static const std::set<std::string> kw = {"top", "bot", "exists", "forall", "not"};
  return kw;
}

// ---------------------------------------------------------------------------
// Raw formula trees: parsed before variable sorts are known.

struct RTerm {
  bool isVar = false;
  std::string head;
  std::vector<RTerm> args;
  std::string sortAnn;  // inline annotation x:s
  int line = 0;
};

struct RFormula {
  FK kind = FK::Top;
  std::string rel;
  std::string var, varSort;
  std::vector<RTerm> args;
  std::vector<RFormula> kids;
  int line = 0;
};

struct FormulaParser {
  Cursor& c;
  const Signature& sig;

  RTerm parseTerm() {
    RTerm t;
    t.line = c.cur().line;
    std::string name = c.userIdent("a term");
    if (c.isPunct("(") && sig.function(name)) {
      t.isVar = false;
      t.head = name;
      c.advance();
      if (!c.isPunct(")")) {
        t.args.push_back(parseTerm());
        while (c.isPunct(",")) {
          c.advance();
          t.args.push_back(parseTerm());
        }
      }
      c.expectPunct(")");
      return t;
    }
    if (sig.function(name)) {
      const FunDecl* d = sig.function(name);
      if (!d->domain.empty())
        c.fail("function '" + name + "' needs " + std::to_string(d->domain.size()) +
               " arguments");
      t.isVar = false;
      t.head = name;
      return t;
    }
    if (sig.relation(name)) c.fail("relation '" + name + "' used as a term");
    t.isVar = true;
    t.head = name;
    // Inline sort annotation; skipped when the colon belongs to a binder,
    // which never reaches this code path.
    if (c.isPunct(":")) {
      c.advance();
      t.sortAnn = c.userIdent("a sort");
    }
    return t;
  }

  RFormula parsePrimary() {
    RFormula f;
    f.line = c.cur().line;
    if (c.isIdent("top")) {
      c.advance();
      f.kind = FK::Top;
      return f;
    }
    if (c.isIdent("bot")) {
      c.advance();
      f.kind = FK::Bot;
      return f;
    }
    if (c.isIdent("not")) {
      c.advance();
      f.kind = FK::Not;
      f.kids.push_back(parsePrimary());
      return f;
    }
    if (c.isIdent("exists") || c.isIdent("forall")) return parseQuant();
    if (c.isPunct("(")) {
      c.advance();
      f = parseFormula();
      c.expectPunct(")");
      return f;
    }
    if (c.cur().kind != Token::Ident) c.fail("expected a formula");
    std::string name = c.cur().text;
    if (formulaKeywords().count(name)) c.fail("misplaced keyword");
    if (sig.relation(name)) {
      c.advance();
      f.kind = FK::Atom;
      f.rel = name;
      const RelDecl* d = sig.relation(name);
      if (!d->domain.empty() || c.isPunct("(")) {
        c.expectPunct("(");
        if (!c.isPunct(")")) {
          f.args.push_back(parseTerm());
          while (c.isPunct(",")) {
            c.advance();
            f.args.push_back(parseTerm());
          }
        }
        c.expectPunct(")");
      }
      return f;
    }
    // Equality between terms.
    f.kind = FK::Eq;
    f.args.push_back(parseTerm());
    c.expectPunct("=");
    f.args.push_back(parseTerm());
    return f;
  }

  RFormula parseQuant() {
    RFormula f;
    f.line = c.cur().line;
    f.kind = c.isIdent("exists") ? FK::Exists : FK::Forall;
    c.advance();
    f.var = c.userIdent("a bound variable");
    c.expectPunct(":");
    f.varSort = c.userIdent("a sort");
    c.expectPunct(".");
    f.kids.push_back(parseFormula());
    return f;
  }

  RFormula parseAnd() {
    RFormula a = parsePrimary();
    if (!c.isPunct("&")) return a;
    c.advance();
    RFormula b = parseAnd();  // right-nested chain
    RFormula f;
    f.kind = FK::And;
    f.line = a.line;
    f.kids = {std::move(a), std::move(b)};
    return f;
  }

  RFormula parseOr() {
    RFormula a = parseAnd();
    if (!c.isPunct("|")) return a;
    c.advance();
    RFormula b = parseOr();
    RFormula f;
    f.kind = FK::Or;
    f.line = a.line;
    f.kids = {std::move(a), std::move(b)};
    return f;
  }

  RFormula parseFormula() {
    if (c.isIdent("exists") || c.isIdent("forall")) return parseQuant();
    return parseOr();
  }
};

// ---------------------------------------------------------------------------
// Sort inference over raw trees. Iterates constraint propagation to a fixed
// point; unresolved variables default to the unique sort when there is one.

struct SortInference {
  const Signature& sig;
  std::map<std::string, std::string>& env;  // var name -> sort
  bool changed = false;

  void assign(const std::string& name, const std::string& sort, int line) {
    if (sort.empty()) return;
    auto [it, fresh] = env.emplace(name, sort);
    if (fresh) {
      changed = true;
      return;
    }
    if (it->second != sort)
      throw InputError("line " + std::to_string(line) + ": variable '" + name +
                       "' used at sorts " + it->second + " and " + sort);
  }

  std::string sortOfTerm(const RTerm& t) {
    if (!t.isVar) {
      const FunDecl* d = sig.function(t.head);
      return d ? d->codomain : "";
    }
    if (!t.sortAnn.empty()) return t.sortAnn;
    auto it = env.find(t.head);
    return it != env.end() ? it->second : "";
  }

  void constrainTerm(const RTerm& t, const std::string& expected) {
    if (t.isVar) {
      if (!t.sortAnn.empty()) assign(t.head, t.sortAnn, t.line);
      if (!expected.empty()) assign(t.head, expected, t.line);
      return;
    }
    const FunDecl* d = sig.function(t.head);
    if (!d) throw InputError("line " + std::to_string(t.line) + ": unknown function '" +
                             t.head + "'");
    if (d->domain.size() != t.args.size())
      throw InputError("line " + std::to_string(t.line) + ": function " + t.head +
                       " expects " + std::to_string(d->domain.size()) + " arguments");
    for (size_t i = 0; i < t.args.size(); ++i) constrainTerm(t.args[i], d->domain[i]);
  }

  void walk(const RFormula& f) {
    switch (f.kind) {
      case FK::Top:
      case FK::Bot:
        return;
      case FK::Atom: {
        const RelDecl* d = sig.relation(f.rel);
        if (!d)
          throw InputError("line " + std::to_string(f.line) + ": unknown relation '" +
                           f.rel + "'");
        if (d->domain.size() != f.args.size())
          throw InputError("line " + std::to_string(f.line) + ": relation " + f.rel +
                           " expects " + std::to_string(d->domain.size()) +
                           " arguments");
        for (size_t i = 0; i < f.args.size(); ++i) constrainTerm(f.args[i], d->domain[i]);
        return;
      }
      case FK::Eq: {
        std::string l = sortOfTerm(f.args[0]), r = sortOfTerm(f.args[1]);
        std::string common = !l.empty() ? l : r;
        constrainTerm(f.args[0], common);
        constrainTerm(f.args[1], common);
        return;
      }
      case FK::And:
      case FK::Or:
      case FK::Not:
        for (const auto& k : f.kids) walk(k);
        return;
      case FK::Exists:
      case FK::Forall:
        // Binders use the same flat environment; a bound name reusing a free
        // name at a different sort is rejected, which matches the typing
        // discipline in typecheckFormula.
        assign(f.var, f.varSort, f.line);
        walk(f.kids[0]);
        return;
    }
  }
};

TermPtr freezeTerm(const RTerm& t, const Signature& sig,
                   const std::map<std::string, std::string>& env) {
  if (t.isVar) {
    auto it = env.find(t.head);
    if (it == env.end())
      throw InputError("line " + std::to_string(t.line) +
                       ": cannot infer the sort of variable '" + t.head +
                       "' (annotate it as " + t.head + ":<sort>)");
    return mkVar(t.head, it->second);
  }
  std::vector<TermPtr> args;
  for (const auto& a : t.args) args.push_back(freezeTerm(a, sig, env));
  return mkApp(sig, t.head, std::move(args));
}

FormulaPtr freeze(const RFormula& f, const Signature& sig,
                  const std::map<std::string, std::string>& env) {
  switch (f.kind) {
    case FK::Top:
      return fTop();
    case FK::Bot:
      return fBot();
    case FK::Atom: {
      std::vector<TermPtr> args;
      for (const auto& a : f.args) args.push_back(freezeTerm(a, sig, env));
      return fAtom(f.rel, std::move(args));
    }
    case FK::Eq:
      return fEq(freezeTerm(f.args[0], sig, env), freezeTerm(f.args[1], sig, env));
    case FK::And:
      return fAnd(freeze(f.kids[0], sig, env), freeze(f.kids[1], sig, env));
    case FK::Or:
      return fOr(freeze(f.kids[0], sig, env), freeze(f.kids[1], sig, env));
    case FK::Not:
      return fNot(freeze(f.kids[0], sig, env));
    case FK::Exists:
      return fExists(f.var, f.varSort, freeze(f.kids[0], sig, env));
    case FK::Forall:
      return fForall(f.var, f.varSort, freeze(f.kids[0], sig, env));
  }
  return fTop();
}

// Resolves variable sorts across a group of raw formulas sharing one
// environment (one sequent, or one clause body), then freezes them.
std::vector<FormulaPtr> resolveAndFreeze(const std::vector<const RFormula*>& raw,
                                         const Signature& sig, bool classical,
                                         const Context& declared) {
  std::map<std::string, std::string> env;
  for (const auto& v : declared) {
    if (!sig.hasSort(v.sort))
      throw InputError("declared context uses unknown sort '" + v.sort + "'");
    env[v.name] = v.sort;
  }
  for (int pass = 0; pass < 64; ++pass) {
    SortInference inf{sig, env, false};
    for (const auto* f : raw) inf.walk(*f);
    if (!inf.changed) break;
  }
  if (sig.sorts.size() == 1) {
    // Unconstrained variables default to the only sort.
    std::function<void(const RTerm&)> defTerm = [&](const RTerm& t) {
      if (t.isVar) {
        if (!env.count(t.head)) env[t.head] = sig.sorts[0];
      } else {
        for (const auto& a : t.args) defTerm(a);
      }
    };
    std::function<void(const RFormula&)> defAll = [&](const RFormula& f) {
      for (const auto& a : f.args) defTerm(a);
      for (const auto& k : f.kids) defAll(k);
    };
    for (const auto* f : raw) defAll(*f);
  }
  std::vector<FormulaPtr> out;
  for (const auto* f : raw) {
    FormulaPtr frozen = freeze(*f, sig, env);
    typecheckFormula(sig, frozen, classical);
    out.push_back(frozen);
  }
  return out;
}

Context parseContextBlock(Cursor& c) {
  Context ctx;
  c.expectPunct("[");
  if (!c.isPunct("]")) {
    while (true) {
      std::string name = c.userIdent("a variable");
      c.expectPunct(":");
      std::string sort = c.userIdent("a sort");
      ctx.push_back({name, sort});
      if (!c.isPunct(",")) break;
      c.advance();
    }
  }
  c.expectPunct("]");
  return ctx;
}

Sequent parseSequentBody(Cursor& c, const Signature& sig, bool classical) {
  Context declared;
  if (c.isPunct("[")) declared = parseContextBlock(c);
  FormulaParser fp{c, sig};
  std::vector<RFormula> lhs;
  if (!c.isPunct("|-")) {
    lhs.push_back(fp.parseFormula());
    while (c.isPunct(",")) {
      c.advance();
      lhs.push_back(fp.parseFormula());
    }
  }
  c.expectPunct("|-");
  RFormula rhs = fp.parseFormula();

  std::vector<const RFormula*> group;
  for (const auto& f : lhs) group.push_back(&f);
  group.push_back(&rhs);
  std::vector<FormulaPtr> frozen = resolveAndFreeze(group, sig, classical, declared);

  Sequent s;
  for (size_t i = 0; i < lhs.size(); ++i) s.lhs.push_back(frozen[i]);
  s.rhs = frozen.back();
  return s;
}

}  // namespace

// ---------------------------------------------------------------------------
// Theories

Theory parseTheory(const std::string& text) {
  Lexer lex(text);
  Cursor c{lex.toks};
  Theory t;
  c.expectKeyword("theory");
  t.name = c.userIdent("a theory name");
  if (c.isIdent("classical")) {
    c.advance();
    t.classical = true;
  }
  c.expectPunct("{");
  // Declarations must precede the axioms that use them.
  while (!c.isPunct("}")) {
    if (c.isIdent("sort")) {
      c.advance();
      t.sig.sorts.push_back(c.userIdent("a sort name"));
    } else if (c.isIdent("rel")) {
      c.advance();
      RelDecl r;
      r.name = c.userIdent("a relation name");
      if (c.isPunct(":")) {
        c.advance();
        r.domain.push_back(c.userIdent("a sort"));
        while (c.isPunct("*")) {
          c.advance();
          r.domain.push_back(c.userIdent("a sort"));
        }
      }
      t.sig.relations.push_back(std::move(r));
    } else if (c.isIdent("fun")) {
      c.advance();
      FunDecl f;
      f.name = c.userIdent("a function name");
      c.expectPunct(":");
      std::vector<std::string> sorts;
      sorts.push_back(c.userIdent("a sort"));
      while (c.isPunct("*")) {
        c.advance();
        sorts.push_back(c.userIdent("a sort"));
      }
      if (c.isPunct("->")) {
        c.advance();
        f.domain = std::move(sorts);
        f.codomain = c.userIdent("a sort");
      } else {
        if (sorts.size() != 1)
          c.fail("constant declarations take a single sort");
        f.codomain = sorts[0];
      }
      t.sig.functions.push_back(std::move(f));
    } else if (c.isIdent("ax")) {
      c.advance();
      Sequent s;
      if (c.cur().kind == Token::Ident) s.label = c.userIdent("an axiom label");
      c.expectPunct(":");
      t.sig.validate();
      Sequent body = parseSequentBody(c, t.sig, t.classical);
      body.label = s.label;
      t.axioms.push_back(std::move(body));
    } else {
      c.fail("expected sort/rel/fun/ax");
    }
  }
  c.expectPunct("}");
  t.validate();
  return t;
}

FormulaPtr parseFormulaText(const std::string& text, const Theory& t,
                            const Context& declared) {
  Lexer lex(text);
  Cursor c{lex.toks};
  FormulaParser fp{c, t.sig};
  RFormula raw = fp.parseFormula();
  if (c.cur().kind != Token::End) c.fail("trailing input after formula");
  auto out = resolveAndFreeze({&raw}, t.sig, t.classical, declared);
  return out[0];
}

Sequent parseSequentText(const std::string& text, const Theory& t) {
  Lexer lex(text);
  Cursor c{lex.toks};
  Sequent s = parseSequentBody(c, t.sig, t.classical);
  if (c.cur().kind != Token::End) c.fail("trailing input after sequent");
  return s;
}

// ---------------------------------------------------------------------------
// Models

FiniteModel parseModel(const std::string& text, const Theory& t) {
  Lexer lex(text);
  Cursor c{lex.toks};
  FiniteModel m;
  c.expectKeyword("model");
  m.name = c.userIdent("a model name");
  c.expectKeyword("for");
  std::string forName = c.userIdent("a theory name");
  if (forName != t.name)
    c.fail("model is for theory '" + forName + "', expected '" + t.name + "'");
  c.expectPunct("{");

  auto element = [&](const std::string& sort) {
    if (c.cur().kind != Token::Ident && c.cur().kind != Token::Number)
      c.fail("expected an element");
    std::string e = c.cur().text;
    c.advance();
    int idx = m.elementIndex(sort, e);
    if (idx < 0) c.fail("element '" + e + "' is not in carrier of " + sort);
    return idx;
  };

  while (!c.isPunct("}")) {
    if (c.isIdent("sort")) {
      c.advance();
      std::string s = c.userIdent("a sort");
      if (!t.sig.hasSort(s)) c.fail("unknown sort '" + s + "'");
      c.expectPunct("=");
      c.expectPunct("{");
      std::vector<std::string> elems;
      if (!c.isPunct("}")) {
        while (true) {
          if (c.cur().kind != Token::Ident && c.cur().kind != Token::Number)
            c.fail("expected an element name");
          elems.push_back(c.cur().text);
          c.advance();
          if (!c.isPunct(",")) break;
          c.advance();
        }
      }
      c.expectPunct("}");
      m.carriers[s] = std::move(elems);
    } else if (c.isIdent("rel")) {
      c.advance();
      std::string r = c.userIdent("a relation");
      const RelDecl* d = t.sig.relation(r);
      if (!d) c.fail("unknown relation '" + r + "'");
      c.expectPunct("=");
      if (d->domain.empty()) {
        if (c.isIdent("true")) {
          m.relations[r].insert(std::vector<int>{});
        } else if (c.isIdent("false")) {
          m.relations[r];  // present, empty
        } else {
          c.fail("propositional relation takes true or false");
        }
        c.advance();
      } else {
        c.expectPunct("{");
        auto& table = m.relations[r];
        while (!c.isPunct("}")) {
          c.expectPunct("(");
          std::vector<int> tuple;
          for (size_t i = 0; i < d->domain.size(); ++i) {
            if (i) c.expectPunct(",");
            tuple.push_back(element(d->domain[i]));
          }
          c.expectPunct(")");
          table.insert(std::move(tuple));
          if (c.isPunct(",")) c.advance();
        }
        c.expectPunct("}");
      }
    } else if (c.isIdent("fun")) {
      c.advance();
      std::string fn = c.userIdent("a function");
      const FunDecl* d = t.sig.function(fn);
      if (!d) c.fail("unknown function '" + fn + "'");
      c.expectPunct("=");
      auto& table = m.functions[fn];
      if (d->domain.empty()) {
        table[{}] = element(d->codomain);
      } else {
        c.expectPunct("{");
        while (!c.isPunct("}")) {
          c.expectPunct("(");
          std::vector<int> tuple;
          for (size_t i = 0; i < d->domain.size(); ++i) {
            if (i) c.expectPunct(",");
            tuple.push_back(element(d->domain[i]));
          }
          c.expectPunct(")");
          c.expectPunct("->");
          table[tuple] = element(d->codomain);
          if (c.isPunct(",")) c.advance();
        }
        c.expectPunct("}");
      }
    } else {
      c.fail("expected sort/rel/fun");
    }
  }
  c.expectPunct("}");
  m.validate(t.sig);
  return m;
}

// ---------------------------------------------------------------------------
// Translations

namespace {

// Image-block naming shared with Reconstrual::imageContext: single-slot
// blocks reuse the source variable name, wider blocks use name_slot.
Context blockFor(const std::string& varName, const Context& image) {
  Context out;
  if (image.size() == 1) {
    out.push_back({varName, image[0].sort});
    return out;
  }
  for (const auto& slot : image) out.push_back({varName + "_" + slot.name, slot.sort});
  return out;
}

}  // namespace

Reconstrual parseTranslation(const std::string& text, const Theory& src,
                             const Theory& dst) {
  Lexer lex(text);
  Cursor c{lex.toks};
  Reconstrual f;
  f.src = src;
  f.dst = dst;
  c.expectKeyword("translation");
  f.name = c.userIdent("a translation name");
  c.expectPunct(":");
  std::string sname = c.userIdent("source theory");
  c.expectPunct("->");
  std::string dname = c.userIdent("target theory");
  if (sname != src.name || dname != dst.name)
    c.fail("translation is " + sname + " -> " + dname + ", expected " + src.name +
           " -> " + dst.name);
  c.expectPunct("{");

  struct EqClause {
    std::string sort, x, y;
    RFormula body;
  };
  std::vector<EqClause> eqClauses;

  auto parseClauseFormula = [&](const Context& declared) {
    FormulaParser fp{c, dst.sig};
    RFormula raw = fp.parseFormula();
    auto out = resolveAndFreeze({&raw}, dst.sig, dst.classical, declared);
    return out[0];
  };

  while (!c.isPunct("}")) {
    if (c.isIdent("sort")) {
      c.advance();
      std::string s = c.userIdent("a source sort");
      if (!src.sig.hasSort(s)) c.fail("unknown source sort '" + s + "'");
      c.expectPunct("->");
      c.expectPunct("(");
      SortImage img;
      if (!c.isPunct(")")) {
        while (true) {
          std::string slot = c.userIdent("a slot name");
          c.expectPunct(":");
          std::string sortName = c.userIdent("a target sort");
          if (!dst.sig.hasSort(sortName)) c.fail("unknown target sort '" + sortName + "'");
          img.image.push_back({slot, sortName});
          if (!c.isPunct(",")) break;
          c.advance();
        }
      }
      c.expectPunct(")");
      FormulaPtr dom = fTop();
      if (c.isIdent("where")) {
        c.advance();
        dom = parseClauseFormula(img.image);
      }
      img.domain = SubstitutionClass{dom, img.image};
      // Equality defaults are installed after all sort clauses are read.
      f.sortImages[s] = std::move(img);
    } else if (c.isIdent("eq")) {
      c.advance();
      EqClause ec;
      ec.sort = c.userIdent("a source sort");
      c.expectPunct("(");
      ec.x = c.userIdent("left variable");
      c.expectPunct(",");
      ec.y = c.userIdent("right variable");
      c.expectPunct(")");
      c.expectPunct("->");
      FormulaParser fp{c, dst.sig};
      ec.body = fp.parseFormula();
      eqClauses.push_back(std::move(ec));
    } else if (c.isIdent("rel")) {
      c.advance();
      std::string r = c.userIdent("a source relation");
      const RelDecl* d = src.sig.relation(r);
      if (!d) c.fail("unknown source relation '" + r + "'");
      std::vector<std::string> argNames;
      if (c.isPunct("(")) {
        c.advance();
        if (!c.isPunct(")")) {
          while (true) {
            argNames.push_back(c.userIdent("an argument name"));
            if (!c.isPunct(",")) break;
            c.advance();
          }
        }
        c.expectPunct(")");
      }
      if (argNames.size() != d->domain.size())
        c.fail("relation " + r + " has " + std::to_string(d->domain.size()) +
               " arguments");
      c.expectPunct("->");
      Context ctx;
      for (size_t i = 0; i < argNames.size(); ++i) {
        auto it = f.sortImages.find(d->domain[i]);
        if (it == f.sortImages.end())
          c.fail("sort " + d->domain[i] + " has no image yet (declare it first)");
        Context block = blockFor(argNames[i], it->second.image);
        ctx.insert(ctx.end(), block.begin(), block.end());
      }
      FormulaPtr body = parseClauseFormula(ctx);
      f.relImages[r] = SubstitutionClass{body, ctx};
    } else if (c.isIdent("fun")) {
      c.advance();
      std::string fn = c.userIdent("a source function");
      const FunDecl* d = src.sig.function(fn);
      if (!d) c.fail("unknown source function '" + fn + "'");
      std::vector<std::string> argNames;
      if (c.isPunct("(")) {
        c.advance();
        if (!c.isPunct(")")) {
          while (true) {
            argNames.push_back(c.userIdent("an argument name"));
            if (!c.isPunct(",")) break;
            c.advance();
          }
        }
        c.expectPunct(")");
      }
      if (argNames.size() != d->domain.size())
        c.fail("function " + fn + " has " + std::to_string(d->domain.size()) +
               " arguments");
      c.expectPunct("=");
      std::string resName = c.userIdent("a result name");
      c.expectPunct("->");
      Context ctx;
      for (size_t i = 0; i < argNames.size(); ++i) {
        auto it = f.sortImages.find(d->domain[i]);
        if (it == f.sortImages.end())
          c.fail("sort " + d->domain[i] + " has no image yet (declare it first)");
        Context block = blockFor(argNames[i], it->second.image);
        ctx.insert(ctx.end(), block.begin(), block.end());
      }
      auto rt = f.sortImages.find(d->codomain);
      if (rt == f.sortImages.end())
        c.fail("sort " + d->codomain + " has no image yet (declare it first)");
      Context resBlock = blockFor(resName, rt->second.image);
      ctx.insert(ctx.end(), resBlock.begin(), resBlock.end());
      FormulaPtr body = parseClauseFormula(ctx);
      f.funImages[fn] = SubstitutionClass{body, ctx};
    } else {
      c.fail("expected sort/eq/rel/fun");
    }
  }
  c.expectPunct("}");

  // Default equality images: componentwise equality relativized to the
  // domain on both sides.
  for (auto& [s, img] : f.sortImages) {
    Context left = blockFor("_l", img.image);   // reserved names, internal only
    Context right = blockFor("_r", img.image);
    Context both = left;
    both.insert(both.end(), right.begin(), right.end());
    std::vector<FormulaPtr> parts;
    for (size_t i = 0; i < left.size(); ++i)
      parts.push_back(fEq(mkVar(left[i].name, left[i].sort),
                          mkVar(right[i].name, right[i].sort)));
    std::vector<TermPtr> lterms, rterms;
    for (const auto& v : left) lterms.push_back(mkVar(v.name, v.sort));
    for (const auto& v : right) rterms.push_back(mkVar(v.name, v.sort));
    parts.push_back(substitute(img.domain.formula, img.domain.ctx, lterms));
    parts.push_back(substitute(img.domain.formula, img.domain.ctx, rterms));
    img.equality = SubstitutionClass{fAndAll(parts), both};
    img.equalityDefaulted = true;
  }
  for (const auto& ec : eqClauses) {
    auto it = f.sortImages.find(ec.sort);
    if (it == f.sortImages.end())
      throw InputError("eq clause for sort '" + ec.sort + "' without a sort clause");
    Context ctx = blockFor(ec.x, it->second.image);
    Context right = blockFor(ec.y, it->second.image);
    ctx.insert(ctx.end(), right.begin(), right.end());
    auto out = resolveAndFreeze({&ec.body}, dst.sig, dst.classical, ctx);
    it->second.equality = SubstitutionClass{out[0], ctx};
    it->second.equalityDefaulted = false;
  }

  f.validate();
  return f;
}

// ---------------------------------------------------------------------------
// T-maps

TMap parseTMap(const std::string& text, const Reconstrual& from,
               const Reconstrual& to) {
  Lexer lex(text);
  Cursor c{lex.toks};
  TMap chi;
  chi.from = from;
  chi.to = to;
  c.expectKeyword("tmap");
  chi.name = c.userIdent("a t-map name");
  if (c.isIdent("iso")) {
    c.advance();
    chi.isoClaimed = true;
  }
  c.expectPunct("{");
  while (!c.isPunct("}")) {
    c.expectKeyword("sort");
    std::string s = c.userIdent("a source sort");
    if (!from.src.sig.hasSort(s)) c.fail("unknown source sort '" + s + "'");
    c.expectPunct("(");
    std::string x = c.userIdent("from-side name");
    c.expectPunct(",");
    std::string y = c.userIdent("to-side name");
    c.expectPunct(")");
    c.expectPunct("->");
    Context ctx = blockFor(x, from.sortImage(s).image);
    Context right = blockFor(y, to.sortImage(s).image);
    ctx.insert(ctx.end(), right.begin(), right.end());
    FormulaParser fp{c, from.dst.sig};
    RFormula raw = fp.parseFormula();
    auto out = resolveAndFreeze({&raw}, from.dst.sig, from.dst.classical, ctx);
    chi.components[s] = SubstitutionClass{out[0], ctx};
  }
  c.expectPunct("}");
  for (const auto& s : from.src.sig.sorts)
    if (!chi.components.count(s))
      throw InputError("t-map " + chi.name + " missing component for sort " + s);
  return chi;
}

// ---------------------------------------------------------------------------
// Extension files (raw; elaborated by the morita module)

namespace {

// Reassembles a token span into re-lexable text (tokens joined by spaces).
std::string spanText(const std::vector<Token>& toks, size_t from, size_t to) {
  std::string out;
  for (size_t i = from; i < to; ++i) {
    if (!out.empty()) out += " ";
    if (toks[i].kind == Token::Str)
      out += "\"" + toks[i].text + "\"";
    else
      out += toks[i].text;
  }
  return out;
}

// Advances the cursor past a formula without interpreting it: consumes until
// one of the stop punctuations at bracket depth zero.
std::string captureFormula(Cursor& c, const std::set<std::string>& stops) {
  size_t start = c.pos;
  int depth = 0;
  while (c.cur().kind != Token::End) {
    if (c.cur().kind == Token::Punct) {
      const std::string& p = c.cur().text;
      if (p == "(") ++depth;
      if (p == ")") {
        if (depth == 0 && stops.count(")")) break;
        --depth;
      }
      if (depth == 0 && p != ")" && stops.count(p)) break;
    }
    c.advance();
  }
  if (start == c.pos) c.fail("expected a formula");
  return spanText(c.toks, start, c.pos);
}

// Captures a formula that runs to the end of its line (used by definitional
// relation steps, whose formulas have no closing delimiter).
std::string captureFormulaLine(Cursor& c) {
  size_t start = c.pos;
  int line = c.cur().line;
  while (c.cur().kind != Token::End && c.cur().line == line) c.advance();
  if (start == c.pos) c.fail("expected a formula");
  return spanText(c.toks, start, c.pos);
}

}  // namespace

std::vector<RawExtStep> parseExtensionFile(const std::string& text,
                                           std::string* baseTheoryName) {
  Lexer lex(text);
  Cursor c{lex.toks};
  std::vector<RawExtStep> steps;
  c.expectKeyword("extend");
  if (c.cur().kind == Token::Ident) {
    std::string base = c.userIdent("a theory name");
    if (baseTheoryName) *baseTheoryName = base;
  }
  c.expectPunct("{");
  while (!c.isPunct("}")) {
    RawExtStep st;
    st.line = c.cur().line;
    if (c.isIdent("product")) {
      c.advance();
      st.kind = RawExtStep::Product;
      st.newName = c.userIdent("a sort name");
      c.expectPunct("=");
      st.sortArgs.push_back(c.userIdent("a factor sort"));
      while (c.isPunct("*")) {
        c.advance();
        st.sortArgs.push_back(c.userIdent("a factor sort"));
      }
      c.expectKeyword("via");
      st.funNames.push_back(c.userIdent("a projection name"));
      while (c.isPunct(",")) {
        c.advance();
        st.funNames.push_back(c.userIdent("a projection name"));
      }
    } else if (c.isIdent("terminal")) {
      c.advance();
      st.kind = RawExtStep::Terminal;
      st.newName = c.userIdent("a sort name");
    } else if (c.isIdent("coproduct")) {
      c.advance();
      st.kind = RawExtStep::Coproduct;
      st.newName = c.userIdent("a sort name");
      c.expectPunct("=");
      st.sortArgs.push_back(c.userIdent("a summand sort"));
      while (c.isPunct("+")) {
        c.advance();
        st.sortArgs.push_back(c.userIdent("a summand sort"));
      }
      c.expectKeyword("via");
      st.funNames.push_back(c.userIdent("an injection name"));
      while (c.isPunct(",")) {
        c.advance();
        st.funNames.push_back(c.userIdent("an injection name"));
      }
    } else if (c.isIdent("subsort")) {
      c.advance();
      st.kind = RawExtStep::Subsort;
      st.newName = c.userIdent("a sort name");
      c.expectPunct("=");
      c.expectPunct("{");
      st.varNames.push_back(c.userIdent("a variable"));
      c.expectPunct(":");
      st.sortArgs.push_back(c.userIdent("the base sort"));
      c.expectPunct("|");
      st.formulaText = captureFormula(c, {"}"});
      c.expectPunct("}");
      c.expectKeyword("via");
      st.funNames.push_back(c.userIdent("the inclusion name"));
    } else if (c.isIdent("quotient")) {
      c.advance();
      st.kind = RawExtStep::Quotient;
      st.newName = c.userIdent("a sort name");
      c.expectPunct("=");
      st.sortArgs.push_back(c.userIdent("the base sort"));
      c.expectPunct("/");
      c.expectPunct("[");
      c.expectPunct("(");
      st.varNames.push_back(c.userIdent("a variable"));
      c.expectPunct(",");
      st.varNames.push_back(c.userIdent("a variable"));
      c.expectPunct(")");
      c.expectPunct("|");
      st.formulaText = captureFormula(c, {"]"});
      c.expectPunct("]");
      c.expectKeyword("via");
      st.funNames.push_back(c.userIdent("the surjection name"));
    } else if (c.isIdent("rel")) {
      c.advance();
      st.kind = RawExtStep::DefRel;
      st.newName = c.userIdent("a relation name");
      if (c.isPunct("(")) {
        c.advance();
        if (!c.isPunct(")")) {
          while (true) {
            st.varNames.push_back(c.userIdent("a slot variable"));
            c.expectPunct(":");
            st.varSorts.push_back(c.userIdent("a slot sort"));
            if (!c.isPunct(",")) break;
            c.advance();
          }
        }
        c.expectPunct(")");
      }
      c.expectPunct(":=");
      // No closing delimiter: the defining formula runs to end of line.
      st.formulaText = captureFormulaLine(c);
    } else if (c.isIdent("fun")) {
      c.advance();
      st.kind = RawExtStep::DefFun;
      st.newName = c.userIdent("a function name");
      if (c.isPunct("(")) {
        c.advance();
        if (!c.isPunct(")")) {
          while (true) {
            st.varNames.push_back(c.userIdent("a slot variable"));
            c.expectPunct(":");
            st.varSorts.push_back(c.userIdent("a slot sort"));
            if (!c.isPunct(",")) break;
            c.advance();
          }
        }
        c.expectPunct(")");
      }
      c.expectPunct(":");
      st.resultSort = c.userIdent("the result sort");
      c.expectPunct(":=");
      c.expectPunct("[");
      st.resultVar = c.userIdent("the result variable");
      c.expectPunct("|");
      st.formulaText = captureFormula(c, {"]"});
      c.expectPunct("]");
    } else {
      c.fail("expected an extension step");
    }
    steps.push_back(std::move(st));
  }
  c.expectPunct("}");
  return steps;
}

// ---------------------------------------------------------------------------
// Category presentations

FinCat parseCategory(const std::string& text) {
  Lexer lex(text);
  Cursor c{lex.toks};
  FinCat cat;
  c.expectKeyword("category");
  cat.name = c.userIdent("a category name");
  c.expectPunct("{");
  while (!c.isPunct("}")) {
    if (c.isIdent("objects")) {
      c.advance();
      cat.objects.push_back(c.userIdent("an object"));
      while (c.isPunct(",")) {
        c.advance();
        cat.objects.push_back(c.userIdent("an object"));
      }
    } else if (c.isIdent("morphism")) {
      c.advance();
      MorDecl m;
      m.name = c.userIdent("a morphism name");
      c.expectPunct(":");
      m.dom = c.userIdent("an object");
      c.expectPunct("->");
      m.cod = c.userIdent("an object");
      cat.morphisms.push_back(std::move(m));
    } else if (c.isIdent("compose")) {
      c.advance();
      std::string g = c.userIdent("a morphism");
      c.expectPunct(".");
      std::string f = c.userIdent("a morphism");
      c.expectPunct("=");
      std::string h = c.userIdent("a morphism");
      cat.compose[{g, f}] = h;
    } else if (c.isIdent("product")) {
      c.advance();
      ProductDesignation p;
      p.prod = c.userIdent("the product object");
      c.expectPunct("=");
      p.left = c.userIdent("an object");
      c.expectPunct("*");
      p.right = c.userIdent("an object");
      c.expectKeyword("via");
      p.p1 = c.userIdent("a projection");
      c.expectPunct(",");
      p.p2 = c.userIdent("a projection");
      cat.products.push_back(std::move(p));
    } else if (c.isIdent("equalizer")) {
      c.advance();
      EqualizerDesignation e;
      e.eq = c.userIdent("the equalizer object");
      c.expectPunct("=");
      c.expectKeyword("eq");
      c.expectPunct("(");
      e.f = c.userIdent("a morphism");
      c.expectPunct(",");
      e.g = c.userIdent("a morphism");
      c.expectPunct(")");
      c.expectKeyword("via");
      e.arrow = c.userIdent("the equalizer arrow");
      cat.equalizers.push_back(std::move(e));
    } else if (c.isIdent("terminal")) {
      c.advance();
      cat.terminal = c.userIdent("an object");
    } else if (c.isIdent("subobjects")) {
      c.advance();
      c.expectKeyword("of");
      std::string obj = c.userIdent("an object");
      c.expectPunct(":");
      auto& list = cat.subobjects[obj];
      list.push_back(c.userIdent("a mono"));
      while (c.isPunct(",")) {
        c.advance();
        list.push_back(c.userIdent("a mono"));
      }
    } else if (c.isIdent("join")) {
      c.advance();
      c.expectKeyword("on");
      JoinDesignation j;
      j.object = c.userIdent("an object");
      c.expectPunct(":");
      j.m1 = c.userIdent("a mono");
      c.expectPunct("|");
      j.m2 = c.userIdent("a mono");
      c.expectPunct("=");
      j.join = c.userIdent("the join mono");
      cat.joins.push_back(std::move(j));
    } else if (c.isIdent("bottom")) {
      c.advance();
      c.expectKeyword("on");
      BottomDesignation b;
      b.object = c.userIdent("an object");
      c.expectPunct(":");
      b.mono = c.userIdent("the bottom mono");
      cat.bottoms.push_back(std::move(b));
    } else if (c.isIdent("cover")) {
      c.advance();
      cat.covers.push_back(c.userIdent("a morphism"));
    } else {
      c.fail("expected a category item");
    }
  }
  c.expectPunct("}");

  // Install identities (auto-named) after all objects are known.
  for (const auto& obj : cat.objects) {
    std::string idName = "id_" + obj;
    for (const auto& m : cat.morphisms)
      if (m.name == idName)
        throw InputError("morphism name '" + idName +
                         "' collides with the auto-generated identity");
    MorDecl id;
    id.name = idName;
    id.dom = id.cod = obj;
    id.isIdentity = true;
    cat.morphisms.push_back(std::move(id));
    cat.identityOf[obj] = idName;
  }
  return cat;
}

// ---------------------------------------------------------------------------
// Certificates

CertificateFile parseCertificate(const std::string& text) {
  Lexer lex(text);
  Cursor c{lex.toks};
  CertificateFile cert;
  c.expectKeyword("certificate");
  c.expectPunct("{");
  auto path = [&]() {
    if (c.cur().kind != Token::Str) c.fail("expected a quoted path");
    std::string p = c.cur().text;
    c.advance();
    return p;
  };
  while (!c.isPunct("}")) {
    if (c.isIdent("claim")) {
      c.advance();
      cert.claim = c.ident("a claim level");
      if (cert.claim != "logical" && cert.claim != "definitional" &&
          cert.claim != "weak" && cert.claim != "morita")
        c.fail("claim must be logical, definitional, weak, or morita");
    } else if (c.isIdent("theory1")) {
      c.advance();
      cert.theory1Path = path();
    } else if (c.isIdent("theory2")) {
      c.advance();
      cert.theory2Path = path();
    } else if (c.isIdent("translationF")) {
      c.advance();
      cert.translationFPath = path();
    } else if (c.isIdent("translationG")) {
      c.advance();
      cert.translationGPath = path();
    } else if (c.isIdent("chi1")) {
      c.advance();
      cert.chi1Path = path();
    } else if (c.isIdent("chi2")) {
      c.advance();
      cert.chi2Path = path();
    } else if (c.isIdent("chain1")) {
      c.advance();
      while (c.cur().kind == Token::Str) cert.chain1Paths.push_back(path());
    } else if (c.isIdent("chain2")) {
      c.advance();
      while (c.cur().kind == Token::Str) cert.chain2Paths.push_back(path());
    } else {
      c.fail("expected a certificate field");
    }
  }
  c.expectPunct("}");
  if (cert.claim.empty()) throw InputError("certificate missing claim");
  if (cert.theory1Path.empty() || cert.theory2Path.empty())
    throw InputError("certificate missing theory paths");
  return cert;
}

std::string readFile(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot read file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace cohlog
