#include "cohlog/morita.hpp"

#include <algorithm>
#include <cctype>
#include <set>

namespace cohlog {

namespace {

std::vector<TermPtr> varsOf(const Context& ctx) {
  std::vector<TermPtr> out;
  for (const auto& v : ctx) out.push_back(mkVar(v.name, v.sort));
  return out;
}

FormulaPtr inst(const SubstitutionClass& cls, const std::vector<TermPtr>& terms) {
  if (cls.ctx.size() != terms.size())
    throw InputError("defining class instantiated at " + std::to_string(terms.size()) +
                     " terms, context has " + std::to_string(cls.ctx.size()));
  return substitute(cls.formula, cls.ctx, terms);
}

bool symbolInUse(const Signature& sig, const std::string& name) {
  return sig.hasSort(name) || sig.relation(name) != nullptr ||
         sig.function(name) != nullptr;
}

void requireFresh(const Signature& sig, const std::string& name, const char* what) {
  if (symbolInUse(sig, name))
    throw InputError(std::string(what) + " '" + name +
                     "' collides with an existing symbol");
}

void requireSort(const Signature& sig, const std::string& s, const char* where) {
  if (!sig.hasSort(s))
    throw InputError(std::string(where) + ": unknown sort '" + s + "'");
}

// The class context must cover the formula's free variables at the same sorts.
void requireCovered(const SubstitutionClass& cls, const char* what) {
  for (const auto& v : freeContext(cls.formula)) {
    bool found = false;
    for (const auto& c : cls.ctx) {
      if (c.name != v.name) continue;
      if (c.sort != v.sort)
        throw InputError(std::string(what) + " uses '" + v.name +
                         "' at sort " + v.sort + ", context declares " + c.sort);
      found = true;
      break;
    }
    if (!found)
      throw InputError(std::string(what) + " mentions '" + v.name +
                       "' outside its context");
  }
}

// ---------------------------------------------------------------------------
// One extension step each. Builders fill the signature, the defining axioms,
// and the admissibility obligations; the dispatcher appends the axioms to the
// theory and validates the result.

ExtensionResult extendOne(const Theory& t, const ProductStep& st) {
  if (st.factors.empty())
    throw InputError("product step needs at least one factor");
  if (st.projections.size() != st.factors.size())
    throw InputError("product step needs one projection per factor");
  requireFresh(t.sig, st.sortName, "product sort");
  for (const auto& s : st.factors) requireSort(t.sig, s, "product factor");

  ExtensionResult out;
  out.extended = t;
  out.extended.name = t.name + "+" + st.sortName;
  out.extended.sig.sorts.push_back(st.sortName);
  for (size_t i = 0; i < st.projections.size(); ++i) {
    requireFresh(t.sig, st.projections[i], "projection");
    out.extended.sig.functions.push_back({st.projections[i], {st.sortName}, st.factors[i]});
  }
  const Signature& sig = out.extended.sig;

  Sequent pair;
  pair.label = st.sortName + "_pair";
  {
    TermPtr z = mkVar("z", st.sortName);
    std::vector<FormulaPtr> eqs;
    for (size_t i = 0; i < st.factors.size(); ++i)
      eqs.push_back(fEq(mkApp(sig, st.projections[i], {z}),
                        mkVar("x" + std::to_string(i + 1), st.factors[i])));
    pair.rhs = fExists("z", st.sortName, fAndAll(eqs));
  }
  out.definingAxioms.push_back(pair);

  Sequent mono;
  mono.label = st.sortName + "_mono";
  {
    TermPtr x = mkVar("x", st.sortName), y = mkVar("y", st.sortName);
    for (size_t i = 0; i < st.factors.size(); ++i)
      mono.lhs.push_back(fEq(mkApp(sig, st.projections[i], {x}),
                             mkApp(sig, st.projections[i], {y})));
    mono.rhs = fEq(x, y);
  }
  out.definingAxioms.push_back(mono);
  return out;
}

ExtensionResult extendOne(const Theory& t, const TerminalStep& st) {
  requireFresh(t.sig, st.sortName, "terminal sort");
  ExtensionResult out;
  out.extended = t;
  out.extended.name = t.name + "+" + st.sortName;
  out.extended.sig.sorts.push_back(st.sortName);

  Sequent inhab;
  inhab.label = st.sortName + "_inhab";
  inhab.rhs = fExists("x", st.sortName,
                      fEq(mkVar("x", st.sortName), mkVar("x", st.sortName)));
  out.definingAxioms.push_back(inhab);

  Sequent unique;
  unique.label = st.sortName + "_unique";
  unique.rhs = fEq(mkVar("x", st.sortName), mkVar("y", st.sortName));
  out.definingAxioms.push_back(unique);
  return out;
}

ExtensionResult extendOne(const Theory& t, const CoproductStep& st) {
  if (st.summands.empty())
    throw InputError("coproduct step needs at least one summand");
  if (st.injections.size() != st.summands.size())
    throw InputError("coproduct step needs one injection per summand");
  requireFresh(t.sig, st.sortName, "coproduct sort");
  for (const auto& s : st.summands) requireSort(t.sig, s, "coproduct summand");

  ExtensionResult out;
  out.extended = t;
  out.extended.name = t.name + "+" + st.sortName;
  out.extended.sig.sorts.push_back(st.sortName);
  for (size_t i = 0; i < st.injections.size(); ++i) {
    requireFresh(t.sig, st.injections[i], "injection");
    out.extended.sig.functions.push_back({st.injections[i], {st.summands[i]}, st.sortName});
  }
  const Signature& sig = out.extended.sig;

  Sequent cover;
  cover.label = st.sortName + "_cover";
  {
    std::vector<FormulaPtr> parts;
    for (size_t i = 0; i < st.summands.size(); ++i)
      parts.push_back(fExists("x", st.summands[i],
                              fEq(mkVar("z", st.sortName),
                                  mkApp(sig, st.injections[i], {mkVar("x", st.summands[i])}))));
    cover.rhs = fOrAll(parts);
  }
  out.definingAxioms.push_back(cover);

  for (size_t i = 0; i < st.summands.size(); ++i) {
    Sequent inj;
    inj.label = st.sortName + "_inj_" + st.injections[i];
    TermPtr x = mkVar("x", st.summands[i]), y = mkVar("y", st.summands[i]);
    inj.lhs = {fEq(mkApp(sig, st.injections[i], {x}), mkApp(sig, st.injections[i], {y}))};
    inj.rhs = fEq(x, y);
    out.definingAxioms.push_back(inj);
  }

  if (st.summands.size() >= 2) {
    Sequent disj;
    disj.label = st.sortName + "_disjoint";
    std::vector<FormulaPtr> pairs;
    for (size_t i = 0; i < st.summands.size(); ++i)
      for (size_t j = i + 1; j < st.summands.size(); ++j)
        pairs.push_back(
            fEq(mkApp(sig, st.injections[i], {mkVar("x" + std::to_string(i + 1), st.summands[i])}),
                mkApp(sig, st.injections[j], {mkVar("x" + std::to_string(j + 1), st.summands[j])})));
    disj.lhs = {fOrAll(pairs)};
    disj.rhs = fBot();
    out.definingAxioms.push_back(disj);
  }
  return out;
}

ExtensionResult extendOne(const Theory& t, const SubsortStep& st) {
  if (st.pred.ctx.size() != 1)
    throw InputError("subsort predicate must have a one-variable context");
  const std::string base = st.pred.ctx[0].sort;
  requireSort(t.sig, base, "subsort base");
  requireFresh(t.sig, st.sortName, "subsort");
  requireFresh(t.sig, st.inclusion, "inclusion");
  requireCovered(st.pred, "subsort predicate");
  typecheckFormula(t.sig, st.pred.formula, t.classical);

  ExtensionResult out;
  out.extended = t;
  out.extended.name = t.name + "+" + st.sortName;
  out.extended.sig.sorts.push_back(st.sortName);
  out.extended.sig.functions.push_back({st.inclusion, {st.sortName}, base});
  const Signature& sig = out.extended.sig;

  TermPtr x = mkVar("x", base);
  FormulaPtr phi = inst(st.pred, {x});
  FormulaPtr img = fExists("y", st.sortName,
                           fEq(mkApp(sig, st.inclusion, {mkVar("y", st.sortName)}), x));

  Sequent in;
  in.label = st.sortName + "_in";
  in.lhs = {phi};
  in.rhs = img;
  out.definingAxioms.push_back(in);

  Sequent outAx;
  outAx.label = st.sortName + "_out";
  outAx.lhs = {img};
  outAx.rhs = phi;
  out.definingAxioms.push_back(outAx);

  Sequent mono;
  mono.label = st.sortName + "_mono";
  {
    TermPtr u = mkVar("x", st.sortName), w = mkVar("y", st.sortName);
    mono.lhs = {fEq(mkApp(sig, st.inclusion, {u}), mkApp(sig, st.inclusion, {w}))};
    mono.rhs = fEq(u, w);
  }
  out.definingAxioms.push_back(mono);
  return out;
}

ExtensionResult extendOne(const Theory& t, const QuotientStep& st) {
  if (st.rel.ctx.size() != 2 || st.rel.ctx[0].sort != st.rel.ctx[1].sort)
    throw InputError("quotient relation must have a two-variable context over one sort");
  const std::string base = st.rel.ctx[0].sort;
  requireSort(t.sig, base, "quotient base");
  requireFresh(t.sig, st.sortName, "quotient sort");
  requireFresh(t.sig, st.surjection, "surjection");
  requireCovered(st.rel, "quotient relation");
  typecheckFormula(t.sig, st.rel.formula, t.classical);

  ExtensionResult out;
  out.extended = t;
  out.extended.name = t.name + "+" + st.sortName;
  out.extended.sig.sorts.push_back(st.sortName);
  out.extended.sig.functions.push_back({st.surjection, {base}, st.sortName});
  const Signature& sig = out.extended.sig;

  TermPtr x = mkVar("x", base), y = mkVar("y", base), z = mkVar("z", base);
  FormulaPtr axy = inst(st.rel, {x, y});

  Sequent surj;
  surj.label = st.sortName + "_surj";
  surj.rhs = fExists("x", base,
                     fEq(mkApp(sig, st.surjection, {x}), mkVar("z", st.sortName)));
  out.definingAxioms.push_back(surj);

  Sequent kerF;
  kerF.label = st.sortName + "_ker_fwd";
  kerF.lhs = {fEq(mkApp(sig, st.surjection, {x}), mkApp(sig, st.surjection, {y}))};
  kerF.rhs = axy;
  out.definingAxioms.push_back(kerF);

  Sequent kerB;
  kerB.label = st.sortName + "_ker_bwd";
  kerB.lhs = {axy};
  kerB.rhs = fEq(mkApp(sig, st.surjection, {x}), mkApp(sig, st.surjection, {y}));
  out.definingAxioms.push_back(kerB);

  Sequent refl;
  refl.label = st.sortName + "_refl";
  refl.rhs = inst(st.rel, {x, x});
  out.obligations.push_back({"refl:" + st.sortName, refl, t.name});

  Sequent symm;
  symm.label = st.sortName + "_symm";
  symm.lhs = {axy};
  symm.rhs = inst(st.rel, {y, x});
  out.obligations.push_back({"symm:" + st.sortName, symm, t.name});

  Sequent trans;
  trans.label = st.sortName + "_trans";
  trans.lhs = {axy, inst(st.rel, {y, z})};
  trans.rhs = inst(st.rel, {x, z});
  out.obligations.push_back({"trans:" + st.sortName, trans, t.name});
  return out;
}

ExtensionResult extendOne(const Theory& t, const DefRelStep& st) {
  requireFresh(t.sig, st.relName, "defined relation");
  requireCovered(st.def, "relation definition");
  for (const auto& v : st.def.ctx) requireSort(t.sig, v.sort, "relation slot");
  typecheckFormula(t.sig, st.def.formula, t.classical);

  std::vector<std::string> sorts;
  for (const auto& v : st.def.ctx) sorts.push_back(v.sort);

  ExtensionResult out;
  out.extended = t;
  out.extended.name = t.name + "+" + st.relName;
  out.extended.sig.relations.push_back({st.relName, sorts});

  Context uctx;
  for (size_t i = 0; i < sorts.size(); ++i)
    uctx.push_back({"u" + std::to_string(i + 1), sorts[i]});
  std::vector<TermPtr> uvars = varsOf(uctx);
  FormulaPtr atom = fAtom(st.relName, uvars);
  FormulaPtr phi = inst(st.def, uvars);

  Sequent fwd;
  fwd.label = st.relName + "_fwd";
  fwd.lhs = {atom};
  fwd.rhs = phi;
  out.definingAxioms.push_back(fwd);

  Sequent bwd;
  bwd.label = st.relName + "_bwd";
  bwd.lhs = {phi};
  bwd.rhs = atom;
  out.definingAxioms.push_back(bwd);
  return out;
}

ExtensionResult extendOne(const Theory& t, const DefFunStep& st) {
  if (st.graph.ctx.empty())
    throw InputError("function graph needs at least the result slot");
  requireFresh(t.sig, st.funName, "defined function");
  requireCovered(st.graph, "function graph");
  for (const auto& v : st.graph.ctx) requireSort(t.sig, v.sort, "function slot");
  typecheckFormula(t.sig, st.graph.formula, t.classical);

  std::vector<std::string> argSorts;
  for (size_t i = 0; i + 1 < st.graph.ctx.size(); ++i)
    argSorts.push_back(st.graph.ctx[i].sort);
  const std::string res = st.graph.ctx.back().sort;

  ExtensionResult out;
  out.extended = t;
  out.extended.name = t.name + "+" + st.funName;
  out.extended.sig.functions.push_back({st.funName, argSorts, res});
  const Signature& sig = out.extended.sig;

  Context uctx;
  for (size_t i = 0; i < argSorts.size(); ++i)
    uctx.push_back({"u" + std::to_string(i + 1), argSorts[i]});
  std::vector<TermPtr> uvars = varsOf(uctx);
  TermPtr y = mkVar("y", res), w = mkVar("w", res);

  std::vector<TermPtr> slotsY = uvars;
  slotsY.push_back(y);
  std::vector<TermPtr> slotsW = uvars;
  slotsW.push_back(w);
  FormulaPtr phiY = inst(st.graph, slotsY);
  FormulaPtr phiW = inst(st.graph, slotsW);
  FormulaPtr graphEq = fEq(mkApp(sig, st.funName, uvars), y);

  Sequent fwd;
  fwd.label = st.funName + "_fwd";
  fwd.lhs = {graphEq};
  fwd.rhs = phiY;
  out.definingAxioms.push_back(fwd);

  Sequent bwd;
  bwd.label = st.funName + "_bwd";
  bwd.lhs = {phiY};
  bwd.rhs = graphEq;
  out.definingAxioms.push_back(bwd);

  Sequent total;
  total.label = st.funName + "_total";
  total.rhs = fExists("y", res, phiY);
  out.obligations.push_back({"total:" + st.funName, total, t.name});

  Sequent uniq;
  uniq.label = st.funName + "_uniq";
  uniq.lhs = {phiY, phiW};
  uniq.rhs = fEq(y, w);
  out.obligations.push_back({"uniq:" + st.funName, uniq, t.name});
  return out;
}

// ---------------------------------------------------------------------------
// Step descriptions for reports.

std::string joinNames(const std::vector<std::string>& xs, const char* sep) {
  std::string out;
  for (size_t i = 0; i < xs.size(); ++i) {
    if (i) out += sep;
    out += xs[i];
  }
  return out;
}

std::string describeStep(const ExtensionStep& step) {
  if (const auto* p = std::get_if<ProductStep>(&step))
    return "product sort " + p->sortName + " = " + joinNames(p->factors, " * ") +
           " via " + joinNames(p->projections, ", ");
  if (const auto* p = std::get_if<TerminalStep>(&step))
    return "terminal sort " + p->sortName;
  if (const auto* p = std::get_if<CoproductStep>(&step))
    return "coproduct sort " + p->sortName + " = " + joinNames(p->summands, " + ") +
           " via " + joinNames(p->injections, ", ");
  if (const auto* p = std::get_if<SubsortStep>(&step)) {
    const std::string base = p->pred.ctx[0].sort;
    return "subsort " + p->sortName + " = { x : " + base + " | " +
           printFormula(inst(p->pred, {mkVar("x", base)})) + " } via " + p->inclusion;
  }
  if (const auto* p = std::get_if<QuotientStep>(&step)) {
    const std::string base = p->rel.ctx[0].sort;
    return "quotient " + p->sortName + " = " + base + " / [(x, y) | " +
           printFormula(inst(p->rel, {mkVar("x", base), mkVar("y", base)})) +
           "] via " + p->surjection;
  }
  if (const auto* p = std::get_if<DefRelStep>(&step)) {
    std::vector<std::string> sorts;
    for (const auto& v : p->def.ctx) sorts.push_back(v.sort);
    Context uctx;
    for (size_t i = 0; i < sorts.size(); ++i)
      uctx.push_back({"u" + std::to_string(i + 1), sorts[i]});
    std::string head = p->relName;
    if (!sorts.empty()) head += "(" + joinNames(sorts, ", ") + ")";
    return "defined relation " + head + " := " + printFormula(inst(p->def, varsOf(uctx)));
  }
  const auto& p = std::get<DefFunStep>(step);
  std::vector<std::string> argSorts;
  for (size_t i = 0; i + 1 < p.graph.ctx.size(); ++i)
    argSorts.push_back(p.graph.ctx[i].sort);
  Context uctx;
  for (size_t i = 0; i < argSorts.size(); ++i)
    uctx.push_back({"u" + std::to_string(i + 1), argSorts[i]});
  Context full = uctx;
  full.push_back({"y", p.graph.ctx.back().sort});
  std::string head = p.funName;
  if (!argSorts.empty()) head += "(" + joinNames(argSorts, ", ") + ")";
  return "defined function " + head + " : " + p.graph.ctx.back().sort + " := [y | " +
         printFormula(inst(p.graph, varsOf(full))) + "]";
}

}  // namespace

std::string stepKindName(const ExtensionStep& step) {
  if (std::holds_alternative<ProductStep>(step)) return "product";
  if (std::holds_alternative<TerminalStep>(step)) return "terminal";
  if (std::holds_alternative<CoproductStep>(step)) return "coproduct";
  if (std::holds_alternative<SubsortStep>(step)) return "subsort";
  if (std::holds_alternative<QuotientStep>(step)) return "quotient";
  if (std::holds_alternative<DefRelStep>(step)) return "rel";
  return "fun";
}

ExtensionResult extendMorita(const Theory& t, const ExtensionStep& step) {
  ExtensionResult out =
      std::visit([&](const auto& s) { return extendOne(t, s); }, step);
  for (const auto& a : out.definingAxioms) out.extended.axioms.push_back(a);
  out.extended.validate();
  return out;
}

// ---------------------------------------------------------------------------
// Fresh names.

namespace {

std::string sanitizeIdent(const std::string& hint, char head) {
  std::string s;
  for (char c : hint)
    s += (std::isalnum(static_cast<unsigned char>(c)) || c == '_') ? c : '_';
  if (s.empty() || !std::isalpha(static_cast<unsigned char>(s[0])))
    s = std::string(1, head) + s;
  return s;
}

std::string freshNamed(const Signature& sig, const std::string& hint, char head) {
  std::string base = sanitizeIdent(hint, head);
  if (!symbolInUse(sig, base)) return base;
  for (int i = 2;; ++i) {
    std::string cand = base + "_" + std::to_string(i);
    if (!symbolInUse(sig, cand)) return cand;
  }
}

}  // namespace

std::string freshSortName(const Signature& sig, const std::string& hint) {
  return freshNamed(sig, hint, 's');
}
std::string freshFunName(const Signature& sig, const std::string& hint) {
  return freshNamed(sig, hint, 'f');
}
std::string freshRelName(const Signature& sig, const std::string& hint) {
  return freshNamed(sig, hint, 'r');
}

// ---------------------------------------------------------------------------
// Chains from parsed files.

namespace {

ExtensionStep elaborate(const Theory& cur, const RawExtStep& st) {
  auto fail = [&](const std::string& msg) -> InputError {
    return InputError("line " + std::to_string(st.line) + ": " + msg);
  };
  switch (st.kind) {
    case RawExtStep::Product:
      if (st.funNames.size() != st.sortArgs.size())
        throw fail("product needs one projection per factor");
      return ProductStep{st.newName, st.sortArgs, st.funNames};
    case RawExtStep::Terminal:
      return TerminalStep{st.newName};
    case RawExtStep::Coproduct:
      if (st.funNames.size() != st.sortArgs.size())
        throw fail("coproduct needs one injection per summand");
      return CoproductStep{st.newName, st.sortArgs, st.funNames};
    case RawExtStep::Subsort: {
      Context ctx = {{st.varNames[0], st.sortArgs[0]}};
      FormulaPtr phi = parseFormulaText(st.formulaText, cur, ctx);
      return SubsortStep{st.newName, st.funNames[0], SubstitutionClass{phi, ctx}};
    }
    case RawExtStep::Quotient: {
      Context ctx = {{st.varNames[0], st.sortArgs[0]}, {st.varNames[1], st.sortArgs[0]}};
      FormulaPtr phi = parseFormulaText(st.formulaText, cur, ctx);
      return QuotientStep{st.newName, st.funNames[0], SubstitutionClass{phi, ctx}};
    }
    case RawExtStep::DefRel: {
      Context ctx;
      for (size_t i = 0; i < st.varNames.size(); ++i)
        ctx.push_back({st.varNames[i], st.varSorts[i]});
      FormulaPtr phi = parseFormulaText(st.formulaText, cur, ctx);
      return DefRelStep{st.newName, SubstitutionClass{phi, ctx}};
    }
    case RawExtStep::DefFun: {
      Context ctx;
      for (size_t i = 0; i < st.varNames.size(); ++i)
        ctx.push_back({st.varNames[i], st.varSorts[i]});
      ctx.push_back({st.resultVar, st.resultSort});
      FormulaPtr phi = parseFormulaText(st.formulaText, cur, ctx);
      return DefFunStep{st.newName, SubstitutionClass{phi, ctx}};
    }
  }
  throw fail("unknown extension step kind");
}

}  // namespace

ChainResult applyExtensionChain(const Theory& t, const std::vector<RawExtStep>& raw) {
  ChainResult out;
  Theory cur = t;
  for (const auto& st : raw) {
    ExtensionStep step;
    ExtensionResult res;
    try {
      step = elaborate(cur, st);
      res = extendMorita(cur, step);
    } catch (const InputError& e) {
      const std::string prefix = "line " + std::to_string(st.line) + ":";
      std::string msg = e.what();
      if (msg.rfind(prefix, 0) == 0) throw;
      throw InputError(prefix + " " + msg);
    }
    cur = res.extended;
    out.steps.push_back(std::move(step));
    for (const auto& o : res.obligations) out.obligations.push_back(o);
    out.results.push_back(std::move(res));
  }
  out.top = cur;
  return out;
}

// ---------------------------------------------------------------------------
// Recognition: classify tplus as a sequence of steps over t.

namespace {

// Structural container for comparing sequents up to renaming: antecedents as
// the canonical right-nested conjunction, succedent on the other branch.
FormulaPtr encodeSequent(const Sequent& s) { return fOr(fAndAll(s.lhs), s.rhs); }

bool sequentAlpha(const Sequent& a, const Sequent& b) {
  FormulaPtr ea = encodeSequent(a), eb = encodeSequent(b);
  Context ca = freeContext(ea), cb = freeContext(eb);
  if (ca.size() != cb.size()) return false;
  return alphaEqualAt(ea, ca, eb, cb);
}

// Right-spine flattening, the inverse of fAndAll / fOrAll.
void flattenSpine(const FormulaPtr& f, FK kind, std::vector<FormulaPtr>& out) {
  if (f->kind == kind) {
    out.push_back(f->kids[0]);
    flattenSpine(f->kids[1], kind, out);
  } else {
    out.push_back(f);
  }
}

struct RecoveredChain {
  std::vector<ExtensionStep> steps;
  std::vector<Theory> stages;  // stages[0] = base, one more per step
  std::vector<Obligation> obligations;
  std::vector<std::string> classified;
  std::vector<std::string> unclassified;
};

RecoveredChain recoverChain(const Theory& t, const Theory& tplus) {
  RecoveredChain rc;
  rc.stages.push_back(t);

  for (const auto& s : t.sig.sorts)
    if (!tplus.sig.hasSort(s))
      rc.unclassified.push_back("base sort '" + s + "' missing from the extension");
  for (const auto& r : t.sig.relations) {
    const RelDecl* d = tplus.sig.relation(r.name);
    if (!d || d->domain != r.domain)
      rc.unclassified.push_back("base relation '" + r.name + "' missing or changed");
  }
  for (const auto& f : t.sig.functions) {
    const FunDecl* d = tplus.sig.function(f.name);
    if (!d || d->domain != f.domain || d->codomain != f.codomain)
      rc.unclassified.push_back("base function '" + f.name + "' missing or changed");
  }
  if (!rc.unclassified.empty()) return rc;

  std::vector<bool> consumed(tplus.axioms.size(), false);
  for (const auto& ax : t.axioms) {
    bool found = false;
    for (size_t i = 0; i < tplus.axioms.size() && !found; ++i)
      if (!consumed[i] && sequentAlpha(tplus.axioms[i], ax)) {
        consumed[i] = true;
        found = true;
      }
    if (!found)
      rc.unclassified.push_back("base axiom '" + ax.label + "' missing from the extension");
  }

  std::vector<std::string> newSorts;
  for (const auto& s : tplus.sig.sorts)
    if (!t.sig.hasSort(s)) newSorts.push_back(s);
  std::vector<RelDecl> newRels;
  for (const auto& r : tplus.sig.relations)
    if (!t.sig.relation(r.name)) newRels.push_back(r);
  std::vector<FunDecl> newFuns;
  for (const auto& f : tplus.sig.functions)
    if (!t.sig.function(f.name)) newFuns.push_back(f);

  std::set<std::string> doneSorts, doneRels, doneFuns;
  Theory cur = t;

  auto funFreeWithProfile = [&](const std::string& name,
                                const std::vector<std::string>& dom,
                                const std::string& cod) -> bool {
    if (doneFuns.count(name)) return false;
    for (const auto& f : newFuns)
      if (f.name == name) return f.domain == dom && f.codomain == cod;
    return false;
  };

  // True when the formula is well typed over the accumulated signature, i.e.
  // mentions no symbol that has not been introduced yet.
  auto availableNow = [&](const FormulaPtr& f) {
    try {
      typecheckFormula(cur.sig, f, cur.classical);
      return true;
    } catch (const InputError&) {
      return false;
    }
  };

  // Re-derives the step's axioms, requires all of them among the unconsumed
  // axioms of tplus, and commits the step.
  auto commit = [&](const ExtensionStep& step) -> bool {
    ExtensionResult res;
    try {
      res = extendMorita(cur, step);
    } catch (const InputError&) {
      return false;
    }
    std::vector<size_t> picked;
    for (const auto& ax : res.definingAxioms) {
      bool found = false;
      for (size_t i = 0; i < tplus.axioms.size() && !found; ++i) {
        if (consumed[i]) continue;
        if (std::find(picked.begin(), picked.end(), i) != picked.end()) continue;
        if (sequentAlpha(tplus.axioms[i], ax)) {
          picked.push_back(i);
          found = true;
        }
      }
      if (!found) return false;
    }
    for (size_t i : picked) consumed[i] = true;
    for (const auto& o : res.obligations) rc.obligations.push_back(o);
    rc.classified.push_back(describeStep(step));
    rc.steps.push_back(step);
    cur = res.extended;
    rc.stages.push_back(cur);
    if (const auto* p = std::get_if<ProductStep>(&step)) {
      doneSorts.insert(p->sortName);
      for (const auto& f : p->projections) doneFuns.insert(f);
    } else if (const auto* p = std::get_if<TerminalStep>(&step)) {
      doneSorts.insert(p->sortName);
    } else if (const auto* p = std::get_if<CoproductStep>(&step)) {
      doneSorts.insert(p->sortName);
      for (const auto& f : p->injections) doneFuns.insert(f);
    } else if (const auto* p = std::get_if<SubsortStep>(&step)) {
      doneSorts.insert(p->sortName);
      doneFuns.insert(p->inclusion);
    } else if (const auto* p = std::get_if<QuotientStep>(&step)) {
      doneSorts.insert(p->sortName);
      doneFuns.insert(p->surjection);
    } else if (const auto* p = std::get_if<DefRelStep>(&step)) {
      doneRels.insert(p->relName);
    } else if (const auto* p = std::get_if<DefFunStep>(&step)) {
      doneFuns.insert(p->funName);
    }
    return true;
  };

  auto trySort = [&](const std::string& S) -> bool {
    // Terminal: both closed axioms present.
    {
      bool inhab = false, unique = false;
      for (size_t i = 0; i < tplus.axioms.size(); ++i) {
        if (consumed[i] || !tplus.axioms[i].lhs.empty()) continue;
        const Formula& r = *tplus.axioms[i].rhs;
        if (r.kind == FK::Exists && r.varSort == S) {
          const Formula& body = *r.kids[0];
          if (body.kind == FK::Eq && body.args[0]->isVar && body.args[1]->isVar &&
              body.args[0]->head == r.var && body.args[1]->head == r.var)
            inhab = true;
        }
        if (r.kind == FK::Eq && r.args[0]->isVar && r.args[1]->isVar &&
            r.args[0]->sort == S && r.args[1]->sort == S &&
            r.args[0]->head != r.args[1]->head)
          unique = true;
      }
      if (inhab && unique && commit(TerminalStep{S})) return true;
    }

    for (size_t i = 0; i < tplus.axioms.size(); ++i) {
      if (consumed[i]) continue;
      const Sequent& ax = tplus.axioms[i];

      // Product anchor: |- exists z:S . p1(z) = x1 & ... & pn(z) = xn
      if (ax.lhs.empty() && ax.rhs->kind == FK::Exists && ax.rhs->varSort == S) {
        std::vector<FormulaPtr> leaves;
        flattenSpine(ax.rhs->kids[0], FK::And, leaves);
        std::vector<std::string> projs, factors;
        std::set<std::string> seenP, seenX;
        bool ok = true;
        for (const auto& leaf : leaves) {
          if (leaf->kind != FK::Eq || leaf->args[0]->isVar || !leaf->args[1]->isVar) {
            ok = false;
            break;
          }
          const TermPtr& app = leaf->args[0];
          const TermPtr& xv = leaf->args[1];
          if (app->args.size() != 1 || !app->args[0]->isVar ||
              app->args[0]->head != ax.rhs->var || xv->head == ax.rhs->var ||
              !funFreeWithProfile(app->head, {S}, xv->sort) ||
              !seenP.insert(app->head).second || !seenX.insert(xv->head).second) {
            ok = false;
            break;
          }
          projs.push_back(app->head);
          factors.push_back(xv->sort);
        }
        if (ok && !projs.empty() && commit(ProductStep{S, factors, projs})) return true;
      }

      // Coproduct anchor: |- (exists x:s1 . z = r1(x)) | ... with z : S free
      if (ax.lhs.empty() && ax.rhs->kind == FK::Or) {
        std::vector<FormulaPtr> leaves;
        flattenSpine(ax.rhs, FK::Or, leaves);
        std::vector<std::string> injs, summands;
        std::set<std::string> seenInj;
        std::string zName;
        bool ok = true;
        for (const auto& leaf : leaves) {
          if (leaf->kind != FK::Exists) {
            ok = false;
            break;
          }
          const Formula& body = *leaf->kids[0];
          if (body.kind != FK::Eq || !body.args[0]->isVar || body.args[1]->isVar) {
            ok = false;
            break;
          }
          const TermPtr& zv = body.args[0];
          const TermPtr& app = body.args[1];
          if (zv->sort != S || zv->head == leaf->var ||
              (!zName.empty() && zv->head != zName) || app->args.size() != 1 ||
              !app->args[0]->isVar || app->args[0]->head != leaf->var ||
              !funFreeWithProfile(app->head, {leaf->varSort}, S) ||
              !seenInj.insert(app->head).second) {
            ok = false;
            break;
          }
          zName = zv->head;
          injs.push_back(app->head);
          summands.push_back(leaf->varSort);
        }
        if (ok && !injs.empty() && commit(CoproductStep{S, summands, injs})) return true;
      }

      // Subsort anchor: exists y:S . i(y) = x |- phi(x)
      if (ax.lhs.size() == 1 && ax.lhs[0]->kind == FK::Exists &&
          ax.lhs[0]->varSort == S) {
        const Formula& body = *ax.lhs[0]->kids[0];
        if (body.kind == FK::Eq && !body.args[0]->isVar && body.args[1]->isVar &&
            body.args[0]->args.size() == 1 && body.args[0]->args[0]->isVar &&
            body.args[0]->args[0]->head == ax.lhs[0]->var &&
            body.args[1]->head != ax.lhs[0]->var) {
          const std::string incl = body.args[0]->head;
          const TermPtr& xv = body.args[1];
          if (funFreeWithProfile(incl, {S}, xv->sort) && availableNow(ax.rhs)) {
            bool covered = true;
            for (const auto& v : freeContext(ax.rhs))
              if (v.name != xv->head || v.sort != xv->sort) covered = false;
            SubstitutionClass pred{ax.rhs, {{xv->head, xv->sort}}};
            if (covered && commit(SubsortStep{S, incl, pred})) return true;
          }
        }
      }

      // Quotient anchor: q(x) = q(y) |- phi(x, y)
      if (ax.lhs.size() == 1 && ax.lhs[0]->kind == FK::Eq &&
          !ax.lhs[0]->args[0]->isVar && !ax.lhs[0]->args[1]->isVar) {
        const TermPtr& l = ax.lhs[0]->args[0];
        const TermPtr& r = ax.lhs[0]->args[1];
        if (l->head == r->head && l->args.size() == 1 && r->args.size() == 1 &&
            l->args[0]->isVar && r->args[0]->isVar &&
            l->args[0]->head != r->args[0]->head &&
            funFreeWithProfile(l->head, {l->args[0]->sort}, S) &&
            availableNow(ax.rhs)) {
          const std::string base = l->args[0]->sort;
          Context ctx = {{l->args[0]->head, base}, {r->args[0]->head, base}};
          bool covered = true;
          for (const auto& v : freeContext(ax.rhs)) {
            bool inCtx = false;
            for (const auto& c : ctx)
              if (c.name == v.name && c.sort == v.sort) inCtx = true;
            if (!inCtx) covered = false;
          }
          SubstitutionClass rel{ax.rhs, ctx};
          if (covered && commit(QuotientStep{S, l->head, rel})) return true;
        }
      }
    }
    return false;
  };

  auto tryRel = [&](const RelDecl& R) -> bool {
    for (size_t i = 0; i < tplus.axioms.size(); ++i) {
      if (consumed[i]) continue;
      const Sequent& ax = tplus.axioms[i];
      if (ax.lhs.size() != 1 || ax.lhs[0]->kind != FK::Atom ||
          ax.lhs[0]->rel != R.name)
        continue;
      Context ctx;
      std::set<std::string> seen;
      bool ok = true;
      for (size_t k = 0; k < ax.lhs[0]->args.size(); ++k) {
        const TermPtr& a = ax.lhs[0]->args[k];
        if (!a->isVar || !seen.insert(a->head).second) {
          ok = false;
          break;
        }
        ctx.push_back({a->head, R.domain[k]});
      }
      if (!ok || !availableNow(ax.rhs)) continue;
      if (commit(DefRelStep{R.name, SubstitutionClass{ax.rhs, ctx}})) return true;
    }
    return false;
  };

  auto tryFun = [&](const FunDecl& F) -> bool {
    for (size_t i = 0; i < tplus.axioms.size(); ++i) {
      if (consumed[i]) continue;
      const Sequent& ax = tplus.axioms[i];
      if (ax.lhs.size() != 1 || ax.lhs[0]->kind != FK::Eq) continue;
      const TermPtr& app = ax.lhs[0]->args[0];
      const TermPtr& res = ax.lhs[0]->args[1];
      if (app->isVar || app->head != F.name || !res->isVar) continue;
      Context ctx;
      std::set<std::string> seen;
      bool ok = true;
      for (size_t k = 0; k < app->args.size(); ++k) {
        const TermPtr& a = app->args[k];
        if (!a->isVar || !seen.insert(a->head).second) {
          ok = false;
          break;
        }
        ctx.push_back({a->head, F.domain[k]});
      }
      if (!ok || !seen.insert(res->head).second) continue;
      ctx.push_back({res->head, F.codomain});
      if (!availableNow(ax.rhs)) continue;
      if (commit(DefFunStep{F.name, SubstitutionClass{ax.rhs, ctx}})) return true;
    }
    return false;
  };

  bool progress = true;
  while (progress) {
    progress = false;
    for (const auto& S : newSorts)
      if (!doneSorts.count(S) && trySort(S)) progress = true;
    for (const auto& R : newRels)
      if (!doneRels.count(R.name) && tryRel(R)) progress = true;
    for (const auto& F : newFuns)
      if (!doneFuns.count(F.name) && tryFun(F)) progress = true;
  }

  for (const auto& S : newSorts)
    if (!doneSorts.count(S))
      rc.unclassified.push_back("unrecognized new sort '" + S + "'");
  for (const auto& R : newRels)
    if (!doneRels.count(R.name))
      rc.unclassified.push_back("unrecognized new relation '" + R.name + "'");
  for (const auto& F : newFuns)
    if (!doneFuns.count(F.name))
      rc.unclassified.push_back("unrecognized new function '" + F.name + "'");
  for (size_t i = 0; i < tplus.axioms.size(); ++i)
    if (!consumed[i])
      rc.unclassified.push_back("unmatched axiom '" + tplus.axioms[i].label +
                                "': " + printSequent(tplus.axioms[i]));
  return rc;
}

}  // namespace

Outcome ExtensionVerification::verdict() const {
  if (!unclassified.empty()) return Outcome::Refuted;
  return report.verdict();
}

ExtensionVerification verifyExtension(const Theory& t, const Theory& tplus,
                                      const Budget& b) {
  RecoveredChain rc = recoverChain(t, tplus);
  ExtensionVerification out;
  out.classified = rc.classified;
  out.unclassified = rc.unclassified;
  out.steps = rc.steps;
  std::vector<const Theory*> ptrs;
  for (const auto& th : rc.stages) ptrs.push_back(&th);
  out.report = dischargeAll(rc.obligations, ptrs, b);
  return out;
}

// ---------------------------------------------------------------------------
// Inclusion and the quotient retraction.

namespace {

Reconstrual identityInto(const Theory& t, const Theory& tplus, const std::string& name) {
  Reconstrual f = identityReconstrual(t);
  f.name = name;
  f.dst = tplus;
  f.validate();
  return f;
}

}  // namespace

InclusionResult inclusionTranslation(const Theory& t, const Theory& tplus,
                                     const Budget& b) {
  InclusionResult out;
  out.inclusion = identityInto(t, tplus, "incl");
  std::vector<Obligation> obs;
  for (const auto& ax : tplus.axioms) {
    bool oldSignature = true;
    try {
      for (const auto& f : ax.lhs) typecheckFormula(t.sig, f, t.classical);
      typecheckFormula(t.sig, ax.rhs, t.classical);
    } catch (const InputError&) {
      oldSignature = false;
    }
    if (oldSignature) obs.push_back({"conserv:" + ax.label, ax, t.name});
  }
  out.conservativity = dischargeAll(obs, {&t}, b);
  return out;
}

RetractionPackage quotientRetraction(const Theory& t, const Theory& tplus,
                                     const Budget& b) {
  RecoveredChain rc = recoverChain(t, tplus);
  if (!rc.unclassified.empty() || rc.steps.size() != 1 ||
      !std::holds_alternative<QuotientStep>(rc.steps[0]))
    throw InputError("quotient retraction requires the extension to be exactly "
                     "one quotient step over the base theory");
  const QuotientStep& qs = std::get<QuotientStep>(rc.steps[0]);
  const std::string base = qs.rel.ctx[0].sort;

  RetractionPackage out;
  out.inclusion = identityInto(t, tplus, "incl");

  Reconstrual idT = identityReconstrual(t);
  Reconstrual retr;
  retr.name = "retr";
  retr.src = tplus;
  retr.dst = t;
  retr.sortImages = idT.sortImages;
  retr.relImages = idT.relImages;
  retr.funImages = idT.funImages;

  TermPtr x = mkVar("x", base), y = mkVar("y", base);
  SortImage qi;
  qi.image = {{"x", base}};
  qi.domain = SubstitutionClass{fTop(), qi.image};
  qi.equality = SubstitutionClass{inst(qs.rel, {x, y}), {{"x", base}, {"y", base}}};
  qi.equalityDefaulted = false;
  retr.sortImages[qs.sortName] = qi;
  retr.funImages[qs.surjection] =
      SubstitutionClass{inst(qs.rel, {x, y}), {{"x", base}, {"y", base}}};
  retr.validate();
  out.retraction = retr;

  // Round trip on the base: retraction after inclusion is the identity on the
  // nose, witnessed by literal equality components.
  TMap chi1;
  chi1.name = "chi1";
  chi1.from = composeReconstruals(retr, out.inclusion);
  chi1.to = idT;
  chi1.isoClaimed = true;
  for (const auto& s : t.sig.sorts) {
    Context ctx = {{"x", s}, {"y", s}};
    chi1.components[s] = SubstitutionClass{fEq(mkVar("x", s), mkVar("y", s)), ctx};
  }
  out.chi1 = chi1;

  // Round trip on the extension: the quotient sort travels to its base and
  // back, linked by the surjection's graph.
  TMap chi2;
  chi2.name = "chi2";
  chi2.from = identityReconstrual(tplus);
  chi2.to = composeReconstruals(out.inclusion, retr);
  chi2.isoClaimed = true;
  for (const auto& s : tplus.sig.sorts) {
    if (s == qs.sortName) {
      Context ctx = {{"x", s}, {"y", base}};
      chi2.components[s] = SubstitutionClass{
          fEq(mkApp(tplus.sig, qs.surjection, {mkVar("y", base)}), mkVar("x", s)), ctx};
    } else {
      Context ctx = {{"x", s}, {"y", s}};
      chi2.components[s] = SubstitutionClass{fEq(mkVar("x", s), mkVar("y", s)), ctx};
    }
  }
  out.chi2 = chi2;

  out.report = verifyHomotopyEquivalence(out.inclusion, retr, out.chi1, out.chi2, b);
  return out;
}

// ---------------------------------------------------------------------------
// Model extension.

namespace {

bool evalClass(const FiniteModel& m, const SubstitutionClass& cls,
               const std::vector<int>& idx) {
  Assignment env;
  for (size_t i = 0; i < cls.ctx.size(); ++i) env[cls.ctx[i].name] = idx[i];
  return evalFormula(m, cls.formula, env);
}

std::vector<std::vector<int>> tuplesOver(const FiniteModel& m,
                                         const std::vector<std::string>& sorts) {
  std::vector<int> sizes;
  for (const auto& s : sorts) {
    int n = m.carrierSize(s);
    if (n == 0) return {};
    sizes.push_back(n);
  }
  std::vector<std::vector<int>> out;
  std::vector<int> cur(sorts.size(), 0);
  while (true) {
    out.push_back(cur);
    size_t k = sorts.size();
    while (k > 0) {
      if (++cur[k - 1] < sizes[k - 1]) break;
      cur[k - 1] = 0;
      --k;
    }
    if (k == 0) break;
  }
  return out;
}

}  // namespace

FiniteModel extendModel(const FiniteModel& m, const Theory& base,
                        const ExtensionStep& step) {
  m.validate(base.sig);
  FiniteModel out = m;

  if (const auto* p = std::get_if<ProductStep>(&step)) {
    auto tuples = tuplesOver(m, p->factors);
    std::vector<std::string> names;
    for (const auto& tup : tuples) {
      std::string n = "(";
      for (size_t i = 0; i < tup.size(); ++i) {
        if (i) n += ",";
        n += m.carriers.at(p->factors[i])[tup[i]];
      }
      names.push_back(n + ")");
    }
    out.carriers[p->sortName] = names;
    for (size_t j = 0; j < p->projections.size(); ++j) {
      auto& table = out.functions[p->projections[j]];
      for (size_t i = 0; i < tuples.size(); ++i)
        table[{static_cast<int>(i)}] = tuples[i][j];
    }
    return out;
  }

  if (const auto* p = std::get_if<TerminalStep>(&step)) {
    out.carriers[p->sortName] = {"*"};
    return out;
  }

  if (const auto* p = std::get_if<CoproductStep>(&step)) {
    std::vector<std::string> names;
    std::vector<int> offsets;
    for (size_t i = 0; i < p->summands.size(); ++i) {
      offsets.push_back(static_cast<int>(names.size()));
      for (const auto& e : m.carriers.at(p->summands[i]))
        names.push_back(p->injections[i] + "(" + e + ")");
    }
    out.carriers[p->sortName] = names;
    for (size_t i = 0; i < p->summands.size(); ++i) {
      auto& table = out.functions[p->injections[i]];
      int n = m.carrierSize(p->summands[i]);
      for (int j = 0; j < n; ++j) table[{j}] = offsets[i] + j;
    }
    return out;
  }

  if (const auto* p = std::get_if<SubsortStep>(&step)) {
    const std::string base_s = p->pred.ctx[0].sort;
    std::vector<int> keep;
    int n = m.carrierSize(base_s);
    for (int i = 0; i < n; ++i)
      if (evalClass(m, p->pred, {i})) keep.push_back(i);
    std::vector<std::string> names;
    for (int i : keep) names.push_back(m.carriers.at(base_s)[i]);
    out.carriers[p->sortName] = names;
    auto& table = out.functions[p->inclusion];
    for (size_t k = 0; k < keep.size(); ++k)
      table[{static_cast<int>(k)}] = keep[k];
    return out;
  }

  if (const auto* p = std::get_if<QuotientStep>(&step)) {
    const std::string base_s = p->rel.ctx[0].sort;
    int n = m.carrierSize(base_s);
    auto rel = [&](int i, int j) { return evalClass(m, p->rel, {i, j}); };
    for (int i = 0; i < n; ++i)
      if (!rel(i, i))
        throw InputError("defining relation of '" + p->sortName +
                         "' is not reflexive on this model");
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        if (rel(i, j) && !rel(j, i))
          throw InputError("defining relation of '" + p->sortName +
                           "' is not symmetric on this model");
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k)
          if (rel(i, j) && rel(j, k) && !rel(i, k))
            throw InputError("defining relation of '" + p->sortName +
                             "' is not transitive on this model");
    std::vector<int> repOf(n), reps;
    for (int i = 0; i < n; ++i) {
      int r = i;
      for (int j = 0; j < i; ++j)
        if (rel(j, i)) {
          r = j;
          break;
        }
      repOf[i] = r;
      if (r == i) reps.push_back(i);
    }
    std::vector<std::string> names;
    for (int r : reps) names.push_back("[" + m.carriers.at(base_s)[r] + "]");
    out.carriers[p->sortName] = names;
    auto& table = out.functions[p->surjection];
    for (int i = 0; i < n; ++i) {
      int c = static_cast<int>(std::lower_bound(reps.begin(), reps.end(), repOf[i]) -
                               reps.begin());
      table[{i}] = c;
    }
    return out;
  }

  if (const auto* p = std::get_if<DefRelStep>(&step)) {
    std::vector<std::string> sorts;
    for (const auto& v : p->def.ctx) sorts.push_back(v.sort);
    auto& table = out.relations[p->relName];
    for (const auto& tup : tuplesOver(m, sorts))
      if (evalClass(m, p->def, tup)) table.insert(tup);
    return out;
  }

  const auto& p = std::get<DefFunStep>(step);
  std::vector<std::string> argSorts;
  for (size_t i = 0; i + 1 < p.graph.ctx.size(); ++i)
    argSorts.push_back(p.graph.ctx[i].sort);
  const std::string res = p.graph.ctx.back().sort;
  int codSize = m.carrierSize(res);
  auto& table = out.functions[p.funName];
  for (const auto& args : tuplesOver(m, argSorts)) {
    int found = -1;
    for (int y = 0; y < codSize; ++y) {
      std::vector<int> full = args;
      full.push_back(y);
      if (!evalClass(m, p.graph, full)) continue;
      if (found >= 0)
        throw InputError("graph of '" + p.funName +
                         "' is not single-valued on this model");
      found = y;
    }
    if (found < 0)
      throw InputError("graph of '" + p.funName + "' has no value on this model");
    table[args] = found;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Candidate formulas and the exact completion slice.

std::vector<FormulaPtr> enumerateCandidateFormulas(const Theory& t,
                                                   const Context& ctx, int depth) {
  // Term pool: the context variables plus the theory's constants.
  std::vector<TermPtr> pool = varsOf(ctx);
  for (const auto& f : t.sig.functions)
    if (f.domain.empty()) pool.push_back(mkApp(t.sig, f.name, {}));

  // Atoms and equalities over the pool.
  std::vector<FormulaPtr> atoms;
  for (const auto& r : t.sig.relations) {
    std::vector<std::vector<TermPtr>> choices(r.domain.size());
    bool feasible = true;
    for (size_t i = 0; i < r.domain.size(); ++i) {
      for (const auto& tm : pool)
        if (tm->sort == r.domain[i]) choices[i].push_back(tm);
      if (choices[i].empty()) feasible = false;
    }
    if (!feasible) continue;
    std::vector<size_t> idx(r.domain.size(), 0);
    while (true) {
      std::vector<TermPtr> args;
      for (size_t i = 0; i < idx.size(); ++i) args.push_back(choices[i][idx[i]]);
      atoms.push_back(fAtom(r.name, args));
      size_t k = idx.size();
      while (k > 0) {
        if (++idx[k - 1] < choices[k - 1].size()) break;
        idx[--k] = 0;
      }
      if (k == 0) break;
    }
  }
  for (const auto& a : pool)
    for (const auto& b2 : pool)
      if (a->sort == b2->sort) atoms.push_back(fEq(a, b2));

  auto keyAt = [&](const FormulaPtr& f) {
    return SubstitutionClass{f, ctx}.canonicalKey();
  };
  auto sortByKey = [&](std::vector<FormulaPtr>& v) {
    std::sort(v.begin(), v.end(), [&](const FormulaPtr& a, const FormulaPtr& b2) {
      return keyAt(a) < keyAt(b2);
    });
  };

  // layers[k] = all candidate bodies of node count k, deduplicated.
  std::map<int, std::vector<FormulaPtr>> layers;
  std::set<std::string> seen;
  constexpr size_t kEnumerationCap = 100000;
  size_t total = 0;
  auto add = [&](int size, const FormulaPtr& f) {
    if (!seen.insert(keyAt(f)).second) return;
    if (++total > kEnumerationCap)
      throw InputError("candidate formula enumeration exceeded " +
                       std::to_string(kEnumerationCap) + " formulas; lower the depth");
    layers[size].push_back(f);
  };
  for (const auto& a : atoms) add(1, a);
  if (layers.count(1)) sortByKey(layers[1]);

  for (int k = 3; k <= depth; ++k) {
    for (int i = 1; i <= k - 2; ++i) {
      int j = k - 1 - i;
      if (!layers.count(i) || !layers.count(j)) continue;
      for (const auto& a : layers[i])
        for (const auto& b2 : layers[j]) {
          add(k, fAnd(a, b2));
          add(k, fOr(a, b2));
        }
    }
    if (layers.count(k)) sortByKey(layers[k]);
  }

  // Keep formulas whose free context is exactly the given one.
  std::vector<FormulaPtr> out;
  for (const auto& [size, forms] : layers) {
    (void)size;
    for (const auto& f : forms)
      if (freeContext(f).size() == ctx.size()) out.push_back(f);
  }
  return out;
}

ExactCompletionResult exactCompletionSlice(const Theory& t, int depth,
                                           const Budget& b) {
  ExactCompletionResult out;
  Theory cur = t;

  for (const auto& sortName : t.sig.sorts) {
    Context ctx = {{"x", sortName}, {"y", sortName}};
    TermPtr x = mkVar("x", sortName), y = mkVar("y", sortName), z = mkVar("z", sortName);

    // Relations the theory has already quotiented out (recognizable by a
    // kernel axiom q(x) = q(y) |- phi(x, y) over this sort) seed the
    // duplicate check without adding steps, so re-running the slice on its
    // own output does not stack a second quotient on the same class.
    std::vector<SubstitutionClass> accepted;
    size_t preseeded = 0;
    for (const auto& ax : t.axioms) {
      if (ax.lhs.size() != 1 || ax.lhs[0]->kind != FK::Eq) continue;
      const TermPtr& l = ax.lhs[0]->args[0];
      const TermPtr& r = ax.lhs[0]->args[1];
      if (l->isVar || r->isVar || l->head != r->head) continue;
      if (l->args.size() != 1 || r->args.size() != 1) continue;
      if (!l->args[0]->isVar || !r->args[0]->isVar) continue;
      if (l->args[0]->sort != sortName || r->args[0]->sort != sortName) continue;
      if (l->args[0]->head == r->args[0]->head) continue;
      Context kctx = {{l->args[0]->head, sortName}, {r->args[0]->head, sortName}};
      bool covered = true;
      for (const auto& v : freeContext(ax.rhs)) {
        bool inCtx = false;
        for (const auto& c : kctx)
          if (c.name == v.name && c.sort == v.sort) inCtx = true;
        if (!inCtx) covered = false;
      }
      if (covered) accepted.push_back(SubstitutionClass{ax.rhs, kctx});
    }
    preseeded = accepted.size();

    for (const auto& phi : enumerateCandidateFormulas(t, ctx, depth)) {
      SubstitutionClass cls{phi, ctx};
      Sequent refl{sortName + "_cand_refl", {}, substitute(phi, ctx, {x, x})};
      Sequent symm{sortName + "_cand_symm", {phi}, substitute(phi, ctx, {y, x})};
      Sequent trans{sortName + "_cand_trans",
                    {phi, substitute(phi, ctx, {y, z})},
                    substitute(phi, ctx, {x, z})};
      bool skip = false;
      for (const auto& s : {refl, symm, trans}) {
        ProofResult pr = proveSequent(t, s, b);
        if (pr.outcome == Outcome::Refuted) {
          skip = true;
          break;
        }
        if (pr.outcome == Outcome::Unknown) {
          out.undecided.push_back("[" + sortName + "] " + printFormula(phi) +
                                  " (" + s.label.substr(s.label.rfind('_') + 1) +
                                  " unknown)");
          out.complete = false;
          skip = true;
          break;
        }
      }
      if (skip) continue;

      bool duplicate = false;
      for (const auto& psi : accepted) {
        FormulaPtr other = inst(psi, {x, y});
        ProofResult fwd = proveSequent(t, Sequent{"dedup_fwd", {phi}, other}, b);
        ProofResult bwd = proveSequent(t, Sequent{"dedup_bwd", {other}, phi}, b);
        if (fwd.outcome == Outcome::Proved && bwd.outcome == Outcome::Proved) {
          duplicate = true;
          break;
        }
        if (fwd.outcome == Outcome::Unknown || bwd.outcome == Outcome::Unknown) {
          out.undecided.push_back("[" + sortName + "] " + printFormula(phi) + " vs " +
                                  printFormula(other) + " (equivalence unknown)");
          out.complete = false;
        }
      }
      if (!duplicate) accepted.push_back(cls);
    }

    for (size_t ai = preseeded; ai < accepted.size(); ++ai) {
      const SubstitutionClass& cls = accepted[ai];
      std::string tag;
      switch (cls.formula->kind) {
        case FK::Atom: tag = cls.formula->rel; break;
        case FK::Eq: tag = "eq"; break;
        case FK::And: tag = "and"; break;
        case FK::Or: tag = "or"; break;
        case FK::Exists: tag = "ex"; break;
        default: tag = "def"; break;
      }
      QuotientStep st;
      st.sortName = freshSortName(cur.sig, sortName + "_by_" + tag);
      st.surjection = freshFunName(cur.sig, "p_" + st.sortName);
      st.rel = cls;
      ExtensionResult res = extendMorita(cur, st);
      cur = res.extended;
      out.added.push_back(std::move(st));
    }
  }
  out.completed = cur;
  return out;
}

// ---------------------------------------------------------------------------
// Equality repair: declared alongside the translation interface, implemented
// here because it builds extension chains.

EqualityRepair makeEqualityPreserving(const Reconstrual& f, const Budget& b) {
  f.validate();

  EqualityRepair out;
  std::vector<Theory> stages{f.dst};
  Theory cur = f.dst;
  std::vector<Obligation> obs;

  struct SortPlan {
    bool changed = false;
    std::string carrier;           // the sort the quotient is taken over
    bool viaProduct = false;
    std::string prodSort;
    std::vector<std::string> prjs;
    bool viaSubsort = false;
    std::string inclusion;
    std::string quotSort;
    std::string surjection;
  };
  std::map<std::string, SortPlan> plans;

  for (const auto& sortName : f.src.sig.sorts) {
    const SortImage& si = f.sortImage(sortName);
    SortPlan plan;
    // Defaulted equality is componentwise by construction; an empty image
    // forces its equality to be trivial. Neither needs repair.
    if (si.equalityDefaulted || si.image.empty()) {
      plans[sortName] = plan;
      continue;
    }

    // Agreement with componentwise equality, decided in the original target.
    {
      Context uctx, vctx;
      for (size_t i = 0; i < si.image.size(); ++i) {
        uctx.push_back({"u" + std::to_string(i + 1), si.image[i].sort});
        vctx.push_back({"v" + std::to_string(i + 1), si.image[i].sort});
      }
      std::vector<TermPtr> us = varsOf(uctx), vs = varsOf(vctx);
      std::vector<TermPtr> both = us;
      both.insert(both.end(), vs.begin(), vs.end());
      std::vector<FormulaPtr> comps;
      for (size_t i = 0; i < us.size(); ++i) comps.push_back(fEq(us[i], vs[i]));
      FormulaPtr du = inst(si.domain, us), dv = inst(si.domain, vs);
      FormulaPtr e = inst(si.equality, both);
      Sequent fwd{sortName + "_agree_fwd", {du, dv, e}, fAndAll(comps)};
      obs.push_back({"agree_fwd:" + sortName, fwd, f.dst.name});
      Sequent bwd{sortName + "_agree_bwd", {du, dv, fAndAll(comps)}, e};
      obs.push_back({"agree_bwd:" + sortName, bwd, f.dst.name});
    }

    plan.changed = true;
    std::string carrier;
    if (si.image.size() > 1) {
      plan.viaProduct = true;
      std::vector<std::string> factors;
      for (const auto& slot : si.image) factors.push_back(slot.sort);
      plan.prodSort = freshSortName(cur.sig, sortName + "_tuple");
      for (size_t i = 0; i < factors.size(); ++i)
        plan.prjs.push_back(
            freshFunName(cur.sig, "prj" + std::to_string(i + 1) + "_" + plan.prodSort));
      ExtensionResult res =
          extendMorita(cur, ProductStep{plan.prodSort, factors, plan.prjs});
      cur = res.extended;
      stages.push_back(cur);
      carrier = plan.prodSort;
    } else {
      carrier = si.image[0].sort;
    }

    // Slot terms of one carrier variable.
    auto slotsOf = [&](const TermPtr& w) {
      std::vector<TermPtr> slots;
      if (plan.viaProduct)
        for (const auto& prj : plan.prjs) slots.push_back(mkApp(cur.sig, prj, {w}));
      else
        slots.push_back(w);
      return slots;
    };

    if (si.domain.formula->kind != FK::Top) {
      plan.viaSubsort = true;
      std::string subSort = freshSortName(cur.sig, sortName + "_dom");
      plan.inclusion = freshFunName(cur.sig, "incl_" + subSort);
      TermPtr w = mkVar("w", carrier);
      SubstitutionClass pred{inst(si.domain, slotsOf(w)), {{"w", carrier}}};
      ExtensionResult res =
          extendMorita(cur, SubsortStep{subSort, plan.inclusion, pred});
      cur = res.extended;
      stages.push_back(cur);
      carrier = subSort;
    }
    plan.carrier = carrier;

    // The equality image, transported to the carrier, quotiented out.
    {
      TermPtr c1 = mkVar("c1", carrier), c2 = mkVar("c2", carrier);
      auto lift = [&](const TermPtr& c) {
        TermPtr inner = plan.viaSubsort ? mkApp(cur.sig, plan.inclusion, {c}) : c;
        std::vector<TermPtr> slots;
        if (plan.viaProduct)
          for (const auto& prj : plan.prjs)
            slots.push_back(mkApp(cur.sig, prj, {inner}));
        else
          slots.push_back(inner);
        return slots;
      };
      std::vector<TermPtr> both = lift(c1);
      std::vector<TermPtr> right = lift(c2);
      both.insert(both.end(), right.begin(), right.end());
      SubstitutionClass rel{inst(si.equality, both), {{"c1", carrier}, {"c2", carrier}}};
      plan.quotSort = freshSortName(cur.sig, sortName + "_cls");
      plan.surjection = freshFunName(cur.sig, "p_" + plan.quotSort);
      ExtensionResult res =
          extendMorita(cur, QuotientStep{plan.quotSort, plan.surjection, rel});
      for (const auto& o : res.obligations) obs.push_back(o);
      cur = res.extended;
      stages.push_back(cur);
    }
    plans[sortName] = plan;
  }

  // Rebuild the reconstrual over the extended target.
  Reconstrual rep;
  rep.name = f.name + "_repaired";
  rep.src = f.src;
  rep.dst = cur;
  for (const auto& sortName : f.src.sig.sorts) {
    const SortPlan& plan = plans.at(sortName);
    if (!plan.changed) {
      rep.sortImages[sortName] = f.sortImage(sortName);
      continue;
    }
    SortImage si;
    si.image = {{"x", plan.quotSort}};
    si.domain = SubstitutionClass{fTop(), si.image};
    si.equality = SubstitutionClass{
        fEq(mkVar("x", plan.quotSort), mkVar("y", plan.quotSort)),
        {{"x", plan.quotSort}, {"y", plan.quotSort}}};
    si.equalityDefaulted = true;
    rep.sortImages[sortName] = si;
  }

  // A stored class over old image blocks becomes a class over the new blocks:
  // each repaired block is reached by an existential witness on the quotient
  // carrier, linked through the surjection, with the old block slots read off
  // through the projections and the inclusion.
  auto rewriteClass = [&](const SubstitutionClass& cls,
                          const std::vector<std::string>& srcSorts) {
    // Old context arrives as the concatenation of per-sort image blocks.
    std::vector<TermPtr> oldTerms;
    Context newCtx;
    std::vector<FormulaPtr> links;
    Context witnesses;
    size_t pos = 0;
    int blockId = 0;
    for (const auto& s : srcSorts) {
      const SortImage& oldSi = f.sortImage(s);
      const SortPlan& plan = plans.at(s);
      ++blockId;
      if (!plan.changed) {
        for (size_t i = 0; i < oldSi.image.size(); ++i) {
          const TypedVar& slot = cls.ctx[pos + i];
          newCtx.push_back(slot);
          oldTerms.push_back(mkVar(slot.name, slot.sort));
        }
      } else {
        std::string qv = "q" + std::to_string(blockId);
        std::string wv = "w" + std::to_string(blockId);
        newCtx.push_back({qv, plan.quotSort});
        witnesses.push_back({wv, plan.carrier});
        TermPtr w = mkVar(wv, plan.carrier);
        links.push_back(fEq(mkApp(cur.sig, plan.surjection, {w}), mkVar(qv, plan.quotSort)));
        TermPtr inner = plan.viaSubsort ? mkApp(cur.sig, plan.inclusion, {w}) : w;
        if (plan.viaProduct)
          for (const auto& prj : plan.prjs)
            oldTerms.push_back(mkApp(cur.sig, prj, {inner}));
        else
          oldTerms.push_back(inner);
      }
      pos += oldSi.image.size();
    }
    FormulaPtr body = fAndAll(links);
    FormulaPtr old = inst(cls, oldTerms);
    body = links.empty() ? old : fAnd(body, old);
    for (auto it = witnesses.rbegin(); it != witnesses.rend(); ++it)
      body = fExists(it->name, it->sort, body);
    return SubstitutionClass{body, newCtx};
  };

  for (const auto& r : f.src.sig.relations)
    rep.relImages[r.name] = rewriteClass(f.relImages.at(r.name), r.domain);
  for (const auto& fn : f.src.sig.functions) {
    std::vector<std::string> sorts = fn.domain;
    sorts.push_back(fn.codomain);
    rep.funImages[fn.name] = rewriteClass(f.funImages.at(fn.name), sorts);
  }
  rep.validate();

  out.repaired = rep;
  out.extendedTarget = cur;
  std::vector<const Theory*> ptrs;
  for (const auto& th : stages) ptrs.push_back(&th);
  out.evidence = dischargeAll(obs, ptrs, b);
  return out;
}

}  // namespace cohlog
