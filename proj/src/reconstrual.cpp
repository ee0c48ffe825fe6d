#include "cohlog/reconstrual.hpp"

#include <algorithm>
#include <functional>
#include <set>

namespace cohlog {

// ---------------------------------------------------------------------------
// Obligation discharge (shared by every verification module)

VerificationReport dischargeAll(const std::vector<Obligation>& obs,
                                const std::vector<const Theory*>& theories,
                                const Budget& b) {
  VerificationReport rep;
  for (const auto& ob : obs) {
    const Theory* t = nullptr;
    for (const Theory* cand : theories)
      if (cand->name == ob.inTheory) t = cand;
    if (!t)
      throw InputError("obligation '" + ob.name + "' names unknown theory '" +
                       ob.inTheory + "'");
    ObligationResult r;
    r.obligation = ob;
    r.proof = proveSequent(*t, ob.sequent, b);
    rep.entries.push_back(std::move(r));
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Reconstrual structure

const SortImage& Reconstrual::sortImage(const std::string& sort) const {
  auto it = sortImages.find(sort);
  if (it == sortImages.end())
    throw InputError("reconstrual " + name + " has no image for sort '" + sort + "'");
  return it->second;
}

// Image block of one source variable: a single-slot image reuses the variable
// name, wider images suffix the slot names. Names are only mnemonic; all
// class application is positional.
static Context blockOf(const std::string& varName, const Context& image) {
  Context out;
  if (image.size() == 1) {
    out.push_back({varName, image[0].sort});
    return out;
  }
  for (const auto& slot : image) out.push_back({varName + "_" + slot.name, slot.sort});
  return out;
}

Context Reconstrual::imageContext(const Context& srcCtx) const {
  Context out;
  for (const auto& v : srcCtx) {
    Context block = blockOf(v.name, sortImage(v.sort).image);
    out.insert(out.end(), block.begin(), block.end());
  }
  return out;
}

std::vector<std::vector<TermPtr>> Reconstrual::imageBlocks(const Context& srcCtx) const {
  std::vector<std::vector<TermPtr>> out;
  for (const auto& v : srcCtx) {
    Context block = blockOf(v.name, sortImage(v.sort).image);
    std::vector<TermPtr> terms;
    for (const auto& tv : block) terms.push_back(mkVar(tv.name, tv.sort));
    out.push_back(std::move(terms));
  }
  return out;
}

void Reconstrual::validate() const {
  for (const auto& s : src.sig.sorts) {
    const SortImage& si = sortImage(s);
    for (const auto& slot : si.image)
      if (!dst.sig.hasSort(slot.sort))
        throw InputError("image of sort " + s + " uses unknown target sort '" +
                         slot.sort + "'");
    if (si.domain.ctx.size() != si.image.size())
      throw InputError("domain context of sort " + s + " does not match its image");
    for (size_t i = 0; i < si.image.size(); ++i)
      if (si.domain.ctx[i].sort != si.image[i].sort)
        throw InputError("domain context of sort " + s + " has mismatched sorts");
    if (si.equality.ctx.size() != 2 * si.image.size())
      throw InputError("equality context of sort " + s + " must be two image blocks");
    for (size_t i = 0; i < si.image.size(); ++i) {
      if (si.equality.ctx[i].sort != si.image[i].sort ||
          si.equality.ctx[si.image.size() + i].sort != si.image[i].sort)
        throw InputError("equality context of sort " + s + " has mismatched sorts");
    }
    typecheckFormula(dst.sig, si.domain.formula, dst.classical);
    typecheckFormula(dst.sig, si.equality.formula, dst.classical);
  }
  for (const auto& r : src.sig.relations) {
    auto it = relImages.find(r.name);
    if (it == relImages.end())
      throw InputError("reconstrual " + name + " has no image for relation " + r.name);
    size_t want = 0;
    for (const auto& d : r.domain) want += sortImage(d).image.size();
    if (it->second.ctx.size() != want)
      throw InputError("image of relation " + r.name + " has a context of width " +
                       std::to_string(it->second.ctx.size()) + ", expected " +
                       std::to_string(want));
    typecheckFormula(dst.sig, it->second.formula, dst.classical);
  }
  for (const auto& f : src.sig.functions) {
    auto it = funImages.find(f.name);
    if (it == funImages.end())
      throw InputError("reconstrual " + name + " has no image for function " + f.name);
    size_t want = sortImage(f.codomain).image.size();
    for (const auto& d : f.domain) want += sortImage(d).image.size();
    if (it->second.ctx.size() != want)
      throw InputError("image of function " + f.name + " has a context of width " +
                       std::to_string(it->second.ctx.size()) + ", expected " +
                       std::to_string(want));
    typecheckFormula(dst.sig, it->second.formula, dst.classical);
  }
}

// ---------------------------------------------------------------------------
// Applying a reconstrual to formulas

namespace {

// Instantiates a stored class at concrete argument terms, positionally.
FormulaPtr instantiate(const SubstitutionClass& cls, const std::vector<TermPtr>& terms) {
  if (cls.ctx.size() != terms.size())
    throw InputError("class instantiated at " + std::to_string(terms.size()) +
                     " terms, context has " + std::to_string(cls.ctx.size()));
  return substitute(cls.formula, cls.ctx, terms);
}

struct Applier {
  const Reconstrual& F;
  std::map<std::string, std::vector<TermPtr>> env;  // source var -> image terms
  std::set<std::string> used;                       // image names in scope
  int fresh = 0;

  std::vector<TermPtr> concatArgs(const std::vector<TermPtr>& atomArgs) {
    std::vector<TermPtr> out;
    for (const auto& t : atomArgs) {
      const auto& block = env.at(t->head);
      out.insert(out.end(), block.begin(), block.end());
    }
    return out;
  }

  FormulaPtr go(const FormulaPtr& phi) {
    switch (phi->kind) {
      case FK::Top:
        return fTop();
      case FK::Bot:
        return fBot();
      case FK::And:
        return fAnd(go(phi->kids[0]), go(phi->kids[1]));
      case FK::Or:
        return fOr(go(phi->kids[0]), go(phi->kids[1]));
      case FK::Atom: {
        auto it = F.relImages.find(phi->rel);
        if (it == F.relImages.end())
          throw InputError("no image for relation " + phi->rel);
        return instantiate(it->second, concatArgs(phi->args));
      }
      case FK::Eq: {
        const TermPtr& l = phi->args[0];
        const TermPtr& r = phi->args[1];
        if (l->isVar) {
          const SortImage& si = F.sortImage(l->sort);
          std::vector<TermPtr> args = env.at(l->head);
          const auto& right = env.at(r->head);
          args.insert(args.end(), right.begin(), right.end());
          return instantiate(si.equality, args);
        }
        // Graph-normal equality f(x...) = y.
        auto it = F.funImages.find(l->head);
        if (it == F.funImages.end())
          throw InputError("no image for function " + l->head);
        std::vector<TermPtr> args = concatArgs(l->args);
        const auto& res = env.at(r->head);
        args.insert(args.end(), res.begin(), res.end());
        return instantiate(it->second, args);
      }
      case FK::Exists: {
        const SortImage& si = F.sortImage(phi->varSort);
        Context block = blockOf(phi->var, si.image);
        for (auto& tv : block) {
          while (used.count(tv.name)) tv.name += "_" + std::to_string(++fresh);
          used.insert(tv.name);
        }
        std::vector<TermPtr> terms;
        for (const auto& tv : block) terms.push_back(mkVar(tv.name, tv.sort));
        auto saved = env.find(phi->var) != env.end()
                         ? std::optional<std::vector<TermPtr>>(env[phi->var])
                         : std::nullopt;
        env[phi->var] = terms;
        FormulaPtr body = go(phi->kids[0]);
        if (saved)
          env[phi->var] = *saved;
        else
          env.erase(phi->var);
        FormulaPtr out = fAnd(instantiate(si.domain, terms), body);
        for (auto it2 = block.rbegin(); it2 != block.rend(); ++it2)
          out = fExists(it2->name, it2->sort, out);
        return out;
      }
      default:
        throw InputError("reconstruals apply to coherent formulas only");
    }
  }
};

// Applies F to phi read at an explicit source context (needed when the
// context order matters, e.g. composing stored classes).
FormulaPtr applyAtContext(const Reconstrual& f, const FormulaPtr& phi,
                          const Context& srcCtx) {
  FormulaPtr unfolded = unfoldFunctionGraphs(phi);
  Applier ap{f, {}, {}, 0};
  auto blocks = f.imageBlocks(srcCtx);
  for (size_t i = 0; i < srcCtx.size(); ++i) {
    ap.env[srcCtx[i].name] = blocks[i];
    for (const auto& t : blocks[i]) ap.used.insert(t->head);
  }
  return ap.go(unfolded);
}

}  // namespace

FormulaPtr applyReconstrual(const Reconstrual& f, const FormulaPtr& phi) {
  return applyAtContext(f, phi, freeContext(phi));
}

Sequent applyToAxiom(const Reconstrual& f, const Sequent& s) {
  Sequent out;
  out.label = s.label;
  Context ctx = freeContext(s);
  auto blocks = f.imageBlocks(ctx);
  for (size_t i = 0; i < ctx.size(); ++i)
    out.lhs.push_back(instantiate(f.sortImage(ctx[i].sort).domain, blocks[i]));
  // Formulas share variable names, and image naming is name-deterministic, so
  // per-formula application lines up across the sequent.
  for (const auto& g : s.lhs) out.lhs.push_back(applyAtContext(f, g, freeContext(g)));
  out.rhs = applyAtContext(f, s.rhs, freeContext(s.rhs));
  return out;
}

Reconstrual identityReconstrual(const Theory& t) {
  Reconstrual f;
  f.name = "id_" + t.name;
  f.src = t;
  f.dst = t;
  for (const auto& s : t.sig.sorts) {
    SortImage si;
    si.image = {{"x", s}};
    si.domain = SubstitutionClass{fTop(), si.image};
    Context eqCtx = {{"x", s}, {"y", s}};
    si.equality = SubstitutionClass{fEq(mkVar("x", s), mkVar("y", s)), eqCtx};
    si.equalityDefaulted = true;
    f.sortImages[s] = std::move(si);
  }
  for (const auto& r : t.sig.relations) {
    Context ctx;
    std::vector<TermPtr> args;
    for (size_t i = 0; i < r.domain.size(); ++i) {
      std::string n = "x" + std::to_string(i + 1);
      ctx.push_back({n, r.domain[i]});
      args.push_back(mkVar(n, r.domain[i]));
    }
    f.relImages[r.name] = SubstitutionClass{fAtom(r.name, args), ctx};
  }
  for (const auto& fn : t.sig.functions) {
    Context ctx;
    std::vector<TermPtr> args;
    for (size_t i = 0; i < fn.domain.size(); ++i) {
      std::string n = "x" + std::to_string(i + 1);
      ctx.push_back({n, fn.domain[i]});
      args.push_back(mkVar(n, fn.domain[i]));
    }
    ctx.push_back({"y", fn.codomain});
    f.funImages[fn.name] = SubstitutionClass{
        fEq(mkApp(t.sig, fn.name, args), mkVar("y", fn.codomain)), ctx};
  }
  return f;
}

Reconstrual composeReconstruals(const Reconstrual& g, const Reconstrual& f) {
  if (!(f.dst.sig == g.src.sig))
    throw InputError("cannot compose " + g.name + " after " + f.name +
                     ": signatures do not meet");
  Reconstrual h;
  h.name = g.name + "." + f.name;
  h.src = f.src;
  h.dst = g.dst;

  for (const auto& s : f.src.sig.sorts) {
    const SortImage& fi = f.sortImage(s);
    SortImage hi;
    hi.image = g.imageContext(fi.image);

    // Composite domain: the g-domains of each slot, plus g of f's domain.
    FormulaPtr dom = fTop();
    auto blocks = g.imageBlocks(fi.image);
    for (size_t i = 0; i < fi.image.size(); ++i) {
      FormulaPtr d = instantiate(g.sortImage(fi.image[i].sort).domain, blocks[i]);
      dom = formulaEqual(dom, fTop()) ? d : fAnd(dom, d);
    }
    FormulaPtr gd = applyAtContext(g, fi.domain.formula, fi.domain.ctx);
    dom = formulaEqual(dom, fTop()) ? gd : fAnd(dom, gd);
    hi.domain = SubstitutionClass{dom, hi.image};

    Context eqCtx = g.imageContext(fi.equality.ctx);
    hi.equality = SubstitutionClass{
        applyAtContext(g, fi.equality.formula, fi.equality.ctx), eqCtx};
    hi.equalityDefaulted = false;
    h.sortImages[s] = std::move(hi);
  }
  for (const auto& [r, cls] : f.relImages)
    h.relImages[r] = SubstitutionClass{applyAtContext(g, cls.formula, cls.ctx),
                                       g.imageContext(cls.ctx)};
  for (const auto& [fn, cls] : f.funImages)
    h.funImages[fn] = SubstitutionClass{applyAtContext(g, cls.formula, cls.ctx),
                                        g.imageContext(cls.ctx)};
  return h;
}

// ---------------------------------------------------------------------------
// Verification

Flag flagOfOutcome(Outcome o) {
  switch (o) {
    case Outcome::Proved:
      return Flag::Proved;
    case Outcome::Refuted:
      return Flag::Failed;
    case Outcome::Unknown:
      return Flag::Unknown;
  }
  return Flag::Unknown;
}

std::string flagName(Flag f) {
  switch (f) {
    case Flag::Proved:
      return "Proved";
    case Flag::Failed:
      return "Failed";
    case Flag::Unknown:
      return "Unknown";
  }
  return "Unknown";
}

namespace {

// Combines outcomes across a family of obligations.
Flag flagOverEntries(const std::vector<ObligationResult>& entries,
                     const std::function<bool(const std::string&)>& select) {
  bool unknown = false, any = false;
  for (const auto& e : entries) {
    if (!select(e.obligation.name)) continue;
    any = true;
    if (e.proof.outcome == Outcome::Refuted) return Flag::Failed;
    if (e.proof.outcome == Outcome::Unknown) unknown = true;
  }
  (void)any;
  return unknown ? Flag::Unknown : Flag::Proved;
}

FormulaPtr componentwiseEq(const std::vector<TermPtr>& a, const std::vector<TermPtr>& b) {
  std::vector<FormulaPtr> eqs;
  for (size_t i = 0; i < a.size(); ++i) eqs.push_back(fEq(a[i], b[i]));
  return fAndAll(eqs);
}

}  // namespace

Translation verifyTranslation(const Reconstrual& f, const Budget& b) {
  f.validate();
  std::vector<Obligation> obs;
  const std::string inT = f.dst.name;

  for (const auto& ax : f.src.axioms)
    obs.push_back({"axiom:" + ax.label, applyToAxiom(f, ax), inT});

  for (const auto& s : f.src.sig.sorts) {
    const SortImage& si = f.sortImage(s);
    Context one = {{"x", s}};
    Context two = {{"x", s}, {"y", s}};
    Context three = {{"x", s}, {"y", s}, {"z", s}};
    auto bx1 = f.imageBlocks(one);
    auto bx2 = f.imageBlocks(two);
    auto bx3 = f.imageBlocks(three);

    auto dom = [&](const std::vector<TermPtr>& blk) {
      return instantiate(si.domain, blk);
    };
    auto eqAt = [&](const std::vector<TermPtr>& a, const std::vector<TermPtr>& c) {
      std::vector<TermPtr> args = a;
      args.insert(args.end(), c.begin(), c.end());
      return instantiate(si.equality, args);
    };

    Sequent refl;
    refl.label = "E_refl_" + s;
    refl.lhs = {dom(bx1[0])};
    refl.rhs = eqAt(bx1[0], bx1[0]);
    obs.push_back({"E_refl:" + s, refl, inT});

    Sequent symm;
    symm.label = "E_symm_" + s;
    symm.lhs = {dom(bx2[0]), dom(bx2[1]), eqAt(bx2[0], bx2[1])};
    symm.rhs = eqAt(bx2[1], bx2[0]);
    obs.push_back({"E_symm:" + s, symm, inT});

    Sequent trans;
    trans.label = "E_trans_" + s;
    trans.lhs = {dom(bx3[0]), dom(bx3[1]), dom(bx3[2]), eqAt(bx3[0], bx3[1]),
                 eqAt(bx3[1], bx3[2])};
    trans.rhs = eqAt(bx3[0], bx3[2]);
    obs.push_back({"E_trans:" + s, trans, inT});

    // Equality preservation: the equality image against componentwise
    // equality over the domains.
    Sequent fwd;
    fwd.label = "eqpres_fwd_" + s;
    fwd.lhs = {dom(bx2[0]), dom(bx2[1]), eqAt(bx2[0], bx2[1])};
    fwd.rhs = componentwiseEq(bx2[0], bx2[1]);
    obs.push_back({"eqpres_fwd:" + s, fwd, inT});

    Sequent bwd;
    bwd.label = "eqpres_bwd_" + s;
    bwd.lhs = {dom(bx2[0]), dom(bx2[1]), componentwiseEq(bx2[0], bx2[1])};
    bwd.rhs = eqAt(bx2[0], bx2[1]);
    obs.push_back({"eqpres_bwd:" + s, bwd, inT});
  }

  for (const auto& r : f.src.sig.relations) {
    // Congruence: related tuples stay related along the equality images.
    Context xs, ys;
    for (size_t i = 0; i < r.domain.size(); ++i) {
      xs.push_back({"x" + std::to_string(i + 1), r.domain[i]});
      ys.push_back({"y" + std::to_string(i + 1), r.domain[i]});
    }
    auto bx = f.imageBlocks(xs);
    auto by = f.imageBlocks(ys);
    const SubstitutionClass& img = f.relImages.at(r.name);

    auto flat = [&](const std::vector<std::vector<TermPtr>>& blocks) {
      std::vector<TermPtr> out;
      for (const auto& blk : blocks) out.insert(out.end(), blk.begin(), blk.end());
      return out;
    };

    Sequent cong;
    cong.label = "cong_" + r.name;
    for (size_t i = 0; i < xs.size(); ++i) {
      const SortImage& si = f.sortImage(r.domain[i]);
      cong.lhs.push_back(instantiate(si.domain, bx[i]));
      cong.lhs.push_back(instantiate(si.domain, by[i]));
      std::vector<TermPtr> pair = bx[i];
      pair.insert(pair.end(), by[i].begin(), by[i].end());
      cong.lhs.push_back(instantiate(si.equality, pair));
    }
    cong.lhs.push_back(instantiate(img, flat(bx)));
    cong.rhs = instantiate(img, flat(by));
    obs.push_back({"cong:" + r.name, cong, inT});
  }

  for (const auto& fn : f.src.sig.functions) {
    Context xs;
    for (size_t i = 0; i < fn.domain.size(); ++i)
      xs.push_back({"x" + std::to_string(i + 1), fn.domain[i]});
    auto bx = f.imageBlocks(xs);
    const SortImage& cod = f.sortImage(fn.codomain);
    const SubstitutionClass& img = f.funImages.at(fn.name);

    auto flatWith = [&](const std::vector<std::vector<TermPtr>>& blocks,
                        const std::vector<TermPtr>& res) {
      std::vector<TermPtr> out;
      for (const auto& blk : blocks) out.insert(out.end(), blk.begin(), blk.end());
      out.insert(out.end(), res.begin(), res.end());
      return out;
    };

    // Totality: inside the argument domains the graph has a value in the
    // codomain domain.
    Context yBlock = blockOf("y", cod.image);
    std::vector<TermPtr> yTerms;
    for (const auto& tv : yBlock) yTerms.push_back(mkVar(tv.name, tv.sort));
    FormulaPtr exist = fAnd(instantiate(cod.domain, yTerms),
                            instantiate(img, flatWith(bx, yTerms)));
    for (auto it = yBlock.rbegin(); it != yBlock.rend(); ++it)
      exist = fExists(it->name, it->sort, exist);

    Sequent total;
    total.label = "total_" + fn.name;
    for (size_t i = 0; i < xs.size(); ++i)
      total.lhs.push_back(instantiate(f.sortImage(fn.domain[i]).domain, bx[i]));
    total.rhs = exist;
    obs.push_back({"total:" + fn.name, total, inT});

    // Functionality with argument congruence: equal-in-E arguments give
    // equal-in-E results.
    Context xps;
    for (size_t i = 0; i < fn.domain.size(); ++i)
      xps.push_back({"xp" + std::to_string(i + 1), fn.domain[i]});
    auto bxp = f.imageBlocks(xps);
    Context yB = blockOf("y", cod.image);
    Context ypB = blockOf("yp", cod.image);
    std::vector<TermPtr> y1, y2;
    for (const auto& tv : yB) y1.push_back(mkVar(tv.name, tv.sort));
    for (const auto& tv : ypB) y2.push_back(mkVar(tv.name, tv.sort));

    Sequent func;
    func.label = "func_" + fn.name;
    for (size_t i = 0; i < xs.size(); ++i) {
      const SortImage& si = f.sortImage(fn.domain[i]);
      func.lhs.push_back(instantiate(si.domain, bx[i]));
      func.lhs.push_back(instantiate(si.domain, bxp[i]));
      std::vector<TermPtr> pair = bx[i];
      pair.insert(pair.end(), bxp[i].begin(), bxp[i].end());
      func.lhs.push_back(instantiate(si.equality, pair));
    }
    func.lhs.push_back(instantiate(cod.domain, y1));
    func.lhs.push_back(instantiate(cod.domain, y2));
    func.lhs.push_back(instantiate(img, flatWith(bx, y1)));
    func.lhs.push_back(instantiate(img, flatWith(bxp, y2)));
    std::vector<TermPtr> resPair = y1;
    resPair.insert(resPair.end(), y2.begin(), y2.end());
    func.rhs = instantiate(cod.equality, resPair);
    obs.push_back({"func:" + fn.name, func, inT});
  }

  Translation out;
  out.recon = f;
  out.evidence = dischargeAll(obs, {&f.dst}, b);

  auto isEqPres = [](const std::string& n) { return n.rfind("eqpres", 0) == 0; };
  out.isTranslation = flagOverEntries(out.evidence.entries,
                                      [&](const std::string& n) { return !isEqPres(n); });
  out.isEqualityPreserving = flagOverEntries(out.evidence.entries, isEqPres);

  // Strength: equality preservation plus the syntactic condition that image
  // contexts have length one exactly when the source context does, i.e.
  // every sort image is a single slot.
  bool structural = true;
  for (const auto& s : f.src.sig.sorts)
    if (f.sortImage(s).image.size() != 1) structural = false;
  if (!structural)
    out.isStrong = Flag::Failed;
  else
    out.isStrong = out.isEqualityPreserving;
  return out;
}

// ---------------------------------------------------------------------------
// Model pullback

FiniteModel pullbackModel(const Reconstrual& f, const FiniteModel& m) {
  f.validate();
  m.validate(f.dst.sig);

  struct SortData {
    std::vector<std::vector<int>> domainTuples;
    std::vector<int> classOf;                 // index into reps, per tuple
    std::vector<std::vector<int>> reps;       // class representative tuples
  };
  std::map<std::string, SortData> data;

  auto evalAt = [&](const SubstitutionClass& cls, const std::vector<int>& values) {
    Assignment env;
    for (size_t i = 0; i < cls.ctx.size(); ++i) env[cls.ctx[i].name] = values[i];
    return evalFormula(m, cls.formula, env);
  };

  for (const auto& s : f.src.sig.sorts) {
    const SortImage& si = f.sortImage(s);
    SortData sd;
    // Enumerate image tuples satisfying the domain formula, lexicographically.
    std::vector<int> sizes;
    for (const auto& slot : si.image) sizes.push_back(m.carrierSize(slot.sort));
    std::vector<int> tuple(sizes.size(), 0);
    bool any = std::all_of(sizes.begin(), sizes.end(), [](int n) { return n > 0; });
    while (any) {
      if (evalAt(si.domain, tuple)) sd.domainTuples.push_back(tuple);
      size_t k = 0;
      for (; k < tuple.size(); ++k) {
        if (++tuple[k] < sizes[k]) break;
        tuple[k] = 0;
      }
      if (k == tuple.size()) break;
    }

    auto eqTuples = [&](const std::vector<int>& a, const std::vector<int>& c) {
      std::vector<int> both = a;
      both.insert(both.end(), c.begin(), c.end());
      return evalAt(si.equality, both);
    };

    // The equality image must be an equivalence on the domain tuples.
    for (const auto& a : sd.domainTuples)
      if (!eqTuples(a, a))
        throw InputError("equality image of sort " + s +
                         " is not reflexive on this model");
    for (const auto& a : sd.domainTuples)
      for (const auto& c : sd.domainTuples) {
        if (eqTuples(a, c) != eqTuples(c, a))
          throw InputError("equality image of sort " + s +
                           " is not symmetric on this model");
        for (const auto& e : sd.domainTuples)
          if (eqTuples(a, c) && eqTuples(c, e) && !eqTuples(a, e))
            throw InputError("equality image of sort " + s +
                             " is not transitive on this model");
      }

    // Classes, first tuple (lexicographically least) as representative.
    sd.classOf.assign(sd.domainTuples.size(), -1);
    for (size_t i = 0; i < sd.domainTuples.size(); ++i) {
      if (sd.classOf[i] != -1) continue;
      int cls = static_cast<int>(sd.reps.size());
      sd.reps.push_back(sd.domainTuples[i]);
      for (size_t j = i; j < sd.domainTuples.size(); ++j)
        if (sd.classOf[j] == -1 && eqTuples(sd.domainTuples[i], sd.domainTuples[j]))
          sd.classOf[j] = cls;
    }
    data[s] = std::move(sd);
  }

  FiniteModel out;
  out.name = f.name + "_" + m.name;
  for (const auto& s : f.src.sig.sorts) {
    std::vector<std::string> elems;
    for (const auto& rep : data[s].reps) {
      std::string name = "c";
      for (int v : rep) name += "_" + std::to_string(v);
      elems.push_back(name);
    }
    out.carriers[s] = std::move(elems);
  }

  for (const auto& r : f.src.sig.relations) {
    auto& table = out.relations[r.name];
    const SubstitutionClass& img = f.relImages.at(r.name);
    // All class tuples; evaluate the image at the representatives.
    std::vector<int> counts;
    for (const auto& d : r.domain)
      counts.push_back(static_cast<int>(data[d].reps.size()));
    std::vector<int> idx(counts.size(), 0);
    bool any = std::all_of(counts.begin(), counts.end(), [](int n) { return n > 0; });
    while (any) {
      std::vector<int> values;
      for (size_t i = 0; i < idx.size(); ++i) {
        const auto& rep = data[r.domain[i]].reps[idx[i]];
        values.insert(values.end(), rep.begin(), rep.end());
      }
      if (evalAt(img, values)) table.insert(idx);
      size_t k = 0;
      for (; k < idx.size(); ++k) {
        if (++idx[k] < counts[k]) break;
        idx[k] = 0;
      }
      if (k == idx.size()) break;
    }
  }

  for (const auto& fn : f.src.sig.functions) {
    auto& table = out.functions[fn.name];
    const SubstitutionClass& img = f.funImages.at(fn.name);
    const SortData& cod = data.at(fn.codomain);
    std::vector<int> counts;
    for (const auto& d : fn.domain)
      counts.push_back(static_cast<int>(data[d].reps.size()));
    std::vector<int> idx(counts.size(), 0);
    bool any = std::all_of(counts.begin(), counts.end(), [](int n) { return n > 0; });
    while (any) {
      std::vector<int> args;
      for (size_t i = 0; i < idx.size(); ++i) {
        const auto& rep = data[fn.domain[i]].reps[idx[i]];
        args.insert(args.end(), rep.begin(), rep.end());
      }
      // Find the class of the value: any domain tuple of the codomain whose
      // graph holds. Distinct satisfying classes mean the image is not
      // functional on this model.
      int found = -1;
      for (size_t ti = 0; ti < cod.domainTuples.size(); ++ti) {
        std::vector<int> full = args;
        full.insert(full.end(), cod.domainTuples[ti].begin(),
                    cod.domainTuples[ti].end());
        if (evalAt(img, full)) {
          if (found != -1 && cod.classOf[ti] != found)
            throw InputError("image of function " + fn.name +
                             " is not single-valued on this model");
          found = cod.classOf[ti];
        }
      }
      if (found == -1)
        throw InputError("image of function " + fn.name +
                         " has no value on this model");
      table[idx] = found;
      size_t k = 0;
      for (; k < idx.size(); ++k) {
        if (++idx[k] < counts[k]) break;
        idx[k] = 0;
      }
      if (k == idx.size()) break;
    }
  }
  return out;
}

}  // namespace cohlog
