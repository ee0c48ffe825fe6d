#include "cohlog/tmap.hpp"

#include <algorithm>

namespace cohlog {

namespace {

FormulaPtr instantiate(const SubstitutionClass& cls, const std::vector<TermPtr>& terms) {
  if (cls.ctx.size() != terms.size())
    throw InputError("t-map component instantiated at " +
                     std::to_string(terms.size()) + " terms, context has " +
                     std::to_string(cls.ctx.size()));
  return substitute(cls.formula, cls.ctx, terms);
}

std::vector<TermPtr> concat(const std::vector<TermPtr>& a,
                            const std::vector<TermPtr>& b) {
  std::vector<TermPtr> out = a;
  out.insert(out.end(), b.begin(), b.end());
  return out;
}

const SubstitutionClass& componentOf(const TMap& chi, const std::string& sort) {
  auto it = chi.components.find(sort);
  if (it == chi.components.end())
    throw InputError("t-map " + chi.name + " has no component for sort '" + sort + "'");
  return it->second;
}

void validateTMap(const TMap& chi) {
  if (chi.from.src.name != chi.to.src.name || chi.from.dst.name != chi.to.dst.name ||
      !(chi.from.src.sig == chi.to.src.sig) || !(chi.from.dst.sig == chi.to.dst.sig))
    throw InputError("t-map " + chi.name + " endpoints do not match: " +
                     chi.from.name + " vs " + chi.to.name);
  for (const auto& s : chi.from.src.sig.sorts) {
    const SubstitutionClass& c = componentOf(chi, s);
    const Context& fi = chi.from.sortImage(s).image;
    const Context& gi = chi.to.sortImage(s).image;
    if (c.ctx.size() != fi.size() + gi.size())
      throw InputError("component for sort " + s + " has context width " +
                       std::to_string(c.ctx.size()) + ", expected " +
                       std::to_string(fi.size() + gi.size()));
    for (size_t i = 0; i < fi.size(); ++i)
      if (c.ctx[i].sort != fi[i].sort)
        throw InputError("component for sort " + s + " mismatches the source image");
    for (size_t i = 0; i < gi.size(); ++i)
      if (c.ctx[fi.size() + i].sort != gi[i].sort)
        throw InputError("component for sort " + s + " mismatches the target image");
    typecheckFormula(chi.from.dst.sig, c.formula, chi.from.dst.classical);
  }
}

// Renames the source context positionally and collects the image blocks on
// both sides, plus their domain formulas and the chi components, so the
// per-sort and naturality obligations share one assembly.
struct SidePair {
  Context xs, ys;                                // renamed source contexts
  std::vector<std::vector<TermPtr>> fb, gb;      // image blocks, F side / G side
  std::vector<FormulaPtr> domains;               // D_F and D_G of every block
  std::vector<FormulaPtr> links;                 // chi component per variable
};

SidePair sidesAt(const TMap& chi, const std::vector<std::string>& sorts) {
  SidePair sp;
  for (size_t i = 0; i < sorts.size(); ++i) {
    sp.xs.push_back({"x" + std::to_string(i + 1), sorts[i]});
    sp.ys.push_back({"y" + std::to_string(i + 1), sorts[i]});
  }
  sp.fb = chi.from.imageBlocks(sp.xs);
  sp.gb = chi.to.imageBlocks(sp.ys);
  for (size_t i = 0; i < sorts.size(); ++i) {
    sp.domains.push_back(instantiate(chi.from.sortImage(sorts[i]).domain, sp.fb[i]));
    sp.domains.push_back(instantiate(chi.to.sortImage(sorts[i]).domain, sp.gb[i]));
    sp.links.push_back(instantiate(componentOf(chi, sorts[i]), concat(sp.fb[i], sp.gb[i])));
  }
  return sp;
}

// F phi with the source context renamed apart (x side / y side).
FormulaPtr imageAt(const Reconstrual& f, const FormulaPtr& phi, const Context& src,
                   const Context& renamed) {
  std::vector<TermPtr> terms;
  for (const auto& v : renamed) terms.push_back(mkVar(v.name, v.sort));
  return applyReconstrual(f, substitute(phi, src, terms));
}

}  // namespace

FormulaPtr tmapAtContext(const TMap& chi, const Context& srcCtx,
                         const std::vector<std::vector<TermPtr>>& fromBlocks,
                         const std::vector<std::vector<TermPtr>>& toBlocks) {
  std::vector<FormulaPtr> parts;
  for (size_t i = 0; i < srcCtx.size(); ++i)
    parts.push_back(instantiate(componentOf(chi, srcCtx[i].sort),
                                concat(fromBlocks[i], toBlocks[i])));
  return fAndAll(parts);
}

VerificationReport verifyTMap(const TMap& chi, const Budget& b,
                              const std::vector<FormulaPtr>& extraNaturality) {
  validateTMap(chi);
  const Theory& src = chi.from.src;
  const std::string inT = chi.from.dst.name;
  std::vector<Obligation> obs;

  // Per-sort functional-relation obligations. Antecedents carry the domain
  // formulas of every block mentioned, matching the relativized reading of
  // the image contexts.
  for (const auto& s : src.sig.sorts) {
    const SortImage& fi = chi.from.sortImage(s);
    const SortImage& gi = chi.to.sortImage(s);
    const SubstitutionClass& c = componentOf(chi, s);

    Context x = {{"x", s}}, w = {{"w", s}}, y = {{"y", s}}, z = {{"z", s}};
    auto xb = chi.from.imageBlocks(x)[0];
    auto wb = chi.from.imageBlocks(w)[0];
    auto yb = chi.to.imageBlocks(y)[0];
    auto zb = chi.to.imageBlocks(z)[0];

    auto df = [&](const std::vector<TermPtr>& t) { return instantiate(fi.domain, t); };
    auto dg = [&](const std::vector<TermPtr>& t) { return instantiate(gi.domain, t); };
    auto ef = [&](const std::vector<TermPtr>& a, const std::vector<TermPtr>& c2) {
      return instantiate(fi.equality, concat(a, c2));
    };
    auto eg = [&](const std::vector<TermPtr>& a, const std::vector<TermPtr>& c2) {
      return instantiate(gi.equality, concat(a, c2));
    };
    auto link = [&](const std::vector<TermPtr>& a, const std::vector<TermPtr>& c2) {
      return instantiate(c, concat(a, c2));
    };

    Sequent dom;
    dom.label = "dom_" + s;
    dom.lhs = {link(xb, yb)};
    dom.rhs = fAnd(df(xb), dg(yb));
    obs.push_back({"dom:" + s, dom, inT});

    Sequent wd;
    wd.label = "wd_" + s;
    wd.lhs = {df(xb), df(wb), dg(yb), dg(zb), ef(xb, wb), eg(yb, zb), link(wb, zb)};
    wd.rhs = link(xb, yb);
    obs.push_back({"wd:" + s, wd, inT});

    // Existence: a value under chi inside the target domain.
    Context yBlock;
    {
      const Context& img = gi.image;
      if (img.size() == 1)
        yBlock.push_back({"y", img[0].sort});
      else
        for (const auto& slot : img) yBlock.push_back({"y_" + slot.name, slot.sort});
    }
    std::vector<TermPtr> yv;
    for (const auto& tv : yBlock) yv.push_back(mkVar(tv.name, tv.sort));
    FormulaPtr exist = fAnd(dg(yv), link(xb, yv));
    for (auto it = yBlock.rbegin(); it != yBlock.rend(); ++it)
      exist = fExists(it->name, it->sort, exist);
    Sequent ex;
    ex.label = "ex_" + s;
    ex.lhs = {df(xb)};
    ex.rhs = exist;
    obs.push_back({"ex:" + s, ex, inT});

    Sequent uniq;
    uniq.label = "uniq_" + s;
    uniq.lhs = {df(xb), dg(yb), dg(zb), link(xb, yb), link(xb, zb)};
    uniq.rhs = eg(yb, zb);
    obs.push_back({"uniq:" + s, uniq, inT});

    if (chi.isoClaimed) {
      Context xBlock;
      {
        const Context& img = fi.image;
        if (img.size() == 1)
          xBlock.push_back({"x", img[0].sort});
        else
          for (const auto& slot : img) xBlock.push_back({"x_" + slot.name, slot.sort});
      }
      std::vector<TermPtr> xv;
      for (const auto& tv : xBlock) xv.push_back(mkVar(tv.name, tv.sort));
      FormulaPtr existX = fAnd(df(xv), link(xv, yb));
      for (auto it = xBlock.rbegin(); it != xBlock.rend(); ++it)
        existX = fExists(it->name, it->sort, existX);
      Sequent onto;
      onto.label = "onto_" + s;
      onto.lhs = {dg(yb)};
      onto.rhs = existX;
      obs.push_back({"onto:" + s, onto, inT});

      Sequent inj;
      inj.label = "inj_" + s;
      inj.lhs = {df(xb), df(wb), dg(yb), link(xb, yb), link(wb, yb)};
      inj.rhs = ef(xb, wb);
      obs.push_back({"inj:" + s, inj, inT});
    }
  }

  // Naturality over the atomic generators: relation symbols, per-sort
  // equality, and function graphs. Closure under the connectives follows by
  // structural induction, so composite formulas only appear when supplied.
  struct Gen {
    std::string name;
    FormulaPtr phi;
    Context ctx;
  };
  std::vector<Gen> gens;
  for (const auto& r : src.sig.relations) {
    Context ctx;
    std::vector<TermPtr> args;
    for (size_t i = 0; i < r.domain.size(); ++i) {
      ctx.push_back({"v" + std::to_string(i + 1), r.domain[i]});
      args.push_back(mkVar(ctx.back().name, ctx.back().sort));
    }
    gens.push_back({"nat:" + r.name, fAtom(r.name, args), ctx});
  }
  for (const auto& s : src.sig.sorts) {
    Context ctx = {{"v1", s}, {"v2", s}};
    gens.push_back({"nat:eq:" + s, fEq(mkVar("v1", s), mkVar("v2", s)), ctx});
  }
  for (const auto& fn : src.sig.functions) {
    Context ctx;
    std::vector<TermPtr> args;
    for (size_t i = 0; i < fn.domain.size(); ++i) {
      ctx.push_back({"v" + std::to_string(i + 1), fn.domain[i]});
      args.push_back(mkVar(ctx.back().name, ctx.back().sort));
    }
    ctx.push_back({"u", fn.codomain});
    gens.push_back({"nat:graph:" + fn.name,
                    fEq(mkApp(src.sig, fn.name, args), mkVar("u", fn.codomain)), ctx});
  }
  int extraId = 0;
  for (const auto& phi : extraNaturality) {
    typecheckFormula(src.sig, phi, src.classical);
    gens.push_back({"nat:extra:" + std::to_string(++extraId), phi, freeContext(phi)});
  }

  for (const auto& gen : gens) {
    std::vector<std::string> sorts;
    for (const auto& v : gen.ctx) sorts.push_back(v.sort);
    SidePair sp = sidesAt(chi, sorts);

    std::string stem = gen.name;
    std::replace(stem.begin(), stem.end(), ':', '_');
    Sequent nat;
    nat.label = stem;
    nat.lhs = sp.domains;
    nat.lhs.insert(nat.lhs.end(), sp.links.begin(), sp.links.end());
    nat.lhs.push_back(imageAt(chi.from, gen.phi, gen.ctx, sp.xs));
    nat.rhs = imageAt(chi.to, gen.phi, gen.ctx, sp.ys);
    obs.push_back({gen.name, nat, inT});

    if (chi.isoClaimed) {
      Sequent rnat;
      rnat.label = "r" + nat.label;
      rnat.lhs = sp.domains;
      rnat.lhs.insert(rnat.lhs.end(), sp.links.begin(), sp.links.end());
      rnat.lhs.push_back(imageAt(chi.to, gen.phi, gen.ctx, sp.ys));
      rnat.rhs = imageAt(chi.from, gen.phi, gen.ctx, sp.xs);
      obs.push_back({"r" + gen.name, rnat, inT});
    }
  }

  return dischargeAll(obs, {&chi.from.dst}, b);
}

VerificationReport verifyHomotopyEquivalence(const Reconstrual& f,
                                             const Reconstrual& g,
                                             const TMap& chi1, const TMap& chi2,
                                             const Budget& b) {
  if (f.src.name != g.dst.name || f.dst.name != g.src.name)
    throw InputError("homotopy endpoints do not match: " + f.name + " and " + g.name);
  if (chi1.from.src.name != f.src.name || chi1.from.dst.name != f.src.name)
    throw InputError("first t-map must connect endotranslations of " + f.src.name);
  if (chi2.from.src.name != f.dst.name || chi2.from.dst.name != f.dst.name)
    throw InputError("second t-map must connect endotranslations of " + f.dst.name);

  VerificationReport rep;
  auto absorb = [&rep](const VerificationReport& part, const std::string& prefix) {
    for (auto e : part.entries) {
      e.obligation.name = prefix + ":" + e.obligation.name;
      rep.entries.push_back(std::move(e));
    }
    if (!part.note.empty())
      rep.note += (rep.note.empty() ? "" : "; ") + part.note;
  };

  // Only translationhood is required of the two legs. The equality
  // preservation comparison (eqpres_*) is reported by verifyTranslation for
  // its own sake but is not part of being a homotopy equivalence: quotient
  // retractions are equivalences precisely without it.
  auto legEvidence = [](const Translation& tr) {
    VerificationReport ev;
    for (const auto& e : tr.evidence.entries)
      if (e.obligation.name.rfind("eqpres_", 0) != 0) ev.entries.push_back(e);
    ev.note = tr.evidence.note;
    return ev;
  };
  absorb(legEvidence(verifyTranslation(f, b)), f.name);
  absorb(legEvidence(verifyTranslation(g, b)), g.name);

  TMap c1 = chi1;
  c1.isoClaimed = true;
  TMap c2 = chi2;
  c2.isoClaimed = true;
  absorb(verifyTMap(c1, b), chi1.name);
  absorb(verifyTMap(c2, b), chi2.name);
  return rep;
}

}  // namespace cohlog
