#include "cohlog/proper.hpp"

#include "cohlog/prover.hpp"
#include "cohlog/subst.hpp"

namespace cohlog {

namespace {

FormulaPtr closeExistentially(const Context& ctx, FormulaPtr body) {
  for (auto it = ctx.rbegin(); it != ctx.rend(); ++it)
    body = fExists(it->name, it->sort, body);
  return body;
}

std::vector<Obligation> realizationObligations(const Context& ctx,
                                               const FormulaPtr& phi,
                                               const FormulaPtr& psi,
                                               const std::string& theoryName) {
  Sequent inhabPhi{"proper_inhab_phi", {}, closeExistentially(ctx, phi)};
  Sequent inhabPsi{"proper_inhab_psi", {}, closeExistentially(ctx, psi)};
  Sequent disjoint{"proper_disjoint", {phi, psi}, fBot()};
  return {{"inhab:phi", inhabPhi, theoryName},
          {"inhab:psi", inhabPsi, theoryName},
          {"disjoint", disjoint, theoryName}};
}

}  // namespace

std::optional<Realization> findProperRealization(const Theory& t, int depth,
                                                 const Budget& b,
                                                 std::vector<std::string>* log) {
  std::vector<Context> contexts;
  for (const auto& s : t.sig.sorts) contexts.push_back({{"x", s}});
  for (const auto& s1 : t.sig.sorts)
    for (const auto& s2 : t.sig.sorts) contexts.push_back({{"x", s1}, {"y", s2}});

  for (const auto& ctx : contexts) {
    std::vector<FormulaPtr> cands = enumerateCandidateFormulas(t, ctx, depth);

    // Inhabitation is a property of one formula; settle it once each.
    std::vector<Outcome> inhab;
    for (const auto& phi : cands) {
      Sequent s{"proper_inhab", {}, closeExistentially(ctx, phi)};
      Outcome o = proveSequent(t, s, b).outcome;
      if (o == Outcome::Unknown && log)
        log->push_back("skipped " + printFormula(phi) + " at [" +
                       printContext(ctx) + "]: inhabitation unknown");
      inhab.push_back(o);
    }

    for (size_t i = 0; i < cands.size(); ++i) {
      if (inhab[i] != Outcome::Proved) continue;
      for (size_t j = i + 1; j < cands.size(); ++j) {
        if (inhab[j] != Outcome::Proved) continue;
        Sequent disjoint{"proper_disjoint", {cands[i], cands[j]}, fBot()};
        Outcome o = proveSequent(t, disjoint, b).outcome;
        if (o == Outcome::Unknown && log)
          log->push_back("skipped (" + printFormula(cands[i]) + ", " +
                         printFormula(cands[j]) + "): disjointness unknown");
        if (o != Outcome::Proved) continue;
        Realization r;
        r.ctx = ctx;
        r.phi = cands[i];
        r.psi = cands[j];
        r.evidence = dischargeAll(
            realizationObligations(ctx, r.phi, r.psi, t.name), {&t}, b);
        return r;
      }
    }
  }
  return std::nullopt;
}

TransportResult transportProperness(const Reconstrual& f, const Realization& r,
                                    const Budget& b) {
  f.validate();
  Context imgCtx = f.imageContext(r.ctx);
  std::vector<std::vector<TermPtr>> blocks = f.imageBlocks(r.ctx);

  std::vector<FormulaPtr> domains;
  for (size_t i = 0; i < r.ctx.size(); ++i) {
    const SortImage& si = f.sortImage(r.ctx[i].sort);
    FormulaPtr d = substitute(si.domain.formula, si.domain.ctx, blocks[i]);
    // Trivial domains add nothing; dropping them keeps the images of
    // trivial-domain translations literally unchanged.
    if (d->kind != FK::Top) domains.push_back(d);
  }

  auto relativize = [&](const FormulaPtr& phi) {
    std::vector<FormulaPtr> parts = domains;
    parts.push_back(applyReconstrual(f, phi));
    return fAndAll(parts);
  };

  TransportResult out;
  out.transported.ctx = imgCtx;
  out.transported.phi = relativize(r.phi);
  out.transported.psi = relativize(r.psi);
  out.report = dischargeAll(
      realizationObligations(imgCtx, out.transported.phi, out.transported.psi,
                             f.dst.name),
      {&f.dst}, b);
  out.transported.evidence = out.report;
  return out;
}

CoproductElimination eliminateCoproduct(const Theory& t, const Realization& r,
                                        const std::string& sort1,
                                        const std::string& sort2, const Budget& b) {
  if (r.ctx.size() != 1)
    throw InputError("coproduct elimination needs a single-variable realization");
  if (!t.sig.hasSort(sort1) || !t.sig.hasSort(sort2))
    throw InputError("coproduct elimination: unknown summand sort");
  const std::string sigma = r.ctx[0].sort;

  CoproductElimination out;
  Theory cur = t;
  auto push = [&](const ExtensionStep& step) {
    ExtensionResult res = extendMorita(cur, step);
    cur = res.extended;
    out.chain.steps.push_back(step);
    for (const auto& o : res.obligations) out.chain.obligations.push_back(o);
    out.chain.results.push_back(std::move(res));
  };

  // Subsort of the realization sort carved out by phi | psi.
  const std::string tau = freshSortName(cur.sig, "tau");
  const std::string itau = freshFunName(cur.sig, "i_" + tau);
  push(SubsortStep{tau, itau, SubstitutionClass{fOr(r.phi, r.psi), r.ctx}});

  // phi / psi read off a tau element through the inclusion.
  auto phiAt = [&](const TermPtr& z) {
    return substitute(r.phi, r.ctx, {mkApp(cur.sig, itau, {z})});
  };
  auto psiAt = [&](const TermPtr& z) {
    return substitute(r.psi, r.ctx, {mkApp(cur.sig, itau, {z})});
  };

  // Triple product: one slot per summand plus the selector slot.
  const std::string prod = freshSortName(cur.sig, "P");
  const std::string pi1 = freshFunName(cur.sig, "pi1");
  const std::string pi2 = freshFunName(cur.sig, "pi2");
  const std::string pi3 = freshFunName(cur.sig, "pi3");
  push(ProductStep{prod, {sort1, sort2, tau}, {pi1, pi2, pi3}});

  // Mixing relation: the selector slots agree on phi and the first summand
  // slots coincide, or they agree on psi and the second summand slots do.
  const std::string mix = freshRelName(cur.sig, "mix");
  {
    Context ctx6 = {{"x1", sort1}, {"y1", sort2}, {"z1", tau},
                    {"x2", sort1}, {"y2", sort2}, {"z2", tau}};
    TermPtr x1 = mkVar("x1", sort1), y1 = mkVar("y1", sort2), z1 = mkVar("z1", tau);
    TermPtr x2 = mkVar("x2", sort1), y2 = mkVar("y2", sort2), z2 = mkVar("z2", tau);
    FormulaPtr left = fAndAll({phiAt(z1), phiAt(z2), fEq(x1, x2)});
    FormulaPtr right = fAndAll({psiAt(z1), psiAt(z2), fEq(y1, y2)});
    push(DefRelStep{mix, SubstitutionClass{fOr(left, right), ctx6}});
  }

  // Quotient of the product by the mixing relation at the projections.
  const std::string qsort = freshSortName(cur.sig, sort1 + "_plus_" + sort2);
  const std::string surj = freshFunName(cur.sig, "q_" + qsort);
  {
    TermPtr p1 = mkVar("p1", prod), p2 = mkVar("p2", prod);
    auto projected = [&](const TermPtr& p) {
      return std::vector<TermPtr>{mkApp(cur.sig, pi1, {p}), mkApp(cur.sig, pi2, {p}),
                                  mkApp(cur.sig, pi3, {p})};
    };
    std::vector<TermPtr> args = projected(p1);
    std::vector<TermPtr> rest = projected(p2);
    args.insert(args.end(), rest.begin(), rest.end());
    push(QuotientStep{qsort, surj,
                      SubstitutionClass{fAtom(mix, args), {{"p1", prod}, {"p2", prod}}}});
  }

  // Injections as definitional functions into the quotient.
  auto injectionGraph = [&](const std::string& argSort, const std::string& prj,
                            bool viaPhi) {
    Context gctx = {{"x", argSort}, {"y", qsort}};
    TermPtr x = mkVar("x", argSort), y = mkVar("y", qsort);
    TermPtr z = mkVar("z", tau), p = mkVar("p", prod);
    FormulaPtr inner = fAndAll({fEq(mkApp(cur.sig, prj, {p}), x),
                                fEq(mkApp(cur.sig, pi3, {p}), z),
                                fEq(mkApp(cur.sig, surj, {p}), y)});
    FormulaPtr body = fAnd(viaPhi ? phiAt(z) : psiAt(z),
                           fExists("p", prod, inner));
    return SubstitutionClass{fExists("z", tau, body), gctx};
  };
  const std::string inj1 = freshFunName(cur.sig, "inj1");
  push(DefFunStep{inj1, injectionGraph(sort1, pi1, true)});
  const std::string inj2 = freshFunName(cur.sig, "inj2");
  push(DefFunStep{inj2, injectionGraph(sort2, pi2, false)});

  out.chain.top = cur;
  out.coproductSort = qsort;
  out.injections = {inj1, inj2};

  // Coproduct laws for the constructed sort, settled by the prover in the
  // final theory.
  std::vector<Obligation> obs = out.chain.obligations;
  {
    TermPtr w = mkVar("w", qsort);
    Sequent cover{qsort + "_cover",
                  {},
                  fOr(fExists("x", sort1,
                              fEq(mkApp(cur.sig, inj1, {mkVar("x", sort1)}), w)),
                      fExists("x", sort2,
                              fEq(mkApp(cur.sig, inj2, {mkVar("x", sort2)}), w)))};
    obs.push_back({"law:cover", cover, cur.name});

    TermPtr u1 = mkVar("x", sort1), v1 = mkVar("y", sort1);
    Sequent injA{qsort + "_inj1",
                 {fEq(mkApp(cur.sig, inj1, {u1}), mkApp(cur.sig, inj1, {v1}))},
                 fEq(u1, v1)};
    obs.push_back({"law:inj:1", injA, cur.name});

    TermPtr u2 = mkVar("x", sort2), v2 = mkVar("y", sort2);
    Sequent injB{qsort + "_inj2",
                 {fEq(mkApp(cur.sig, inj2, {u2}), mkApp(cur.sig, inj2, {v2}))},
                 fEq(u2, v2)};
    obs.push_back({"law:inj:2", injB, cur.name});

    Sequent disj{qsort + "_disjoint",
                 {fEq(mkApp(cur.sig, inj1, {u1}), mkApp(cur.sig, inj2, {u2}))},
                 fBot()};
    obs.push_back({"law:disjoint", disj, cur.name});
  }

  std::vector<const Theory*> ptrs{&t};
  for (const auto& res : out.chain.results) ptrs.push_back(&res.extended);
  out.report = dischargeAll(obs, ptrs, b);
  return out;
}

}  // namespace cohlog
