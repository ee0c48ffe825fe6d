#pragma once

// Transformations between reconstruals sharing endpoints (t-maps): one
// component formula per source sort, relating the two image contexts.
// Verification discharges domain-matching, well-definedness, existence,
// uniqueness, and naturality; isomorphisms add onto / one-to-one and reverse
// naturality.

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "cohlog/obligation.hpp"
#include "cohlog/reconstrual.hpp"

namespace cohlog {

struct TMap {
  std::string name;
  Reconstrual from, to;  // parallel: same src and dst theories
  // chi_sigma over from.image(sigma) . to.image(sigma)
  std::map<std::string, SubstitutionClass> components;
  bool isoClaimed = false;
};

// The component for a whole context: conjunction of per-variable components,
// over the concatenation from-image(ctx) . to-image(ctx).
FormulaPtr tmapAtContext(const TMap& chi, const Context& srcCtx,
                         const std::vector<std::vector<TermPtr>>& fromBlocks,
                         const std::vector<std::vector<TermPtr>>& toBlocks);

// Naturality is checked for atomic formulas, equalities, and function graphs
// by default; callers may supply additional source formulas (each over its
// own free context).
VerificationReport verifyTMap(const TMap& chi, const Budget& b,
                              const std::vector<FormulaPtr>& extraNaturality = {});

// chi1 : G.F => identity on F.src (either orientation), chi2 : F.G =>
// identity on F.dst (either orientation); both must verify as t-map
// isomorphisms. F and G need not be pre-verified; their translation
// obligations are included in the report.
VerificationReport verifyHomotopyEquivalence(const Reconstrual& f,
                                             const Reconstrual& g,
                                             const TMap& chi1, const TMap& chi2,
                                             const Budget& b);

}  // namespace cohlog
