#pragma once

// Properness: two provably inhabited, provably disjoint formulas in a shared
// context. Includes transport along translations and the coproduct
// construction from a proper realization (subsort of the disjunction, triple
// product, mixing relation, quotient, definitional injections).

#include <optional>
#include <string>
#include <vector>

#include "cohlog/morita.hpp"
#include "cohlog/obligation.hpp"
#include "cohlog/reconstrual.hpp"

namespace cohlog {

struct Realization {
  Context ctx;          // shared context of both formulas
  FormulaPtr phi, psi;
  VerificationReport evidence;  // inhabitation of each, disjointness
};

// Enumerates candidate pairs over single-variable contexts (then two-variable
// ones) in canonical order up to the depth bound; returns the first pair
// whose three obligations are Proved. The log records pairs skipped with
// Unknown status, so a miss is distinguishable from a refutation.
std::optional<Realization> findProperRealization(const Theory& t, int depth,
                                                 const Budget& b,
                                                 std::vector<std::string>* log = nullptr);

// Images of a realization under a reconstrual, relativized by the domain
// formulas, re-proved in the target theory.
struct TransportResult {
  Realization transported;
  VerificationReport report;
};
TransportResult transportProperness(const Reconstrual& f, const Realization& r,
                                    const Budget& b);

// Builds sort1 + sort2 out of a single-variable proper realization:
//   tau     subsort of the realization's sort by phi | psi
//   P       product sort1 * sort2 * tau
//   mix     six-slot mixing relation (defined): both tau slots satisfy phi
//           and the sort1 slots agree, or both satisfy psi and the sort2
//           slots agree
//   Q       quotient of P by the induced relation on pairs
//   inj1/2  definitional functions sort1 -> Q, sort2 -> Q
// The report carries the admissibility obligations of the chain plus the
// coproduct laws for Q (covering, injectivity, disjointness) as obligations
// in the extended theory. No metatheorem is claimed; the laws are emitted
// for the prover to settle.
struct CoproductElimination {
  ChainResult chain;
  std::string coproductSort;
  std::vector<std::string> injections;
  VerificationReport report;
};
CoproductElimination eliminateCoproduct(const Theory& t, const Realization& r,
                                        const std::string& sort1,
                                        const std::string& sort2, const Budget& b);

}  // namespace cohlog
