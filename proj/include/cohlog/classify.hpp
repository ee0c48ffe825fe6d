#pragma once

// Propositionality analysis (the equivalent-conditions checklist plus the
// coproduct-of-sentences decomposition) and the canonical round trip through
// the syntactic slice.

#include <optional>
#include <string>
#include <vector>

#include "cohlog/lattice.hpp"
#include "cohlog/model.hpp"
#include "cohlog/obligation.hpp"
#include "cohlog/reconstrual.hpp"
#include "cohlog/slice.hpp"

namespace cohlog {

struct ConditionVerdict {
  std::string name;      // stable id, e.g. "monic-terminal-maps"
  std::string detail;    // one-line description of what was checked
  Outcome verdict = Outcome::Unknown;
  bool derived = false;  // true when inferred from an equivalent condition
  std::vector<ObligationResult> evidence;
  std::optional<FiniteModel> witness;  // countermodel for a Failed verdict
};

struct Decomposition {
  std::string objectClass;                 // printed class being decomposed
  std::vector<FormulaPtr> sentences;       // the summands (n may be 0)
  std::vector<SubstitutionClass> injections;
  VerificationReport evidence;
};

struct PropositionalityReport {
  std::vector<ConditionVerdict> conditions;
  Outcome propositional = Outcome::Unknown;
  Outcome parapropositional = Outcome::Unknown;
  std::vector<Decomposition> decompositions;   // per class, when found
  std::vector<std::string> undecomposed;       // classes with no decomposition found
  std::vector<std::string> notes;
  int depth = 0;
};

PropositionalityReport classifyPropositionality(const Theory& t, int depth,
                                                const Budget& b);

// Round trip through the syntactic slice: builds the slice, its internal
// theory, the interpretation of T into that internal theory and back, and
// checks the composite fixes T up to provable bi-entailment on every corpus
// class at the depth bound. The numeric gate (counts below) ranges over the
// bi-entailment family only; the interpretation's translation obligations are
// reported alongside.
struct RoundTripReport {
  SyntacticSlice slice;
  Theory internal;
  VerificationReport equivalences;    // composite(phi) -||- phi per class
  VerificationReport interpretation;  // translationhood of the forward leg
  int classesChecked = 0;
  int proved = 0, failed = 0, unknown = 0;
  std::vector<std::string> unknownClasses;
  std::vector<std::string> notes;
};

RoundTripReport canonicalRoundTrip(const Theory& t, int depth, const Budget& b);

}  // namespace cohlog
