#pragma once

// Bounded proof search for coherent sequents: ground forward chaining
// (saturation) with congruence closure, fresh existential witnesses, and
// case splits on disjunctive conclusions. Outcomes are three-valued; Proved
// carries a replayable trace and Refuted carries a finite countermodel that
// has been re-verified independently. See docs/calculus.md for the calculus
// and the budget semantics.

#include <optional>
#include <string>
#include <vector>

#include "cohlog/ast.hpp"
#include "cohlog/model.hpp"

namespace cohlog {

struct Budget {
  int rounds = 10;     // saturation rounds per branch
  int witnesses = 4;   // fresh existential witnesses per rule per branch
  int splits = 4;      // case-split depth
};

enum class Outcome { Proved, Refuted, Unknown };

std::string outcomeName(Outcome o);

struct ProofResult {
  Outcome outcome = Outcome::Unknown;
  // Proved: one line per inference, replayable against the axioms.
  std::vector<std::string> trace;
  // Refuted: countermodel, re-verified with checkModel before being returned.
  std::optional<FiniteModel> countermodel;
  // Unknown: which resource ran out (rounds / witnesses / splits / terms).
  std::string reason;
};

// Proves T |- s within the budget. Classical-mode nodes (not / forall) in the
// axioms or the goal make the search return Unknown with a reason; parsing
// and typing them is supported but proof search is coherent-only.
ProofResult proveSequent(const Theory& t, const Sequent& s, const Budget& b);

// Decision procedure for propositional coherent sequents by valuation
// enumeration. Requires a signature with no sorts and no functions; throws
// InputError otherwise. Sound and complete: a coherent sequent is provable
// classically iff coherently.
bool decidePropositional(const Theory& t, const Sequent& s);

// Replays a Proved trace against the theory, checking each step is licensed.
// Used by tests; returns false with a reason on the first bad step.
bool validateTrace(const Theory& t, const Sequent& s,
                   const std::vector<std::string>& trace, std::string* whyNot);

}  // namespace cohlog
