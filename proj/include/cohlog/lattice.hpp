#pragma once

// Lindenbaum order of sentences up to provable bi-entailment, bounded
// distributive lattice views, and the existential reflector from classes to
// sentences.

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "cohlog/prover.hpp"
#include "cohlog/slice.hpp"
#include "cohlog/subst.hpp"

namespace cohlog {

struct BDLattice {
  std::vector<std::string> elements;          // printed representatives
  std::vector<FormulaPtr> reps;               // same order
  std::vector<std::vector<bool>> leq;         // leq[i][j]: element i <= j
  std::map<std::pair<int, int>, int> meet;    // conjunction class
  std::map<std::pair<int, int>, int> join;    // disjunction class
  int top = -1, bottom = -1;
  bool complete = true;                       // false if Unknowns or caps interfered
  std::vector<std::string> notes;

  int size() const { return static_cast<int>(elements.size()); }
};

// Sentence classes at the depth bound, ordered by provable entailment,
// closed under meet and join (closure can add classes beyond the corpus; a
// closure cap marks the lattice incomplete rather than looping).
BDLattice lindenbaum(const Theory& t, int depth, const Budget& b);

// The lattice of a thin presentation: objects ordered by arrow existence.
// Throws InputError when the presentation is not thin.
BDLattice latticeOfThinCat(const FinCat& c);

// Order isomorphism test by exhaustive matching (fine at desk scale).
bool latticeIsomorphic(const BDLattice& a, const BDLattice& b);

// [phi over ctx] -> the sentence closing the whole context existentially.
FormulaPtr existentialReflector(const SubstitutionClass& phi);

}  // namespace cohlog
