#pragma once

// A finite slice of the syntactic category of a theory: objects are
// substitution classes up to provable bi-entailment (at the depth bound),
// morphisms are provable functional graphs, composition goes through the
// existential composite. Designated structure (products, equalizers,
// terminal, joins, bottom, covers) is synthesized canonically, so the slice
// exports a presentation whose internal theory supports the round trip.

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "cohlog/category.hpp"
#include "cohlog/obligation.hpp"
#include "cohlog/prover.hpp"
#include "cohlog/subst.hpp"

namespace cohlog {

struct SliceObject {
  SubstitutionClass rep;               // canonical representative
  std::vector<std::string> members;    // printed classes merged into this one
  std::string catName;                 // object name in the exported presentation
};

struct SliceMorphism {
  int dom = 0, cod = 0;                // object indices
  SubstitutionClass graph;             // over dom.ctx . cod.ctx
  std::string provenance;              // "enumerated", "substitution", "pairing", ...
  std::string catName;
};

struct SyntacticSlice {
  Theory theory;
  int depth = 0;
  Budget budget;
  std::vector<SliceObject> objects;
  std::vector<SliceMorphism> morphisms;
  std::map<std::pair<int, int>, int> compose;  // (g, f) -> g.f by morphism index
  std::vector<int> identities;                 // per object: morphism index

  // Designated structure by object/morphism index.
  struct Prod { int prod, left, right, p1, p2; };
  struct Equa { int eq, f, g, arrow; };
  std::vector<Prod> products;
  std::vector<Equa> equalizers;
  int terminal = -1;
  int bottom = -1;                             // the [bot] object
  std::map<int, std::vector<int>> subobjects;  // object -> mono-morphism indexes
  struct Join { int object, m1, m2, join; };
  std::vector<Join> joins;
  std::vector<int> covers;

  bool complete = true;        // false when caps were hit or Unknowns forced splits
  std::vector<std::string> notes;

  FinCat toPresentation() const;
};

// Builds the slice at the given depth: corpus enumeration (formula nodes
// counted, terms of depth <= 1 in atom arguments, three variables per sort),
// class merging by proved bi-entailment with finite-model prefilters,
// morphism enumeration plus substitution-graph synthesis, composition
// closure, and canonical designations.
SyntacticSlice syntacticSlice(const Theory& t, int depth, const Budget& b);

// Subobject order test between two formulas in compatible contexts:
// phi |- psi decided by the prover.
ProofResult subobjectLeq(const Theory& t, const SubstitutionClass& phi,
                         const SubstitutionClass& psi, const Budget& b);

// Corpus enumeration shared with the lattice and classification modules:
// all substitution classes over the given context with at most `depth`
// formula nodes (alpha-deduplicated, not entailment-deduplicated).
std::vector<SubstitutionClass> enumerateClasses(const Theory& t, const Context& ctx,
                                                int depth);

// All contexts with at most maxVars variables drawn from the theory's sorts
// (canonical variable names per sort), including the empty context.
std::vector<Context> enumerateContexts(const Theory& t, int maxVars);

}  // namespace cohlog
