#pragma once

// Finite category presentations with designated coherent structure (binary
// products, equalizers, terminal object, subobject joins and bottoms,
// covers), their validation, and the internal coherent theory of a
// presentation.

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "cohlog/ast.hpp"

namespace cohlog {

struct MorDecl {
  std::string name, dom, cod;
  bool isIdentity = false;
};

struct ProductDesignation {
  std::string prod, left, right;   // objects
  std::string p1, p2;              // projections prod -> left/right
};

struct EqualizerDesignation {
  std::string eq;                  // equalizer object
  std::string f, g;                // parallel pair
  std::string arrow;               // eq -> dom(f)
};

struct JoinDesignation {
  std::string object;              // ambient object X
  std::string m1, m2, join;        // monos into X; join is the designated lub
};

struct BottomDesignation {
  std::string object;              // ambient object X
  std::string mono;                // least subobject of X
};

struct FinCat {
  std::string name;
  std::vector<std::string> objects;
  std::vector<MorDecl> morphisms;                   // identities included
  std::map<std::string, std::string> identityOf;    // object -> identity name
  // compose[{g, f}] = g after f, for every composable non-identity pair.
  std::map<std::pair<std::string, std::string>, std::string> compose;

  std::vector<ProductDesignation> products;
  std::vector<EqualizerDesignation> equalizers;
  std::optional<std::string> terminal;
  std::map<std::string, std::vector<std::string>> subobjects;  // X -> monos into X
  std::vector<JoinDesignation> joins;
  std::vector<BottomDesignation> bottoms;
  std::vector<std::string> covers;                  // morphism names

  const MorDecl* morphism(const std::string& name) const;
  // Total composition with identity laws applied; throws on non-composable.
  std::string composeNames(const std::string& g, const std::string& f) const;
};

// Checks category laws (totality of composition, identities, associativity)
// and the designated structure: projections/equalizer arrows typed correctly
// and satisfying their universal properties within the finite data, terminal
// object receiving exactly one arrow from each object, designated monos
// actually monic, joins being least upper bounds and bottoms least in the
// subobject preorder. Covers are recorded but carry no finite check.
// Returns human-readable problems; empty means valid.
std::vector<std::string> validateCoherentPresentation(const FinCat& c);

// The internal coherent theory: one sort per object, one unary function per
// morphism. Axioms: identity collapse, one triangle per composition entry,
// product/equalizer/terminal/join/bottom/cover laws for the designated
// structure (a designated bottom contributes the nullary join instance
// `exists c (m0(c) = x) |- bot`).
Theory internalLogic(const FinCat& c);

// Subobject preorder of X within the finite data: m <= m' iff some arrow k
// has m = m' . k. Used by validation and by the lattice comparisons.
bool subobjectLeqInCat(const FinCat& c, const std::string& m1, const std::string& m2);

}  // namespace cohlog
