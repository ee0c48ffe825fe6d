#pragma once

// Core syntax for many-sorted coherent logic: signatures, terms, formulae,
// sequents, theories. Terms and formulae are immutable shared trees; all
// containers that feed reports are kept in deterministic (declaration or
// lexicographic) order so output is byte-stable across runs.

#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace cohlog {

struct InputError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Signatures

struct RelDecl {
  std::string name;
  std::vector<std::string> domain;  // sorts of the argument slots; empty = proposition
};

struct FunDecl {
  std::string name;
  std::vector<std::string> domain;  // empty = constant
  std::string codomain;
};

struct Signature {
  std::vector<std::string> sorts;   // declaration order
  std::vector<RelDecl> relations;
  std::vector<FunDecl> functions;

  bool hasSort(const std::string& s) const;
  const RelDecl* relation(const std::string& name) const;
  const FunDecl* function(const std::string& name) const;

  // Throws InputError on duplicate names, name clashes between relations and
  // functions, or declarations over unknown sorts.
  void validate() const;

  bool operator==(const Signature& other) const;
};

// ---------------------------------------------------------------------------
// Terms

struct Term;
using TermPtr = std::shared_ptr<const Term>;

struct Term {
  // Variables carry their sort directly. Applications carry the function name;
  // their sort is the codomain, cached here after typing.
  bool isVar = false;
  std::string head;  // variable name, or function name
  std::string sort;  // sort of the whole term
  std::vector<TermPtr> args;
};

TermPtr mkVar(std::string name, std::string sort);
TermPtr mkApp(const Signature& sig, const std::string& fun, std::vector<TermPtr> args);

bool termEqual(const TermPtr& a, const TermPtr& b);
// Total order used for canonical sorting: by printed size then by structure.
int termCompare(const TermPtr& a, const TermPtr& b);
int termSize(const TermPtr& t);

// ---------------------------------------------------------------------------
// Formulae

enum class FK {
  Top,
  Bot,
  And,
  Or,
  Exists,
  Atom,
  Eq,
  Not,     // classical mode only
  Forall,  // classical mode only
};

struct Formula;
using FormulaPtr = std::shared_ptr<const Formula>;

struct Formula {
  FK kind = FK::Top;
  std::string rel;                 // Atom: relation name
  std::string var, varSort;        // Exists / Forall binder
  std::vector<TermPtr> args;       // Atom arguments, or the two sides of Eq
  std::vector<FormulaPtr> kids;    // And/Or: 2, Exists/Forall/Not: 1
};

FormulaPtr fTop();
FormulaPtr fBot();
FormulaPtr fAnd(FormulaPtr a, FormulaPtr b);
FormulaPtr fOr(FormulaPtr a, FormulaPtr b);
FormulaPtr fExists(std::string var, std::string sort, FormulaPtr body);
FormulaPtr fForall(std::string var, std::string sort, FormulaPtr body);
FormulaPtr fNot(FormulaPtr a);
FormulaPtr fAtom(std::string rel, std::vector<TermPtr> args);
FormulaPtr fEq(TermPtr lhs, TermPtr rhs);

// Right-nested chains: fAndAll({}) = top, fOrAll({}) = bot. The empty
// disjunction reading as bot is relied on by the nullary join instance in the
// category module.
FormulaPtr fAndAll(const std::vector<FormulaPtr>& parts);
FormulaPtr fOrAll(const std::vector<FormulaPtr>& parts);

int formulaSize(const FormulaPtr& f);  // node count, terms not included
bool formulaEqual(const FormulaPtr& a, const FormulaPtr& b);  // structural
int formulaCompare(const FormulaPtr& a, const FormulaPtr& b);

// ---------------------------------------------------------------------------
// Contexts and typing

struct TypedVar {
  std::string name;
  std::string sort;
  bool operator==(const TypedVar& o) const { return name == o.name && sort == o.sort; }
};

using Context = std::vector<TypedVar>;

// Free variables in first-occurrence order (left to right, binders removed).
Context freeContext(const FormulaPtr& f);
Context freeContextOfTerm(const TermPtr& t);

// Checks well-typedness against the signature: every atom matches its
// relation's arity/sorts, equality sides share a sort, every variable is used
// at one consistent sort, and quantifiers only bind declared sorts. Classical
// connectives are rejected unless `classical` is set. Throws InputError.
void typecheckFormula(const Signature& sig, const FormulaPtr& f, bool classical);

// ---------------------------------------------------------------------------
// Sequents and theories

struct Sequent {
  std::string label;
  std::vector<FormulaPtr> lhs;  // antecedent, conjunctive reading
  FormulaPtr rhs;
};

Context freeContext(const Sequent& s);

struct Theory {
  std::string name;
  bool classical = false;
  Signature sig;
  std::vector<Sequent> axioms;

  void validate() const;  // signature + every axiom well-typed
};

// ---------------------------------------------------------------------------
// Printing. print/parse round-trip: parsing a printed formula yields a
// structurally identical tree. Precedence: exists/forall bind weakest and
// extend right as far as possible, then |, then &, then not.

std::string printTerm(const TermPtr& t);
std::string printFormula(const FormulaPtr& f);
std::string printSequent(const Sequent& s);
std::string printContext(const Context& ctx);
std::string printTheory(const Theory& t);

// Reserved fresh-name supply: "_v1", "_v2", ... The DSL lexer rejects
// user identifiers starting with '_', so these can never collide.
std::string freshVar(int& counter);
bool isReservedName(const std::string& name);

}  // namespace cohlog
