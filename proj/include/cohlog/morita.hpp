#pragma once

// Morita extensions: product, terminal, coproduct, subsort, quotient, and
// definitional steps. Each step yields the extended theory, the named
// defining axioms (every one mentions a new symbol), and admissibility
// obligations stated purely in the base theory.

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "cohlog/ast.hpp"
#include "cohlog/model.hpp"
#include "cohlog/obligation.hpp"
#include "cohlog/parse.hpp"
#include "cohlog/reconstrual.hpp"
#include "cohlog/subst.hpp"
#include "cohlog/tmap.hpp"

namespace cohlog {

struct ProductStep {
  std::string sortName;
  std::vector<std::string> factors;
  std::vector<std::string> projections;
};

struct TerminalStep {
  std::string sortName;
};

struct CoproductStep {
  std::string sortName;
  std::vector<std::string> summands;
  std::vector<std::string> injections;
};

struct SubsortStep {
  std::string sortName;
  std::string inclusion;
  SubstitutionClass pred;  // one-variable context over the base sort
};

struct QuotientStep {
  std::string sortName;
  std::string surjection;
  SubstitutionClass rel;  // two-variable context, both over the base sort
};

struct DefRelStep {
  std::string relName;
  SubstitutionClass def;
};

struct DefFunStep {
  std::string funName;
  SubstitutionClass graph;  // argument slots then one result slot
};

using ExtensionStep = std::variant<ProductStep, TerminalStep, CoproductStep,
                                   SubsortStep, QuotientStep, DefRelStep, DefFunStep>;

std::string stepKindName(const ExtensionStep& step);

struct ExtensionResult {
  Theory extended;
  std::vector<Sequent> definingAxioms;   // also appended to extended.axioms
  std::vector<Obligation> obligations;   // admissibility, in the base theory
};

ExtensionResult extendMorita(const Theory& t, const ExtensionStep& step);

// Elaborates raw steps in order, typing each defining formula against the
// accumulated signature.
struct ChainResult {
  Theory top;
  std::vector<ExtensionStep> steps;
  std::vector<ExtensionResult> results;  // one per step
  std::vector<Obligation> obligations;   // concatenated; theory names differ per step
};

ChainResult applyExtensionChain(const Theory& t, const std::vector<RawExtStep>& raw);

// Recognizes tplus as (a permutation-free sequence of) Morita steps over t:
// classifies every new symbol, re-derives the defining axioms, and discharges
// the admissibility obligations in t. Any new symbol or axiom that matches no
// schema makes the verdict Failed.
struct ExtensionVerification {
  VerificationReport report;
  std::vector<std::string> classified;    // "quotient sort q with surjection p" etc.
  std::vector<std::string> unclassified;  // leftover symbols / axioms
  std::vector<ExtensionStep> steps;       // recovered steps, in dependency order
  Outcome verdict() const;
};

ExtensionVerification verifyExtension(const Theory& t, const Theory& tplus,
                                      const Budget& b);

// The inclusion reconstrual t -> tplus (identity images), with a
// conservativity spot check: every axiom of tplus over the old signature must
// already be provable in t.
struct InclusionResult {
  Reconstrual inclusion;
  VerificationReport conservativity;
};
InclusionResult inclusionTranslation(const Theory& t, const Theory& tplus,
                                     const Budget& b);

// For a single-quotient extension: the retraction sending the quotient sort
// back to its base with the defining relation as equality image, plus the
// t-map pair witnessing a homotopy equivalence between t and tplus. The
// report verifies both translations and both t-maps.
struct RetractionPackage {
  Reconstrual inclusion;   // t -> tplus
  Reconstrual retraction;  // tplus -> t
  TMap chi1;               // retraction . inclusion => identity on t
  TMap chi2;               // identity on tplus => inclusion . retraction
  VerificationReport report;
};
RetractionPackage quotientRetraction(const Theory& t, const Theory& tplus,
                                     const Budget& b);

// Canonical extension of a finite model along a step: products become tuple
// carriers, subsorts restrict, quotients take equivalence classes, coproducts
// tag, definitional symbols evaluate. Throws InputError when the defining
// data is not admissible in the model (e.g. a non-functional graph).
FiniteModel extendModel(const FiniteModel& m, const Theory& base,
                        const ExtensionStep& step);

// Quantifier-free formulas over the context variables and the theory's
// constants, by node count up to the depth bound: relation atoms and
// equalities at depth 1, conjunctions and disjunctions above. Only formulas
// using every context variable are returned, deduplicated and ordered by
// canonical key within each size.
std::vector<FormulaPtr> enumerateCandidateFormulas(const Theory& t,
                                                   const Context& ctx, int depth);

// Enumerates two-variable classes over each sort up to the depth bound,
// keeps those provably reflexive/symmetric/transitive, deduplicates by
// provable bi-entailment, and quotients by one representative per class.
struct ExactCompletionResult {
  Theory completed;
  std::vector<QuotientStep> added;
  std::vector<std::string> undecided;  // printed classes whose status was Unknown
  bool complete = true;                // false when undecided is nonempty
};
ExactCompletionResult exactCompletionSlice(const Theory& t, int depth,
                                           const Budget& b);

// Fresh symbol names for generated extensions: sanitized canonical encodings
// with numeric suffixes on collision.
std::string freshSortName(const Signature& sig, const std::string& hint);
std::string freshFunName(const Signature& sig, const std::string& hint);
std::string freshRelName(const Signature& sig, const std::string& hint);

}  // namespace cohlog
