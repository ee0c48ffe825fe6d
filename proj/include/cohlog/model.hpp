#pragma once

// Finite models: named carriers per sort, relation tables, total function
// tables. Evaluation covers the classical connectives too, so models of
// classical-mode theories can be checked.

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "cohlog/ast.hpp"

namespace cohlog {

struct FiniteModel {
  std::string name;
  // Elements are kept as strings in declaration order; evaluation uses the
  // index into this vector.
  std::map<std::string, std::vector<std::string>> carriers;           // sort -> elements
  std::map<std::string, std::set<std::vector<int>>> relations;        // rel -> tuples
  std::map<std::string, std::map<std::vector<int>, int>> functions;   // fun -> table

  int carrierSize(const std::string& sort) const;
  int elementIndex(const std::string& sort, const std::string& elem) const;

  // Structural validity against a signature: carriers for every sort, tables
  // within range, functions total. Throws InputError.
  void validate(const Signature& sig) const;

  std::string print(const Signature& sig) const;
  // Deterministic identity key (used to deduplicate enumerated models).
  std::string key() const;
};

using Assignment = std::map<std::string, int>;  // variable name -> element index

// Evaluates a term / formula under an assignment covering its free variables.
int evalTerm(const FiniteModel& m, const TermPtr& t, const Assignment& env);
bool evalFormula(const FiniteModel& m, const FormulaPtr& f, const Assignment& env);

// A sequent holds when every assignment over its free context that satisfies
// all antecedent formulas satisfies the succedent. Empty carriers quantify
// vacuously.
bool holdsIn(const FiniteModel& m, const Sequent& s);

struct ModelCheckResult {
  bool ok = true;
  // One entry per violated axiom: label and a falsifying assignment, printed.
  std::vector<std::pair<std::string, std::string>> violations;
};

ModelCheckResult checkModel(const FiniteModel& m, const Theory& t);

// Exhaustive bounded model search in a canonical order: carrier size vectors
// ascending (total size, then lexicographic), relation/function tables in
// lexicographic order. Calls `visit` on each model of the theory; stops when
// visit returns false. `budgetStates` caps the number of candidate structures
// examined (guards against combinatorial blowups); returns false if the cap
// was hit before the search space was exhausted.
bool enumerateModels(const Theory& t, int maxSize,
                     const std::function<bool(const FiniteModel&)>& visit,
                     std::uint64_t budgetStates = 50'000'000);

// First model of the theory that falsifies the sequent, in canonical order.
std::optional<FiniteModel> findCountermodel(const Theory& t, const Sequent& s,
                                            int maxSize);

}  // namespace cohlog
