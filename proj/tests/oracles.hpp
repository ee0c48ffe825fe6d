#pragma once

// Test-side oracles, independent of the library's own decision procedures:
// a bitmask valuation evaluator for propositional sequents and deterministic
// random generators for theories, sequents, and finite structures.

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "cohlog/ast.hpp"
#include "cohlog/model.hpp"

namespace cohlog::testing {

// --- Propositional valuation oracle ----------------------------------------
// Valuations are bitmasks over the relation list of the signature, in
// declaration order. Only propositional connectives are supported.

inline bool oracleEval(const FormulaPtr& f, std::uint32_t mask,
                       const Signature& sig) {
  switch (f->kind) {
    case FK::Top:
      return true;
    case FK::Bot:
      return false;
    case FK::Atom:
      for (size_t i = 0; i < sig.relations.size(); ++i)
        if (sig.relations[i].name == f->rel) return (mask >> i) & 1u;
      throw InputError("oracle: unknown atom " + f->rel);
    case FK::And:
      return oracleEval(f->kids[0], mask, sig) && oracleEval(f->kids[1], mask, sig);
    case FK::Or:
      return oracleEval(f->kids[0], mask, sig) || oracleEval(f->kids[1], mask, sig);
    case FK::Not:
      return !oracleEval(f->kids[0], mask, sig);
    default:
      throw InputError("oracle: non-propositional formula");
  }
}

inline bool oracleSequentHolds(const Sequent& s, std::uint32_t mask,
                               const Signature& sig) {
  for (const auto& f : s.lhs)
    if (!oracleEval(f, mask, sig)) return true;
  return oracleEval(s.rhs, mask, sig);
}

// Does the theory prove the sequent? For coherent propositional logic,
// provability coincides with truth in every valuation satisfying the axioms.
inline bool oracleProves(const Theory& t, const Sequent& s) {
  const auto n = t.sig.relations.size();
  for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
    bool modelsT = true;
    for (const auto& ax : t.axioms)
      if (!oracleSequentHolds(ax, mask, t.sig)) {
        modelsT = false;
        break;
      }
    if (modelsT && !oracleSequentHolds(s, mask, t.sig)) return false;
  }
  return true;
}

// --- Random generation ------------------------------------------------------

struct Rng {
  std::mt19937 gen;
  explicit Rng(std::uint32_t seed) : gen(seed) {}
  int below(int n) { return static_cast<int>(gen() % static_cast<std::uint32_t>(n)); }
  bool chance(int percent) { return below(100) < percent; }
};

inline FormulaPtr randomPropFormula(Rng& rng, const Signature& sig, int depth) {
  if (depth == 0 || rng.chance(35)) {
    int pick = rng.below(static_cast<int>(sig.relations.size()) + 1);
    if (pick == static_cast<int>(sig.relations.size()))
      return rng.chance(50) ? fTop() : fBot();
    return fAtom(sig.relations[pick].name, {});
  }
  FormulaPtr a = randomPropFormula(rng, sig, depth - 1);
  FormulaPtr b = randomPropFormula(rng, sig, depth - 1);
  return rng.chance(50) ? fAnd(a, b) : fOr(a, b);
}

inline Sequent randomPropSequent(Rng& rng, const Signature& sig,
                                 const std::string& label) {
  Sequent s;
  s.label = label;
  int nLhs = rng.below(3);
  for (int i = 0; i < nLhs; ++i) s.lhs.push_back(randomPropFormula(rng, sig, 2));
  s.rhs = randomPropFormula(rng, sig, 2);
  return s;
}

// Propositional theory with at most `maxAtoms` 0-ary relations and
// `maxAxioms` random axioms. Always satisfiable or not; no filtering.
inline Theory randomPropTheory(Rng& rng, const std::string& name, int maxAtoms,
                               int maxAxioms) {
  Theory t;
  t.name = name;
  int atoms = 1 + rng.below(maxAtoms);
  for (int i = 0; i < atoms; ++i)
    t.sig.relations.push_back({"P" + std::to_string(i), {}});
  int axioms = rng.below(maxAxioms + 1);
  for (int i = 0; i < axioms; ++i)
    t.axioms.push_back(randomPropSequent(rng, t.sig, "ax" + std::to_string(i)));
  return t;
}

// Random finite structure for a signature (not necessarily a model of any
// theory): carriers of size 1..maxSize, random tables. Callers filter with
// checkModel when a model of a theory is required.
inline FiniteModel randomStructure(Rng& rng, const Signature& sig, int maxSize,
                                   const std::string& name) {
  FiniteModel m;
  m.name = name;
  for (const auto& s : sig.sorts) {
    int size = 1 + rng.below(maxSize);
    std::vector<std::string> elems;
    for (int i = 0; i < size; ++i) elems.push_back(std::to_string(i));
    m.carriers[s] = std::move(elems);
  }
  for (const auto& r : sig.relations) {
    auto& table = m.relations[r.name];
    std::vector<int> sizes;
    for (const auto& d : r.domain) sizes.push_back(m.carrierSize(d));
    std::vector<int> tuple(sizes.size(), 0);
    while (true) {
      if (rng.chance(50)) table.insert(tuple);
      size_t k = 0;
      for (; k < tuple.size(); ++k) {
        if (++tuple[k] < sizes[k]) break;
        tuple[k] = 0;
      }
      if (k == tuple.size()) break;
    }
  }
  for (const auto& f : sig.functions) {
    auto& table = m.functions[f.name];
    int codSize = m.carrierSize(f.codomain);
    std::vector<int> sizes;
    for (const auto& d : f.domain) sizes.push_back(m.carrierSize(d));
    std::vector<int> tuple(sizes.size(), 0);
    while (true) {
      table[tuple] = rng.below(codSize);
      size_t k = 0;
      for (; k < tuple.size(); ++k) {
        if (++tuple[k] < sizes[k]) break;
        tuple[k] = 0;
      }
      if (k == tuple.size()) break;
    }
  }
  return m;
}

// Path of a fixture file under the directory baked in at compile time.
inline std::string fixturePath(const std::string& name) {
  return std::string(COHLOG_FIXTURE_DIR) + "/" + name;
}

}  // namespace cohlog::testing
