#pragma once

// Parsers for the input languages: theories, sequents, finite models,
// translations, t-maps, extension chains, category presentations, and
// equivalence certificates. Grammar reference: docs/dsl.md. All parsers
// throw InputError with line/column on bad input.

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "cohlog/ast.hpp"
#include "cohlog/model.hpp"
#include "cohlog/reconstrual.hpp"
#include "cohlog/tmap.hpp"

namespace cohlog {

Theory parseTheory(const std::string& text);

// Formula over the theory's signature. Variable sorts come from an optional
// explicit context, inline annotations (x:s), or inference from argument
// positions; in a single-sorted theory unconstrained variables default to
// that sort.
FormulaPtr parseFormulaText(const std::string& text, const Theory& t,
                            const Context& declared = {});

// "[x:s, y:s] phi, psi |- chi" — context block optional, antecedent may be
// empty.
Sequent parseSequentText(const std::string& text, const Theory& t);

FiniteModel parseModel(const std::string& text, const Theory& t);

Reconstrual parseTranslation(const std::string& text, const Theory& src,
                             const Theory& dst);

// Components are typed against the two reconstruals' image contexts.
TMap parseTMap(const std::string& text, const Reconstrual& from,
               const Reconstrual& to);

// Extension steps are parsed raw (formulas kept as text) because each step's
// formulas are typed against the signature produced by the previous steps.
// The morita module elaborates them.
struct RawExtStep {
  enum Kind { Product, Terminal, Coproduct, Subsort, Quotient, DefRel, DefFun };
  Kind kind;
  std::string newName;                  // new sort / relation / function name
  std::vector<std::string> sortArgs;    // factors / summands / base sort
  std::vector<std::string> funNames;    // projections / injections / inclusion / surjection
  std::vector<std::string> varNames;    // bound variable names of the defining class
  std::string resultVar;                // DefFun: name of the result slot
  std::string resultSort;               // DefFun: codomain
  std::vector<std::string> varSorts;    // DefRel/DefFun: slot sorts
  std::string formulaText;              // defining formula, if any
  int line = 0;
};

std::vector<RawExtStep> parseExtensionFile(const std::string& text,
                                           std::string* baseTheoryName = nullptr);

struct FinCat;  // category.hpp
FinCat parseCategory(const std::string& text);

struct CertificateFile {
  std::string claim;  // logical | definitional | weak | morita
  std::string theory1Path, theory2Path;
  std::string translationFPath, translationGPath;
  std::string chi1Path, chi2Path;
  std::vector<std::string> chain1Paths, chain2Paths;
};

CertificateFile parseCertificate(const std::string& text);

// Reads a whole file; throws InputError when unreadable.
std::string readFile(const std::string& path);

}  // namespace cohlog
