#pragma once

// Reconstruals (syntactic interpretations) between many-sorted coherent
// theories: each source sort maps to a context of target sorts with a domain
// formula and an equality image; each relation and function symbol maps to a
// formula over the image contexts. Verification discharges the translation
// conditions per axiom plus the images of the equality rules.

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "cohlog/ast.hpp"
#include "cohlog/model.hpp"
#include "cohlog/obligation.hpp"
#include "cohlog/subst.hpp"

namespace cohlog {

struct SortImage {
  Context image;              // slots: (slotName, targetSort), possibly empty
  SubstitutionClass domain;   // over image
  SubstitutionClass equality; // over image.image
  bool equalityDefaulted = true;  // componentwise equality & domain on both sides
};

struct Reconstrual {
  std::string name;
  Theory src, dst;
  std::map<std::string, SortImage> sortImages;          // by source sort
  std::map<std::string, SubstitutionClass> relImages;   // ctx = image of arg sorts
  std::map<std::string, SubstitutionClass> funImages;   // ctx = image of args . image of result

  const SortImage& sortImage(const std::string& sort) const;

  // Image context of a list of source-typed variables: one block per
  // variable. Single-slot blocks reuse the source variable name; wider blocks
  // use name_slot. Returns the image context and, per source variable, the
  // list of image variable terms.
  Context imageContext(const Context& srcCtx) const;
  std::vector<std::vector<TermPtr>> imageBlocks(const Context& srcCtx) const;

  // Structural sanity: every sort/relation/function of src has an image with
  // contexts of the right shape over dst's signature. Throws InputError.
  void validate() const;
};

// F applied to a formula. Free variables turn into their image blocks; bound
// variables turn into existential blocks relativized by the domain formula.
// Equality maps through the equality image. The result is well-typed over
// F.dst whenever phi is well-typed over F.src.
FormulaPtr applyReconstrual(const Reconstrual& f, const FormulaPtr& phi);

// Image of an axiom: F(lhs), relativized by the domain formulas of the free
// context, entails F(rhs).
Sequent applyToAxiom(const Reconstrual& f, const Sequent& s);

// Identity reconstrual on T (every image is the tautological one).
Reconstrual identityReconstrual(const Theory& t);

// G after F. Requires F.dst and G.src to agree (by signature).
Reconstrual composeReconstruals(const Reconstrual& g, const Reconstrual& f);

enum class Flag { Proved, Failed, Unknown };
Flag flagOfOutcome(Outcome o);
std::string flagName(Flag f);

struct Translation {
  Reconstrual recon;
  Flag isTranslation = Flag::Unknown;
  Flag isEqualityPreserving = Flag::Unknown;
  Flag isStrong = Flag::Unknown;
  VerificationReport evidence;
};

// Obligations discharged in F.dst:
//  - image of every axiom of F.src,
//  - equality image is an equivalence relative to the domains (refl, symm,
//    trans), and a congruence for every relation image,
//  - every function image is total and single-valued modulo the equality
//    image, and a congruence.
// isEqualityPreserving compares the equality image against componentwise
// equality on the domains; isStrong additionally requires every sort image to
// be a single slot.
Translation verifyTranslation(const Reconstrual& f, const Budget& b);

// Pulls a finite model of F.dst back along F: carrier of sigma = domain
// tuples modulo the equality image (must evaluate to an equivalence; throws
// InputError otherwise), with lexicographically least representatives.
// Relation/function images must evaluate functionally; non-functional images
// throw (the reconstrual was not a verified translation on this model).
FiniteModel pullbackModel(const Reconstrual& f, const FiniteModel& m);

// Repairs equality preservation: quotients each sort image by its equality
// image inside an extension of F.dst (product step first when the image has
// several slots), then rewrites the images through the quotient surjection.
// Returns the repaired reconstrual, the extended target theory, and evidence
// that the repaired images agree with the originals when F was already
// equality-preserving.
struct EqualityRepair {
  Reconstrual repaired;
  Theory extendedTarget;
  VerificationReport evidence;
};
EqualityRepair makeEqualityPreserving(const Reconstrual& f, const Budget& b);

}  // namespace cohlog
