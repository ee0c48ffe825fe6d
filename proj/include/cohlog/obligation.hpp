#pragma once

// Named proof obligations and verification reports, shared by the
// translation, t-map, extension, and category modules.

#include <string>
#include <vector>

#include "cohlog/ast.hpp"
#include "cohlog/prover.hpp"

namespace cohlog {

struct Obligation {
  std::string name;      // stable identifier, e.g. "axiom:trans" or "E_refl:s"
  Sequent sequent;       // what must be proved
  std::string inTheory;  // name of the theory the obligation lives in
};

struct ObligationResult {
  Obligation obligation;
  ProofResult proof;
};

struct VerificationReport {
  std::vector<ObligationResult> entries;
  std::string note;  // free-form caveat, e.g. search incompleteness banners

  // Proved iff every entry proved; Failed if any entry refuted; else Unknown.
  Outcome verdict() const {
    bool unknown = false;
    for (const auto& e : entries) {
      if (e.proof.outcome == Outcome::Refuted) return Outcome::Refuted;
      if (e.proof.outcome == Outcome::Unknown) unknown = true;
    }
    return unknown ? Outcome::Unknown : Outcome::Proved;
  }

  int countProved() const {
    int n = 0;
    for (const auto& e : entries)
      if (e.proof.outcome == Outcome::Proved) ++n;
    return n;
  }
};

// Discharges each obligation in its theory (looked up by name from the given
// list) and collects the results.
VerificationReport dischargeAll(const std::vector<Obligation>& obs,
                                const std::vector<const Theory*>& theories,
                                const Budget& b);

}  // namespace cohlog
