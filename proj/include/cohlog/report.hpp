#pragma once

// Rendering of results in the two output formats. Text and JSON are both
// byte-stable: deterministic ordering, no timestamps, tool version and the
// effective budgets embedded.

#include <string>

#include "cohlog/classify.hpp"
#include "cohlog/lattice.hpp"
#include "cohlog/morita.hpp"
#include "cohlog/obligation.hpp"
#include "cohlog/prover.hpp"
#include "cohlog/version.hpp"

namespace cohlog {

enum class ReportFormat { Text, Structured };

struct ReportMeta {
  std::string command;
  Budget budget;
  int depth = -1;       // -1: not applicable
  int maxSize = -1;     // countermodel search bound, when applicable
};

std::string renderProofResult(const ReportMeta& meta, const Sequent& goal,
                              const ProofResult& r, ReportFormat fmt);
std::string renderVerification(const ReportMeta& meta, const std::string& title,
                               const VerificationReport& r, ReportFormat fmt,
                               const std::vector<std::string>& extraLines = {});
std::string renderModel(const ReportMeta& meta, const Signature& sig,
                        const FiniteModel& m, ReportFormat fmt);
std::string renderLattice(const ReportMeta& meta, const BDLattice& l, ReportFormat fmt);
std::string renderPropositionality(const ReportMeta& meta,
                                   const PropositionalityReport& r, ReportFormat fmt);
std::string renderRoundTrip(const ReportMeta& meta, const RoundTripReport& r,
                            ReportFormat fmt);

// Exit-code policy: 0 proved / holds, 1 failed / refuted, 2 unknown,
// 3 input error.
int exitCodeFor(Outcome o);

}  // namespace cohlog
