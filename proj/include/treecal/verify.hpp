#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "treecal/engine.hpp"

namespace treecal {

enum class VerifySuite { Fast, Full };

struct VerifyOptions {
  VerifySuite suite = VerifySuite::Fast;
  std::uint64_t seed = 1;
  /// Runs TreeCal with its running-mean update disabled, so the equivalence
  /// and mean-update invariants must report failures.
  bool inject_fault = false;
};

struct InvariantResult {
  std::string name;
  std::size_t checks = 0;
  std::size_t failures = 0;
  std::string first_failure;
};

std::vector<InvariantResult> run_verify(const VerifyOptions& options);
bool verify_ok(const std::vector<InvariantResult>& results);
/// One line per invariant: status, name, checks, failures, first failure.
void print_verify(std::ostream& out, const std::vector<InvariantResult>& results);

/// Points within `tol` in LInf, labels and weights exactly equal, outcomes equal.
bool transcripts_match(const Transcript& a, const Transcript& b, double tol, std::string* why = nullptr);

/// Checks every recorded assignment against the running mean it should equal:
/// first children carry `base`, later children the mean of all outcomes in
/// their elder siblings' intervals. Returns the number of mismatches.
std::size_t count_mean_update_violations(std::span<const AssignmentEvent> events,
                                         std::span<const Vector> outcomes, const Vector& base,
                                         int H, int L, double tol);

}  // namespace treecal
