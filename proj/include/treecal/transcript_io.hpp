#pragma once

#include <iosfwd>
#include <string>

#include "treecal/metrics.hpp"

namespace treecal {

/// Per-node action assignment made by TreeCal or TreeSwap.
struct AssignmentEvent {
  std::uint64_t round;  ///< first round at which the action is in force
  int level;
  Label prefix;
  Vector action;
};

/// One JSON object per line:
///   {"t": 1, "atoms": [[[x, ...], [digits] | null, w], ...], "outcome": [y, ...]}
/// Doubles are written in shortest round-trip form, so reading back is bit-exact.
std::string round_to_jsonl(std::uint64_t t, const Round& round);
std::string assignment_to_jsonl(const AssignmentEvent& event);

void write_transcript_jsonl(std::ostream& out, const Transcript& tr);
/// Interleaves assignment events with rounds, each event placed before the
/// first round it affects.
void write_trace_jsonl(std::ostream& out, const Transcript& tr,
                       std::span<const AssignmentEvent> events);

/// Reads round records; lines carrying an "event" field and blank lines are
/// skipped. Throws std::runtime_error on malformed input and
/// std::domain_error on records that violate the domain.
Transcript read_transcript_jsonl(std::istream& in, const Domain& domain);

}  // namespace treecal
