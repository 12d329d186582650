#include "treecal/transcript_io.hpp"

#include <istream>
#include <ostream>
#include <stdexcept>

#include <json.hpp>

namespace treecal {

using nlohmann::json;

std::string round_to_jsonl(std::uint64_t t, const Round& round) {
  json atoms = json::array();
  for (const auto& a : round.forecast.atoms) {
    json label = a.label ? json(*a.label) : json(nullptr);
    atoms.push_back(json::array({json(a.point), std::move(label), a.weight}));
  }
  json rec = {{"t", t}, {"atoms", std::move(atoms)}, {"outcome", round.outcome}};
  return rec.dump();
}

std::string assignment_to_jsonl(const AssignmentEvent& event) {
  json rec = {{"event", "assign"},
              {"t", event.round},
              {"level", event.level},
              {"prefix", event.prefix},
              {"action", event.action}};
  return rec.dump();
}

void write_transcript_jsonl(std::ostream& out, const Transcript& tr) {
  for (std::size_t i = 0; i < tr.size(); ++i) out << round_to_jsonl(i + 1, tr[i]) << '\n';
}

void write_trace_jsonl(std::ostream& out, const Transcript& tr,
                       std::span<const AssignmentEvent> events) {
  std::size_t next = 0;
  for (std::size_t i = 0; i < tr.size(); ++i) {
    while (next < events.size() && events[next].round <= i + 1) {
      out << assignment_to_jsonl(events[next++]) << '\n';
    }
    out << round_to_jsonl(i + 1, tr[i]) << '\n';
  }
}

Transcript read_transcript_jsonl(std::istream& in, const Domain& domain) {
  std::vector<Round> rounds;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const json rec = json::parse(line);
      if (rec.contains("event")) continue;
      const auto t = rec.at("t").get<std::uint64_t>();
      if (t != rounds.size() + 1) throw std::runtime_error("rounds out of sequence");
      Round r;
      for (const auto& a : rec.at("atoms")) {
        if (!a.is_array() || a.size() != 3) throw std::runtime_error("atom must have 3 fields");
        Atom atom;
        atom.point = a[0].get<Vector>();
        if (!a[1].is_null()) atom.label = a[1].get<Label>();
        atom.weight = a[2].get<double>();
        r.forecast.atoms.push_back(std::move(atom));
      }
      r.outcome = rec.at("outcome").get<Vector>();
      rounds.push_back(std::move(r));
    } catch (const json::exception& e) {
      throw std::runtime_error("transcript line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return Transcript(domain, std::move(rounds));
}

}  // namespace treecal
