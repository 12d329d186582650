#pragma once

#include <string>
#include <variant>

#include "treecal/geometry.hpp"
#include "treecal/metrics.hpp"
#include "treecal/rng.hpp"

namespace treecal {

struct ConstantOutcome {
  Vector y;
};
/// Vertex ((t-1) mod period) mod vertex_count; period 0 means vertex_count.
struct VertexCycle {
  std::size_t period = 0;
};
/// I.i.d. vertex draws. Empty weights mean uniform; otherwise one weight per
/// vertex, normalized.
struct IidVertices {
  std::vector<double> weights;
};
/// I.i.d. Dirichlet(alpha) draws on the simplex. A single alpha is broadcast.
struct IidDirichlet {
  std::vector<double> alpha{1.0};
};
/// Deterministic outcomes moving linearly from `start` (t = 1) to `end` (t = T).
struct DriftingMean {
  Vector start;
  Vector end;
};
/// Adaptive: the vertex farthest in L1 from the forecast mean, lowest index on
/// ties (distances within 1e-12).
struct FarthestVertex {};

using AdversarySpec =
    std::variant<ConstantOutcome, VertexCycle, IidVertices, IidDirichlet, DriftingMean, FarthestVertex>;

std::string adversary_name(const AdversarySpec& spec);

class Adversary {
 public:
  /// Throws ConfigError when the adversary parameters do not fit the domain.
  Adversary(AdversarySpec spec, Domain domain, std::uint64_t seed, std::uint64_t horizon);

  bool adaptive() const { return std::holds_alternative<FarthestVertex>(spec_); }
  const Domain& domain() const { return domain_; }
  const AdversarySpec& spec() const { return spec_; }
  std::string name() const { return adversary_name(spec_); }

  /// Outcome for round t. A pure function of (spec, seed, t, forecast).
  /// Adaptive specs require the forecast (ProtocolError otherwise); oblivious
  /// specs ignore it.
  Vector next_outcome(std::uint64_t t, const Forecast* forecast = nullptr) const;

  /// The first T outcomes of an oblivious adversary.
  std::vector<Vector> stream(std::uint64_t T) const;

 private:
  AdversarySpec spec_;
  Domain domain_;
  Rng rng_;
  std::uint64_t horizon_;
};

}  // namespace treecal
