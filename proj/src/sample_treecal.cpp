#include <string>

#include "treecal/engine.hpp"
#include "treecal/errors.hpp"

namespace treecal {

namespace {

const Atom& sample_atom(const Forecast& f, Rng& rng) {
  const double u = rng.uniform();
  double acc = 0.0;
  for (const auto& atom : f.atoms) {
    acc += atom.weight;
    if (u < acc) return atom;
  }
  for (auto it = f.atoms.rbegin(); it != f.atoms.rend(); ++it) {
    if (it->weight > 0.0) return *it;
  }
  return f.atoms.back();
}

}  // namespace

SampleTreeCalResult sample_treecal_run(const Domain& domain, std::uint64_t T, int H, int L,
                                       std::uint64_t S, const Adversary& adversary,
                                       std::uint64_t sampler_seed) {
  if (S == 0) throw ConfigError("S must be positive");
  if (T % S != 0) {
    throw ConfigError("S = " + std::to_string(S) + " does not divide T = " + std::to_string(T));
  }
  const std::uint64_t inner_T = T / S;
  TreeCal inner(domain, inner_T, H, L);
  Rng sampler(sampler_seed);

  std::vector<PureRound> pure;
  pure.reserve(T);
  std::vector<Round> inner_rounds;
  inner_rounds.reserve(inner_T);
  for (std::uint64_t i = 1; i <= inner_T; ++i) {
    Forecast x = inner.forecast(i);
    Vector block_sum(domain.dim(), 0.0);
    for (std::uint64_t s = 1; s <= S; ++s) {
      const std::uint64_t t = (i - 1) * S + s;
      Vector p = sample_atom(x, sampler).point;
      Vector y = adversary.next_outcome(t, &x);
      add_scaled(block_sum, y, 1.0);
      pure.push_back({std::move(p), std::move(y)});
    }
    for (double& v : block_sum) v /= static_cast<double>(S);
    inner.observe(i, block_sum);
    inner_rounds.push_back({std::move(x), std::move(block_sum)});
  }
  return {PureTranscript(domain, std::move(pure)), Transcript(domain, std::move(inner_rounds))};
}

}  // namespace treecal
