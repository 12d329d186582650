#include "treecal/adversaries.hpp"

#include <cmath>
#include <numeric>

#include "treecal/errors.hpp"

namespace treecal {

namespace {

template <class... Fs>
struct overloaded : Fs... {
  using Fs::operator()...;
};
template <class... Fs>
overloaded(Fs...) -> overloaded<Fs...>;

void require_config_member(const Domain& domain, const Vector& v, const char* what) {
  if (!domain.contains(v)) {
    throw ConfigError(std::string(what) + " is not a member of " + domain.name());
  }
}

}  // namespace

std::string adversary_name(const AdversarySpec& spec) {
  return std::visit(overloaded{
                        [](const ConstantOutcome&) { return std::string("constant"); },
                        [](const VertexCycle&) { return std::string("vertex-cycle"); },
                        [](const IidVertices&) { return std::string("iid-vertices"); },
                        [](const IidDirichlet&) { return std::string("iid-dirichlet"); },
                        [](const DriftingMean&) { return std::string("drifting"); },
                        [](const FarthestVertex&) { return std::string("farthest-vertex"); },
                    },
                    spec);
}

// Distances closer than this count as ties, so summation order cannot break them.
constexpr double kTieTolerance = 1e-12;

Adversary::Adversary(AdversarySpec spec, Domain domain, std::uint64_t seed, std::uint64_t horizon)
    : spec_(std::move(spec)), domain_(std::move(domain)), rng_(seed), horizon_(horizon) {
  const std::size_t d = domain_.dim();
  const std::size_t nv = domain_.vertex_count();
  std::visit(overloaded{
                 [&](const ConstantOutcome& s) { require_config_member(domain_, s.y, "constant"); },
                 [&](VertexCycle& s) {
                   if (s.period == 0) s.period = nv;
                 },
                 [&](IidVertices& s) {
                   if (s.weights.empty()) s.weights.assign(nv, 1.0);
                   if (s.weights.size() != nv) {
                     throw ConfigError("weights needs one entry per vertex (" + std::to_string(nv) +
                                       ")");
                   }
                   double total = 0.0;
                   for (double w : s.weights) {
                     if (!(w >= 0.0) || !std::isfinite(w)) throw ConfigError("weights must be >= 0");
                     total += w;
                   }
                   if (!(total > 0.0)) throw ConfigError("weights must have positive sum");
                   for (double& w : s.weights) w /= total;
                 },
                 [&](IidDirichlet& s) {
                   if (domain_.kind() != DomainKind::Simplex) {
                     throw ConfigError("iid-dirichlet requires a simplex domain");
                   }
                   if (s.alpha.size() == 1) s.alpha.assign(d, s.alpha.front());
                   if (s.alpha.size() != d) throw ConfigError("alpha needs 1 or d entries");
                   for (double a : s.alpha) {
                     if (!(a > 0.0) || !std::isfinite(a)) throw ConfigError("alpha must be > 0");
                   }
                 },
                 [&](const DriftingMean& s) {
                   require_config_member(domain_, s.start, "start");
                   require_config_member(domain_, s.end, "end");
                 },
                 [](const FarthestVertex&) {},
             },
             spec_);
}

Vector Adversary::next_outcome(std::uint64_t t, const Forecast* forecast) const {
  if (t == 0) throw std::out_of_range("rounds are 1-based");
  return std::visit(
      overloaded{
          [&](const ConstantOutcome& s) { return s.y; },
          [&](const VertexCycle& s) {
            return domain_.vertex(((t - 1) % s.period) % domain_.vertex_count());
          },
          [&](const IidVertices& s) {
            Rng rng = rng_.child(t);
            const double u = rng.uniform();
            double acc = 0.0;
            std::size_t pick = s.weights.size() - 1;
            for (std::size_t i = 0; i < s.weights.size(); ++i) {
              acc += s.weights[i];
              if (u < acc) {
                pick = i;
                break;
              }
            }
            // Guard against rounding leaving the tail slot with zero weight.
            while (s.weights[pick] == 0.0 && pick > 0) --pick;
            return domain_.vertex(pick);
          },
          [&](const IidDirichlet& s) {
            Rng rng = rng_.child(t);
            Vector y(s.alpha.size());
            double total = 0.0;
            for (std::size_t i = 0; i < y.size(); ++i) total += (y[i] = rng.gamma(s.alpha[i]));
            for (double& v : y) v /= total;
            return y;
          },
          [&](const DriftingMean& s) {
            const double frac =
                horizon_ <= 1 ? 0.0
                              : static_cast<double>(std::min(t, horizon_) - 1) /
                                    static_cast<double>(horizon_ - 1);
            Vector y(s.start.size());
            for (std::size_t i = 0; i < y.size(); ++i) {
              y[i] = (1.0 - frac) * s.start[i] + frac * s.end[i];
            }
            return y;
          },
          [&](const FarthestVertex&) {
            if (forecast == nullptr) {
              throw ProtocolError("adaptive adversary needs the round's forecast");
            }
            const Vector m = forecast->mean();
            std::size_t best = 0;
            double best_dist = -1.0;
            for (std::size_t i = 0; i < domain_.vertex_count(); ++i) {
              const double dist = distance(domain_.vertex(i), m, NormKind::L1);
              if (dist > best_dist + kTieTolerance) {
                best_dist = dist;
                best = i;
              }
            }
            return domain_.vertex(best);
          },
      },
      spec_);
}

std::vector<Vector> Adversary::stream(std::uint64_t T) const {
  if (adaptive()) throw ProtocolError("an adaptive adversary has no fixed stream");
  std::vector<Vector> out;
  out.reserve(T);
  for (std::uint64_t t = 1; t <= T; ++t) out.push_back(next_outcome(t));
  return out;
}

}  // namespace treecal
