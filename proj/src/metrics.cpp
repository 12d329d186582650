#include "treecal/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>
#include <string>

#include "treecal/errors.hpp"

namespace treecal {

Forecast Forecast::point_mass(Vector p) { return Forecast{{Atom{std::move(p), std::nullopt, 1.0}}}; }

Vector Forecast::mean() const {
  if (atoms.empty()) throw std::domain_error("empty forecast has no mean");
  Vector m(atoms.front().point.size(), 0.0);
  for (const auto& a : atoms) add_scaled(m, a.point, a.weight);
  return m;
}

void Forecast::validate(const Domain& domain) const {
  if (atoms.empty()) throw std::domain_error("forecast has no atoms");
  double total = 0.0;
  std::set<Label> labels;
  for (const auto& a : atoms) {
    if (!(a.weight >= 0.0)) throw std::domain_error("forecast weight must be nonnegative");
    total += a.weight;
    domain.require_member(a.point, "forecast atom");
    if (a.label && !labels.insert(*a.label).second) {
      throw std::domain_error("duplicate label within one forecast");
    }
  }
  if (std::abs(total - 1.0) > 1e-12) throw std::domain_error("forecast weights must sum to 1");
}

Transcript::Transcript(Domain domain, std::vector<Round> rounds)
    : domain_(std::move(domain)), rounds_(std::move(rounds)) {
  if (rounds_.empty()) throw std::domain_error("transcript must have at least one round");
  for (const auto& r : rounds_) {
    r.forecast.validate(domain_);
    domain_.require_member(r.outcome, "outcome");
  }
}

PureTranscript::PureTranscript(Domain domain, std::vector<PureRound> rounds)
    : domain_(std::move(domain)), rounds_(std::move(rounds)) {
  if (rounds_.empty()) throw std::domain_error("transcript must have at least one round");
  for (const auto& r : rounds_) {
    domain_.require_member(r.prediction, "prediction");
    domain_.require_member(r.outcome, "outcome");
  }
}

Transcript PureTranscript::as_transcript() const {
  std::vector<Round> rounds;
  rounds.reserve(rounds_.size());
  for (const auto& r : rounds_) rounds.push_back({Forecast::point_mass(r.prediction), r.outcome});
  return Transcript(domain_, std::move(rounds));
}

GroupKey make_group_key(std::span<const double> point, const std::optional<Label>& label,
                        bool labeled, const GroupingOptions& opts) {
  const double scale = std::pow(10.0, opts.digits);
  GroupKey key;
  key.coords.reserve(point.size());
  for (double x : point) {
    const double q = std::round(x * scale);
    if (!std::isfinite(q) || std::abs(q) >= 9.2e18) {
      throw std::domain_error("coordinate too large to key at the requested precision");
    }
    key.coords.push_back(static_cast<std::int64_t>(q));
  }
  if (labeled) key.label = label;
  return key;
}

namespace {

struct Contribution {
  double weight;
  const Vector* outcome;
};

bool canonical_less(const Contribution& a, const Contribution& b) {
  if (a.weight != b.weight) return a.weight < b.weight;
  return *a.outcome < *b.outcome;
}

}  // namespace

std::map<GroupKey, Group> conditional_means(const Transcript& tr, bool labeled,
                                            const GroupingOptions& opts) {
  struct Pending {
    Vector point;
    std::vector<Contribution> parts;
  };
  std::map<GroupKey, Pending> pending;
  for (const auto& round : tr.rounds()) {
    for (const auto& atom : round.forecast.atoms) {
      if (atom.weight == 0.0) continue;
      auto key = make_group_key(atom.point, atom.label, labeled, opts);
      auto [it, inserted] = pending.try_emplace(std::move(key));
      if (inserted || atom.point < it->second.point) it->second.point = atom.point;
      it->second.parts.push_back({atom.weight, &round.outcome});
    }
  }

  std::map<GroupKey, Group> groups;
  const std::size_t d = tr.domain().dim();
  for (auto& [key, p] : pending) {
    std::sort(p.parts.begin(), p.parts.end(), canonical_less);
    double mass = 0.0;
    Vector sum(d, 0.0);
    for (const auto& c : p.parts) {
      mass += c.weight;
      add_scaled(sum, *c.outcome, c.weight);
    }
    for (auto& x : sum) x /= mass;
    groups.emplace(key, Group{std::move(p.point), mass, std::move(sum)});
  }
  return groups;
}

double evaluate_distance(const Distance& distance, std::span<const double> nu,
                         std::span<const double> p) {
  return std::visit(
      [&](const auto& d) -> double {
        using D = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<D, NormDistance>) {
          return treecal::distance(nu, p, d.kind);
        } else if constexpr (std::is_same_v<D, SquaredNormDistance>) {
          const double r = treecal::distance(nu, p, d.kind);
          return r * r;
        } else {
          return bregman(d.regularizer, nu, p);
        }
      },
      distance);
}

double calibration_error(const Transcript& tr, const Distance& distance, bool labeled,
                         const GroupingOptions& opts) {
  double total = 0.0;
  for (const auto& [key, g] : conditional_means(tr, labeled, opts)) {
    total += g.mass * evaluate_distance(distance, g.nu, g.point);
  }
  return total;
}

double pure_calibration_error(const PureTranscript& tr, const Distance& distance,
                              const GroupingOptions& opts) {
  return calibration_error(tr.as_transcript(), distance, false, opts);
}

double swap_regret_bregman_direct(const Transcript& tr, const Regularizer& R, bool labeled,
                                  const GroupingOptions& opts) {
  const auto groups = conditional_means(tr, labeled, opts);
  std::map<GroupKey, double> gain;
  for (const auto& round : tr.rounds()) {
    for (const auto& atom : round.forecast.atoms) {
      if (atom.weight == 0.0) continue;
      const auto key = make_group_key(atom.point, atom.label, labeled, opts);
      const Group& g = groups.at(key);
      gain[key] += atom.weight *
                   (bregman(R, round.outcome, g.point) - bregman(R, round.outcome, g.nu));
    }
  }
  double total = 0.0;
  for (const auto& [key, v] : gain) total += v;
  return total;
}

double swap_regret_bregman(const Transcript& tr, const Regularizer& R, bool labeled,
                           SwapAudit audit, const GroupingOptions& opts) {
  const double closed = calibration_error(tr, BregmanDistance{R}, labeled, opts);
  if (audit == SwapAudit::On) {
    const double direct = swap_regret_bregman_direct(tr, R, labeled, opts);
    if (std::abs(direct - closed) > 1e-9 * std::max(1.0, std::abs(closed))) {
      throw ProtocolError("swap regret audit mismatch: closed form " + std::to_string(closed) +
                          " vs direct " + std::to_string(direct));
    }
  }
  return closed;
}

double swap_regret_finite(std::span<const Vector> menu, std::span<const std::vector<double>> dists,
                          std::span<const Vector> losses) {
  if (menu.empty()) throw std::domain_error("swap_regret_finite: empty menu");
  if (dists.size() != losses.size()) {
    throw std::domain_error("swap_regret_finite: dists and losses differ in length");
  }
  const std::size_t d = menu.front().size();
  // Cumulative loss vector seen by each menu element: A_p = sum_t dist_t(p) v_t.
  std::vector<Vector> cumulative(menu.size(), Vector(d, 0.0));
  for (std::size_t t = 0; t < dists.size(); ++t) {
    if (dists[t].size() != menu.size()) {
      throw std::domain_error("swap_regret_finite: distribution length differs from menu");
    }
    for (std::size_t i = 0; i < menu.size(); ++i) {
      if (dists[t][i] != 0.0) add_scaled(cumulative[i], losses[t], dists[t][i]);
    }
  }
  double regret = 0.0;
  for (std::size_t i = 0; i < menu.size(); ++i) {
    const double own = dot(cumulative[i], menu[i]);
    double best = own;
    for (const auto& q : menu) best = std::min(best, dot(cumulative[i], q));
    regret += own - best;
  }
  return regret;
}

double realized_loss_cap(const Transcript& tr, const Regularizer& R, const GroupingOptions& opts) {
  std::map<GroupKey, Vector> points;
  std::map<GroupKey, Vector> outcomes;
  for (const auto& round : tr.rounds()) {
    outcomes.try_emplace(make_group_key(round.outcome, std::nullopt, false, opts), round.outcome);
    for (const auto& atom : round.forecast.atoms) {
      points.try_emplace(make_group_key(atom.point, std::nullopt, false, opts), atom.point);
    }
  }
  // D_R(y|p) = R(y) - R(p) - <grad R(p), y> + <grad R(p), p>, with the
  // per-point and per-outcome terms computed once.
  std::vector<double> outcome_values;
  outcome_values.reserve(outcomes.size());
  for (const auto& [yk, y] : outcomes) {
    R.check_point(y);
    outcome_values.push_back(R.value(y));
  }
  double cap = 0.0;
  for (const auto& [pk, p] : points) {
    R.check_point(p);
    const Vector g = R.gradient(p);
    const double offset = dot(g, p) - R.value(p);
    std::size_t i = 0;
    for (const auto& [yk, y] : outcomes) cap = std::max(cap, outcome_values[i++] + offset - dot(g, y));
  }
  return cap;
}

}  // namespace treecal
