#include <stdexcept>
#include <string>

#include "treecal/engine.hpp"
#include "treecal/errors.hpp"

namespace treecal {

void validate_tree_shape(std::uint64_t T, int H, int L) {
  if (H < 2) throw ConfigError("H must be at least 2");
  if (L < 1) throw ConfigError("L must be at least 1");
  if (T < 1) throw ConfigError("T must be at least 1");
  std::uint64_t full = 0;
  std::uint64_t parent = 0;
  try {
    full = checked_pow(static_cast<std::uint64_t>(H), L);
    parent = checked_pow(static_cast<std::uint64_t>(H), L - 1);
  } catch (const std::overflow_error&) {
    throw ConfigError("H^L does not fit in 64 bits");
  }
  if (T > full) {
    throw ConfigError("T = " + std::to_string(T) + " exceeds H^L = " + std::to_string(full));
  }
  if (T < parent) {
    throw ConfigError("T = " + std::to_string(T) + " is below H^(L-1) = " +
                      std::to_string(parent));
  }
}

TreeCal::TreeCal(Domain domain, std::uint64_t T, int H, int L, TreeCalOptions options)
    : domain_(std::move(domain)), T_(T), H_(H), L_(L), options_(std::move(options)) {
  validate_tree_shape(T, H, L);
  base_ = options_.base_point ? *options_.base_point : domain_.base_point();
  if (!domain_.contains(base_)) throw ConfigError("base point is not a member of " + domain_.name());
  const auto n = static_cast<std::size_t>(L);
  const std::size_t d = domain_.dim();
  digits_.assign(n, 0);
  action_.assign(n, base_);
  sibling_sum_.assign(n, Vector(d, 0.0));
  sibling_count_.assign(n, 0.0);
  node_sum_.assign(n, Vector(d, 0.0));
  node_count_.assign(n, 0.0);
  for (int l = 1; l <= L_; ++l) assign(l, base_);
}

void TreeCal::assign(int level, Vector action) {
  const auto i = static_cast<std::size_t>(level - 1);
  if (options_.record_assignments) {
    events_.push_back({round_, level, Label(digits_.begin(), digits_.begin() + level), action});
  }
  action_[i] = std::move(action);
}

Forecast TreeCal::forecast(std::uint64_t t) {
  if (t != round_ || t > T_) {
    throw ProtocolError("forecast requested for round " + std::to_string(t) + ", expected " +
                        std::to_string(round_));
  }
  Forecast f;
  f.atoms.reserve(action_.size());
  const double w = 1.0 / static_cast<double>(L_);
  for (int l = 1; l <= L_; ++l) {
    f.atoms.push_back({action_[static_cast<std::size_t>(l - 1)],
                       Label(digits_.begin(), digits_.begin() + l), w});
  }
  return f;
}

void TreeCal::observe(std::uint64_t t, const Vector& y) {
  if (t != round_ || t > T_) {
    throw ProtocolError("observation for round " + std::to_string(t) + ", expected " +
                        std::to_string(round_));
  }
  domain_.require_member(y, "outcome");
  for (std::size_t i = 0; i < node_sum_.size(); ++i) {
    add_scaled(node_sum_[i], y, 1.0);
    node_count_[i] += 1.0;
  }
  ++round_;
  if (round_ > T_) return;

  // Increment the digit vector; every level from the carry position down ends a node.
  int j = L_;
  while (j >= 1 && digits_[static_cast<std::size_t>(j - 1)] == H_ - 1) {
    digits_[static_cast<std::size_t>(j - 1)] = 0;
    --j;
  }
  ++digits_[static_cast<std::size_t>(j - 1)];

  const auto ij = static_cast<std::size_t>(j - 1);
  Vector nu = node_sum_[ij];
  for (double& x : nu) x /= node_count_[ij];
  add_scaled(sibling_sum_[ij], nu, node_count_[ij]);
  sibling_count_[ij] += node_count_[ij];
  node_sum_[ij].assign(domain_.dim(), 0.0);
  node_count_[ij] = 0.0;
  if (options_.fault_skip_mean_update) {
    assign(j, base_);
  } else {
    Vector next = sibling_sum_[ij];
    for (double& x : next) x /= sibling_count_[ij];
    assign(j, std::move(next));
  }

  for (int l = j + 1; l <= L_; ++l) {
    const auto i = static_cast<std::size_t>(l - 1);
    sibling_sum_[i].assign(domain_.dim(), 0.0);
    sibling_count_[i] = 0.0;
    node_sum_[i].assign(domain_.dim(), 0.0);
    node_count_[i] = 0.0;
    assign(l, base_);
  }
}

RunResult run_forecaster(Forecaster& forecaster, const Adversary& adversary) {
  std::vector<Round> rounds;
  const std::uint64_t T = forecaster.horizon();
  rounds.reserve(T);
  for (std::uint64_t t = 1; t <= T; ++t) {
    Forecast f = forecaster.forecast(t);
    Vector y = adversary.next_outcome(t, &f);
    forecaster.observe(t, y);
    rounds.push_back({std::move(f), std::move(y)});
  }
  return {Transcript(forecaster.domain(), std::move(rounds)), {}};
}

RunResult run_forecaster(Forecaster& forecaster, std::span<const Vector> outcomes) {
  const std::uint64_t T = forecaster.horizon();
  if (outcomes.size() < T) throw std::invalid_argument("outcome stream shorter than the horizon");
  std::vector<Round> rounds;
  rounds.reserve(T);
  for (std::uint64_t t = 1; t <= T; ++t) {
    Forecast f = forecaster.forecast(t);
    forecaster.observe(t, outcomes[t - 1]);
    rounds.push_back({std::move(f), outcomes[t - 1]});
  }
  return {Transcript(forecaster.domain(), std::move(rounds)), {}};
}

RunResult treecal_run(const Domain& domain, std::uint64_t T, int H, int L,
                      const Adversary& adversary, TreeCalOptions options) {
  TreeCal tc(domain, T, H, L, std::move(options));
  RunResult r = run_forecaster(tc, adversary);
  r.assignments.assign(tc.assignments().begin(), tc.assignments().end());
  return r;
}

}  // namespace treecal
