#include <stdexcept>
#include <string>

#include "treecal/engine.hpp"
#include "treecal/errors.hpp"

namespace treecal {

Vector ftl_action(std::span<const IntervalLoss> completed, const Vector& fallback) {
  if (completed.empty()) return fallback;
  return btl_action(completed);
}

Vector btl_action(std::span<const IntervalLoss> including_current) {
  if (including_current.empty()) throw std::domain_error("btl_action needs at least one interval");
  Vector acc(including_current.front().mean_outcome.size(), 0.0);
  double total = 0.0;
  for (const auto& loss : including_current) {
    const auto c = static_cast<double>(loss.count);
    add_scaled(acc, loss.mean_outcome, c);
    total += c;
  }
  for (double& x : acc) x /= total;
  return acc;
}

namespace {

class FollowTheLeader final : public Subroutine {
 public:
  explicit FollowTheLeader(Vector fallback) : fallback_(std::move(fallback)) {}
  Vector next_action(std::span<const IntervalLoss> losses) const override {
    return ftl_action(losses, fallback_);
  }

 private:
  Vector fallback_;
};

class BeTheLeader final : public Subroutine {
 public:
  Vector next_action(std::span<const IntervalLoss> losses) const override {
    return btl_action(losses);
  }
  bool clairvoyant() const override { return true; }
};

class ConstantAction final : public Subroutine {
 public:
  explicit ConstantAction(Vector action) : action_(std::move(action)) {}
  Vector next_action(std::span<const IntervalLoss>) const override { return action_; }

 private:
  Vector action_;
};

}  // namespace

SubroutineFactory follow_the_leader() {
  return [](const NodeContext& ctx) { return std::make_unique<FollowTheLeader>(ctx.base_point); };
}

SubroutineFactory be_the_leader() {
  return [](const NodeContext&) { return std::make_unique<BeTheLeader>(); };
}

SubroutineFactory constant_action(std::optional<Vector> action) {
  return [action](const NodeContext& ctx) {
    return std::make_unique<ConstantAction>(action ? *action : ctx.base_point);
  };
}

TreeSwap::TreeSwap(Domain domain, Regularizer regularizer, SubroutineFactory factory,
                   std::uint64_t T, int H, int L, std::optional<std::vector<Vector>> oracle,
                   TreeSwapOptions options)
    : domain_(std::move(domain)),
      regularizer_(std::move(regularizer)),
      factory_(std::move(factory)),
      T_(T),
      H_(H),
      L_(L),
      oracle_(std::move(oracle)),
      options_(std::move(options)) {
  validate_tree_shape(T, H, L);
  if (regularizer_.dim() != domain_.dim()) {
    throw ConfigError("regularizer dimension differs from the domain");
  }
  base_ = options_.base_point ? *options_.base_point : domain_.base_point();
  if (!domain_.contains(base_)) throw ConfigError("base point is not a member of " + domain_.name());
  if (oracle_ && oracle_->size() < T_) throw ConfigError("oracle stream shorter than T");
  const auto n = static_cast<std::size_t>(L);
  digits_.assign(n, 0);
  sub_.resize(n);
  losses_.resize(n);
  action_.assign(n, base_);
  node_sum_.assign(n, Vector(domain_.dim(), 0.0));
  node_count_.assign(n, 0);
  for (int l = 1; l <= L_; ++l) {
    open_node(l);
    if (l == 1) clairvoyant_ = sub_[0]->clairvoyant();
  }
}

void TreeSwap::open_node(int child_level) {
  const auto i = static_cast<std::size_t>(child_level - 1);
  NodeContext ctx{&domain_, &regularizer_, base_, H_, child_level - 1,
                  Label(digits_.begin(), digits_.begin() + (child_level - 1))};
  sub_[i] = factory_(ctx);
  if (!sub_[i]) throw ConfigError("subroutine factory returned null");
  if (sub_[i]->clairvoyant() && !oracle_) {
    throw ConfigError("clairvoyant subroutine requires the full outcome stream");
  }
  losses_[i].clear();
  play_next_child(child_level);
}

IntervalLoss TreeSwap::oracle_loss(int child_level) const {
  Label prefix(digits_.begin(), digits_.begin() + child_level);
  RoundInterval iv = interval_of(child_level, prefix, H_, L_);
  const std::uint64_t last = std::min(iv.last, T_);
  Vector sum(domain_.dim(), 0.0);
  for (std::uint64_t s = iv.first; s <= last; ++s) add_scaled(sum, (*oracle_)[s - 1], 1.0);
  const std::uint64_t count = last - iv.first + 1;
  for (double& x : sum) x /= static_cast<double>(count);
  return {std::move(sum), count, child_level, std::move(prefix)};
}

void TreeSwap::play_next_child(int child_level) {
  const auto i = static_cast<std::size_t>(child_level - 1);
  Vector action;
  if (sub_[i]->clairvoyant()) {
    std::vector<IntervalLoss> with_current = losses_[i];
    with_current.push_back(oracle_loss(child_level));
    action = sub_[i]->next_action(with_current);
  } else {
    action = sub_[i]->next_action(losses_[i]);
  }
  if (action.size() != domain_.dim() || !all_finite(action) || !domain_.contains(action)) {
    throw ProtocolError("subroutine at level " + std::to_string(child_level - 1) +
                        " returned a non-member action");
  }
  if (options_.record_assignments) {
    events_.push_back(
        {round_, child_level, Label(digits_.begin(), digits_.begin() + child_level), action});
  }
  action_[i] = std::move(action);
}

Forecast TreeSwap::forecast(std::uint64_t t) {
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

void TreeSwap::observe(std::uint64_t t, const Vector& y) {
  if (t != round_ || t > T_) {
    throw ProtocolError("observation for round " + std::to_string(t) + ", expected " +
                        std::to_string(round_));
  }
  domain_.require_member(y, "outcome");
  if (oracle_ && (*oracle_)[t - 1] != y) {
    throw ProtocolError("observed outcome differs from the oracle stream at round " +
                        std::to_string(t));
  }
  for (std::size_t i = 0; i < node_sum_.size(); ++i) {
    add_scaled(node_sum_[i], y, 1.0);
    ++node_count_[i];
  }
  ++round_;
  if (round_ > T_) return;

  int j = L_;
  while (j >= 1 && digits_[static_cast<std::size_t>(j - 1)] == H_ - 1) --j;
  // Children at levels j..L have completed; record their averaged losses first,
  // while digits_ still names them.
  for (int l = j; l <= L_; ++l) {
    const auto i = static_cast<std::size_t>(l - 1);
    if (l == j) {
      Vector nu = node_sum_[i];
      for (double& x : nu) x /= static_cast<double>(node_count_[i]);
      losses_[i].push_back(
          {std::move(nu), node_count_[i], l, Label(digits_.begin(), digits_.begin() + l)});
    }
    node_sum_[i].assign(domain_.dim(), 0.0);
    node_count_[i] = 0;
  }
  for (int l = L_; l > j; --l) digits_[static_cast<std::size_t>(l - 1)] = 0;
  ++digits_[static_cast<std::size_t>(j - 1)];

  play_next_child(j);
  for (int l = j + 1; l <= L_; ++l) open_node(l);
}

RunResult treeswap_run(const SubroutineFactory& factory, const Regularizer& R,
                       const Adversary& adversary, const Domain& domain, std::uint64_t T, int H,
                       int L, TreeSwapOptions options) {
  NodeContext probe_ctx{&domain, &R, domain.base_point(), H, 0, {}};
  const bool clairvoyant = factory(probe_ctx)->clairvoyant();
  std::optional<std::vector<Vector>> oracle;
  if (clairvoyant) {
    if (adversary.adaptive()) {
      throw ConfigError("clairvoyant subroutines cannot run against an adaptive adversary");
    }
    oracle = adversary.stream(T);
  }
  TreeSwap ts(domain, R, factory, T, H, L, std::move(oracle), std::move(options));
  RunResult r = run_forecaster(ts, adversary);
  r.assignments.assign(ts.assignments().begin(), ts.assignments().end());
  return r;
}

RunResult treeswap_run(const SubroutineFactory& factory, const Regularizer& R,
                       std::span<const Vector> outcomes, const Domain& domain, int H, int L,
                       TreeSwapOptions options) {
  const std::uint64_t T = outcomes.size();
  TreeSwap ts(domain, R, factory, T, H, L, std::vector<Vector>(outcomes.begin(), outcomes.end()),
              std::move(options));
  RunResult r = run_forecaster(ts, outcomes);
  r.assignments.assign(ts.assignments().begin(), ts.assignments().end());
  return r;
}

std::vector<NodeAudit> audit_nodes(const Domain& domain, std::span<const Vector> outcomes, int H,
                                   int L, std::optional<Vector> base_point) {
  const std::uint64_t T = outcomes.size();
  validate_tree_shape(T, H, L);
  const Vector base = base_point ? *base_point : domain.base_point();
  std::vector<NodeAudit> nodes;
  for (int level = 0; level < L; ++level) {
    const std::uint64_t span = checked_pow(static_cast<std::uint64_t>(H), L - level);
    const std::uint64_t child_span = span / static_cast<std::uint64_t>(H);
    const std::uint64_t n_nodes = (T + span - 1) / span;
    for (std::uint64_t node = 0; node < n_nodes; ++node) {
      NodeAudit audit;
      audit.level = level;
      audit.prefix = digits_base_h(node * span + 1, H, L);
      audit.prefix.resize(static_cast<std::size_t>(level));
      for (int h = 0; h < H; ++h) {
        const std::uint64_t first = node * span + static_cast<std::uint64_t>(h) * child_span + 1;
        if (first > T) break;
        const std::uint64_t last = std::min(first + child_span - 1, T);
        Vector sum(domain.dim(), 0.0);
        for (std::uint64_t s = first; s <= last; ++s) add_scaled(sum, outcomes[s - 1], 1.0);
        const std::uint64_t count = last - first + 1;
        for (double& x : sum) x /= static_cast<double>(count);
        Label prefix = audit.prefix;
        prefix.push_back(h);
        audit.ftl.push_back(ftl_action(audit.children, base));
        audit.children.push_back({std::move(sum), count, level + 1, std::move(prefix)});
        audit.btl.push_back(btl_action(audit.children));
      }
      nodes.push_back(std::move(audit));
    }
  }
  return nodes;
}

double node_external_regret(const NodeAudit& node, std::span<const Vector> actions,
                            const Regularizer& R, int H, int L) {
  if (actions.size() != node.children.size()) {
    throw std::invalid_argument("one action per child interval required");
  }
  const auto full = static_cast<double>(checked_pow(static_cast<std::uint64_t>(H), L - node.level - 1));
  const Vector best = btl_action(node.children);
  double regret = 0.0;
  for (std::size_t h = 0; h < actions.size(); ++h) {
    const double w = static_cast<double>(node.children[h].count) / full;
    regret += w * (bregman(R, node.children[h].mean_outcome, actions[h]) -
                   bregman(R, node.children[h].mean_outcome, best));
  }
  return regret;
}

double node_movement(const NodeAudit& node, NormKind kind) {
  double total = 0.0;
  for (std::size_t h = 0; h < node.ftl.size(); ++h) {
    const double r = distance(node.ftl[h], node.btl[h], kind);
    total += r * r;
  }
  return total;
}

}  // namespace treecal
