#pragma once

#include <functional>
#include <memory>
#include <optional>

#include "treecal/adversaries.hpp"
#include "treecal/metrics.hpp"
#include "treecal/scoring.hpp"
#include "treecal/transcript_io.hpp"

namespace treecal {

/// Sequential forecasting protocol: forecast(t), then observe(t, y), then t + 1.
class Forecaster {
 public:
  virtual ~Forecaster() = default;
  virtual Forecast forecast(std::uint64_t t) = 0;
  virtual void observe(std::uint64_t t, const Vector& y) = 0;
  virtual const Domain& domain() const = 0;
  virtual std::uint64_t horizon() const = 0;
};

/// Throws ConfigError unless H >= 2, L >= 1 and H^(L-1) <= T <= H^L.
void validate_tree_shape(std::uint64_t T, int H, int L);

struct TreeCalOptions {
  /// Replaces the domain's base point as the action of every first child.
  std::optional<Vector> base_point;
  bool record_assignments = false;
  /// Fault injection for the verification suite: first children keep the base
  /// point and later siblings are never updated to the running mean.
  bool fault_skip_mean_update = false;
};

/// Keeps only the active root-to-leaf path: per level the assigned action,
/// the completed-sibling statistics of the parent, and the running outcome sum
/// of the current node.
class TreeCal final : public Forecaster {
 public:
  TreeCal(Domain domain, std::uint64_t T, int H, int L, TreeCalOptions options = {});

  /// Uniform mixture over the L path actions; atom l is labeled with the
  /// first l digits of t-1.
  Forecast forecast(std::uint64_t t) override;
  void observe(std::uint64_t t, const Vector& y) override;

  const Domain& domain() const override { return domain_; }
  std::uint64_t horizon() const override { return T_; }
  int arity() const { return H_; }
  int depth() const { return L_; }
  std::uint64_t current_round() const { return round_; }
  std::span<const Vector> path_actions() const { return action_; }
  std::span<const AssignmentEvent> assignments() const { return events_; }

 private:
  void assign(int level, Vector action);

  Domain domain_;
  std::uint64_t T_;
  int H_;
  int L_;
  TreeCalOptions options_;
  Vector base_;
  std::uint64_t round_ = 1;
  std::vector<int> digits_;
  // Index l-1 holds level l.
  std::vector<Vector> action_;
  std::vector<Vector> sibling_sum_;
  std::vector<double> sibling_count_;
  std::vector<Vector> node_sum_;
  std::vector<double> node_count_;
  std::vector<AssignmentEvent> events_;
};

/// Averaged loss of one completed (or, for clairvoyant subroutines, current)
/// child interval, represented by its outcome mean. For Bregman losses the mean
/// and count are sufficient.
struct IntervalLoss {
  Vector mean_outcome;
  std::uint64_t count = 0;
  int level = 0;
  Label prefix;
};

/// Where a subroutine instance sits: the internal node at `level` with
/// `prefix`; its actions are played by the children at level + 1.
struct NodeContext {
  const Domain* domain;
  const Regularizer* regularizer;
  Vector base_point;
  int H;
  int level;
  Label prefix;
};

/// Horizon-H external-regret algorithm run at one internal node.
class Subroutine {
 public:
  virtual ~Subroutine() = default;
  /// Action for the next child given the losses of the earlier children (plus
  /// the current child's when clairvoyant()).
  virtual Vector next_action(std::span<const IntervalLoss> losses) const = 0;
  virtual bool clairvoyant() const { return false; }
};

using SubroutineFactory = std::function<std::unique_ptr<Subroutine>(const NodeContext&)>;

/// Count-weighted mean of the interval means, or `fallback` for an empty list.
Vector ftl_action(std::span<const IntervalLoss> completed, const Vector& fallback);
/// Count-weighted mean including the current interval. Throws
/// std::domain_error on an empty list.
Vector btl_action(std::span<const IntervalLoss> including_current);

SubroutineFactory follow_the_leader();
SubroutineFactory be_the_leader();
/// Always plays `action`, or the node's base point when absent.
SubroutineFactory constant_action(std::optional<Vector> action = std::nullopt);

struct TreeSwapOptions {
  std::optional<Vector> base_point;
  bool record_assignments = false;
};

/// Labeled TreeSwap with one fresh subroutine per internal node. Clairvoyant
/// subroutines need the whole outcome stream up front (`oracle`).
class TreeSwap final : public Forecaster {
 public:
  TreeSwap(Domain domain, Regularizer regularizer, SubroutineFactory factory, std::uint64_t T,
           int H, int L, std::optional<std::vector<Vector>> oracle = std::nullopt,
           TreeSwapOptions options = {});

  Forecast forecast(std::uint64_t t) override;
  void observe(std::uint64_t t, const Vector& y) override;

  const Domain& domain() const override { return domain_; }
  std::uint64_t horizon() const override { return T_; }
  bool clairvoyant() const { return clairvoyant_; }
  std::span<const AssignmentEvent> assignments() const { return events_; }

 private:
  void open_node(int child_level);
  void play_next_child(int child_level);
  IntervalLoss oracle_loss(int child_level) const;

  Domain domain_;
  Regularizer regularizer_;
  SubroutineFactory factory_;
  std::uint64_t T_;
  int H_;
  int L_;
  std::optional<std::vector<Vector>> oracle_;
  TreeSwapOptions options_;
  Vector base_;
  bool clairvoyant_ = false;
  std::uint64_t round_ = 1;
  std::vector<int> digits_;
  // Index l-1 holds the subroutine of the level l-1 node and its children's state.
  std::vector<std::unique_ptr<Subroutine>> sub_;
  std::vector<std::vector<IntervalLoss>> losses_;
  std::vector<Vector> action_;
  std::vector<Vector> node_sum_;
  std::vector<std::uint64_t> node_count_;
  std::vector<AssignmentEvent> events_;
};

struct RunResult {
  Transcript transcript;
  std::vector<AssignmentEvent> assignments;
};

/// Drives any forecaster against an adversary for its full horizon.
RunResult run_forecaster(Forecaster& forecaster, const Adversary& adversary);
/// Replays a fixed outcome stream.
RunResult run_forecaster(Forecaster& forecaster, std::span<const Vector> outcomes);

RunResult treecal_run(const Domain& domain, std::uint64_t T, int H, int L,
                      const Adversary& adversary, TreeCalOptions options = {});

/// Clairvoyant subroutines are refused (ConfigError) against adaptive adversaries.
RunResult treeswap_run(const SubroutineFactory& factory, const Regularizer& R,
                       const Adversary& adversary, const Domain& domain, std::uint64_t T, int H,
                       int L, TreeSwapOptions options = {});
RunResult treeswap_run(const SubroutineFactory& factory, const Regularizer& R,
                       std::span<const Vector> outcomes, const Domain& domain, int H, int L,
                       TreeSwapOptions options = {});

/// Per-node view of an outcome stream: the child interval losses together with
/// the FTL action p_h and the BTL action p~_h for every realized child.
struct NodeAudit {
  int level;
  Label prefix;
  std::vector<IntervalLoss> children;
  std::vector<Vector> ftl;
  std::vector<Vector> btl;
};

std::vector<NodeAudit> audit_nodes(const Domain& domain, std::span<const Vector> outcomes, int H,
                                   int L, std::optional<Vector> base_point = std::nullopt);

/// sum_h w_h D_R(nu_h | a_h) - min_p sum_h w_h D_R(nu_h | p) with
/// w_h = count_h / H^(L-l); the minimum sits at the weighted mean.
double node_external_regret(const NodeAudit& node, std::span<const Vector> actions,
                            const Regularizer& R, int H, int L);

/// sum_h ||p_h - p~_h||^2.
double node_movement(const NodeAudit& node, NormKind kind);

struct SampleTreeCalResult {
  PureTranscript pure;
  Transcript inner;
};

/// Inner TreeCal over T/S rounds; every inner round draws S predictions i.i.d.
/// from its forecast and is fed the mean of the S outcomes.
SampleTreeCalResult sample_treecal_run(const Domain& domain, std::uint64_t T, int H, int L,
                                       std::uint64_t S, const Adversary& adversary,
                                       std::uint64_t sampler_seed);

}  // namespace treecal
