#pragma once

#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <variant>
#include <vector>

#include "treecal/geometry.hpp"
#include "treecal/scoring.hpp"

namespace treecal {

/// Tree-node identifier attached to an atom: the digit prefix h_1..h_l.
using Label = std::vector<int>;

struct Atom {
  Vector point;
  std::optional<Label> label;
  double weight = 0.0;
};

/// Finite-support distribution over (point, optional label) pairs.
struct Forecast {
  std::vector<Atom> atoms;

  static Forecast point_mass(Vector p);
  /// Weighted mean of the atom points.
  Vector mean() const;
  /// Weights nonnegative and summing to one within 1e-12; labels distinct;
  /// every point a member of `domain`. Throws std::domain_error otherwise.
  void validate(const Domain& domain) const;
};

struct Round {
  Forecast forecast;
  Vector outcome;
};

/// The full record (x_t, y_t), t = 1..T. Validated once at construction and
/// immutable afterwards.
class Transcript {
 public:
  Transcript(Domain domain, std::vector<Round> rounds);

  const Domain& domain() const { return domain_; }
  std::span<const Round> rounds() const { return rounds_; }
  std::size_t size() const { return rounds_.size(); }
  const Round& operator[](std::size_t i) const { return rounds_[i]; }

 private:
  Domain domain_;
  std::vector<Round> rounds_;
};

struct PureRound {
  Vector prediction;
  Vector outcome;
};

/// Sampled point predictions (p_t, y_t).
class PureTranscript {
 public:
  PureTranscript(Domain domain, std::vector<PureRound> rounds);

  const Domain& domain() const { return domain_; }
  std::span<const PureRound> rounds() const { return rounds_; }
  std::size_t size() const { return rounds_.size(); }

  /// The same data as a transcript of unlabeled point-mass forecasts.
  Transcript as_transcript() const;

 private:
  Domain domain_;
  std::vector<PureRound> rounds_;
};

/// Coordinates are rounded to `digits` decimal places before keying so that
/// equal averages computed in different orders land in the same group.
struct GroupingOptions {
  int digits = 12;
};

struct GroupKey {
  std::vector<std::int64_t> coords;
  std::optional<Label> label;
  auto operator<=>(const GroupKey&) const = default;
  bool operator==(const GroupKey&) const = default;
};

GroupKey make_group_key(std::span<const double> point, const std::optional<Label>& label,
                        bool labeled, const GroupingOptions& opts = {});

struct Group {
  Vector point;  ///< representative forecast point
  double mass;   ///< sum_t x_t(key)
  Vector nu;     ///< mass-weighted mean outcome
};

/// Conditional outcome means nu_p for every realized key. Within a group the
/// contributions are summed in a canonical order, so permuting rounds gives
/// bit-identical results.
std::map<GroupKey, Group> conditional_means(const Transcript& tr, bool labeled,
                                            const GroupingOptions& opts = {});

struct NormDistance {
  NormKind kind;
};
struct SquaredNormDistance {
  NormKind kind;
};
struct BregmanDistance {
  Regularizer regularizer;
};
using Distance = std::variant<NormDistance, SquaredNormDistance, BregmanDistance>;

/// D(nu, p) for the given distance.
double evaluate_distance(const Distance& distance, std::span<const double> nu,
                         std::span<const double> p);

/// sum over keys of mass(key) * D(nu(key), point(key)).
double calibration_error(const Transcript& tr, const Distance& distance, bool labeled,
                         const GroupingOptions& opts = {});

/// Calibration with indicator masses over the sampled predictions.
double pure_calibration_error(const PureTranscript& tr, const Distance& distance,
                              const GroupingOptions& opts = {});

enum class SwapAudit { Off, On };

/// Full swap regret for losses l_t(p) = D_R(y_t | p), via its closed form as the
/// D_R calibration error. With SwapAudit::On the value is also recomputed from
/// the raw losses with every key swapped to its conditional mean, and a
/// disagreement beyond 1e-9 (relative to max(1, |value|)) throws ProtocolError.
double swap_regret_bregman(const Transcript& tr, const Regularizer& R, bool labeled,
                           SwapAudit audit = SwapAudit::Off, const GroupingOptions& opts = {});

/// The audit route on its own: sum over keys and rounds of
/// x_t(key) * (D_R(y_t | p) - D_R(y_t | nu_key)).
double swap_regret_bregman_direct(const Transcript& tr, const Regularizer& R, bool labeled,
                                  const GroupingOptions& opts = {});

/// Full swap regret over a finite menu with linear losses <v_t, .>:
///   sum_p max_q sum_t dist_t(p) <v_t, p - q>.
/// dists[t][i] is the probability of menu[i] in round t.
double swap_regret_finite(std::span<const Vector> menu, std::span<const std::vector<double>> dists,
                          std::span<const Vector> losses);

/// Largest realized loss D_R(y_t | p) over every outcome y_t and every distinct
/// forecast point p of the run.
double realized_loss_cap(const Transcript& tr, const Regularizer& R,
                         const GroupingOptions& opts = {});

}  // namespace treecal
