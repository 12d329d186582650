#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "treecal/geometry.hpp"

namespace treecal {

enum class RegularizerKind { Euclidean, NegativeEntropy, Centered, Scaled };

/// A convex function R with value and gradient evaluators.
///
/// Values are cheap to copy; composite regularizers share their base through a
/// shared_ptr to an immutable object, so instances can be used from any thread.
class Regularizer {
 public:
  /// R(p) = ||p||_2^2. rho is recorded as the squared l2 diameter of `domain`,
  /// the largest value D_R can take there.
  static Regularizer euclidean(const Domain& domain);

  /// R(p) = sum p_i log p_i on the simplex, with 0 log 0 = 0. Gradient
  /// coordinates use log(max(p_i, clamp)), which keeps D_R finite on the
  /// boundary. rho is recorded as log d.
  static Regularizer negative_entropy(const Domain& domain, double clamp = 1e-12);

  RegularizerKind kind() const { return kind_; }
  double rho() const { return rho_; }
  double clamp() const { return clamp_; }
  std::size_t dim() const { return dim_; }
  std::string name() const;

  double value(std::span<const double> p) const;
  Vector gradient(std::span<const double> p) const;

  /// Throws std::domain_error when p lies outside the set where R is defined.
  void check_point(std::span<const double> p) const;

 private:
  friend Regularizer center_regularizer(const Regularizer&, const Domain&);
  friend Regularizer scale_regularizer(const Regularizer&, const Domain&);

  Regularizer(RegularizerKind kind, std::size_t dim, double rho, double clamp);

  RegularizerKind kind_;
  std::size_t dim_;
  double rho_;
  double clamp_ = 0.0;
  std::shared_ptr<const Regularizer> base_;
  // Centered only: the anchor p0 with R(p0) and grad R(p0) cached.
  Vector anchor_;
  Vector anchor_gradient_;
  double anchor_value_ = 0.0;
};

/// D_R(y|p) = R(y) - R(p) - <grad R(p), y - p>. Exactly zero when y == p.
double bregman(const Regularizer& R, std::span<const double> y, std::span<const double> p);

struct MixtureMinimum {
  Vector mean;        ///< sum_i w_i y_i, the minimizer of sum_i w_i D_R(y_i | .)
  double jensen_gap;  ///< sum_i w_i R(y_i) - R(mean), the minimum value
};

/// Minimizer and minimum of the expected Bregman loss under a finite mixture.
MixtureMinimum mixture_minimizer(std::span<const Vector> points, std::span<const double> weights,
                                 const Regularizer& R);

/// R'(p) = R(p) - R(p0) - <grad R(p0), p - p0> with p0 = domain.base_point().
/// R'(p0) = 0, p0 minimizes R', and D_{R'} equals D_R everywhere.
Regularizer center_regularizer(const Regularizer& R, const Domain& domain);

/// R'(p) = 4 R(p / 2). Requires a centrally symmetric domain.
Regularizer scale_regularizer(const Regularizer& R, const Domain& domain);

struct ConvexityProbe {
  double min_ratio;     ///< min D_R(y|p) / ||y - p||^2 over sampled pairs
  double max_bregman;   ///< max D_R(y|p) over sampled pairs
  std::size_t pairs;    ///< pairs that entered min_ratio
};

/// Measures the strong-convexity constant and Bregman range of R on sampled
/// member pairs. A quarter of the sampled points are domain vertices so that
/// boundary behaviour shows up in max_bregman. Deterministic given the seed.
ConvexityProbe strong_convexity_probe(const Regularizer& R, NormKind kind, const Domain& domain,
                                      std::size_t n_samples, std::uint64_t seed);

}  // namespace treecal
