#pragma once

#include "treecal/engine.hpp"

namespace treecal {

/// Non-empty list of distinct points (distinct after 12-digit quantization).
class FiniteMenu {
 public:
  explicit FiniteMenu(std::vector<Vector> elements);

  std::span<const Vector> elements() const { return elements_; }
  std::size_t size() const { return elements_.size(); }
  const Vector& operator[](std::size_t i) const { return elements_[i]; }
  FiniteMenu scaled(double c) const;

  /// Vertices {0,1}^d.
  static FiniteMenu cube_vertices(std::size_t d);

 private:
  std::vector<Vector> elements_;
};

/// argmin_q <q, p> over the menu, lowest index on ties.
std::size_t best_response_index(std::span<const double> p, const FiniteMenu& menu);
const Vector& best_response(std::span<const double> p, const FiniteMenu& menu);

/// max pairwise distance between menu elements.
double menu_diameter(const FiniteMenu& menu, NormKind kind);

struct SwapReduction {
  /// dists[t][i]: probability of menu[i] in round t (the best-response pushforward).
  std::vector<std::vector<double>> dists;
  double swap_regret;
  double calibration;  ///< Cal under `norm` of the calibrator's forecasts
  double diameter;     ///< menu diameter under the dual norm
  double bound;        ///< diameter * calibration
  Transcript transcript;
};

/// Runs the calibrator on the outcome stream, treating each outcome as a
/// linear loss vector, and plays the best response to every forecast atom.
SwapReduction calibrated_to_swap(Forecaster& calibrator, const FiniteMenu& menu,
                                 std::span<const Vector> outcomes, NormKind norm);

/// phi: L1Ball(d, 1) -> Simplex(2d + 1),
///   (y_1^+, y_1^-, ..., y_d^+, y_d^-, 1 - ||y||_1).
Vector embed_l1ball_to_simplex(std::span<const double> y);
/// psi: Simplex(2d + 1) -> L1Ball(d, 1), psi(z)_i = z_{2i-1} - z_{2i}.
Vector project_simplex_to_l1ball(std::span<const double> z);

/// Maps every atom and outcome of a Simplex(2d + 1) transcript through psi.
/// Atoms keep their labels; the result lives on L1Ball(d, 1).
Transcript pushforward_l1ball(const Transcript& simplex_side);

}  // namespace treecal
