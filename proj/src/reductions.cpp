#include "treecal/reductions.hpp"

#include <cmath>
#include <set>
#include <stdexcept>

namespace treecal {

FiniteMenu::FiniteMenu(std::vector<Vector> elements) : elements_(std::move(elements)) {
  if (elements_.empty()) throw std::domain_error("menu must be non-empty");
  std::set<GroupKey> seen;
  const std::size_t d = elements_.front().size();
  for (const auto& e : elements_) {
    if (e.size() != d || !all_finite(e)) {
      throw std::domain_error("menu elements must be finite and of equal dimension");
    }
    if (!seen.insert(make_group_key(e, std::nullopt, false)).second) {
      throw std::domain_error("menu elements must be distinct");
    }
  }
}

FiniteMenu FiniteMenu::scaled(double c) const {
  std::vector<Vector> out;
  out.reserve(elements_.size());
  for (const auto& e : elements_) out.push_back(treecal::scaled(e, c));
  return FiniteMenu(std::move(out));
}

FiniteMenu FiniteMenu::cube_vertices(std::size_t d) {
  if (d == 0 || d > 20) throw std::domain_error("cube_vertices supports 1 <= d <= 20");
  std::vector<Vector> out;
  for (std::size_t mask = 0; mask < (std::size_t{1} << d); ++mask) {
    Vector v(d);
    for (std::size_t i = 0; i < d; ++i) v[i] = (mask >> i) & 1U ? 1.0 : 0.0;
    out.push_back(std::move(v));
  }
  return FiniteMenu(std::move(out));
}

std::size_t best_response_index(std::span<const double> p, const FiniteMenu& menu) {
  std::size_t best = 0;
  double best_value = dot(menu[0], p);
  for (std::size_t i = 1; i < menu.size(); ++i) {
    const double v = dot(menu[i], p);
    if (v < best_value) {
      best_value = v;
      best = i;
    }
  }
  return best;
}

const Vector& best_response(std::span<const double> p, const FiniteMenu& menu) {
  return menu[best_response_index(p, menu)];
}

double menu_diameter(const FiniteMenu& menu, NormKind kind) {
  double diam = 0.0;
  for (std::size_t i = 0; i < menu.size(); ++i) {
    for (std::size_t j = i + 1; j < menu.size(); ++j) {
      diam = std::max(diam, distance(menu[i], menu[j], kind));
    }
  }
  return diam;
}

SwapReduction calibrated_to_swap(Forecaster& calibrator, const FiniteMenu& menu,
                                 std::span<const Vector> outcomes, NormKind norm) {
  if (!menu.elements().empty() && menu[0].size() != calibrator.domain().dim()) {
    throw std::domain_error("menu dimension differs from the calibrator's domain");
  }
  RunResult run = run_forecaster(calibrator, outcomes);
  const Transcript& tr = run.transcript;
  std::vector<std::vector<double>> dists;
  std::vector<Vector> losses;
  dists.reserve(tr.size());
  losses.reserve(tr.size());
  for (const auto& round : tr.rounds()) {
    std::vector<double> dist(menu.size(), 0.0);
    for (const auto& atom : round.forecast.atoms) {
      dist[best_response_index(atom.point, menu)] += atom.weight;
    }
    dists.push_back(std::move(dist));
    losses.push_back(round.outcome);
  }
  const double regret = swap_regret_finite(menu.elements(), dists, losses);
  const double cal = calibration_error(tr, NormDistance{norm}, false);
  const double diam = menu_diameter(menu, dual_norm(norm));
  return {std::move(dists), regret, cal, diam, diam * cal, tr};
}

Vector embed_l1ball_to_simplex(std::span<const double> y) {
  if (y.empty()) throw std::domain_error("phi: input dimension must be at least 1");
  if (!all_finite(y)) throw std::domain_error("phi: non-finite input");
  const double n1 = norm_value(y, NormKind::L1);
  if (n1 > 1.0 + 1e-12) throw std::domain_error("phi: input outside the unit L1 ball");
  Vector z(2 * y.size() + 1, 0.0);
  for (std::size_t i = 0; i < y.size(); ++i) {
    z[2 * i] = std::max(y[i], 0.0);
    z[2 * i + 1] = std::max(-y[i], 0.0);
  }
  z.back() = std::max(1.0 - n1, 0.0);
  return z;
}

Vector project_simplex_to_l1ball(std::span<const double> z) {
  if (z.size() < 3 || z.size() % 2 == 0) throw std::domain_error("psi: input dimension must be odd and at least 3");
  if (!Domain::simplex(z.size()).contains(z)) throw std::domain_error("psi: input not in simplex");
  Vector y(z.size() / 2);
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = z[2 * i] - z[2 * i + 1];
  return y;
}

Transcript pushforward_l1ball(const Transcript& simplex_side) {
  const Domain& dom = simplex_side.domain();
  if (dom.kind() != DomainKind::Simplex || dom.dim() % 2 == 0 || dom.dim() < 3) {
    throw std::domain_error("pushforward needs a Simplex(2d + 1) transcript with d >= 1");
  }
  std::vector<Round> rounds;
  rounds.reserve(simplex_side.size());
  for (const auto& r : simplex_side.rounds()) {
    Round out;
    for (const auto& a : r.forecast.atoms) {
      out.forecast.atoms.push_back({project_simplex_to_l1ball(a.point), a.label, a.weight});
    }
    out.outcome = project_simplex_to_l1ball(r.outcome);
    rounds.push_back(std::move(out));
  }
  return Transcript(Domain::l1_ball(dom.dim() / 2, 1.0), std::move(rounds));
}

}  // namespace treecal
