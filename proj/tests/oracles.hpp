#pragma once
// Reference computations written directly from the definitions, sharing no
// code paths with the library beyond plain data types.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <utility>
#include <vector>

#include "treecal/metrics.hpp"

namespace oracle {

using Vec = std::vector<double>;

inline double l1(const Vec& a, const Vec& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] - b[i]);
  return s;
}

inline double l2sq(const Vec& a, const Vec& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return s;
}

inline double linf(const Vec& a, const Vec& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s = std::max(s, std::abs(a[i] - b[i]));
  return s;
}

/// KL(y || p) = sum y_i log(y_i / p_i), terms with y_i = 0 dropped.
inline double kl(const Vec& y, const Vec& p) {
  double s = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (y[i] > 0.0) s += y[i] * std::log(y[i] / p[i]);
  }
  return s;
}

/// Mean of outcomes[first-1 .. last-1].
inline Vec slice_mean(const std::vector<Vec>& outcomes, std::uint64_t first, std::uint64_t last) {
  Vec m(outcomes.front().size(), 0.0);
  for (std::uint64_t s = first; s <= last; ++s) {
    for (std::size_t i = 0; i < m.size(); ++i) m[i] += outcomes[s - 1][i];
  }
  for (double& x : m) x /= static_cast<double>(last - first + 1);
  return m;
}

inline std::uint64_t ipow(std::uint64_t b, int e) {
  std::uint64_t r = 1;
  while (e-- > 0) r *= b;
  return r;
}

/// Action of level l at round t, straight from the update rule: the base point
/// for a first child, else the mean of every outcome in the elder siblings.
inline Vec treecal_action(const std::vector<Vec>& outcomes, const Vec& base, std::uint64_t t, int H,
                          int L, int l) {
  const std::uint64_t child = ipow(static_cast<std::uint64_t>(H), L - l);
  const std::uint64_t parent = child * static_cast<std::uint64_t>(H);
  const std::uint64_t parent_first = ((t - 1) / parent) * parent + 1;
  const std::uint64_t h = ((t - 1) % parent) / child;
  if (h == 0) return base;
  return slice_mean(outcomes, parent_first, parent_first + h * child - 1);
}

/// Digits of t-1 in base H, most significant first.
inline std::vector<int> digits(std::uint64_t t, int H, int L) {
  std::vector<int> d(static_cast<std::size_t>(L));
  std::uint64_t v = t - 1;
  for (int i = L - 1; i >= 0; --i) {
    d[static_cast<std::size_t>(i)] = static_cast<int>(v % static_cast<std::uint64_t>(H));
    v /= static_cast<std::uint64_t>(H);
  }
  return d;
}

struct KeyedGroup {
  Vec point;
  std::optional<std::vector<int>> label;
  double mass = 0.0;
  Vec weighted_sum;
};

/// Linear-scan grouping on exact point equality (test transcripts use exactly
/// repeated points).
inline std::vector<KeyedGroup> group(const treecal::Transcript& tr, bool labeled) {
  std::vector<KeyedGroup> groups;
  for (const auto& r : tr.rounds()) {
    for (const auto& a : r.forecast.atoms) {
      if (a.weight == 0.0) continue;
      const auto label = labeled ? a.label : std::nullopt;
      auto it = std::find_if(groups.begin(), groups.end(), [&](const KeyedGroup& g) {
        return g.point == a.point && g.label == label;
      });
      if (it == groups.end()) {
        groups.push_back({a.point, label, 0.0, Vec(a.point.size(), 0.0)});
        it = groups.end() - 1;
      }
      it->mass += a.weight;
      for (std::size_t i = 0; i < a.point.size(); ++i) it->weighted_sum[i] += a.weight * r.outcome[i];
    }
  }
  return groups;
}

inline double calibration(const treecal::Transcript& tr, bool labeled,
                          const std::function<double(const Vec&, const Vec&)>& dist) {
  double total = 0.0;
  for (const auto& g : group(tr, labeled)) {
    Vec nu = g.weighted_sum;
    for (double& x : nu) x /= g.mass;
    total += g.mass * dist(nu, g.point);
  }
  return total;
}

inline double dot(const Vec& a, const Vec& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

/// Full swap regret by enumerating all |menu|^|menu| swap functions.
inline double swap_regret_enumerated(const std::vector<Vec>& menu,
                                     const std::vector<std::vector<double>>& dists,
                                     const std::vector<Vec>& losses) {
  const std::size_t m = menu.size();
  std::vector<std::size_t> pi(m, 0);
  double best = 0.0;
  while (true) {
    double gain = 0.0;
    for (std::size_t t = 0; t < dists.size(); ++t) {
      for (std::size_t i = 0; i < m; ++i) {
        gain += dists[t][i] * (dot(losses[t], menu[i]) - dot(losses[t], menu[pi[i]]));
      }
    }
    best = std::max(best, gain);
    std::size_t pos = 0;
    while (pos < m && ++pi[pos] == m) pi[pos++] = 0;
    if (pos == m) break;
  }
  return best;
}

/// Grid points of Simplex(d) with the given step (d <= 3).
inline std::vector<Vec> simplex_grid(std::size_t d, double step) {
  const int n = static_cast<int>(std::lround(1.0 / step));
  std::vector<Vec> out;
  if (d == 2) {
    for (int i = 0; i <= n; ++i) out.push_back({i * step, 1.0 - i * step});
  } else if (d == 3) {
    for (int i = 0; i <= n; ++i) {
      for (int j = 0; i + j <= n; ++j) {
        const double a = i * step;
        const double b = j * step;
        out.push_back({a, b, std::max(0.0, 1.0 - a - b)});
      }
    }
  }
  return out;
}

}  // namespace oracle
