#include "treecal/scoring.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "treecal/errors.hpp"
#include "treecal/rng.hpp"

namespace treecal {

Regularizer::Regularizer(RegularizerKind kind, std::size_t dim, double rho, double clamp)
    : kind_(kind), dim_(dim), rho_(rho), clamp_(clamp) {}

Regularizer Regularizer::euclidean(const Domain& domain) {
  const double diam = domain.diameter(NormKind::L2);
  return Regularizer(RegularizerKind::Euclidean, domain.dim(), diam * diam, 0.0);
}

Regularizer Regularizer::negative_entropy(const Domain& domain, double clamp) {
  if (domain.kind() != DomainKind::Simplex) {
    throw UnsupportedError("negative entropy is only defined on the simplex");
  }
  if (!(clamp > 0.0) || clamp >= 1.0) throw ConfigError("entropy clamp must lie in (0, 1)");
  return Regularizer(RegularizerKind::NegativeEntropy, domain.dim(),
                     std::log(static_cast<double>(domain.dim())), clamp);
}

std::string Regularizer::name() const {
  switch (kind_) {
    case RegularizerKind::Euclidean: return "euclidean";
    case RegularizerKind::NegativeEntropy: return "negentropy";
    case RegularizerKind::Centered: return "centered(" + base_->name() + ")";
    case RegularizerKind::Scaled: return "scaled(" + base_->name() + ")";
  }
  return "?";
}

void Regularizer::check_point(std::span<const double> p) const {
  if (p.size() != dim_) {
    throw std::domain_error("regularizer " + name() + " expects dimension " +
                            std::to_string(dim_) + ", got " + std::to_string(p.size()));
  }
  if (!all_finite(p)) throw std::domain_error("non-finite point passed to " + name());
  switch (kind_) {
    case RegularizerKind::NegativeEntropy:
      for (double x : p) {
        if (x < -1e-12) throw std::domain_error("negative coordinate outside entropy domain");
      }
      break;
    case RegularizerKind::Centered: base_->check_point(p); break;
    case RegularizerKind::Scaled: base_->check_point(scaled(p, 0.5)); break;
    case RegularizerKind::Euclidean: break;
  }
}

double Regularizer::value(std::span<const double> p) const {
  switch (kind_) {
    case RegularizerKind::Euclidean: return dot(p, p);
    case RegularizerKind::NegativeEntropy: {
      double s = 0.0;
      for (double x : p) {
        if (x > 0.0) s += x * std::log(x);
      }
      return s;
    }
    case RegularizerKind::Centered:
      return base_->value(p) - anchor_value_ - dot(anchor_gradient_, subtract(p, anchor_));
    case RegularizerKind::Scaled: return 4.0 * base_->value(scaled(p, 0.5));
  }
  throw std::logic_error("unknown regularizer kind");
}

Vector Regularizer::gradient(std::span<const double> p) const {
  switch (kind_) {
    case RegularizerKind::Euclidean: return scaled(p, 2.0);
    case RegularizerKind::NegativeEntropy: {
      Vector g(p.size());
      for (std::size_t i = 0; i < p.size(); ++i) g[i] = 1.0 + std::log(std::max(p[i], clamp_));
      return g;
    }
    case RegularizerKind::Centered: return subtract(base_->gradient(p), anchor_gradient_);
    case RegularizerKind::Scaled: return scaled(base_->gradient(scaled(p, 0.5)), 2.0);
  }
  throw std::logic_error("unknown regularizer kind");
}

double bregman(const Regularizer& R, std::span<const double> y, std::span<const double> p) {
  R.check_point(y);
  R.check_point(p);
  if (std::equal(y.begin(), y.end(), p.begin(), p.end())) return 0.0;
  return R.value(y) - R.value(p) - dot(R.gradient(p), subtract(y, p));
}

MixtureMinimum mixture_minimizer(std::span<const Vector> points, std::span<const double> weights,
                                 const Regularizer& R) {
  if (points.empty()) throw std::domain_error("mixture_minimizer needs at least one point");
  if (points.size() != weights.size()) throw std::domain_error("points/weights length mismatch");
  double total = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0)) throw std::domain_error("mixture weights must be nonnegative");
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-9) throw std::domain_error("mixture weights must sum to 1");

  Vector mean(points.front().size(), 0.0);
  double expected_value = 0.0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    add_scaled(mean, points[i], weights[i]);
    expected_value += weights[i] * R.value(points[i]);
  }
  return {mean, expected_value - R.value(mean)};
}

Regularizer center_regularizer(const Regularizer& R, const Domain& domain) {
  if (domain.dim() != R.dim()) throw std::domain_error("center_regularizer: dimension mismatch");
  Regularizer out(RegularizerKind::Centered, R.dim(), R.rho(), R.clamp());
  out.base_ = std::make_shared<const Regularizer>(R);
  out.anchor_ = domain.base_point();
  out.anchor_gradient_ = R.gradient(out.anchor_);
  out.anchor_value_ = R.value(out.anchor_);
  return out;
}

Regularizer scale_regularizer(const Regularizer& R, const Domain& domain) {
  if (!domain.centrally_symmetric()) {
    throw UnsupportedError("scale_regularizer requires a centrally symmetric domain, got " +
                           domain.name());
  }
  if (domain.dim() != R.dim()) throw std::domain_error("scale_regularizer: dimension mismatch");
  // The range bound for 4R(p/2) is 3 rho when rho bounds the range of R.
  Regularizer out(RegularizerKind::Scaled, R.dim(), 3.0 * R.rho(), R.clamp());
  out.base_ = std::make_shared<const Regularizer>(R);
  return out;
}

ConvexityProbe strong_convexity_probe(const Regularizer& R, NormKind kind, const Domain& domain,
                                      std::size_t n_samples, std::uint64_t seed) {
  if (n_samples == 0) throw std::domain_error("strong_convexity_probe needs n_samples >= 1");
  Rng rng(seed);
  auto draw = [&]() -> Vector {
    if (rng.uniform() < 0.25) return domain.vertex(rng.below(domain.vertex_count()));
    return sample_point(domain, rng);
  };
  ConvexityProbe probe{std::numeric_limits<double>::infinity(), 0.0, 0};
  for (std::size_t i = 0; i < n_samples; ++i) {
    const Vector y = draw();
    const Vector p = draw();
    const double div = bregman(R, y, p);
    probe.max_bregman = std::max(probe.max_bregman, div);
    const double dist = distance(y, p, kind);
    if (dist > 1e-6) {
      probe.min_ratio = std::min(probe.min_ratio, div / (dist * dist));
      ++probe.pairs;
    }
  }
  return probe;
}

}  // namespace treecal
