#include "treecal/geometry.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <stdexcept>

#include "treecal/errors.hpp"
#include "treecal/rng.hpp"

namespace treecal {
namespace {

constexpr double kSimplexSumTol = 1e-9;
constexpr double kNegativeTol = 1e-12;
constexpr double kBoundTol = 1e-9;

void require_same_dim(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw std::domain_error("dimension mismatch: " + std::to_string(a.size()) + " vs " +
                            std::to_string(b.size()));
  }
}

}  // namespace

double dot(std::span<const double> a, std::span<const double> b) {
  require_same_dim(a, b);
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

Vector subtract(std::span<const double> a, std::span<const double> b) {
  require_same_dim(a, b);
  Vector out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] - b[i];
  return out;
}

Vector scaled(std::span<const double> a, double c) {
  Vector out(a.begin(), a.end());
  for (auto& x : out) x *= c;
  return out;
}

void add_scaled(Vector& acc, std::span<const double> v, double c) {
  require_same_dim(acc, v);
  for (std::size_t i = 0; i < v.size(); ++i) acc[i] += c * v[i];
}

bool all_finite(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

double norm_value(std::span<const double> v, NormKind kind) {
  switch (kind) {
    case NormKind::L1: {
      double s = 0.0;
      for (double x : v) s += std::abs(x);
      return s;
    }
    case NormKind::L2: {
      // Scaled accumulation keeps (0.3, -0.4) at exactly 0.5 and avoids overflow.
      double scale = 0.0;
      for (double x : v) scale = std::max(scale, std::abs(x));
      if (scale == 0.0) return 0.0;
      double s = 0.0;
      for (double x : v) {
        const double r = x / scale;
        s += r * r;
      }
      return scale * std::sqrt(s);
    }
    case NormKind::LInf: {
      double m = 0.0;
      for (double x : v) m = std::max(m, std::abs(x));
      return m;
    }
  }
  throw std::logic_error("unknown norm kind");
}

double distance(std::span<const double> a, std::span<const double> b, NormKind kind) {
  return norm_value(subtract(a, b), kind);
}

NormKind dual_norm(NormKind kind) {
  switch (kind) {
    case NormKind::L1: return NormKind::LInf;
    case NormKind::L2: return NormKind::L2;
    case NormKind::LInf: return NormKind::L1;
  }
  throw std::logic_error("unknown norm kind");
}

std::string to_string(NormKind kind) {
  switch (kind) {
    case NormKind::L1: return "l1";
    case NormKind::L2: return "l2";
    case NormKind::LInf: return "linf";
  }
  return "?";
}

NormKind parse_norm(const std::string& text) {
  std::string t;
  for (char c : text) t.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  if (t == "l1") return NormKind::L1;
  if (t == "l2") return NormKind::L2;
  if (t == "linf") return NormKind::LInf;
  throw ConfigError("unknown norm '" + text + "' (expected l1, l2 or linf)");
}

// ----------------------------------------------------------------------------

Domain::Domain(DomainKind kind, std::size_t dim, double radius, double lo, double hi)
    : kind_(kind), dim_(dim), radius_(radius), lo_(lo), hi_(hi) {
  if (dim == 0) throw ConfigError("domain dimension d must be positive");
}

Domain Domain::simplex(std::size_t d) { return Domain(DomainKind::Simplex, d, 0.0, 0.0, 1.0); }

Domain Domain::l2_ball(std::size_t d, double radius) {
  if (!(radius > 0.0) || !std::isfinite(radius)) throw ConfigError("ball radius must be positive");
  return Domain(DomainKind::L2Ball, d, radius, -radius, radius);
}

Domain Domain::l1_ball(std::size_t d, double radius) {
  if (!(radius > 0.0) || !std::isfinite(radius)) throw ConfigError("ball radius must be positive");
  return Domain(DomainKind::L1Ball, d, radius, -radius, radius);
}

Domain Domain::box(std::size_t d, double lo, double hi) {
  if (!(lo <= hi) || !std::isfinite(lo) || !std::isfinite(hi)) {
    throw ConfigError("box requires finite lo <= hi");
  }
  return Domain(DomainKind::Box, d, 0.0, lo, hi);
}

bool Domain::contains(std::span<const double> v) const {
  if (v.size() != dim_ || !all_finite(v)) return false;
  switch (kind_) {
    case DomainKind::Simplex: {
      double sum = 0.0;
      for (double x : v) {
        if (x < -kNegativeTol) return false;
        sum += x;
      }
      return std::abs(sum - 1.0) <= kSimplexSumTol;
    }
    case DomainKind::L2Ball: return norm_value(v, NormKind::L2) <= radius_ + kBoundTol;
    case DomainKind::L1Ball: return norm_value(v, NormKind::L1) <= radius_ + kBoundTol;
    case DomainKind::Box:
      return std::all_of(v.begin(), v.end(), [&](double x) {
        return x >= lo_ - kBoundTol && x <= hi_ + kBoundTol;
      });
  }
  return false;
}

void Domain::require_member(std::span<const double> v, const char* what) const {
  if (!contains(v)) throw std::domain_error(std::string(what) + " is not a member of " + name());
}

Vector Domain::base_point() const {
  switch (kind_) {
    case DomainKind::Simplex: return Vector(dim_, 1.0 / static_cast<double>(dim_));
    case DomainKind::L2Ball:
    case DomainKind::L1Ball: return Vector(dim_, 0.0);
    case DomainKind::Box: return Vector(dim_, 0.5 * (lo_ + hi_));
  }
  throw std::logic_error("unknown domain kind");
}

double Domain::diameter(NormKind kind) const {
  const double d = static_cast<double>(dim_);
  switch (kind_) {
    case DomainKind::Simplex: {
      if (dim_ == 1) return 0.0;
      // Attained at two distinct vertices.
      switch (kind) {
        case NormKind::L1: return 2.0;
        case NormKind::L2: return std::sqrt(2.0);
        case NormKind::LInf: return 1.0;
      }
      break;
    }
    case DomainKind::L2Ball:
      // Antipodal points; for l1 the extremal direction is (1,...,1)/sqrt(d).
      switch (kind) {
        case NormKind::L1: return 2.0 * radius_ * std::sqrt(d);
        case NormKind::L2:
        case NormKind::LInf: return 2.0 * radius_;
      }
      break;
    case DomainKind::L1Ball:
      // The difference body is the radius-2r l1 ball; every norm here has its
      // maximum over that ball at a vertex 2r e_i.
      return 2.0 * radius_;
    case DomainKind::Box: {
      const double w = hi_ - lo_;
      switch (kind) {
        case NormKind::L1: return d * w;
        case NormKind::L2: return std::sqrt(d) * w;
        case NormKind::LInf: return w;
      }
      break;
    }
  }
  throw UnsupportedError("diameter: unsupported (domain, norm) combination");
}

bool Domain::centrally_symmetric() const {
  switch (kind_) {
    case DomainKind::Simplex: return false;
    case DomainKind::L2Ball:
    case DomainKind::L1Ball: return true;
    case DomainKind::Box: return lo_ == -hi_;
  }
  return false;
}

std::size_t Domain::vertex_count() const {
  switch (kind_) {
    case DomainKind::Simplex: return dim_;
    case DomainKind::L2Ball:
    case DomainKind::L1Ball: return 2 * dim_;
    case DomainKind::Box:
      if (dim_ >= 63) throw UnsupportedError("box vertex enumeration needs d < 63");
      return std::size_t{1} << dim_;
  }
  return 0;
}

Vector Domain::vertex(std::size_t index) const {
  if (index >= vertex_count()) throw std::out_of_range("vertex index out of range");
  Vector v(dim_, 0.0);
  switch (kind_) {
    case DomainKind::Simplex: v[index] = 1.0; break;
    case DomainKind::L2Ball:
    case DomainKind::L1Ball: v[index / 2] = (index % 2 == 0) ? radius_ : -radius_; break;
    case DomainKind::Box:
      for (std::size_t i = 0; i < dim_; ++i) v[i] = ((index >> i) & 1U) ? hi_ : lo_;
      break;
  }
  return v;
}

std::string Domain::name() const {
  const std::string d = std::to_string(dim_);
  switch (kind_) {
    case DomainKind::Simplex: return "simplex(" + d + ")";
    case DomainKind::L2Ball: return "l2ball(" + d + ")";
    case DomainKind::L1Ball: return "l1ball(" + d + ")";
    case DomainKind::Box: return "box(" + d + ")";
  }
  return "?";
}

Vector sample_point(const Domain& domain, Rng& rng) {
  const std::size_t d = domain.dim();
  Vector v(d);
  switch (domain.kind()) {
    case DomainKind::Simplex: {
      double sum = 0.0;
      for (auto& x : v) sum += (x = rng.exponential());
      for (auto& x : v) x /= sum;
      break;
    }
    case DomainKind::L2Ball: {
      double n2 = 0.0;
      do {
        n2 = 0.0;
        for (auto& x : v) {
          x = rng.normal();
          n2 += x * x;
        }
      } while (n2 == 0.0);
      const double r =
          domain.radius() * std::pow(rng.uniform(), 1.0 / static_cast<double>(d)) / std::sqrt(n2);
      for (auto& x : v) x *= r;
      break;
    }
    case DomainKind::L1Ball: {
      // First d coordinates of a flat Dirichlet on d+1 points, random signs.
      double sum = 0.0;
      for (auto& x : v) sum += (x = rng.exponential());
      sum += rng.exponential();
      for (auto& x : v) x = domain.radius() * x / sum * (rng.uniform() < 0.5 ? -1.0 : 1.0);
      break;
    }
    case DomainKind::Box:
      for (auto& x : v) x = domain.lo() + (domain.hi() - domain.lo()) * rng.uniform();
      break;
  }
  return v;
}

// ----------------------------------------------------------------------------

std::uint64_t checked_pow(std::uint64_t base, int exponent) {
  if (exponent < 0) throw std::out_of_range("negative exponent");
  std::uint64_t r = 1;
  for (int i = 0; i < exponent; ++i) {
    if (base != 0 && r > UINT64_MAX / base) throw std::overflow_error("H^L overflows 64 bits");
    r *= base;
  }
  return r;
}

std::vector<int> digits_base_h(std::uint64_t t, int H, int L) {
  if (H < 2 || L < 1) throw std::out_of_range("digits_base_h requires H >= 2 and L >= 1");
  const std::uint64_t n = checked_pow(static_cast<std::uint64_t>(H), L);
  if (t < 1 || t > n) {
    throw std::out_of_range("round " + std::to_string(t) + " outside [1, " + std::to_string(n) +
                            "]");
  }
  std::vector<int> digits(static_cast<std::size_t>(L));
  std::uint64_t rest = t - 1;
  for (int i = L - 1; i >= 0; --i) {
    digits[static_cast<std::size_t>(i)] = static_cast<int>(rest % static_cast<std::uint64_t>(H));
    rest /= static_cast<std::uint64_t>(H);
  }
  return digits;
}

std::uint64_t round_from_digits(std::span<const int> digits, int H) {
  std::uint64_t v = 0;
  for (int digit : digits) {
    if (digit < 0 || digit >= H) throw std::out_of_range("digit outside [0, H-1]");
    v = v * static_cast<std::uint64_t>(H) + static_cast<std::uint64_t>(digit);
  }
  return v + 1;
}

RoundInterval interval_of(int level, std::span<const int> prefix, int H, int L) {
  if (H < 2 || L < 1) throw std::out_of_range("interval_of requires H >= 2 and L >= 1");
  if (level < 0 || level > L) throw std::out_of_range("level outside [0, L]");
  if (prefix.size() != static_cast<std::size_t>(level)) {
    throw std::out_of_range("prefix length must equal the level");
  }
  std::uint64_t offset = 0;
  for (int digit : prefix) {
    if (digit < 0 || digit >= H) throw std::out_of_range("digit outside [0, H-1]");
    offset = offset * static_cast<std::uint64_t>(H) + static_cast<std::uint64_t>(digit);
  }
  const std::uint64_t span = checked_pow(static_cast<std::uint64_t>(H), L - level);
  return {offset * span + 1, offset * span + span};
}

}  // namespace treecal
