#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace treecal {

class Rng;

/// A point in R^d. Forecasts, outcomes and gradients all use this type.
using Vector = std::vector<double>;

// ----------------------------------------------------------------------------
// Vector arithmetic
// ----------------------------------------------------------------------------

double dot(std::span<const double> a, std::span<const double> b);
Vector subtract(std::span<const double> a, std::span<const double> b);
Vector scaled(std::span<const double> a, double c);
/// acc += c * v
void add_scaled(Vector& acc, std::span<const double> v, double c);
bool all_finite(std::span<const double> v);

// ----------------------------------------------------------------------------
// Norms
// ----------------------------------------------------------------------------

enum class NormKind { L1, L2, LInf };

double norm_value(std::span<const double> v, NormKind kind);
/// Convenience for ||a - b||.
double distance(std::span<const double> a, std::span<const double> b, NormKind kind);
NormKind dual_norm(NormKind kind);

std::string to_string(NormKind kind);
/// Accepts "l1", "l2", "linf" (case-insensitive).
NormKind parse_norm(const std::string& text);

// ----------------------------------------------------------------------------
// Convex domains
// ----------------------------------------------------------------------------

enum class DomainKind { Simplex, L2Ball, L1Ball, Box };

/// One of four bounded convex sets in R^d.
///
/// Membership uses fixed tolerances: the simplex accepts coordinate sums within
/// 1e-9 of one and coordinates down to -1e-12; balls and boxes accept 1e-9 of
/// slack on their bounding constraint.
class Domain {
 public:
  static Domain simplex(std::size_t d);
  static Domain l2_ball(std::size_t d, double radius = 1.0);
  static Domain l1_ball(std::size_t d, double radius = 1.0);
  static Domain box(std::size_t d, double lo, double hi);

  DomainKind kind() const { return kind_; }
  std::size_t dim() const { return dim_; }
  double radius() const { return radius_; }
  double lo() const { return lo_; }
  double hi() const { return hi_; }

  bool contains(std::span<const double> v) const;
  /// Throws std::domain_error naming `what` unless v is a member.
  void require_member(std::span<const double> v, const char* what) const;

  /// Canonical member: simplex centroid, ball center, box midpoint.
  Vector base_point() const;
  /// sup ||a - b|| over members, in closed form.
  double diameter(NormKind kind) const;
  /// Symmetric about the origin, so p/2 is a member whenever p is.
  bool centrally_symmetric() const;

  /// Finite set of extreme points used by outcome generators. Simplex: e_i.
  /// Balls: +-r e_i in the order +e_1, -e_1, +e_2, ... Box: corners, bit i of
  /// the index selecting hi for coordinate i.
  std::size_t vertex_count() const;
  Vector vertex(std::size_t index) const;

  std::string name() const;

  friend bool operator==(const Domain&, const Domain&) = default;

 private:
  Domain(DomainKind kind, std::size_t dim, double radius, double lo, double hi);

  DomainKind kind_;
  std::size_t dim_;
  double radius_;
  double lo_;
  double hi_;
};

/// Random member of the domain (uniform for box and balls, flat Dirichlet for
/// the simplex).
Vector sample_point(const Domain& domain, Rng& rng);

// ----------------------------------------------------------------------------
// Base-H tree index arithmetic
// ----------------------------------------------------------------------------

/// H^L, throwing std::overflow_error if it does not fit in 64 bits.
std::uint64_t checked_pow(std::uint64_t base, int exponent);

/// Base-H digits of t-1, most significant first. Requires 1 <= t <= H^L.
std::vector<int> digits_base_h(std::uint64_t t, int H, int L);
/// Inverse of digits_base_h: returns t.
std::uint64_t round_from_digits(std::span<const int> digits, int H);

/// Closed range of rounds [first, last], 1-based.
struct RoundInterval {
  std::uint64_t first;
  std::uint64_t last;
  std::uint64_t size() const { return last - first + 1; }
  bool contains(std::uint64_t t) const { return first <= t && t <= last; }
  friend bool operator==(const RoundInterval&, const RoundInterval&) = default;
};

/// The rounds whose first `level` digits equal `prefix`, on the full H^L grid.
RoundInterval interval_of(int level, std::span<const int> prefix, int H, int L);

}  // namespace treecal
