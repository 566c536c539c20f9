#pragma once

#include <functional>
#include <optional>
#include <stdexcept>
#include <variant>

#include "stopdiff/common.hpp"
#include "stopdiff/sde.hpp"

namespace stopdiff::geometry {

/// Raised when the distance gradient is too small to define a normal
/// direction (e.g. at the center of a ball). Signals that the query point
/// is outside the tubular neighborhood where the nearest boundary point is
/// unique; callers must not silently pick a direction there.
struct DegenerateNormal : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline constexpr double kDegenerateGradientTol = 1e-8;

/// Time horizon of a domain or problem: a final time T, or open-ended for
/// stationary (elliptic) problems.
using Horizon = std::optional<double>;
inline constexpr std::nullopt_t kOpenHorizon = std::nullopt;

using DistanceFn = std::function<double(double t, const Vec& x)>;
using GradientFn = std::function<Vec(double t, const Vec& x)>;
using BoundaryFn = std::function<double(double t)>;

/// A family of spatial domains D_t represented through the signed distance
/// F(t, x): positive strictly inside D_t, negative outside, zero on the
/// boundary, with |grad F| = 1 inside the tubular neighborhood of radius
/// tube_radius(t). All queries are pure functions of their arguments and
/// safe for concurrent use; user-supplied callables must be stateless.
class TimeSpaceDomain {
 public:
  /// { x : direction . x < level + level_velocity * t }, any dimension.
  /// `direction` is normalized if needed.
  static TimeSpaceDomain half_space(Vec direction, double level,
                                    double level_velocity = 0.0,
                                    Horizon horizon = kOpenHorizon);

  /// Euclidean ball: F(t, x) = radius - |x - center| exactly.
  static TimeSpaceDomain ball(Vec center, double radius,
                              Horizon horizon = kOpenHorizon);

  /// 1-d interval with moving endpoints, { x : lower(t) < x < upper(t) }.
  /// Requires lower(t) < upper(t) on [0, T]; checked at each query time.
  static TimeSpaceDomain moving_interval(BoundaryFn lower, BoundaryFn upper,
                                         double horizon_t);

  /// Arbitrary signed distance with a user-supplied gradient and tube
  /// radius. Smoothness is the caller's responsibility.
  static TimeSpaceDomain user_defined(int dim, DistanceFn distance,
                                      GradientFn gradient, double tube_radius,
                                      Horizon horizon = kOpenHorizon);

  int dim() const { return dim_; }
  const Horizon& horizon() const { return horizon_; }

  /// Radius of the tube around the boundary in which normals and
  /// projections are well defined. +inf for half-spaces.
  double tube_radius(double t) const;

  double signed_distance(double t, const Vec& x) const;

  /// grad F, unnormalized. Zero-length results indicate a degenerate point.
  Vec distance_gradient(double t, const Vec& x) const;

  /// Allocation-free variant for simulation loops; `out` must have size dim().
  void distance_gradient(double t, const Vec& x, Vec& out) const;

  /// Unit inward normal (the normalized distance gradient).
  /// Throws DegenerateNormal when the gradient norm is below tolerance.
  Vec inward_normal(double t, const Vec& x) const;

  /// Nearest boundary point, x + n * (-F). Throws DegenerateNormal.
  Vec project_to_boundary(double t, const Vec& x) const;

 private:
  struct HalfSpace {
    Vec direction;
    double level;
    double level_velocity;
  };
  struct Ball {
    Vec center;
    double radius;
  };
  struct MovingInterval {
    BoundaryFn lower;
    BoundaryFn upper;
  };
  struct UserDefined {
    DistanceFn distance;
    GradientFn gradient;
    double tube_radius;
  };

  TimeSpaceDomain(int dim, Horizon horizon,
                  std::variant<HalfSpace, Ball, MovingInterval, UserDefined> shape)
      : dim_(dim), horizon_(horizon), shape_(std::move(shape)) {}

  int dim_;
  Horizon horizon_;
  std::variant<HalfSpace, Ball, MovingInterval, UserDefined> shape_;
};

/// Signed distance to the inward-shrunken domain used by the corrected
/// stopping rule:
///   F(t, x) - c0 * sqrt(dt) * |grad F(t, x) . sigma(t, x)|
/// Positive iff x lies in the shrunken domain. The noise amplitude along
/// the normal is the Euclidean norm of the row-vector/matrix product.
/// Where the gradient is degenerate the point is deep inside and the shift
/// is immaterial: the plain distance is returned, preserving the sign.
double shifted_signed_distance(const TimeSpaceDomain& domain, double t,
                               const Vec& x, double dt,
                               const sde::SdeModel& model);

}  // namespace stopdiff::geometry
