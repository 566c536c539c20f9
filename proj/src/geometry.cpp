#include "stopdiff/geometry.hpp"

#include <cmath>
#include <limits>

#include "stopdiff/overshoot.hpp"

namespace stopdiff::geometry {

namespace {

void check_interval(double lower, double upper, double t) {
  if (!(lower < upper))
    throw std::invalid_argument(
        "moving interval: boundaries crossed at t=" + std::to_string(t));
}

}  // namespace

TimeSpaceDomain TimeSpaceDomain::half_space(Vec direction, double level,
                                            double level_velocity,
                                            Horizon horizon) {
  const double n = direction.norm();
  if (n < kDegenerateGradientTol)
    throw std::invalid_argument("half_space: zero direction");
  if (std::abs(n - 1.0) > 1e-12) direction /= n;
  const int dim = static_cast<int>(direction.size());
  return TimeSpaceDomain(dim, horizon,
                         HalfSpace{std::move(direction), level, level_velocity});
}

TimeSpaceDomain TimeSpaceDomain::ball(Vec center, double radius, Horizon horizon) {
  if (!(radius > 0.0)) throw std::invalid_argument("ball: radius must be > 0");
  const int dim = static_cast<int>(center.size());
  return TimeSpaceDomain(dim, horizon, Ball{std::move(center), radius});
}

TimeSpaceDomain TimeSpaceDomain::moving_interval(BoundaryFn lower, BoundaryFn upper,
                                                 double horizon_t) {
  if (!(horizon_t > 0.0))
    throw std::invalid_argument("moving_interval: horizon must be > 0");
  check_interval(lower(0.0), upper(0.0), 0.0);
  check_interval(lower(horizon_t), upper(horizon_t), horizon_t);
  return TimeSpaceDomain(1, horizon_t,
                         MovingInterval{std::move(lower), std::move(upper)});
}

TimeSpaceDomain TimeSpaceDomain::user_defined(int dim, DistanceFn distance,
                                              GradientFn gradient,
                                              double tube_radius, Horizon horizon) {
  if (dim < 1) throw std::invalid_argument("user_defined: dim must be >= 1");
  if (!(tube_radius > 0.0))
    throw std::invalid_argument("user_defined: tube_radius must be > 0");
  return TimeSpaceDomain(
      dim, horizon,
      UserDefined{std::move(distance), std::move(gradient), tube_radius});
}

double TimeSpaceDomain::tube_radius(double t) const {
  return std::visit(
      [&](const auto& s) -> double {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, HalfSpace>) {
          return std::numeric_limits<double>::infinity();
        } else if constexpr (std::is_same_v<T, Ball>) {
          return s.radius;
        } else if constexpr (std::is_same_v<T, MovingInterval>) {
          const double lo = s.lower(t), up = s.upper(t);
          check_interval(lo, up, t);
          return 0.5 * (up - lo);
        } else {
          return s.tube_radius;
        }
      },
      shape_);
}

double TimeSpaceDomain::signed_distance(double t, const Vec& x) const {
  return std::visit(
      [&](const auto& s) -> double {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, HalfSpace>) {
          return s.level + s.level_velocity * t - s.direction.dot(x);
        } else if constexpr (std::is_same_v<T, Ball>) {
          return s.radius - (x - s.center).norm();
        } else if constexpr (std::is_same_v<T, MovingInterval>) {
          const double lo = s.lower(t), up = s.upper(t);
          check_interval(lo, up, t);
          return std::min(x(0) - lo, up - x(0));
        } else {
          return s.distance(t, x);
        }
      },
      shape_);
}

Vec TimeSpaceDomain::distance_gradient(double t, const Vec& x) const {
  Vec out(dim_);
  distance_gradient(t, x, out);
  return out;
}

void TimeSpaceDomain::distance_gradient(double t, const Vec& x, Vec& out) const {
  std::visit(
      [&](const auto& s) {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, HalfSpace>) {
          out = -s.direction;
        } else if constexpr (std::is_same_v<T, Ball>) {
          out = x - s.center;
          const double n = out.norm();
          if (n < kDegenerateGradientTol)
            out.setZero();
          else
            out /= -n;
        } else if constexpr (std::is_same_v<T, MovingInterval>) {
          const double lo = s.lower(t), up = s.upper(t);
          check_interval(lo, up, t);
          out(0) = (x(0) - lo <= up - x(0)) ? 1.0 : -1.0;
        } else {
          out = s.gradient(t, x);
        }
      },
      shape_);
}

Vec TimeSpaceDomain::inward_normal(double t, const Vec& x) const {
  Vec g = distance_gradient(t, x);
  const double n = g.norm();
  if (n < kDegenerateGradientTol)
    throw DegenerateNormal("inward_normal: degenerate gradient at t=" +
                           std::to_string(t));
  return Vec(g / n);
}

Vec TimeSpaceDomain::project_to_boundary(double t, const Vec& x) const {
  const double f = signed_distance(t, x);
  Vec n = inward_normal(t, x);
  return Vec(x - n * f);
}

double shifted_signed_distance(const TimeSpaceDomain& domain, double t,
                               const Vec& x, double dt,
                               const sde::SdeModel& model) {
  const double f = domain.signed_distance(t, x);
  if (dt <= 0.0) {
    if (dt < 0.0) throw std::invalid_argument("shifted_signed_distance: dt < 0");
    return f;
  }
  Vec g = domain.distance_gradient(t, x);
  if (g.norm() < kDegenerateGradientTol) return f;
  const Mat sig = model.diffusion_at(t, x);
  const double amplitude = (g.transpose() * sig).norm();
  return f - overshoot::c0_analytic() * std::sqrt(dt) * amplitude;
}

}  // namespace stopdiff::geometry
