#include <doctest.h>

#include <cmath>
#include <random>

#include "stopdiff/geometry.hpp"
#include "stopdiff/overshoot.hpp"
#include "test_support.hpp"

using namespace stopdiff;
using geometry::TimeSpaceDomain;
using testing::vec;

namespace {

TimeSpaceDomain ball02() { return TimeSpaceDomain::ball(Vec::Zero(3), 2.0); }

TimeSpaceDomain halfspace_x1_below_1(int dim) {
  Vec dir = Vec::Zero(dim);
  dir(0) = 1.0;
  return TimeSpaceDomain::half_space(dir, 1.0);
}

}  // namespace

TEST_CASE("signed distance for the ball") {
  auto dom = ball02();
  CHECK(dom.signed_distance(0.0, vec({0, 0, 0})) == doctest::Approx(2.0));
  CHECK(dom.signed_distance(0.0, vec({2, 0, 0})) == doctest::Approx(0.0));
  CHECK(dom.signed_distance(0.0, vec({3, 0, 0})) == doctest::Approx(-1.0));
}

TEST_CASE("inward normals point into the domain") {
  auto ball = ball02();
  Vec n = ball.inward_normal(0.0, vec({1, 0, 0}));
  CHECK(n(0) == doctest::Approx(-1.0));
  CHECK(n(1) == doctest::Approx(0.0));
  CHECK(n(2) == doctest::Approx(0.0));

  auto hs = halfspace_x1_below_1(2);
  Vec nh = hs.inward_normal(0.0, vec({0.3, 5.0}));
  CHECK(nh(0) == doctest::Approx(-1.0));
  CHECK(nh(1) == doctest::Approx(0.0));

  auto mi = TimeSpaceDomain::moving_interval([](double) { return -1.0; },
                                             [](double) { return 1.0; }, 1.0);
  CHECK(mi.inward_normal(0.0, vec({0.9}))(0) == doctest::Approx(-1.0));
  CHECK(mi.inward_normal(0.0, vec({-0.9}))(0) == doctest::Approx(1.0));
}

TEST_CASE("normal at the ball center is degenerate") {
  auto dom = ball02();
  CHECK_THROWS_AS((void)dom.inward_normal(0.0, vec({0, 0, 0})),
                  geometry::DegenerateNormal);
  CHECK_THROWS_AS((void)dom.project_to_boundary(0.0, vec({0, 0, 0})),
                  geometry::DegenerateNormal);
}

TEST_CASE("projection examples") {
  auto ball = ball02();
  Vec p = ball.project_to_boundary(0.0, vec({3, 0, 0}));
  CHECK((p - vec({2, 0, 0})).norm() == doctest::Approx(0.0).epsilon(1e-12));
  p = ball.project_to_boundary(0.0, vec({1, 0, 0}));
  CHECK((p - vec({2, 0, 0})).norm() == doctest::Approx(0.0).epsilon(1e-12));

  auto hs = halfspace_x1_below_1(2);
  p = hs.project_to_boundary(0.0, vec({1.3, 0.4}));
  CHECK(p(0) == doctest::Approx(1.0));
  CHECK(p(1) == doctest::Approx(0.4));
}

TEST_CASE("projections land on the boundary at random tube points") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  auto ball = ball02();
  auto hs = halfspace_x1_below_1(3);
  auto mi = TimeSpaceDomain::moving_interval(
      [](double t) { return -1.0 - 0.2 * t; }, [](double t) { return 1.0 + 0.1 * t; },
      1.0);

  for (int i = 0; i < 1000; ++i) {
    const double t = 0.5 * (u(rng) + 1.0);

    Vec x(3);
    x << u(rng), u(rng), u(rng);
    x *= 1.8;  // stays well inside the tube of the radius-2 ball
    if (x.norm() > 1e-3) {
      const Vec pb = ball.project_to_boundary(t, x);
      CHECK(std::abs(ball.signed_distance(t, pb)) < 1e-10);
    }

    Vec y(3);
    y << 1.0 + u(rng), u(rng), u(rng);
    const Vec ph = hs.project_to_boundary(t, y);
    CHECK(std::abs(hs.signed_distance(t, ph)) < 1e-10);

    Vec z(1);
    z << 0.9 * u(rng);
    const Vec pm = mi.project_to_boundary(t, z);
    CHECK(std::abs(mi.signed_distance(t, pm)) < 1e-10);
  }
}

TEST_CASE("projection of outside points equals x + grad * (-F)") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  auto ball = ball02();
  for (int i = 0; i < 1000; ++i) {
    Vec x(3);
    x << u(rng), u(rng), u(rng);
    x *= (2.0 + 0.9 * std::abs(u(rng))) / std::max(x.norm(), 1e-9);  // outside, in tube
    const double f = ball.signed_distance(0.0, x);
    REQUIRE(f <= 0.0);
    const Vec expected = x + ball.inward_normal(0.0, x) * (-f);
    const Vec got = ball.project_to_boundary(0.0, x);
    CHECK((got - expected).norm() < 1e-10);
  }
}

TEST_CASE("shifted distance, half-space arithmetic") {
  auto hs = halfspace_x1_below_1(1);
  auto bm = sde::brownian_motion(1);
  const double shifted =
      geometry::shifted_signed_distance(hs, 0.0, vec({0.9}), 0.01, bm);
  CHECK(shifted == doctest::Approx(0.04174).epsilon(1e-4));
  // consistent with the constant itself
  CHECK(shifted == doctest::Approx(0.1 - overshoot::c0_analytic() * 0.1));
}

TEST_CASE("shifted distance reduces to F with zero noise amplitude") {
  // sigma = 0 along the normal: 2-d model whose noise only drives x2
  auto model = sde::SdeModel(
      2, 1, [](double, const Vec&, Vec& out) { out.setZero(); },
      [](double, const Vec&, Mat& out) {
        out.setZero();
        out(1, 0) = 3.0;
      },
      true);
  auto hs = halfspace_x1_below_1(2);
  const Vec x = vec({0.4, 0.0});
  CHECK(geometry::shifted_signed_distance(hs, 0.0, x, 0.25, model) ==
        doctest::Approx(hs.signed_distance(0.0, x)));
}

TEST_CASE("shifted distance on the ball with isotropic noise") {
  auto ball = ball02();
  const double s = 1.7;
  auto model = sde::scaled_brownian_motion(3, s);
  const double r = 1.2, dt = 0.04;
  const double got =
      geometry::shifted_signed_distance(ball, 0.0, vec({r, 0, 0}), dt, model);
  CHECK(got ==
        doctest::Approx((2.0 - r) - overshoot::c0_analytic() * std::sqrt(dt) * s));
}

TEST_CASE("shifted distance properties") {
  auto ball = ball02();
  auto model = sde::benchmark3d_model();
  const Vec x = vec({1.5, 0.3, -0.2});

  SUBCASE("dt = 0 gives exactly the plain distance") {
    CHECK(geometry::shifted_signed_distance(ball, 0.0, x, 0.0, model) ==
          ball.signed_distance(0.0, x));
  }
  SUBCASE("strictly decreasing in dt") {
    double prev = geometry::shifted_signed_distance(ball, 0.0, x, 0.001, model);
    for (double dt : {0.01, 0.05, 0.1, 0.5}) {
      const double cur = geometry::shifted_signed_distance(ball, 0.0, x, dt, model);
      CHECK(cur < prev);
      prev = cur;
    }
  }
  SUBCASE("degenerate gradient falls back to the plain distance") {
    CHECK(geometry::shifted_signed_distance(ball, 0.0, Vec(Vec::Zero(3)), 0.1,
                                            model) == 2.0);
  }
}

TEST_CASE("user-defined gradient matches finite differences of F") {
  // ellipse-like level set, supplied with its analytic gradient
  auto dist = [](double, const Vec& x) {
    return 1.0 - std::sqrt(x(0) * x(0) / 4.0 + x(1) * x(1));
  };
  auto grad = [](double, const Vec& x) {
    const double r = std::sqrt(x(0) * x(0) / 4.0 + x(1) * x(1));
    Vec g(2);
    g(0) = -x(0) / (4.0 * r);
    g(1) = -x(1) / r;
    return g;
  };
  auto dom = geometry::TimeSpaceDomain::user_defined(2, dist, grad, 0.5);

  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const double h = 1e-6;
  for (int i = 0; i < 1000; ++i) {
    Vec x(2);
    x(0) = 1.6 + 0.3 * u(rng);  // near the boundary, away from the center
    x(1) = 0.3 * u(rng);
    const Vec g = dom.distance_gradient(0.0, x);
    for (int c = 0; c < 2; ++c) {
      Vec xp = x, xm = x;
      xp(c) += h;
      xm(c) -= h;
      const double fd =
          (dom.signed_distance(0.0, xp) - dom.signed_distance(0.0, xm)) / (2 * h);
      CHECK(std::abs(g(c) - fd) < 1e-5);
    }
  }
}

TEST_CASE("moving interval rejects crossed boundaries") {
  CHECK_THROWS_AS(TimeSpaceDomain::moving_interval([](double) { return 1.0; },
                                                   [](double) { return -1.0; }, 1.0),
                  std::invalid_argument);
  // crossing happens inside the horizon
  auto dom = TimeSpaceDomain::moving_interval(
      [](double t) { return -1.0 + 3.0 * t; }, [](double t) { return 1.0 - 3.0 * t; },
      0.3);
  CHECK_THROWS_AS((void)dom.signed_distance(0.34, vec({0.0})), std::invalid_argument);
}

TEST_CASE("tube radii") {
  CHECK(ball02().tube_radius(0.0) == doctest::Approx(2.0));
  CHECK(std::isinf(halfspace_x1_below_1(2).tube_radius(0.0)));
  auto mi = TimeSpaceDomain::moving_interval([](double) { return -1.0; },
                                             [](double t) { return 1.0 + t; }, 1.0);
  CHECK(mi.tube_radius(1.0) == doctest::Approx(1.5));
}
