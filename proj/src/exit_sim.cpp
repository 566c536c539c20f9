#include "stopdiff/exit_sim.hpp"

#include <cmath>

namespace stopdiff::exit_sim {

const char* to_string(StoppingMode mode) {
  return mode == StoppingMode::plain ? "plain" : "shifted";
}

std::int64_t grid_step_count(double horizon_t, double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("step size must be > 0");
  const auto m = static_cast<std::int64_t>(std::llround(horizon_t / dt));
  if (m < 1 || std::abs(static_cast<double>(m) * dt - horizon_t) >
                   1e-9 * std::max(1.0, std::abs(horizon_t)))
    throw std::invalid_argument("step size must divide the horizon");
  return m;
}

namespace {

// |g^T sig| without temporaries.
double normal_noise_amplitude(const Vec& g, const Mat& sig) {
  double sq = 0.0;
  for (Eigen::Index j = 0; j < sig.cols(); ++j) {
    double a = 0.0;
    for (Eigen::Index i = 0; i < sig.rows(); ++i) a += g(i) * sig(i, j);
    sq += a * a;
  }
  return std::sqrt(sq);
}

}  // namespace

ExitRecord simulate_until_exit(const sde::SdeModel& model,
                               const geometry::TimeSpaceDomain& domain,
                               const PathCoefficients& coeffs, const Vec& x0,
                               double dt, StoppingMode mode,
                               sde::NormalSource& noise, std::int64_t max_steps) {
  if (!(dt > 0.0)) throw std::invalid_argument("simulate_until_exit: dt must be > 0");
  const int d = model.dim_state();
  const int dn = model.dim_noise();
  if (x0.size() != d || domain.dim() != d)
    throw std::invalid_argument("simulate_until_exit: dimension mismatch");

  const auto& horizon = domain.horizon();
  const std::int64_t m = horizon ? grid_step_count(*horizon, dt) : -1;

  const bool shifted = mode == StoppingMode::shifted;
  const double shift = overshoot::c0_analytic() * std::sqrt(dt);
  const double sqrt_dt = std::sqrt(dt);

  Vec x = x0;
  Vec b(d), grad(d), dw(dn);
  Mat sig(d, dn);
  bool sig_current = false;  // sig already holds the diffusion at (t_i, x)

  // Start test at t = 0; the domain membership is never re-tested at step 0.
  {
    const double f0 = domain.signed_distance(0.0, x0);
    double test0 = f0;
    if (shifted && f0 > 0.0) {
      domain.distance_gradient(0.0, x0, grad);
      if (grad.norm() >= geometry::kDegenerateGradientTol) {
        model.diffusion(0.0, x0, sig);
        test0 = f0 - shift * normal_noise_amplitude(grad, sig);
        sig_current = true;
      }
    }
    if (test0 <= 0.0)
      throw StartOutsideDomain("simulate_until_exit: start point outside the " +
                                   std::string(shifted ? "shrunken " : "") +
                                   "domain",
                               f0, test0);
  }

  double discount = 1.0;
  KahanSum f_sum;

  for (std::int64_t i = 0;;) {
    const double t = static_cast<double>(i) * dt;

    // Left-point accumulation of the running cost and the discount.
    if (coeffs.source) f_sum.add(discount * coeffs.source(t, x) * dt);
    if (coeffs.potential) discount *= std::exp(-coeffs.potential(t, x) * dt);

    if (!sig_current) model.diffusion(t, x, sig);
    model.drift(t, x, b);
    if (!b.allFinite() || !sig.allFinite())
      throw sde::NonFiniteCoefficient(
          "simulate_until_exit: non-finite coefficient at t=" + std::to_string(t));

    noise.normals(std::span<double>(dw.data(), static_cast<std::size_t>(dn)));
    dw *= sqrt_dt;
    x += b * dt;
    x.noalias() += sig * dw;
    sig_current = false;
    ++i;

    const bool at_maturity = (m >= 0 && i == m);
    const double t_next = at_maturity ? *horizon : static_cast<double>(i) * dt;

    const double f = domain.signed_distance(t_next, x);
    double test = f;
    if (shifted) {
      domain.distance_gradient(t_next, x, grad);
      if (grad.norm() >= geometry::kDegenerateGradientTol) {
        model.diffusion(t_next, x, sig);
        sig_current = true;
        test = f - shift * normal_noise_amplitude(grad, sig);
      }
    }

    if (test <= 0.0) {
      ExitRecord rec;
      rec.kind = ExitKind::side;
      rec.exit_step = i;
      rec.exit_time = t_next;
      rec.exit_position = x;
      rec.boundary_excess = -f;
      rec.overshoot = std::max(0.0, -f);
      rec.normalized_overshoot = rec.overshoot / sqrt_dt;
      rec.path_functional_f = f_sum.value();
      rec.discount_at_exit = discount;
      return rec;
    }
    if (at_maturity) {
      ExitRecord rec;
      rec.kind = ExitKind::matured;
      rec.exit_step = m;
      rec.exit_time = *horizon;
      rec.exit_position = x;
      rec.path_functional_f = f_sum.value();
      rec.discount_at_exit = discount;
      return rec;
    }
    if (m < 0 && i >= max_steps)
      throw MaxStepsExceeded("simulate_until_exit: no exit after " +
                             std::to_string(max_steps) + " steps");
  }
}

overshoot::EmpiricalCdf normalized_overshoot_cdf(std::span<const ExitRecord> records) {
  std::vector<double> values;
  values.reserve(records.size());
  for (const ExitRecord& r : records)
    if (r.kind == ExitKind::side) values.push_back(r.normalized_overshoot);
  if (values.empty())
    throw NoSideExits("normalized_overshoot_cdf: no side exits in the sample");
  return overshoot::EmpiricalCdf(std::move(values));
}

}  // namespace stopdiff::exit_sim
