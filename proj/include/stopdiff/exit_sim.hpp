#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>

#include "stopdiff/geometry.hpp"
#include "stopdiff/overshoot.hpp"
#include "stopdiff/sde.hpp"

namespace stopdiff::exit_sim {

/// Which boundary the discrete exit test uses: the true domain, or the
/// domain shrunk inward by c0 * sqrt(dt) * |grad F sigma| (the corrected
/// stopping rule). Overshoot diagnostics always refer to the true boundary.
enum class StoppingMode { plain, shifted };

const char* to_string(StoppingMode mode);

enum class ExitKind { side, matured };

struct StartOutsideDomain : std::runtime_error {
  StartOutsideDomain(std::string what, double plain_dist, double mode_dist)
      : std::runtime_error(std::move(what)),
        plain_distance(plain_dist),
        mode_distance(mode_dist) {}
  double plain_distance;  // signed distance to the true domain at t = 0
  double mode_distance;   // signed distance used by the exit test
};

struct MaxStepsExceeded : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NoSideExits : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Outcome of one simulated path.
struct ExitRecord {
  ExitKind kind = ExitKind::side;
  std::int64_t exit_step = 0;    // exit at t_i = i * dt; = m when matured
  double exit_time = 0.0;        // tau ^ T; exactly T for matured paths
  Vec exit_position;
  double overshoot = 0.0;             // max(0, -F) at exit; 0 when matured
  double normalized_overshoot = 0.0;  // overshoot / sqrt(dt)
  // Signed distance past the true boundary at a side exit, -F(tau, X_tau).
  // Negative in shifted mode when the path left the shrunken domain while
  // still inside the true one; 0 for matured paths.
  double boundary_excess = 0.0;
  double path_functional_f = 0.0;  // sum_i Z_{t_i} f(t_i, X_i) dt up to exit
  double discount_at_exit = 1.0;   // Z at the exit time
};

/// Running-cost coefficients accumulated along the path. Null callables
/// mean identically zero and skip the evaluation.
using ScalarField = std::function<double(double t, const Vec& x)>;
struct PathCoefficients {
  ScalarField source;     // f
  ScalarField potential;  // k
};

inline constexpr std::int64_t kDefaultMaxSteps = 100'000'000;

/// Runs one Euler path from x0 until the first grid time t_i (i >= 1) at
/// which the mode's signed distance is <= 0, or until maturity when the
/// horizon is finite (dt must divide T). The discount Z and the f-sum use
/// the left-point rule. Throws StartOutsideDomain if the mode's distance
/// at (0, x0) is <= 0, and MaxStepsExceeded when an open-horizon path has
/// not exited after max_steps.
ExitRecord simulate_until_exit(const sde::SdeModel& model,
                               const geometry::TimeSpaceDomain& domain,
                               const PathCoefficients& coeffs, const Vec& x0,
                               double dt, StoppingMode mode,
                               sde::NormalSource& noise,
                               std::int64_t max_steps = kDefaultMaxSteps);

/// Empirical CDF of the normalized overshoot over side exits.
/// Throws NoSideExits if no record exited through the side boundary.
overshoot::EmpiricalCdf normalized_overshoot_cdf(std::span<const ExitRecord> records);

/// Number of steps m = T / dt; throws std::invalid_argument unless dt
/// divides T to within a relative tolerance of 1e-9.
std::int64_t grid_step_count(double horizon_t, double dt);

}  // namespace stopdiff::exit_sim
