#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <vector>

#include "stopdiff/exit_sim.hpp"

namespace stopdiff::feynman_kac {

using exit_sim::ExitRecord;
using exit_sim::ScalarField;
using exit_sim::StoppingMode;
using geometry::Horizon;
using geometry::kOpenHorizon;

/// The functional E[ g(exit) Z_exit + integral Z f ] to estimate.
///
/// `boundary_payoff` is g. When `terminal_payoff` is set it replaces g for
/// paths that reach maturity without exiting; this is how killed payoffs
/// (g = 0 on the side) and side-hit indicators are configured without a
/// separate code path. Null source/potential mean identically zero.
/// With an open horizon (stationary problem) the time argument of every
/// coefficient is ignored and the model must be time-homogeneous.
struct FeynmanKacProblem {
  ScalarField boundary_payoff;          // g(t, x)
  ScalarField terminal_payoff = nullptr;  // optional override at t = T
  ScalarField source = nullptr;         // f(t, x)
  ScalarField potential = nullptr;      // k(t, x), >= 0 in stationary mode
  Vec start;                            // x0
  Horizon horizon = kOpenHorizon;
};

/// Monte Carlo summary, reported with a 95% normal-approximation interval
/// (half-width 1.96 * std_error).
struct EstimateReport {
  double mean = 0.0;
  double std_error = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  std::int64_t n_paths = 0;
  double dt = 0.0;
  StoppingMode mode = StoppingMode::plain;
  double side_exit_fraction = 0.0;
  double mean_normalized_overshoot = 0.0;  // over side exits; 0 if none
};

/// g(exit) * discount + accumulated f-term for one path. The record must
/// come from a simulation with the same dt, mode and coefficients.
double payoff(const ExitRecord& record, const FeynmanKacProblem& problem);

struct McOptions {
  std::int64_t n_paths = 100'000;
  std::uint64_t seed = 1;
  int workers = 0;  // 0: STOPDIFF_WORKERS env var, else hardware concurrency
  std::int64_t max_steps = exit_sim::kDefaultMaxSteps;
};

/// Independent paths driven by NoiseStream(seed, path_index), aggregated by
/// compensated summation in path-index order: the report is bit-identical
/// for any worker count. Running both modes with the same seed drives them
/// with common random numbers.
EstimateReport monte_carlo_estimate(const sde::SdeModel& model,
                                    const geometry::TimeSpaceDomain& domain,
                                    const FeynmanKacProblem& problem, double dt,
                                    StoppingMode mode, const McOptions& options);

/// As above but returns every exit record (in path order) for diagnostics
/// such as overshoot distributions.
std::vector<ExitRecord> collect_exit_records(
    const sde::SdeModel& model, const geometry::TimeSpaceDomain& domain,
    const FeynmanKacProblem& problem, double dt, StoppingMode mode,
    const McOptions& options);

/// Exact solution u(x) = x1 x2 x3 of the 3-d ball benchmark.
double benchmark3d_exact_solution(const Vec& x);

/// Source term f = -(generator applied to u) for the same benchmark, so
/// that u solves Lu + f = 0 with k = 0 and g = u on the boundary.
double benchmark3d_source(const Vec& x);

/// The full stationary benchmark problem on the ball B(0, 2).
FeynmanKacProblem benchmark3d_problem(Vec x0);

/// CSV row serialization (no trailing newline). Vector components inside a
/// field are joined with ';' so the row stays comma-separated.
std::string csv_header();
std::string to_csv_row(const EstimateReport& report, const std::string& preset,
                       const Vec& x0);
std::string to_string(const EstimateReport& report);

/// Per-path export: path_index, exit_step, exit_time, exit_position,
/// overshoot, normalized_overshoot, discount_at_exit, payoff.
void write_exit_records_csv(std::ostream& os,
                            std::span<const ExitRecord> records,
                            const FeynmanKacProblem& problem);

}  // namespace stopdiff::feynman_kac
