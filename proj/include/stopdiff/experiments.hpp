#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "stopdiff/feynman_kac.hpp"

namespace stopdiff::experiments {

using exit_sim::StoppingMode;
using feynman_kac::EstimateReport;

struct DegenerateFit : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct NonPositiveError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// A preset experiment: a (model, domain, problem) bundle swept over start
/// points, step sizes and stopping modes.
struct ExperimentPreset {
  enum class Kind {
    benchmark3d_grid,   // all 64 start points with coordinates in {-.7,-.3,.3,.7}
    benchmark3d_point,  // a single start point of the same benchmark
    halfspace_bm,       // 1-d Brownian motion hitting a level before T
    moving_interval_1d  // Brownian motion between two affine moving walls
  };

  Kind kind;
  std::string name;  // stable identifier used in CSV output

  Vec x0;  // start point (ignored for the grid preset)

  // halfspace_bm parameters: domain { x < level }, horizon T.
  double level = 1.0;
  double horizon_t = 1.0;

  // moving_interval_1d parameters: walls a + b t.
  double lower0 = -1.0, lower_slope = -0.2;
  double upper0 = 1.0, upper_slope = 0.1;

  std::vector<double> deltas;
  std::int64_t n_paths = 100'000;
  std::vector<StoppingMode> modes = {StoppingMode::plain, StoppingMode::shifted};
};

ExperimentPreset benchmark3d_grid_preset();
ExperimentPreset benchmark3d_point_preset(Vec x0);
ExperimentPreset halfspace_bm_preset(double x0 = 0.0, double level = 1.0,
                                     double horizon_t = 1.0);
ExperimentPreset moving_interval_preset();

/// One (x0, dt, mode) cell of a preset run.
struct PresetRow {
  Vec x0;
  double dt = 0.0;
  StoppingMode mode = StoppingMode::plain;
  EstimateReport report;
  std::optional<double> exact;    // closed form where one exists
  std::optional<double> abs_error;
  std::optional<double> rel_error;
};

/// Supremum of the absolute error over all start points, per (dt, mode).
struct SupErrorRow {
  double dt = 0.0;
  StoppingMode mode = StoppingMode::plain;
  double sup_abs_error = 0.0;
  double sup_rel_error = 0.0;
  double max_std_error = 0.0;  // largest per-point std error behind the sup
};

struct PresetResult {
  std::vector<PresetRow> rows;
  std::vector<SupErrorRow> sup_errors;  // grid presets only
};

/// Runs every cell of the preset. Cells with the same (x0, dt) share the
/// seed across modes, so mode comparisons use common random numbers.
/// `on_row` (optional) is invoked after each finished cell so callers can
/// flush partial results before a later cell fails.
PresetResult run_preset(const ExperimentPreset& preset, std::uint64_t seed,
                        int workers = 0,
                        const std::function<void(const PresetRow&)>& on_row = {});

/// Closed-form hitting probability of a level by Brownian motion before T,
/// by the reflection principle: 2 * Phi(-(level - x0) / sqrt(T)).
double halfspace_hitting_probability(double x0, double level, double horizon_t);

struct SlopeFit {
  double slope = 0.0;
  double intercept = 0.0;
};

/// Least-squares line through (-log dt, -log |error|). Throws
/// NonPositiveError if any error is <= 0 (noise-dominated points must be
/// filtered out first) and DegenerateFit if all dt coincide.
SlopeFit fit_convergence_slope(std::span<const std::pair<double, double>> delta_abs_error);

struct ReferenceSolution {
  double value = 0.0;
  double std_error = 0.0;
};

/// Fine-step shifted-mode estimate used as ground truth where no closed
/// form exists. Requires dt_ref <= min(preset deltas) / 8.
ReferenceSolution reference_solution(const ExperimentPreset& preset,
                                     double dt_ref, std::int64_t n_ref,
                                     std::uint64_t seed, int workers = 0);

/// Text table mirroring the benchmark summaries (one line per dt and mode).
std::string format_summary(const ExperimentPreset& preset,
                           const PresetResult& result);

}  // namespace stopdiff::experiments
