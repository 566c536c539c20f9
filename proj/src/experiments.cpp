#include "stopdiff/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "stopdiff/io.hpp"

namespace stopdiff::experiments {

namespace {

Vec vec1(double x) {
  Vec v(1);
  v(0) = x;
  return v;
}

struct Bundle {
  sde::SdeModel model;
  geometry::TimeSpaceDomain domain;
  feynman_kac::FeynmanKacProblem problem;
  std::optional<double> exact;
};

Bundle make_bundle(const ExperimentPreset& preset, const Vec& x0) {
  switch (preset.kind) {
    case ExperimentPreset::Kind::benchmark3d_grid:
    case ExperimentPreset::Kind::benchmark3d_point: {
      Bundle b{sde::benchmark3d_model(),
               geometry::TimeSpaceDomain::ball(Vec::Zero(3), 2.0),
               feynman_kac::benchmark3d_problem(x0),
               feynman_kac::benchmark3d_exact_solution(x0)};
      return b;
    }
    case ExperimentPreset::Kind::halfspace_bm: {
      feynman_kac::FeynmanKacProblem p;
      p.boundary_payoff = [](double, const Vec&) { return 1.0; };
      p.terminal_payoff = [](double, const Vec&) { return 0.0; };
      p.start = x0;
      p.horizon = preset.horizon_t;
      return Bundle{
          sde::brownian_motion(1),
          geometry::TimeSpaceDomain::half_space(vec1(1.0), preset.level, 0.0,
                                                preset.horizon_t),
          std::move(p),
          halfspace_hitting_probability(x0(0), preset.level, preset.horizon_t)};
    }
    case ExperimentPreset::Kind::moving_interval_1d: {
      feynman_kac::FeynmanKacProblem p;
      p.boundary_payoff = [](double, const Vec& x) { return x(0) * x(0); };
      p.start = x0;
      p.horizon = preset.horizon_t;
      const double l0 = preset.lower0, ls = preset.lower_slope;
      const double u0 = preset.upper0, us = preset.upper_slope;
      return Bundle{sde::brownian_motion(1),
                    geometry::TimeSpaceDomain::moving_interval(
                        [l0, ls](double t) { return l0 + ls * t; },
                        [u0, us](double t) { return u0 + us * t; },
                        preset.horizon_t),
                    std::move(p), std::nullopt};
    }
  }
  throw std::logic_error("make_bundle: unknown preset kind");
}

std::vector<Vec> start_points(const ExperimentPreset& preset) {
  if (preset.kind != ExperimentPreset::Kind::benchmark3d_grid) return {preset.x0};
  const double coords[] = {-0.7, -0.3, 0.3, 0.7};
  std::vector<Vec> points;
  points.reserve(64);
  for (double a : coords)
    for (double b : coords)
      for (double c : coords) {
        Vec x(3);
        x << a, b, c;
        points.push_back(std::move(x));
      }
  return points;
}

}  // namespace

ExperimentPreset benchmark3d_grid_preset() {
  ExperimentPreset p;
  p.kind = ExperimentPreset::Kind::benchmark3d_grid;
  p.name = "benchmark3d-grid";
  p.deltas = {0.1, 0.05, 0.01};
  p.n_paths = 100'000;
  return p;
}

ExperimentPreset benchmark3d_point_preset(Vec x0) {
  ExperimentPreset p;
  p.kind = ExperimentPreset::Kind::benchmark3d_point;
  p.name = "benchmark3d";
  p.x0 = std::move(x0);
  p.deltas = {0.1, 0.05, 0.01};
  p.n_paths = 100'000;
  return p;
}

ExperimentPreset halfspace_bm_preset(double x0, double level, double horizon_t) {
  ExperimentPreset p;
  p.kind = ExperimentPreset::Kind::halfspace_bm;
  p.name = "halfspace-bm";
  p.x0 = vec1(x0);
  p.level = level;
  p.horizon_t = horizon_t;
  p.deltas = {1.0 / 64, 1.0 / 128, 1.0 / 256, 1.0 / 512, 1.0 / 1024};
  p.n_paths = 1'000'000;
  return p;
}

ExperimentPreset moving_interval_preset() {
  ExperimentPreset p;
  p.kind = ExperimentPreset::Kind::moving_interval_1d;
  p.name = "moving-interval";
  p.x0 = vec1(0.0);
  p.horizon_t = 1.0;
  p.deltas = {1.0 / 20, 1.0 / 40, 1.0 / 80};
  p.n_paths = 100'000;
  return p;
}

double halfspace_hitting_probability(double x0, double level, double horizon_t) {
  return 2.0 * normal_cdf(-(level - x0) / std::sqrt(horizon_t));
}

PresetResult run_preset(const ExperimentPreset& preset, std::uint64_t seed,
                        int workers,
                        const std::function<void(const PresetRow&)>& on_row) {
  PresetResult result;
  const std::vector<Vec> points = start_points(preset);

  std::uint64_t cell = 0;
  for (const Vec& x0 : points) {
    Bundle bundle = make_bundle(preset, x0);
    for (double dt : preset.deltas) {
      const std::uint64_t cell_seed = mix_seed(seed, cell++);
      for (StoppingMode mode : preset.modes) {
        feynman_kac::McOptions opt;
        opt.n_paths = preset.n_paths;
        opt.seed = cell_seed;  // shared across modes: common random numbers
        opt.workers = workers;
        PresetRow row;
        row.x0 = x0;
        row.dt = dt;
        row.mode = mode;
        row.report = feynman_kac::monte_carlo_estimate(bundle.model, bundle.domain,
                                                       bundle.problem, dt, mode, opt);
        row.exact = bundle.exact;
        if (row.exact) {
          row.abs_error = std::abs(row.report.mean - *row.exact);
          if (*row.exact != 0.0)
            row.rel_error = *row.abs_error / std::abs(*row.exact);
        }
        if (on_row) on_row(row);
        result.rows.push_back(std::move(row));
      }
    }
  }

  if (preset.kind == ExperimentPreset::Kind::benchmark3d_grid) {
    for (double dt : preset.deltas) {
      for (StoppingMode mode : preset.modes) {
        SupErrorRow sup;
        sup.dt = dt;
        sup.mode = mode;
        for (const PresetRow& row : result.rows) {
          if (row.dt != dt || row.mode != mode || !row.abs_error) continue;
          sup.sup_abs_error = std::max(sup.sup_abs_error, *row.abs_error);
          if (row.rel_error) sup.sup_rel_error = std::max(sup.sup_rel_error, *row.rel_error);
          sup.max_std_error = std::max(sup.max_std_error, row.report.std_error);
        }
        result.sup_errors.push_back(sup);
      }
    }
  }
  return result;
}

SlopeFit fit_convergence_slope(std::span<const std::pair<double, double>> points) {
  if (points.size() < 2)
    throw DegenerateFit("fit_convergence_slope: need at least 2 points");
  for (const auto& [dt, err] : points)
    if (!(err > 0.0))
      throw NonPositiveError("fit_convergence_slope: error <= 0 at delta=" +
                             std::to_string(dt));

  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const auto n = static_cast<double>(points.size());
  for (const auto& [dt, err] : points) {
    const double x = -std::log(dt);
    const double y = -std::log(err);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double var = sxx - sx * sx / n;
  if (var <= 1e-14 * sxx)
    throw DegenerateFit("fit_convergence_slope: all step sizes equal");
  SlopeFit fit;
  fit.slope = (sxy - sx * sy / n) / var;
  fit.intercept = (sy - fit.slope * sx) / n;
  return fit;
}

ReferenceSolution reference_solution(const ExperimentPreset& preset, double dt_ref,
                                     std::int64_t n_ref, std::uint64_t seed,
                                     int workers) {
  const double min_dt = *std::min_element(preset.deltas.begin(), preset.deltas.end());
  if (!(dt_ref <= min_dt / 8.0))
    throw std::invalid_argument(
        "reference_solution: dt_ref must be at least 8x smaller than the "
        "smallest delta under study");
  Bundle bundle = make_bundle(preset, preset.x0);
  feynman_kac::McOptions opt;
  opt.n_paths = n_ref;
  opt.seed = seed;
  opt.workers = workers;
  const auto report = feynman_kac::monte_carlo_estimate(
      bundle.model, bundle.domain, bundle.problem, dt_ref,
      StoppingMode::shifted, opt);
  return ReferenceSolution{report.mean, report.std_error};
}

std::string format_summary(const ExperimentPreset& preset, const PresetResult& result) {
  std::ostringstream os;
  os.precision(5);
  os << "preset " << preset.name << ", n=" << preset.n_paths << " paths per cell\n";
  if (!result.sup_errors.empty()) {
    os << "sup of |error| over " << result.rows.size() / (preset.deltas.size() * preset.modes.size())
       << " start points (relative error in parentheses)\n";
    os << "  delta      plain                 shifted\n";
    for (double dt : preset.deltas) {
      os << "  " << dt;
      for (StoppingMode mode : {StoppingMode::plain, StoppingMode::shifted}) {
        for (const SupErrorRow& sup : result.sup_errors) {
          if (sup.dt == dt && sup.mode == mode)
            os << "    " << sup.sup_abs_error << " (" << 100.0 * sup.sup_rel_error
               << "%)";
        }
      }
      os << '\n';
    }
    return os.str();
  }
  for (const PresetRow& row : result.rows) {
    os << "  delta=" << row.dt << " " << exit_sim::to_string(row.mode) << ": "
       << row.report.mean << " +/- " << 1.96 * row.report.std_error;
    if (row.exact) os << "  (exact " << *row.exact << ", |err| " << *row.abs_error << ")";
    os << '\n';
  }
  return os.str();
}

}  // namespace stopdiff::experiments
