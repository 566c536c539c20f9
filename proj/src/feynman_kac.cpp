#include "stopdiff/feynman_kac.hpp"

#include <cmath>
#include <ostream>
#include <sstream>

#include "stopdiff/io.hpp"
#include "stopdiff/parallel.hpp"

namespace stopdiff::feynman_kac {

double payoff(const ExitRecord& record, const FeynmanKacProblem& problem) {
  const bool use_terminal =
      record.kind == exit_sim::ExitKind::matured && problem.terminal_payoff;
  const double g = use_terminal
                       ? problem.terminal_payoff(record.exit_time, record.exit_position)
                       : problem.boundary_payoff(record.exit_time, record.exit_position);
  return g * record.discount_at_exit + record.path_functional_f;
}

namespace {

void validate_setup(const sde::SdeModel& model,
                    const geometry::TimeSpaceDomain& domain,
                    const FeynmanKacProblem& problem, double dt) {
  if (problem.start.size() != model.dim_state() || domain.dim() != model.dim_state())
    throw std::invalid_argument("monte_carlo_estimate: dimension mismatch");
  if (!problem.boundary_payoff)
    throw std::invalid_argument("monte_carlo_estimate: missing boundary payoff");
  const bool domain_open = !domain.horizon().has_value();
  const bool problem_open = !problem.horizon.has_value();
  if (domain_open != problem_open ||
      (!problem_open && std::abs(*domain.horizon() - *problem.horizon) > 1e-12))
    throw std::invalid_argument(
        "monte_carlo_estimate: problem and domain horizons disagree");
  if (problem_open && !model.time_homogeneous())
    throw std::invalid_argument(
        "monte_carlo_estimate: open horizon requires a time-homogeneous model");
  if (!problem_open) exit_sim::grid_step_count(*problem.horizon, dt);
}

// True when a shifted-mode run stops immediately because the start point,
// while inside the domain, already lies in the boundary shell of width
// c0 sqrt(dt) |grad F sigma|. The estimator then pays g(0, x0) at once.
bool starts_in_shifted_shell(const sde::SdeModel& model,
                             const geometry::TimeSpaceDomain& domain,
                             const Vec& x0, double dt, StoppingMode mode) {
  const double f0 = domain.signed_distance(0.0, x0);
  if (f0 <= 0.0)
    throw exit_sim::StartOutsideDomain(
        "monte_carlo_estimate: start point outside the domain", f0, f0);
  if (mode != StoppingMode::shifted) return false;
  return geometry::shifted_signed_distance(domain, 0.0, x0, dt, model) <= 0.0;
}

}  // namespace

EstimateReport monte_carlo_estimate(const sde::SdeModel& model,
                                    const geometry::TimeSpaceDomain& domain,
                                    const FeynmanKacProblem& problem, double dt,
                                    StoppingMode mode, const McOptions& options) {
  if (options.n_paths < 2)
    throw std::invalid_argument("monte_carlo_estimate: need n_paths >= 2");
  validate_setup(model, domain, problem, dt);

  EstimateReport report;
  report.n_paths = options.n_paths;
  report.dt = dt;
  report.mode = mode;

  if (starts_in_shifted_shell(model, domain, problem.start, dt, mode)) {
    report.mean = problem.boundary_payoff(0.0, problem.start);
    report.ci_low = report.ci_high = report.mean;
    report.side_exit_fraction = 1.0;
    return report;
  }

  const auto n = static_cast<std::size_t>(options.n_paths);
  std::vector<double> payoffs(n);
  std::vector<double> overshoots(n);
  std::vector<unsigned char> side(n);

  const exit_sim::PathCoefficients coeffs{problem.source, problem.potential};
  parallel_for_index(options.n_paths, options.workers, [&](std::int64_t i) {
    sde::NoiseStream stream(options.seed, static_cast<std::uint64_t>(i));
    const ExitRecord rec =
        exit_sim::simulate_until_exit(model, domain, coeffs, problem.start, dt,
                                      mode, stream, options.max_steps);
    const auto k = static_cast<std::size_t>(i);
    payoffs[k] = payoff(rec, problem);
    side[k] = rec.kind == exit_sim::ExitKind::side ? 1 : 0;
    overshoots[k] = side[k] ? rec.normalized_overshoot : 0.0;
  });

  KahanSum sum;
  for (double p : payoffs) sum.add(p);
  const double mean = sum.value() / static_cast<double>(options.n_paths);

  KahanSum sq;
  for (double p : payoffs) sq.add((p - mean) * (p - mean));
  const double variance = sq.value() / static_cast<double>(options.n_paths - 1);
  const double std_error = std::sqrt(variance / static_cast<double>(options.n_paths));

  std::int64_t n_side = 0;
  KahanSum over;
  for (std::size_t k = 0; k < n; ++k) {
    if (side[k]) {
      ++n_side;
      over.add(overshoots[k]);
    }
  }

  report.mean = mean;
  report.std_error = std_error;
  report.ci_low = mean - 1.96 * std_error;
  report.ci_high = mean + 1.96 * std_error;
  report.side_exit_fraction =
      static_cast<double>(n_side) / static_cast<double>(options.n_paths);
  report.mean_normalized_overshoot =
      n_side > 0 ? over.value() / static_cast<double>(n_side) : 0.0;
  return report;
}

std::vector<ExitRecord> collect_exit_records(
    const sde::SdeModel& model, const geometry::TimeSpaceDomain& domain,
    const FeynmanKacProblem& problem, double dt, StoppingMode mode,
    const McOptions& options) {
  if (options.n_paths < 1)
    throw std::invalid_argument("collect_exit_records: need n_paths >= 1");
  validate_setup(model, domain, problem, dt);

  std::vector<ExitRecord> records(static_cast<std::size_t>(options.n_paths));
  if (starts_in_shifted_shell(model, domain, problem.start, dt, mode)) {
    ExitRecord rec;
    rec.kind = exit_sim::ExitKind::side;
    rec.exit_step = 0;
    rec.exit_time = 0.0;
    rec.exit_position = problem.start;
    rec.boundary_excess = -domain.signed_distance(0.0, problem.start);
    for (auto& r : records) r = rec;
    return records;
  }

  const exit_sim::PathCoefficients coeffs{problem.source, problem.potential};
  parallel_for_index(options.n_paths, options.workers, [&](std::int64_t i) {
    sde::NoiseStream stream(options.seed, static_cast<std::uint64_t>(i));
    records[static_cast<std::size_t>(i)] =
        exit_sim::simulate_until_exit(model, domain, coeffs, problem.start, dt,
                                      mode, stream, options.max_steps);
  });
  return records;
}

double benchmark3d_exact_solution(const Vec& x) { return x(0) * x(1) * x(2); }

double benchmark3d_source(const Vec& x) {
  const double x1 = x(0), x2 = x(1), x3 = x(2);
  const double s1 = std::sqrt(1.0 + std::abs(x1));
  const double s2 = std::sqrt(1.0 + std::abs(x2));
  const double s3 = std::sqrt(1.0 + std::abs(x3));
  const double q = std::sqrt(0.75);
  return -(x2 * x2 * x3 + x3 * x3 * x1 + x1 * x1 * x2 +
           0.5 * (x3 * s1 * s3 + x1 * q * s1 * s2));
}

FeynmanKacProblem benchmark3d_problem(Vec x0) {
  FeynmanKacProblem p;
  p.boundary_payoff = [](double, const Vec& x) { return benchmark3d_exact_solution(x); };
  p.source = [](double, const Vec& x) { return benchmark3d_source(x); };
  p.start = std::move(x0);
  p.horizon = kOpenHorizon;
  return p;
}

namespace {

std::string join_components(const Vec& v) {
  std::string out;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (i) out += ';';
    out += io::format_double(v(i));
  }
  return out;
}

}  // namespace

std::string csv_header() {
  return "preset,x0,delta,mode,n,mean,stderr,ci_low,ci_high,"
         "side_exit_fraction,mean_norm_overshoot";
}

std::string to_csv_row(const EstimateReport& r, const std::string& preset,
                       const Vec& x0) {
  std::string row = preset;
  row += ',';
  row += join_components(x0);
  row += ',';
  row += io::format_double(r.dt);
  row += ',';
  row += exit_sim::to_string(r.mode);
  row += ',';
  row += std::to_string(r.n_paths);
  row += ',';
  row += io::format_double(r.mean);
  row += ',';
  row += io::format_double(r.std_error);
  row += ',';
  row += io::format_double(r.ci_low);
  row += ',';
  row += io::format_double(r.ci_high);
  row += ',';
  row += io::format_double(r.side_exit_fraction);
  row += ',';
  row += io::format_double(r.mean_normalized_overshoot);
  return row;
}

std::string to_string(const EstimateReport& r) {
  std::ostringstream os;
  os.precision(6);
  os << "mean " << r.mean << " +/- " << 1.96 * r.std_error << " (95% CI ["
     << r.ci_low << ", " << r.ci_high << "]), n=" << r.n_paths
     << ", delta=" << r.dt << ", mode=" << exit_sim::to_string(r.mode)
     << ", side exits " << 100.0 * r.side_exit_fraction << "%";
  return os.str();
}

void write_exit_records_csv(std::ostream& os, std::span<const ExitRecord> records,
                            const FeynmanKacProblem& problem) {
  const Eigen::Index d = records.empty() ? 0 : records.front().exit_position.size();
  os << "path_index,exit_step,exit_kind,exit_time";
  for (Eigen::Index i = 0; i < d; ++i) os << ",exit_position_" << (i + 1);
  os << ",overshoot,normalized_overshoot,discount_at_exit,payoff\n";
  for (std::size_t idx = 0; idx < records.size(); ++idx) {
    const ExitRecord& r = records[idx];
    os << idx << ',' << r.exit_step << ','
       << (r.kind == exit_sim::ExitKind::side ? "side" : "matured") << ','
       << io::format_double(r.exit_time);
    for (Eigen::Index i = 0; i < d; ++i)
      os << ',' << io::format_double(r.exit_position(i));
    os << ',' << io::format_double(r.overshoot) << ','
       << io::format_double(r.normalized_overshoot) << ','
       << io::format_double(r.discount_at_exit) << ','
       << io::format_double(payoff(r, problem)) << '\n';
  }
}

}  // namespace stopdiff::feynman_kac
