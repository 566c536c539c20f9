#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "stopdiff/feynman_kac.hpp"

namespace stopdiff::cli {

/// Configuration problem: unknown key, bad type, out-of-range value.
/// Mapped to exit code 2 by the command-line driver.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// A sparse polynomial sum_j coeff_j * prod_i x_i^powers_{j,i}, the form in
/// which custom payoff/source/potential coefficients are written in config
/// files. Constants and affine functions are one-monomial special cases.
struct PolynomialSpec {
  struct Monomial {
    double coeff = 0.0;
    std::vector<int> powers;  // one exponent per state coordinate
  };
  std::vector<Monomial> monomials;

  double evaluate(const Vec& x) const;
};

/// Fully resolved run description. Flag values override file values; every
/// numeric field is validated before any simulation starts.
struct RunConfig {
  std::string subcommand;  // estimate | convergence | overshoot | ladder | preset

  std::string preset = "benchmark3d";  // model/domain/problem bundle
  std::vector<double> x0;
  std::vector<double> deltas = {0.1};
  std::int64_t n_paths = 100'000;
  std::uint64_t seed = 1;
  std::vector<std::string> modes = {"shifted"};
  int workers = 0;
  std::int64_t max_steps = 100'000'000;

  // custom bundles (preset = "custom")
  std::string model = "bm";     // bm | scaled-bm | benchmark3d
  std::string domain = "ball";  // ball | halfspace | moving-interval
  std::vector<double> center;   // ball center; zeros by default
  double radius = 2.0;
  bool open_horizon = false;

  // halfspace-bm / scaled-bm parameters
  double level = 1.0;
  double horizon_t = 1.0;
  double sigma_scale = 1.0;

  // moving-interval walls a + b t
  double lower0 = -1.0, lower_slope = -0.2;
  double upper0 = 1.0, upper_slope = 0.1;

  // custom problem coefficients (optional; presets otherwise)
  std::optional<PolynomialSpec> payoff_g;
  std::optional<PolynomialSpec> source_f;
  std::optional<PolynomialSpec> potential_k;

  // ladder / overshoot options
  std::int64_t ladder_cap = 1'000'000;
  double grid_max = 3.0;
  double grid_step = 0.05;

  std::string output;       // CSV path; empty = stdout summary only
  std::string plot_output;  // two-column plot data path

  bool full_scale = false;  // paper-scale path counts for preset runs
};

/// Parses a JSON config file with strict key checking: any unknown key is
/// a ConfigError naming its full path.
RunConfig parse_config_file(const std::string& path);
RunConfig parse_config_text(const std::string& text, const std::string& origin);

/// Range/consistency validation shared by file and flag paths.
void validate(const RunConfig& config);

/// Canonical serialization used to fingerprint the resolved configuration.
std::string canonical_text(const RunConfig& config);

/// A ready-to-simulate (model, domain, problem) triple resolved from the
/// configuration, with the closed-form value where one is known.
struct ProblemBundle {
  sde::SdeModel model;
  geometry::TimeSpaceDomain domain;
  feynman_kac::FeynmanKacProblem problem;
  std::optional<double> exact;
};

ProblemBundle build_problem_bundle(const RunConfig& config);

}  // namespace stopdiff::cli
