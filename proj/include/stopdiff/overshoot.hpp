#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <vector>

#include "stopdiff/sde.hpp"

namespace stopdiff::overshoot {

struct NoSamples : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Mean renormalized overshoot of a discretely monitored Brownian crossing:
/// -zeta(1/2)/sqrt(2*pi) = 0.5826...  Computed from the alternating zeta
/// (eta) series with the Cohen-Rodriguez Villegas-Zagier acceleration;
/// stable to full double precision.
double c0_analytic();

/// zeta(1/2), exposed for cross-checking the series evaluation.
double zeta_half();

/// First strictly positive partial sum of a standard Gaussian random walk.
/// `capped` samples hit the epoch cap before turning positive and carry no
/// height; they are data, not an error (the ladder epoch has infinite mean,
/// so any sampler needs a cap).
struct LadderSample {
  double height = 0.0;       // s_{tau+} > 0, valid iff !capped
  std::int64_t epoch = 0;    // tau+ >= 1, or the cap
  bool capped = false;
};

/// Walks s_n = s_{n-1} + G_n until s_n > 0 or n == cap.
LadderSample sample_ladder_height(sde::NormalSource& source, std::int64_t cap);

/// Plug-in estimate of the limiting overshoot CDF
///   H(y) = E[s]^{-1} * integral_0^y P(s > z) dz
/// from uncapped ladder heights. The integral of the empirical survival
/// function evaluates exactly to sum_i min(h_i, y) / sum_i h_i.
double limit_overshoot_cdf(double y, std::span<const LadderSample> samples);

/// Same estimator, prepared once for fast evaluation on grids.
class LadderCdf {
 public:
  explicit LadderCdf(std::vector<double> heights);  // uncapped heights
  double operator()(double y) const;
  double mean_height() const { return total_ / static_cast<double>(n()); }
  std::size_t n() const { return heights_.size(); }

 private:
  std::vector<double> heights_;  // sorted ascending
  std::vector<double> prefix_;   // prefix_[k] = sum of first k heights
  double total_;
};

/// Aggregate of a bulk ladder run.
struct LadderRun {
  std::vector<double> heights;  // uncapped heights, in sample order
  std::int64_t n_samples = 0;
  std::int64_t n_capped = 0;
  double mean_height = 0.0;
  double mean_sq_height = 0.0;

  double capped_fraction() const {
    return static_cast<double>(n_capped) / static_cast<double>(n_samples);
  }
  /// E[s^2] / (2 E[s]), the Monte Carlo counterpart of c0_analytic().
  double c0_estimate() const { return mean_sq_height / (2.0 * mean_height); }
};

/// Draws `n_samples` ladder samples in parallel; sample i uses
/// NoiseStream(seed, i), so the result does not depend on the worker count.
LadderRun run_ladder(std::int64_t n_samples, std::int64_t cap,
                     std::uint64_t seed, int workers = 0,
                     bool keep_heights = true);

/// Right-continuous empirical CDF of a sample.
class EmpiricalCdf {
 public:
  explicit EmpiricalCdf(std::vector<double> values);  // throws NoSamples if empty
  double operator()(double y) const;                  // P(X <= y)
  std::size_t n() const { return values_.size(); }
  double min() const { return values_.front(); }
  double max() const { return values_.back(); }
  double mean() const;

 private:
  std::vector<double> values_;  // sorted ascending
};

/// Max absolute difference of two CDFs over the given grid.
double ks_distance(const std::function<double(double)>& cdf_a,
                   const std::function<double(double)>& cdf_b,
                   std::span<const double> grid);

}  // namespace stopdiff::overshoot
