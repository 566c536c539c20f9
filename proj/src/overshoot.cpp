#include "stopdiff/overshoot.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "stopdiff/parallel.hpp"

namespace stopdiff::overshoot {

double zeta_half() {
  // zeta(1/2) = eta(1/2) / (1 - sqrt(2)) with the alternating series
  // eta(1/2) = sum_{k>=0} (-1)^k / sqrt(k+1), accelerated by the
  // Cohen-Rodriguez Villegas-Zagier scheme (convergence ~ 5.83^-n, so
  // n = 40 is far below double rounding).
  constexpr int n = 40;
  double d = std::pow(3.0 + std::sqrt(8.0), n);
  d = (d + 1.0 / d) / 2.0;
  double b = -1.0;
  double c = -d;
  double s = 0.0;
  for (int k = 0; k < n; ++k) {
    c = b - c;
    s += c / std::sqrt(static_cast<double>(k + 1));
    b *= (k + n) * (k - n) / ((k + 0.5) * (k + 1.0));
  }
  const double eta = s / d;
  return eta / (1.0 - std::sqrt(2.0));
}

double c0_analytic() {
  static const double value = -zeta_half() / std::sqrt(2.0 * std::numbers::pi);
  return value;
}

LadderSample sample_ladder_height(sde::NormalSource& source, std::int64_t cap) {
  if (cap < 1) throw std::invalid_argument("sample_ladder_height: cap must be >= 1");
  double s = 0.0;
  for (std::int64_t n = 1; n <= cap; ++n) {
    s += source.normal();
    if (s > 0.0) return {s, n, false};
  }
  return {0.0, cap, true};
}

double limit_overshoot_cdf(double y, std::span<const LadderSample> samples) {
  if (y < 0.0) throw std::invalid_argument("limit_overshoot_cdf: y must be >= 0");
  double clipped = 0.0;
  double total = 0.0;
  std::size_t n = 0;
  for (const LadderSample& s : samples) {
    if (s.capped) continue;
    clipped += std::min(s.height, y);
    total += s.height;
    ++n;
  }
  if (n == 0) throw NoSamples("limit_overshoot_cdf: no uncapped ladder samples");
  return clipped / total;
}

LadderCdf::LadderCdf(std::vector<double> heights) : heights_(std::move(heights)) {
  if (heights_.empty()) throw NoSamples("LadderCdf: no heights");
  std::sort(heights_.begin(), heights_.end());
  prefix_.resize(heights_.size() + 1);
  prefix_[0] = 0.0;
  KahanSum acc;
  for (std::size_t i = 0; i < heights_.size(); ++i) {
    acc.add(heights_[i]);
    prefix_[i + 1] = acc.value();
  }
  total_ = prefix_.back();
}

double LadderCdf::operator()(double y) const {
  if (y <= 0.0) return 0.0;
  // sum_i min(h_i, y): heights <= y contribute themselves, the rest y.
  const auto it = std::upper_bound(heights_.begin(), heights_.end(), y);
  const auto k = static_cast<std::size_t>(it - heights_.begin());
  const double clipped =
      prefix_[k] + y * static_cast<double>(heights_.size() - k);
  return clipped / total_;
}

LadderRun run_ladder(std::int64_t n_samples, std::int64_t cap,
                     std::uint64_t seed, int workers, bool keep_heights) {
  if (n_samples < 1) throw std::invalid_argument("run_ladder: n_samples must be >= 1");
  // Height slots are written per index, NaN marking capped samples, then
  // reduced in sample order: the result is worker-count independent.
  std::vector<double> slots(static_cast<std::size_t>(n_samples));
  parallel_for_index(n_samples, workers, [&](std::int64_t i) {
    sde::NoiseStream stream(seed, static_cast<std::uint64_t>(i));
    const LadderSample s = sample_ladder_height(stream, cap);
    slots[static_cast<std::size_t>(i)] =
        s.capped ? std::numeric_limits<double>::quiet_NaN() : s.height;
  });

  LadderRun run;
  run.n_samples = n_samples;
  KahanSum sum, sum_sq;
  std::int64_t n_ok = 0;
  if (keep_heights) run.heights.reserve(static_cast<std::size_t>(n_samples));
  for (double h : slots) {
    if (std::isnan(h)) {
      ++run.n_capped;
      continue;
    }
    ++n_ok;
    sum.add(h);
    sum_sq.add(h * h);
    if (keep_heights) run.heights.push_back(h);
  }
  if (n_ok == 0) throw NoSamples("run_ladder: every sample hit the cap");
  run.mean_height = sum.value() / static_cast<double>(n_ok);
  run.mean_sq_height = sum_sq.value() / static_cast<double>(n_ok);
  return run;
}

EmpiricalCdf::EmpiricalCdf(std::vector<double> values) : values_(std::move(values)) {
  if (values_.empty()) throw NoSamples("EmpiricalCdf: no samples");
  std::sort(values_.begin(), values_.end());
}

double EmpiricalCdf::operator()(double y) const {
  const auto it = std::upper_bound(values_.begin(), values_.end(), y);
  return static_cast<double>(it - values_.begin()) /
         static_cast<double>(values_.size());
}

double EmpiricalCdf::mean() const {
  KahanSum acc;
  for (double v : values_) acc.add(v);
  return acc.value() / static_cast<double>(values_.size());
}

double ks_distance(const std::function<double(double)>& cdf_a,
                   const std::function<double(double)>& cdf_b,
                   std::span<const double> grid) {
  double d = 0.0;
  for (double y : grid) d = std::max(d, std::abs(cdf_a(y) - cdf_b(y)));
  return d;
}

}  // namespace stopdiff::overshoot
