#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

namespace stopdiff {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Compensated (Kahan) accumulator. Summation order is part of the
/// reproducibility contract for all Monte Carlo aggregation, so callers
/// must feed values in a fixed order (by path index).
class KahanSum {
 public:
  void add(double x) {
    const double y = x - c_;
    const double t = s_ + y;
    c_ = (t - s_) - y;
    s_ = t;
  }
  double value() const { return s_; }

 private:
  double s_ = 0.0;
  double c_ = 0.0;
};

/// Standard normal CDF.
double normal_cdf(double x);

/// Derives a decorrelated sub-seed, e.g. one per experiment cell, from a
/// master seed (splitmix64 finalizer on both words).
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t index);

/// FNV-1a 64-bit hash, used to fingerprint resolved configurations in
/// output files. Stable across platforms, unlike std::hash.
std::uint64_t fnv1a64(const void* data, std::size_t n);

}  // namespace stopdiff
