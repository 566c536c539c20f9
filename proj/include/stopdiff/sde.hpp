#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>

#include "stopdiff/common.hpp"

namespace stopdiff::sde {

struct NonFiniteCoefficient : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Drift callable: writes b(t, x) into `out` (length dim_state).
using DriftFn = std::function<void(double t, const Vec& x, Vec& out)>;
/// Diffusion callable: writes the dim_state x dim_noise matrix into `out`.
using DiffusionFn = std::function<void(double t, const Vec& x, Mat& out)>;

/// A diffusion model dX = b(t,X) dt + sigma(t,X) dW. Callables must be pure:
/// model objects are shared across simulation workers without locking.
class SdeModel {
 public:
  SdeModel(int dim_state, int dim_noise, DriftFn drift, DiffusionFn diffusion,
           bool time_homogeneous = false);

  int dim_state() const { return dim_state_; }
  int dim_noise() const { return dim_noise_; }
  bool time_homogeneous() const { return time_homogeneous_; }

  void drift(double t, const Vec& x, Vec& out) const { drift_(t, x, out); }
  void diffusion(double t, const Vec& x, Mat& out) const { diffusion_(t, x, out); }

  // Allocating convenience accessors.
  Vec drift_at(double t, const Vec& x) const;
  Mat diffusion_at(double t, const Vec& x) const;

 private:
  int dim_state_;
  int dim_noise_;
  DriftFn drift_;
  DiffusionFn diffusion_;
  bool time_homogeneous_;
};

/// Built-in models, selectable by name from the CLI.
SdeModel brownian_motion(int dim);
SdeModel scaled_brownian_motion(int dim, double scale);

/// The 3-d benchmark model with drift b(x) = (x2, x3, x1)^T and a
/// lower-triangular diffusion whose squared rows satisfy
/// (sigma sigma^T)_ii = 1 + |x_{i+2 mod 3}|.
SdeModel benchmark3d_model();

/// Source of i.i.d. standard normal draws. Virtual so tests can inject
/// deterministic sequences into path simulations.
class NormalSource {
 public:
  virtual ~NormalSource() = default;
  virtual double normal() = 0;
  virtual void normals(std::span<double> out) {
    for (double& v : out) v = normal();
  }
};

/// Reproducible per-path Gaussian stream. Two streams constructed with the
/// same (seed, path_index) produce identical sequences; distinct path
/// indices give decorrelated streams, so paths can be farmed out to any
/// number of workers with bit-identical results.
///
/// Generation method (fixed): mt19937_64 keyed by a splitmix64 mix of
/// (seed, path_index); uniforms from the top 53 bits; Box-Muller transform
/// with the sine variate cached. mt19937_64 output is fully specified by
/// the standard, so sequences are reproducible across platforms.
class NoiseStream final : public NormalSource {
 public:
  NoiseStream(std::uint64_t seed, std::uint64_t path_index);

  double normal() override;

  std::uint64_t seed() const { return seed_; }
  std::uint64_t path_index() const { return path_index_; }
  std::uint64_t draws() const { return draws_; }

 private:
  std::uint64_t seed_;
  std::uint64_t path_index_;
  std::uint64_t draws_ = 0;
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

/// One Euler step: x + b(t,x) dt + sigma(t,x) dW.
/// Throws NonFiniteCoefficient if the model returns non-finite values.
Vec euler_step(const SdeModel& model, double t, const Vec& x, double dt,
               const Vec& dw);

/// Draws sqrt(dt) * Z with Z a standard normal vector of length dim_noise,
/// advancing the stream.
Vec gaussian_increment(NormalSource& source, double dt, int dim_noise);

}  // namespace stopdiff::sde
