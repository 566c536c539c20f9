#include "stopdiff/sde.hpp"

#include <cmath>
#include <numbers>

namespace stopdiff::sde {

namespace {

std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ull;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

// Stream key: both words pass through the splitmix finalizer so that
// nearby (seed, path_index) pairs land far apart in engine-seed space.
std::uint64_t stream_key(std::uint64_t seed, std::uint64_t path_index) {
  return splitmix64(splitmix64(seed) + 0x9e3779b97f4a7c15ull * (path_index + 1));
}

}  // namespace

SdeModel::SdeModel(int dim_state, int dim_noise, DriftFn drift,
                   DiffusionFn diffusion, bool time_homogeneous)
    : dim_state_(dim_state),
      dim_noise_(dim_noise),
      drift_(std::move(drift)),
      diffusion_(std::move(diffusion)),
      time_homogeneous_(time_homogeneous) {
  if (dim_state_ < 1 || dim_noise_ < 1)
    throw std::invalid_argument("SdeModel: dimensions must be >= 1");
}

Vec SdeModel::drift_at(double t, const Vec& x) const {
  Vec out(dim_state_);
  drift_(t, x, out);
  return out;
}

Mat SdeModel::diffusion_at(double t, const Vec& x) const {
  Mat out(dim_state_, dim_noise_);
  diffusion_(t, x, out);
  return out;
}

SdeModel brownian_motion(int dim) { return scaled_brownian_motion(dim, 1.0); }

SdeModel scaled_brownian_motion(int dim, double scale) {
  return SdeModel(
      dim, dim, [](double, const Vec&, Vec& out) { out.setZero(); },
      [scale, dim](double, const Vec&, Mat& out) {
        out = scale * Mat::Identity(dim, dim);
      },
      /*time_homogeneous=*/true);
}

SdeModel benchmark3d_model() {
  auto drift = [](double, const Vec& x, Vec& out) {
    out(0) = x(1);
    out(1) = x(2);
    out(2) = x(0);
  };
  auto diffusion = [](double, const Vec& x, Mat& out) {
    const double s1 = std::sqrt(1.0 + std::abs(x(0)));
    const double s2 = std::sqrt(1.0 + std::abs(x(1)));
    const double s3 = std::sqrt(1.0 + std::abs(x(2)));
    const double q = std::sqrt(0.75);
    out.setZero();
    out(0, 0) = s3;
    out(1, 0) = 0.5 * s1;
    out(1, 1) = q * s1;
    out(2, 1) = 0.5 * s2;
    out(2, 2) = q * s2;
  };
  return SdeModel(3, 3, drift, diffusion, /*time_homogeneous=*/true);
}

NoiseStream::NoiseStream(std::uint64_t seed, std::uint64_t path_index)
    : seed_(seed), path_index_(path_index), engine_(stream_key(seed, path_index)) {}

double NoiseStream::normal() {
  ++draws_;
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  // Top 53 bits give u1 in (0, 1] (never 0, so the log is finite) and
  // u2 in [0, 1).
  const double u1 = static_cast<double>((engine_() >> 11) + 1) * 0x1.0p-53;
  const double u2 = static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double a = 2.0 * std::numbers::pi * u2;
  spare_ = r * std::sin(a);
  has_spare_ = true;
  return r * std::cos(a);
}

Vec euler_step(const SdeModel& model, double t, const Vec& x, double dt,
               const Vec& dw) {
  if (dw.size() != model.dim_noise())
    throw std::invalid_argument("euler_step: dW has wrong length");
  Vec b = model.drift_at(t, x);
  Mat sig = model.diffusion_at(t, x);
  if (!b.allFinite() || !sig.allFinite())
    throw NonFiniteCoefficient("euler_step: non-finite drift or diffusion at t=" +
                               std::to_string(t));
  return x + b * dt + sig * dw;
}

Vec gaussian_increment(NormalSource& source, double dt, int dim_noise) {
  Vec z(dim_noise);
  source.normals(std::span<double>(z.data(), static_cast<std::size_t>(dim_noise)));
  return std::sqrt(dt) * z;
}

}  // namespace stopdiff::sde
