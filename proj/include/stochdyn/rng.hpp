#pragma once

#include <array>
#include <cstdint>

#include <Eigen/Dense>

namespace stochdyn {

/// Deterministic random stream keyed by (seed, stream id).
///
/// The engine is xoshiro256** and every distribution is implemented here, so a
/// given key produces the same draws on every platform and standard library.
/// A stream is stateful and must be owned by a single task; independent
/// replicates derive their own stream from the replicate index.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t stream_id);

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t stream_id() const noexcept { return stream_id_; }

  std::uint64_t next_u64();
  /// Uniform on [0, 1) with 53 random bits.
  double uniform();
  /// Uniform on (0, 1).
  double uniform_open();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  double normal();
  Eigen::VectorXd normal_vector(Eigen::Index p);
  double exponential();
  double gamma(double shape);
  double beta(double a, double b);
  std::int64_t poisson(double mean);
  std::int64_t binomial(std::int64_t n, double p);

 private:
  std::int64_t binomial_inversion(std::int64_t n, double p);

  std::uint64_t seed_;
  std::uint64_t stream_id_;
  std::array<std::uint64_t, 4> state_{};
  double spare_normal_ = 0.0;
  bool has_spare_ = false;
};

RngStream derive_rng(std::uint64_t seed, std::uint64_t stream_id);

}  // namespace stochdyn
