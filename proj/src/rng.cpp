#include "stochdyn/rng.hpp"

#include <cmath>

#include "stochdyn/error.hpp"

namespace stochdyn {
namespace {

std::uint64_t splitmix64(std::uint64_t& x) {
  std::uint64_t z = (x += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

constexpr std::uint64_t rotl(std::uint64_t x, int k) {
  return (x << k) | (x >> (64 - k));
}

// Below this mean the small-count algorithms are used directly.
constexpr double kSmallMean = 30.0;

}  // namespace

RngStream::RngStream(std::uint64_t seed, std::uint64_t stream_id)
    : seed_(seed), stream_id_(stream_id) {
  std::uint64_t a = seed;
  std::uint64_t b = stream_id ^ 0x6a09e667f3bcc909ULL;
  std::uint64_t key = splitmix64(a) ^ rotl(splitmix64(b), 17);
  for (auto& s : state_) s = splitmix64(key);
}

std::uint64_t RngStream::next_u64() {
  const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
  const std::uint64_t t = state_[1] << 17;
  state_[2] ^= state_[0];
  state_[3] ^= state_[1];
  state_[1] ^= state_[2];
  state_[0] ^= state_[3];
  state_[2] ^= t;
  state_[3] = rotl(state_[3], 45);
  return result;
}

double RngStream::uniform() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double RngStream::uniform_open() {
  return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
}

double RngStream::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_normal_;
  }
  // Marsaglia polar method.
  double u = 0.0, v = 0.0, s = 0.0;
  do {
    u = 2.0 * uniform() - 1.0;
    v = 2.0 * uniform() - 1.0;
    s = u * u + v * v;
  } while (s >= 1.0 || s == 0.0);
  const double f = std::sqrt(-2.0 * std::log(s) / s);
  spare_normal_ = v * f;
  has_spare_ = true;
  return u * f;
}

Eigen::VectorXd RngStream::normal_vector(Eigen::Index p) {
  Eigen::VectorXd z(p);
  for (Eigen::Index i = 0; i < p; ++i) z(i) = normal();
  return z;
}

double RngStream::exponential() { return -std::log(uniform_open()); }

double RngStream::gamma(double shape) {
  if (!(shape > 0.0)) throw Error(ErrorCode::parameter, "gamma shape must be positive");
  if (shape < 1.0) {
    const double g = gamma(shape + 1.0);
    return g * std::pow(uniform_open(), 1.0 / shape);
  }
  // Marsaglia-Tsang.
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x = 0.0, v = 0.0;
    do {
      x = normal();
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = uniform_open();
    if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
    if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
  }
}

double RngStream::beta(double a, double b) {
  const double x = gamma(a);
  const double y = gamma(b);
  return x / (x + y);
}

std::int64_t RngStream::poisson(double mean) {
  if (mean < 0.0 || !std::isfinite(mean))
    throw Error(ErrorCode::parameter, "poisson mean must be finite and nonnegative");
  std::int64_t count = 0;
  // Unit-rate arrivals on [0, mean]: when the mean is large, jump to the
  // m-th arrival time (a gamma draw) and recurse on what is left.
  while (mean > kSmallMean) {
    const auto m = static_cast<std::int64_t>(std::floor(0.875 * mean));
    const double arrival = gamma(static_cast<double>(m));
    if (arrival < mean) {
      count += m;
      mean -= arrival;
    } else {
      return count + binomial(m - 1, mean / arrival);
    }
  }
  const double limit = std::exp(-mean);
  double prod = uniform_open();
  while (prod > limit) {
    ++count;
    prod *= uniform_open();
  }
  return count;
}

std::int64_t RngStream::binomial_inversion(std::int64_t n, double p) {
  const double q = 1.0 - p;
  const double s = p / q;
  const double a = static_cast<double>(n + 1) * s;
  double r = std::pow(q, static_cast<double>(n));
  double u = uniform();
  std::int64_t x = 0;
  while (u > r) {
    u -= r;
    ++x;
    if (x > n) return n;
    r *= a / static_cast<double>(x) - s;
  }
  return x;
}

std::int64_t RngStream::binomial(std::int64_t n, double p) {
  if (n < 0 || !(p >= 0.0 && p <= 1.0))
    throw Error(ErrorCode::parameter, "binomial requires n >= 0 and p in [0, 1]");
  std::int64_t offset = 0;
  int sign = 1;
  for (;;) {
    if (n == 0 || p == 0.0) return offset;
    if (p == 1.0) return offset + sign * n;
    if (p > 0.5) {
      // Count failures instead: X = n - Y with Y ~ Bin(n, 1 - p).
      offset += sign * n;
      sign = -sign;
      p = 1.0 - p;
    }
    if (static_cast<double>(n) * p <= kSmallMean) break;
    // The k-th order statistic of n uniforms is Beta(k, n - k + 1); split the
    // sample at it and continue on the side that contains p.
    const std::int64_t k = (n + 1) / 2;
    const double split = beta(static_cast<double>(k), static_cast<double>(n - k + 1));
    if (p < split) {
      n = k - 1;
      p = p / split;
    } else {
      offset += sign * k;
      n = n - k;
      p = (p - split) / (1.0 - split);
    }
  }
  return offset + sign * binomial_inversion(n, p);
}

RngStream derive_rng(std::uint64_t seed, std::uint64_t stream_id) {
  return RngStream(seed, stream_id);
}

}  // namespace stochdyn
