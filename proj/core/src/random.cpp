// SPDX-License-Identifier: Apache-2.0
#include "reflex/random.hpp"

#include <boost/random/bernoulli_distribution.hpp>
#include <boost/random/gamma_distribution.hpp>
#include <boost/random/normal_distribution.hpp>
#include <boost/random/uniform_int_distribution.hpp>
#include <boost/random/uniform_real_distribution.hpp>
#include <cmath>

#include "reflex/errors.hpp"

namespace reflex {

double Rng::uniform() { return boost::random::uniform_real_distribution<double>(0.0, 1.0)(engine_); }

double Rng::uniform(double lo, double hi) {
  return boost::random::uniform_real_distribution<double>(lo, hi)(engine_);
}

std::size_t Rng::index(std::size_t n) {
  if (n == 0) throw ArgumentError("Rng::index: empty range");
  return boost::random::uniform_int_distribution<std::size_t>(0, n - 1)(engine_);
}

double Rng::normal(double mean, double stddev) {
  return boost::random::normal_distribution<double>(mean, stddev)(engine_);
}

double Rng::beta(double a, double b) {
  if (!(a > 0.0) || !(b > 0.0)) throw ArgumentError("Rng::beta: shape parameters must be positive");
  // log Gamma(s) = log Gamma(s + 1) + log(U) / s keeps tiny shapes representable.
  auto log_gamma_draw = [this](double shape) {
    const double g = boost::random::gamma_distribution<double>(shape + 1.0, 1.0)(engine_);
    double u = uniform();
    while (u <= 0.0) u = uniform();
    return std::log(g) + std::log(u) / shape;
  };
  const double lx = log_gamma_draw(a);
  const double ly = log_gamma_draw(b);
  return 1.0 / (1.0 + std::exp(ly - lx));
}

bool Rng::bernoulli(double p) { return boost::random::bernoulli_distribution<double>(p)(engine_); }

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) {
  std::uint64_t z = master + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

ad::Tensor glorot_init(const ad::Shape& shape, Rng& rng, bool requires_grad) {
  double fan_in = 1.0;
  double fan_out = 1.0;
  if (shape.size() == 1) {
    fan_in = fan_out = static_cast<double>(shape[0]);
  } else if (shape.size() >= 2) {
    fan_in = static_cast<double>(shape[0]);
    fan_out = static_cast<double>(ad::shape_size(shape) / shape[0]);
  }
  const double bound = std::sqrt(6.0 / (fan_in + fan_out));
  std::vector<double> values(ad::shape_size(shape));
  for (auto& v : values) v = rng.uniform(-bound, bound);
  return ad::Tensor::from(shape, std::move(values), requires_grad);
}

}  // namespace reflex
