// Synthetic latent trajectories built with the real update rule.
#pragma once

#include <vector>

#include "dualloop/language_loop.hpp"
#include "dualloop/rng.hpp"
#include "dualloop/vector_math.hpp"
#include "oracles.hpp"

namespace synthetic {

using dualloop::Vector;

// 50 updates at eta 0.5, reward 1; the embedding flips sign at each step in `flips`.
// Each flip moves z by about 0.76, every later step by at most about 0.47.
inline std::vector<Vector> flip_trajectory(std::size_t dim, std::uint64_t seed,
                                           const std::vector<std::size_t>& flips, std::size_t updates = 50) {
  dualloop::Rng rng(seed);
  const Vector a = dualloop::normalized(oracle::random_vector(rng, dim));
  Vector b = oracle::random_vector(rng, dim);
  const double ab = dualloop::dot(a, b);
  for (std::size_t j = 0; j < dim; ++j) b[j] -= ab * a[j];
  b = dualloop::normalized(b);
  dualloop::LatentVector z{Vector(dim), 0};
  for (std::size_t j = 0; j < dim; ++j) z.values[j] = 0.3 * a[j] + 0.3 * b[j];
  std::vector<Vector> pts{z.values};
  double sign = 1.0;
  for (std::size_t t = 1; t <= updates; ++t) {
    for (std::size_t f : flips) sign = f == t ? -sign : sign;
    Vector e(dim);
    for (std::size_t j = 0; j < dim; ++j) e[j] = sign * a[j];
    z = dualloop::latent_update(z, e, 1.0, 0.5);
    pts.push_back(z.values);
  }
  return pts;
}

// 50 updates at eta 0.1 toward noisy samples around one fixed direction.
inline std::vector<Vector> stationary_trajectory(std::size_t dim, std::uint64_t seed, std::size_t updates = 50) {
  dualloop::Rng rng(seed);
  const Vector center = dualloop::normalized(oracle::random_vector(rng, dim));
  dualloop::LatentVector z = dualloop::init_latent(dim, seed + 1);
  std::vector<Vector> pts{z.values};
  const double noise = 0.05 / std::sqrt(static_cast<double>(dim));
  for (std::size_t t = 1; t <= updates; ++t) {
    Vector e = center;
    for (double& x : e) x += noise * rng.normal();
    z = dualloop::latent_update(z, dualloop::normalized(e), 1.0, 0.1);
    pts.push_back(z.values);
  }
  return pts;
}

}  // namespace synthetic
