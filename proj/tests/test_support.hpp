// Helpers shared by the unit tests: random models and dense oracles.
#pragma once

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "sgivens/givens.hpp"
#include "sgivens/random.hpp"

namespace sgivens::testing {

inline Matrix dense_rotator(int i, int j, double angle, int q) {
  Matrix o = Matrix::Identity(q, q);
  o(i - 1, i - 1) = std::cos(angle);
  o(j - 1, j - 1) = std::cos(angle);
  o(i - 1, j - 1) = std::sin(angle);
  o(j - 1, i - 1) = -std::sin(angle);
  return o;
}

// Left-to-right dense product of the model's rotators.
inline Matrix dense_eigenmatrix(const Model& m) {
  Matrix r = Matrix::Identity(m.dim(), m.dim());
  for (const auto& rot : m.rotators()) r = r * dense_rotator(rot.pair.i, rot.pair.j, rot.angle, m.dim());
  return r;
}

inline Vector random_eigenvalues(int q, Rng& rng) {
  std::vector<double> d(static_cast<std::size_t>(q));
  for (auto& v : d) v = std::exp(2.0 * (uniform_open(rng) - 0.5));
  std::sort(d.begin(), d.end(), std::greater<>());
  Vector out(q);
  for (int k = 0; k < q; ++k) out(k) = d[static_cast<std::size_t>(k)] + 1e-3 * (q - k);
  return out;
}

// Each pair present with probability `density`, angles uniform on (-pi/2, pi/2).
inline Model random_model(int q, double density, Rng& rng) {
  std::vector<Rotator<double>> rot;
  for (const auto& p : all_pairs(q)) {
    if (uniform_open(rng) >= density) continue;
    rot.push_back({p, (uniform_open(rng) - 0.5) * std::numbers::pi});
  }
  return Model(q, std::move(rot), random_eigenvalues(q, rng));
}

inline Matrix random_spd(int q, Rng& rng, double ridge = 0.5) {
  Matrix a(q, q);
  for (int i = 0; i < q; ++i)
    for (int j = 0; j < q; ++j) a(i, j) = standard_normal(rng);
  return a * a.transpose() + ridge * Matrix::Identity(q, q);
}

}  // namespace sgivens::testing
