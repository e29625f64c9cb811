// Shared helpers for the unit tests: random finite-support laws and
// reference computations written without the library's solvers.
#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "fscore/fbeta.hpp"
#include "fscore/random.hpp"

namespace testing {

inline fscore::DiscreteDistribution random_discrete(fscore::Rng& rng, std::size_t K,
                                                     double min_p = 1e-3) {
  std::vector<double> pts(K), mass(K), eta(K);
  double p = 0.0;
  do {
    double s = 0.0;
    for (auto& m : mass) s += (m = rng.exponential());
    for (auto& m : mass) m /= s;
    p = 0.0;
    for (std::size_t i = 0; i < K; ++i) p += mass[i] * (eta[i] = rng.uniform());
  } while (!(p > min_p));
  for (std::size_t i = 0; i < K; ++i) pts[i] = static_cast<double>(i);
  return fscore::DiscreteDistribution(pts, 1, mass, eta);
}

// Normalized F_b of a bit-vector, straight from the definition.
inline double direct_score(const fscore::DiscreteDistribution& d, const std::vector<std::uint8_t>& g,
                           double b) {
  long double tp = 0, pg = 0;
  for (std::size_t i = 0; i < d.size(); ++i)
    if (g[i]) {
      tp += static_cast<long double>(d.mass()[i]) * d.eta()[i];
      pg += d.mass()[i];
    }
  return static_cast<double>(tp / (static_cast<long double>(b) * b * d.p_y1() + pg));
}

// Root of b^2 t p - E(eta - t)_+ by plain bisection.
inline double bisect_threshold(const fscore::DiscreteDistribution& d, double b) {
  double lo = 0.0, hi = 1.0 / (1.0 + b * b);
  for (int it = 0; it < 200; ++it) {
    const double t = 0.5 * (lo + hi);
    long double plus = 0;
    for (std::size_t i = 0; i < d.size(); ++i)
      plus += d.mass()[i] * std::max(0.0, d.eta()[i] - t);
    ((static_cast<long double>(b) * b * t * d.p_y1() - plus) >= 0 ? hi : lo) = t;
  }
  return 0.5 * (lo + hi);
}

// Uniform atoms on [0,1] with eta(x) = x.
inline fscore::DiscreteDistribution uniform_eta_grid(std::size_t atoms) {
  std::vector<double> pts(atoms), mass(atoms, 1.0 / static_cast<double>(atoms)), eta(atoms);
  for (std::size_t i = 0; i < atoms; ++i) pts[i] = eta[i] = (static_cast<double>(i) + 0.5) / atoms;
  return fscore::DiscreteDistribution(pts, 1, mass, eta);
}

}  // namespace testing
