// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cstddef>
#include <numeric>
#include <span>
#include <vector>

namespace fscore::detail {

// Root of theta -> b2 * theta * P - sum_i w_i (v_i - theta)_+ with
// P = sum_i w_i v_i > 0. For any prefix S of the values sorted in decreasing
// order, theta_S = sum_S w v / (b2 P + sum_S w) has non-positive residual,
// and the root itself is theta_S for S = {v > root}. The root is therefore
// the largest theta_S, which needs one sort and one pass.
inline double max_prefix_root(std::span<const double> values, std::span<const double> weights,
                              double b2) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] > values[b]; });
  const bool unit = weights.empty();
  long double p = 0.0L;
  for (std::size_t i = 0; i < n; ++i) p += (unit ? 1.0L : weights[i]) * values[i];
  if (p <= 0.0L) return 0.0;
  long double a = 0.0L;
  long double m = 0.0L;
  double best = 0.0;
  for (std::size_t idx : order) {
    const long double w = unit ? 1.0L : weights[idx];
    if (w == 0.0L) continue;
    a += w * values[idx];
    m += w;
    best = std::max(best, static_cast<double>(a / (b2 * p + m)));
  }
  return best;
}

// b2 * theta * P - sum_i w_i (v_i - theta)_+ , not normalized by total weight.
inline double raw_residual(std::span<const double> values, std::span<const double> weights,
                           double b2, double theta) {
  const bool unit = weights.empty();
  long double p = 0.0L;
  long double plus = 0.0L;
  for (std::size_t i = 0; i < values.size(); ++i) {
    const long double w = unit ? 1.0L : weights[i];
    p += w * values[i];
    if (values[i] > theta) plus += w * (values[i] - theta);
  }
  return static_cast<double>(b2 * theta * p - plus);
}

// Plain bisection on an increasing function with f(lo) <= 0 <= f(hi).
template <class F>
double bisect_increasing(F&& f, double lo, double hi, double tol, int max_iter = 200) {
  for (int it = 0; it < max_iter && hi - lo > tol; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (f(mid) < 0.0)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace fscore::detail
