// SPDX-License-Identifier: Apache-2.0
//
// Brute-force ground truth for small finite-support problems. Nothing here
// calls the sort-based threshold solver; the point is to check it.
#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "fscore/fbeta.hpp"

namespace fscore {

struct BruteForceResult {
  double score = 0.0;
  Bits bits;
};

// Exhaustive search over all 2^K classifiers; the lexicographically smallest
// maximizer is returned. Throws SizeError when K > 20.
BruteForceResult brute_force_optimum(const DiscreteDistribution& dist, const FBetaParams& params);

// Sign-change localization of the threshold equation on a uniform grid over
// [0, 1/(1+b^2)], refined by bisection inside the bracketing cell.
// Throws ArgumentError when grid_size < 1000.
Threshold scan_threshold(const DiscreteDistribution& dist, const FBetaParams& params,
                         std::size_t grid_size);

struct IdentitySuiteOptions {
  std::size_t max_support = 12;
  double min_p_y1 = 1e-3;
  double tolerance = 1e-12;
  std::vector<std::size_t> sample_sizes{100, 1000, 10000};
  std::size_t scan_grid = 1000;
  std::filesystem::path failure_dir;  // empty: do not write failure artifacts
};

struct TrialFailure {
  std::size_t trial = 0;
  std::string check;
  double observed = 0.0;
  std::string distribution_csv;
  std::string classifier;
};

struct IdentitySuiteReport {
  std::size_t trials = 0;
  std::uint64_t seed = 0;
  std::size_t optimality_pass = 0;  // brute force max == F(bayes classifier)
  std::size_t identity_pass = 0;    // excess direct == identity form
  std::size_t scan_pass = 0;        // scan_threshold agrees with bayes_threshold
  std::size_t gap_bound_pass = 0;   // |theta_hat - theta*| <= cdf gap bound at every sample size
  std::vector<double> mean_threshold_error;  // per sample size, averaged over trials
  bool threshold_converges = false;          // mean error decreases with sample size
  double max_optimality_gap = 0.0;
  double max_identity_gap = 0.0;
  std::vector<TrialFailure> failures;

  bool passed() const;
};

// Random distributions (K <= max_support, Dirichlet(1) masses, U[0,1] etas,
// P(Y=1) > min_p_y1) with random classifiers.
IdentitySuiteReport randomized_identity_suite(std::size_t trials, std::uint64_t seed,
                                              const IdentitySuiteOptions& opts = {});

}  // namespace fscore
