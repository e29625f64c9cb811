// SPDX-License-Identifier: Apache-2.0
//
// Empirical threshold estimation from regression scores on an unlabeled
// sample, and the CDF-gap bound on its distance to the population threshold.
#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "fscore/fbeta.hpp"

namespace fscore {

// Scores eta_hat(X_i) on the unlabeled sample. `weights`, when non-empty,
// are multiplicities (an empirical measure with repeated atoms); an empty
// vector means every value has weight one.
struct ScoreSample {
  std::vector<double> values;
  std::vector<double> weights;
  std::size_t n_source = 0;  // labeled sample size behind eta_hat

  // Throws ArgumentError if empty, out of [0,1], or weights are malformed.
  void validate() const;
  double total_weight() const;
  double weighted_mean() const;

  // One column of scores, optional header.
  static ScoreSample read_csv(std::istream& in);
  static ScoreSample read_csv_file(const std::filesystem::path& path);
};

enum class SolveMethod { exact, bisection };

struct ThresholdFit {
  Threshold theta;
  double residual = 0.0;         // |b^2 theta mean - mean (v - theta)_+|
  bool degenerate_zero = false;  // all scores were zero; theta fixed at 0
};

// Tolerance used when the caller has none: n^{-beta/(2beta+d)} if the
// smoothness and dimension are known, else 1e-10.
double default_tolerance(std::size_t n_source, std::optional<double> beta,
                         std::optional<std::size_t> dim);

// Root of theta -> b^2 theta mean(v) - mean((v - theta)_+) on
// [0, 1/(1+b^2)]. Throws ArgumentError when tol <= 0.
ThresholdFit empirical_threshold(const ScoreSample& s, const FBetaParams& params, double tol,
                                 SolveMethod method = SolveMethod::exact);

double empirical_threshold_residual(const ScoreSample& s, double theta, const FBetaParams& params);

// Law of eta(X) for a finite-support distribution: atoms with masses.
struct DiscreteEtaLaw {
  std::vector<double> values;
  std::vector<double> masses;

  static DiscreteEtaLaw from(const DiscreteDistribution& dist);
  double cdf(double t) const;
};

// (1/(b^2 p)) * int_0^1 |P(eta(X) <= t) - P_N(eta_hat(X) <= t)| dt.
// The discrete-law overload integrates the step functions exactly; the
// callable overload uses adaptive Gauss-Kronrod between sample breakpoints.
// Throws DomainError when p_y1 <= 0.
double cdf_gap_bound(const DiscreteEtaLaw& law, const ScoreSample& s, double p_y1, double b = 1.0);
double cdf_gap_bound(const std::function<double(double)>& true_cdf, const ScoreSample& s,
                     double p_y1, double b = 1.0, double tol = 1e-8);

}  // namespace fscore
