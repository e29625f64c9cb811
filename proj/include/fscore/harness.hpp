// SPDX-License-Identifier: Apache-2.0
//
// Monte Carlo experiments for the plug-in procedure: convergence rates of
// the excess score and the threshold error, and the DKW exceedance table.
#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "fscore/fbeta.hpp"
#include "fscore/regression.hpp"
#include "fscore/synthetic.hpp"

namespace fscore {

struct FamilySpec {
  std::string name = "smooth";  // smooth | constant | separated | hard
  double beta = 1.0;
  double alpha = 1.0;
  double amplitude = 0.4;       // smooth
  double eta_value = 0.5;       // constant
  HardFamilyParams hard;        // hard (sigma drawn from sigma_seed when empty)
  std::uint64_t sigma_seed = 0;
};

// Estimator hyperparameters as functions of n: k = ceil(k_scale a_n),
// h = h_scale n^{-1/(2beta+d)}, degree = floor(beta) unless set.
struct EstimatorSpec {
  EstimatorMethod method = EstimatorMethod::knn;
  double k_scale = 1.0;
  double h_scale = 1.0;
  std::optional<int> degree;
  KernelType kernel = KernelType::epanechnikov;

  EstimatorConfig at(std::size_t n, const SmoothnessSpec& s, std::size_t dim) const;
};

// How the unlabeled size follows n.
struct NRule {
  enum class Kind { same, square, fixed, multiple } kind = Kind::same;
  double value = 1.0;

  std::size_t apply(std::size_t n) const;
  std::string to_string() const;
  static NRule parse(const std::string& s);  // "n", "n2", "fixed:<N>", "mult:<c>"
};

struct ExperimentConfig {
  FamilySpec family;
  EstimatorSpec estimator;
  double b = 1.0;
  std::vector<std::size_t> n_grid{500, 1000, 2000, 4000, 8000};
  NRule N_rule;
  std::size_t reps = 50;
  std::uint64_t seed = 1;
  std::size_t grid_atoms = 100'000;  // atoms per axis of each support component
  std::size_t threads = 1;
  std::filesystem::path out = "out";

  void validate() const;
  static ExperimentConfig from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

AnalyticDistribution build_family(const FamilySpec& spec, double b);

struct RateCell {
  std::size_t n = 0;
  std::size_t N = 0;
  double mean = 0.0;
  double se = 0.0;
  double median = 0.0;
  double zero_fraction = 0.0;

  bool operator==(const RateCell&) const = default;
};

struct RateFitResult {
  std::string statistic;  // "excess" or "threshold_error"
  std::string family;
  std::string N_rule;
  std::size_t reps = 0;
  std::uint64_t seed = 0;
  std::vector<RateCell> cells;
  double slope = 0.0;
  double intercept = 0.0;
  double slope_half_width = 0.0;  // 95%, max of delta-method and residual SE
  double theoretical_exponent = 0.0;
  std::size_t excluded_cells = 0;  // cells with zero mean, left out of the fit
  bool infinite_rate = false;      // every cell had zero mean
  bool fitted = false;

  bool operator==(const RateFitResult&) const = default;
};

struct LogLogFit {
  double slope = 0.0;
  double intercept = 0.0;
  double half_width = 0.0;
  std::size_t used = 0;
};

// Least squares of log(mean) on log(n) over cells with positive mean.
LogLogFit fit_log_log(const std::vector<RateCell>& cells);

// Per-replication statistics, exposed for tests.
struct ReplicationOutcome {
  double excess = 0.0;
  double threshold_error = 0.0;
  double theta_hat = 0.0;
};

std::vector<std::vector<ReplicationOutcome>> run_replications(const ExperimentConfig& cfg);

// Aggregates one statistic ("excess" or "threshold_error") over the
// replications and fits the log-log slope.
RateFitResult summarize_replications(const ExperimentConfig& cfg,
                                     const std::vector<std::vector<ReplicationOutcome>>& outcomes,
                                     const std::string& statistic);

// Exponent of n in the expected rate: -(1+alpha)beta/(2beta+d) for the
// excess, -beta/(2beta+d) for the threshold error.
double theoretical_exponent(const FamilySpec& family, const std::string& statistic);

RateFitResult run_rate_experiment(const ExperimentConfig& cfg);
RateFitResult run_threshold_experiment(const ExperimentConfig& cfg);

struct DkwCell {
  std::size_t N = 0;
  double t = 0.0;
  std::size_t reps = 0;
  std::size_t exceed = 0;
  double frequency = 0.0;
  double bound = 0.0;  // 2 exp(-2 N t^2)
  double se = 0.0;     // binomial standard error of the frequency
  bool within() const { return frequency <= bound + 3.0 * se; }
  bool operator==(const DkwCell&) const = default;
};

// sup_t |F_N(t) - t| for a sample from U[0,1], via the sorted-sample formula.
double ks_deviation_uniform(std::vector<double> sample);

std::vector<DkwCell> run_dkw_check(const std::vector<std::size_t>& N_values,
                                   const std::vector<double>& t_values, std::size_t reps,
                                   std::uint64_t seed);

// Reports. All writers are byte-stable for identical inputs.
enum class ReportFormat { csv, json, svg };

void write_rate_csv(std::ostream& out, const RateFitResult& r);
RateFitResult read_rate_csv(std::istream& in);
nlohmann::json rate_to_json(const RateFitResult& r);
RateFitResult rate_from_json(const nlohmann::json& j);
// Checks a report document against the documented schema; returns the list
// of problems (empty when valid).
std::vector<std::string> validate_rate_json(const nlohmann::json& j);
void write_rate_svg(std::ostream& out, const RateFitResult& r);

void write_dkw_csv(std::ostream& out, const std::vector<DkwCell>& cells);
nlohmann::json dkw_to_json(const std::vector<DkwCell>& cells);

// Writes <stem>.<ext> under `dir` for every requested format; throws IoError
// when the directory cannot be created or written.
std::vector<std::filesystem::path> emit_report(const RateFitResult& r,
                                               const std::filesystem::path& dir,
                                               const std::string& stem,
                                               const std::vector<ReportFormat>& formats);

}  // namespace fscore
