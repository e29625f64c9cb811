// SPDX-License-Identifier: Apache-2.0
//
// Two-step plug-in classifier: eta_hat is fitted on labeled data, the
// threshold is solved on eta_hat over unlabeled data, and predictions are
// 1{eta_hat(x) > theta_hat}.
#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

#include "fscore/fbeta.hpp"
#include "fscore/regression.hpp"
#include "fscore/threshold.hpp"

namespace fscore {

class UnlabeledDataset {
 public:
  UnlabeledDataset(std::vector<double> points, std::size_t dim);

  std::size_t size() const noexcept { return dim_ == 0 ? 0 : points_.size() / dim_; }
  std::size_t dim() const noexcept { return dim_; }
  std::span<const double> point(std::size_t i) const noexcept {
    return {points_.data() + i * dim_, dim_};
  }
  const std::vector<double>& points() const noexcept { return points_; }

  // Columns x_1..x_d.
  static UnlabeledDataset read_csv(std::istream& in);
  static UnlabeledDataset read_csv_file(const std::filesystem::path& path);

 private:
  std::vector<double> points_;
  std::size_t dim_;
};

struct Provenance {
  std::size_t n = 0;             // labeled sample size
  std::size_t N = 0;             // unlabeled size as supplied
  double N_used = 0.0;           // total weight of the score sample
  bool augmented = false;        // labeled features appended because N < n
  bool degenerate_threshold = false;
  double threshold_residual = 0.0;
};

class PluginClassifier {
 public:
  PluginClassifier(RegressionEstimate eta_hat, Threshold theta_hat, FBetaParams params,
                   Provenance provenance);

  // 1{eta_hat(x) > theta_hat}. Throws ArgumentError on dimension mismatch.
  int predict(std::span<const double> x) const;
  std::vector<std::uint8_t> predict_batch(std::span<const double> queries) const;

  const RegressionEstimate& eta_hat() const noexcept { return eta_hat_; }
  Threshold theta_hat() const noexcept { return theta_hat_; }
  const FBetaParams& params() const noexcept { return params_; }
  const Provenance& provenance() const noexcept { return provenance_; }

 private:
  RegressionEstimate eta_hat_;
  Threshold theta_hat_;
  FBetaParams params_;
  Provenance provenance_;
};

// Fits eta_hat, augments the unlabeled set with the labeled features when
// N < n, and solves the empirical threshold. Throws TrainingDegenerate when
// every label is 0.
PluginClassifier train_plugin(const LabeledDataset& labeled, const UnlabeledDataset& unlabeled,
                              const EstimatorConfig& estimator, const FBetaParams& params);

// Second step only: threshold from an already fitted estimate and a score
// sample (possibly weighted).
PluginClassifier calibrate_plugin(RegressionEstimate eta_hat, const ScoreSample& scores,
                                  const FBetaParams& params, Provenance provenance);

// Model persistence: a JSON document plus a sidecar CSV holding the fitting
// data (written next to the JSON as <stem>.data.csv).
void save_model(const PluginClassifier& clf, const std::filesystem::path& json_path);
PluginClassifier load_model(const std::filesystem::path& json_path);

// CSV with columns index,eta_hat,prediction.
void write_predictions(std::ostream& out, const PluginClassifier& clf,
                       std::span<const double> queries);

}  // namespace fscore
