// SPDX-License-Identifier: Apache-2.0
//
// Nonparametric estimates of eta(x) = P(Y=1 | X=x): k-nearest neighbors,
// Nadaraya-Watson kernel smoothing and local polynomial regression. Every
// estimate is clipped to [0, 1].
#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace fscore {

class LabeledDataset {
 public:
  LabeledDataset(std::vector<double> points, std::size_t dim, std::vector<std::uint8_t> labels);

  std::size_t size() const noexcept { return labels_.size(); }
  std::size_t dim() const noexcept { return dim_; }
  std::span<const double> point(std::size_t i) const noexcept {
    return {points_.data() + i * dim_, dim_};
  }
  const std::vector<double>& points() const noexcept { return points_; }
  const std::vector<std::uint8_t>& labels() const noexcept { return labels_; }
  std::size_t positives() const noexcept;

  // Columns x_1..x_d,y.
  void write_csv(std::ostream& out) const;
  static LabeledDataset read_csv(std::istream& in);
  static LabeledDataset read_csv_file(const std::filesystem::path& path);

 private:
  std::vector<double> points_;
  std::size_t dim_;
  std::vector<std::uint8_t> labels_;
};

struct SmoothnessSpec {
  double beta = 1.0;
  double L = 1.0;

  void validate() const;
};

struct Bandwidth {
  double h;    // n^{-1/(2beta+d)}
  double a_n;  // n^{2beta/(2beta+d)}
};

Bandwidth default_bandwidth(std::size_t n, const SmoothnessSpec& spec, std::size_t dim);

enum class EstimatorMethod { knn, kernel, local_poly };
enum class KernelType { epanechnikov, gaussian };

std::string to_string(EstimatorMethod m);
std::string to_string(KernelType k);
EstimatorMethod parse_method(const std::string& s);
KernelType parse_kernel(const std::string& s);

struct EstimatorConfig {
  EstimatorMethod method = EstimatorMethod::knn;
  std::size_t k = 1;
  double h = 1.0;
  int degree = 0;
  KernelType kernel = KernelType::epanechnikov;
};

// Fitted, immutable estimate. Cheap to copy (shares the fitted state).
class RegressionEstimate {
 public:
  double evaluate(std::span<const double> x) const;
  // Row-major queries; output order matches input order.
  std::vector<double> evaluate_batch(std::span<const double> queries) const;

  const EstimatorConfig& config() const noexcept;
  std::size_t dim() const noexcept;
  const LabeledDataset& data() const noexcept;

  struct State;

 private:
  explicit RegressionEstimate(std::shared_ptr<const State> s) : state_(std::move(s)) {}
  std::shared_ptr<const State> state_;

  friend RegressionEstimate fit(const LabeledDataset& data, const EstimatorConfig& cfg);
};

// Mean label of the k nearest points (Euclidean; ties go to the lowest index).
RegressionEstimate fit_knn(const LabeledDataset& data, std::size_t k);
// sum_i K((x - x_i)/h) y_i / sum_i K(...); 1-NN value when the window is empty.
RegressionEstimate fit_kernel(const LabeledDataset& data, double h,
                              KernelType kernel = KernelType::epanechnikov);
// Intercept of the Epanechnikov-weighted least-squares polynomial fit around
// x. Falls back to fit_kernel's value when the local design is singular.
RegressionEstimate fit_local_poly(const LabeledDataset& data, int degree, double h);
RegressionEstimate fit(const LabeledDataset& data, const EstimatorConfig& cfg);

}  // namespace fscore
