// SPDX-License-Identifier: Apache-2.0
//
// Population-level F_b machinery on finite-support distributions.
//
// Scores use the normalized convention
//
//   F_b(g) = P(Y=1, g(X)=1) / (b^2 P(Y=1) + P(g(X)=1)),
//
// which lives in [0, 1/(1+b^2)]. Setting FBetaParams::normalized = false
// multiplies every reported score by (1 + b^2).
#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <span>
#include <variant>
#include <vector>

namespace fscore {

struct FBetaParams {
  double b = 1.0;
  bool normalized = true;

  // Throws ArgumentError unless b is finite and positive.
  void validate() const;
  double b2() const noexcept { return b * b; }
  // Upper end of the threshold range, 1/(1+b^2).
  double max_threshold() const noexcept { return 1.0 / (1.0 + b * b); }
  // Factor applied to normalized scores when reporting.
  double scale() const noexcept { return normalized ? 1.0 : 1.0 + b * b; }
};

struct Threshold {
  double value = 0.0;
};

// Finite-support joint law of (X, Y): support points with masses and
// eta_i = P(Y=1 | X=x_i). Immutable once constructed.
class DiscreteDistribution {
 public:
  // `points` is row-major, size() * dim entries.
  DiscreteDistribution(std::vector<double> points, std::size_t dim, std::vector<double> mass,
                       std::vector<double> eta);

  std::size_t size() const noexcept { return mass_.size(); }
  std::size_t dim() const noexcept { return dim_; }
  std::span<const double> point(std::size_t i) const noexcept {
    return {points_.data() + i * dim_, dim_};
  }
  const std::vector<double>& points() const noexcept { return points_; }
  const std::vector<double>& mass() const noexcept { return mass_; }
  const std::vector<double>& eta() const noexcept { return eta_; }
  // P(Y = 1) = sum_i mass_i * eta_i.
  double p_y1() const noexcept { return p_y1_; }

  // CSV layout: header x_1,...,x_d,mass,eta then one row per support point.
  void write_csv(std::ostream& out) const;
  static DiscreteDistribution read_csv(std::istream& in);
  static DiscreteDistribution read_csv_file(const std::filesystem::path& path);

 private:
  std::vector<double> points_;
  std::size_t dim_;
  std::vector<double> mass_;
  std::vector<double> eta_;
  double p_y1_;
};

using Predicate = std::function<int(std::span<const double>)>;
using Bits = std::vector<std::uint8_t>;

// A decision rule x -> {0, 1}: either a bit per support point of a specific
// distribution, or a predicate evaluated pointwise.
class ClassifierFn {
 public:
  static ClassifierFn from_bits(Bits bits);
  static ClassifierFn from_predicate(Predicate pred);

  // Decisions on the support of `dist`. Throws ContractViolation if the
  // bit-vector length does not match or any output is not 0/1.
  Bits on_support(const DiscreteDistribution& dist) const;

 private:
  explicit ClassifierFn(std::variant<Bits, Predicate> rep) : rep_(std::move(rep)) {}
  std::variant<Bits, Predicate> rep_;
};

double population_fbeta(const DiscreteDistribution& dist, const ClassifierFn& g,
                        const FBetaParams& params);
double population_fbeta(const DiscreteDistribution& dist, std::span<const std::uint8_t> bits,
                        const FBetaParams& params);

// Value of b^2 theta P(Y=1) - E(eta(X) - theta)_+ ; strictly increasing in theta.
double threshold_residual(const DiscreteDistribution& dist, double theta, const FBetaParams& params);

// Unique root theta* of the map above, in [0, 1/(1+b^2)]. Throws DomainError
// when P(Y=1) = 0.
Threshold bayes_threshold(const DiscreteDistribution& dist, const FBetaParams& params);

// 1{eta_i > theta*} over the support.
Bits bayes_classifier(const DiscreteDistribution& dist, const FBetaParams& params);

enum class ExcessMode { direct, identity };

// theta*, the Bayes bits and their score; computed once and reused when many
// classifiers are compared against the same distribution.
struct BayesReference {
  Threshold theta;
  Bits bits;
  double score = 0.0;  // normalized F_b of `bits`

  static BayesReference compute(const DiscreteDistribution& dist, const FBetaParams& params);
};

// Excess score F_b(g*) - F_b(g). `direct` subtracts the two scores;
// `identity` evaluates E|eta - theta*| 1{g* != g} / (b^2 P(Y=1) + P(g=1)).
double excess_fbeta(const DiscreteDistribution& dist, const ClassifierFn& g,
                    const FBetaParams& params, ExcessMode mode);
double excess_fbeta(const DiscreteDistribution& dist, const BayesReference& ref,
                    std::span<const std::uint8_t> bits, const FBetaParams& params,
                    ExcessMode mode);

}  // namespace fscore
