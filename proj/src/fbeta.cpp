// SPDX-License-Identifier: Apache-2.0
#include "fscore/fbeta.hpp"

#include <cmath>
#include <fstream>
#include <ostream>
#include <string>

#include "detail/root_solve.hpp"
#include "fscore/csv.hpp"
#include "fscore/errors.hpp"

namespace fscore {

void FBetaParams::validate() const {
  if (!(std::isfinite(b) && b > 0.0)) throw ArgumentError("F_b parameter b must be positive");
}

DiscreteDistribution::DiscreteDistribution(std::vector<double> points, std::size_t dim,
                                           std::vector<double> mass, std::vector<double> eta)
    : points_(std::move(points)), dim_(dim), mass_(std::move(mass)), eta_(std::move(eta)) {
  if (dim_ == 0) throw ArgumentError("distribution dimension must be positive");
  if (mass_.empty()) throw ArgumentError("distribution needs at least one support point");
  if (eta_.size() != mass_.size() || points_.size() != mass_.size() * dim_)
    throw ArgumentError("support, mass and eta lengths differ");
  long double total = 0.0L;
  long double p = 0.0L;
  for (std::size_t i = 0; i < mass_.size(); ++i) {
    if (!(mass_[i] >= 0.0) || !std::isfinite(mass_[i]))
      throw ArgumentError("masses must be nonnegative");
    if (!(eta_[i] >= 0.0 && eta_[i] <= 1.0)) throw ArgumentError("eta values must lie in [0,1]");
    total += mass_[i];
    p += static_cast<long double>(mass_[i]) * eta_[i];
  }
  if (std::fabs(static_cast<double>(total) - 1.0) > 1e-12)
    throw ArgumentError("masses must sum to 1 (got " + csv::format_double(double(total)) + ")");
  p_y1_ = static_cast<double>(p);
  if (!(p_y1_ > 0.0)) throw DomainError("P(Y=1) must be positive");
}

void DiscreteDistribution::write_csv(std::ostream& out) const {
  for (std::size_t j = 0; j < dim_; ++j) out << "x_" << (j + 1) << ',';
  out << "mass,eta\n";
  for (std::size_t i = 0; i < size(); ++i) {
    for (double x : point(i)) out << csv::format_double(x) << ',';
    out << csv::format_double(mass_[i]) << ',' << csv::format_double(eta_[i]) << '\n';
  }
}

DiscreteDistribution DiscreteDistribution::read_csv(std::istream& in) {
  const csv::Table t = csv::read(in);
  if (t.rows.empty()) throw IoError("distribution csv has no rows");
  const std::size_t cols = t.rows.front().size();
  if (cols < 3) throw IoError("distribution csv needs x_1..x_d,mass,eta columns");
  const std::size_t dim = cols - 2;
  std::vector<double> pts, mass, eta;
  pts.reserve(t.rows.size() * dim);
  for (const auto& row : t.rows) {
    pts.insert(pts.end(), row.begin(), row.begin() + static_cast<std::ptrdiff_t>(dim));
    mass.push_back(row[dim]);
    eta.push_back(row[dim + 1]);
  }
  return DiscreteDistribution(std::move(pts), dim, std::move(mass), std::move(eta));
}

DiscreteDistribution DiscreteDistribution::read_csv_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  return read_csv(in);
}

ClassifierFn ClassifierFn::from_bits(Bits bits) { return ClassifierFn(std::move(bits)); }

ClassifierFn ClassifierFn::from_predicate(Predicate pred) {
  if (!pred) throw ArgumentError("empty classifier predicate");
  return ClassifierFn(std::move(pred));
}

Bits ClassifierFn::on_support(const DiscreteDistribution& dist) const {
  if (const auto* bits = std::get_if<Bits>(&rep_)) {
    if (bits->size() != dist.size())
      throw ContractViolation("classifier bit-vector length differs from support size");
    for (auto b : *bits)
      if (b > 1) throw ContractViolation("classifier output is not binary");
    return *bits;
  }
  const auto& pred = std::get<Predicate>(rep_);
  Bits out(dist.size());
  for (std::size_t i = 0; i < dist.size(); ++i) {
    const int v = pred(dist.point(i));
    if (v != 0 && v != 1) throw ContractViolation("classifier output is not binary");
    out[i] = static_cast<std::uint8_t>(v);
  }
  return out;
}

namespace {

void check_bits(const DiscreteDistribution& dist, std::span<const std::uint8_t> bits) {
  if (bits.size() != dist.size())
    throw ContractViolation("classifier bit-vector length differs from support size");
  for (auto b : bits)
    if (b > 1) throw ContractViolation("classifier output is not binary");
}

double normalized_score(const DiscreteDistribution& dist, std::span<const std::uint8_t> bits,
                        double b2) {
  long double num = 0.0L;
  long double pos = 0.0L;
  const auto& m = dist.mass();
  const auto& e = dist.eta();
  for (std::size_t i = 0; i < bits.size(); ++i) {
    if (!bits[i]) continue;
    num += static_cast<long double>(m[i]) * e[i];
    pos += m[i];
  }
  return static_cast<double>(num / (b2 * static_cast<long double>(dist.p_y1()) + pos));
}

}  // namespace

double population_fbeta(const DiscreteDistribution& dist, std::span<const std::uint8_t> bits,
                        const FBetaParams& params) {
  params.validate();
  check_bits(dist, bits);
  return normalized_score(dist, bits, params.b2()) * params.scale();
}

double population_fbeta(const DiscreteDistribution& dist, const ClassifierFn& g,
                        const FBetaParams& params) {
  const Bits bits = g.on_support(dist);
  return population_fbeta(dist, bits, params);
}

double threshold_residual(const DiscreteDistribution& dist, double theta,
                          const FBetaParams& params) {
  return detail::raw_residual(dist.eta(), dist.mass(), params.b2(), theta);
}

Threshold bayes_threshold(const DiscreteDistribution& dist, const FBetaParams& params) {
  params.validate();
  if (!(dist.p_y1() > 0.0)) throw DomainError("optimal threshold undefined when P(Y=1) = 0");
  const double b2 = params.b2();
  double theta = detail::max_prefix_root(dist.eta(), dist.mass(), b2);
  if (std::fabs(threshold_residual(dist, theta, params)) > 1e-10) {
    theta = detail::bisect_increasing(
        [&](double t) { return threshold_residual(dist, t, params); }, 0.0,
        params.max_threshold(), 1e-12);
  }
  return Threshold{theta};
}

Bits bayes_classifier(const DiscreteDistribution& dist, const FBetaParams& params) {
  const double theta = bayes_threshold(dist, params).value;
  Bits bits(dist.size());
  for (std::size_t i = 0; i < dist.size(); ++i) bits[i] = dist.eta()[i] > theta ? 1 : 0;
  return bits;
}

BayesReference BayesReference::compute(const DiscreteDistribution& dist,
                                       const FBetaParams& params) {
  BayesReference ref;
  ref.theta = bayes_threshold(dist, params);
  ref.bits.resize(dist.size());
  for (std::size_t i = 0; i < dist.size(); ++i)
    ref.bits[i] = dist.eta()[i] > ref.theta.value ? 1 : 0;
  ref.score = normalized_score(dist, ref.bits, params.b2());
  return ref;
}

double excess_fbeta(const DiscreteDistribution& dist, const BayesReference& ref,
                    std::span<const std::uint8_t> bits, const FBetaParams& params,
                    ExcessMode mode) {
  params.validate();
  check_bits(dist, bits);
  const double b2 = params.b2();
  if (mode == ExcessMode::direct)
    return (ref.score - normalized_score(dist, bits, b2)) * params.scale();
  long double num = 0.0L;
  long double pos = 0.0L;
  const auto& m = dist.mass();
  const auto& e = dist.eta();
  for (std::size_t i = 0; i < bits.size(); ++i) {
    if (bits[i]) pos += m[i];
    if (bits[i] != ref.bits[i])
      num += static_cast<long double>(m[i]) * std::fabs(e[i] - ref.theta.value);
  }
  return static_cast<double>(num / (b2 * static_cast<long double>(dist.p_y1()) + pos)) *
         params.scale();
}

double excess_fbeta(const DiscreteDistribution& dist, const ClassifierFn& g,
                    const FBetaParams& params, ExcessMode mode) {
  const Bits bits = g.on_support(dist);
  const BayesReference ref = BayesReference::compute(dist, params);
  return excess_fbeta(dist, ref, bits, params, mode);
}

}  // namespace fscore
