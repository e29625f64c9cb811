// SPDX-License-Identifier: Apache-2.0
#include "fscore/threshold.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "detail/root_solve.hpp"
#include "fscore/csv.hpp"
#include "fscore/errors.hpp"

namespace fscore {

void ScoreSample::validate() const {
  if (values.empty()) throw ArgumentError("score sample is empty");
  for (double v : values)
    if (!(v >= 0.0 && v <= 1.0)) throw ArgumentError("scores must lie in [0,1]");
  if (!weights.empty()) {
    if (weights.size() != values.size())
      throw ArgumentError("score weights and values differ in length");
    double total = 0.0;
    for (double w : weights) {
      if (!(w >= 0.0) || !std::isfinite(w)) throw ArgumentError("score weights must be >= 0");
      total += w;
    }
    if (!(total > 0.0)) throw ArgumentError("score weights sum to zero");
  }
}

double ScoreSample::total_weight() const {
  if (weights.empty()) return static_cast<double>(values.size());
  long double t = 0.0L;
  for (double w : weights) t += w;
  return static_cast<double>(t);
}

double ScoreSample::weighted_mean() const {
  long double s = 0.0L;
  for (std::size_t i = 0; i < values.size(); ++i)
    s += (weights.empty() ? 1.0L : weights[i]) * values[i];
  return static_cast<double>(s / total_weight());
}

ScoreSample ScoreSample::read_csv(std::istream& in) {
  const csv::Table t = csv::read(in);
  ScoreSample s;
  for (const auto& row : t.rows) {
    if (row.size() != 1) throw IoError("score csv must have exactly one column");
    s.values.push_back(row[0]);
  }
  s.validate();
  return s;
}

ScoreSample ScoreSample::read_csv_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  return read_csv(in);
}

double default_tolerance(std::size_t n_source, std::optional<double> beta,
                         std::optional<std::size_t> dim) {
  if (n_source == 0 || !beta || !dim || *beta <= 0.0 || *dim == 0) return 1e-10;
  const double b = *beta;
  return std::pow(static_cast<double>(n_source), -b / (2.0 * b + static_cast<double>(*dim)));
}

double empirical_threshold_residual(const ScoreSample& s, double theta, const FBetaParams& params) {
  return detail::raw_residual(s.values, s.weights, params.b2(), theta) / s.total_weight();
}

ThresholdFit empirical_threshold(const ScoreSample& s, const FBetaParams& params, double tol,
                                 SolveMethod method) {
  if (!(tol > 0.0)) throw ArgumentError("threshold tolerance must be positive");
  params.validate();
  s.validate();
  ThresholdFit fit;
  if (s.weighted_mean() == 0.0) {
    fit.degenerate_zero = true;
    return fit;
  }
  auto residual = [&](double t) { return empirical_threshold_residual(s, t, params); };
  double theta = 0.0;
  if (method == SolveMethod::exact) {
    theta = detail::max_prefix_root(s.values, s.weights, params.b2());
  }
  if (method == SolveMethod::bisection || std::fabs(residual(theta)) >= tol) {
    double lo = 0.0;
    double hi = params.max_threshold();
    if (residual(lo) > 0.0 || residual(hi) < 0.0)
      throw NumericError("threshold equation is not bracketed by [0, 1/(1+b^2)]");
    for (int it = 0; it < 200; ++it) {
      theta = 0.5 * (lo + hi);
      const double r = residual(theta);
      if (std::fabs(r) < tol || hi - lo < 1e-16) break;
      if (r < 0.0)
        lo = theta;
      else
        hi = theta;
    }
  }
  fit.theta = Threshold{theta};
  fit.residual = std::fabs(residual(theta));
  return fit;
}

DiscreteEtaLaw DiscreteEtaLaw::from(const DiscreteDistribution& dist) {
  return DiscreteEtaLaw{dist.eta(), dist.mass()};
}

double DiscreteEtaLaw::cdf(double t) const {
  long double c = 0.0L;
  for (std::size_t i = 0; i < values.size(); ++i)
    if (values[i] <= t) c += masses[i];
  return static_cast<double>(c);
}

namespace {

// Sorted (value, weight) pairs with weights normalized to sum to one.
std::vector<std::pair<double, double>> normalized_atoms(const std::vector<double>& values,
                                                        const std::vector<double>& weights) {
  std::vector<std::pair<double, double>> atoms(values.size());
  long double total = 0.0L;
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double w = weights.empty() ? 1.0 : weights[i];
    atoms[i] = {values[i], w};
    total += w;
  }
  for (auto& a : atoms) a.second = static_cast<double>(a.second / total);
  std::sort(atoms.begin(), atoms.end());
  return atoms;
}

void check_bound_args(double p_y1, double b) {
  if (!(p_y1 > 0.0)) throw DomainError("cdf gap bound needs P(Y=1) > 0");
  if (!(b > 0.0)) throw ArgumentError("F_b parameter b must be positive");
}

}  // namespace

double cdf_gap_bound(const DiscreteEtaLaw& law, const ScoreSample& s, double p_y1, double b) {
  check_bound_args(p_y1, b);
  s.validate();
  if (law.values.size() != law.masses.size()) throw ArgumentError("eta law lengths differ");
  const auto truth = normalized_atoms(law.values, law.masses);
  const auto emp = normalized_atoms(s.values, s.weights);

  std::vector<double> cuts{0.0, 1.0};
  for (const auto& a : truth) cuts.push_back(std::clamp(a.first, 0.0, 1.0));
  for (const auto& a : emp) cuts.push_back(a.first);
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

  // Both CDFs are right-continuous step functions, constant on [cuts[i], cuts[i+1]).
  long double integral = 0.0L;
  long double f_true = 0.0L;
  long double f_emp = 0.0L;
  std::size_t it = 0, ie = 0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    while (it < truth.size() && truth[it].first <= cuts[i]) f_true += truth[it++].second;
    while (ie < emp.size() && emp[ie].first <= cuts[i]) f_emp += emp[ie++].second;
    integral += std::fabs(f_true - f_emp) * (cuts[i + 1] - cuts[i]);
  }
  return static_cast<double>(integral) / (b * b * p_y1);
}

double cdf_gap_bound(const std::function<double(double)>& true_cdf, const ScoreSample& s,
                     double p_y1, double b, double tol) {
  check_bound_args(p_y1, b);
  s.validate();
  const auto emp = normalized_atoms(s.values, s.weights);
  std::vector<double> cuts{0.0, 1.0};
  for (const auto& a : emp) cuts.push_back(a.first);
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

  using Quad = boost::math::quadrature::gauss_kronrod<double, 15>;
  long double integral = 0.0L;
  long double f_emp = 0.0L;
  std::size_t ie = 0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    while (ie < emp.size() && emp[ie].first <= cuts[i]) f_emp += emp[ie++].second;
    const double level = static_cast<double>(f_emp);
    auto gap = [&](double t) { return std::fabs(true_cdf(t) - level); };
    integral += Quad::integrate(gap, cuts[i], cuts[i + 1], 15, tol);
  }
  return static_cast<double>(integral) / (b * b * p_y1);
}

}  // namespace fscore
