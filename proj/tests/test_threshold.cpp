#include <algorithm>
#include <cmath>
#include <sstream>

#include "doctest.h"
#include "fscore/errors.hpp"
#include "fscore/threshold.hpp"
#include "support.hpp"

using namespace fscore;

namespace {

ScoreSample sample_of(std::vector<double> v) {
  ScoreSample s;
  s.values = std::move(v);
  return s;
}

// Root of b^2 t mean(v) - mean((v - t)_+) by bisection on the raw sample.
double bisect_empirical(const std::vector<double>& v, double b) {
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  double lo = 0.0, hi = 1.0 / (1.0 + b * b);
  for (int it = 0; it < 200; ++it) {
    const double t = 0.5 * (lo + hi);
    double plus = 0.0;
    for (double x : v) plus += std::max(0.0, x - t);
    plus /= static_cast<double>(v.size());
    (b * b * t * mean - plus >= 0.0 ? hi : lo) = t;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

TEST_CASE("three value hand solve") {
  const auto fit = empirical_threshold(sample_of({0.2, 0.6, 1.0}), {}, 1e-12);
  CHECK(fit.theta.value == doctest::Approx(8.0 / 19.0).epsilon(1e-14));
  CHECK(fit.residual < 1e-12);
  CHECK_FALSE(fit.degenerate_zero);
}

TEST_CASE("constant one half sample gives one third") {
  const auto fit = empirical_threshold(sample_of(std::vector<double>(17, 0.5)), {}, 1e-12);
  CHECK(fit.theta.value == doctest::Approx(1.0 / 3.0).epsilon(1e-14));
}

TEST_CASE("all zero sample is flagged and returns zero") {
  const auto fit = empirical_threshold(sample_of({0.0, 0.0, 0.0}), {}, 1e-12);
  CHECK(fit.theta.value == 0.0);
  CHECK(fit.degenerate_zero);
}

TEST_CASE("exact and bisection solvers agree with an independent bisection") {
  Rng rng(17);
  for (int t = 0; t < 200; ++t) {
    const std::size_t n = 1 + rng.below(60);
    std::vector<double> v(n);
    for (auto& x : v) x = rng.uniform();
    const double b = std::exp(2.0 * rng.uniform() - 1.0);
    const FBetaParams p{b, true};
    const double ref = bisect_empirical(v, b);
    const double exact = empirical_threshold(sample_of(v), p, 1e-12).theta.value;
    const double bis = empirical_threshold(sample_of(v), p, 1e-12, SolveMethod::bisection).theta.value;
    CHECK(exact == doctest::Approx(ref).epsilon(1e-10));
    CHECK(std::abs(bis - exact) < 1e-10);
    CHECK(exact >= 0.0);
    CHECK(exact <= p.max_threshold());
    CHECK(std::abs(empirical_threshold_residual(sample_of(v), exact, p)) < 1e-12);
  }
}

TEST_CASE("permutation and replication invariance") {
  Rng rng(29);
  std::vector<double> v(40);
  for (auto& x : v) x = rng.uniform();
  const double base = empirical_threshold(sample_of(v), {}, 1e-12).theta.value;

  std::vector<double> r(v.rbegin(), v.rend());
  std::rotate(r.begin(), r.begin() + 7, r.end());
  CHECK(empirical_threshold(sample_of(r), {}, 1e-12).theta.value == doctest::Approx(base).epsilon(1e-14));

  std::vector<double> twice = v;
  twice.insert(twice.end(), v.begin(), v.end());
  CHECK(empirical_threshold(sample_of(twice), {}, 1e-12).theta.value == doctest::Approx(base).epsilon(1e-14));

  ScoreSample weighted = sample_of(v);
  weighted.weights.assign(v.size(), 3.0);
  CHECK(empirical_threshold(weighted, {}, 1e-12).theta.value == doctest::Approx(base).epsilon(1e-14));
}

TEST_CASE("integer weights match repeated values") {
  const std::vector<double> v{0.1, 0.4, 0.9};
  ScoreSample w = sample_of(v);
  w.weights = {2.0, 1.0, 3.0};
  const auto expanded = sample_of({0.1, 0.1, 0.4, 0.9, 0.9, 0.9});
  CHECK(empirical_threshold(w, {}, 1e-12).theta.value ==
        doctest::Approx(empirical_threshold(expanded, {}, 1e-12).theta.value).epsilon(1e-14));
}

TEST_CASE("input validation") {
  CHECK_THROWS_AS(empirical_threshold(sample_of({0.5}), {}, 0.0), ArgumentError);
  CHECK_THROWS_AS(empirical_threshold(sample_of({}), {}, 1e-9), ArgumentError);
  CHECK_THROWS_AS(empirical_threshold(sample_of({1.2}), {}, 1e-9), ArgumentError);
  ScoreSample bad = sample_of({0.5, 0.2});
  bad.weights = {1.0};
  CHECK_THROWS_AS(empirical_threshold(bad, {}, 1e-9), ArgumentError);
}

TEST_CASE("default tolerance") {
  CHECK(default_tolerance(1000, 1.0, 1) == doctest::Approx(std::pow(1000.0, -1.0 / 3.0)));
  CHECK(default_tolerance(1000, std::nullopt, std::nullopt) == 1e-10);
}

TEST_CASE("score csv reading") {
  std::istringstream in("score\n0.25\n0.75\n");
  const auto s = ScoreSample::read_csv(in);
  CHECK(s.values == std::vector<double>{0.25, 0.75});
}

TEST_CASE("gap bound is zero for matching CDFs") {
  const DiscreteDistribution d({0.0, 1.0, 2.0, 3.0}, 1, {0.25, 0.25, 0.25, 0.25}, {0.1, 0.4, 0.4, 0.8});
  const auto s = sample_of({0.1, 0.4, 0.8, 0.4});
  CHECK(cdf_gap_bound(DiscreteEtaLaw::from(d), s, d.p_y1()) == doctest::Approx(0.0));
}

TEST_CASE("gap bound for a point mass against a three point sample") {
  const DiscreteDistribution d({0.0}, 1, {1.0}, {0.5});
  const auto s = sample_of({0.5, 0.5, 0.7});
  const double expect = (0.2 / 3.0) / 0.5;
  CHECK(cdf_gap_bound(DiscreteEtaLaw::from(d), s, 0.5) == doctest::Approx(expect).epsilon(1e-12));
  const auto cdf = [](double t) { return t >= 0.5 ? 1.0 : 0.0; };
  CHECK(cdf_gap_bound(cdf, s, 0.5) == doctest::Approx(expect).epsilon(1e-7));
  CHECK(cdf_gap_bound(DiscreteEtaLaw::from(d), s, 0.5, 2.0) == doctest::Approx(expect / 4.0).epsilon(1e-12));
  CHECK_THROWS_AS(cdf_gap_bound(DiscreteEtaLaw::from(d), s, 0.0), DomainError);
}

TEST_CASE("continuous CDF overload agrees with a fine discretization") {
  // eta(X) ~ U[0,1]: the exact law against a discretized copy.
  const auto grid = testing::uniform_eta_grid(20000);
  const auto s = sample_of({0.05, 0.3, 0.31, 0.62, 0.9});
  const double a = cdf_gap_bound([](double t) { return std::clamp(t, 0.0, 1.0); }, s, 0.5);
  const double b = cdf_gap_bound(DiscreteEtaLaw::from(grid), s, grid.p_y1());
  CHECK(a == doctest::Approx(b).epsilon(1e-4));
}

TEST_CASE("gap bound dominates the threshold error on perturbed samples") {
  Rng rng(101);
  for (int t = 0; t < 500; ++t) {
    const auto d = testing::random_discrete(rng, 6);
    const double b = std::exp(2.0 * rng.uniform() - 1.0);
    const FBetaParams p{b, true};
    const double theta = bayes_threshold(d, p).value;
    const std::size_t n = 5 + rng.below(300);
    const double noise = 0.2 * rng.uniform();
    ScoreSample s;
    for (std::size_t i = 0; i < n; ++i) {
      const auto j = rng.below(d.size());
      s.values.push_back(std::clamp(d.eta()[j] + noise * (2.0 * rng.uniform() - 1.0), 0.0, 1.0));
    }
    if (s.weighted_mean() == 0.0) continue;
    const double err = std::abs(empirical_threshold(s, p, 1e-12).theta.value - theta);
    CHECK(cdf_gap_bound(DiscreteEtaLaw::from(d), s, d.p_y1(), b) >= err - 1e-10);
  }
}
