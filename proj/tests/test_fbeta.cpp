#include <cmath>
#include <sstream>

#include "doctest.h"
#include "fscore/errors.hpp"
#include "fscore/fbeta.hpp"
#include "support.hpp"

using namespace fscore;

namespace {

DiscreteDistribution two_point(double m0, double e0, double e1) {
  return DiscreteDistribution({0.0, 1.0}, 1, {m0, 1.0 - m0}, {e0, e1});
}

}  // namespace

TEST_CASE("constant eta one half has threshold one third") {
  const DiscreteDistribution d({0.0, 1.0, 2.0}, 1, {0.2, 0.3, 0.5}, {0.5, 0.5, 0.5});
  CHECK(bayes_threshold(d, {}).value == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
  const Bits g = bayes_classifier(d, {});
  CHECK(g == Bits{1, 1, 1});
  CHECK(population_fbeta(d, g, {}) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("uniform eta grid threshold matches the quadratic root") {
  const auto d = testing::uniform_eta_grid(1'000'000);
  CHECK(std::abs(bayes_threshold(d, {}).value - (3.0 - std::sqrt(5.0)) / 2.0) < 1e-4);
}

TEST_CASE("two point example") {
  const auto d = two_point(0.5, 0.9, 0.1);
  CHECK(population_fbeta(d, Bits{1, 0}, {}) == doctest::Approx(0.45));
  CHECK(bayes_classifier(d, {}) == Bits{1, 0});
  CHECK(bayes_threshold(d, {}).value == doctest::Approx(0.45));
}

TEST_CASE("single certain point") {
  const DiscreteDistribution d({0.0}, 1, {1.0}, {1.0});
  CHECK(bayes_threshold(d, {}).value == doctest::Approx(0.5));
  CHECK(population_fbeta(d, Bits{1}, {}) == doctest::Approx(0.5));
  CHECK(population_fbeta(d, Bits{1}, {1.0, false}) == doctest::Approx(1.0));
}

TEST_CASE("score at the Bayes rule equals theta star") {
  Rng rng(11);
  for (int t = 0; t < 300; ++t) {
    const auto d = testing::random_discrete(rng, 1 + rng.below(15));
    const double b = std::exp(2.0 * rng.uniform() - 1.0);
    const FBetaParams p{b, true};
    const double theta = bayes_threshold(d, p).value;
    CHECK(theta == doctest::Approx(testing::bisect_threshold(d, b)).epsilon(1e-9));
    CHECK(std::abs(threshold_residual(d, theta, p)) < 1e-12);
    CHECK(testing::direct_score(d, bayes_classifier(d, p), b) == doctest::Approx(theta).epsilon(1e-10));
    CHECK(theta >= 0.0);
    CHECK(theta <= p.max_threshold());
  }
}

TEST_CASE("threshold residual is strictly increasing") {
  Rng rng(3);
  const auto d = testing::random_discrete(rng, 8);
  double prev = threshold_residual(d, 0.0, {});
  for (int i = 1; i <= 100; ++i) {
    const double cur = threshold_residual(d, i / 200.0, {});
    CHECK(cur > prev);
    prev = cur;
  }
}

TEST_CASE("unnormalized scores scale by one plus b squared") {
  Rng rng(5);
  const auto d = testing::random_discrete(rng, 6);
  const Bits g{1, 0, 1, 1, 0, 0};
  for (double b : {0.5, 1.0, 2.0}) {
    const double n = population_fbeta(d, g, {b, true});
    CHECK(population_fbeta(d, g, {b, false}) == doctest::Approx((1 + b * b) * n));
    CHECK(n <= 1.0 / (1.0 + b * b) + 1e-15);
  }
}

TEST_CASE("a point exactly at theta star carries no excess") {
  // With eta = (th, 1/2) and equal masses, th solves th^2 + 1.5 th - 0.5 = 0
  // and is then the optimal threshold itself.
  const double th = (-1.5 + std::sqrt(2.25 + 2.0)) / 2.0;
  const DiscreteDistribution tie({0.0, 1.0}, 1, {0.5, 0.5}, {th, 0.5});
  CHECK(bayes_threshold(tie, {}).value == doctest::Approx(th).epsilon(1e-12));
  const Bits g = bayes_classifier(tie, {});
  CHECK(g[1] == 1);
  Bits flipped = g;
  flipped[0] = 1 - g[0];
  CHECK(std::abs(excess_fbeta(tie, ClassifierFn::from_bits(flipped), {}, ExcessMode::direct)) < 1e-12);
  CHECK(excess_fbeta(tie, ClassifierFn::from_bits(flipped), {}, ExcessMode::identity) < 1e-12);
}

TEST_CASE("excess modes agree and are nonnegative") {
  Rng rng(21);
  for (int t = 0; t < 300; ++t) {
    const auto d = testing::random_discrete(rng, 1 + rng.below(12));
    const FBetaParams p{std::exp(2.0 * rng.uniform() - 1.0), true};
    Bits g(d.size());
    for (auto& v : g) v = rng.bernoulli(0.5);
    const double direct = excess_fbeta(d, ClassifierFn::from_bits(g), p, ExcessMode::direct);
    const double ident = excess_fbeta(d, ClassifierFn::from_bits(g), p, ExcessMode::identity);
    CHECK(std::abs(direct - ident) < 1e-12);
    CHECK(ident >= 0.0);
  }
}

TEST_CASE("excess of the Bayes rule is zero") {
  Rng rng(8);
  const auto d = testing::random_discrete(rng, 9);
  const auto ref = BayesReference::compute(d, {});
  CHECK(excess_fbeta(d, ref, ref.bits, {}, ExcessMode::identity) == 0.0);
  CHECK(std::abs(excess_fbeta(d, ref, ref.bits, {}, ExcessMode::direct)) < 1e-15);
}

TEST_CASE("support permutation leaves the threshold unchanged") {
  Rng rng(9);
  const auto d = testing::random_discrete(rng, 10);
  std::vector<double> pts(d.points().rbegin(), d.points().rend());
  std::vector<double> mass(d.mass().rbegin(), d.mass().rend());
  std::vector<double> eta(d.eta().rbegin(), d.eta().rend());
  const DiscreteDistribution r(pts, 1, mass, eta);
  CHECK(bayes_threshold(r, {}).value == doctest::Approx(bayes_threshold(d, {}).value).epsilon(1e-14));
}

TEST_CASE("duplicated atoms with split mass give the same threshold") {
  const auto d = two_point(0.3, 0.8, 0.2);
  const DiscreteDistribution split({0.0, 0.0, 1.0}, 1, {0.1, 0.2, 0.7}, {0.8, 0.8, 0.2});
  CHECK(bayes_threshold(split, {}).value == doctest::Approx(bayes_threshold(d, {}).value).epsilon(1e-14));
}

TEST_CASE("predicate classifiers evaluate on the support") {
  const DiscreteDistribution d({0.1, 0.6, 0.9}, 1, {0.3, 0.3, 0.4}, {0.2, 0.6, 0.9});
  const auto g = ClassifierFn::from_predicate([](std::span<const double> x) { return x[0] > 0.5 ? 1 : 0; });
  CHECK(g.on_support(d) == Bits{0, 1, 1});
  const auto bad = ClassifierFn::from_predicate([](std::span<const double>) { return 2; });
  CHECK_THROWS_AS(bad.on_support(d), ContractViolation);
  CHECK_THROWS_AS(ClassifierFn::from_bits({1, 0}).on_support(d), ContractViolation);
}

TEST_CASE("construction errors") {
  CHECK_THROWS_AS(DiscreteDistribution({0.0, 1.0}, 1, {0.5, 0.6}, {0.1, 0.1}), ArgumentError);
  CHECK_THROWS_AS(DiscreteDistribution({0.0}, 1, {1.0}, {1.5}), ArgumentError);
  CHECK_THROWS_AS(DiscreteDistribution({0.0}, 1, {1.0}, {0.0}), DomainError);
  CHECK_THROWS_AS(FBetaParams({0.0, true}).validate(), ArgumentError);
  CHECK_THROWS_AS(FBetaParams({-1.0, true}).validate(), ArgumentError);
}

TEST_CASE("distribution csv round trip") {
  Rng rng(4);
  const auto d = testing::random_discrete(rng, 7);
  std::stringstream ss;
  d.write_csv(ss);
  const auto back = DiscreteDistribution::read_csv(ss);
  CHECK(back.points() == d.points());
  CHECK(back.mass() == d.mass());
  CHECK(back.eta() == d.eta());
}
