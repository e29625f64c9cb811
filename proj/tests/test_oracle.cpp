#include <cmath>
#include <filesystem>

#include "doctest.h"
#include "fscore/errors.hpp"
#include "fscore/oracle.hpp"
#include "support.hpp"

using namespace fscore;

TEST_CASE("exhaustive search on small laws") {
  const DiscreteDistribution two({0.0, 1.0}, 1, {0.5, 0.5}, {0.9, 0.1});
  const auto r = brute_force_optimum(two, {});
  CHECK(r.score == doctest::Approx(0.45));
  CHECK(r.bits == Bits{1, 0});

  const DiscreteDistribution flat({0.0, 1.0, 2.0}, 1, {0.2, 0.3, 0.5}, {0.5, 0.5, 0.5});
  const auto f = brute_force_optimum(flat, {});
  CHECK(f.score == doctest::Approx(1.0 / 3.0));
  CHECK(f.bits == Bits{1, 1, 1});

  const DiscreteDistribution one({0.0}, 1, {1.0}, {1.0});
  CHECK(brute_force_optimum(one, {}).score == doctest::Approx(0.5));
  CHECK(brute_force_optimum(one, {1.0, false}).score == doctest::Approx(1.0));
}

TEST_CASE("exhaustive search agrees with the threshold rule") {
  Rng rng(55);
  for (int t = 0; t < 100; ++t) {
    const auto d = testing::random_discrete(rng, 1 + rng.below(12));
    const FBetaParams p{std::exp(2.0 * rng.uniform() - 1.0), true};
    const auto r = brute_force_optimum(d, p);
    CHECK(r.score == doctest::Approx(testing::direct_score(d, bayes_classifier(d, p), p.b)).epsilon(1e-12));
    CHECK(testing::direct_score(d, r.bits, p.b) == doctest::Approx(r.score).epsilon(1e-12));
  }
}

TEST_CASE("exhaustive search refuses large supports") {
  Rng rng(1);
  CHECK_THROWS_AS(brute_force_optimum(testing::random_discrete(rng, 21), {}), SizeError);
}

TEST_CASE("grid scan threshold") {
  const DiscreteDistribution flat({0.0}, 1, {1.0}, {0.5});
  CHECK(std::abs(scan_threshold(flat, {}, 1'000'000).value - 1.0 / 3.0) < 2e-6);
  const auto u = testing::uniform_eta_grid(100000);
  CHECK(std::abs(scan_threshold(u, {}, 100000).value - (3.0 - std::sqrt(5.0)) / 2.0) < 1e-4);
  CHECK_THROWS_AS(scan_threshold(flat, {}, 999), ArgumentError);
}

TEST_CASE("randomized suite passes on a short run") {
  const auto r = randomized_identity_suite(60, 7);
  CHECK(r.passed());
  CHECK(r.optimality_pass == 60);
  CHECK(r.identity_pass == 60);
  CHECK(r.failures.empty());
  CHECK(r.mean_threshold_error.size() == 3);
  CHECK(r.max_identity_gap < 1e-12);
}

TEST_CASE("suite is deterministic in its seed") {
  const auto a = randomized_identity_suite(20, 3);
  const auto b = randomized_identity_suite(20, 3);
  CHECK(a.mean_threshold_error == b.mean_threshold_error);
  CHECK(a.max_optimality_gap == b.max_optimality_gap);
}

TEST_CASE("failing checks leave artifacts") {
  const auto dir = std::filesystem::temp_directory_path() / "fscore_test_oracle";
  std::filesystem::remove_all(dir);
  IdentitySuiteOptions o;
  o.tolerance = -1.0;  // no comparison can pass
  o.failure_dir = dir;
  const auto r = randomized_identity_suite(3, 11, o);
  CHECK_FALSE(r.passed());
  CHECK(r.identity_pass == 0);
  CHECK(r.failures.size() >= 6);
  CHECK(std::filesystem::exists(dir / "trial_0_identity.csv"));
  CHECK(std::filesystem::exists(dir / "trial_0_identity.json"));
  const auto back = DiscreteDistribution::read_csv_file(dir / "trial_0_identity.csv");
  CHECK(back.size() >= 1);
  std::filesystem::remove_all(dir);
}

TEST_CASE("suite argument checks") {
  CHECK_THROWS_AS(randomized_identity_suite(0, 1), ArgumentError);
  IdentitySuiteOptions o;
  o.max_support = 25;
  CHECK_THROWS_AS(randomized_identity_suite(1, 1, o), ArgumentError);
}
