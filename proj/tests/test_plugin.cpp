#include <algorithm>
#include <cmath>
#include <filesystem>
#include <sstream>

#include "doctest.h"
#include "fscore/errors.hpp"
#include "fscore/plugin.hpp"
#include "fscore/random.hpp"
#include "fscore/synthetic.hpp"

using namespace fscore;

namespace {

// X uniform on {0, 1}; eta(0) = e0, eta(1) = e1.
LabeledDataset two_point_labeled(Rng& rng, std::size_t n, double e0, double e1) {
  std::vector<double> x(n);
  std::vector<std::uint8_t> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = rng.bernoulli(0.5) ? 1.0 : 0.0;
    y[i] = rng.bernoulli(x[i] == 0.0 ? e0 : e1) ? 1 : 0;
  }
  return LabeledDataset(x, 1, y);
}

UnlabeledDataset two_point_unlabeled(Rng& rng, std::size_t N) {
  std::vector<double> x(N);
  for (auto& v : x) v = rng.bernoulli(0.5) ? 1.0 : 0.0;
  return UnlabeledDataset(x, 1);
}

EstimatorConfig knn(std::size_t k) {
  EstimatorConfig c;
  c.k = k;
  return c;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const auto m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

}  // namespace

TEST_CASE("all positive labels give the maximal threshold") {
  const LabeledDataset d({0.1, 0.4, 0.7, 0.9}, 1, {1, 1, 1, 1});
  const UnlabeledDataset u({0.2, 0.5, 0.8}, 1);
  const auto clf = train_plugin(d, u, knn(4), {});
  CHECK(clf.theta_hat().value == doctest::Approx(0.5).epsilon(1e-12));
  for (double q : {0.0, 0.3, 1.0}) CHECK(clf.predict(std::vector<double>{q}) == 1);
}

TEST_CASE("two point law recovers its threshold") {
  double total = 0.0;
  for (int s = 0; s < 50; ++s) {
    Rng rng(derive_seed(3, s));
    const std::size_t n = 4000;
    const auto d = two_point_labeled(rng, n, 0.9, 0.1);
    const auto u = two_point_unlabeled(rng, n);
    const auto k = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(n))));
    const auto clf = train_plugin(d, u, knn(k), {});
    total += std::abs(clf.theta_hat().value - 0.45);
    CHECK(clf.predict(std::vector<double>{0.0}) == 1);
    CHECK(clf.predict(std::vector<double>{1.0}) == 0);
  }
  CHECK(total / 50.0 < 0.05);
}

TEST_CASE("short unlabeled sample is augmented with labeled features") {
  Rng rng(4);
  const auto d = two_point_labeled(rng, 200, 0.8, 0.3);
  const UnlabeledDataset none({}, 1);
  const auto clf = train_plugin(d, none, knn(15), {});
  CHECK(clf.provenance().augmented);
  CHECK(clf.provenance().n == 200);
  CHECK(clf.provenance().N == 0);
  CHECK(clf.provenance().N_used == doctest::Approx(200.0));

  const auto u = two_point_unlabeled(rng, 500);
  const auto full = train_plugin(d, u, knn(15), {});
  CHECK_FALSE(full.provenance().augmented);
  CHECK(full.provenance().N_used == doctest::Approx(500.0));
}

TEST_CASE("prediction at eta hat equal to theta hat is negative") {
  const LabeledDataset d({0.0, 1.0}, 1, {1, 0});
  const auto est = fit_knn(d, 2);  // constant 1/2
  const PluginClassifier clf(est, Threshold{0.5}, {}, {});
  CHECK(clf.predict(std::vector<double>{0.3}) == 0);
  const PluginClassifier low(est, Threshold{0.49}, {}, {});
  CHECK(low.predict(std::vector<double>{0.3}) == 1);
  CHECK_THROWS_AS(PluginClassifier(est, Threshold{0.6}, {}, {}), ContractViolation);
}

TEST_CASE("input errors") {
  const LabeledDataset d({0.0, 1.0}, 1, {1, 0});
  const UnlabeledDataset u2({0.0, 1.0}, 2);
  CHECK_THROWS_AS(train_plugin(d, u2, knn(1), {}), ArgumentError);
  const LabeledDataset neg({0.0, 1.0}, 1, {0, 0});
  CHECK_THROWS_AS(train_plugin(neg, UnlabeledDataset({0.5}, 1), knn(1), {}), TrainingDegenerate);
  const auto clf = train_plugin(d, UnlabeledDataset({0.5}, 1), knn(1), {});
  CHECK_THROWS_AS(clf.predict(std::vector<double>{0.0, 0.0}), ArgumentError);
}

TEST_CASE("excess of a trained classifier is nonnegative") {
  const auto dist = make_smooth_1d_family(1.0, 1.0, 0, {.reference_atoms = 20000});
  const auto& ref = *dist.reference;
  for (int s = 0; s < 10; ++s) {
    const auto d = sample_labeled(dist, 300, derive_seed(8, s, 0));
    const auto u = sample_unlabeled(dist, 300, derive_seed(8, s, 1));
    const auto clf = train_plugin(d, u, knn(18), {});
    const auto bits = clf.predict_batch(ref.points());
    CHECK(excess_fbeta(ref, ClassifierFn::from_bits(bits), {}, ExcessMode::direct) >= -1e-12);
  }
}

TEST_CASE("model save and load round trip") {
  Rng rng(12);
  const auto d = two_point_labeled(rng, 300, 0.7, 0.2);
  const auto u = two_point_unlabeled(rng, 400);
  EstimatorConfig cfg;
  cfg.method = EstimatorMethod::kernel;
  cfg.h = 0.3;
  const auto clf = train_plugin(d, u, cfg, {2.0, true});

  const auto dir = std::filesystem::temp_directory_path() / "fscore_test_plugin";
  std::filesystem::create_directories(dir);
  save_model(clf, dir / "model.json");
  CHECK(std::filesystem::exists(dir / "model.data.csv"));
  const auto back = load_model(dir / "model.json");
  CHECK(back.theta_hat().value == clf.theta_hat().value);
  CHECK(back.params().b == 2.0);
  CHECK(back.provenance().N == 400);

  std::vector<double> q(101);
  for (std::size_t i = 0; i < q.size(); ++i) q[i] = i / 100.0;
  CHECK(back.predict_batch(q) == clf.predict_batch(q));
  CHECK(back.eta_hat().evaluate_batch(q) == clf.eta_hat().evaluate_batch(q));

  std::ostringstream a, b;
  write_predictions(a, clf, q);
  write_predictions(b, back, q);
  CHECK(a.str() == b.str());
  CHECK(a.str().rfind("index,eta_hat,prediction\n", 0) == 0);
  std::filesystem::remove_all(dir);
}

TEST_CASE("separated law is classified without error") {
  const auto dist = make_separated_family({.reference_atoms = 20000});
  const auto& ref = *dist.reference;
  const std::size_t n = 8000;
  int zero = 0;
  const int seeds = 40;
  for (int s = 0; s < seeds; ++s) {
    const auto d = sample_labeled(dist, n, derive_seed(21, s, 0));
    const auto u = sample_unlabeled(dist, n, derive_seed(21, s, 1));
    const auto k = static_cast<std::size_t>(std::ceil(default_bandwidth(n, {1.0, 1.0}, 1).a_n));
    const auto clf = train_plugin(d, u, knn(k), {});
    const auto bits = clf.predict_batch(ref.points());
    if (excess_fbeta(ref, ClassifierFn::from_bits(bits), {}, ExcessMode::identity) == 0.0) ++zero;
  }
  CHECK(zero >= 0.95 * seeds);
}

TEST_CASE("median excess does not grow with n") {
  const auto dist = make_smooth_1d_family(1.0, 1.0, 0, {.reference_atoms = 50000});
  const auto& ref = *dist.reference;
  const auto bayes = BayesReference::compute(ref, {});
  std::vector<double> medians;
  for (std::size_t n : {500u, 2000u, 8000u}) {
    std::vector<double> ex;
    for (int s = 0; s < 30; ++s) {
      const auto d = sample_labeled(dist, n, derive_seed(31, n, s, 0));
      const auto u = sample_unlabeled(dist, n, derive_seed(31, n, s, 1));
      const auto k = static_cast<std::size_t>(std::ceil(default_bandwidth(n, {1.0, 1.0}, 1).a_n));
      const auto clf = train_plugin(d, u, knn(k), {});
      ex.push_back(excess_fbeta(ref, bayes, clf.predict_batch(ref.points()), {}, ExcessMode::identity));
    }
    medians.push_back(median(ex));
  }
  CHECK(medians[1] <= medians[0]);
  CHECK(medians[2] <= medians[1]);
}

TEST_CASE("unlabeled csv infers the dimension") {
  std::istringstream in("x1,x2\n0.1,0.2\n0.3,0.4\n");
  const auto u = UnlabeledDataset::read_csv(in);
  CHECK(u.dim() == 2);
  CHECK(u.size() == 2);
}
