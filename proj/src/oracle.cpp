// SPDX-License-Identifier: Apache-2.0
#include "fscore/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "fscore/errors.hpp"
#include "fscore/random.hpp"
#include "fscore/threshold.hpp"
#include "json.hpp"

namespace fscore {

namespace {

// Residual of the threshold equation, written out independently of fbeta.cpp.
long double scan_residual(const DiscreteDistribution& dist, long double b2, long double theta) {
  long double p = 0.0L, plus = 0.0L;
  for (std::size_t i = 0; i < dist.size(); ++i) {
    const long double m = dist.mass()[i];
    const long double e = dist.eta()[i];
    p += m * e;
    if (e > theta) plus += m * (e - theta);
  }
  return b2 * theta * p - plus;
}

std::string bits_string(std::span<const std::uint8_t> bits) {
  std::string s;
  for (auto b : bits) s.push_back(b ? '1' : '0');
  return s;
}

}  // namespace

BruteForceResult brute_force_optimum(const DiscreteDistribution& dist, const FBetaParams& params) {
  params.validate();
  const std::size_t K = dist.size();
  if (K > 20) throw SizeError("exhaustive search supports at most 20 support points");
  const long double b2p = static_cast<long double>(params.b2()) * dist.p_y1();
  const std::uint32_t total = 1u << K;

  long double best = -1.0L;
  std::uint32_t best_code = 0;
  // Code v encodes the bit of support point i at position K-1-i, so codes
  // increase in lexicographic order of the bit-vectors.
  for (std::uint32_t v = 0; v < total; ++v) {
    long double tp = 0.0L, pg = 0.0L;
    for (std::size_t i = 0; i < K; ++i) {
      if ((v >> (K - 1 - i)) & 1u) {
        tp += static_cast<long double>(dist.mass()[i]) * dist.eta()[i];
        pg += dist.mass()[i];
      }
    }
    const long double score = tp / (b2p + pg);
    if (score > best + 1e-15L * std::max(best, 1e-300L)) {
      best = score;
      best_code = v;
    }
  }
  BruteForceResult r;
  r.score = static_cast<double>(best) * params.scale();
  r.bits.resize(K);
  for (std::size_t i = 0; i < K; ++i) r.bits[i] = (best_code >> (K - 1 - i)) & 1u;
  return r;
}

Threshold scan_threshold(const DiscreteDistribution& dist, const FBetaParams& params,
                         std::size_t grid_size) {
  params.validate();
  if (grid_size < 1000) throw ArgumentError("scan grid needs at least 1000 points");
  if (!(dist.p_y1() > 0.0)) throw DomainError("P(Y=1) = 0: threshold undefined");
  const long double b2 = params.b2();
  const long double top = params.max_threshold();
  const long double step = top / static_cast<long double>(grid_size);

  std::size_t i = 1;
  long double hi = step;
  for (; i <= grid_size; ++i) {
    hi = (i == grid_size) ? top : step * static_cast<long double>(i);
    if (scan_residual(dist, b2, hi) >= 0.0L) break;
  }
  if (i > grid_size) hi = top;
  if (scan_residual(dist, b2, hi) == 0.0L) return Threshold{static_cast<double>(hi)};
  long double lo = hi - step;
  if (lo < 0.0L) lo = 0.0L;
  for (int it = 0; it < 200 && hi - lo > 1e-18L; ++it) {
    const long double mid = (lo + hi) / 2.0L;
    if (scan_residual(dist, b2, mid) >= 0.0L)
      hi = mid;
    else
      lo = mid;
  }
  return Threshold{static_cast<double>((lo + hi) / 2.0L)};
}

bool IdentitySuiteReport::passed() const {
  return trials > 0 && optimality_pass == trials && identity_pass == trials &&
         scan_pass == trials && gap_bound_pass == trials && threshold_converges;
}

IdentitySuiteReport randomized_identity_suite(std::size_t trials, std::uint64_t seed,
                                              const IdentitySuiteOptions& opts) {
  if (trials == 0) throw ArgumentError("identity suite needs at least one trial");
  if (opts.max_support == 0 || opts.max_support > 20)
    throw ArgumentError("max_support must lie in [1, 20]");
  if (opts.sample_sizes.empty()) throw ArgumentError("identity suite needs sample sizes");

  IdentitySuiteReport rep;
  rep.trials = trials;
  rep.seed = seed;
  rep.mean_threshold_error.assign(opts.sample_sizes.size(), 0.0);

  for (std::size_t t = 0; t < trials; ++t) {
    Rng rng(derive_seed(seed, t));
    const std::size_t K = 1 + static_cast<std::size_t>(rng.below(opts.max_support));
    const double b = std::exp(2.0 * rng.uniform() - 1.0);
    const FBetaParams params{b, true};

    std::vector<double> mass(K), eta(K);
    double p = 0.0;
    do {
      double s = 0.0;
      for (auto& m : mass) s += (m = rng.exponential());
      for (auto& m : mass) m /= s;
      p = 0.0;
      for (std::size_t i = 0; i < K; ++i) p += mass[i] * (eta[i] = rng.uniform());
    } while (!(p > opts.min_p_y1));

    if (t % 10 == 9) {
      // Rare positives: push P(Y=1) down to twice the floor.
      const double f = 2.0 * opts.min_p_y1 / p;
      if (f < 1.0)
        for (auto& e : eta) e *= f;
    } else if (t % 10 == 4 && K >= 2) {
      // Put one eta exactly on the optimal threshold: solve
      // b^2 th (p_rest + m_0 th) = E_rest (eta - th)_+ for th and set eta_0 = th.
      double lo = 0.0, hi = 1.0;
      for (int it = 0; it < 200; ++it) {
        const double th = (lo + hi) / 2.0;
        double pr = mass[0] * th, plus = 0.0;
        for (std::size_t i = 1; i < K; ++i) {
          pr += mass[i] * eta[i];
          plus += mass[i] * std::max(0.0, eta[i] - th);
        }
        (b * b * th * pr - plus > 0.0 ? hi : lo) = th;
      }
      eta[0] = (lo + hi) / 2.0;
    }

    std::vector<double> pts(K);
    for (std::size_t i = 0; i < K; ++i) pts[i] = static_cast<double>(i);
    const DiscreteDistribution dist(pts, 1, mass, eta);

    Bits g(K);
    for (auto& v : g) v = rng.bernoulli(0.5) ? 1 : 0;

    auto fail = [&](const std::string& check, double observed) {
      TrialFailure f;
      f.trial = t;
      f.check = check;
      f.observed = observed;
      std::ostringstream os;
      dist.write_csv(os);
      f.distribution_csv = os.str();
      f.classifier = bits_string(g);
      if (!opts.failure_dir.empty()) {
        std::filesystem::create_directories(opts.failure_dir);
        const std::string stem = "trial_" + std::to_string(t) + "_" + check;
        std::ofstream(opts.failure_dir / (stem + ".csv")) << f.distribution_csv;
        nlohmann::json j{{"trial", t},     {"seed", seed},       {"check", check},
                         {"observed", observed}, {"b", b},        {"classifier", f.classifier},
                         {"distribution", stem + ".csv"}};
        std::ofstream(opts.failure_dir / (stem + ".json")) << j.dump(2) << '\n';
      }
      rep.failures.push_back(std::move(f));
    };

    // Exhaustive optimum against the threshold rule.
    const BayesReference ref = BayesReference::compute(dist, params);
    const BruteForceResult bf = brute_force_optimum(dist, params);
    const double opt_gap = std::abs(bf.score - population_fbeta(dist, ref.bits, params));
    rep.max_optimality_gap = std::max(rep.max_optimality_gap, opt_gap);
    if (opt_gap <= opts.tolerance)
      ++rep.optimality_pass;
    else
      fail("optimality", opt_gap);

    // Excess score: direct difference against the closed-form identity.
    const double direct = excess_fbeta(dist, ClassifierFn::from_bits(g), params, ExcessMode::direct);
    const double ident = excess_fbeta(dist, ClassifierFn::from_bits(g), params, ExcessMode::identity);
    const double id_gap = std::abs(direct - ident);
    rep.max_identity_gap = std::max(rep.max_identity_gap, id_gap);
    if (id_gap <= opts.tolerance)
      ++rep.identity_pass;
    else
      fail("identity", id_gap);

    const Threshold scan = scan_threshold(dist, params, opts.scan_grid);
    const double scan_gap = std::abs(scan.value - ref.theta.value);
    if (scan_gap <= 2.0 / static_cast<double>(opts.scan_grid))
      ++rep.scan_pass;
    else
      fail("scan", scan_gap);

    // Empirical threshold from true scores at growing sample sizes.
    std::vector<double> cum(K);
    std::partial_sum(mass.begin(), mass.end(), cum.begin());
    const DiscreteEtaLaw law = DiscreteEtaLaw::from(dist);
    bool bound_ok = true;
    for (std::size_t k = 0; k < opts.sample_sizes.size(); ++k) {
      ScoreSample s;
      s.values.resize(opts.sample_sizes[k]);
      for (auto& v : s.values) {
        const double u = rng.uniform() * cum.back();
        const auto j = std::min<std::size_t>(
            static_cast<std::size_t>(std::upper_bound(cum.begin(), cum.end(), u) - cum.begin()), K - 1);
        v = dist.eta()[j];
      }
      const double err = std::abs(empirical_threshold(s, params, 1e-12).theta.value - ref.theta.value);
      rep.mean_threshold_error[k] += err / static_cast<double>(trials);
      const double bound = cdf_gap_bound(law, s, dist.p_y1(), b);
      if (err > bound + 1e-12) {
        bound_ok = false;
        fail("gap_bound_n" + std::to_string(opts.sample_sizes[k]), err - bound);
      }
    }
    if (bound_ok) ++rep.gap_bound_pass;
  }

  rep.threshold_converges = true;
  for (std::size_t k = 1; k < rep.mean_threshold_error.size(); ++k)
    if (!(rep.mean_threshold_error[k] < rep.mean_threshold_error[k - 1])) rep.threshold_converges = false;
  return rep;
}

}  // namespace fscore
