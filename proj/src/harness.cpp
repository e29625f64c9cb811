// SPDX-License-Identifier: Apache-2.0
#include "fscore/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <thread>

#include "fscore/errors.hpp"
#include "fscore/plugin.hpp"
#include "fscore/random.hpp"
#include "fscore/threshold.hpp"

namespace fscore {

using nlohmann::json;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::size_t family_dim(const FamilySpec& f) { return f.name == "hard" ? f.hard.d : 1; }

double family_alpha(const FamilySpec& f) {
  if (f.name == "constant" || f.name == "separated") return kInf;
  return f.alpha;
}

double family_beta(const FamilySpec& f) {
  if (f.name == "hard") return f.hard.beta;
  if (f.name == "smooth") return f.beta;
  return 1.0;
}

template <class T>
void read_opt(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

void check_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& where) {
  if (!j.is_object()) throw ArgumentError(where + " must be an object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (std::none_of(allowed.begin(), allowed.end(), [&](const char* k) { return it.key() == k; }))
      throw ArgumentError("unknown key '" + it.key() + "' in " + where);
  }
}

// Runs body(i) for i in [0, count) on `threads` workers; the first exception
// is rethrown after all workers stop.
template <class F>
void parallel_for(std::size_t count, std::size_t threads, F body) {
  if (threads <= 1 || count <= 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mu;
  auto worker = [&] {
    while (true) {
      const std::size_t i = next.fetch_add(1);
      if (i >= count) return;
      try {
        body(i);
      } catch (...) {
        std::lock_guard lock(error_mu);
        if (!error) error = std::current_exception();
        next.store(count);
      }
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < std::min(threads, count); ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

// Multinomial counts of `total` draws over the atoms of `dist`.
std::vector<double> multinomial_counts(const DiscreteDistribution& dist, std::size_t total, Rng& rng) {
  std::vector<double> counts(dist.size(), 0.0);
  std::int64_t left = static_cast<std::int64_t>(total);
  long double mass_left = 1.0L;
  for (std::size_t i = 0; i < dist.size() && left > 0; ++i) {
    const double m = dist.mass()[i];
    std::int64_t c;
    if (i + 1 == dist.size() || mass_left <= m) {
      c = left;
    } else {
      const double p = std::clamp(static_cast<double>(m / mass_left), 0.0, 1.0);
      c = rng.binomial(left, p);
    }
    counts[i] = static_cast<double>(c);
    left -= c;
    mass_left -= m;
  }
  return counts;
}

}  // namespace

EstimatorConfig EstimatorSpec::at(std::size_t n, const SmoothnessSpec& s, std::size_t dim) const {
  const Bandwidth bw = default_bandwidth(n, s, dim);
  EstimatorConfig c;
  c.method = method;
  const double k = std::ceil(k_scale * bw.a_n);
  c.k = std::clamp<std::size_t>(static_cast<std::size_t>(std::max(k, 1.0)), 1, n);
  c.h = h_scale * bw.h;
  c.degree = degree.value_or(static_cast<int>(std::floor(s.beta)));
  c.kernel = kernel;
  return c;
}

std::size_t NRule::apply(std::size_t n) const {
  switch (kind) {
    case Kind::same:
      return n;
    case Kind::square:
      return n * n;
    case Kind::fixed:
      return static_cast<std::size_t>(value);
    case Kind::multiple:
      return static_cast<std::size_t>(std::ceil(value * static_cast<double>(n)));
  }
  return n;
}

std::string NRule::to_string() const {
  switch (kind) {
    case Kind::same:
      return "n";
    case Kind::square:
      return "n2";
    case Kind::fixed:
      return "fixed:" + std::to_string(static_cast<std::size_t>(value));
    case Kind::multiple: {
      json j = value;
      return "mult:" + j.dump();
    }
  }
  return "n";
}

NRule NRule::parse(const std::string& s) {
  NRule r;
  if (s == "n") return r;
  if (s == "n2") {
    r.kind = Kind::square;
    return r;
  }
  auto number = [&](std::size_t pos) {
    try {
      std::size_t used = 0;
      const double v = std::stod(s.substr(pos), &used);
      if (used != s.size() - pos) throw ArgumentError("");
      return v;
    } catch (const std::exception&) {
      throw ArgumentError("bad N rule '" + s + "'");
    }
  };
  if (s.rfind("fixed:", 0) == 0) {
    r.kind = Kind::fixed;
    r.value = number(6);
    if (!(r.value >= 0.0) || r.value != std::floor(r.value))
      throw ArgumentError("fixed N must be a non-negative integer");
    return r;
  }
  if (s.rfind("mult:", 0) == 0) {
    r.kind = Kind::multiple;
    r.value = number(5);
    if (!(r.value > 0.0)) throw ArgumentError("N multiple must be positive");
    return r;
  }
  throw ArgumentError("bad N rule '" + s + "' (expected n, n2, fixed:<N> or mult:<c>)");
}

void ExperimentConfig::validate() const {
  static const std::vector<std::string> families{"smooth", "constant", "separated", "hard"};
  if (std::find(families.begin(), families.end(), family.name) == families.end())
    throw ArgumentError("unknown family '" + family.name + "'");
  FBetaParams{b, true}.validate();
  if (family.name == "hard" && b != 1.0) throw ArgumentError("the hard family is defined for b = 1");
  if (n_grid.empty()) throw ArgumentError("n grid is empty");
  for (std::size_t i = 0; i < n_grid.size(); ++i) {
    if (n_grid[i] < 2) throw ArgumentError("every n must be at least 2");
    if (i > 0 && n_grid[i] <= n_grid[i - 1]) throw ArgumentError("n grid must be strictly increasing");
  }
  if (reps < 1) throw ArgumentError("reps must be at least 1");
  if (grid_atoms < 100) throw ArgumentError("grid_atoms must be at least 100");
  if (!(estimator.k_scale > 0.0) || !(estimator.h_scale > 0.0))
    throw ArgumentError("estimator scales must be positive");
}

ExperimentConfig ExperimentConfig::from_json(const json& j) {
  ExperimentConfig c;
  try {
    check_keys(j, {"family", "estimator", "b", "n_grid", "N_rule", "reps", "seed", "grid_atoms",
                   "threads", "out"},
               "config");
    if (j.contains("family")) {
      const json& f = j.at("family");
      check_keys(f, {"name", "beta", "alpha", "amplitude", "eta_value", "hard", "sigma_seed"}, "family");
      read_opt(f, "name", c.family.name);
      read_opt(f, "beta", c.family.beta);
      read_opt(f, "alpha", c.family.alpha);
      read_opt(f, "amplitude", c.family.amplitude);
      read_opt(f, "eta_value", c.family.eta_value);
      read_opt(f, "sigma_seed", c.family.sigma_seed);
      if (f.contains("hard")) {
        const json& h = f.at("hard");
        check_keys(h, {"d", "beta", "L", "q", "m", "w", "C_phi", "rho", "sigma", "profile"}, "hard");
        auto& p = c.family.hard;
        read_opt(h, "d", p.d);
        read_opt(h, "beta", p.beta);
        read_opt(h, "L", p.L);
        read_opt(h, "q", p.q);
        read_opt(h, "m", p.m);
        read_opt(h, "w", p.w);
        if (h.contains("C_phi") && !h.at("C_phi").is_null()) p.C_phi = h.at("C_phi").get<double>();
        if (h.contains("rho") && !h.at("rho").is_null()) p.rho = h.at("rho").get<double>();
        read_opt(h, "sigma", p.sigma);
        if (h.contains("profile")) {
          const auto s = h.at("profile").get<std::string>();
          if (s == "smooth")
            p.profile = BumpProfile::smooth;
          else if (s == "constant_one")
            p.profile = BumpProfile::constant_one;
          else
            throw ArgumentError("unknown bump profile '" + s + "'");
        }
      }
    }
    if (j.contains("estimator")) {
      const json& e = j.at("estimator");
      check_keys(e, {"method", "k_scale", "h_scale", "degree", "kernel"}, "estimator");
      if (e.contains("method")) c.estimator.method = parse_method(e.at("method").get<std::string>());
      read_opt(e, "k_scale", c.estimator.k_scale);
      read_opt(e, "h_scale", c.estimator.h_scale);
      if (e.contains("degree") && !e.at("degree").is_null()) c.estimator.degree = e.at("degree").get<int>();
      if (e.contains("kernel")) c.estimator.kernel = parse_kernel(e.at("kernel").get<std::string>());
    }
    read_opt(j, "b", c.b);
    read_opt(j, "n_grid", c.n_grid);
    if (j.contains("N_rule")) c.N_rule = NRule::parse(j.at("N_rule").get<std::string>());
    read_opt(j, "reps", c.reps);
    read_opt(j, "seed", c.seed);
    read_opt(j, "grid_atoms", c.grid_atoms);
    read_opt(j, "threads", c.threads);
    if (j.contains("out")) c.out = j.at("out").get<std::string>();
  } catch (const json::exception& e) {
    throw ArgumentError(std::string("config: ") + e.what());
  }
  c.validate();
  return c;
}

json ExperimentConfig::to_json() const {
  const auto& p = family.hard;
  json hard{{"d", p.d},
            {"beta", p.beta},
            {"L", p.L},
            {"q", p.q},
            {"m", p.m},
            {"w", p.w},
            {"C_phi", p.C_phi ? json(*p.C_phi) : json(nullptr)},
            {"rho", p.rho ? json(*p.rho) : json(nullptr)},
            {"sigma", p.sigma},
            {"profile", p.profile == BumpProfile::smooth ? "smooth" : "constant_one"}};
  return json{{"family",
               {{"name", family.name},
                {"beta", family.beta},
                {"alpha", family.alpha},
                {"amplitude", family.amplitude},
                {"eta_value", family.eta_value},
                {"hard", hard},
                {"sigma_seed", family.sigma_seed}}},
              {"estimator",
               {{"method", fscore::to_string(estimator.method)},
                {"k_scale", estimator.k_scale},
                {"h_scale", estimator.h_scale},
                {"degree", estimator.degree ? json(*estimator.degree) : json(nullptr)},
                {"kernel", fscore::to_string(estimator.kernel)}}},
              {"b", b},
              {"n_grid", n_grid},
              {"N_rule", N_rule.to_string()},
              {"reps", reps},
              {"seed", seed},
              {"grid_atoms", grid_atoms},
              {"threads", threads},
              {"out", out.string()}};
}

AnalyticDistribution build_family(const FamilySpec& spec, double b) {
  if (spec.name == "smooth") {
    SmoothFamilyOptions o;
    o.amplitude = spec.amplitude;
    o.b = b;
    return make_smooth_1d_family(spec.beta, spec.alpha, spec.sigma_seed, o);
  }
  if (spec.name == "constant") return make_constant_family(spec.eta_value, b);
  if (spec.name == "separated") {
    SeparatedFamilyOptions o;
    o.b = b;
    return make_separated_family(o);
  }
  if (spec.name == "hard") {
    if (b != 1.0) throw ArgumentError("the hard family is defined for b = 1");
    HardFamilyParams p = spec.hard;
    if (p.sigma.empty()) {
      Rng rng(spec.sigma_seed);
      p.sigma.resize(p.m);
      for (auto& s : p.sigma) s = rng.bernoulli(0.5) ? 1 : -1;
    }
    return build_hard_family(p, spec.alpha);
  }
  throw ArgumentError("unknown family '" + spec.name + "'");
}

double theoretical_exponent(const FamilySpec& family, const std::string& statistic) {
  const double beta = family_beta(family);
  const double d = static_cast<double>(family_dim(family));
  if (statistic == "threshold_error") return -beta / (2.0 * beta + d);
  const double alpha = family_alpha(family);
  if (std::isinf(alpha)) return -kInf;
  return -(1.0 + alpha) * beta / (2.0 * beta + d);
}

LogLogFit fit_log_log(const std::vector<RateCell>& cells) {
  LogLogFit f;
  std::vector<double> x, y, rel;
  for (const auto& c : cells) {
    if (c.mean > 0.0) {
      x.push_back(std::log(static_cast<double>(c.n)));
      y.push_back(std::log(c.mean));
      rel.push_back(c.se / c.mean);
    }
  }
  f.used = x.size();
  if (f.used < 2) return f;
  const double k = static_cast<double>(f.used);
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= k;
  my /= k;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;

  // Delta method: var(log mean_i) ~ (se_i / mean_i)^2 propagated through the
  // OLS weights; residual scatter covers model misfit.
  double var_delta = 0.0, rss = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double c = (x[i] - mx) / sxx;
    var_delta += c * c * rel[i] * rel[i];
    const double r = y[i] - (f.intercept + f.slope * x[i]);
    rss += r * r;
  }
  double se = std::sqrt(var_delta);
  if (f.used > 2) se = std::max(se, std::sqrt(rss / (k - 2.0) / sxx));
  f.half_width = 1.96 * se;
  return f;
}

std::vector<std::vector<ReplicationOutcome>> run_replications(const ExperimentConfig& cfg) {
  cfg.validate();
  const AnalyticDistribution dist = build_family(cfg.family, cfg.b);
  const FBetaParams params{cfg.b, true};

  std::size_t ppd = cfg.grid_atoms;
  if (dist.dim > 1) {
    const double cap = std::pow(2e5 / static_cast<double>(dist.components.size()),
                                1.0 / static_cast<double>(dist.dim));
    ppd = std::min<std::size_t>(ppd, std::max<std::size_t>(4, static_cast<std::size_t>(cap)));
  }
  const DiscreteDistribution grid = dist.discretize(ppd);
  const BayesReference ref = BayesReference::compute(grid, params);
  const double theta_star = dist.theta_star.value;

  const std::size_t R = cfg.reps;
  std::vector<std::vector<ReplicationOutcome>> out(cfg.n_grid.size(),
                                                   std::vector<ReplicationOutcome>(R));
  const std::size_t threads =
      cfg.threads == 0 ? std::max(1u, std::thread::hardware_concurrency()) : cfg.threads;

  parallel_for(cfg.n_grid.size() * R, threads, [&](std::size_t task) {
    const std::size_t i = task / R;
    const std::size_t r = task % R;
    const std::size_t n = cfg.n_grid[i];
    const std::size_t N = cfg.N_rule.apply(n);
    ReplicationOutcome& o = out[i][r];

    const LabeledDataset labeled = sample_labeled(dist, n, derive_seed(cfg.seed, i, r, 0));
    if (labeled.positives() == 0) {
      // No positive label: the procedure cannot calibrate and predicts 0.
      o.theta_hat = 0.0;
      o.threshold_error = theta_star;
      o.excess = excess_fbeta(grid, ref, Bits(grid.size(), 0), params, ExcessMode::identity);
      return;
    }
    const EstimatorConfig ec = cfg.estimator.at(n, dist.smoothness, dist.dim);
    RegressionEstimate eta_hat = fit(labeled, ec);
    const std::vector<double> scores = eta_hat.evaluate_batch(grid.points());

    // The unlabeled sample is drawn on the evaluation grid as multinomial
    // counts, so its cost does not grow with N.
    Rng rng(derive_seed(cfg.seed, i, r, 1));
    const std::vector<double> counts = multinomial_counts(grid, N, rng);
    ScoreSample s;
    s.n_source = n;
    for (std::size_t a = 0; a < grid.size(); ++a) {
      if (counts[a] > 0.0) {
        s.values.push_back(scores[a]);
        s.weights.push_back(counts[a]);
      }
    }
    Provenance prov;
    prov.n = n;
    prov.N = N;
    if (N < n) {
      const auto extra = eta_hat.evaluate_batch(labeled.points());
      s.values.insert(s.values.end(), extra.begin(), extra.end());
      s.weights.insert(s.weights.end(), extra.size(), 1.0);
      prov.augmented = true;
    }
    const PluginClassifier clf = calibrate_plugin(std::move(eta_hat), s, params, prov);
    const double theta_hat = clf.theta_hat().value;

    Bits bits(grid.size());
    for (std::size_t a = 0; a < grid.size(); ++a) bits[a] = scores[a] > theta_hat ? 1 : 0;
    o.theta_hat = theta_hat;
    o.threshold_error = std::abs(theta_hat - theta_star);
    o.excess = excess_fbeta(grid, ref, bits, params, ExcessMode::identity);
  });
  return out;
}

RateFitResult summarize_replications(const ExperimentConfig& cfg,
                                     const std::vector<std::vector<ReplicationOutcome>>& outcomes,
                                     const std::string& statistic) {
  if (statistic != "excess" && statistic != "threshold_error")
    throw ArgumentError("unknown statistic '" + statistic + "'");
  if (outcomes.size() != cfg.n_grid.size()) throw ArgumentError("outcome table does not match n grid");
  RateFitResult res;
  res.statistic = statistic;
  res.family = cfg.family.name;
  res.N_rule = cfg.N_rule.to_string();
  res.reps = cfg.reps;
  res.seed = cfg.seed;
  res.theoretical_exponent = theoretical_exponent(cfg.family, statistic);

  for (std::size_t i = 0; i < outcomes.size(); ++i) {
    std::vector<double> v;
    v.reserve(outcomes[i].size());
    for (const auto& o : outcomes[i]) v.push_back(statistic == "excess" ? o.excess : o.threshold_error);
    RateCell c;
    c.n = cfg.n_grid[i];
    c.N = cfg.N_rule.apply(c.n);
    const double k = static_cast<double>(v.size());
    double sum = 0.0;
    std::size_t zeros = 0;
    for (double x : v) {
      sum += x;
      if (x == 0.0) ++zeros;
    }
    c.mean = sum / k;
    double ss = 0.0;
    for (double x : v) ss += (x - c.mean) * (x - c.mean);
    c.se = v.size() > 1 ? std::sqrt(ss / (k - 1.0) / k) : 0.0;
    std::vector<double> sorted = v;
    std::sort(sorted.begin(), sorted.end());
    const std::size_t h = sorted.size() / 2;
    c.median = sorted.size() % 2 ? sorted[h] : 0.5 * (sorted[h - 1] + sorted[h]);
    c.zero_fraction = static_cast<double>(zeros) / k;
    if (!(c.mean > 0.0)) ++res.excluded_cells;
    res.cells.push_back(c);
  }

  res.infinite_rate = res.excluded_cells == res.cells.size();
  const LogLogFit f = fit_log_log(res.cells);
  if (f.used >= 2) {
    res.fitted = true;
    res.slope = f.slope;
    res.intercept = f.intercept;
    res.slope_half_width = f.half_width;
  }
  return res;
}

RateFitResult run_rate_experiment(const ExperimentConfig& cfg) {
  return summarize_replications(cfg, run_replications(cfg), "excess");
}

RateFitResult run_threshold_experiment(const ExperimentConfig& cfg) {
  return summarize_replications(cfg, run_replications(cfg), "threshold_error");
}

double ks_deviation_uniform(std::vector<double> sample) {
  if (sample.empty()) throw ArgumentError("empty sample");
  std::sort(sample.begin(), sample.end());
  const double N = static_cast<double>(sample.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sample.size(); ++i) {
    const double x = std::clamp(sample[i], 0.0, 1.0);
    d = std::max({d, static_cast<double>(i + 1) / N - x, x - static_cast<double>(i) / N});
  }
  return d;
}

std::vector<DkwCell> run_dkw_check(const std::vector<std::size_t>& N_values,
                                   const std::vector<double>& t_values, std::size_t reps,
                                   std::uint64_t seed) {
  if (reps < 100) throw ArgumentError("DKW check needs at least 100 replications");
  if (N_values.empty() || t_values.empty()) throw ArgumentError("DKW check needs N and t values");
  for (std::size_t N : N_values)
    if (N == 0) throw ArgumentError("N must be positive");
  for (double t : t_values)
    if (!(t > 0.0)) throw ArgumentError("t must be positive");

  std::vector<DkwCell> cells;
  for (std::size_t i = 0; i < N_values.size(); ++i) {
    const std::size_t N = N_values[i];
    std::vector<double> dev(reps);
    std::vector<double> sample(N);
    for (std::size_t r = 0; r < reps; ++r) {
      Rng rng(derive_seed(seed, i, r));
      for (auto& u : sample) u = rng.uniform();
      dev[r] = ks_deviation_uniform(sample);
    }
    for (double t : t_values) {
      DkwCell c;
      c.N = N;
      c.t = t;
      c.reps = reps;
      c.exceed = static_cast<std::size_t>(std::count_if(dev.begin(), dev.end(), [t](double d) { return d > t; }));
      c.frequency = static_cast<double>(c.exceed) / static_cast<double>(reps);
      c.bound = 2.0 * std::exp(-2.0 * static_cast<double>(N) * t * t);
      c.se = std::sqrt(c.frequency * (1.0 - c.frequency) / static_cast<double>(reps));
      cells.push_back(c);
    }
  }
  return cells;
}

}  // namespace fscore
