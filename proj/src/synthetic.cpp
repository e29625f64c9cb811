// SPDX-License-Identifier: Apache-2.0
#include "fscore/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <sstream>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "fscore/errors.hpp"
#include "fscore/random.hpp"

namespace fscore {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double norm2(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += v * v;
  return std::sqrt(s);
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

// Slope of log(y) on log(x) by ordinary least squares.
double log_log_slope(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t n = x.size();
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += std::log(x[i]);
    my += std::log(y[i]);
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = std::log(x[i]) - mx;
    sxy += dx * (std::log(y[i]) - my);
    sxx += dx * dx;
  }
  return sxy / sxx;
}

// theta* on the reference grid, cross-checked against a grid half as fine.
Threshold refined_threshold(const AnalyticDistribution& dist, std::size_t points_per_dim) {
  const Threshold fine = bayes_threshold(*dist.reference, dist.params);
  const std::size_t coarse_ppd = std::max<std::size_t>(2, points_per_dim / 2);
  const Threshold coarse = bayes_threshold(dist.discretize(coarse_ppd), dist.params);
  if (std::abs(fine.value - coarse.value) > 1e-6)
    throw ConstructionError(dist.name + ": theta* not stable under grid refinement (" +
                            fmt(fine.value) + " vs " + fmt(coarse.value) + ")");
  return fine;
}

void check_weights(const AnalyticDistribution& dist) {
  double total = 0.0;
  for (const auto& c : dist.components) {
    if (c.center.size() != dist.dim) throw ConstructionError("component dimension mismatch");
    if (!(c.radius > 0.0) || !(c.weight > 0.0))
      throw ConstructionError("components need positive radius and weight");
    total += c.weight;
  }
  if (std::abs(total - 1.0) > 1e-6)
    throw ConstructionError(dist.name + ": density integrates to " + fmt(total));
}

std::vector<double> dyadic_deltas(int from, int to) {
  std::vector<double> out;
  for (int k = from; k <= to; ++k) out.push_back(std::ldexp(1.0, -k));
  return out;
}

void require_infinite_margin(const AnalyticDistribution& dist) {
  const auto deltas = dyadic_deltas(3, 9);
  std::vector<double> small;
  for (double d : deltas)
    if (d <= dist.margin.delta0) small.push_back(d);
  if (small.empty()) small.push_back(dist.margin.delta0);
  const MarginReport r = verify_margin(dist, small);
  if (!r.infinite)
    throw ConstructionError(dist.name + ": mass found within delta0 of theta*");
}

void require_density(const AnalyticDistribution& dist) {
  const DensityReport r = verify_strong_density(dist, 2000);
  if (!r.bounded) throw ConstructionError(dist.name + ": density not bounded between mu_min and mu_max");
  if (!r.regular) throw ConstructionError(dist.name + ": support is not (c0, r0)-regular");
  if (!r.outside_density_zero) throw ConstructionError(dist.name + ": density nonzero off the support");
}

}  // namespace

void MarginSpec::validate() const {
  if (!(alpha > 0.0)) throw ArgumentError("margin exponent must be positive");
  if (!(C0 > 0.0)) throw ArgumentError("margin constant C0 must be positive");
  if (!(delta0 > 0.0 && delta0 <= 1.0 / 12.0)) throw ArgumentError("delta0 must lie in (0, 1/12]");
}

double MarginSpec::c0() const {
  if (infinite()) return C0;
  return std::max(C0, std::pow(delta0, -alpha));
}

void DensitySpec::validate() const {
  if (!(mu_min > 0.0 && mu_min <= mu_max)) throw ArgumentError("need 0 < mu_min <= mu_max");
  if (!(c0_reg > 0.0) || !(r0_reg > 0.0)) throw ArgumentError("regularity constants must be positive");
}

double unit_ball_volume(std::size_t d) {
  const double h = static_cast<double>(d) / 2.0;
  return std::pow(std::numbers::pi, h) / std::tgamma(h + 1.0);
}

double BallComponent::volume() const {
  return unit_ball_volume(center.size()) * std::pow(radius, static_cast<double>(center.size()));
}

bool BallComponent::contains(std::span<const double> x) const {
  double s = 0.0;
  for (std::size_t i = 0; i < center.size(); ++i) {
    const double t = x[i] - center[i];
    s += t * t;
  }
  return s <= radius * radius;
}

double AnalyticDistribution::density(std::span<const double> x) const {
  for (const auto& c : components)
    if (c.contains(x)) return c.density();
  return 0.0;
}

bool AnalyticDistribution::in_support(std::span<const double> x) const {
  return std::any_of(components.begin(), components.end(),
                     [&](const BallComponent& c) { return c.contains(x); });
}

DiscreteDistribution AnalyticDistribution::discretize(std::size_t points_per_dim) const {
  if (points_per_dim == 0) throw ArgumentError("points_per_dim must be positive");
  const double cells = std::pow(static_cast<double>(points_per_dim), static_cast<double>(dim));
  if (cells * static_cast<double>(components.size()) > 5e7)
    throw SizeError("discretization too large");

  std::vector<double> pts, mass, et;
  std::vector<double> x(dim);
  for (const auto& c : components) {
    const double step = 2.0 * c.radius / static_cast<double>(points_per_dim);
    const std::size_t start = mass.size();
    std::vector<std::size_t> idx(dim, 0);
    while (true) {
      for (std::size_t a = 0; a < dim; ++a)
        x[a] = c.center[a] - c.radius + (static_cast<double>(idx[a]) + 0.5) * step;
      if (dim == 1 || c.contains(x)) {
        pts.insert(pts.end(), x.begin(), x.end());
        et.push_back(eta(x));
        mass.push_back(0.0);
      }
      std::size_t a = dim;
      while (a > 0 && ++idx[a - 1] == points_per_dim) idx[--a] = 0;
      if (a == 0) break;
    }
    if (mass.size() == start) {
      pts.insert(pts.end(), c.center.begin(), c.center.end());
      et.push_back(eta(c.center));
      mass.push_back(0.0);
    }
    const double each = c.weight / static_cast<double>(mass.size() - start);
    std::fill(mass.begin() + static_cast<std::ptrdiff_t>(start), mass.end(), each);
  }
  for (double& e : et) e = std::clamp(e, 0.0, 1.0);
  return DiscreteDistribution(std::move(pts), dim, std::move(mass), std::move(et));
}

double smooth_step(double t) {
  if (t <= 0.0) return 0.0;
  if (t >= 1.0) return 1.0;
  const double a = std::exp(-1.0 / t);
  const double b = std::exp(-1.0 / (1.0 - t));
  return a / (a + b);
}

double bump_plateau(double s) { return 1.0 - smooth_step(4.0 * s - 1.0); }

double holder_seminorm_1d(const std::function<double(double)>& f, double beta, double lo,
                          double hi, std::size_t grid) {
  if (!(beta > 0.0 && beta <= 2.0)) throw ArgumentError("Hoelder check supports beta in (0, 2]");
  if (!(lo < hi) || grid < 2) throw ArgumentError("need lo < hi and at least two grid points");
  std::vector<double> t(grid), v(grid);
  for (std::size_t i = 0; i < grid; ++i) {
    t[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(grid - 1);
    v[i] = f(t[i]);
  }
  double best = 0.0;
  if (beta <= 1.0) {
    for (std::size_t i = 0; i < grid; ++i)
      for (std::size_t j = i + 1; j < grid; ++j)
        best = std::max(best, std::abs(v[j] - v[i]) / std::pow(t[j] - t[i], beta));
    return best;
  }
  const double h = 1e-5 * (hi - lo);
  std::vector<double> d(grid);
  for (std::size_t i = 0; i < grid; ++i) d[i] = (f(t[i] + h) - f(t[i] - h)) / (2.0 * h);
  for (std::size_t i = 0; i < grid; ++i)
    for (std::size_t j = 0; j < grid; ++j) {
      if (i == j) continue;
      const double dt = t[j] - t[i];
      best = std::max(best, std::abs(v[j] - v[i] - d[i] * dt) / std::pow(std::abs(dt), beta));
    }
  return best;
}

// ---------------------------------------------------------------------------
// Smooth one-dimensional family.
//
// With e = 1/alpha and eta symmetric about theta_c, E eta = theta_c and
// E(eta - theta_c)_+ = s (1/2)^{e+1} / (e+1), so theta_c solves
// b^2 theta^2 = s (1/2)^{e+1} / (e+1). Near theta_c,
// P(|eta - theta_c| <= delta) = 2 (delta/s)^alpha.

AnalyticDistribution make_smooth_1d_family(double beta, double alpha_target, std::uint64_t seed,
                                           const SmoothFamilyOptions& opts) {
  if (!(beta > 0.0 && beta <= 1.0)) throw ArgumentError("smooth family needs beta in (0, 1]");
  if (!(alpha_target > 0.0) || !std::isfinite(alpha_target))
    throw ArgumentError("smooth family needs a finite positive alpha");
  if (alpha_target * beta > 1.0)
    throw ArgumentError("smooth family needs alpha * beta <= 1");
  if (!(opts.amplitude > 0.0)) throw ArgumentError("amplitude must be positive");
  if (opts.reference_atoms < 1000) throw ArgumentError("reference_atoms must be at least 1000");
  FBetaParams params{opts.b, true};
  params.validate();

  const double s = opts.amplitude;
  const double e = 1.0 / alpha_target;
  const double theta_c = std::sqrt(s * std::pow(0.5, e + 1.0) / (e + 1.0)) / opts.b;
  const double reach = s * std::pow(0.5, e);
  if (theta_c - reach < 0.0 || theta_c + reach > 1.0)
    throw ConstructionError("smooth family: eta leaves [0,1]; lower the amplitude");

  AnalyticDistribution dist;
  std::ostringstream name;
  name << "smooth(beta=" << beta << ",alpha=" << alpha_target << ")";
  dist.name = name.str();
  dist.dim = 1;
  dist.eta = [theta_c, s, e](std::span<const double> x) {
    const double t = x[0] - 0.5;
    const double mag = s * std::pow(std::abs(t), e);
    return t < 0.0 ? theta_c - mag : theta_c + mag;
  };
  dist.components.push_back(BallComponent{{0.5}, 0.5, 1.0});
  dist.params = params;
  dist.theta_star_exact = theta_c;
  dist.margin = MarginSpec{alpha_target, 2.0 * std::pow(s, -alpha_target), 1.0 / 12.0};
  const double L = e <= 1.0 ? s * std::pow(2.0, 1.0 - e) : s * e * std::pow(0.5, e - 1.0);
  dist.smoothness = SmoothnessSpec{beta, L};
  dist.seed = seed;
  check_weights(dist);

  dist.reference = std::make_shared<const DiscreteDistribution>(dist.discretize(opts.reference_atoms));
  dist.theta_star = refined_threshold(dist, opts.reference_atoms);

  std::vector<double> deltas;
  for (int k = 1; k <= 7; ++k) deltas.push_back(reach * std::ldexp(1.0, -k));
  const MarginReport r = verify_margin(dist, deltas);
  if (r.infinite || r.fitted_points < 2 || std::abs(r.exponent - alpha_target) > 0.2)
    throw ConstructionError("smooth family: measured margin exponent " + fmt(r.exponent) +
                            " misses target " + fmt(alpha_target));
  require_density(dist);
  return dist;
}

AnalyticDistribution make_constant_family(double eta_value, double b, std::size_t reference_atoms) {
  if (!(eta_value > 0.0 && eta_value <= 1.0)) throw ArgumentError("constant eta must lie in (0, 1]");
  FBetaParams params{b, true};
  params.validate();
  const double theta = eta_value / (1.0 + params.b2() * eta_value);

  AnalyticDistribution dist;
  dist.name = "constant(eta=" + fmt(eta_value) + ")";
  dist.dim = 1;
  dist.eta = [eta_value](std::span<const double>) { return eta_value; };
  dist.components.push_back(BallComponent{{0.5}, 0.5, 1.0});
  dist.params = params;
  dist.theta_star_exact = theta;
  dist.margin = MarginSpec{kInf, 1.0, std::min(1.0 / 12.0, (eta_value - theta) / 2.0)};
  dist.smoothness = SmoothnessSpec{1.0, 1.0};
  check_weights(dist);
  dist.reference = std::make_shared<const DiscreteDistribution>(dist.discretize(reference_atoms));
  dist.theta_star = refined_threshold(dist, reference_atoms);
  require_infinite_margin(dist);
  require_density(dist);
  return dist;
}

AnalyticDistribution make_separated_family(const SeparatedFamilyOptions& o) {
  if (!(0.0 <= o.low && o.low < o.high && o.high <= 1.0))
    throw ArgumentError("separated family needs 0 <= low < high <= 1");
  if (!(0.0 < o.gap_lo && o.gap_lo < o.gap_hi && o.gap_hi < 1.0))
    throw ArgumentError("separated family needs 0 < gap_lo < gap_hi < 1");
  FBetaParams params{o.b, true};
  params.validate();

  const double len = o.gap_lo + (1.0 - o.gap_hi);
  const double w1 = o.gap_lo / len;
  const double w2 = (1.0 - o.gap_hi) / len;
  const double p = w1 * o.low + w2 * o.high;
  double theta = w2 * o.high / (params.b2() * p + w2);
  if (theta <= o.low) theta = p / (params.b2() * p + 1.0);
  const double gap = std::min(std::abs(o.low - theta), std::abs(o.high - theta));
  if (!(gap > 0.0)) throw ConstructionError("separated family: eta touches theta*");

  AnalyticDistribution dist;
  dist.name = "separated";
  dist.dim = 1;
  const double lo = o.low, hi = o.high, a = o.gap_lo, width = o.gap_hi - o.gap_lo;
  dist.eta = [lo, hi, a, width](std::span<const double> x) {
    return lo + (hi - lo) * smooth_step((x[0] - a) / width);
  };
  dist.components.push_back(BallComponent{{o.gap_lo / 2.0}, o.gap_lo / 2.0, w1});
  dist.components.push_back(BallComponent{{(1.0 + o.gap_hi) / 2.0}, (1.0 - o.gap_hi) / 2.0, w2});
  dist.params = params;
  dist.theta_star_exact = theta;
  dist.margin = MarginSpec{kInf, 1.0, std::min(1.0 / 12.0, gap / 2.0)};
  const double v1 = holder_seminorm_1d(smooth_step, 1.0, -0.5, 1.5);
  dist.smoothness = SmoothnessSpec{1.0, (hi - lo) * v1 / width};
  check_weights(dist);
  dist.reference = std::make_shared<const DiscreteDistribution>(dist.discretize(o.reference_atoms));
  dist.theta_star = refined_threshold(dist, o.reference_atoms);
  require_infinite_margin(dist);
  require_density(dist);
  return dist;
}

// ---------------------------------------------------------------------------
// Lower-bound family.

namespace {

std::size_t ipow(std::size_t q, std::size_t d) {
  std::size_t r = 1;
  for (std::size_t i = 0; i < d; ++i) {
    if (r > std::numeric_limits<std::size_t>::max() / q) throw SizeError("q^d overflows");
    r *= q;
  }
  return r;
}

double profile_value(const HardFamilyParams& p, double s) {
  return p.profile == BumpProfile::constant_one ? 1.0 : bump_plateau(s);
}

// phi at x relative to the grid point z.
double phi_at(const HardFamilyParams& p, std::span<const double> x, std::span<const double> z) {
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += (x[i] - z[i]) * (x[i] - z[i]);
  const double q = static_cast<double>(p.q);
  return *p.C_phi * std::pow(q, -p.beta) * profile_value(p, q * std::sqrt(s));
}

// Index of the active cell of [0,1]^d containing x, or -1.
long active_cell(const HardFamilyParams& p, std::span<const double> x) {
  std::size_t j = 0;
  for (double v : x) {
    if (v < 0.0 || v > 1.0) return -1;
    const auto k = std::min<std::size_t>(static_cast<std::size_t>(v * static_cast<double>(p.q)), p.q - 1);
    j = j * p.q + k;
  }
  return j < p.m ? static_cast<long>(j) : -1;
}

double hard_eta(const HardFamilyParams& p, std::span<const double> x) {
  const double r = norm2(x);
  const double rd = std::sqrt(static_cast<double>(p.d));
  const double rho = *p.rho;
  if (r >= rd + rho) return p.tau;
  if (r > rd) return (p.tau - 0.25) * smooth_step((r - rd) / rho) + 0.25;
  const long j = active_cell(p, x);
  if (j >= 0) {
    const auto z = hard_grid_point(p, static_cast<std::size_t>(j));
    return 0.25 + p.sigma[static_cast<std::size_t>(j)] * phi_at(p, x, z);
  }
  std::vector<double> neg(x.begin(), x.end());
  for (double& v : neg) v = -v;
  const long jn = active_cell(p, neg);
  if (jn >= 0) {
    const auto z = hard_grid_point(p, static_cast<std::size_t>(jn));
    return 0.25 - p.sigma[static_cast<std::size_t>(jn)] * phi_at(p, neg, z);
  }
  return 0.25;
}

}  // namespace

std::vector<double> hard_grid_point(const HardFamilyParams& p, std::size_t j) {
  if (p.q == 0 || p.d == 0) throw ArgumentError("grid needs q >= 1 and d >= 1");
  if (j >= ipow(p.q, p.d)) throw ArgumentError("grid index out of range");
  std::vector<double> z(p.d);
  for (std::size_t a = p.d; a > 0; --a) {
    const std::size_t k = j % p.q;
    j /= p.q;
    z[a - 1] = (2.0 * static_cast<double>(k) + 1.0) / (2.0 * static_cast<double>(p.q));
  }
  return z;
}

double compute_bprime(const HardFamilyParams& p) {
  if (!p.C_phi) throw ArgumentError("compute_bprime needs C_phi; call derive_hard_family");
  if (p.q == 0 || p.d == 0) throw ArgumentError("grid needs q >= 1 and d >= 1");
  // mu is uniform on B(z, 1/(4q)) inside the cell and phi is radial about z,
  // so the ratio reduces to a one-dimensional radial integral.
  const double q = static_cast<double>(p.q);
  const double R = 1.0 / (4.0 * q);
  const double dd = static_cast<double>(p.d);
  auto f = [&](double r) { return profile_value(p, q * r) * std::pow(r, dd - 1.0); };
  double err = 0.0;
  const double num = boost::math::quadrature::gauss_kronrod<double, 15>::integrate(f, 0.0, R, 15, 1e-10, &err);
  const double den = std::pow(R, dd) / dd;
  if (!(err <= 1e-8 * std::max(std::abs(num), 1e-300)) && num != 0.0)
    throw NumericError("b' quadrature did not converge");
  return *p.C_phi * std::pow(q, -p.beta) * num / den;
}

double hard_family_tau(double b_prime, double m_times_w) {
  return 1.0 / 3.0 + (1.0 / 12.0 - 2.0 * b_prime / 3.0) * (2.0 * m_times_w / (1.0 - 2.0 * m_times_w));
}

HardFamilyParams derive_hard_family(HardFamilyParams p) {
  if (p.d == 0) throw ConstructionError("d must be at least 1");
  if (p.q == 0) throw ConstructionError("q must be at least 1");
  if (p.m == 0) throw ConstructionError("m must be at least 1");
  if (p.m >= ipow(p.q, p.d)) throw ConstructionError("m must be below q^d so that lambda(A0) > 0");
  if (!(p.w > 0.0) || p.w * static_cast<double>(p.m) > 1.0)
    throw ConstructionError("w must lie in (0, 1/m]");
  const double mw = static_cast<double>(p.m) * p.w;
  if (!(mw < 0.5)) throw ConstructionError("m w must be below 1/2 (tau <= 1 and A0 carries mass)");
  if (!(p.beta > 0.0 && p.beta <= 2.0)) throw ConstructionError("beta must lie in (0, 2]");
  if (!(p.L > 0.0)) throw ConstructionError("L must be positive");
  if (p.sigma.empty()) p.sigma.assign(p.m, 1);
  if (p.sigma.size() != p.m) throw ConstructionError("sigma must have m entries");
  for (int s : p.sigma)
    if (s != 1 && s != -1) throw ConstructionError("sigma entries must be +1 or -1");

  const double qb = std::pow(static_cast<double>(p.q), p.beta);
  if (!p.C_phi) {
    double c = qb / 8.0;
    if (p.profile == BumpProfile::smooth) {
      const double su = holder_seminorm_1d([](double s) { return bump_plateau(std::abs(s)); },
                                           p.beta, -1.0, 1.0);
      c = std::min(c, p.L / su);
    }
    p.C_phi = c;
  }
  if (!(*p.C_phi > 0.0)) throw ConstructionError("C_phi must be positive");

  p.b_prime = compute_bprime(p);
  if (p.b_prime > 1.0 / 8.0 + 1e-15)
    throw ConstructionError("b' = " + fmt(p.b_prime) + " exceeds 1/8");
  p.tau = hard_family_tau(p.b_prime, mw);
  if (!(p.tau > 0.25 && p.tau <= 1.0)) throw ConstructionError("tau must lie in (1/4, 1]");

  if (!p.rho) {
    const double sv = holder_seminorm_1d(smooth_step, p.beta, -0.5, 1.5);
    double rho = 1.0;
    while ((p.tau - 0.25) * std::pow(rho, -p.beta) * sv > p.L) {
      rho *= 2.0;
      if (rho > 0x1.0p40) throw ConstructionError("no annulus width keeps xi Hoelder");
    }
    p.rho = rho;
  }
  if (!(*p.rho > 0.0)) throw ConstructionError("rho must be positive");
  return p;
}

double hard_family_balance_residual(const HardFamilyParams& p) {
  const double mw = static_cast<double>(p.m) * p.w;
  return 0.25 * (mw / 2.0 + p.tau * (1.0 - 2.0 * mw)) -
         (mw * p.b_prime + (p.tau - 0.25) * (1.0 - 2.0 * mw));
}

double hard_margin_bound(const HardFamilyParams& p, double alpha, double delta) {
  if (!p.C_phi) throw ArgumentError("margin bound needs C_phi");
  const double mw = static_cast<double>(p.m) * p.w;
  const double level = *p.C_phi * std::pow(static_cast<double>(p.q), -p.beta);
  return 2.0 * mw * (delta >= level ? 1.0 : 0.0) + std::pow(12.0 * delta, alpha);
}

AnalyticDistribution build_hard_family(const HardFamilyParams& params, double alpha,
                                       std::size_t points_per_dim) {
  if (!(alpha > 0.0)) throw ArgumentError("margin exponent must be positive");
  const HardFamilyParams p = derive_hard_family(params);
  const double mw = static_cast<double>(p.m) * p.w;
  const double r_ball = 1.0 / (4.0 * static_cast<double>(p.q));
  const double rd = std::sqrt(static_cast<double>(p.d));

  AnalyticDistribution dist;
  std::ostringstream name;
  name << "hard(d=" << p.d << ",q=" << p.q << ",m=" << p.m << ")";
  dist.name = name.str();
  dist.dim = p.d;
  dist.eta = [p](std::span<const double> x) { return hard_eta(p, x); };
  for (std::size_t j = 0; j < p.m; ++j) {
    auto z = hard_grid_point(p, j);
    dist.components.push_back(BallComponent{z, r_ball, p.w});
    for (double& v : z) v = -v;
    dist.components.push_back(BallComponent{z, r_ball, p.w});
  }
  const double lambda_a0 = 1.0 - static_cast<double>(p.m) * std::pow(static_cast<double>(p.q), -static_cast<double>(p.d));
  const double r_a0 = std::pow(lambda_a0 / unit_ball_volume(p.d), 1.0 / static_cast<double>(p.d));
  std::vector<double> c0(p.d, 0.0);
  c0[0] = rd + *p.rho + 2.0 * r_a0;
  dist.components.push_back(BallComponent{c0, r_a0, 1.0 - 2.0 * mw});

  dist.params = FBetaParams{1.0, true};
  dist.theta_star_exact = 0.25;
  const double level = *p.C_phi * std::pow(static_cast<double>(p.q), -p.beta);
  dist.margin = MarginSpec{alpha, std::pow(12.0, alpha) + 2.0 * mw * std::pow(level, -alpha), 1.0 / 12.0};
  dist.smoothness = SmoothnessSpec{p.beta, p.L};
  check_weights(dist);

  std::size_t ppd = points_per_dim;
  if (ppd == 0) {
    ppd = p.d == 1 ? 100'000
                   : std::max<std::size_t>(8, static_cast<std::size_t>(std::pow(
                                                  2e6 / static_cast<double>(dist.components.size()),
                                                  1.0 / static_cast<double>(p.d))));
  }
  dist.reference = std::make_shared<const DiscreteDistribution>(dist.discretize(ppd));
  dist.theta_star = refined_threshold(dist, ppd);
  if (std::abs(dist.theta_star.value - 0.25) > 2e-3)
    throw ConstructionError("hard family: theta* = " + fmt(dist.theta_star.value) + " instead of 1/4");

  std::vector<double> deltas = dyadic_deltas(3, 12);
  deltas.push_back(level);
  const MarginReport r = verify_margin(dist, deltas);
  for (std::size_t i = 0; i < deltas.size(); ++i)
    if (r.probabilities[i] > hard_margin_bound(p, alpha, deltas[i]) + 1e-12)
      throw ConstructionError("hard family: margin bound fails at delta = " + fmt(deltas[i]));
  require_density(dist);
  return dist;
}

HardScaling hard_family_scaling(std::size_t n, double beta, std::size_t d, double alpha,
                                double Cbar, double Cprime, double Cdoubleprime) {
  if (n == 0 || d == 0) throw ArgumentError("scaling needs n >= 1 and d >= 1");
  if (!(beta > 0.0) || !(alpha > 0.0)) throw ArgumentError("scaling needs positive alpha and beta");
  if (alpha * beta > static_cast<double>(d)) throw ArgumentError("scaling needs alpha * beta <= d");
  const double dd = static_cast<double>(d);
  const double qd = std::floor(Cbar * std::pow(static_cast<double>(n), 1.0 / (2.0 * beta + dd)));
  const std::size_t q = std::max<std::size_t>(1, static_cast<std::size_t>(qd));
  const double qq = static_cast<double>(q);
  HardScaling s;
  s.q = q;
  s.w = Cprime * std::pow(qq, -dd);
  s.m = static_cast<std::size_t>(std::floor(Cdoubleprime * std::pow(qq, dd - alpha * beta)));
  return s;
}

// ---------------------------------------------------------------------------
// Validators.

MarginReport verify_margin(const AnalyticDistribution& dist, std::span<const double> deltas) {
  if (!dist.reference) throw ArgumentError("distribution has no reference discretization");
  const auto& ref = *dist.reference;
  const double theta = dist.theta_star.value;

  std::vector<std::pair<double, double>> gaps;
  gaps.reserve(ref.size());
  double positive_total = 0.0;
  for (std::size_t i = 0; i < ref.size(); ++i) {
    const double g = std::abs(ref.eta()[i] - theta);
    if (g > 0.0) {
      gaps.emplace_back(g, ref.mass()[i]);
      positive_total += ref.mass()[i];
    }
  }
  std::sort(gaps.begin(), gaps.end());
  std::vector<double> cum(gaps.size() + 1, 0.0);
  for (std::size_t i = 0; i < gaps.size(); ++i) cum[i + 1] = cum[i] + gaps[i].second;

  MarginReport r;
  r.deltas.assign(deltas.begin(), deltas.end());
  std::vector<double> fx, fy;
  for (double d : deltas) {
    const auto it = std::upper_bound(gaps.begin(), gaps.end(), std::make_pair(d, kInf));
    const double prob = cum[static_cast<std::size_t>(it - gaps.begin())];
    r.probabilities.push_back(prob);
    if (prob > 0.0 && prob < positive_total * (1.0 - 1e-9) && d > 0.0) {
      fx.push_back(d);
      fy.push_back(prob);
    }
  }
  r.infinite = std::all_of(r.probabilities.begin(), r.probabilities.end(),
                           [](double v) { return v == 0.0; });
  r.fitted_points = fx.size();
  if (r.infinite)
    r.exponent = kInf;
  else if (fx.size() >= 2)
    r.exponent = log_log_slope(fx, fy);
  else
    r.exponent = std::numeric_limits<double>::quiet_NaN();
  return r;
}

DensityReport verify_strong_density(const AnalyticDistribution& dist, std::size_t scan) {
  DensityReport r;
  const std::size_t d = dist.dim;
  if (dist.components.empty()) return r;

  for (const auto& c : dist.components) {
    const double v = c.density();
    const bool seen = std::any_of(r.density_values.begin(), r.density_values.end(),
                                  [v](double u) { return std::abs(u - v) <= 1e-12 * std::max(u, v); });
    if (!seen) r.density_values.push_back(v);
  }
  std::sort(r.density_values.begin(), r.density_values.end());
  r.mu_min = r.density_values.front();
  r.mu_max = r.density_values.back();
  r.bounded = r.mu_min > 0.0 && std::isfinite(r.mu_max);

  // A point of B(c, R) sees a ball of radius r/2 inside both B(x, r) and
  // B(c, R) whenever r <= R, so each component is (2^{-d}, R)-regular;
  // disjoint components keep the constants of the smallest one.
  r.c0_reg = std::ldexp(1.0, -static_cast<int>(d));
  r.r0_reg = kInf;
  for (const auto& c : dist.components) r.r0_reg = std::min(r.r0_reg, c.radius);

  Rng rng(0x5eedULL);
  bool regular = true;
  for (const auto& c : dist.components) {
    for (double frac : {1.0, 0.5, 0.1}) {
      const double rad = frac * r.r0_reg;
      std::vector<double> probe = c.center;
      probe[0] += c.radius;  // boundary point
      double ratio;
      if (d == 1) {
        double covered = 0.0;
        for (const auto& o : dist.components) {
          const double lo = std::max(probe[0] - rad, o.center[0] - o.radius);
          const double hi = std::min(probe[0] + rad, o.center[0] + o.radius);
          covered += std::max(0.0, hi - lo);
        }
        ratio = covered / (2.0 * rad);
        if (ratio < r.c0_reg - 1e-12) regular = false;
      } else {
        const int draws = 20000;
        int inside = 0;
        std::vector<double> x(d);
        for (int t = 0; t < draws; ++t) {
          double nn = 0.0;
          for (auto& v : x) {
            v = rng.normal();
            nn += v * v;
          }
          const double scale = rad * std::pow(rng.uniform(), 1.0 / static_cast<double>(d)) / std::sqrt(nn);
          for (std::size_t a = 0; a < d; ++a) x[a] = probe[a] + x[a] * scale;
          if (dist.in_support(x)) ++inside;
        }
        ratio = inside / static_cast<double>(draws);
        const double se = std::sqrt(std::max(ratio * (1.0 - ratio), 1e-4) / draws);
        if (ratio < r.c0_reg - 4.0 * se) regular = false;
      }
    }
  }
  r.regular = regular;

  std::vector<double> lo(d, kInf), hi(d, -kInf);
  for (const auto& c : dist.components)
    for (std::size_t a = 0; a < d; ++a) {
      lo[a] = std::min(lo[a], c.center[a] - c.radius);
      hi[a] = std::max(hi[a], c.center[a] + c.radius);
    }
  const std::size_t per_axis =
      std::max<std::size_t>(2, static_cast<std::size_t>(std::pow(static_cast<double>(scan), 1.0 / static_cast<double>(d))));
  std::vector<std::size_t> idx(d, 0);
  std::vector<double> x(d);
  while (true) {
    for (std::size_t a = 0; a < d; ++a) {
      const double pad = 0.05 * (hi[a] - lo[a]);
      x[a] = lo[a] - pad + (hi[a] - lo[a] + 2.0 * pad) * static_cast<double>(idx[a]) /
                               static_cast<double>(per_axis - 1);
    }
    if (!dist.in_support(x)) {
      ++r.probes_outside;
      if (dist.density(x) != 0.0) r.outside_density_zero = false;
    } else {
      const double v = dist.density(x);
      // Balls of equal mass and radius can differ in the last ulp.
      if (v < r.mu_min * (1.0 - 1e-12) || v > r.mu_max * (1.0 + 1e-12)) r.bounded = false;
    }
    std::size_t a = d;
    while (a > 0 && ++idx[a - 1] == per_axis) idx[--a] = 0;
    if (a == 0) break;
  }
  return r;
}

namespace {

std::vector<double> draw_points(const AnalyticDistribution& dist, std::size_t n, Rng& rng,
                                std::vector<std::uint8_t>* labels) {
  const std::size_t d = dist.dim;
  std::vector<double> cum;
  double total = 0.0;
  for (const auto& c : dist.components) cum.push_back(total += c.weight);
  std::vector<double> pts(n * d);
  if (labels) labels->resize(n);
  std::vector<double> dir(d);
  for (std::size_t i = 0; i < n; ++i) {
    const double u = rng.uniform() * total;
    std::size_t k = static_cast<std::size_t>(std::upper_bound(cum.begin(), cum.end(), u) - cum.begin());
    k = std::min(k, cum.size() - 1);
    const auto& c = dist.components[k];
    double* x = pts.data() + i * d;
    if (d == 1) {
      x[0] = c.center[0] + c.radius * (2.0 * rng.uniform() - 1.0);
    } else {
      double nn = 0.0;
      for (auto& v : dir) {
        v = rng.normal();
        nn += v * v;
      }
      const double scale = c.radius * std::pow(rng.uniform(), 1.0 / static_cast<double>(d)) / std::sqrt(nn);
      for (std::size_t a = 0; a < d; ++a) x[a] = c.center[a] + dir[a] * scale;
    }
    if (labels) {
      const double e = std::clamp(dist.eta(std::span<const double>(x, d)), 0.0, 1.0);
      (*labels)[i] = rng.bernoulli(e) ? 1 : 0;
    }
  }
  return pts;
}

}  // namespace

LabeledDataset sample_labeled(const AnalyticDistribution& dist, std::size_t n, std::uint64_t seed) {
  if (n == 0) throw ArgumentError("sample size must be at least 1");
  Rng rng(seed);
  std::vector<std::uint8_t> labels;
  auto pts = draw_points(dist, n, rng, &labels);
  return LabeledDataset(std::move(pts), dist.dim, std::move(labels));
}

UnlabeledDataset sample_unlabeled(const AnalyticDistribution& dist, std::size_t n,
                                  std::uint64_t seed) {
  Rng rng(seed);
  return UnlabeledDataset(draw_points(dist, n, rng, nullptr), dist.dim);
}

DiscreteDistribution export_discrete(const AnalyticDistribution& dist, std::size_t points_per_dim) {
  return dist.discretize(points_per_dim);
}

}  // namespace fscore
