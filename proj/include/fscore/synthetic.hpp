// SPDX-License-Identifier: Apache-2.0
//
// Synthetic distributions with known regression function, optimal threshold,
// margin behaviour and smoothness, plus validators for those properties.
//
// Every marginal law here is a finite mixture of uniform laws on Euclidean
// balls (intervals when d = 1), which keeps sampling exact and density
// checks analytic.
#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fscore/fbeta.hpp"
#include "fscore/plugin.hpp"
#include "fscore/regression.hpp"

namespace fscore {

struct MarginSpec {
  double alpha = 1.0;  // +inf for a margin-separated law
  double C0 = 1.0;
  double delta0 = 1.0 / 12.0;

  bool infinite() const noexcept { return alpha == std::numeric_limits<double>::infinity(); }
  // C0 v delta0^{-alpha}: constant valid for every delta > 0.
  double c0() const;
  void validate() const;
};

struct DensitySpec {
  double mu_min = 1.0;
  double mu_max = 1.0;
  double c0_reg = 0.5;
  double r0_reg = 1.0;

  void validate() const;
};

struct BallComponent {
  std::vector<double> center;
  double radius = 0.0;
  double weight = 0.0;

  double volume() const;
  double density() const { return weight / volume(); }
  bool contains(std::span<const double> x) const;
};

// Volume of the Euclidean unit ball in R^d.
double unit_ball_volume(std::size_t d);

// A synthetic law with closed-form eta and a piecewise-constant density.
// `reference` is a fine discretization used for theta*, margin and excess
// computations.
struct AnalyticDistribution {
  std::string name;
  std::size_t dim = 1;
  std::function<double(std::span<const double>)> eta;
  std::vector<BallComponent> components;
  FBetaParams params;
  Threshold theta_star;
  std::optional<double> theta_star_exact;  // when known in closed form
  MarginSpec margin;
  SmoothnessSpec smoothness;
  std::uint64_t seed = 0;
  std::shared_ptr<const DiscreteDistribution> reference;

  double density(std::span<const double> x) const;
  bool in_support(std::span<const double> x) const;

  // Midpoint discretization: `points_per_dim` cells per axis over each
  // component's bounding box, masses renormalized to the component weight.
  DiscreteDistribution discretize(std::size_t points_per_dim) const;
};

// v(t): C-infinity, 0 for t <= 0, 1 for t >= 1, built from exp(-1/t).
double smooth_step(double t);
// u(s) = 1 - v(4s - 1): 1 on [0, 1/4], 0 on [1/2, inf), non-increasing.
double bump_plateau(double s);

// sup over grid pairs of |f(t') - T_t f(t')| / |t' - t|^beta on [lo, hi],
// with T_t the Taylor polynomial of degree floor(beta) (finite-difference
// derivative for beta in (1, 2]). Throws ArgumentError for beta > 2.
double holder_seminorm_1d(const std::function<double(double)>& f, double beta, double lo,
                          double hi, std::size_t grid = 1500);

struct SmoothFamilyOptions {
  double amplitude = 0.4;  // s in eta = theta + s sign(x - 1/2) |x - 1/2|^(1/alpha)
  double b = 1.0;
  std::size_t reference_atoms = 1'000'000;
};

// X ~ U[0,1], eta(x) = theta_c + s sign(x - 1/2)|x - 1/2|^{1/alpha}, with
// theta_c equal to the optimal threshold of the result. Requires
// beta in (0,1] and alpha * beta <= 1; the measured margin exponent must
// match alpha within 0.2.
AnalyticDistribution make_smooth_1d_family(double beta, double alpha_target, std::uint64_t seed,
                                           const SmoothFamilyOptions& opts = {});

// X ~ U[0,1] and eta constant. No mass near theta* unless eta == theta*.
AnalyticDistribution make_constant_family(double eta_value = 0.5, double b = 1.0,
                                          std::size_t reference_atoms = 100'000);

struct SeparatedFamilyOptions {
  double low = 0.1;
  double high = 0.9;
  double gap_lo = 0.4;
  double gap_hi = 0.6;
  double b = 1.0;
  std::size_t reference_atoms = 200'000;
};

// X uniform on [0, gap_lo] U [gap_hi, 1]; eta rises smoothly from `low` to
// `high` across the gap, so eta stays a fixed distance from theta*.
AnalyticDistribution make_separated_family(const SeparatedFamilyOptions& opts = {});

enum class BumpProfile { smooth, constant_one };

struct HardFamilyParams {
  std::size_t d = 1;
  double beta = 1.0;
  double L = 1.0;
  std::size_t q = 8;
  std::size_t m = 4;
  double w = 1.0 / 16.0;
  std::optional<double> C_phi;  // default: largest value keeping phi (beta, L)-Hoelder, capped so b' <= 1/8
  std::optional<double> rho;    // default: smallest power of two keeping xi (beta, L)-Hoelder
  std::vector<int> sigma;       // length m, entries +-1
  BumpProfile profile = BumpProfile::smooth;

  // Derived by derive_hard_family.
  double b_prime = 0.0;
  double tau = 0.0;
};

// Grid center (2k_1+1)/(2q), ... of active cell j (lexicographic order).
std::vector<double> hard_grid_point(const HardFamilyParams& p, std::size_t j);

// Average of phi over the support of mu inside the first active cell.
double compute_bprime(const HardFamilyParams& p);

// tau = 1/3 + (1/12 - 2b'/3)(2mw/(1 - 2mw)).
double hard_family_tau(double b_prime, double m_times_w);

// Fills C_phi, rho, b_prime and tau; throws ConstructionError naming the
// violated condition (mw <= 1/2, b' <= 1/8, tau in (1/4, 1], ...).
HardFamilyParams derive_hard_family(HardFamilyParams p);

// Residual of (1/4)(mw/2 + tau(1-2mw)) = m w b' + (tau - 1/4)(1 - 2mw).
double hard_family_balance_residual(const HardFamilyParams& p);

// The sigma-indexed lower-bound family; theta* = 1/4 for b = 1.
AnalyticDistribution build_hard_family(const HardFamilyParams& p, double alpha = 1.0,
                                       std::size_t points_per_dim = 0);

// 2mw 1{delta >= C_phi q^{-beta}} + 12^alpha delta^alpha.
double hard_margin_bound(const HardFamilyParams& p, double alpha, double delta);

struct HardScaling {
  std::size_t q;
  double w;
  std::size_t m;
};

// q = floor(Cbar n^{1/(2beta+d)}), w = C' q^{-d}, m = floor(C'' q^{d - alpha beta}).
// Throws ArgumentError when alpha * beta > d.
HardScaling hard_family_scaling(std::size_t n, double beta, std::size_t d, double alpha,
                                double Cbar = 1.0, double Cprime = 1.0, double Cdoubleprime = 1.0);

struct MarginReport {
  std::vector<double> deltas;
  std::vector<double> probabilities;
  double exponent = 0.0;       // fitted slope of log P against log delta
  bool infinite = false;       // every probability is zero
  std::size_t fitted_points = 0;
};

// P_X(0 < |eta(X) - theta*| <= delta) on the reference discretization.
MarginReport verify_margin(const AnalyticDistribution& dist, std::span<const double> deltas);

struct DensityReport {
  double mu_min = 0.0;
  double mu_max = 0.0;
  std::vector<double> density_values;  // distinct positive values on the support
  double c0_reg = 0.0;
  double r0_reg = 0.0;
  bool regular = false;
  bool bounded = false;
  std::size_t probes_outside = 0;        // scan points found outside the support
  bool outside_density_zero = true;      // density vanished at every such point
};

DensityReport verify_strong_density(const AnalyticDistribution& dist, std::size_t scan = 2000);

LabeledDataset sample_labeled(const AnalyticDistribution& dist, std::size_t n, std::uint64_t seed);
UnlabeledDataset sample_unlabeled(const AnalyticDistribution& dist, std::size_t n,
                                  std::uint64_t seed);

// Exports the reference discretization for oracle cross-checks.
DiscreteDistribution export_discrete(const AnalyticDistribution& dist, std::size_t points_per_dim);

}  // namespace fscore
