// SPDX-License-Identifier: Apache-2.0
#include "fscore/regression.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <ostream>

#include <Eigen/Dense>

#include "fscore/csv.hpp"
#include "fscore/errors.hpp"

namespace fscore {

LabeledDataset::LabeledDataset(std::vector<double> points, std::size_t dim,
                               std::vector<std::uint8_t> labels)
    : points_(std::move(points)), dim_(dim), labels_(std::move(labels)) {
  if (dim_ == 0) throw ArgumentError("dataset dimension must be positive");
  if (labels_.empty()) throw ArgumentError("labeled dataset is empty");
  if (points_.size() != labels_.size() * dim_)
    throw ArgumentError("labeled dataset: points and labels differ in length");
  for (auto y : labels_)
    if (y > 1) throw ArgumentError("labels must be 0 or 1");
  for (double x : points_)
    if (!std::isfinite(x)) throw ArgumentError("feature values must be finite");
}

std::size_t LabeledDataset::positives() const noexcept {
  return static_cast<std::size_t>(std::count(labels_.begin(), labels_.end(), std::uint8_t{1}));
}

void LabeledDataset::write_csv(std::ostream& out) const {
  for (std::size_t j = 0; j < dim_; ++j) out << "x_" << (j + 1) << ',';
  out << "y\n";
  for (std::size_t i = 0; i < size(); ++i) {
    for (double x : point(i)) out << csv::format_double(x) << ',';
    out << int(labels_[i]) << '\n';
  }
}

LabeledDataset LabeledDataset::read_csv(std::istream& in) {
  const csv::Table t = csv::read(in);
  if (t.rows.empty()) throw IoError("labeled csv has no rows");
  const std::size_t cols = t.rows.front().size();
  if (cols < 2) throw IoError("labeled csv needs x_1..x_d,y columns");
  const std::size_t dim = cols - 1;
  std::vector<double> pts;
  std::vector<std::uint8_t> labels;
  for (const auto& row : t.rows) {
    pts.insert(pts.end(), row.begin(), row.begin() + static_cast<std::ptrdiff_t>(dim));
    const double y = row[dim];
    if (y != 0.0 && y != 1.0) throw IoError("labels must be 0 or 1");
    labels.push_back(static_cast<std::uint8_t>(y));
  }
  return LabeledDataset(std::move(pts), dim, std::move(labels));
}

LabeledDataset LabeledDataset::read_csv_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  return read_csv(in);
}

void SmoothnessSpec::validate() const {
  if (!(beta > 0.0) || !(L > 0.0)) throw ArgumentError("smoothness needs beta > 0 and L > 0");
}

Bandwidth default_bandwidth(std::size_t n, const SmoothnessSpec& spec, std::size_t dim) {
  if (n == 0) throw ArgumentError("bandwidth needs n >= 1");
  if (dim == 0) throw ArgumentError("bandwidth needs d >= 1");
  spec.validate();
  const double denom = 2.0 * spec.beta + static_cast<double>(dim);
  const double nn = static_cast<double>(n);
  return {std::pow(nn, -1.0 / denom), std::pow(nn, 2.0 * spec.beta / denom)};
}

std::string to_string(EstimatorMethod m) {
  switch (m) {
    case EstimatorMethod::knn: return "knn";
    case EstimatorMethod::kernel: return "kernel";
    case EstimatorMethod::local_poly: return "local_poly";
  }
  return "?";
}

std::string to_string(KernelType k) {
  return k == KernelType::gaussian ? "gaussian" : "epanechnikov";
}

EstimatorMethod parse_method(const std::string& s) {
  if (s == "knn") return EstimatorMethod::knn;
  if (s == "kernel") return EstimatorMethod::kernel;
  if (s == "local_poly" || s == "local-poly") return EstimatorMethod::local_poly;
  throw ArgumentError("unknown estimator '" + s + "'");
}

KernelType parse_kernel(const std::string& s) {
  if (s == "epanechnikov") return KernelType::epanechnikov;
  if (s == "gaussian") return KernelType::gaussian;
  throw ArgumentError("unknown kernel '" + s + "'");
}

struct RegressionEstimate::State {
  LabeledDataset data;
  EstimatorConfig cfg;

  // Sorted view for d = 1; `distinct` enables the O(log n) kNN window search.
  bool sorted_1d = false;
  bool distinct = false;
  std::vector<double> xs;
  std::vector<std::uint32_t> orig;
  std::vector<std::uint8_t> ys;
  std::vector<std::uint32_t> prefix;  // prefix[i] = sum of ys[0..i)

  std::vector<std::vector<int>> monomials;  // local polynomial exponents, constant first

  explicit State(LabeledDataset d, EstimatorConfig c) : data(std::move(d)), cfg(c) {}

  double knn(std::span<const double> x, std::size_t k) const;
  double kernel(std::span<const double> x, KernelType type, double h) const;
  double local_poly(std::span<const double> x) const;
  double eval(std::span<const double> x) const;
};

namespace {

double sq_dist(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) {
    const double t = a[j] - b[j];
    s += t * t;
  }
  return s;
}

std::vector<std::vector<int>> make_monomials(std::size_t dim, int degree) {
  std::vector<std::vector<int>> out;
  for (int total = 0; total <= degree; ++total) {
    std::vector<int> e(dim, 0);
    // Enumerate exponent vectors with sum == total.
    auto rec = [&](auto&& self, std::size_t pos, int left) -> void {
      if (pos + 1 == dim) {
        e[pos] = left;
        out.push_back(e);
        return;
      }
      for (int v = left; v >= 0; --v) {
        e[pos] = v;
        self(self, pos + 1, left - v);
      }
    };
    rec(rec, 0, total);
  }
  return out;
}

}  // namespace

double RegressionEstimate::State::knn(std::span<const double> x, std::size_t k) const {
  const std::size_t n = data.size();
  if (sorted_1d && distinct) {
    const double q = x[0];
    std::size_t lo = 0;
    std::size_t hi = n - k;
    // Window [l, l+k) of the sorted sample; shift right while the element
    // just past the window is nearer than its first element.
    while (lo < hi) {
      const std::size_t mid = lo + (hi - lo) / 2;
      const double dl = q - xs[mid];
      const double dr = xs[mid + k] - q;
      const bool right_wins = dr < dl || (dr == dl && orig[mid + k] < orig[mid]);
      if (right_wins)
        lo = mid + 1;
      else
        hi = mid;
    }
    return static_cast<double>(prefix[lo + k] - prefix[lo]) / static_cast<double>(k);
  }
  std::vector<std::pair<double, std::uint32_t>> d(n);
  for (std::size_t i = 0; i < n; ++i)
    d[i] = {sq_dist(x, data.point(i)), static_cast<std::uint32_t>(i)};
  std::nth_element(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(k - 1), d.end());
  std::size_t pos = 0;
  // nth_element leaves the k smallest (by (distance, index)) in front.
  for (std::size_t i = 0; i < k; ++i) pos += data.labels()[d[i].second];
  return static_cast<double>(pos) / static_cast<double>(k);
}

double RegressionEstimate::State::kernel(std::span<const double> x, KernelType type,
                                         double h) const {
  double sw = 0.0;
  double swy = 0.0;
  const double inv_h2 = 1.0 / (h * h);
  if (type == KernelType::epanechnikov && sorted_1d) {
    const double q = x[0];
    auto first = std::lower_bound(xs.begin(), xs.end(), q - h);
    auto last = std::upper_bound(first, xs.end(), q + h);
    for (auto it = first; it != last; ++it) {
      const std::size_t i = static_cast<std::size_t>(it - xs.begin());
      const double u = (q - xs[i]);
      const double w = 1.0 - u * u * inv_h2;
      if (w <= 0.0) continue;
      sw += w;
      swy += w * ys[i];
    }
  } else {
    for (std::size_t i = 0; i < data.size(); ++i) {
      const double u2 = sq_dist(x, data.point(i)) * inv_h2;
      double w;
      if (type == KernelType::epanechnikov) {
        w = 1.0 - u2;
        if (w <= 0.0) continue;
      } else {
        w = std::exp(-0.5 * u2);
      }
      sw += w;
      swy += w * data.labels()[i];
    }
  }
  if (sw == 0.0) return knn(x, 1);
  return swy / sw;
}

double RegressionEstimate::State::local_poly(std::span<const double> x) const {
  const double h = cfg.h;
  const std::size_t dim = data.dim();
  const std::size_t terms = monomials.size();
  std::vector<std::size_t> idx;
  if (sorted_1d) {
    auto first = std::lower_bound(xs.begin(), xs.end(), x[0] - h);
    auto last = std::upper_bound(first, xs.end(), x[0] + h);
    for (auto it = first; it != last; ++it) idx.push_back(static_cast<std::size_t>(it - xs.begin()));
  } else {
    for (std::size_t i = 0; i < data.size(); ++i)
      if (sq_dist(x, data.point(i)) < h * h) idx.push_back(i);
  }
  std::vector<double> z(dim);
  std::vector<std::pair<std::size_t, double>> rows;  // (index, weight)
  for (std::size_t i : idx) {
    const auto p = sorted_1d ? std::span<const double>(&xs[i], 1) : data.point(i);
    const double w = 1.0 - sq_dist(x, p) / (h * h);
    if (w > 0.0) rows.emplace_back(i, w);
  }
  if (rows.size() < terms) return kernel(x, KernelType::epanechnikov, h);

  Eigen::MatrixXd A(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(terms));
  Eigen::VectorXd rhs(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto [i, w] = rows[r];
    const auto p = sorted_1d ? std::span<const double>(&xs[i], 1) : data.point(i);
    const double y = sorted_1d ? ys[i] : data.labels()[i];
    for (std::size_t j = 0; j < dim; ++j) z[j] = (p[j] - x[j]) / h;
    const double sw = std::sqrt(w);
    for (std::size_t t = 0; t < terms; ++t) {
      double v = 1.0;
      for (std::size_t j = 0; j < dim; ++j)
        for (int e = 0; e < monomials[t][j]; ++e) v *= z[j];
      A(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(t)) = sw * v;
    }
    rhs(static_cast<Eigen::Index>(r)) = sw * y;
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(A);
  qr.setThreshold(1e-10);
  if (qr.rank() < static_cast<Eigen::Index>(terms)) return kernel(x, KernelType::epanechnikov, h);
  const Eigen::VectorXd coef = qr.solve(rhs);
  return coef(0);
}

double RegressionEstimate::State::eval(std::span<const double> x) const {
  double v = 0.0;
  switch (cfg.method) {
    case EstimatorMethod::knn: v = knn(x, cfg.k); break;
    case EstimatorMethod::kernel: v = kernel(x, cfg.kernel, cfg.h); break;
    case EstimatorMethod::local_poly: v = local_poly(x); break;
  }
  return std::clamp(v, 0.0, 1.0);
}

double RegressionEstimate::evaluate(std::span<const double> x) const {
  if (x.size() != state_->data.dim()) throw ArgumentError("query dimension mismatch");
  return state_->eval(x);
}

std::vector<double> RegressionEstimate::evaluate_batch(std::span<const double> queries) const {
  const std::size_t dim = state_->data.dim();
  if (queries.size() % dim != 0) throw ArgumentError("query buffer is not a multiple of d");
  std::vector<double> out(queries.size() / dim);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = state_->eval(queries.subspan(i * dim, dim));
  return out;
}

const EstimatorConfig& RegressionEstimate::config() const noexcept { return state_->cfg; }
std::size_t RegressionEstimate::dim() const noexcept { return state_->data.dim(); }
const LabeledDataset& RegressionEstimate::data() const noexcept { return state_->data; }

RegressionEstimate fit(const LabeledDataset& data, const EstimatorConfig& cfg) {
  switch (cfg.method) {
    case EstimatorMethod::knn:
      if (cfg.k < 1 || cfg.k > data.size()) throw ArgumentError("kNN needs 1 <= k <= n");
      break;
    case EstimatorMethod::kernel:
      if (!(cfg.h > 0.0) || !std::isfinite(cfg.h)) throw ArgumentError("bandwidth must be positive");
      break;
    case EstimatorMethod::local_poly:
      if (!(cfg.h > 0.0) || !std::isfinite(cfg.h)) throw ArgumentError("bandwidth must be positive");
      if (cfg.degree < 0) throw ArgumentError("polynomial degree must be >= 0");
      break;
  }
  auto st = std::make_shared<RegressionEstimate::State>(data, cfg);
  if (cfg.method == EstimatorMethod::local_poly) st->monomials = make_monomials(data.dim(), cfg.degree);
  if (data.dim() == 1) {
    const std::size_t n = data.size();
    std::vector<std::uint32_t> order(n);
    std::iota(order.begin(), order.end(), 0u);
    const auto& pts = data.points();
    std::stable_sort(order.begin(), order.end(),
                     [&](std::uint32_t a, std::uint32_t b) { return pts[a] < pts[b]; });
    st->sorted_1d = true;
    st->orig = order;
    st->xs.resize(n);
    st->ys.resize(n);
    st->prefix.assign(n + 1, 0);
    st->distinct = true;
    for (std::size_t i = 0; i < n; ++i) {
      st->xs[i] = pts[order[i]];
      st->ys[i] = data.labels()[order[i]];
      st->prefix[i + 1] = st->prefix[i] + st->ys[i];
      if (i > 0 && st->xs[i] == st->xs[i - 1]) st->distinct = false;
    }
  }
  return RegressionEstimate(std::move(st));
}

RegressionEstimate fit_knn(const LabeledDataset& data, std::size_t k) {
  EstimatorConfig c;
  c.method = EstimatorMethod::knn;
  c.k = k;
  return fit(data, c);
}

RegressionEstimate fit_kernel(const LabeledDataset& data, double h, KernelType kernel) {
  EstimatorConfig c;
  c.method = EstimatorMethod::kernel;
  c.h = h;
  c.kernel = kernel;
  return fit(data, c);
}

RegressionEstimate fit_local_poly(const LabeledDataset& data, int degree, double h) {
  EstimatorConfig c;
  c.method = EstimatorMethod::local_poly;
  c.h = h;
  c.degree = degree;
  return fit(data, c);
}

}  // namespace fscore
