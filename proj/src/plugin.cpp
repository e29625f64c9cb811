// SPDX-License-Identifier: Apache-2.0
#include "fscore/plugin.hpp"

#include <cmath>
#include <fstream>
#include <ostream>

#include "fscore/csv.hpp"
#include "fscore/errors.hpp"
#include "json.hpp"

namespace fscore {

UnlabeledDataset::UnlabeledDataset(std::vector<double> points, std::size_t dim)
    : points_(std::move(points)), dim_(dim) {
  if (dim_ == 0) throw ArgumentError("dataset dimension must be positive");
  if (points_.size() % dim_ != 0) throw ArgumentError("unlabeled buffer is not a multiple of d");
  for (double x : points_)
    if (!std::isfinite(x)) throw ArgumentError("feature values must be finite");
}

UnlabeledDataset UnlabeledDataset::read_csv(std::istream& in) {
  const csv::Table t = csv::read(in);
  std::size_t dim = t.header.size();
  if (!t.rows.empty()) dim = t.rows.front().size();
  if (dim == 0) throw IoError("unlabeled csv: cannot infer dimension");
  std::vector<double> pts;
  for (const auto& row : t.rows) pts.insert(pts.end(), row.begin(), row.end());
  return UnlabeledDataset(std::move(pts), dim);
}

UnlabeledDataset UnlabeledDataset::read_csv_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  return read_csv(in);
}

PluginClassifier::PluginClassifier(RegressionEstimate eta_hat, Threshold theta_hat,
                                   FBetaParams params, Provenance provenance)
    : eta_hat_(std::move(eta_hat)),
      theta_hat_(theta_hat),
      params_(params),
      provenance_(provenance) {
  params_.validate();
  if (!(theta_hat_.value >= 0.0 && theta_hat_.value <= params_.max_threshold()))
    throw ContractViolation("threshold outside [0, 1/(1+b^2)]");
}

int PluginClassifier::predict(std::span<const double> x) const {
  if (x.size() != eta_hat_.dim()) throw ArgumentError("query dimension mismatch");
  return eta_hat_.evaluate(x) > theta_hat_.value ? 1 : 0;
}

std::vector<std::uint8_t> PluginClassifier::predict_batch(std::span<const double> queries) const {
  const auto scores = eta_hat_.evaluate_batch(queries);
  std::vector<std::uint8_t> out(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) out[i] = scores[i] > theta_hat_.value ? 1 : 0;
  return out;
}

PluginClassifier calibrate_plugin(RegressionEstimate eta_hat, const ScoreSample& scores,
                                  const FBetaParams& params, Provenance provenance) {
  const ThresholdFit fit = empirical_threshold(scores, params, 1e-10);
  provenance.N_used = scores.total_weight();
  provenance.degenerate_threshold = fit.degenerate_zero;
  provenance.threshold_residual = fit.residual;
  return PluginClassifier(std::move(eta_hat), fit.theta, params, provenance);
}

PluginClassifier train_plugin(const LabeledDataset& labeled, const UnlabeledDataset& unlabeled,
                              const EstimatorConfig& estimator, const FBetaParams& params) {
  params.validate();
  if (unlabeled.dim() != labeled.dim())
    throw ArgumentError("labeled and unlabeled data differ in dimension");
  if (labeled.positives() == 0)
    throw TrainingDegenerate("every training label is 0; the threshold equation is vacuous");

  RegressionEstimate eta_hat = fit(labeled, estimator);
  Provenance prov;
  prov.n = labeled.size();
  prov.N = unlabeled.size();

  std::vector<double> pts = unlabeled.points();
  if (unlabeled.size() < labeled.size()) {
    pts.insert(pts.end(), labeled.points().begin(), labeled.points().end());
    prov.augmented = true;
  }
  ScoreSample scores;
  scores.values = eta_hat.evaluate_batch(pts);
  scores.n_source = labeled.size();
  return calibrate_plugin(std::move(eta_hat), scores, params, prov);
}

namespace {

std::filesystem::path sidecar_path(const std::filesystem::path& json_path) {
  auto p = json_path;
  p.replace_extension();
  p += ".data.csv";
  return p;
}

}  // namespace

void save_model(const PluginClassifier& clf, const std::filesystem::path& json_path) {
  const auto& cfg = clf.eta_hat().config();
  const auto& prov = clf.provenance();
  const auto data_path = sidecar_path(json_path);
  nlohmann::json j;
  j["format"] = "fscore-plugin-v1";
  j["dim"] = clf.eta_hat().dim();
  j["estimator"] = {{"method", to_string(cfg.method)},
                    {"k", cfg.k},
                    {"h", cfg.h},
                    {"degree", cfg.degree},
                    {"kernel", to_string(cfg.kernel)}};
  j["theta_hat"] = clf.theta_hat().value;
  j["b"] = clf.params().b;
  j["normalized"] = clf.params().normalized;
  j["provenance"] = {{"n", prov.n},
                     {"N", prov.N},
                     {"N_used", prov.N_used},
                     {"augmented", prov.augmented},
                     {"degenerate_threshold", prov.degenerate_threshold},
                     {"threshold_residual", prov.threshold_residual}};
  j["data_file"] = data_path.filename().string();

  std::ofstream js(json_path);
  if (!js) throw IoError("cannot write " + json_path.string());
  js << j.dump(2) << '\n';
  std::ofstream ds(data_path);
  if (!ds) throw IoError("cannot write " + data_path.string());
  clf.eta_hat().data().write_csv(ds);
  if (!js || !ds) throw IoError("failed writing model files");
}

PluginClassifier load_model(const std::filesystem::path& json_path) {
  std::ifstream in(json_path);
  if (!in) throw IoError("cannot open " + json_path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("model json: ") + e.what());
  }
  if (j.value("format", "") != "fscore-plugin-v1") throw IoError("unknown model format");
  try {
    EstimatorConfig cfg;
    const auto& e = j.at("estimator");
    cfg.method = parse_method(e.at("method").get<std::string>());
    cfg.k = e.at("k").get<std::size_t>();
    cfg.h = e.at("h").get<double>();
    cfg.degree = e.at("degree").get<int>();
    cfg.kernel = parse_kernel(e.at("kernel").get<std::string>());
    FBetaParams params{j.at("b").get<double>(), j.at("normalized").get<bool>()};
    Provenance prov;
    const auto& p = j.at("provenance");
    prov.n = p.at("n").get<std::size_t>();
    prov.N = p.at("N").get<std::size_t>();
    prov.N_used = p.at("N_used").get<double>();
    prov.augmented = p.at("augmented").get<bool>();
    prov.degenerate_threshold = p.at("degenerate_threshold").get<bool>();
    prov.threshold_residual = p.at("threshold_residual").get<double>();
    const auto data_path = json_path.parent_path() / j.at("data_file").get<std::string>();
    LabeledDataset data = LabeledDataset::read_csv_file(data_path);
    if (data.dim() != j.at("dim").get<std::size_t>()) throw IoError("model data dimension mismatch");
    return PluginClassifier(fit(data, cfg), Threshold{j.at("theta_hat").get<double>()}, params, prov);
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("model json: ") + e.what());
  }
}

void write_predictions(std::ostream& out, const PluginClassifier& clf,
                       std::span<const double> queries) {
  const auto scores = clf.eta_hat().evaluate_batch(queries);
  out << "index,eta_hat,prediction\n";
  for (std::size_t i = 0; i < scores.size(); ++i)
    out << i << ',' << csv::format_double(scores[i]) << ','
        << (scores[i] > clf.theta_hat().value ? 1 : 0) << '\n';
}

}  // namespace fscore
