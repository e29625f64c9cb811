// SPDX-License-Identifier: Apache-2.0
//
// fscore: command-line front end for the plug-in F-score toolkit.
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "fscore/errors.hpp"
#include "fscore/harness.hpp"
#include "fscore/oracle.hpp"
#include "fscore/plugin.hpp"
#include "json.hpp"

namespace {

using nlohmann::json;
using namespace fscore;

struct ExperimentFlags {
  std::string config;
  std::vector<std::size_t> n_grid;
  std::optional<std::size_t> reps;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> family;
  std::optional<std::string> estimator;
  std::optional<double> b;
  std::optional<std::string> out;
  std::optional<std::string> N_rule;
  std::optional<std::size_t> threads;
  std::vector<std::string> formats{"csv", "json", "svg"};
};

void add_experiment_flags(CLI::App* cmd, ExperimentFlags& f) {
  cmd->add_option("--config", f.config, "JSON experiment config")->check(CLI::ExistingFile);
  cmd->add_option("--n-grid", f.n_grid, "labeled sample sizes")->delimiter(',');
  cmd->add_option("--reps", f.reps, "replications per n");
  cmd->add_option("--seed", f.seed, "master seed");
  cmd->add_option("--family", f.family, "smooth | constant | separated | hard");
  cmd->add_option("--estimator", f.estimator, "knn | kernel | local_poly");
  cmd->add_option("--b", f.b, "F-score parameter b");
  cmd->add_option("--out", f.out, "output directory");
  cmd->add_option("--N-rule", f.N_rule, "n | n2 | fixed:<N> | mult:<c>");
  cmd->add_option("--threads", f.threads, "worker threads (0: all cores)");
  cmd->add_option("--formats", f.formats, "report formats")->delimiter(',');
}

ExperimentConfig resolve(const ExperimentFlags& f) {
  json j = json::object();
  if (!f.config.empty()) {
    std::ifstream in(f.config);
    if (!in) throw IoError("cannot open " + f.config);
    try {
      in >> j;
    } catch (const json::exception& e) {
      throw IoError(std::string("config: ") + e.what());
    }
  }
  ExperimentConfig c = ExperimentConfig::from_json(j);
  if (!f.n_grid.empty()) c.n_grid = f.n_grid;
  if (f.reps) c.reps = *f.reps;
  if (f.seed) c.seed = *f.seed;
  if (f.family) c.family.name = *f.family;
  if (f.estimator) c.estimator.method = parse_method(*f.estimator);
  if (f.b) c.b = *f.b;
  if (f.out) c.out = *f.out;
  if (f.N_rule) c.N_rule = NRule::parse(*f.N_rule);
  if (f.threads) c.threads = *f.threads;
  c.validate();
  return c;
}

std::vector<ReportFormat> parse_formats(const std::vector<std::string>& names) {
  std::vector<ReportFormat> out;
  for (const auto& s : names) {
    if (s == "csv")
      out.push_back(ReportFormat::csv);
    else if (s == "json")
      out.push_back(ReportFormat::json);
    else if (s == "svg")
      out.push_back(ReportFormat::svg);
    else
      throw ArgumentError("unknown report format '" + s + "'");
  }
  return out;
}

int run_experiment(const ExperimentFlags& flags, const std::string& statistic) {
  const ExperimentConfig cfg = resolve(flags);
  const auto formats = parse_formats(flags.formats);
  const RateFitResult r = statistic == "excess" ? run_rate_experiment(cfg) : run_threshold_experiment(cfg);
  const std::string stem = statistic == "excess" ? "rate" : "threshold";
  const auto files = emit_report(r, cfg.out, stem, formats);
  std::ofstream(cfg.out / (stem + "_config.json")) << cfg.to_json().dump(2) << '\n';
  json summary = rate_to_json(r)["fit"];
  for (const auto& p : files) summary["files"].push_back(p.string());
  std::cout << summary.dump(2) << '\n';
  return 0;
}

void write_error(const std::string& kind, const std::string& message) {
  std::cerr << json{{"error", kind}, {"message", message}}.dump() << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Plug-in F-score classification toolkit"};
  app.require_subcommand(1);

  ExperimentFlags rate_flags, thr_flags;
  auto* rate = app.add_subcommand("rate", "excess-score convergence experiment");
  add_experiment_flags(rate, rate_flags);
  auto* thr = app.add_subcommand("threshold", "threshold-error convergence experiment");
  add_experiment_flags(thr, thr_flags);

  std::vector<std::size_t> dkw_N{100, 1000, 10000};
  std::vector<double> dkw_t{0.01, 0.05, 0.1};
  std::size_t dkw_reps = 2000;
  std::uint64_t dkw_seed = 1;
  std::string dkw_out = "out";
  auto* dkw = app.add_subcommand("dkw", "empirical CDF deviation table");
  dkw->add_option("--N", dkw_N, "sample sizes")->delimiter(',');
  dkw->add_option("--t", dkw_t, "deviation levels")->delimiter(',');
  dkw->add_option("--reps", dkw_reps, "replications");
  dkw->add_option("--seed", dkw_seed, "master seed");
  dkw->add_option("--out", dkw_out, "output directory");

  std::size_t trials = 1000;
  std::uint64_t suite_seed = 1;
  std::string suite_out;
  auto* suite = app.add_subcommand("oracle-suite", "randomized checks against brute force");
  suite->add_option("--trials", trials, "number of random instances");
  suite->add_option("--seed", suite_seed, "master seed");
  suite->add_option("--out", suite_out, "directory for failing instances");

  std::string labeled_path, unlabeled_path, model_path, method = "knn", kernel = "epanechnikov";
  std::size_t k = 0;
  double h = 0.0, b = 1.0, beta = 1.0;
  int degree = -1;
  auto* train = app.add_subcommand("train", "fit a plug-in classifier");
  train->add_option("--labeled", labeled_path, "CSV with x_1..x_d,y")->required()->check(CLI::ExistingFile);
  train->add_option("--unlabeled", unlabeled_path, "CSV with x_1..x_d")->check(CLI::ExistingFile);
  train->add_option("--model", model_path, "output model JSON")->required();
  train->add_option("--estimator", method, "knn | kernel | local_poly");
  train->add_option("--k", k, "neighbours (default ceil(a_n))");
  train->add_option("--bandwidth", h, "bandwidth (default n^{-1/(2beta+d)})");
  train->add_option("--degree", degree, "local polynomial degree (default floor(beta))");
  train->add_option("--kernel", kernel, "epanechnikov | gaussian");
  train->add_option("--beta", beta, "smoothness used for default hyperparameters");
  train->add_option("--b", b, "F-score parameter b");

  std::string queries_path, pred_out;
  auto* predict = app.add_subcommand("predict", "apply a saved classifier");
  predict->add_option("--model", model_path, "model JSON")->required()->check(CLI::ExistingFile);
  predict->add_option("--queries", queries_path, "CSV with x_1..x_d")->required()->check(CLI::ExistingFile);
  predict->add_option("--out", pred_out, "output CSV (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    write_error("usage", e.what());
    return 2;
  }

  try {
    if (*rate) return run_experiment(rate_flags, "excess");
    if (*thr) return run_experiment(thr_flags, "threshold_error");

    if (*dkw) {
      const auto cells = run_dkw_check(dkw_N, dkw_t, dkw_reps, dkw_seed);
      std::filesystem::create_directories(dkw_out);
      std::ofstream csv_out(std::filesystem::path(dkw_out) / "dkw.csv", std::ios::binary);
      write_dkw_csv(csv_out, cells);
      const json j = dkw_to_json(cells);
      std::ofstream(std::filesystem::path(dkw_out) / "dkw.json", std::ios::binary) << j.dump(2) << '\n';
      if (!csv_out) throw IoError("cannot write DKW report");
      std::cout << json{{"all_within", j["all_within"]}}.dump() << '\n';
      return j["all_within"].get<bool>() ? 0 : 3;
    }

    if (*suite) {
      IdentitySuiteOptions opts;
      opts.failure_dir = suite_out;
      const auto r = randomized_identity_suite(trials, suite_seed, opts);
      json j{{"trials", r.trials},
             {"seed", r.seed},
             {"optimality_pass", r.optimality_pass},
             {"identity_pass", r.identity_pass},
             {"scan_pass", r.scan_pass},
             {"gap_bound_pass", r.gap_bound_pass},
             {"mean_threshold_error", r.mean_threshold_error},
             {"threshold_converges", r.threshold_converges},
             {"max_optimality_gap", r.max_optimality_gap},
             {"max_identity_gap", r.max_identity_gap},
             {"failures", r.failures.size()},
             {"passed", r.passed()}};
      std::cout << j.dump(2) << '\n';
      return r.passed() ? 0 : 3;
    }

    if (*train) {
      const LabeledDataset labeled = LabeledDataset::read_csv_file(labeled_path);
      const UnlabeledDataset unlabeled = unlabeled_path.empty()
                                             ? UnlabeledDataset({}, labeled.dim())
                                             : UnlabeledDataset::read_csv_file(unlabeled_path);
      EstimatorSpec spec;
      spec.method = parse_method(method);
      spec.kernel = parse_kernel(kernel);
      if (degree >= 0) spec.degree = degree;
      EstimatorConfig cfg = spec.at(labeled.size(), SmoothnessSpec{beta, 1.0}, labeled.dim());
      if (k > 0) cfg.k = k;
      if (h > 0.0) cfg.h = h;
      const PluginClassifier clf = train_plugin(labeled, unlabeled, cfg, FBetaParams{b, true});
      save_model(clf, model_path);
      std::cout << json{{"theta_hat", clf.theta_hat().value},
                        {"n", clf.provenance().n},
                        {"N", clf.provenance().N},
                        {"augmented", clf.provenance().augmented}}
                       .dump()
                << '\n';
      return 0;
    }

    if (*predict) {
      const PluginClassifier clf = load_model(model_path);
      const UnlabeledDataset q = UnlabeledDataset::read_csv_file(queries_path);
      if (q.dim() != clf.eta_hat().dim()) throw ArgumentError("query dimension differs from model");
      if (pred_out.empty()) {
        write_predictions(std::cout, clf, q.points());
      } else {
        std::ofstream out(pred_out, std::ios::binary);
        if (!out) throw IoError("cannot write " + pred_out);
        write_predictions(out, clf, q.points());
      }
      return 0;
    }
  } catch (const ArgumentError& e) {
    write_error("argument", e.what());
    return 2;
  } catch (const TrainingDegenerate& e) {
    write_error("training_degenerate", e.what());
    return 1;
  } catch (const ConstructionError& e) {
    write_error("construction", e.what());
    return 1;
  } catch (const IoError& e) {
    write_error("io", e.what());
    return 1;
  } catch (const std::exception& e) {
    write_error("internal", e.what());
    return 1;
  }
  return 0;
}
