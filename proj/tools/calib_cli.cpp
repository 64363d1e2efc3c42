// Command-line front end: fit / threshold / eval / synth / curves / setdist.

#include "calib/harness.hpp"

#include <CLI11.hpp>

#include <cstdint>
#include <iostream>
#include <string>
#include <vector>

namespace {

struct RangeArgs {
  std::string dim_range = "15:22";
  std::string sigma_range;  // LOW:HIGH:STEPS
};

calib::FitConstraints parse_constraints(const RangeArgs& r) {
  calib::FitConstraints c;
  if (std::sscanf(r.dim_range.c_str(), "%d:%d", &c.dim_low, &c.dim_high) != 2)
    throw CLI::ValidationError("--dim-range", "expected LOW:HIGH");
  if (std::sscanf(r.sigma_range.c_str(), "%lf:%lf:%d", &c.sigma_low,
                  &c.sigma_high, &c.sigma_steps) != 3)
    throw CLI::ValidationError("--sigma-range", "expected LOW:HIGH:STEPS");
  c.validate();
  return c;
}

std::vector<calib::ThresholdMethod> parse_methods(
    const std::vector<std::string>& names) {
  std::vector<calib::ThresholdMethod> out;
  for (const auto& n : names) out.push_back(calib::threshold_method_from_string(n));
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"class-specific verification threshold calibration"};
  app.require_subcommand(1);

  // ---- fit -------------------------------------------------------------
  auto* fit_cmd = app.add_subcommand(
      "fit", "fit per-class non-central chi-squared models to a distance matrix");
  std::string fit_data, fit_format = "csv", fit_out = "model.json";
  std::string fit_metric = "ncc";
  bool fit_bounded = false;
  RangeArgs fit_ranges{"15:22", "0.5:2.0:50"};
  fit_cmd->add_option("--data", fit_data, "distance matrix file")->required();
  fit_cmd->add_option("--format", fit_format, "csv|json")
      ->check(CLI::IsMember({"csv", "json"}));
  fit_cmd->add_flag("--bounded", fit_bounded,
                    "input distances lie in [0,1); apply the unbounding transform");
  fit_cmd->add_option("--dim-range", fit_ranges.dim_range, "LOW:HIGH");
  fit_cmd->add_option("--sigma-range", fit_ranges.sigma_range, "LOW:HIGH:STEPS")
      ->required();
  fit_cmd->add_option("--metric", fit_metric, "goodness metric")
      ->check(CLI::IsMember({"ncc", "bhattacharyya"}));
  fit_cmd->add_option("--out", fit_out, "output model file");

  // ---- threshold -------------------------------------------------------
  auto* thr_cmd = app.add_subcommand(
      "threshold", "compute thresholds for target FPRs from a fitted model file");
  std::string thr_model, thr_out;
  std::vector<double> thr_fprs;
  std::vector<std::string> thr_methods = {"model", "generic_data", "class_data"};
  thr_cmd->add_option("--model", thr_model, "model file from 'fit'")->required();
  thr_cmd->add_option("--fpr", thr_fprs, "target false positive rate(s)")
      ->required();
  thr_cmd->add_option("--method", thr_methods,
                      "model|generic_data|class_data (repeatable)");
  thr_cmd->add_option("--out", thr_out, "output model file (default: in place)");

  // ---- eval ------------------------------------------------------------
  auto* eval_cmd = app.add_subcommand(
      "eval", "evaluate stored thresholds on held-out query distances");
  std::string eval_model, eval_queries, eval_json, eval_csv;
  eval_cmd->add_option("--model", eval_model, "model file with thresholds")
      ->required();
  eval_cmd->add_option("--queries", eval_queries, "query distance CSV")->required();
  eval_cmd->add_option("--out", eval_json, "write JSON report");
  eval_cmd->add_option("--csv", eval_csv, "write CSV report");

  // ---- synth -----------------------------------------------------------
  auto* synth_cmd = app.add_subcommand(
      "synth", "generate a synthetic population and export distance files");
  calib::EmbeddingConfig synth_cfg;
  int synth_queries = 6;
  std::uint64_t synth_seed = 0;
  std::string synth_train = "train.csv", synth_qout = "queries.csv";
  synth_cmd->add_option("--classes", synth_cfg.n_classes, "number of classes");
  synth_cmd->add_option("--dim", synth_cfg.dim, "embedding dimensionality");
  synth_cmd->add_option("--sigma-between", synth_cfg.sigma_between,
                        "class-center standard deviation");
  synth_cmd->add_option("--sigma-within", synth_cfg.sigma_within,
                        "within-class standard deviation");
  synth_cmd->add_option("--queries", synth_queries, "query patterns per class");
  synth_cmd->add_option("--seed", synth_seed, "random seed");
  synth_cmd->add_option("--out", synth_train, "training distance matrix CSV");
  synth_cmd->add_option("--out-queries", synth_qout, "query distance CSV");

  // ---- curves ----------------------------------------------------------
  auto* curves_cmd = app.add_subcommand(
      "curves", "export empirical vs model CDF curves for one class");
  std::string curves_model, curves_class, curves_out = "curves.csv";
  curves_cmd->add_option("--model", curves_model, "model file")->required();
  curves_cmd->add_option("--class-id", curves_class, "class id")->required();
  curves_cmd->add_option("--out", curves_out, "output CSV");

  // ---- setdist ---------------------------------------------------------
  auto* setdist_cmd = app.add_subcommand(
      "setdist", "mutual-subspace distances between pattern-set files");
  std::vector<std::string> setdist_files;
  int setdist_dp = 6;
  bool setdist_unbound = false;
  std::string setdist_out;
  setdist_cmd->add_option("--sets", setdist_files, "pattern-set files (>= 2)")
      ->required()
      ->expected(2, -1);
  setdist_cmd->add_option("--dp", setdist_dp, "subspace dimension");
  setdist_cmd->add_flag("--unbound", setdist_unbound,
                        "apply the unbounding transform to the distances");
  setdist_cmd->add_option("--out", setdist_out, "output CSV (default stdout)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*fit_cmd) {
      calib::CalibrationRun run;
      run.constraints = parse_constraints(fit_ranges);
      run.methods = {calib::ThresholdMethod::model};
      run.data = calib::load_distances(fit_data, fit_format, fit_bounded);
      run.bounded = fit_bounded;
      run.metric = fit_metric == "ncc" ? calib::GoodnessMetric::ncc
                                       : calib::GoodnessMetric::bhattacharyya;
      auto mf = calib::calibrate(run);
      int failed = 0;
      for (const auto& c : mf.classes)
        if (!c.fitted) ++failed;
      calib::save_model(mf, fit_out);
      std::cout << "fitted " << (mf.classes.size() - failed) << "/"
                << mf.classes.size() << " classes -> " << fit_out << "\n";
      if (failed > 0)
        std::cerr << "warning: " << failed << " class(es) failed to fit\n";
    } else if (*thr_cmd) {
      auto mf = calib::load_model(thr_model);
      calib::CalibrationRun run;
      run.constraints = mf.constraints;
      run.target_fprs = thr_fprs;
      run.methods = parse_methods(thr_methods);
      run.bounded = mf.bounded;
      for (const auto& c : mf.classes) run.data.push_back(c.distances);
      auto out = calib::calibrate(run);
      // keep the fits already computed by 'fit' rather than re-running the grid
      bool want_model = out.has_method(calib::ThresholdMethod::model);
      for (std::size_t i = 0; i < out.classes.size(); ++i) {
        out.classes[i].fitted = mf.classes[i].fitted;
        out.classes[i].fit_error = mf.classes[i].fit_error;
        if (want_model && out.classes[i].fitted) {
          auto& v = out.classes[i].thresholds[calib::ThresholdMethod::model];
          v.clear();
          for (double f : out.target_fprs)
            v.push_back(calib::model_threshold(*out.classes[i].fitted, f));
        }
      }
      const std::string dest = thr_out.empty() ? thr_model : thr_out;
      calib::save_model(out, dest);
      std::cout << "thresholds for " << thr_fprs.size() << " target FPR(s) -> "
                << dest << "\n";
    } else if (*eval_cmd) {
      auto mf = calib::load_model(eval_model);
      auto qs = calib::load_queries_csv(eval_queries);
      auto rep = calib::run_evaluation(mf, qs);
      std::cout << calib::report_table(rep);
      if (!eval_json.empty()) {
        std::ofstream out(eval_json);
        out << calib::report_to_json(rep).dump(2) << "\n";
      }
      if (!eval_csv.empty()) {
        std::ofstream out(eval_csv);
        out << calib::report_to_csv(rep);
      }
    } else if (*synth_cmd) {
      synth_cfg.seed = synth_seed;
      auto pop = calib::generate(synth_cfg, synth_queries);
      calib::write_training_matrix_csv(pop, synth_train);
      calib::write_queries_csv(pop, synth_qout);
      std::cout << "wrote " << synth_train << " and " << synth_qout << "\n";
    } else if (*curves_cmd) {
      auto mf = calib::load_model(curves_model);
      calib::emit_curves(mf, curves_class, curves_out);
      std::cout << "wrote " << curves_out << "\n";
    } else if (*setdist_cmd) {
      std::vector<calib::SubspaceBasis> bases;
      for (const auto& f : setdist_files)
        bases.push_back(calib::pca_basis(calib::load_pattern_set(f, f), setdist_dp));
      std::ostringstream os;
      os.precision(17);
      for (std::size_t i = 0; i < bases.size(); ++i) {
        for (std::size_t j = 0; j < bases.size(); ++j) {
          double d = i == j ? 0.0 : calib::subspace_distance(bases[i], bases[j]);
          if (setdist_unbound) d = calib::unbound_transform(d);
          os << (j ? "," : "") << d;
        }
        os << "\n";
      }
      if (setdist_out.empty()) {
        std::cout << os.str();
      } else {
        std::ofstream out(setdist_out);
        out << os.str();
      }
    }
  } catch (const std::exception& ex) {
    std::cerr << "error: " << ex.what() << "\n";
    return 1;
  }
  return 0;
}
