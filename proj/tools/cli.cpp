#include "cli.hpp"

#include "experiment.hpp"
#include "wids/csv.hpp"
#include "wids/hyper_search.hpp"
#include "wids/persistence.hpp"

#include <CLI11.hpp>

#include <cstring>
#include <fstream>
#include <ostream>
#include <sstream>

namespace wids::cli {

namespace {

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::vector<std::byte> bytes(text.size());
  std::memcpy(bytes.data(), text.data(), text.size());
  write_file_atomic(path, bytes);
}

LabelSource label_source(const std::string& label, const std::string& column) {
  if (label.empty()) return LabelFromColumn{column};
  const auto l = parse_label(label);
  if (!l) throw ConfigError("unknown class label '" + label + "'");
  return *l;
}

/// Labelled table from a cache, a numeric CSV or a directory of CSVs.
FeatureTable load_labelled(const std::filesystem::path& path, const std::string& label_column) {
  if (std::filesystem::is_directory(path)) return load_csv_dir(path, LabelFromColumn{label_column}).table;
  if (path.extension() == ".csv") return load_csv_files({path}, LabelFromColumn{label_column}).table;
  return load_table(path, label_column);
}

/// Rows for inference: labels are optional and ignored.
FeatureTable load_unlabelled(const std::filesystem::path& path) {
  if (path.extension() == ".csv") return load_csv_files({path}, ClassLabel::normal).table.without_labels();
  return load_table(path).without_labels();
}

FeatureTable engineered(const ModelBundle& b, const FeatureTable& t) {
  return b.preprocessor ? b.preprocessor->apply(t) : t;
}

std::string metric_row(const std::string& name, const EvalReport& r) {
  std::ostringstream out;
  out << name << ',' << csv::format_double(r.accuracy) << ',' << csv::format_double(r.macro_precision) << ','
      << csv::format_double(r.macro_recall) << ',' << csv::format_double(r.macro_f1) << ','
      << csv::format_double(r.macro_fpr);
  return out.str();
}

/// Small per-learner grids for the optional baseline search.
ParamSpace default_space(LearnerKind kind) {
  switch (kind) {
    case LearnerKind::knn: return {{"k", {3, 5, 7}}};
    case LearnerKind::random_forest: return {{"max_depth", {8, 16}}};
    case LearnerKind::gradient_boosted_trees: return {{"max_depth", {3, 6}}};
    case LearnerKind::linear_svm: return {{"lambda", {1e-4, 1e-3}}};
    case LearnerKind::mlp: return {{"hidden", {32, 64}}};
    case LearnerKind::logistic: return {{"lambda", {1e-4, 1e-3}}};
  }
  return {};
}

int cmd_ingest(const std::vector<std::string>& dirs, const std::string& label, const std::string& label_column,
               double drop_threshold, const std::filesystem::path& out_path, std::ostream& out, std::ostream& err) {
  std::vector<DataSource> sources;
  for (const auto& d : dirs) sources.push_back({d, label_source(label, label_column)});
  std::vector<std::string> provenance;
  FeatureTable t = load_sources(sources, &provenance);
  for (const auto& line : provenance) err << line << '\n';
  FeatureEngineeringConfig cfg;
  cfg.drop_threshold = drop_threshold;
  t = prepare_table(t, cfg);
  if (out_path.extension() == ".csv") {
    std::ostringstream text;
    write_csv(t, text);
    write_text(out_path, text.str());
  } else {
    save_table(t, out_path);
  }
  const auto counts = class_counts(t.labels());
  out << "rows=" << t.rows() << " columns=" << t.cols() << " normal=" << counts[0] << " kr00k=" << counts[1]
      << " krack=" << counts[2] << '\n';
  return 0;
}

int cmd_synth(const std::string& spec_path, std::uint64_t seed, const std::filesystem::path& out_path,
              std::ostream& out) {
  SynthSpec spec = benchmark_synth_spec();
  if (!spec_path.empty()) {
    std::ifstream in(spec_path);
    if (!in) throw ConfigError("cannot open synth spec " + spec_path);
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
      throw ConfigError(std::string("synth spec is not valid JSON: ") + e.what());
    }
    spec = synth_spec_from_json(j);
  }
  const auto t = synthesize_dataset(spec, seed);
  if (out_path.extension() == ".csv") {
    std::ostringstream text;
    write_csv(t, text);
    write_text(out_path, text.str());
  } else {
    save_table(t, out_path);
  }
  out << "rows=" << t.rows() << " columns=" << t.cols() << '\n';
  return 0;
}

int cmd_train(const std::filesystem::path& config_path, const std::filesystem::path& model_path,
              const std::string& report_path, const std::string& test_out, std::ostream& out, std::ostream& err) {
  const RunConfig c = load_run_config(config_path);
  const Experiment e = prepare_experiment(c, err);
  auto result = train_pipeline2(e.train, e.test, c.pipeline);
  save_model(ModelBundle{std::move(result.model), e.engineering.preprocessor, to_json(c)}, model_path);
  if (!report_path.empty()) write_text(report_path, to_json(result.report).dump(2) + "\n");
  if (!test_out.empty()) save_table(e.test_prepared, test_out);
  out << "accuracy=" << csv::format_double(result.report.accuracy)
      << " macro_f1=" << csv::format_double(result.report.macro_f1)
      << " macro_fpr=" << csv::format_double(result.report.macro_fpr)
      << " bytes=" << std::filesystem::file_size(model_path) << '\n';
  return 0;
}

int cmd_baseline(const std::filesystem::path& config_path, bool search, const std::string& search_mode,
                 std::ostream& out, std::ostream& err) {
  const RunConfig c = load_run_config(config_path);
  const Experiment e = prepare_experiment(c, err);
  std::vector<LearnerSpec> specs = c.pipeline.base_learners;
  if (search) {
    const auto scaler = fit_standardizer(e.train);
    const auto xs = apply_standardizer(scaler, e.train);
    const auto folds = stratified_kfold(xs, c.pipeline.folds, c.pipeline.seed);
    for (auto& s : specs) {
      SearchOptions opt;
      opt.mode = search_mode == "randomized" ? SearchMode::randomized : SearchMode::grid;
      opt.n_draws = 4;
      opt.metric = "macro_f1";
      opt.seed = c.pipeline.seed;
      const auto r = hyper_search(s, default_space(s.kind), opt, xs, folds);
      err << "search " << kind_name(s.kind) << " best macro_f1=" << csv::format_double(r.best_score) << '\n';
      s = r.best;
    }
  }
  const auto reports = train_pipeline1(e.train, e.test, specs, c.pipeline);
  out << "learner,accuracy,macro_precision,macro_recall,macro_f1,macro_fpr,cv_accuracy_mean,cv_accuracy_std\r\n";
  for (std::size_t j = 0; j < reports.size(); ++j) {
    const auto cv = cross_validate(specs[j], e.train, c.pipeline.folds, c.pipeline.seed);
    out << metric_row(std::string(kind_name(reports[j].kind)), reports[j].report) << ','
        << csv::format_double(cv.fold_stats.at("accuracy").mean) << ','
        << csv::format_double(cv.fold_stats.at("accuracy").std) << "\r\n";
  }
  return 0;
}

int cmd_eval(const std::filesystem::path& model_path, const std::filesystem::path& data_path,
             const std::string& label_column, bool as_csv, const std::string& roc_path, std::ostream& out) {
  const ModelBundle b = load_model(model_path);
  const FeatureTable t = load_labelled(data_path, label_column);
  const auto p = predict(b.model, engineered(b, t));
  const auto report = evaluate(t.labels(), p.probabilities);
  if (!roc_path.empty()) write_text(roc_path, roc_to_csv(roc_curve(t.labels(), p.probabilities)));
  if (as_csv) {
    out << to_csv(report);
  } else {
    out << to_json(report).dump(2) << '\n';
  }
  return 0;
}

int cmd_ablate(const std::filesystem::path& config_path, const std::string& json_path, std::ostream& out,
               std::ostream& err) {
  const RunConfig c = load_run_config(config_path);
  const Experiment e = prepare_experiment(c, err);
  const auto rows = run_ablation(e.train, e.test, c.pipeline);
  if (!json_path.empty()) write_text(json_path, ablation_to_json(rows).dump(2) + "\n");
  out << ablation_to_csv(rows);
  return 0;
}

int cmd_pca_sweep(const std::filesystem::path& config_path, std::vector<double> thresholds, std::ostream& out,
                  std::ostream& err) {
  const RunConfig c = load_run_config(config_path);
  if (!std::is_sorted(thresholds.begin(), thresholds.end())) throw ConfigError("thresholds must be ascending");
  const Experiment e = prepare_experiment(c, err);
  out << "threshold,components,accuracy,macro_f1,macro_fpr\r\n";
  for (double th : thresholds) {
    PipelineConfig p = c.pipeline;
    p.use_pca = true;
    p.pca_threshold = th;
    const auto r = train_pipeline2(e.train, e.test, p);
    out << csv::format_double(th) << ',' << r.model.transforms().pca->retained << ','
        << csv::format_double(r.report.accuracy) << ',' << csv::format_double(r.report.macro_f1) << ','
        << csv::format_double(r.report.macro_fpr) << "\r\n";
  }
  return 0;
}

int cmd_noise_sweep(const std::filesystem::path& config_path, const std::vector<double>& sigmas, std::ostream& out,
                    std::ostream& err) {
  const RunConfig c = load_run_config(config_path);
  const Experiment e = prepare_experiment(c, err);
  out << "sigma,accuracy,macro_f1,macro_fpr\r\n";
  for (double sigma : sigmas) {
    if (!(sigma >= 0.0)) throw ConfigError("sigma must be >= 0");
    PipelineConfig p = c.pipeline;
    p.use_noise = true;
    p.sigma = sigma;
    const auto r = train_pipeline2(e.train, e.test, p);
    out << csv::format_double(sigma) << ',' << csv::format_double(r.report.accuracy) << ','
        << csv::format_double(r.report.macro_f1) << ',' << csv::format_double(r.report.macro_fpr) << "\r\n";
  }
  return 0;
}

int cmd_predict(const std::filesystem::path& model_path, const std::filesystem::path& in_path,
                const std::filesystem::path& out_path, std::ostream& out) {
  const ModelBundle b = load_model(model_path);
  const FeatureTable t = load_unlabelled(in_path);
  const auto p = predict(b.model, engineered(b, t));
  std::ostringstream text;
  text << "label,p0,p1,p2\r\n";
  for (std::size_t i = 0; i < p.labels.size(); ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    text << label_name(p.labels[i]) << ',' << csv::format_double(p.probabilities(r, 0)) << ','
         << csv::format_double(p.probabilities(r, 1)) << ',' << csv::format_double(p.probabilities(r, 2)) << "\r\n";
  }
  write_text(out_path, text.str());
  out << "rows=" << p.labels.size() << '\n';
  return 0;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Wireless intrusion detection: stacked ensemble over Normal, Kr00k and Krack traffic", "wids"};
  app.require_subcommand(1);

  std::string config, model, data, in, out_path, report, test_out, json_path, roc, spec, label, label_column = "Label";
  std::vector<std::string> dirs;
  std::vector<double> thresholds{0.85, 0.90, 0.95};
  std::vector<double> sigmas{0.01, 0.03, 0.05, 0.07};
  double drop_threshold = 0.5;
  std::uint64_t seed = 0;
  bool as_csv = false;
  bool search = false;
  std::string search_mode = "grid";

  auto* ingest = app.add_subcommand("ingest", "Load CSV directories and write a cleaned table");
  ingest->add_option("--data-dir", dirs, "Directory of CSV files (repeatable)")->required();
  ingest->add_option("--out", out_path, "Output table (.csv or binary cache)")->required();
  ingest->add_option("--label", label, "Class for every row instead of a label column");
  ingest->add_option("--label-column", label_column, "Label column name");
  ingest->add_option("--drop-threshold", drop_threshold, "Drop columns with a larger missing fraction");

  auto* train_cmd = app.add_subcommand("train", "Feature engineering, sampling and the stacked ensemble");
  train_cmd->add_option("--config", config, "Run configuration (JSON)")->required()->check(CLI::ExistingFile);
  train_cmd->add_option("--out", out_path, "Model bundle path")->required();
  train_cmd->add_option("--report", report, "Write the held-out EvalReport JSON here");
  train_cmd->add_option("--test-out", test_out, "Write the held-out split (before feature engineering)");

  auto* baseline = app.add_subcommand("baseline", "Independent base learners on standardized features");
  baseline->add_option("--config", config, "Run configuration (JSON)")->required()->check(CLI::ExistingFile);
  baseline->add_flag("--search", search, "Tune each learner by cross-validated search first");
  baseline->add_option("--search-mode", search_mode, "grid or randomized")
      ->check(CLI::IsMember({"grid", "randomized"}));

  auto* eval = app.add_subcommand("eval", "Evaluate a model bundle on labelled rows");
  eval->add_option("--model", model, "Model bundle")->required()->check(CLI::ExistingFile);
  eval->add_option("--data", data, "Table cache, CSV file or CSV directory")->required()->check(CLI::ExistingPath);
  eval->add_option("--label-column", label_column, "Label column name");
  eval->add_flag("--csv", as_csv, "Flat CSV instead of JSON");
  eval->add_option("--roc", roc, "Write ROC points as CSV");

  auto* ablate = app.add_subcommand("ablate", "Pipeline ablation table (CSV)");
  ablate->add_option("--config", config, "Run configuration (JSON)")->required()->check(CLI::ExistingFile);
  ablate->add_option("--json", json_path, "Also write the table as JSON");

  auto* pca_sweep = app.add_subcommand("pca-sweep", "Retained components and accuracy per variance threshold");
  pca_sweep->add_option("--config", config, "Run configuration (JSON)")->required()->check(CLI::ExistingFile);
  pca_sweep->add_option("--thresholds", thresholds, "Comma-separated thresholds")
      ->delimiter(',')
      ->check(CLI::Range(1e-9, 1.0));

  auto* noise_sweep = app.add_subcommand("noise-sweep", "Ensemble metrics per noise level");
  noise_sweep->add_option("--config", config, "Run configuration (JSON)")->required()->check(CLI::ExistingFile);
  noise_sweep->add_option("--sigmas", sigmas, "Comma-separated noise standard deviations")->delimiter(',');

  auto* predict_cmd = app.add_subcommand("predict", "Label rows with a model bundle");
  predict_cmd->add_option("--model", model, "Model bundle")->required()->check(CLI::ExistingFile);
  predict_cmd->add_option("--in", in, "Input rows (CSV or table cache)")->required()->check(CLI::ExistingFile);
  predict_cmd->add_option("--out", out_path, "Output CSV: label,p0,p1,p2")->required();

  auto* synth = app.add_subcommand("synth", "Generate the synthetic benchmark");
  synth->add_option("--spec", spec, "Synthetic spec (JSON); defaults to the bundled benchmark")
      ->check(CLI::ExistingFile);
  synth->add_option("--seed", seed, "Seed");
  synth->add_option("--out", out_path, "Output table (.csv or binary cache)")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return 2;
  }

  try {
    if (*ingest) return cmd_ingest(dirs, label, label_column, drop_threshold, out_path, out, err);
    if (*synth) return cmd_synth(spec, seed, out_path, out);
    if (*train_cmd) return cmd_train(config, out_path, report, test_out, out, err);
    if (*baseline) return cmd_baseline(config, search, search_mode, out, err);
    if (*eval) return cmd_eval(model, data, label_column, as_csv, roc, out);
    if (*ablate) return cmd_ablate(config, json_path, out, err);
    if (*pca_sweep) return cmd_pca_sweep(config, thresholds, out, err);
    if (*noise_sweep) return cmd_noise_sweep(config, sigmas, out, err);
    if (*predict_cmd) return cmd_predict(model, in, out_path, out);
  } catch (const std::exception& e) {
    err << "wids: error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}

}  // namespace wids::cli
