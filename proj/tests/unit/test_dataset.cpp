#include "temp_dir.hpp"

#include "wids/config.hpp"
#include "wids/csv.hpp"
#include "wids/dataset.hpp"
#include "wids/preprocess.hpp"

#include <doctest.h>

#include <cmath>
#include <sstream>

using namespace wids;

TEST_CASE("label names") {
  CHECK(parse_label("Normal") == ClassLabel::normal);
  CHECK(parse_label("Krook") == ClassLabel::kr00k);
  CHECK(parse_label("Kr00k") == ClassLabel::kr00k);
  CHECK(parse_label("2") == ClassLabel::krack);
  CHECK_FALSE(parse_label("Deauth").has_value());
  CHECK(label_name(ClassLabel::krack) == "Krack");
}

TEST_CASE("CSV record splitting follows RFC 4180 quoting") {
  std::vector<std::string> f;
  CHECK(csv::split_record(R"(a,"b,c","d ""q""",)", f));
  REQUIRE(f.size() == 4);
  CHECK(f[1] == "b,c");
  CHECK(f[2] == "d \"q\"");
  CHECK(f[3].empty());
  CHECK_FALSE(csv::split_record(R"(a,"open)", f));
  CHECK(csv::escape("x,y") == "\"x,y\"");
  CHECK(csv::escape("plain") == "plain");
  CHECK(std::stod(csv::format_double(0.1)) == 0.1);
}

TEST_CASE("directory ingestion intersects columns and logs drops") {
  TempDir dir;
  dir.write("a.csv", "x,y,extra,Label\n1,2,9,Normal\n3,,9,Kr00k\n");
  dir.write("b.csv", "y,x,Label\n5,6,Krack\n7,8,Deauth\n");
  const auto r = load_csv_dir(dir.path(), LabelFromColumn{"Label"});
  CHECK(r.table.column_names() == std::vector<std::string>{"x", "y"});
  CHECK(r.table.rows() == 3);
  CHECK(r.table.labels() == std::vector<ClassLabel>{ClassLabel::normal, ClassLabel::kr00k, ClassLabel::krack});
  CHECK(r.table.values()(2, 0) == 6.0);
  CHECK(std::isnan(r.table.values()(1, 1)));
  CHECK(r.table.column(1).missing_fraction == doctest::Approx(1.0 / 3));
  bool dropped = false, skipped = false;
  for (const auto& line : r.provenance) {
    dropped |= line.rfind("DROP ", 0) == 0 && line.find("extra") != std::string::npos;
    skipped |= line.rfind("SKIP ", 0) == 0 && line.find("unknown-label") != std::string::npos;
  }
  CHECK(dropped);
  CHECK(skipped);
}

TEST_CASE("ingestion errors") {
  TempDir dir;
  CHECK_THROWS_AS(load_csv_dir(dir.path(), ClassLabel::normal), IngestError);
  CHECK_THROWS_AS(load_csv_dir(dir / "nope", ClassLabel::normal), IngestError);
  dir.write("a.csv", "x,y\n1,2\n");
  CHECK_THROWS_AS(load_csv_dir(dir.path(), LabelFromColumn{"Label"}), IngestError);
  const auto fixed = load_csv_dir(dir.path(), ClassLabel::krack);
  CHECK(fixed.table.labels()[0] == ClassLabel::krack);

  TempDir bad;
  std::string content = "x,y\n";
  for (int i = 0; i < 50; ++i) content += "1,2\n";
  content += "\"broken,3\n";
  bad.write("a.csv", content);
  CHECK_THROWS_AS(load_csv_dir(bad.path(), ClassLabel::normal), IngestError);
}

TEST_CASE("missing values: drop above threshold, impute -1 below") {
  Matrix x(4, 2);
  const double nan = std::nan("");
  x << 1, nan, nan, nan, 3, nan, 4, 5;
  const auto t = FeatureTable::from_matrix(x);
  const auto c = clean_missing(t, 0.5);
  REQUIRE(c.cols() == 1);
  CHECK(c.column(0).name == "c0");
  CHECK(c.values()(1, 0) == -1.0);
  CHECK(clean_missing(c, 0.5) == c);
  CHECK_THROWS_AS(clean_missing(t, 0.0), CleanError);
  CHECK_THROWS_AS(clean_missing(FeatureTable::from_matrix(Matrix::Constant(2, 1, nan)), 0.5), CleanError);
}

TEST_CASE("time-of-day parsing") {
  auto t = parse_time_of_day("2020-07-01 13:45:10.123");
  REQUIRE(t);
  CHECK(t->hour == 13);
  CHECK(t->minute == 45);
  CHECK(t->second == 10);
  t = parse_time_of_day("2020-07-01T01:02:03+05:00");
  REQUIRE(t);
  CHECK(t->hour == 1);
  t = parse_time_of_day("86399");
  REQUIRE(t);
  CHECK(t->hour == 23);
  CHECK(t->second == 59);
  CHECK(parse_time_of_day("07:08:09")->minute == 8);
  CHECK_FALSE(parse_time_of_day("yesterday").has_value());
  CHECK_FALSE(parse_time_of_day("25:00:00").has_value());
}

TEST_CASE("timestamp decomposition") {
  TempDir dir;
  dir.write("a.csv", "frame.time,v,Label\n2020-01-01 10:20:30,1,Normal\n,2,Krack\n");
  auto t = load_csv_dir(dir.path(), LabelFromColumn{}).table;
  const auto d = decompose_timestamps(t, "frame.time");
  CHECK(d.column_names() == std::vector<std::string>{"frame.time.hour", "frame.time.minute", "frame.time.second", "v"});
  CHECK(d.values()(0, 1) == 20);
  CHECK(d.values()(1, 0) == -1);
  CHECK_THROWS_AS(decompose_timestamps(t, "nope"), CleanError);
}

TEST_CASE("categorical encoding: one-hot for small sets, codes otherwise") {
  TempDir dir;
  dir.write("a.csv", "proto,id,Label\ntcp,a,Normal\nudp,b,Normal\ntcp,c,Kr00k\n,d,Krack\n");
  auto t = load_csv_dir(dir.path(), LabelFromColumn{}).table;
  const auto e = encode_categoricals(t, 2);
  CHECK(e.column_names() == std::vector<std::string>{"proto=tcp", "proto=udp", "id"});
  CHECK(e.values()(0, 0) == 1);
  CHECK(e.values()(3, 0) == 0);
  CHECK(e.values()(3, 1) == 0);
  CHECK(e.values()(2, 2) == 2);
  REQUIRE(e.column(2).encoding_map);
  CHECK(e.column(2).encoding_map->size() == 4);
  CHECK(e.is_clean());

  // Apply-time: unseen values map to the reserved code or all-zero indicators.
  TempDir other;
  other.write("b.csv", "proto,id,Label\nicmp,zz,Normal\nudp,b,Normal\n");
  const auto raw = load_csv_dir(other.path(), LabelFromColumn{}).table;
  const auto a = apply_encoding(e.columns(), raw);
  CHECK(a.values()(0, 0) == 0);
  CHECK(a.values()(0, 1) == 0);
  CHECK(a.values()(0, 2) == 4);
  CHECK(a.values()(1, 1) == 1);
  CHECK(a.values()(1, 2) == 1);
}

TEST_CASE("synthetic benchmark shape and determinism") {
  const auto spec = benchmark_synth_spec();
  CHECK(spec.n_per_class == 2000);
  CHECK(spec.dim == 20);
  CHECK(spec.label_noise == 0.1);
  SynthSpec small = spec;
  small.n_per_class = 50;
  const auto a = synthesize_dataset(small, 3);
  CHECK(a.rows() == 150);
  CHECK(a.cols() == 26);
  CHECK(a == synthesize_dataset(small, 3));
  CHECK_FALSE(a == synthesize_dataset(small, 4));
  // Collinear columns are exact sums of two informative ones.
  const auto& x = a.values();
  bool found = false;
  for (Eigen::Index p = 0; p < 20 && !found; ++p)
    for (Eigen::Index q = p + 1; q < 20 && !found; ++q)
      found = (x.col(20) - x.col(p) - x.col(q)).cwiseAbs().maxCoeff() < 1e-12;
  CHECK(found);
  small.dim = 1;
  CHECK_THROWS_AS(synthesize_dataset(small, 0), SpecError);
}

TEST_CASE("numeric CSV round trip") {
  TempDir dir;
  SynthSpec s = benchmark_synth_spec();
  s.n_per_class = 10;
  const auto t = synthesize_dataset(s, 1);
  write_csv(t, dir / "t.csv");
  const auto back = read_numeric_csv(dir / "t.csv");
  CHECK(back.values() == t.values());
  CHECK(back.labels() == t.labels());
  CHECK(back.column_names() == t.column_names());
}

TEST_CASE("feature engineering fits on train and replays at inference") {
  TempDir dir;
  std::ostringstream csv;
  csv << "frame.time,radiotap.dbm_antsignal,a,b,proto,Label\n";
  for (int i = 0; i < 90; ++i) {
    const int c = i % 3;
    csv << "2021-01-01 0" << c << ":00:0" << (i % 10) << ',' << (i == 5 ? 500 : -40 - c) << ',' << i % 7 << ','
        << c * 2 + (i % 2) << ',' << (c == 0 ? "tcp" : "udp") << ',' << label_name(label_from_index(static_cast<std::size_t>(c))) << '\n';
  }
  dir.write("x.csv", csv.str());
  const auto raw = load_csv_dir(dir.path(), LabelFromColumn{}).table;
  FeatureEngineeringConfig cfg;
  cfg.importance_k = 4;
  const auto prepared = prepare_table(raw, cfg);
  CHECK(prepared.is_clean());
  const auto fit = fit_feature_engineering(prepared, cfg, 1);
  CHECK(fit.report.vif_run);
  CHECK(fit.report.importance_run);
  const auto& pre = fit.preprocessor;
  CHECK(pre.selected().size() == 4);
  REQUIRE(pre.clip.size() <= 1);
  const auto from_raw = pre.apply(raw);
  const auto from_prepared = pre.apply(prepared);
  CHECK(from_raw.values() == from_prepared.values());
  CHECK(from_raw.column_names() == pre.selected());
  CHECK(to_json(fit.report.vif).contains("removed"));
  CHECK(importance_to_csv(fit.report.importance).rfind("column,importance", 0) == 0);
}

TEST_CASE("run config parsing is strict") {
  using nlohmann::json;
  const auto ok = run_config_from_json(json{{"config_version", 1}, {"synth", to_json(benchmark_synth_spec())}});
  CHECK(ok.synth.has_value());
  CHECK(ok.pipeline.base_learners.size() == 5);
  CHECK_THROWS_AS(run_config_from_json(json{{"config_version", 2}}), ConfigError);
  CHECK_THROWS_AS(run_config_from_json(json{{"config_version", 1}, {"typo", 1}}), ConfigError);
  CHECK_THROWS_AS(run_config_from_json(json{{"config_version", 1}, {"train_fraction", 1.0}}), ConfigError);
  CHECK_THROWS_AS(run_config_from_json(json{{"config_version", 1}, {"table", "t.bin"},
                                            {"synth", to_json(benchmark_synth_spec())}}),
                  ConfigError);
  CHECK_THROWS_AS(run_config_from_json(json{{"config_version", 1}, {"pipeline", {{"folds", 1}}}}), ConfigError);
  CHECK_THROWS_AS(
      run_config_from_json(json{{"config_version", 1}, {"pipeline", {{"base_learners", {{{"kind", "knn"}, {"params", {{"k", -1}}}}}}}}}),
      ConfigError);
  const auto meta = run_config_from_json(json{{"config_version", 1}, {"pipeline", {{"meta", {{"kind", "logistic"}}}}}});
  CHECK(meta.pipeline.meta.kind == MetaKind::logistic);
  CHECK(meta.pipeline.meta.params.empty());

  // to_json -> from_json is a fixed point.
  const auto again = run_config_from_json(to_json(ok));
  CHECK(to_json(again) == to_json(ok));
}

TEST_CASE("config paths resolve against the config file") {
  TempDir dir;
  dir.write("sub/run.json", R"({"config_version": 1, "sources": [{"dir": "data", "label": "Krack"}]})");
  const auto c = load_run_config(dir / "sub/run.json");
  REQUIRE(c.sources.size() == 1);
  CHECK(c.sources[0].dir == dir / "sub/data");
  CHECK(std::get<ClassLabel>(c.sources[0].label) == ClassLabel::krack);
  dir.write("bad.json", "{not json");
  CHECK_THROWS_AS(load_run_config(dir / "bad.json"), ConfigError);
  CHECK_THROWS_AS(load_run_config(dir / "missing.json"), ConfigError);
}
