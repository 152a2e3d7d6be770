#ifdef WIDS_HAVE_CLI

#include "temp_dir.hpp"

#include "cli.hpp"

#include <doctest.h>
#include <nlohmann/json.hpp>

#include <sstream>

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run run(std::vector<std::string> args) {
  args.insert(args.begin(), "wids");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = wids::cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

constexpr const char* kConfig = R"({
  "config_version": 1,
  "synth": {"n_per_class": 60, "dim": 6, "separation": 3.0, "within_std": 1.0,
            "anisotropy": 0.0, "collinear_fraction": 0.3, "label_noise": 0.0},
  "features": {"vif_enabled": true, "importance_enabled": false},
  "pipeline": {
    "folds": 3, "runs": 2, "seed": 3,
    "base_learners": [
      {"kind": "knn"},
      {"kind": "random_forest", "params": {"n_trees": 5}},
      {"kind": "gradient_boosted_trees", "params": {"n_rounds": 5}},
      {"kind": "linear_svm", "params": {"epochs": 5}},
      {"kind": "mlp", "params": {"epochs": 5, "hidden": 8}}
    ],
    "meta": {"kind": "gradient_boosted_trees", "params": {"n_rounds": 10, "max_depth": 2, "eta": 0.1}}
  }
})";

std::size_t count_lines(const std::string& s) {
  std::size_t n = 0;
  for (char c : s) n += c == '\n';
  return n;
}

}  // namespace

TEST_CASE("usage errors exit with 2") {
  CHECK(run({}).code == 2);
  CHECK(run({"frobnicate"}).code == 2);
  CHECK(run({"train"}).code == 2);
  CHECK(run({"train", "--config", "/nonexistent/x.json", "--out", "m"}).code == 2);
  CHECK(run({"pca-sweep", "--config", "/nonexistent.json", "--thresholds", "2"}).code == 2);
  const auto help = run({"--help"});
  CHECK(help.code == 0);
  CHECK(help.out.find("train") != std::string::npos);
}

TEST_CASE("operational errors exit with 1") {
  TempDir dir;
  dir.write("bad.json", R"({"config_version": 9})");
  const auto r = run({"train", "--config", (dir / "bad.json").string(), "--out", (dir / "m.wids").string()});
  CHECK(r.code == 1);
  CHECK(r.err.rfind("wids: error: ", 0) == 0);
  CHECK_FALSE(std::filesystem::exists(dir / "m.wids"));
  dir.write("junk.wids", "not a bundle");
  dir.write("rows.csv", "c0,Label\n1,Normal\n");
  CHECK(run({"eval", "--model", (dir / "junk.wids").string(), "--data", (dir / "rows.csv").string()}).code == 1);
}

TEST_CASE("train, eval and predict") {
  TempDir dir;
  const auto cfg = dir.write("run.json", kConfig).string();
  const auto model = (dir / "m.wids").string();
  const auto test = (dir / "test.bin").string();
  const auto report = (dir / "report.json").string();
  const auto tr = run({"train", "--config", cfg, "--out", model, "--report", report, "--test-out", test});
  REQUIRE(tr.code == 0);
  CHECK(tr.out.find("accuracy=") != std::string::npos);

  const auto ev = run({"eval", "--model", model, "--data", test});
  REQUIRE(ev.code == 0);
  const auto j = nlohmann::json::parse(ev.out);
  CHECK(j["schema_version"] == 1);
  CHECK(j["accuracy"].get<double>() > 0.8);
  // Evaluating the raw held-out rows through the bundle reproduces the
  // training-time report.
  const auto saved = nlohmann::json::parse(slurp(report));
  CHECK(saved["accuracy"] == j["accuracy"]);
  CHECK(saved["confusion"] == j["confusion"]);

  const auto csv = run({"eval", "--model", model, "--data", test, "--csv", "--roc", (dir / "roc.csv").string()});
  REQUIRE(csv.code == 0);
  CHECK(csv.out.rfind("metric,class,value", 0) == 0);
  CHECK(slurp(dir / "roc.csv").rfind("class,threshold,tpr,fpr", 0) == 0);

  const auto pr = run({"predict", "--model", model, "--in", test, "--out", (dir / "p.csv").string()});
  REQUIRE(pr.code == 0);
  const auto preds = slurp(dir / "p.csv");
  CHECK(preds.rfind("label,p0,p1,p2\r\n", 0) == 0);
  const auto n = std::stoul(pr.out.substr(pr.out.find('=') + 1));
  std::size_t total = 0;
  for (const auto& row : j["confusion"]["counts"])
    for (const auto& v : row) total += v.get<std::size_t>();
  CHECK(n == total);
  CHECK(count_lines(preds) == 1 + n);
}

TEST_CASE("train output is reproducible byte for byte") {
  TempDir dir;
  const auto cfg = dir.write("run.json", kConfig).string();
  REQUIRE(run({"train", "--config", cfg, "--out", (dir / "a.wids").string(), "--report", (dir / "a.json").string()}).code == 0);
  REQUIRE(run({"train", "--config", cfg, "--out", (dir / "b.wids").string(), "--report", (dir / "b.json").string()}).code == 0);
  CHECK(slurp(dir / "a.wids") == slurp(dir / "b.wids"));
  CHECK(slurp(dir / "a.json") == slurp(dir / "b.json"));
}

TEST_CASE("experiment subcommands print CSV tables") {
  TempDir dir;
  const auto cfg = dir.write("run.json", kConfig).string();
  const auto ab = run({"ablate", "--config", cfg, "--json", (dir / "ab.json").string()});
  REQUIRE(ab.code == 0);
  CHECK(ab.out.rfind("configuration,accuracy,accuracy_std", 0) == 0);
  CHECK(count_lines(ab.out) == 5);
  CHECK(nlohmann::json::parse(slurp(dir / "ab.json"))["rows"].size() == 4);

  const auto pca = run({"pca-sweep", "--config", cfg, "--thresholds", "0.5,0.9,0.99"});
  REQUIRE(pca.code == 0);
  CHECK(count_lines(pca.out) == 4);

  const auto noise = run({"noise-sweep", "--config", cfg, "--sigmas", "0,0.1"});
  REQUIRE(noise.code == 0);
  CHECK(noise.out.rfind("sigma,accuracy,macro_f1,macro_fpr", 0) == 0);

  const auto base = run({"baseline", "--config", cfg});
  REQUIRE(base.code == 0);
  CHECK(count_lines(base.out) == 6);
  CHECK(base.out.find("\nknn,") != std::string::npos);
}

TEST_CASE("synth and ingest write tables") {
  TempDir dir;
  dir.write("spec.json", R"({"n_per_class": 20, "dim": 4, "separation": 2.0, "within_std": 1.0,
                              "anisotropy": 0.0, "collinear_fraction": 0.0, "label_noise": 0.0})");
  const auto s = run({"synth", "--spec", (dir / "spec.json").string(), "--seed", "2", "--out", (dir / "s.csv").string()});
  REQUIRE(s.code == 0);
  CHECK(count_lines(slurp(dir / "s.csv")) == 61);

  dir.write("a/x.csv", "frame.time,v,proto,Label\n2020-01-01 01:02:03,1,tcp,Normal\n2020-01-01 01:02:04,,udp,Krack\n");
  dir.write("b/y.csv", "v,frame.time,proto,other\n3,2020-01-01 05:00:00,tcp,1\n");
  const auto in = run({"ingest", "--data-dir", (dir / "a").string(), "--data-dir", (dir / "b").string(), "--label",
                       "", "--out", (dir / "t.csv").string()});
  CHECK(in.code == 1);  // directory b has no Label column
  const auto fixed = run({"ingest", "--data-dir", (dir / "b").string(), "--label", "Kr00k", "--out",
                          (dir / "t.bin").string()});
  REQUIRE(fixed.code == 0);
  CHECK(fixed.out.find("kr00k=1") != std::string::npos);
}

#endif
