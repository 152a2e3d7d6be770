#include "wids/metrics.hpp"

#include "wids/csv.hpp"
#include "wids/learners.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <thread>

#include <sys/utsname.h>

namespace wids {

std::uint64_t ConfusionMatrix::total() const noexcept {
  std::uint64_t s = 0;
  for (const auto& row : counts) s += std::accumulate(row.begin(), row.end(), std::uint64_t{0});
  return s;
}

std::uint64_t ConfusionMatrix::trace() const noexcept {
  std::uint64_t s = 0;
  for (std::size_t c = 0; c < kNumClasses; ++c) s += counts[c][c];
  return s;
}

std::uint64_t ConfusionMatrix::row_sum(std::size_t c) const noexcept {
  return std::accumulate(counts[c].begin(), counts[c].end(), std::uint64_t{0});
}

std::uint64_t ConfusionMatrix::col_sum(std::size_t c) const noexcept {
  std::uint64_t s = 0;
  for (const auto& row : counts) s += row[c];
  return s;
}

ConfusionMatrix confusion(std::span<const ClassLabel> labels, std::span<const ClassLabel> preds) {
  if (labels.size() != preds.size()) throw MetricError("labels and predictions differ in length");
  if (labels.empty()) throw MetricError("cannot build a confusion matrix from zero rows");
  ConfusionMatrix m;
  for (std::size_t i = 0; i < labels.size(); ++i) ++m.counts[index_of(labels[i])][index_of(preds[i])];
  return m;
}

EvalReport macro_metrics(const ConfusionMatrix& m) {
  const auto total = m.total();
  if (total == 0) throw MetricError("confusion matrix is empty");
  EvalReport r;
  r.confusion = m;
  r.accuracy = static_cast<double>(m.trace()) / static_cast<double>(total);
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    const auto tp = m.counts[c][c];
    const auto fp = m.col_sum(c) - tp;
    const auto fn = m.row_sum(c) - tp;
    const auto tn = total - tp - fp - fn;
    auto& pc = r.per_class[c];
    auto ratio = [](std::uint64_t num, std::uint64_t den, bool& undefined) {
      undefined = den == 0;
      return undefined ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
    };
    pc.precision = ratio(tp, tp + fp, pc.precision_undefined);
    pc.recall = ratio(tp, tp + fn, pc.recall_undefined);
    pc.fpr = ratio(fp, fp + tn, pc.fpr_undefined);
    pc.f1_undefined = pc.precision + pc.recall == 0.0;
    pc.f1 = pc.f1_undefined ? 0.0 : 2.0 * pc.precision * pc.recall / (pc.precision + pc.recall);
    r.macro_precision += pc.precision;
    r.macro_recall += pc.recall;
    r.macro_f1 += pc.f1;
    r.macro_fpr += pc.fpr;
  }
  constexpr auto k = static_cast<double>(kNumClasses);
  r.macro_precision /= k;
  r.macro_recall /= k;
  r.macro_f1 /= k;
  r.macro_fpr /= k;
  r.hardware = host_description();
  return r;
}

double binary_auc(std::span<const double> scores, std::span<const std::uint8_t> positive) {
  if (scores.size() != positive.size()) throw MetricError("scores and labels differ in length");
  const std::size_t n = scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  double pos_rank_sum = 0.0;
  std::size_t n_pos = 0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && scores[order[j]] == scores[order[i]]) ++j;
    const double mid_rank = 0.5 * static_cast<double>(i + 1 + j);  // mean of ranks i+1..j
    for (std::size_t q = i; q < j; ++q) {
      if (positive[order[q]]) {
        pos_rank_sum += mid_rank;
        ++n_pos;
      }
    }
    i = j;
  }
  const std::size_t n_neg = n - n_pos;
  if (n_pos == 0 || n_neg == 0) throw MetricError("AUC needs both positives and negatives");
  const double np = static_cast<double>(n_pos);
  return (pos_rank_sum - np * (np + 1.0) / 2.0) / (np * static_cast<double>(n_neg));
}

AucResult roc_auc_ovr(std::span<const ClassLabel> labels, const Matrix& probs) {
  if (static_cast<std::size_t>(probs.rows()) != labels.size() ||
      probs.cols() != static_cast<Eigen::Index>(kNumClasses)) {
    throw MetricError("probability matrix shape does not match labels");
  }
  AucResult out;
  const auto counts = class_counts(labels);
  std::vector<double> scores(labels.size());
  std::vector<std::uint8_t> pos(labels.size());
  double sum = 0.0;
  std::size_t valid = 0;
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    if (counts[c] == 0 || counts[c] == labels.size()) {
      out.skipped.push_back(label_from_index(c));
      continue;
    }
    for (std::size_t i = 0; i < labels.size(); ++i) {
      scores[i] = probs(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c));
      pos[i] = index_of(labels[i]) == c ? 1 : 0;
    }
    const double auc = binary_auc(scores, pos);
    out.per_class[c] = auc;
    sum += auc;
    ++valid;
  }
  if (valid == 0) throw MetricError("every one-vs-rest problem is degenerate");
  out.macro = sum / static_cast<double>(valid);
  return out;
}

EvalReport evaluate(std::span<const ClassLabel> labels, const Matrix& probs) {
  if (static_cast<std::size_t>(probs.rows()) != labels.size()) {
    throw MetricError("probability rows do not match label count");
  }
  const auto preds = argmax_labels(probs);
  EvalReport r = macro_metrics(confusion(labels, preds));
  const auto counts = class_counts(labels);
  const bool any_valid = std::any_of(counts.begin(), counts.end(),
                                     [&](std::size_t c) { return c > 0 && c < labels.size(); });
  if (any_valid) {
    auto auc = roc_auc_ovr(labels, probs);
    r.roc_auc_ovr = auc.macro;
    r.auc_skipped = std::move(auc.skipped);
  } else {
    r.auc_skipped.assign(kAllClasses.begin(), kAllClasses.end());
  }
  return r;
}

namespace {

MeanStd mean_std(const std::vector<double>& xs) {
  MeanStd out;
  out.mean = std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
  double ss = 0.0;
  for (double x : xs) ss += (x - out.mean) * (x - out.mean);
  out.std = std::sqrt(ss / static_cast<double>(xs.size() - 1));
  return out;
}

}  // namespace

EvalReport aggregate_folds(std::span<const EvalReport> reports) {
  if (reports.size() < 2) throw MetricError("aggregation needs at least two reports");
  EvalReport out;
  out.folds = reports.size();
  out.hardware = reports.front().hardware;
  for (const auto& r : reports) {
    for (std::size_t a = 0; a < kNumClasses; ++a) {
      for (std::size_t b = 0; b < kNumClasses; ++b) out.confusion.counts[a][b] += r.confusion.counts[a][b];
    }
  }
  auto collect = [&](const std::string& key, auto getter) {
    std::vector<double> xs;
    xs.reserve(reports.size());
    for (const auto& r : reports) xs.push_back(getter(r));
    return out.fold_stats[key] = mean_std(xs);
  };
  out.accuracy = collect("accuracy", [](const EvalReport& r) { return r.accuracy; }).mean;
  out.macro_precision = collect("macro_precision", [](const EvalReport& r) { return r.macro_precision; }).mean;
  out.macro_recall = collect("macro_recall", [](const EvalReport& r) { return r.macro_recall; }).mean;
  out.macro_f1 = collect("macro_f1", [](const EvalReport& r) { return r.macro_f1; }).mean;
  out.macro_fpr = collect("macro_fpr", [](const EvalReport& r) { return r.macro_fpr; }).mean;
  if (std::all_of(reports.begin(), reports.end(), [](const EvalReport& r) { return r.roc_auc_ovr.has_value(); })) {
    out.roc_auc_ovr = collect("roc_auc_ovr", [](const EvalReport& r) { return *r.roc_auc_ovr; }).mean;
  }
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    const std::string suffix = "/" + std::string(label_name(label_from_index(c)));
    auto& pc = out.per_class[c];
    pc.precision = collect("precision" + suffix, [c](const EvalReport& r) { return r.per_class[c].precision; }).mean;
    pc.recall = collect("recall" + suffix, [c](const EvalReport& r) { return r.per_class[c].recall; }).mean;
    pc.f1 = collect("f1" + suffix, [c](const EvalReport& r) { return r.per_class[c].f1; }).mean;
    pc.fpr = collect("fpr" + suffix, [c](const EvalReport& r) { return r.per_class[c].fpr; }).mean;
    for (const auto& r : reports) {
      pc.precision_undefined |= r.per_class[c].precision_undefined;
      pc.recall_undefined |= r.per_class[c].recall_undefined;
      pc.f1_undefined |= r.per_class[c].f1_undefined;
      pc.fpr_undefined |= r.per_class[c].fpr_undefined;
    }
  }
  return out;
}

std::vector<RocPoint> roc_curve(std::span<const ClassLabel> labels, const Matrix& probs) {
  if (static_cast<std::size_t>(probs.rows()) != labels.size()) throw MetricError("shape mismatch");
  std::vector<RocPoint> out;
  const std::size_t n = labels.size();
  std::vector<std::size_t> order(n);
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    const auto cls = label_from_index(c);
    const auto ci = static_cast<Eigen::Index>(c);
    std::size_t pos = 0;
    for (auto l : labels) pos += index_of(l) == c ? 1 : 0;
    const std::size_t neg = n - pos;
    if (pos == 0 || neg == 0) continue;
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return probs(static_cast<Eigen::Index>(a), ci) > probs(static_cast<Eigen::Index>(b), ci);
    });
    out.push_back({cls, std::numeric_limits<double>::infinity(), 0.0, 0.0});
    std::size_t tp = 0, fp = 0;
    for (std::size_t i = 0; i < n;) {
      const double thr = probs(static_cast<Eigen::Index>(order[i]), ci);
      while (i < n && probs(static_cast<Eigen::Index>(order[i]), ci) == thr) {
        (index_of(labels[order[i]]) == c ? tp : fp) += 1;
        ++i;
      }
      out.push_back({cls, thr, static_cast<double>(tp) / static_cast<double>(pos),
                     static_cast<double>(fp) / static_cast<double>(neg)});
    }
  }
  return out;
}

std::string host_description() {
  static const std::string cached = [] {
  std::string cpu = "unknown-cpu";
  std::ifstream info("/proc/cpuinfo");
  for (std::string line; std::getline(info, line);) {
    if (line.rfind("model name", 0) == 0) {
      const auto colon = line.find(':');
      if (colon != std::string::npos) cpu = line.substr(line.find_first_not_of(' ', colon + 1));
      break;
    }
  }
  std::string machine = "unknown";
  utsname u{};
  if (uname(&u) == 0) machine = std::string(u.sysname) + " " + u.machine;
  return cpu + "; " + std::to_string(std::max(1U, std::thread::hardware_concurrency())) +
         " threads; " + machine;
  }();
  return cached;
}

nlohmann::json to_json(const EvalReport& r) {
  using nlohmann::json;
  json j;
  j["schema_version"] = kReportSchemaVersion;
  j["class_order"] = json::array();
  for (auto c : kAllClasses) j["class_order"].push_back(std::string(label_name(c)));
  json counts = json::array();
  for (const auto& row : r.confusion.counts) counts.push_back(row);
  j["confusion"] = {{"rows", "true"}, {"columns", "predicted"}, {"counts", counts}};
  j["accuracy"] = r.accuracy;
  j["macro_precision"] = r.macro_precision;
  j["macro_recall"] = r.macro_recall;
  j["macro_f1"] = r.macro_f1;
  j["macro_fpr"] = r.macro_fpr;
  j["fpr_definition"] = "one-vs-rest FP/(FP+TN) per class, unweighted mean over classes";
  j["roc_auc_ovr"] = r.roc_auc_ovr ? json(*r.roc_auc_ovr) : json(nullptr);
  j["auc_skipped"] = json::array();
  for (auto c : r.auc_skipped) j["auc_skipped"].push_back(std::string(label_name(c)));
  json per_class = json::object();
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    const auto& pc = r.per_class[c];
    json undefined = json::array();
    if (pc.precision_undefined) undefined.push_back("precision");
    if (pc.recall_undefined) undefined.push_back("recall");
    if (pc.f1_undefined) undefined.push_back("f1");
    if (pc.fpr_undefined) undefined.push_back("fpr");
    per_class[std::string(label_name(label_from_index(c)))] = {
        {"precision", pc.precision}, {"recall", pc.recall}, {"f1", pc.f1},
        {"fpr", pc.fpr}, {"undefined", undefined}};
  }
  j["per_class"] = per_class;
  j["folds"] = r.folds;
  json stats = json::object();
  for (const auto& [k, v] : r.fold_stats) stats[k] = {{"mean", v.mean}, {"std", v.std}};
  j["fold_stats"] = stats;
  j["hardware"] = r.hardware;
  return j;
}

std::string to_csv(const EvalReport& r) {
  std::ostringstream out;
  out << "metric,class,value,fold_mean,fold_std\r\n";
  auto row = [&](const std::string& metric, const std::string& cls, double value, const std::string& key) {
    out << metric << ',' << cls << ',' << csv::format_double(value) << ',';
    if (auto it = r.fold_stats.find(key); it != r.fold_stats.end()) {
      out << csv::format_double(it->second.mean) << ',' << csv::format_double(it->second.std);
    } else {
      out << ',';
    }
    out << "\r\n";
  };
  row("accuracy", "all", r.accuracy, "accuracy");
  row("precision", "macro", r.macro_precision, "macro_precision");
  row("recall", "macro", r.macro_recall, "macro_recall");
  row("f1", "macro", r.macro_f1, "macro_f1");
  row("fpr", "macro", r.macro_fpr, "macro_fpr");
  if (r.roc_auc_ovr) row("roc_auc_ovr", "macro", *r.roc_auc_ovr, "roc_auc_ovr");
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    const std::string name(label_name(label_from_index(c)));
    const auto& pc = r.per_class[c];
    row("precision", name, pc.precision, "precision/" + name);
    row("recall", name, pc.recall, "recall/" + name);
    row("f1", name, pc.f1, "f1/" + name);
    row("fpr", name, pc.fpr, "fpr/" + name);
  }
  return out.str();
}

std::string roc_to_csv(const std::vector<RocPoint>& points) {
  std::ostringstream out;
  out << "class,threshold,tpr,fpr\r\n";
  for (const auto& p : points) {
    out << label_name(p.cls) << ',' << csv::format_double(p.threshold) << ',' << csv::format_double(p.tpr) << ','
        << csv::format_double(p.fpr) << "\r\n";
  }
  return out.str();
}

}  // namespace wids
