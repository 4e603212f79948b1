#include "camo/eval.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <numeric>

namespace camo {

ConfusionMatrix confusion(std::span<const Label> truth, std::span<const Label> predicted, Label positive_class) {
  require(truth.size() == predicted.size(), ErrorCode::InvalidArgument, "confusion: length mismatch");
  ConfusionMatrix cm;
  cm.positive_class = positive_class;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const bool actual = truth[i] == positive_class, guess = predicted[i] == positive_class;
    if (actual && guess) ++cm.tp;
    else if (actual) ++cm.fn;
    else if (guess) ++cm.fp;
    else ++cm.tn;
  }
  return cm;
}

Metrics metrics(const ConfusionMatrix& cm) {
  require(cm.total() > 0, ErrorCode::EmptyDataset, "metrics: empty confusion matrix");
  auto ratio = [](std::uint64_t num, std::uint64_t den) -> std::optional<double> {
    if (den == 0) return std::nullopt;
    return static_cast<double>(num) / static_cast<double>(den);
  };
  Metrics m;
  m.accuracy = static_cast<double>(cm.tp + cm.tn) / static_cast<double>(cm.total());
  m.precision = ratio(cm.tp, cm.tp + cm.fp);
  m.sensitivity = ratio(cm.tp, cm.tp + cm.fn);
  m.specificity = ratio(cm.tn, cm.tn + cm.fp);
  return m;
}

namespace {

struct Group {
  double score;
  std::uint64_t pos;
  std::uint64_t neg;
};

// Tied scores merged, ordered by descending score.
std::vector<Group> score_groups(std::span<const double> scores, std::span<const Label> labels, Label positive) {
  require(scores.size() == labels.size(), ErrorCode::InvalidArgument, "curve: scores and labels differ in length");
  require(!scores.empty(), ErrorCode::EmptyDataset, "curve: no scores");
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  for (double s : scores) require(!std::isnan(s), ErrorCode::InvalidArgument, "curve: NaN score");
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  std::vector<Group> groups;
  for (auto i : order) {
    if (groups.empty() || groups.back().score != scores[i]) groups.push_back({scores[i], 0, 0});
    (labels[i] == positive ? groups.back().pos : groups.back().neg) += 1;
  }
  return groups;
}

}  // namespace

RocCurve roc_curve(std::span<const double> scores, std::span<const Label> labels, Label positive_class) {
  const auto groups = score_groups(scores, labels, positive_class);
  std::uint64_t P = 0, N = 0;
  for (const auto& g : groups) P += g.pos, N += g.neg;
  require(P > 0 && N > 0, ErrorCode::Degenerate, "roc_curve: both classes must be present");

  RocCurve c;
  c.points.push_back({std::numeric_limits<double>::infinity(), 0.0, 0.0});
  std::uint64_t tp = 0, fp = 0, twice_area = 0;
  for (const auto& g : groups) {
    twice_area += g.neg * (2 * tp + g.pos);
    tp += g.pos;
    fp += g.neg;
    c.points.push_back({g.score, static_cast<double>(fp) / static_cast<double>(N),
                        static_cast<double>(tp) / static_cast<double>(P)});
  }
  c.auc_numerator = twice_area;
  c.auc_denominator = 2 * P * N;
  c.auc = static_cast<double>(twice_area) / static_cast<double>(c.auc_denominator);
  return c;
}

PrCurve pr_curve(std::span<const double> scores, std::span<const Label> labels, Label positive_class) {
  const auto groups = score_groups(scores, labels, positive_class);
  std::uint64_t P = 0;
  for (const auto& g : groups) P += g.pos;
  require(P > 0, ErrorCode::Degenerate, "pr_curve: no positive labels");
  PrCurve c;
  std::uint64_t tp = 0, fp = 0;
  double last_recall = 0.0;
  for (const auto& g : groups) {
    tp += g.pos;
    fp += g.neg;
    const double recall = static_cast<double>(tp) / static_cast<double>(P);
    const double precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
    c.points.push_back({g.score, recall, precision});
    c.average_precision += (recall - last_recall) * precision;
    last_recall = recall;
  }
  return c;
}

ErrorBar error_bar(std::span<const double> values) {
  require(values.size() >= 2, ErrorCode::InvalidArgument, "error_bar: need at least two values");
  ErrorBar e;
  e.n = static_cast<int>(values.size());
  for (double v : values) e.mean += v;
  e.mean /= static_cast<double>(values.size());
  double ss = 0.0;
  for (double v : values) ss += (v - e.mean) * (v - e.mean);
  e.standard_error = std::sqrt(ss / static_cast<double>(values.size() - 1)) / std::sqrt(static_cast<double>(values.size()));
  e.lo = e.mean - 1.96 * e.standard_error;
  e.hi = e.mean + 1.96 * e.standard_error;
  return e;
}

bool significant(const ErrorBar& a, const ErrorBar& b) { return a.hi < b.lo || b.hi < a.lo; }

double majority_baseline(std::span<const Label> labels) {
  require(!labels.empty(), ErrorCode::EmptyDataset, "majority_baseline: no labels");
  const auto pos = std::count(labels.begin(), labels.end(), Label::Gesture);
  const auto most = std::max<std::ptrdiff_t>(pos, static_cast<std::ptrdiff_t>(labels.size()) - pos);
  return static_cast<double>(most) / static_cast<double>(labels.size());
}

nlohmann::ordered_json to_json(const ConfusionMatrix& cm) {
  return {{"positive_class", std::string(to_string(cm.positive_class))},
          {"tp", cm.tp},
          {"fp", cm.fp},
          {"tn", cm.tn},
          {"fn", cm.fn}};
}

nlohmann::ordered_json to_json(const Metrics& m) {
  auto opt = [](const std::optional<double>& v) { return v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json(); };
  return {{"accuracy", m.accuracy},
          {"precision", opt(m.precision)},
          {"sensitivity", opt(m.sensitivity)},
          {"specificity", opt(m.specificity)}};
}

nlohmann::ordered_json to_json(const ErrorBar& e) {
  return {{"mean", e.mean}, {"standard_error", e.standard_error}, {"n", e.n}, {"ci95", {e.lo, e.hi}}};
}

std::string curve_csv(const std::vector<CurvePoint>& points, const std::string& x_name, const std::string& y_name) {
  std::string out = "threshold," + x_name + "," + y_name + "\n";
  char buf[64];
  auto put = [&](double v) {
    if (std::isinf(v)) {
      out += v > 0 ? "inf" : "-inf";
      return;
    }
    const auto r = std::to_chars(buf, buf + sizeof buf, v);
    out.append(buf, r.ptr);
  };
  for (const auto& p : points) {
    put(p.threshold);
    out += ',';
    put(p.x);
    out += ',';
    put(p.y);
    out += '\n';
  }
  return out;
}

}  // namespace camo
