#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "camo/core.hpp"

namespace camo {

struct ConfusionMatrix {
  std::uint64_t tp = 0, fp = 0, tn = 0, fn = 0;
  Label positive_class = Label::Gesture;

  std::uint64_t total() const { return tp + fp + tn + fn; }
  friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;
};

ConfusionMatrix confusion(std::span<const Label> truth, std::span<const Label> predicted,
                          Label positive_class = Label::Gesture);

// Undefined ratios (0/0) are empty, never 0.
struct Metrics {
  double accuracy = 0.0;
  std::optional<double> precision;
  std::optional<double> sensitivity;
  std::optional<double> specificity;
};

Metrics metrics(const ConfusionMatrix& cm);

struct CurvePoint {
  double threshold = 0.0;
  double x = 0.0;
  double y = 0.0;
};

// Thresholds sweep the distinct scores in descending order, one point per
// group of tied scores, after a leading (0, 0) point at +inf.
struct RocCurve {
  std::vector<CurvePoint> points;  // x = false positive rate, y = true positive rate
  double auc = 0.0;
  // Trapezoid area as the exact fraction numerator / denominator, with
  // denominator = 2 P N.
  std::uint64_t auc_numerator = 0;
  std::uint64_t auc_denominator = 1;
};

RocCurve roc_curve(std::span<const double> scores, std::span<const Label> labels,
                   Label positive_class = Label::Gesture);

struct PrCurve {
  std::vector<CurvePoint> points;  // x = recall, y = precision
  double average_precision = 0.0;
};

PrCurve pr_curve(std::span<const double> scores, std::span<const Label> labels, Label positive_class = Label::Gesture);

struct ErrorBar {
  double mean = 0.0;
  double standard_error = 0.0;
  int n = 0;
  double lo = 0.0;  // mean - 1.96 SE
  double hi = 0.0;  // mean + 1.96 SE
};

ErrorBar error_bar(std::span<const double> values);

// True when the two 95% intervals are disjoint.
bool significant(const ErrorBar& a, const ErrorBar& b);

// Share of the most frequent label.
double majority_baseline(std::span<const Label> labels);

nlohmann::ordered_json to_json(const ConfusionMatrix& cm);
nlohmann::ordered_json to_json(const Metrics& m);
nlohmann::ordered_json to_json(const ErrorBar& e);

// CSV with header "threshold,<x_name>,<y_name>".
std::string curve_csv(const std::vector<CurvePoint>& points, const std::string& x_name, const std::string& y_name);

}  // namespace camo
