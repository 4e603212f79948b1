#pragma once

#include <cstdint>
#include <limits>
#include <span>
#include <string_view>
#include <vector>

#include "camo/core.hpp"

namespace camo {

// ---------------------------------------------------------------------------
// One-class SVM with an RBF kernel

struct OcSvmOptions {
  double nu = 0.1;
  double sigma = 0.0;  // <= 0 uses the median pairwise distance of the data
  double tol = 1e-3;
  std::int64_t max_iter = 0;  // 0 picks max(10^5, 100 n)
};

struct OcSvmModel {
  Vec alphas;    // sum to 1, each in [0, 1/(nu n)]
  Mat support;   // rows aligned with alphas
  double rho = 0.0;
  double nu = 0.1;
  double sigma = 1.0;
  std::int64_t iterations = 0;
  bool converged = false;

  // Sum_i alpha_i K(x, s_i) - rho; negative means outlier.
  double decision(const Eigen::Ref<const Vec>& x) const;
};

OcSvmModel ocsvm_train(const Eigen::Ref<const Mat>& data, const OcSvmOptions& opt);

// ---------------------------------------------------------------------------
// Isolation Forest

// Average unsuccessful-search path length in a binary search tree of m keys.
// c(m) = 2 H(m-1) - 2 (m-1)/m with H(i) ~ ln(i) + Euler's constant, and
// c(2) = 1, c(m <= 1) = 0.
double average_path_length(double m);

struct IsoNode {
  int feature = -1;  // -1 marks a leaf
  double split = 0.0;
  int left = -1;
  int right = -1;
  int size = 0;  // training points that reached the node
};

struct IsoTree {
  std::vector<IsoNode> nodes;  // nodes[0] is the root

  double path_length(const Eigen::Ref<const Vec>& x) const;
  int depth() const;
};

struct IsoForest {
  std::vector<IsoTree> trees;
  int psi = 256;
  int dim = 0;
  std::uint64_t seed = 0;

  int n_trees() const { return static_cast<int>(trees.size()); }
  double mean_path_length(const Eigen::Ref<const Vec>& x) const;
};

IsoForest iforest_train(const Eigen::Ref<const Mat>& data, int n_trees, int psi, std::uint64_t seed);

// 2^(-E[h(x)] / c(psi)), in (0, 1); larger means more anomalous.
double iforest_score(const IsoForest& f, const Eigen::Ref<const Vec>& x);

// ---------------------------------------------------------------------------
// Gaussian mixture

struct GmmOptions {
  int k = 1;
  std::uint64_t seed = 1;
  int max_iter = 200;
  double ridge = 1e-6;
  double tol = 1e-8;  // stop when the objective gains less than tol * n
};

struct GmmModel {
  Vec weights;
  std::vector<Vec> means;
  std::vector<Mat> covariances;  // eigenvalues >= ridge
  double ridge = 1e-6;
  // Objective after each EM iteration. EM maximizes the log-likelihood with
  // each component's density multiplied by exp(-ridge tr(Sigma^-1) / 2);
  // that factor makes Sigma = S/N_k + ridge I the exact M-step, so the
  // trace is non-decreasing.
  std::vector<double> trace;
  int iterations = 0;
  // Factor caches derived from the covariances; refresh() rebuilds them.
  std::vector<Mat> cholesky;
  std::vector<double> log_norm;       // -(d ln 2pi + ln det) / 2
  std::vector<double> trace_inverse;  // tr(Sigma^-1)

  void refresh();

  int k() const { return static_cast<int>(weights.size()); }
  Eigen::Index dim() const { return means.empty() ? 0 : means.front().size(); }
  // Free parameters: (k-1) weights, k d means, k d(d+1)/2 covariances.
  double parameter_count() const;
  // Per-component log(weight * N(x | mean, cov)).
  Vec component_log_densities(const Eigen::Ref<const Vec>& x) const;
  Vec responsibilities(const Eigen::Ref<const Vec>& x) const;
};

GmmModel gmm_fit(const Eigen::Ref<const Mat>& data, const GmmOptions& opt);

// Log density of x under the mixture.
double gmm_score(const GmmModel& m, const Eigen::Ref<const Vec>& x);

// -2 log L + p ln n.
double gmm_bic(const GmmModel& m, const Eigen::Ref<const Mat>& data);

// Fits k = k_min..k_max and keeps the lowest BIC (smallest k on ties).
GmmModel gmm_select(const Eigen::Ref<const Mat>& data, int k_min, int k_max, const GmmOptions& opt);

// ---------------------------------------------------------------------------
// Isotonic regression

// Weighted pool-adjacent-violators: the non-decreasing sequence closest to
// y in weighted least squares.
std::vector<double> pav(std::span<const double> y, std::span<const double> w = {});

struct IsotonicCalibrator {
  std::vector<double> breakpoints;  // ascending scores
  std::vector<double> values;       // non-decreasing, aligned

  // Value of the last breakpoint <= score; clamped outside the range.
  double apply(double score) const;
};

IsotonicCalibrator isotonic_fit(std::span<const double> scores, std::span<const double> targets);

// ---------------------------------------------------------------------------
// Novelty detectors trained on one class

enum class DetectorKind { OneClassSvm, IsolationForest, GmmIsotonic };

inline constexpr DetectorKind kAllDetectors[] = {DetectorKind::OneClassSvm, DetectorKind::IsolationForest,
                                                 DetectorKind::GmmIsotonic};

std::string_view to_string(DetectorKind k);
DetectorKind parse_detector(std::string_view s);

struct DetectorOptions {
  double nu = 0.1;
  int n_trees = 100;
  int psi = 256;
  int gmm_k_max = 5;
  double ridge = 1e-6;
  double calibration_fraction = 0.2;
  double anchor_fraction = 0.05;
  // One-class SVM training subsample cap; 0 keeps every row.
  int max_train = 1000;
  std::uint64_t seed = 1;
};

// A fitted detector. score() is oriented so that larger means more like the
// training class; rows scoring >= threshold are inliers.
struct Detector {
  DetectorKind kind = DetectorKind::OneClassSvm;
  OcSvmModel ocsvm;
  IsoForest forest;
  GmmModel gmm;
  IsotonicCalibrator calibrator;
  double threshold = 0.0;

  // Continuous score before any calibration; used for ROC and PR curves.
  double raw_score(const Eigen::Ref<const Vec>& x) const;
  // Score compared against the threshold (calibrated for GmmIsotonic).
  double score(const Eigen::Ref<const Vec>& x) const;
};

Detector train_detector(DetectorKind kind, const Eigen::Ref<const Mat>& train_rows, const DetectorOptions& opt);

struct DetectionResult {
  std::vector<double> scores;
  std::vector<double> raw_scores;
  std::vector<bool> inlier;
  std::vector<Label> predicted;  // inliers get the training class
  double threshold = 0.0;
};

DetectionResult detect(const Detector& d, const Eigen::Ref<const Mat>& rows, double threshold, Label train_class);
inline DetectionResult detect(const Detector& d, const Eigen::Ref<const Mat>& rows, Label train_class) {
  return detect(d, rows, d.threshold, train_class);
}

// Held-out members of the training class plus every row of the other class,
// in ascending id order.
std::vector<Eigen::Index> detection_eval_ids(std::span<const Label> labels, std::span<const Eigen::Index> holdout_ids,
                                             Label train_class);

}  // namespace camo
