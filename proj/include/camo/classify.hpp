#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "camo/core.hpp"
#include "camo/divergence.hpp"
#include "camo/kernels.hpp"

namespace camo {

// ---------------------------------------------------------------------------
// SVM on a precomputed Gram matrix

struct SvmOptions {
  double C = 1.0;
  double tol = 1e-3;
  // Multiplies C for the positive (+1) class; 1 keeps the classes balanced
  // in the box constraint.
  double positive_weight = 1.0;
  std::int64_t max_iter = 0;  // 0 picks max(10^5, 100 n)
};

struct SvmModel {
  Vec alphas;                    // in [0, C_i]
  double bias = 0.0;
  std::vector<Eigen::Index> support_ids;
  std::vector<int> labels;       // +1 / -1
  double C = 1.0;
  double positive_weight = 1.0;
  KernelSpec spec;
  std::int64_t iterations = 0;
  bool converged = false;

  Eigen::Index size() const { return alphas.size(); }
  double upper_bound(Eigen::Index i) const { return labels[static_cast<std::size_t>(i)] > 0 ? C * positive_weight : C; }
};

// SMO with maximal-violating-pair selection (lowest index on ties). When
// the pair's curvature is not positive, the step goes to the end of the
// feasible segment, which is where the dual objective is largest.
SvmModel svm_train(const Eigen::Ref<const Mat>& gram, std::span<const int> labels, const SvmOptions& opt);
SvmModel svm_train(const GramMatrix& gram, std::span<const int> labels, const SvmOptions& opt);

// Sum_i alpha_i y_i K(x, x_i) + bias.
double svm_decision(const SvmModel& model, const Eigen::Ref<const Vec>& kernel_row);
inline int svm_predict(double decision) { return decision >= 0.0 ? 1 : -1; }

// Dual objective sum(alpha) - 1/2 alpha^T Q alpha with Q_ij = y_i y_j K_ij.
double svm_dual_objective(const Eigen::Ref<const Mat>& gram, std::span<const int> labels,
                          const Eigen::Ref<const Vec>& alphas);

// Largest KKT violation, measured on y_i f(x_i) against the margin.
double svm_kkt_residual(const SvmModel& model, const Eigen::Ref<const Mat>& gram);

std::vector<int> to_signs(std::span<const Label> labels);

// Self-contained kernel machine: the dual solution plus the support rows and
// the distribution grid needed to evaluate the kernel on new inputs. Only the
// per-sample distribution reading can be evaluated this way.
struct KernelMachine {
  SvmModel model;
  Mat support_rows;  // rows aligned with model.support_ids
  GridConfig grid;

  double decision(const Eigen::Ref<const Vec>& x) const;
};

KernelMachine make_kernel_machine(const SvmModel& model, const Eigen::Ref<const Mat>& train_rows,
                                  const GridConfig& grid);

// Binary model files start with the magic "CKM1" and a u32 version.
void write_model(const KernelMachine& m, const std::filesystem::path& path);
KernelMachine read_model(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Nested cross-validation

struct CvOptions {
  int folds = 10;
  int inner_folds = 3;
  std::vector<double> c_grid = {0.1, 1.0, 10.0, 100.0};
  // Sigma candidates are these multiples of the median pairwise distance of
  // the outer training fold.
  std::vector<double> sigma_multipliers = {0.125, 0.25, 0.5, 1.0, 2.0, 4.0, 8.0};
  double tol = 1e-3;
  double positive_weight = 1.0;
};

struct OuterFold {
  std::vector<Eigen::Index> train_ids;
  std::vector<Eigen::Index> test_ids;
  // Every instance read while choosing sigma and C for this fold.
  std::vector<Eigen::Index> selection_ids;
  double sigma = 0.0;
  double C = 0.0;
  double accuracy = 0.0;
  std::vector<double> test_decisions;  // aligned with test_ids
};

struct SpecReport {
  KernelSpec spec;
  std::vector<OuterFold> folds;
  double mean = 0.0;
  double standard_error = 0.0;

  std::vector<double> fold_accuracies() const;
};

struct CvReport {
  std::uint64_t seed = 0;
  std::vector<Eigen::Index> order;  // shuffled instance order used for folding
  std::vector<SpecReport> specs;
};

// Stratified fold assignment: instances are shuffled with `seed`, then each
// class is dealt round-robin across folds. Returns the fold of each instance.
std::vector<int> assign_folds(std::span<const Label> labels, std::span<const Eigen::Index> ids, int folds,
                              std::uint64_t seed);

CvReport nested_cv(const PairwiseTerms& terms, std::span<const Label> labels, const std::vector<KernelSpec>& specs,
                   const CvOptions& opt, std::uint64_t seed);

// Builds the distributions itself. In per-class mode the class densities of
// each outer fold are fitted on that fold's training rows only.
CvReport nested_cv(const Eigen::Ref<const Mat>& rows, std::span<const Label> labels, const GridConfig& grid,
                   DistributionMode mode, const std::vector<KernelSpec>& specs, const CvOptions& opt,
                   std::uint64_t seed);

// ---------------------------------------------------------------------------
// Feedforward benchmark: one ReLU hidden layer, sigmoid output, binary
// cross-entropy.

struct MlpModel {
  Mat w1;  // h x d
  Vec b1;
  Vec w2;  // h
  double b2 = 0.0;
  std::uint64_t seed = 0;

  Eigen::Index hidden() const { return w1.rows(); }
  Eigen::Index dim() const { return w1.cols(); }
};

struct MlpOptions {
  int hidden = 16;
  int epochs = 200;
  double lr = 0.05;
  int batch_size = 32;  // <= 0 means full batch
  std::uint64_t seed = 1;
};

struct MlpGradient {
  Mat w1;
  Vec b1;
  Vec w2;
  double b2 = 0.0;
};

MlpModel mlp_init(Eigen::Index dim, int hidden, std::uint64_t seed);

// Mean cross-entropy over the rows and its gradient.
double mlp_loss(const MlpModel& m, const Eigen::Ref<const Mat>& x, std::span<const double> targets,
                MlpGradient* grad = nullptr);

struct MlpTrace {
  std::vector<double> epoch_loss;
};

MlpModel mlp_train(const Eigen::Ref<const Mat>& x, std::span<const Label> labels, const MlpOptions& opt,
                   MlpTrace* trace = nullptr);

// Probability of the Gesture class.
double mlp_predict_proba(const MlpModel& m, const Eigen::Ref<const Vec>& x);

// Per-column standardization fitted on training rows.
struct Standardizer {
  Vec mean;
  Vec scale;

  static Standardizer fit(const Eigen::Ref<const Mat>& rows);
  Mat apply(const Eigen::Ref<const Mat>& rows) const;
};

}  // namespace camo
