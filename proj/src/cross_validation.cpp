#include <algorithm>
#include <cmath>
#include <functional>

#include "camo/classify.hpp"

namespace camo {

std::vector<double> SpecReport::fold_accuracies() const {
  std::vector<double> out;
  out.reserve(folds.size());
  for (const auto& f : folds) out.push_back(f.accuracy);
  return out;
}

std::vector<int> assign_folds(std::span<const Label> labels, std::span<const Eigen::Index> ids, int folds,
                              std::uint64_t seed) {
  require(folds >= 2, ErrorCode::InvalidArgument, "assign_folds: need at least two folds");
  std::vector<std::size_t> order(ids.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng rng(seed);
  rng.shuffle(order);
  // Class-major dealing keeps every fold stratified and fold sizes within one.
  std::stable_partition(order.begin(), order.end(), [&](std::size_t p) {
    return labels[static_cast<std::size_t>(ids[p])] == Label::Gesture;
  });
  std::vector<int> fold(ids.size());
  for (std::size_t k = 0; k < order.size(); ++k) fold[order[k]] = static_cast<int>(k % static_cast<std::size_t>(folds));
  return fold;
}

namespace {

bool both_classes(std::span<const Label> labels, std::span<const Eigen::Index> ids) {
  bool pos = false, neg = false;
  for (auto id : ids) (labels[static_cast<std::size_t>(id)] == Label::Gesture ? pos : neg) = true;
  return pos && neg;
}

std::vector<int> signs_of(std::span<const Label> labels, std::span<const Eigen::Index> ids) {
  std::vector<int> y;
  y.reserve(ids.size());
  for (auto id : ids) y.push_back(to_sign(labels[static_cast<std::size_t>(id)]));
  return y;
}

// Positions (into the outer training list) grouped by inner fold.
std::vector<std::vector<Eigen::Index>> partition(const std::vector<int>& fold, int k) {
  std::vector<std::vector<Eigen::Index>> parts(static_cast<std::size_t>(k));
  for (std::size_t p = 0; p < fold.size(); ++p) parts[static_cast<std::size_t>(fold[p])].push_back(static_cast<Eigen::Index>(p));
  return parts;
}

double accuracy_of(const Mat& K_rows, const SvmModel& m, std::span<const int> truth) {
  std::size_t hits = 0;
  for (Eigen::Index r = 0; r < K_rows.rows(); ++r)
    if (svm_predict(svm_decision(m, K_rows.row(r).transpose())) == truth[static_cast<std::size_t>(r)]) ++hits;
  return static_cast<double>(hits) / static_cast<double>(K_rows.rows());
}

struct FoldPlan {
  std::vector<Eigen::Index> train;
  std::vector<Eigen::Index> test;
  std::vector<std::vector<Eigen::Index>> inner;  // positions into train
};

OuterFold run_fold(const PairwiseTerms& terms, std::span<const Label> labels, const KernelSpec& base,
                   const FoldPlan& plan, const CvOptions& opt) {
  OuterFold out;
  out.train_ids = plan.train;
  out.test_ids = plan.test;
  out.selection_ids = plan.train;
  const auto y_train = signs_of(labels, plan.train);
  const double scale = median_distance(terms, plan.train);

  SvmOptions svm;
  svm.tol = opt.tol;
  svm.positive_weight = opt.positive_weight;

  double best = -1.0;
  for (double mult : opt.sigma_multipliers) {
    KernelSpec spec = base;
    spec.sigma = mult * scale;
    const Mat K = gram_block(terms, spec, plan.train, plan.train);
    for (double C : opt.c_grid) {
      svm.C = C;
      double total = 0.0;
      for (std::size_t v = 0; v < plan.inner.size(); ++v) {
        std::vector<Eigen::Index> fit;
        for (std::size_t u = 0; u < plan.inner.size(); ++u)
          if (u != v) fit.insert(fit.end(), plan.inner[u].begin(), plan.inner[u].end());
        std::sort(fit.begin(), fit.end());
        const auto& val = plan.inner[v];
        std::vector<int> y_fit, y_val;
        for (auto p : fit) y_fit.push_back(y_train[static_cast<std::size_t>(p)]);
        for (auto p : val) y_val.push_back(y_train[static_cast<std::size_t>(p)]);
        const auto m = svm_train(Mat(K(fit, fit)), y_fit, svm);
        total += accuracy_of(K(val, fit), m, y_val);
      }
      const double score = total / static_cast<double>(plan.inner.size());
      if (score > best) {
        best = score;
        out.sigma = spec.sigma;
        out.C = C;
      }
    }
  }

  KernelSpec spec = base;
  spec.sigma = out.sigma;
  svm.C = out.C;
  const auto model = svm_train(gram_block(terms, spec, plan.train, plan.train), y_train, svm);
  const Mat K_test = gram_block(terms, spec, plan.test, plan.train);
  std::size_t hits = 0;
  for (std::size_t r = 0; r < plan.test.size(); ++r) {
    const double f = svm_decision(model, K_test.row(static_cast<Eigen::Index>(r)).transpose());
    out.test_decisions.push_back(f);
    if (svm_predict(f) == to_sign(labels[static_cast<std::size_t>(plan.test[r])])) ++hits;
  }
  out.accuracy = static_cast<double>(hits) / static_cast<double>(plan.test.size());
  return out;
}

using TermsForFold = std::function<const PairwiseTerms&(int)>;

CvReport run_cv(Eigen::Index n, std::span<const Label> labels, const std::vector<KernelSpec>& specs,
                const CvOptions& opt, std::uint64_t seed, const TermsForFold& terms_for) {
  require(static_cast<Eigen::Index>(labels.size()) == n, ErrorCode::InvalidArgument,
          "nested_cv: label count mismatch");
  require(opt.folds >= 2 && opt.inner_folds >= 2, ErrorCode::InvalidArgument, "nested_cv: need at least two folds");
  require(n >= opt.folds, ErrorCode::InvalidArgument, "nested_cv: fewer instances than folds");
  require(!opt.c_grid.empty() && !opt.sigma_multipliers.empty(), ErrorCode::InvalidArgument,
          "nested_cv: empty hyperparameter grid");

  std::vector<Eigen::Index> all(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) all[static_cast<std::size_t>(i)] = i;
  const auto outer = assign_folds(labels, all, opt.folds, seed);

  CvReport report;
  report.seed = seed;
  report.order = all;
  {
    std::vector<std::size_t> idx(all.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    Rng rng(seed);
    rng.shuffle(idx);
    for (std::size_t i = 0; i < idx.size(); ++i) report.order[i] = static_cast<Eigen::Index>(idx[i]);
  }

  std::vector<FoldPlan> plans(static_cast<std::size_t>(opt.folds));
  for (int k = 0; k < opt.folds; ++k) {
    auto& plan = plans[static_cast<std::size_t>(k)];
    for (Eigen::Index i = 0; i < n; ++i) (outer[static_cast<std::size_t>(i)] == k ? plan.test : plan.train).push_back(i);
    require(!plan.test.empty(), ErrorCode::InvalidArgument, "nested_cv: empty test fold");
    require(both_classes(labels, plan.train), ErrorCode::Degenerate,
            "nested_cv: outer training fold " + std::to_string(k) + " holds a single class");
    const auto inner = assign_folds(labels, plan.train, opt.inner_folds, derive_seed(seed, static_cast<std::uint64_t>(k)));
    plan.inner = partition(inner, opt.inner_folds);
    for (std::size_t v = 0; v < plan.inner.size(); ++v) {
      std::vector<Eigen::Index> fit;
      for (std::size_t u = 0; u < plan.inner.size(); ++u)
        if (u != v)
          for (auto p : plan.inner[u]) fit.push_back(plan.train[static_cast<std::size_t>(p)]);
      require(both_classes(labels, fit), ErrorCode::Degenerate,
              "nested_cv: inner training fold of outer fold " + std::to_string(k) + " holds a single class");
    }
  }

  report.specs.resize(specs.size());
  for (std::size_t s = 0; s < specs.size(); ++s) {
    validate(specs[s]);
    report.specs[s].spec = specs[s];
  }
  for (int k = 0; k < opt.folds; ++k) {
    const auto& terms = terms_for(k);
    for (std::size_t s = 0; s < specs.size(); ++s)
      report.specs[s].folds.push_back(run_fold(terms, labels, specs[s], plans[static_cast<std::size_t>(k)], opt));
  }

  for (auto& sr : report.specs) {
    const auto acc = sr.fold_accuracies();
    double mean = 0.0;
    for (double a : acc) mean += a;
    mean /= static_cast<double>(acc.size());
    double ss = 0.0;
    for (double a : acc) ss += (a - mean) * (a - mean);
    sr.mean = mean;
    sr.standard_error = std::sqrt(ss / static_cast<double>(acc.size() - 1)) / std::sqrt(static_cast<double>(acc.size()));
  }
  return report;
}

}  // namespace

CvReport nested_cv(const PairwiseTerms& terms, std::span<const Label> labels, const std::vector<KernelSpec>& specs,
                   const CvOptions& opt, std::uint64_t seed) {
  return run_cv(terms.size(), labels, specs, opt, seed, [&](int) -> const PairwiseTerms& { return terms; });
}

CvReport nested_cv(const Eigen::Ref<const Mat>& rows, std::span<const Label> labels, const GridConfig& grid,
                   DistributionMode mode, const std::vector<KernelSpec>& specs, const CvOptions& opt,
                   std::uint64_t seed) {
  if (mode == DistributionMode::PerSample) {
    const auto terms = pairwise_terms(rows, sample_distributions(rows, grid));
    return nested_cv(terms, labels, specs, opt, seed);
  }
  // Per-class densities depend on the fitting labels, so they are rebuilt
  // from each outer training fold.
  const auto folds = assign_folds(labels, [&] {
    std::vector<Eigen::Index> all(static_cast<std::size_t>(rows.rows()));
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = static_cast<Eigen::Index>(i);
    return all;
  }(), opt.folds, seed);
  PairwiseTerms current;
  int current_fold = -1;
  return run_cv(rows.rows(), labels, specs, opt, seed, [&](int k) -> const PairwiseTerms& {
    if (k != current_fold) {
      std::vector<Eigen::Index> fit;
      for (std::size_t i = 0; i < folds.size(); ++i)
        if (folds[i] != k) fit.push_back(static_cast<Eigen::Index>(i));
      current = pairwise_terms(rows, class_distributions(rows, labels, fit, grid));
      current_fold = k;
    }
    return current;
  });
}

}  // namespace camo
