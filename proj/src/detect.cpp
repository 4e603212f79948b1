#include <algorithm>
#include <cmath>
#include <numeric>

#include "camo/anomaly.hpp"

namespace camo {

std::string_view to_string(DetectorKind k) {
  switch (k) {
    case DetectorKind::OneClassSvm: return "ocsvm";
    case DetectorKind::IsolationForest: return "iforest";
    case DetectorKind::GmmIsotonic: return "gmm";
  }
  return "?";
}

DetectorKind parse_detector(std::string_view s) {
  for (auto k : kAllDetectors)
    if (to_string(k) == s) return k;
  fail(ErrorCode::InvalidArgument, "unknown detector '" + std::string(s) + "'");
}

double Detector::raw_score(const Eigen::Ref<const Vec>& x) const {
  switch (kind) {
    case DetectorKind::OneClassSvm: return ocsvm.decision(x);
    case DetectorKind::IsolationForest: return -iforest_score(forest, x);
    case DetectorKind::GmmIsotonic: return gmm_score(gmm, x);
  }
  return 0.0;
}

double Detector::score(const Eigen::Ref<const Vec>& x) const {
  const double raw = raw_score(x);
  return kind == DetectorKind::GmmIsotonic ? calibrator.apply(raw) : raw;
}

namespace {

std::vector<Eigen::Index> sample_rows(Eigen::Index n, Eigen::Index keep, Rng& rng) {
  std::vector<Eigen::Index> ids(static_cast<std::size_t>(n));
  std::iota(ids.begin(), ids.end(), Eigen::Index{0});
  if (keep > 0 && keep < n) {
    rng.shuffle(ids);
    ids.resize(static_cast<std::size_t>(keep));
    std::sort(ids.begin(), ids.end());
  }
  return ids;
}

}  // namespace

Detector train_detector(DetectorKind kind, const Eigen::Ref<const Mat>& train_rows, const DetectorOptions& opt) {
  const auto n = train_rows.rows();
  require(n >= 2, ErrorCode::EmptyDataset, "train_detector: need at least two training rows");
  Rng rng(opt.seed);
  Detector d;
  d.kind = kind;
  switch (kind) {
    case DetectorKind::OneClassSvm: {
      const auto ids = sample_rows(n, opt.max_train, rng);
      OcSvmOptions o;
      o.nu = opt.nu;
      d.ocsvm = ocsvm_train(train_rows(ids, Eigen::all), o);
      d.threshold = 0.0;
      break;
    }
    case DetectorKind::IsolationForest: {
      const int psi = static_cast<int>(std::min<Eigen::Index>(opt.psi, n));
      d.forest = iforest_train(train_rows, opt.n_trees, psi, derive_seed(opt.seed, 1));
      // Threshold at the nu-quantile of training scores, so about a fraction
      // nu of the training class is flagged.
      std::vector<double> s;
      s.reserve(static_cast<std::size_t>(n));
      for (Eigen::Index i = 0; i < n; ++i) s.push_back(d.raw_score(train_rows.row(i).transpose()));
      std::sort(s.begin(), s.end());
      const auto q = static_cast<std::size_t>(std::floor(opt.nu * static_cast<double>(n - 1)));
      d.threshold = s[q];
      break;
    }
    case DetectorKind::GmmIsotonic: {
      // Hold out a calibration slice of the training class.
      std::vector<Eigen::Index> ids(static_cast<std::size_t>(n));
      std::iota(ids.begin(), ids.end(), Eigen::Index{0});
      rng.shuffle(ids);
      auto n_cal = static_cast<Eigen::Index>(std::llround(opt.calibration_fraction * static_cast<double>(n)));
      n_cal = std::clamp<Eigen::Index>(n_cal, 1, n - 2);
      std::vector<Eigen::Index> cal(ids.begin(), ids.begin() + n_cal), fit(ids.begin() + n_cal, ids.end());
      std::sort(cal.begin(), cal.end());
      std::sort(fit.begin(), fit.end());
      GmmOptions go;
      go.seed = derive_seed(opt.seed, 2);
      go.ridge = opt.ridge;
      const Mat fit_rows = train_rows(fit, Eigen::all);
      d.gmm = gmm_select(fit_rows, 1, opt.gmm_k_max, go);

      std::vector<double> cal_scores;
      for (auto i : cal) cal_scores.push_back(gmm_score(d.gmm, train_rows.row(i).transpose()));
      std::sort(cal_scores.begin(), cal_scores.end());
      // Pure one-class data has no negatives; anchors with target 0 sit at
      // the lowest calibration score and sort ahead of it.
      const auto anchors = std::max<std::size_t>(
          1, static_cast<std::size_t>(std::llround(opt.anchor_fraction * static_cast<double>(cal_scores.size()))));
      std::vector<double> scores(anchors, cal_scores.front()), targets(anchors, 0.0);
      scores.insert(scores.end(), cal_scores.begin(), cal_scores.end());
      targets.insert(targets.end(), cal_scores.size(), 1.0);
      d.calibrator = isotonic_fit(scores, targets);
      d.threshold = 0.5;
      break;
    }
  }
  return d;
}

DetectionResult detect(const Detector& d, const Eigen::Ref<const Mat>& rows, double threshold, Label train_class) {
  require(rows.rows() > 0, ErrorCode::EmptyDataset, "detect: empty evaluation set");
  const Label other = train_class == Label::Gesture ? Label::NoGesture : Label::Gesture;
  DetectionResult r;
  r.threshold = threshold;
  for (Eigen::Index i = 0; i < rows.rows(); ++i) {
    const Vec x = rows.row(i).transpose();
    const double raw = d.raw_score(x);
    const double s = d.kind == DetectorKind::GmmIsotonic ? d.calibrator.apply(raw) : raw;
    const bool in = s >= threshold;
    r.raw_scores.push_back(raw);
    r.scores.push_back(s);
    r.inlier.push_back(in);
    r.predicted.push_back(in ? train_class : other);
  }
  return r;
}

std::vector<Eigen::Index> detection_eval_ids(std::span<const Label> labels, std::span<const Eigen::Index> holdout_ids,
                                             Label train_class) {
  std::vector<Eigen::Index> out;
  for (auto id : holdout_ids)
    if (labels[static_cast<std::size_t>(id)] == train_class) out.push_back(id);
  for (std::size_t i = 0; i < labels.size(); ++i)
    if (labels[i] != train_class) out.push_back(static_cast<Eigen::Index>(i));
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  require(!out.empty(), ErrorCode::EmptyDataset, "detect: empty evaluation set");
  return out;
}

}  // namespace camo
