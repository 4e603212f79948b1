#include <Eigen/SVD>

#include "camo/features.hpp"

namespace camo {

PcaModel pca_fit(const Eigen::Ref<const Mat>& data, Eigen::Index k) {
  const auto n = data.rows(), d = data.cols();
  require(n >= 2, ErrorCode::InvalidArgument, "pca_fit: need at least two observations");
  require(k >= 1 && k <= std::min(n - 1, d), ErrorCode::InvalidArgument,
          "pca_fit: k must lie in [1, min(n-1, d)]");
  require(data.allFinite(), ErrorCode::InvalidArgument, "pca_fit: non-finite data");

  PcaModel model;
  model.mean = data.colwise().mean().transpose();
  const Mat centered = data.rowwise() - model.mean.transpose();
  Eigen::BDCSVD<Mat> svd(centered, Eigen::ComputeThinV);
  const Vec& s = svd.singularValues();
  const double total = s.squaredNorm();
  require(total > 0.0, ErrorCode::Degenerate, "pca_fit: zero total variance");

  model.components = svd.matrixV().leftCols(k).transpose();
  for (Eigen::Index r = 0; r < k; ++r) {
    Eigen::Index arg = 0;
    model.components.row(r).cwiseAbs().maxCoeff(&arg);
    if (model.components(r, arg) < 0.0) model.components.row(r) *= -1.0;
  }
  model.explained_variance = s.head(k).array().square() / static_cast<double>(n - 1);
  model.explained_variance_ratio = s.head(k).array().square() / total;
  return model;
}

Vec pca_transform(const PcaModel& model, const Eigen::Ref<const Vec>& x) {
  require(x.size() == model.dim(), ErrorCode::InvalidArgument, "pca_transform: dimension mismatch");
  return model.components * (x - model.mean);
}

Mat pca_transform_rows(const PcaModel& model, const Eigen::Ref<const Mat>& data) {
  require(data.cols() == model.dim(), ErrorCode::InvalidArgument, "pca_transform: dimension mismatch");
  return (data.rowwise() - model.mean.transpose()) * model.components.transpose();
}

Vec pca_reconstruct(const PcaModel& model, const Eigen::Ref<const Vec>& z) {
  require(z.size() == model.k(), ErrorCode::InvalidArgument, "pca_reconstruct: dimension mismatch");
  return model.mean + model.components.transpose() * z;
}

}  // namespace camo
