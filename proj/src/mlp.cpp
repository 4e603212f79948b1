#include <cmath>

#include "camo/classify.hpp"

namespace camo {

namespace {

// log(1 + e^z) without overflow.
double softplus(double z) { return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

}  // namespace

MlpModel mlp_init(Eigen::Index dim, int hidden, std::uint64_t seed) {
  require(hidden >= 1 && dim >= 1, ErrorCode::InvalidArgument, "mlp_init: need hidden >= 1 and dim >= 1");
  Rng rng(seed);
  MlpModel m;
  m.seed = seed;
  m.w1.resize(hidden, dim);
  const double s1 = std::sqrt(2.0 / static_cast<double>(dim));
  for (Eigen::Index r = 0; r < m.w1.rows(); ++r)
    for (Eigen::Index c = 0; c < m.w1.cols(); ++c) m.w1(r, c) = s1 * rng.normal();
  m.b1 = Vec::Zero(hidden);
  m.w2.resize(hidden);
  const double s2 = std::sqrt(2.0 / static_cast<double>(hidden));
  for (Eigen::Index r = 0; r < m.w2.size(); ++r) m.w2[r] = s2 * rng.normal();
  m.b2 = 0.0;
  return m;
}

double mlp_loss(const MlpModel& m, const Eigen::Ref<const Mat>& x, std::span<const double> targets,
                MlpGradient* grad) {
  const auto n = x.rows();
  require(n >= 1 && static_cast<Eigen::Index>(targets.size()) == n, ErrorCode::InvalidArgument,
          "mlp_loss: rows and targets disagree");
  require(x.cols() == m.dim(), ErrorCode::InvalidArgument, "mlp_loss: dimension mismatch");
  const Mat pre = (x * m.w1.transpose()).rowwise() + m.b1.transpose();
  const Mat h = pre.cwiseMax(0.0);
  const Vec z = (h * m.w2).array() + m.b2;
  double loss = 0.0;
  Vec dz(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double t = targets[static_cast<std::size_t>(i)];
    loss += softplus(z[i]) - t * z[i];
    dz[i] = (sigmoid(z[i]) - t) / static_cast<double>(n);
  }
  loss /= static_cast<double>(n);
  if (grad) {
    grad->w2 = h.transpose() * dz;
    grad->b2 = dz.sum();
    Mat dpre = (dz * m.w2.transpose()).array() * (pre.array() > 0.0).cast<double>();
    grad->w1 = dpre.transpose() * x;
    grad->b1 = dpre.colwise().sum().transpose();
  }
  return loss;
}

MlpModel mlp_train(const Eigen::Ref<const Mat>& x, std::span<const Label> labels, const MlpOptions& opt,
                   MlpTrace* trace) {
  const auto n = x.rows();
  require(n >= 1 && static_cast<Eigen::Index>(labels.size()) == n, ErrorCode::InvalidArgument,
          "mlp_train: rows and labels disagree");
  require(opt.epochs >= 0 && opt.lr > 0.0, ErrorCode::InvalidArgument, "mlp_train: bad schedule");
  require(x.allFinite(), ErrorCode::InvalidArgument, "mlp_train: non-finite input");
  auto m = mlp_init(x.cols(), opt.hidden, opt.seed);
  std::vector<double> t(static_cast<std::size_t>(n));
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = labels[i] == Label::Gesture ? 1.0 : 0.0;

  const auto batch = static_cast<std::size_t>(opt.batch_size <= 0 ? n : std::min<Eigen::Index>(opt.batch_size, n));
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<Eigen::Index>(i);
  Rng rng(derive_seed(opt.seed, 1));
  MlpGradient g;
  for (int epoch = 0; epoch < opt.epochs; ++epoch) {
    if (batch < order.size()) rng.shuffle(order);
    for (std::size_t start = 0; start < order.size(); start += batch) {
      const auto end = std::min(order.size(), start + batch);
      std::vector<Eigen::Index> ids(order.begin() + static_cast<std::ptrdiff_t>(start),
                                    order.begin() + static_cast<std::ptrdiff_t>(end));
      std::vector<double> tb;
      tb.reserve(ids.size());
      for (auto i : ids) tb.push_back(t[static_cast<std::size_t>(i)]);
      const double loss = mlp_loss(m, x(ids, Eigen::all), tb, &g);
      require(std::isfinite(loss), ErrorCode::Numeric, "mlp_train: loss diverged; lower the learning rate");
      m.w1 -= opt.lr * g.w1;
      m.b1 -= opt.lr * g.b1;
      m.w2 -= opt.lr * g.w2;
      m.b2 -= opt.lr * g.b2;
    }
    if (trace) {
      const double full = mlp_loss(m, x, t);
      require(std::isfinite(full), ErrorCode::Numeric, "mlp_train: loss diverged; lower the learning rate");
      trace->epoch_loss.push_back(full);
    }
  }
  require(m.w1.allFinite() && m.w2.allFinite() && m.b1.allFinite() && std::isfinite(m.b2), ErrorCode::Numeric,
          "mlp_train: parameters diverged");
  return m;
}

double mlp_predict_proba(const MlpModel& m, const Eigen::Ref<const Vec>& x) {
  require(x.size() == m.dim(), ErrorCode::InvalidArgument, "mlp_predict_proba: dimension mismatch");
  const Vec h = (m.w1 * x + m.b1).cwiseMax(0.0);
  return sigmoid(h.dot(m.w2) + m.b2);
}

Standardizer Standardizer::fit(const Eigen::Ref<const Mat>& rows) {
  require(rows.rows() >= 1, ErrorCode::EmptyDataset, "Standardizer: no rows");
  Standardizer s;
  s.mean = rows.colwise().mean().transpose();
  const Mat c = rows.rowwise() - s.mean.transpose();
  s.scale = (c.array().square().colwise().sum() / static_cast<double>(rows.rows())).sqrt().transpose();
  for (Eigen::Index i = 0; i < s.scale.size(); ++i)
    if (!(s.scale[i] > 0.0)) s.scale[i] = 1.0;
  return s;
}

Mat Standardizer::apply(const Eigen::Ref<const Mat>& rows) const {
  require(rows.cols() == mean.size(), ErrorCode::InvalidArgument, "Standardizer: dimension mismatch");
  return (rows.rowwise() - mean.transpose()).array().rowwise() / scale.transpose().array();
}

}  // namespace camo
