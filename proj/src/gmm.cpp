#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <Eigen/Cholesky>

#include "camo/anomaly.hpp"

namespace camo {

namespace {

double log_sum_exp(const Vec& v) {
  const double top = v.maxCoeff();
  if (!std::isfinite(top)) return top;
  return top + std::log((v.array() - top).exp().sum());
}

// Per-component terms of the penalized objective for row x.
Vec penalized_terms(const GmmModel& m, const Eigen::Ref<const Vec>& x) {
  Vec t = m.component_log_densities(x);
  for (int c = 0; c < m.k(); ++c) t[c] -= 0.5 * m.ridge * m.trace_inverse[static_cast<std::size_t>(c)];
  return t;
}

// M-step from responsibilities. Components with no mass keep their previous
// parameters, which cannot lower the objective.
void m_step(GmmModel& m, const Eigen::Ref<const Mat>& data, const Mat& resp) {
  const auto n = data.rows();
  for (int c = 0; c < m.k(); ++c) {
    const double nk = resp.col(c).sum();
    m.weights[c] = nk / static_cast<double>(n);
    if (nk <= 1e-12 * static_cast<double>(n)) continue;
    const Vec mu = (data.transpose() * resp.col(c)) / nk;
    const Mat centered = data.rowwise() - mu.transpose();
    Mat cov = (centered.transpose() * resp.col(c).asDiagonal() * centered) / nk;
    cov = 0.5 * (cov + cov.transpose());
    cov.diagonal().array() += m.ridge;
    m.means[static_cast<std::size_t>(c)] = mu;
    m.covariances[static_cast<std::size_t>(c)] = cov;
  }
  m.weights /= m.weights.sum();
  m.refresh();
}

}  // namespace

void GmmModel::refresh() {
  const auto d = static_cast<double>(dim());
  cholesky.clear();
  log_norm.clear();
  trace_inverse.clear();
  for (const auto& cov : covariances) {
    Eigen::LLT<Mat> llt(cov);
    require(llt.info() == Eigen::Success, ErrorCode::Numeric, "gmm: covariance is not positive definite");
    const Mat L = llt.matrixL();
    const double log_det = 2.0 * L.diagonal().array().log().sum();
    cholesky.push_back(L);
    log_norm.push_back(-0.5 * (d * std::log(2.0 * std::numbers::pi) + log_det));
    const Mat inv = llt.solve(Mat::Identity(cov.rows(), cov.cols()));
    trace_inverse.push_back(inv.trace());
  }
}

double GmmModel::parameter_count() const {
  const double d = static_cast<double>(dim()), kk = k();
  return (kk - 1.0) + kk * d + kk * d * (d + 1.0) / 2.0;
}

Vec GmmModel::component_log_densities(const Eigen::Ref<const Vec>& x) const {
  require(x.size() == dim(), ErrorCode::InvalidArgument, "gmm: dimension mismatch");
  Vec out(k());
  for (int c = 0; c < k(); ++c) {
    const auto s = static_cast<std::size_t>(c);
    const Vec z = cholesky[s].triangularView<Eigen::Lower>().solve(x - means[s]);
    const double lw = weights[c] > 0.0 ? std::log(weights[c]) : -std::numeric_limits<double>::infinity();
    out[c] = lw + log_norm[s] - 0.5 * z.squaredNorm();
  }
  return out;
}

Vec GmmModel::responsibilities(const Eigen::Ref<const Vec>& x) const {
  const Vec t = penalized_terms(*this, x);
  return (t.array() - log_sum_exp(t)).exp();
}

double gmm_score(const GmmModel& m, const Eigen::Ref<const Vec>& x) { return log_sum_exp(m.component_log_densities(x)); }

GmmModel gmm_fit(const Eigen::Ref<const Mat>& data, const GmmOptions& opt) {
  const auto n = data.rows(), d = data.cols();
  require(opt.k >= 1, ErrorCode::InvalidArgument, "gmm: k must be at least 1");
  require(n > opt.k, ErrorCode::InvalidArgument, "gmm: need more rows than components");
  require(opt.ridge > 0.0, ErrorCode::InvalidArgument, "gmm: ridge must be positive");
  require(data.allFinite(), ErrorCode::InvalidArgument, "gmm: non-finite data");

  // k-means++ seeding, then one hard assignment to start EM.
  Rng rng(opt.seed);
  std::vector<Eigen::Index> centers = {static_cast<Eigen::Index>(rng.index(static_cast<std::size_t>(n)))};
  Vec nearest = (data.rowwise() - data.row(centers[0])).rowwise().squaredNorm();
  while (static_cast<int>(centers.size()) < opt.k) {
    const double total = nearest.sum();
    Eigen::Index pick = 0;
    if (total > 0.0) {
      double u = rng.uniform() * total;
      for (pick = 0; pick < n - 1; ++pick) {
        u -= nearest[pick];
        if (u < 0.0) break;
      }
    } else {
      pick = static_cast<Eigen::Index>(rng.index(static_cast<std::size_t>(n)));
    }
    centers.push_back(pick);
    nearest = nearest.cwiseMin((data.rowwise() - data.row(pick)).rowwise().squaredNorm());
  }
  Mat resp = Mat::Zero(n, opt.k);
  for (Eigen::Index i = 0; i < n; ++i) {
    int best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (int c = 0; c < opt.k; ++c) {
      const double dist = (data.row(i) - data.row(centers[static_cast<std::size_t>(c)])).squaredNorm();
      if (dist < best_d) best_d = dist, best = c;
    }
    resp(i, best) = 1.0;
  }

  GmmModel m;
  m.ridge = opt.ridge;
  m.weights = Vec::Zero(opt.k);
  m.means.assign(static_cast<std::size_t>(opt.k), Vec::Zero(d));
  m.covariances.assign(static_cast<std::size_t>(opt.k), Mat::Identity(d, d));
  for (int c = 0; c < opt.k; ++c) m.means[static_cast<std::size_t>(c)] = data.row(centers[static_cast<std::size_t>(c)]).transpose();
  m_step(m, data, resp);

  double previous = -std::numeric_limits<double>::infinity();
  for (m.iterations = 0; m.iterations < opt.max_iter; ++m.iterations) {
    double objective = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const Vec t = penalized_terms(m, data.row(i).transpose());
      const double lse = log_sum_exp(t);
      objective += lse;
      resp.row(i) = (t.array() - lse).exp().transpose();
    }
    require(std::isfinite(objective), ErrorCode::Numeric, "gmm: non-finite likelihood");
    m.trace.push_back(objective);
    if (objective - previous < opt.tol * static_cast<double>(n)) break;
    previous = objective;
    m_step(m, data, resp);
  }
  return m;
}

double gmm_bic(const GmmModel& m, const Eigen::Ref<const Mat>& data) {
  double ll = 0.0;
  for (Eigen::Index i = 0; i < data.rows(); ++i) ll += gmm_score(m, data.row(i).transpose());
  return -2.0 * ll + m.parameter_count() * std::log(static_cast<double>(data.rows()));
}

GmmModel gmm_select(const Eigen::Ref<const Mat>& data, int k_min, int k_max, const GmmOptions& opt) {
  require(k_min >= 1 && k_max >= k_min, ErrorCode::InvalidArgument, "gmm_select: bad k range");
  GmmModel best;
  double best_bic = std::numeric_limits<double>::infinity();
  for (int k = k_min; k <= k_max && k < data.rows(); ++k) {
    GmmOptions o = opt;
    o.k = k;
    auto m = gmm_fit(data, o);
    const double bic = gmm_bic(m, data);
    if (bic < best_bic) {
      best_bic = bic;
      best = std::move(m);
    }
  }
  require(best.k() > 0, ErrorCode::InvalidArgument, "gmm_select: no admissible k");
  return best;
}

}  // namespace camo
