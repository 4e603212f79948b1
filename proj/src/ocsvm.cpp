#include <algorithm>
#include <cmath>
#include <limits>

#include "camo/anomaly.hpp"

namespace camo {

namespace {

double median_row_distance(const Eigen::Ref<const Mat>& data) {
  std::vector<double> d;
  const auto n = data.rows();
  d.reserve(static_cast<std::size_t>(n * (n - 1) / 2));
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j) d.push_back((data.row(i) - data.row(j)).squaredNorm());
  const auto mid = d.begin() + static_cast<std::ptrdiff_t>(d.size() / 2);
  std::nth_element(d.begin(), mid, d.end());
  double m = *mid;
  if (d.size() % 2 == 0) m = 0.5 * (m + *std::max_element(d.begin(), mid));
  return std::sqrt(m);
}

}  // namespace

double OcSvmModel::decision(const Eigen::Ref<const Vec>& x) const {
  require(x.size() == support.cols(), ErrorCode::InvalidArgument, "ocsvm: dimension mismatch");
  const double inv = 1.0 / (2.0 * sigma * sigma);
  double f = 0.0;
  for (Eigen::Index i = 0; i < support.rows(); ++i)
    f += alphas[i] * std::exp(-(support.row(i).transpose() - x).squaredNorm() * inv);
  return f - rho;
}

OcSvmModel ocsvm_train(const Eigen::Ref<const Mat>& data, const OcSvmOptions& opt) {
  const auto n = data.rows();
  require(opt.nu > 0.0 && opt.nu <= 1.0, ErrorCode::InvalidArgument, "ocsvm: nu must lie in (0, 1]");
  require(n >= 2, ErrorCode::Degenerate, "ocsvm: need at least two training points");
  require(data.allFinite(), ErrorCode::InvalidArgument, "ocsvm: non-finite data");
  bool distinct = false;
  for (Eigen::Index i = 1; i < n && !distinct; ++i) distinct = data.row(i) != data.row(0);
  require(distinct, ErrorCode::Degenerate, "ocsvm: all training points are identical");

  OcSvmModel m;
  m.nu = opt.nu;
  m.sigma = opt.sigma > 0.0 ? opt.sigma : median_row_distance(data);
  if (!(m.sigma > 0.0)) m.sigma = 1.0;
  const double inv = 1.0 / (2.0 * m.sigma * m.sigma);
  Mat K(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    K(i, i) = 1.0;
    for (Eigen::Index j = i + 1; j < n; ++j) K(i, j) = K(j, i) = std::exp(-(data.row(i) - data.row(j)).squaredNorm() * inv);
  }

  // Minimize a'Ka / 2 subject to 0 <= a <= U and sum(a) = 1.
  const double U = 1.0 / (opt.nu * static_cast<double>(n));
  Vec a = Vec::Constant(n, 1.0 / static_cast<double>(n));
  Vec G = K * a;
  const std::int64_t max_iter = opt.max_iter > 0 ? opt.max_iter : std::max<std::int64_t>(100000, 100 * n);
  for (m.iterations = 0; m.iterations < max_iter; ++m.iterations) {
    Eigen::Index i = -1, j = -1;
    double g_min = std::numeric_limits<double>::infinity(), g_max = -std::numeric_limits<double>::infinity();
    for (Eigen::Index t = 0; t < n; ++t) {
      if (a[t] < U && G[t] < g_min) g_min = G[t], i = t;
      if (a[t] > 0.0 && G[t] > g_max) g_max = G[t], j = t;
    }
    if (i < 0 || j < 0 || g_max - g_min < opt.tol) {
      m.converged = true;
      break;
    }
    const double eta = std::max(K(i, i) + K(j, j) - 2.0 * K(i, j), 1e-12);
    const double t = std::min({(g_max - g_min) / eta, U - a[i], a[j]});
    if (t <= 0.0) break;
    double ai = a[i] + t, aj = a[j] - t;
    if (U - ai <= 1e-14 * U) ai = U;
    if (aj <= 1e-14 * U) aj = 0.0;
    const double di = ai - a[i], dj = aj - a[j];
    a[i] = ai;
    a[j] = aj;
    G += di * K.col(i) + dj * K.col(j);
  }

  double sum = 0.0;
  int free = 0;
  double lo = -std::numeric_limits<double>::infinity(), hi = std::numeric_limits<double>::infinity();
  for (Eigen::Index t = 0; t < n; ++t) {
    if (a[t] > 0.0 && a[t] < U) {
      sum += G[t];
      ++free;
    } else if (a[t] >= U) {
      lo = std::max(lo, G[t]);
    } else {
      hi = std::min(hi, G[t]);
    }
  }
  if (free > 0) m.rho = sum / free;
  else if (std::isfinite(lo) && std::isfinite(hi)) m.rho = 0.5 * (lo + hi);
  else m.rho = std::isfinite(lo) ? lo : hi;

  std::vector<Eigen::Index> sv;
  for (Eigen::Index t = 0; t < n; ++t)
    if (a[t] > 0.0) sv.push_back(t);
  m.alphas = a(sv);
  m.support = data(sv, Eigen::all);
  return m;
}

}  // namespace camo
