#pragma once

#include <cmath>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "camo/core.hpp"

namespace camo {

enum class ChisiniKind { AM, GM, HM };

inline constexpr ChisiniKind kAllChisini[] = {ChisiniKind::AM, ChisiniKind::GM, ChisiniKind::HM};

std::string_view to_string(ChisiniKind k);
ChisiniKind parse_chisini(std::string_view s);

// Elementwise Chisini means. HM(0, 0) is defined as 0.
template <typename Scalar>
Scalar chisini_mean(Scalar p, Scalar q, ChisiniKind kind) {
  require(p >= Scalar(0) && q >= Scalar(0), ErrorCode::InvalidArgument, "chisini_mean: negative input");
  if (p == q) return p;
  switch (kind) {
    case ChisiniKind::AM: return (p + q) / Scalar(2);
    case ChisiniKind::GM: return std::sqrt(p * q);
    case ChisiniKind::HM: return p + q > Scalar(0) ? Scalar(2) * p * q / (p + q) : Scalar(0);
  }
  return Scalar(0);
}

// Natural-log Chisini-Jensen-Shannon divergence between two mass vectors on
// the same support. Terms with zero mass contribute zero.
template <typename DerivedP, typename DerivedQ>
typename DerivedP::Scalar cjsd(const Eigen::MatrixBase<DerivedP>& p, const Eigen::MatrixBase<DerivedQ>& q,
                               ChisiniKind kind) {
  using Scalar = typename DerivedP::Scalar;
  require(p.size() == q.size(), ErrorCode::InvalidArgument, "cjsd: support size mismatch");
  auto term = [](Scalar a, Scalar m) { return a > Scalar(0) ? a * std::log(a / m) : Scalar(0); };
  Scalar sum_p(0), sum_q(0);
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    const Scalar pi = p.derived().coeff(i), qi = q.derived().coeff(i);
    const Scalar m = chisini_mean(pi, qi, kind);
    sum_p += term(pi, m);
    sum_q += term(qi, m);
  }
  return std::max(Scalar(0), Scalar(0.5) * (sum_p + sum_q));
}

template <typename DerivedP, typename DerivedQ>
typename DerivedP::Scalar mcjsd(const Eigen::MatrixBase<DerivedP>& p, const Eigen::MatrixBase<DerivedQ>& q,
                                ChisiniKind kind) {
  return std::sqrt(cjsd(p, q, kind));
}

inline constexpr double kMassFloor = 1e-12;

// Probability mass on a shared grid of evaluation points.
template <typename Scalar>
struct BasicDistribution {
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  Vector grid;
  Vector mass;

  bool same_grid(const BasicDistribution& other) const {
    return grid.size() == other.grid.size() && grid == other.grid;
  }
};

using Distribution = BasicDistribution<double>;

template <typename Scalar>
Scalar cjsd(const BasicDistribution<Scalar>& p, const BasicDistribution<Scalar>& q, ChisiniKind kind) {
  require(p.same_grid(q), ErrorCode::InvalidArgument, "cjsd: distributions live on different grids");
  return cjsd(p.mass, q.mass, kind);
}

template <typename Scalar>
Scalar mcjsd(const BasicDistribution<Scalar>& p, const BasicDistribution<Scalar>& q, ChisiniKind kind) {
  return std::sqrt(cjsd(p, q, kind));
}

// Floors every entry at kMassFloor and renormalizes to unit sum.
Vec floor_and_normalize(const Eigen::Ref<const Vec>& mass);

struct GridConfig {
  int points = 64;
  double lo = 0.0;
  double hi = 1.0;

  Vec evaluation_points() const;
};

// Silverman's rule of thumb, 0.9 * min(sd, IQR/1.34) * n^(-1/5), falling
// back to sd when the IQR vanishes. Returns 0 for constant input.
double silverman_bandwidth(std::span<const double> values);

// Gaussian KDE over the d channel values of one sample, evaluated at the
// grid points. `bandwidth` <= 0 or empty selects Silverman's rule, with 1% of
// the grid span for constant samples.
Distribution sample_to_distribution(const Eigen::Ref<const Vec>& x, const GridConfig& grid,
                                    std::optional<double> bandwidth = std::nullopt);

// Shared grid for a dataset: global value range padded by three times the
// largest per-sample Silverman bandwidth.
GridConfig grid_for_samples(const Eigen::Ref<const Mat>& rows, int points = 64);

enum class DistributionMode { PerSample, PerClass };

std::string_view to_string(DistributionMode m);
DistributionMode parse_distribution_mode(std::string_view s);

std::vector<Distribution> sample_distributions(const Eigen::Ref<const Mat>& rows, const GridConfig& grid);

// Class-density reading: one KDE per class over all channel values of the
// `fit_ids` rows, and every row is assigned the class density under which
// its own values have the higher mean log-likelihood. Row labels are only
// read for `fit_ids`.
std::vector<Distribution> class_distributions(const Eigen::Ref<const Mat>& rows, std::span<const Label> labels,
                                              std::span<const Eigen::Index> fit_ids, const GridConfig& grid);

}  // namespace camo
