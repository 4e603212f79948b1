#include "camo/divergence.hpp"

#include <algorithm>
#include <numbers>

namespace camo {

std::string_view to_string(ChisiniKind k) {
  switch (k) {
    case ChisiniKind::AM: return "AM";
    case ChisiniKind::GM: return "GM";
    case ChisiniKind::HM: return "HM";
  }
  return "?";
}

ChisiniKind parse_chisini(std::string_view s) {
  if (s == "AM" || s == "am") return ChisiniKind::AM;
  if (s == "GM" || s == "gm") return ChisiniKind::GM;
  if (s == "HM" || s == "hm") return ChisiniKind::HM;
  fail(ErrorCode::InvalidArgument, "unknown Chisini mean '" + std::string(s) + "'");
}

std::string_view to_string(DistributionMode m) {
  return m == DistributionMode::PerSample ? "per-sample" : "per-class";
}

DistributionMode parse_distribution_mode(std::string_view s) {
  if (s == "per-sample") return DistributionMode::PerSample;
  if (s == "per-class") return DistributionMode::PerClass;
  fail(ErrorCode::InvalidArgument, "unknown distribution mode '" + std::string(s) + "'");
}

Vec GridConfig::evaluation_points() const {
  require(points >= 2 && hi > lo, ErrorCode::InvalidArgument, "grid: need >= 2 points and hi > lo");
  Vec g(points);
  const double step = (hi - lo) / (points - 1);
  for (int i = 0; i < points; ++i) g[i] = lo + step * i;
  g[points - 1] = hi;
  return g;
}

Vec floor_and_normalize(const Eigen::Ref<const Vec>& mass) {
  const double total = mass.sum();
  Vec out = total > 0.0 && std::isfinite(total) ? Vec(mass / total) : Vec::Constant(mass.size(), 1.0);
  out = out.cwiseMax(kMassFloor);
  return out / out.sum();
}

double silverman_bandwidth(std::span<const double> values) {
  const auto n = values.size();
  if (n < 2) return 0.0;
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(n);
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / static_cast<double>(n - 1));
  if (sd == 0.0) return 0.0;

  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  auto quantile = [&](double q) {
    const double pos = q * static_cast<double>(n - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, n - 1);
    return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
  };
  const double iqr = quantile(0.75) - quantile(0.25);
  double spread = std::min(sd, iqr / 1.34);
  if (spread <= 0.0) spread = sd;
  return 0.9 * spread * std::pow(static_cast<double>(n), -0.2);
}

namespace {

Vec gaussian_kde(std::span<const double> values, const Vec& points, double h) {
  Vec mass = Vec::Zero(points.size());
  const double inv = 1.0 / h;
  for (double v : values)
    for (Eigen::Index g = 0; g < points.size(); ++g) {
      const double z = (points[g] - v) * inv;
      mass[g] += std::exp(-0.5 * z * z);
    }
  return mass;
}

}  // namespace

Distribution sample_to_distribution(const Eigen::Ref<const Vec>& x, const GridConfig& grid,
                                    std::optional<double> bandwidth) {
  require(x.size() >= 1, ErrorCode::InvalidArgument, "sample_to_distribution: empty sample");
  require(x.allFinite(), ErrorCode::InvalidArgument, "sample_to_distribution: non-finite input");
  const std::span<const double> values(x.data(), static_cast<std::size_t>(x.size()));
  double h = bandwidth.value_or(0.0);
  if (h <= 0.0) h = silverman_bandwidth(values);
  if (h <= 0.0) h = 0.01 * (grid.hi - grid.lo);

  Distribution d;
  d.grid = grid.evaluation_points();
  d.mass = floor_and_normalize(gaussian_kde(values, d.grid, h));
  return d;
}

GridConfig grid_for_samples(const Eigen::Ref<const Mat>& rows, int points) {
  require(rows.size() > 0, ErrorCode::EmptyDataset, "grid_for_samples: no samples");
  require(rows.allFinite(), ErrorCode::InvalidArgument, "grid_for_samples: non-finite input");
  double lo = rows.minCoeff(), hi = rows.maxCoeff();
  double widest = 0.0;
  for (Eigen::Index i = 0; i < rows.rows(); ++i) {
    const Vec r = rows.row(i).transpose();
    widest = std::max(widest, silverman_bandwidth({r.data(), static_cast<std::size_t>(r.size())}));
  }
  if (widest == 0.0) widest = hi > lo ? 0.01 * (hi - lo) : 1.0;
  return {points, lo - 3.0 * widest, hi + 3.0 * widest};
}

std::vector<Distribution> sample_distributions(const Eigen::Ref<const Mat>& rows, const GridConfig& grid) {
  std::vector<Distribution> out;
  out.reserve(static_cast<std::size_t>(rows.rows()));
  for (Eigen::Index i = 0; i < rows.rows(); ++i) out.push_back(sample_to_distribution(rows.row(i).transpose(), grid));
  return out;
}

std::vector<Distribution> class_distributions(const Eigen::Ref<const Mat>& rows, std::span<const Label> labels,
                                              std::span<const Eigen::Index> fit_ids, const GridConfig& grid) {
  require(labels.size() == static_cast<std::size_t>(rows.rows()), ErrorCode::InvalidArgument,
          "class_distributions: label count mismatch");
  const Vec points = grid.evaluation_points();
  std::array<Distribution, 2> per_class;
  for (Label cls : {Label::NoGesture, Label::Gesture}) {
    std::vector<double> pooled;
    for (auto id : fit_ids)
      if (labels[static_cast<std::size_t>(id)] == cls)
        for (Eigen::Index c = 0; c < rows.cols(); ++c) pooled.push_back(rows(id, c));
    require(!pooled.empty(), ErrorCode::Degenerate,
            "class_distributions: no fit rows for class " + std::string(to_string(cls)));
    double h = silverman_bandwidth(pooled);
    if (h <= 0.0) h = 0.01 * (grid.hi - grid.lo);
    auto& d = per_class[static_cast<std::size_t>(cls)];
    d.grid = points;
    d.mass = floor_and_normalize(gaussian_kde(pooled, points, h));
  }

  const double step = (grid.hi - grid.lo) / (grid.points - 1);
  auto nearest = [&](double v) {
    const auto g = static_cast<Eigen::Index>(std::llround((v - grid.lo) / step));
    return std::clamp<Eigen::Index>(g, 0, grid.points - 1);
  };
  std::vector<Distribution> out;
  out.reserve(static_cast<std::size_t>(rows.rows()));
  for (Eigen::Index i = 0; i < rows.rows(); ++i) {
    double ll0 = 0.0, ll1 = 0.0;
    for (Eigen::Index c = 0; c < rows.cols(); ++c) {
      const auto g = nearest(rows(i, c));
      ll0 += std::log(per_class[0].mass[g]);
      ll1 += std::log(per_class[1].mass[g]);
    }
    out.push_back(per_class[ll1 > ll0 ? 1 : 0]);
  }
  return out;
}

}  // namespace camo
