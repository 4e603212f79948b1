#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <limits>
#include <string>
#include <vector>

#include "camo/core.hpp"
#include "camo/divergence.hpp"

namespace camo::test {

// Random point on the floored simplex with `n` cells.
inline Vec random_mass(Rng& rng, int n) {
  Vec m(n);
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform();
    // Mix in occasional near-empty cells so the floor is exercised.
    m[i] = rng.uniform() < 0.1 ? 1e-15 * u : u * u;
  }
  return floor_and_normalize(m);
}

// Direct evaluation of the Chisini-Jensen-Shannon sum with long doubles and
// hand-written means, sharing no code with the library.
inline double oracle_cjsd(const std::vector<double>& p, const std::vector<double>& q, ChisiniKind kind) {
  long double s = 0.0L;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const long double a = p[i], b = q[i];
    long double m = 0.0L;
    if (kind == ChisiniKind::AM) m = (a + b) / 2.0L;
    if (kind == ChisiniKind::GM) m = std::sqrt(a * b);
    if (kind == ChisiniKind::HM) m = 2.0L * a * b / (a + b);
    if (a > 0.0L) s += a * std::log(a / m);
    if (b > 0.0L) s += b * std::log(b / m);
  }
  return static_cast<double>(s / 2.0L);
}

inline Mat gaussian_cloud(Rng& rng, Eigen::Index n, Eigen::Index d, double scale, double offset = 0.0) {
  Mat x(n, d);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < d; ++j) x(i, j) = offset + scale * rng.normal();
  return x;
}

// Isotonic least squares through the max-min formula
//   f_i = max_{j <= i} min_{k >= i} mean(y_j..y_k).
inline std::vector<double> minmax_isotonic(const std::vector<double>& y) {
  const std::size_t n = y.size();
  std::vector<double> f(n);
  for (std::size_t i = 0; i < n; ++i) {
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j <= i; ++j) {
      double low = std::numeric_limits<double>::infinity();
      for (std::size_t k = i; k < n; ++k) {
        double s = 0.0;
        for (std::size_t t = j; t <= k; ++t) s += y[t];
        low = std::min(low, s / static_cast<double>(k - j + 1));
      }
      best = std::max(best, low);
    }
    f[i] = best;
  }
  return f;
}

inline std::vector<double> to_std(const Vec& v) { return {v.data(), v.data() + v.size()}; }

// Fresh scratch directory under the build tree, emptied on construction.
inline std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::current_path() / "test-scratch" / name;
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace camo::test
