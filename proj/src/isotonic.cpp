#include <algorithm>

#include "camo/anomaly.hpp"

namespace camo {

std::vector<double> pav(std::span<const double> y, std::span<const double> w) {
  require(w.empty() || w.size() == y.size(), ErrorCode::InvalidArgument, "pav: weight count mismatch");
  struct Block {
    double mean;
    double weight;
    std::size_t count;
  };
  std::vector<Block> blocks;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double wi = w.empty() ? 1.0 : w[i];
    require(wi > 0.0, ErrorCode::InvalidArgument, "pav: weights must be positive");
    blocks.push_back({y[i], wi, 1});
    while (blocks.size() > 1 && blocks[blocks.size() - 2].mean > blocks.back().mean) {
      const auto b = blocks.back();
      blocks.pop_back();
      auto& a = blocks.back();
      a.mean = (a.mean * a.weight + b.mean * b.weight) / (a.weight + b.weight);
      a.weight += b.weight;
      a.count += b.count;
    }
  }
  std::vector<double> out;
  out.reserve(y.size());
  for (const auto& b : blocks) out.insert(out.end(), b.count, b.mean);
  return out;
}

IsotonicCalibrator isotonic_fit(std::span<const double> scores, std::span<const double> targets) {
  require(!scores.empty() && scores.size() == targets.size(), ErrorCode::InvalidArgument,
          "isotonic_fit: need equally many scores and targets");
  require(std::is_sorted(scores.begin(), scores.end()), ErrorCode::InvalidArgument,
          "isotonic_fit: scores must be sorted ascending");
  IsotonicCalibrator c;
  c.breakpoints.assign(scores.begin(), scores.end());
  c.values = pav(targets);
  for (auto& v : c.values) v = std::clamp(v, 0.0, 1.0);
  return c;
}

double IsotonicCalibrator::apply(double score) const {
  require(!breakpoints.empty(), ErrorCode::InvalidArgument, "isotonic: calibrator is empty");
  const auto it = std::upper_bound(breakpoints.begin(), breakpoints.end(), score);
  if (it == breakpoints.begin()) return values.front();
  return values[static_cast<std::size_t>(it - breakpoints.begin()) - 1];
}

}  // namespace camo
