#include <algorithm>
#include <cmath>
#include <numeric>

#include "camo/anomaly.hpp"

namespace camo {

double average_path_length(double m) {
  if (m <= 1.0) return 0.0;
  if (m == 2.0) return 1.0;
  constexpr double kEuler = 0.5772156649;
  return 2.0 * (std::log(m - 1.0) + kEuler) - 2.0 * (m - 1.0) / m;
}

double IsoTree::path_length(const Eigen::Ref<const Vec>& x) const {
  int node = 0;
  double depth = 0.0;
  while (nodes[static_cast<std::size_t>(node)].feature >= 0) {
    const auto& nd = nodes[static_cast<std::size_t>(node)];
    node = x[nd.feature] < nd.split ? nd.left : nd.right;
    depth += 1.0;
  }
  return depth + average_path_length(nodes[static_cast<std::size_t>(node)].size);
}

int IsoTree::depth() const {
  std::vector<int> level(nodes.size(), 0);
  int deepest = 0;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    deepest = std::max(deepest, level[i]);
    if (nodes[i].feature >= 0) {
      level[static_cast<std::size_t>(nodes[i].left)] = level[i] + 1;
      level[static_cast<std::size_t>(nodes[i].right)] = level[i] + 1;
    }
  }
  return deepest;
}

namespace {

void grow(IsoTree& tree, const Eigen::Ref<const Mat>& data, std::vector<Eigen::Index>& ids, std::size_t begin,
          std::size_t end, int depth, int limit, Rng& rng) {
  const auto node = tree.nodes.size();
  tree.nodes.push_back({});
  tree.nodes[node].size = static_cast<int>(end - begin);
  if (depth >= limit || end - begin <= 1) return;

  std::vector<int> usable;
  std::vector<std::pair<double, double>> range(static_cast<std::size_t>(data.cols()));
  for (Eigen::Index c = 0; c < data.cols(); ++c) {
    double lo = data(ids[begin], c), hi = lo;
    for (auto p = begin + 1; p < end; ++p) {
      lo = std::min(lo, data(ids[p], c));
      hi = std::max(hi, data(ids[p], c));
    }
    range[static_cast<std::size_t>(c)] = {lo, hi};
    if (hi > lo) usable.push_back(static_cast<int>(c));
  }
  if (usable.empty()) return;
  const int f = usable[rng.index(usable.size())];
  const auto [lo, hi] = range[static_cast<std::size_t>(f)];
  double split = rng.uniform(lo, hi);
  if (split <= lo) split = std::nextafter(lo, hi);

  const auto mid = std::partition(ids.begin() + static_cast<std::ptrdiff_t>(begin),
                                  ids.begin() + static_cast<std::ptrdiff_t>(end),
                                  [&](Eigen::Index id) { return data(id, f) < split; });
  const auto cut = static_cast<std::size_t>(mid - ids.begin());
  tree.nodes[node].feature = f;
  tree.nodes[node].split = split;
  tree.nodes[node].left = static_cast<int>(tree.nodes.size());
  grow(tree, data, ids, begin, cut, depth + 1, limit, rng);
  tree.nodes[node].right = static_cast<int>(tree.nodes.size());
  grow(tree, data, ids, cut, end, depth + 1, limit, rng);
}

}  // namespace

IsoForest iforest_train(const Eigen::Ref<const Mat>& data, int n_trees, int psi, std::uint64_t seed) {
  const auto n = data.rows();
  require(n_trees >= 1, ErrorCode::InvalidArgument, "iforest: need at least one tree");
  require(psi >= 2, ErrorCode::InvalidArgument, "iforest: subsample size must be at least 2");
  require(psi <= n, ErrorCode::InvalidArgument, "iforest: subsample size exceeds the data");
  require(data.allFinite(), ErrorCode::InvalidArgument, "iforest: non-finite data");
  IsoForest f;
  f.psi = psi;
  f.dim = static_cast<int>(data.cols());
  f.seed = seed;
  const int limit = static_cast<int>(std::ceil(std::log2(static_cast<double>(psi))));
  Rng rng(seed);
  std::vector<Eigen::Index> all(static_cast<std::size_t>(n));
  std::iota(all.begin(), all.end(), Eigen::Index{0});
  for (int t = 0; t < n_trees; ++t) {
    // Partial Fisher-Yates draws psi rows without replacement.
    for (std::size_t k = 0; k < static_cast<std::size_t>(psi); ++k)
      std::swap(all[k], all[k + rng.index(all.size() - k)]);
    std::vector<Eigen::Index> ids(all.begin(), all.begin() + psi);
    IsoTree tree;
    grow(tree, data, ids, 0, ids.size(), 0, limit, rng);
    f.trees.push_back(std::move(tree));
  }
  return f;
}

double IsoForest::mean_path_length(const Eigen::Ref<const Vec>& x) const {
  require(x.size() == dim, ErrorCode::InvalidArgument, "iforest: dimension mismatch");
  double total = 0.0;
  for (const auto& t : trees) total += t.path_length(x);
  return total / static_cast<double>(trees.size());
}

double iforest_score(const IsoForest& f, const Eigen::Ref<const Vec>& x) {
  return std::exp2(-f.mean_path_length(x) / average_path_length(f.psi));
}

}  // namespace camo
