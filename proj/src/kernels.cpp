#include "camo/kernels.hpp"

#include <algorithm>

#include <Eigen/Eigenvalues>

#include "io_util.hpp"

namespace camo {

std::string_view to_string(KernelFamily f) {
  switch (f) {
    case KernelFamily::Rbf: return "RBF";
    case KernelFamily::Amplified: return "Amplified";
    case KernelFamily::Scaled: return "Scaled";
    case KernelFamily::AmplifiedScaled: return "AmplifiedScaled";
  }
  return "?";
}

std::string_view to_string(DivergenceKind d) {
  switch (d) {
    case DivergenceKind::None: return "None";
    case DivergenceKind::Cjsd: return "CJSD";
    case DivergenceKind::Mcjsd: return "MCJSD";
  }
  return "?";
}

std::string KernelSpec::name() const {
  if (is_rbf()) return "RBF-" + std::string(to_string(mean));
  return std::string(to_string(family)) + "-" + std::string(to_string(divergence)) + "-" +
         std::string(to_string(mean));
}

void validate(const KernelSpec& spec) {
  require(spec.sigma > 0.0, ErrorCode::InvalidArgument, "kernel: sigma must be positive");
  require(spec.is_rbf() == (spec.divergence == DivergenceKind::None), ErrorCode::InvalidArgument,
          "kernel: RBF takes no divergence and every other family needs one");
}

KernelSpec parse_kernel_spec(std::string_view name, double sigma) {
  for (const auto& s : enumerate_kernel_specs(sigma))
    if (s.name() == name) return s;
  fail(ErrorCode::InvalidArgument, "unknown kernel '" + std::string(name) + "'");
}

std::vector<KernelSpec> kernel_specs_for_family(ChisiniKind family, double sigma) {
  std::vector<KernelSpec> specs;
  specs.push_back({KernelFamily::Rbf, DivergenceKind::None, family, sigma});
  for (auto div : {DivergenceKind::Cjsd, DivergenceKind::Mcjsd})
    for (auto fam : {KernelFamily::Amplified, KernelFamily::Scaled, KernelFamily::AmplifiedScaled})
      specs.push_back({fam, div, family, sigma});
  return specs;
}

std::vector<KernelSpec> enumerate_kernel_specs(double sigma) {
  std::vector<KernelSpec> specs;
  for (auto mean : kAllChisini) {
    auto part = kernel_specs_for_family(mean, sigma);
    specs.insert(specs.end(), part.begin(), part.end());
  }
  return specs;
}

double divergence_value(const Distribution& pi, const Distribution& pj, DivergenceKind kind, ChisiniKind mean) {
  switch (kind) {
    case DivergenceKind::Cjsd: return cjsd(pi, pj, mean);
    case DivergenceKind::Mcjsd: return mcjsd(pi, pj, mean);
    case DivergenceKind::None: break;
  }
  fail(ErrorCode::InvalidArgument, "divergence_value: no divergence selected");
}

double divergence_kernel(const Eigen::Ref<const Vec>& xi, const Eigen::Ref<const Vec>& xj,
                         const Distribution& pi, const Distribution& pj, const KernelSpec& spec) {
  validate(spec);
  require(!spec.is_rbf(), ErrorCode::InvalidArgument, "divergence_kernel: RBF spec given");
  require(xi.size() == xj.size(), ErrorCode::InvalidArgument, "divergence_kernel: dimension mismatch");
  const double d = divergence_value(pi, pj, spec.divergence, spec.mean);
  return kernel_from_terms(spec.family, d, (xi - xj).squaredNorm(), spec.sigma);
}

double kernel_value(const Eigen::Ref<const Vec>& xi, const Eigen::Ref<const Vec>& xj, const Distribution& pi,
                    const Distribution& pj, const KernelSpec& spec) {
  if (spec.is_rbf()) {
    validate(spec);
    return rbf(xi, xj, spec.sigma);
  }
  return divergence_kernel(xi, xj, pi, pj, spec);
}

GramMatrix gram(const Eigen::Ref<const Mat>& rows, const std::vector<Distribution>& dists, const KernelSpec& spec) {
  validate(spec);
  const auto n = rows.rows();
  require(n > 0, ErrorCode::EmptyDataset, "gram: no instances");
  require(spec.is_rbf() || static_cast<Eigen::Index>(dists.size()) == n, ErrorCode::InvalidArgument,
          "gram: distributions not aligned with instances");
  GramMatrix g;
  g.spec = spec;
  g.values.resize(n, n);
  g.instance_ids.resize(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) g.instance_ids[static_cast<std::size_t>(i)] = i;
  static const Distribution kNone;
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& pi = spec.is_rbf() ? kNone : dists[static_cast<std::size_t>(i)];
    for (Eigen::Index j = i; j < n; ++j) {
      const auto& pj = spec.is_rbf() ? kNone : dists[static_cast<std::size_t>(j)];
      const double v = kernel_value(rows.row(i).transpose(), rows.row(j).transpose(), pi, pj, spec);
      g.values(i, j) = v;
      g.values(j, i) = v;
    }
  }
  return g;
}

Mat pairwise_sq_dist(const Eigen::Ref<const Mat>& a, const Eigen::Ref<const Mat>& b) {
  require(a.cols() == b.cols(), ErrorCode::InvalidArgument, "pairwise_sq_dist: dimension mismatch");
  Mat out(a.rows(), b.rows());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < b.rows(); ++j) out(i, j) = (a.row(i) - b.row(j)).squaredNorm();
  return out;
}

PairwiseTerms pairwise_terms(const Eigen::Ref<const Mat>& rows, const std::vector<Distribution>& dists,
                             std::span<const ChisiniKind> means) {
  const auto n = rows.rows();
  require(static_cast<Eigen::Index>(dists.size()) == n, ErrorCode::InvalidArgument,
          "pairwise_terms: distributions not aligned with instances");
  PairwiseTerms t;
  t.sq_dist = Mat::Zero(n, n);
  for (auto k : means) t.cjsd[static_cast<std::size_t>(k)] = Mat::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double sq = (rows.row(i) - rows.row(j)).squaredNorm();
      t.sq_dist(i, j) = t.sq_dist(j, i) = sq;
      const auto& pi = dists[static_cast<std::size_t>(i)];
      const auto& pj = dists[static_cast<std::size_t>(j)];
      for (auto k : means) {
        const double d = cjsd(pi, pj, k);
        auto& m = t.cjsd[static_cast<std::size_t>(k)];
        m(i, j) = m(j, i) = d;
      }
    }
  return t;
}

Mat gram_block(const PairwiseTerms& terms, const KernelSpec& spec, std::span<const Eigen::Index> row_ids,
               std::span<const Eigen::Index> col_ids) {
  validate(spec);
  const Mat* div = spec.is_rbf() ? nullptr : &terms.divergence(spec.mean);
  require(!div || div->rows() == terms.size(), ErrorCode::InvalidArgument,
          "gram_block: divergence terms for " + std::string(to_string(spec.mean)) + " were not computed");
  const bool root = spec.divergence == DivergenceKind::Mcjsd;
  Mat out(static_cast<Eigen::Index>(row_ids.size()), static_cast<Eigen::Index>(col_ids.size()));
  for (std::size_t r = 0; r < row_ids.size(); ++r)
    for (std::size_t c = 0; c < col_ids.size(); ++c) {
      const auto i = row_ids[r], j = col_ids[c];
      double d = 0.0;
      if (div) d = root ? std::sqrt((*div)(i, j)) : (*div)(i, j);
      out(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
          kernel_from_terms(spec.family, d, terms.sq_dist(i, j), spec.sigma);
    }
  return out;
}

GramMatrix gram_from_terms(const PairwiseTerms& terms, const KernelSpec& spec) {
  std::vector<Eigen::Index> ids(static_cast<std::size_t>(terms.size()));
  for (std::size_t i = 0; i < ids.size(); ++i) ids[i] = static_cast<Eigen::Index>(i);
  GramMatrix g;
  g.spec = spec;
  g.values = gram_block(terms, spec, ids, ids);
  g.instance_ids.assign(ids.begin(), ids.end());
  return g;
}

double median_distance(const PairwiseTerms& terms, std::span<const Eigen::Index> ids) {
  std::vector<double> d;
  d.reserve(ids.size() * (ids.size() - 1) / 2);
  for (std::size_t a = 0; a < ids.size(); ++a)
    for (std::size_t b = a + 1; b < ids.size(); ++b) d.push_back(terms.sq_dist(ids[a], ids[b]));
  require(!d.empty(), ErrorCode::InvalidArgument, "median_distance: need at least two instances");
  const auto mid = d.begin() + static_cast<std::ptrdiff_t>(d.size() / 2);
  std::nth_element(d.begin(), mid, d.end());
  double m = *mid;
  if (d.size() % 2 == 0) m = 0.5 * (m + *std::max_element(d.begin(), mid));
  m = std::sqrt(m);
  return m > 0.0 ? m : 1.0;
}

Mat clip_negative_eigenvalues(const Eigen::Ref<const Mat>& gram) {
  Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (gram + gram.transpose()));
  const Vec clipped = es.eigenvalues().cwiseMax(0.0);
  return es.eigenvectors() * clipped.asDiagonal() * es.eigenvectors().transpose();
}

void write_gram(const GramMatrix& g, const std::filesystem::path& path) {
  const auto n = g.size();
  require(static_cast<Eigen::Index>(g.instance_ids.size()) == n && g.values.cols() == n, ErrorCode::InvalidArgument,
          "write_gram: inconsistent matrix");
  std::string out = "CKG1";
  out.reserve(4 + 24 + static_cast<std::size_t>(n) * 8 * static_cast<std::size_t>(n + 1));
  detail::put_le<std::uint32_t>(out, 1);
  detail::put_le<std::uint64_t>(out, static_cast<std::uint64_t>(n));
  detail::put_le<std::uint8_t>(out, static_cast<std::uint8_t>(g.spec.family));
  detail::put_le<std::uint8_t>(out, static_cast<std::uint8_t>(g.spec.divergence));
  detail::put_le<std::uint8_t>(out, static_cast<std::uint8_t>(g.spec.mean));
  detail::put_le<std::uint8_t>(out, 0);
  detail::put_le<double>(out, g.spec.sigma);
  for (auto id : g.instance_ids) detail::put_le<std::int64_t>(out, id);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) detail::put_le<double>(out, g.values(i, j));
  detail::atomic_write(path, out);
}

GramMatrix read_gram(const std::filesystem::path& path) {
  const auto bytes = detail::read_file(path);
  const std::string_view in(bytes);
  require(in.substr(0, 4) == "CKG1", ErrorCode::Corrupt, path.string() + ": bad Gram magic");
  std::size_t pos = 4;
  std::uint32_t version = 0;
  std::uint64_t n = 0;
  std::uint8_t family = 0, divergence = 0, mean = 0, reserved = 0;
  GramMatrix g;
  bool ok = detail::get_le(in, pos, version) && detail::get_le(in, pos, n) && detail::get_le(in, pos, family) &&
            detail::get_le(in, pos, divergence) && detail::get_le(in, pos, mean) &&
            detail::get_le(in, pos, reserved) && detail::get_le(in, pos, g.spec.sigma);
  require(ok && version == 1, ErrorCode::Corrupt, path.string() + ": bad Gram header");
  require(family <= 3 && divergence <= 2 && mean <= 2, ErrorCode::Corrupt, path.string() + ": bad Gram spec");
  require(in.size() == pos + n * 8 + n * n * 8, ErrorCode::Corrupt, path.string() + ": Gram payload size mismatch");
  g.spec.family = static_cast<KernelFamily>(family);
  g.spec.divergence = static_cast<DivergenceKind>(divergence);
  g.spec.mean = static_cast<ChisiniKind>(mean);
  g.instance_ids.resize(n);
  for (auto& id : g.instance_ids) detail::get_le(in, pos, id);
  const auto size = static_cast<Eigen::Index>(n);
  g.values.resize(size, size);
  for (Eigen::Index i = 0; i < size; ++i)
    for (Eigen::Index j = 0; j < size; ++j) detail::get_le(in, pos, g.values(i, j));
  return g;
}

}  // namespace camo
