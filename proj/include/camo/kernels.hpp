#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "camo/core.hpp"
#include "camo/divergence.hpp"

namespace camo {

enum class KernelFamily : std::uint8_t { Rbf, Amplified, Scaled, AmplifiedScaled };
enum class DivergenceKind : std::uint8_t { None, Cjsd, Mcjsd };

std::string_view to_string(KernelFamily f);
std::string_view to_string(DivergenceKind d);

// A point in the kernel grid. For RBF the Chisini mean is not used by the
// kernel value; it names the randomized dataset (seed family) the RBF run
// is paired with, which is what makes the grid 21 entries wide.
struct KernelSpec {
  KernelFamily family = KernelFamily::Rbf;
  DivergenceKind divergence = DivergenceKind::None;
  ChisiniKind mean = ChisiniKind::AM;
  double sigma = 1.0;

  bool is_rbf() const { return family == KernelFamily::Rbf; }
  // e.g. "Amplified-MCJSD-GM" or "RBF-AM".
  std::string name() const;

  friend bool operator==(const KernelSpec&, const KernelSpec&) = default;
};

// Checks the family/divergence pairing rules and sigma > 0.
void validate(const KernelSpec& spec);

KernelSpec parse_kernel_spec(std::string_view name, double sigma = 1.0);

// RBF for each seed family plus {Amplified, Scaled, AmplifiedScaled} x
// {CJSD, M-CJSD} x {AM, GM, HM}.
std::vector<KernelSpec> enumerate_kernel_specs(double sigma = 1.0);

// The seven specs evaluated on the dataset randomized for one mean family.
std::vector<KernelSpec> kernel_specs_for_family(ChisiniKind family, double sigma = 1.0);

template <typename DerivedA, typename DerivedB>
typename DerivedA::Scalar rbf(const Eigen::MatrixBase<DerivedA>& xi, const Eigen::MatrixBase<DerivedB>& xj,
                              typename DerivedA::Scalar sigma) {
  using Scalar = typename DerivedA::Scalar;
  require(sigma > Scalar(0), ErrorCode::InvalidArgument, "rbf: sigma must be positive");
  require(xi.size() == xj.size(), ErrorCode::InvalidArgument, "rbf: dimension mismatch");
  require(xi.allFinite() && xj.allFinite(), ErrorCode::InvalidArgument, "rbf: non-finite input");
  return std::exp(-(xi - xj).squaredNorm() / (Scalar(2) * sigma * sigma));
}

// Combines a divergence value D with a squared distance for the given family.
template <typename Scalar>
Scalar kernel_from_terms(KernelFamily family, Scalar d, Scalar sq_dist, Scalar sigma) {
  const Scalar z = sq_dist / (Scalar(2) * sigma * sigma);
  switch (family) {
    case KernelFamily::Rbf: return std::exp(-z);
    case KernelFamily::Amplified: return d * std::exp(-z);
    case KernelFamily::Scaled: return std::exp(-d * z);
    case KernelFamily::AmplifiedScaled: return d * std::exp(-d * z);
  }
  return Scalar(0);
}

double divergence_value(const Distribution& pi, const Distribution& pj, DivergenceKind kind, ChisiniKind mean);

double divergence_kernel(const Eigen::Ref<const Vec>& xi, const Eigen::Ref<const Vec>& xj,
                         const Distribution& pi, const Distribution& pj, const KernelSpec& spec);

// Scalar kernel for any spec (RBF ignores the distributions).
double kernel_value(const Eigen::Ref<const Vec>& xi, const Eigen::Ref<const Vec>& xj, const Distribution& pi,
                    const Distribution& pj, const KernelSpec& spec);

struct GramMatrix {
  Mat values;
  KernelSpec spec;
  std::vector<std::int64_t> instance_ids;

  Eigen::Index size() const { return values.rows(); }
};

// Pairwise evaluation over the upper triangle, mirrored into the lower one.
GramMatrix gram(const Eigen::Ref<const Mat>& rows, const std::vector<Distribution>& dists, const KernelSpec& spec);

// Precomputed pairwise squared distances and CJSD values, from which the
// Gram matrix of any spec and sigma is an elementwise map. Distributions are
// evaluated once and shared by all 18 divergence kernels.
struct PairwiseTerms {
  Mat sq_dist;
  std::array<Mat, 3> cjsd;  // indexed by ChisiniKind

  Eigen::Index size() const { return sq_dist.rows(); }
  const Mat& divergence(ChisiniKind k) const { return cjsd[static_cast<std::size_t>(k)]; }
};

// Only the listed means are filled; the other divergence matrices stay empty.
PairwiseTerms pairwise_terms(const Eigen::Ref<const Mat>& rows, const std::vector<Distribution>& dists,
                             std::span<const ChisiniKind> means = kAllChisini);
Mat pairwise_sq_dist(const Eigen::Ref<const Mat>& a, const Eigen::Ref<const Mat>& b);

// Gram entries for the rows/cols index sets, built from precomputed terms.
Mat gram_block(const PairwiseTerms& terms, const KernelSpec& spec, std::span<const Eigen::Index> row_ids,
               std::span<const Eigen::Index> col_ids);
GramMatrix gram_from_terms(const PairwiseTerms& terms, const KernelSpec& spec);

// Median of the pairwise Euclidean distances among the given rows of terms.
double median_distance(const PairwiseTerms& terms, std::span<const Eigen::Index> ids);

// Diagnostic spectral repair: eigenvalues below zero are set to zero.
Mat clip_negative_eigenvalues(const Eigen::Ref<const Mat>& gram);

// Binary Gram files: "CKG1", u32 version, u64 n, u8 family, u8 divergence,
// u8 mean, u8 reserved, f64 sigma, i64 ids[n], f64 values[n*n] row-major.
// All little-endian.
void write_gram(const GramMatrix& g, const std::filesystem::path& path);
GramMatrix read_gram(const std::filesystem::path& path);

}  // namespace camo
