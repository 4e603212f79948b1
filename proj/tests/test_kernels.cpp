#include <doctest.h>

#include <algorithm>
#include <fstream>
#include <set>

#include <Eigen/Eigenvalues>

#include "camo/kernels.hpp"
#include "test_util.hpp"

using namespace camo;

namespace {

Mat random_rows(Rng& rng, Eigen::Index n, Eigen::Index d) {
  Mat x(n, d);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < d; ++j) x(i, j) = rng.normal() + (i % 2 ? 1.5 : 0.0);
  return x;
}

}  // namespace

TEST_CASE("rbf examples") {
  Vec a(2), b(2);
  a << 0.0, 0.0;
  b << 1.0, 1.0;  // squared distance 2 = 2 sigma^2 at sigma 1
  CHECK(rbf(a, a, 1.0) == 1.0);
  CHECK(rbf(a, b, 1.0) == doctest::Approx(0.367879441171).epsilon(1e-12));
  double prev = 1.0;
  for (double t = 0.1; t < 5.0; t += 0.1) {
    Vec c = a;
    c[0] = t;
    const double v = rbf(a, c, 0.7);
    CHECK(v < prev);
    prev = v;
  }
  CHECK_THROWS_AS(rbf(a, b, 0.0), Error);
}

TEST_CASE("family maps of a divergence and a squared distance") {
  // D is the metric divergence of (0.6, 0.4) against (0.4, 0.6).
  const double d = 0.141902, sq = 2.0;
  CHECK(kernel_from_terms(KernelFamily::Amplified, d, sq, 1.0) == doctest::Approx(d * std::exp(-1.0)).epsilon(1e-15));
  CHECK(std::abs(kernel_from_terms(KernelFamily::Amplified, d, sq, 1.0) - 0.052204) < 2e-6);
  CHECK(kernel_from_terms(KernelFamily::Scaled, d, sq, 1.0) == doctest::Approx(0.867706287535503).epsilon(1e-14));
  CHECK(kernel_from_terms(KernelFamily::AmplifiedScaled, d, sq, 1.0) ==
        doctest::Approx(d * std::exp(-d)).epsilon(1e-15));
  CHECK(kernel_from_terms(KernelFamily::Scaled, 0.0, 5.0, 1.0) == 1.0);
  CHECK(kernel_from_terms(KernelFamily::Amplified, 0.0, 0.0, 1.0) == 0.0);
}

TEST_CASE("the grid has 21 distinct specs with unique names") {
  const auto specs = enumerate_kernel_specs();
  CHECK(specs.size() == 21);
  std::set<std::string> names;
  for (const auto& s : specs) {
    names.insert(s.name());
    CHECK(parse_kernel_spec(s.name()) == s);
    CHECK_NOTHROW(validate(s));
  }
  CHECK(names.size() == 21);
  CHECK(std::count_if(specs.begin(), specs.end(), [](const KernelSpec& s) { return s.is_rbf(); }) == 3);
  for (auto f : kAllChisini) CHECK(kernel_specs_for_family(f).size() == 7);
  CHECK(names.count("Amplified-MCJSD-GM") == 1);
  CHECK(names.count("RBF-HM") == 1);
  CHECK_THROWS_AS(parse_kernel_spec("Polynomial"), Error);
}

TEST_CASE("invalid specs are rejected") {
  CHECK_THROWS_AS(validate({KernelFamily::Rbf, DivergenceKind::Cjsd, ChisiniKind::AM, 1.0}), Error);
  CHECK_THROWS_AS(validate({KernelFamily::Scaled, DivergenceKind::None, ChisiniKind::AM, 1.0}), Error);
  CHECK_THROWS_AS(validate({KernelFamily::Scaled, DivergenceKind::Cjsd, ChisiniKind::AM, -1.0}), Error);
}

TEST_CASE("Gram diagonal laws, exact symmetry and the scalar oracle") {
  Rng rng(4);
  const Mat x = random_rows(rng, 9, 5);
  const auto grid = grid_for_samples(x, 32);
  const auto dists = sample_distributions(x, grid);
  for (const auto& base : enumerate_kernel_specs(1.3)) {
    const auto g = gram(x, dists, base);
    CHECK(g.values == g.values.transpose());
    const bool unit = base.family == KernelFamily::Rbf || base.family == KernelFamily::Scaled;
    for (Eigen::Index i = 0; i < 9; ++i) CHECK(g.values(i, i) == (unit ? 1.0 : 0.0));
    // Independent pairwise calls.
    double worst = 0.0;
    for (Eigen::Index i = 0; i < 3; ++i)
      for (Eigen::Index j = 0; j < 3; ++j)
        worst = std::max(worst, std::abs(g.values(i, j) - kernel_value(x.row(i).transpose(), x.row(j).transpose(),
                                                                       dists[static_cast<std::size_t>(i)],
                                                                       dists[static_cast<std::size_t>(j)], base)));
    CHECK(worst == 0.0);
  }
}

TEST_CASE("precomputed terms reproduce the direct Gram matrix") {
  Rng rng(6);
  const Mat x = random_rows(rng, 12, 4);
  const auto grid = grid_for_samples(x, 48);
  const auto dists = sample_distributions(x, grid);
  const auto terms = pairwise_terms(x, dists);
  for (const auto& spec : enumerate_kernel_specs(0.9)) {
    const auto a = gram(x, dists, spec), b = gram_from_terms(terms, spec);
    CHECK((a.values - b.values).cwiseAbs().maxCoeff() <= 1e-12);
  }
  const auto partial = pairwise_terms(x, dists, std::array{ChisiniKind::GM});
  CHECK(partial.divergence(ChisiniKind::AM).size() == 0);
  CHECK_THROWS_AS(gram_from_terms(partial, {KernelFamily::Scaled, DivergenceKind::Cjsd, ChisiniKind::AM, 1.0}), Error);
  CHECK_NOTHROW(gram_from_terms(partial, {KernelFamily::Scaled, DivergenceKind::Cjsd, ChisiniKind::GM, 1.0}));
}

TEST_CASE("value ranges and the mean ordering carry over to kernels") {
  Rng rng(12);
  const Mat x = random_rows(rng, 15, 6);
  const auto dists = sample_distributions(x, grid_for_samples(x, 40));
  const auto terms = pairwise_terms(x, dists);
  for (auto div : {DivergenceKind::Cjsd, DivergenceKind::Mcjsd}) {
    const double dmax = div == DivergenceKind::Cjsd ? terms.divergence(ChisiniKind::HM).maxCoeff()
                                                    : std::sqrt(terms.divergence(ChisiniKind::HM).maxCoeff());
    for (auto mean : kAllChisini) {
      const auto s = gram_from_terms(terms, {KernelFamily::Scaled, div, mean, 1.0}).values;
      CHECK(s.minCoeff() > 0.0);
      CHECK(s.maxCoeff() <= 1.0);
      const auto a = gram_from_terms(terms, {KernelFamily::Amplified, div, mean, 1.0}).values;
      CHECK(a.minCoeff() >= 0.0);
      CHECK(a.maxCoeff() <= dmax);
    }
    const Mat am = gram_from_terms(terms, {KernelFamily::Amplified, div, ChisiniKind::AM, 1.0}).values;
    const Mat gm = gram_from_terms(terms, {KernelFamily::Amplified, div, ChisiniKind::GM, 1.0}).values;
    const Mat hm = gram_from_terms(terms, {KernelFamily::Amplified, div, ChisiniKind::HM, 1.0}).values;
    CHECK(((hm - gm).array() >= -1e-15).all());
    CHECK(((gm - am).array() >= -1e-15).all());
  }
}

TEST_CASE("RBF Gram matrices are positive semi-definite") {
  Rng rng(21);
  for (int t = 0; t < 5; ++t) {
    const Mat x = random_rows(rng, 40 + 30 * t, 3);
    const auto g = gram(x, {}, {KernelFamily::Rbf, DivergenceKind::None, ChisiniKind::AM, 0.5 + t});
    Eigen::SelfAdjointEigenSolver<Mat> es(g.values, Eigen::EigenvaluesOnly);
    CHECK(es.eigenvalues().minCoeff() >= -1e-8 * es.eigenvalues().maxCoeff());
  }
}

TEST_CASE("median distance over a subset") {
  Mat x(4, 1);
  x << 0.0, 1.0, 3.0, 7.0;
  PairwiseTerms t;
  t.sq_dist = pairwise_sq_dist(x, x);
  // Distances among rows {0, 1, 2}: 1, 3, 2.
  const std::vector<Eigen::Index> ids = {0, 1, 2};
  CHECK(median_distance(t, ids) == doctest::Approx(2.0).epsilon(1e-15));
  const std::vector<Eigen::Index> one = {3};
  CHECK_THROWS_AS(median_distance(t, one), Error);
}

TEST_CASE("negative eigenvalue clipping yields a PSD matrix and leaves PSD input alone") {
  Mat k(2, 2);
  k << 0.0, 1.0, 1.0, 0.0;  // eigenvalues -1 and 1
  const Mat c = clip_negative_eigenvalues(k);
  Eigen::SelfAdjointEigenSolver<Mat> es(c);
  CHECK(es.eigenvalues().minCoeff() >= -1e-12);
  const Mat id = Mat::Identity(3, 3);
  CHECK((clip_negative_eigenvalues(id) - id).norm() <= 1e-12);
}

TEST_CASE("Gram files round trip and corruption is detected") {
  Rng rng(9);
  const Mat x = random_rows(rng, 6, 3);
  auto g = gram(x, sample_distributions(x, grid_for_samples(x, 16)),
                {KernelFamily::AmplifiedScaled, DivergenceKind::Mcjsd, ChisiniKind::HM, 2.0});
  g.instance_ids = {10, 11, 12, 13, 14, 15};
  const auto dir = test::scratch_dir("gram");
  write_gram(g, dir / "g.ckg");
  const auto back = read_gram(dir / "g.ckg");
  CHECK(back.values == g.values);
  CHECK(back.spec == g.spec);
  CHECK(back.instance_ids == g.instance_ids);

  {
    std::fstream f(dir / "g.ckg", std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(0);
    f.write("XXXX", 4);
  }
  CHECK_THROWS_AS(read_gram(dir / "g.ckg"), Error);
  std::filesystem::resize_file(dir / "g.ckg", 20);
  CHECK_THROWS_AS(read_gram(dir / "g.ckg"), Error);
  CHECK_THROWS_AS(read_gram(dir / "missing.ckg"), Error);
}
