#include <doctest.h>

#include <algorithm>
#include <numeric>
#include <set>

#include "camo/classify.hpp"
#include "camo/eval.hpp"
#include "svm_oracle.hpp"
#include "test_util.hpp"

using namespace camo;

namespace {

struct Toy {
  Mat x;
  std::vector<Label> y;
};

Toy blobs(std::uint64_t seed, int n, double gap, int dim = 2) {
  Rng rng(seed);
  Toy t;
  t.x.resize(n, dim);
  for (int i = 0; i < n; ++i) {
    const bool pos = i % 3 == 0;
    t.y.push_back(pos ? Label::Gesture : Label::NoGesture);
    for (int c = 0; c < dim; ++c) t.x(i, c) = rng.normal() + (pos ? gap : 0.0);
  }
  return t;
}

Mat rbf_gram(const Mat& x, double sigma) {
  Mat k(x.rows(), x.rows());
  for (Eigen::Index i = 0; i < x.rows(); ++i)
    for (Eigen::Index j = 0; j < x.rows(); ++j) k(i, j) = rbf(x.row(i), x.row(j), sigma);
  return k;
}

std::vector<Eigen::Index> iota_ids(Eigen::Index n) {
  std::vector<Eigen::Index> ids(static_cast<std::size_t>(n));
  std::iota(ids.begin(), ids.end(), Eigen::Index{0});
  return ids;
}

}  // namespace

TEST_CASE("two points with an identity Gram matrix") {
  const Mat k = Mat::Identity(2, 2);
  const std::vector<int> y = {1, -1};
  SvmOptions opt;
  opt.C = 10.0;
  const auto m = svm_train(k, y, opt);
  CHECK(m.alphas[0] == 1.0);
  CHECK(m.alphas[1] == 1.0);
  CHECK(m.bias == 0.0);
  CHECK(m.support_ids == std::vector<Eigen::Index>{0, 1});
  CHECK(svm_decision(m, k.row(0).transpose()) == 1.0);
  CHECK(svm_decision(m, k.row(1).transpose()) == -1.0);
  CHECK(svm_decision(m, Vec::Zero(2)) == m.bias);
  CHECK(svm_dual_objective(k, y, m.alphas) == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("separable blobs are fit exactly") {
  const auto t = blobs(3, 40, 6.0);
  const Mat k = rbf_gram(t.x, 1.0);
  const auto y = to_signs(t.y);
  const auto m = svm_train(k, y, SvmOptions{});
  for (Eigen::Index i = 0; i < k.rows(); ++i)
    CHECK(svm_predict(svm_decision(m, k.row(i).transpose())) == y[static_cast<std::size_t>(i)]);
}

TEST_CASE("dual optimum matches the exhaustive active-set oracle") {
  Rng rng(101);
  double worst = 0.0;
  for (int t = 0; t < 20; ++t) {
    const int n = 2 + static_cast<int>(rng.index(7));
    Mat x(n, 2);
    std::vector<int> y(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
      y[static_cast<std::size_t>(i)] = i == 0 ? 1 : (i == 1 ? -1 : (rng.uniform() < 0.5 ? 1 : -1));
      x(i, 0) = rng.normal();
      x(i, 1) = rng.normal() + 0.5 * y[static_cast<std::size_t>(i)];
    }
    const Mat k = rbf_gram(x, 0.3 + rng.uniform());
    SvmOptions opt;
    opt.C = std::array{0.5, 1.0, 5.0, 10.0}[rng.index(4)];
    opt.tol = 1e-6;
    opt.positive_weight = t % 2 ? 2.0 : 1.0;
    const auto m = svm_train(k, y, opt);
    std::vector<double> ub;
    for (int i = 0; i < n; ++i) ub.push_back(m.upper_bound(i));
    const double oracle = test::brute_force_dual(k, y, ub);
    worst = std::max(worst, std::abs(svm_dual_objective(k, y, m.alphas) - oracle));
  }
  CHECK(worst <= 1e-4);
}

TEST_CASE("trained models satisfy the KKT conditions and the equality constraint") {
  for (std::uint64_t seed = 1; seed <= 8; ++seed) {
    const auto t = blobs(seed, 60, 1.0 + 0.3 * static_cast<double>(seed));
    const Mat k = rbf_gram(t.x, 0.8);
    const auto y = to_signs(t.y);
    SvmOptions opt;
    opt.C = seed % 2 ? 1.0 : 100.0;
    const auto m = svm_train(k, y, opt);
    CHECK(m.converged);
    CHECK(svm_kkt_residual(m, k) <= opt.tol);
    double eq = 0.0;
    for (Eigen::Index i = 0; i < m.size(); ++i) {
      eq += y[static_cast<std::size_t>(i)] * m.alphas[i];
      CHECK(m.alphas[i] >= 0.0);
      CHECK(m.alphas[i] <= m.upper_bound(i));
    }
    CHECK(std::abs(eq) <= 1e-10);
  }
}

TEST_CASE("indefinite divergence Gram matrices still train to a KKT point") {
  const auto t = blobs(5, 30, 2.0, 6);
  const auto dists = sample_distributions(t.x, grid_for_samples(t.x, 32));
  const auto g = gram(t.x, dists, {KernelFamily::Amplified, DivergenceKind::Cjsd, ChisiniKind::HM, 1.0});
  const auto y = to_signs(t.y);
  const auto m = svm_train(g, y, SvmOptions{});
  CHECK(svm_kkt_residual(m, g.values) <= 1e-3);
}

TEST_CASE("a no-op rescaling of the duals leaves decisions unchanged") {
  const auto t = blobs(2, 20, 2.0);
  const Mat k = rbf_gram(t.x, 1.0);
  const auto m = svm_train(k, to_signs(t.y), SvmOptions{});
  auto same = m;
  same.alphas *= 1.0;
  for (Eigen::Index i = 0; i < k.rows(); ++i)
    CHECK(svm_decision(same, k.row(i).transpose()) == svm_decision(m, k.row(i).transpose()));
}

TEST_CASE("input validation") {
  const Mat k = Mat::Identity(2, 2);
  CHECK_THROWS_AS(svm_train(k, std::vector<int>{1, 1}, SvmOptions{}), Error);
  CHECK_THROWS_AS(svm_train(k, std::vector<int>{1, 0}, SvmOptions{}), Error);
  CHECK_THROWS_AS(svm_train(k, std::vector<int>{1}, SvmOptions{}), Error);
  SvmOptions bad;
  bad.C = 0.0;
  CHECK_THROWS_AS(svm_train(k, std::vector<int>{1, -1}, bad), Error);
}

TEST_CASE("kernel machines evaluate new inputs and survive a file round trip") {
  const auto t = blobs(7, 36, 2.5, 5);
  const auto grid = grid_for_samples(t.x, 32);
  const auto dists = sample_distributions(t.x, grid);
  const KernelSpec spec{KernelFamily::Scaled, DivergenceKind::Mcjsd, ChisiniKind::GM, 1.7};
  const auto g = gram(t.x, dists, spec);
  const auto model = svm_train(g, to_signs(t.y), SvmOptions{});
  const auto km = make_kernel_machine(model, t.x, grid);
  for (Eigen::Index i = 0; i < t.x.rows(); ++i)
    CHECK(km.decision(t.x.row(i).transpose()) ==
          doctest::Approx(svm_decision(model, g.values.row(i).transpose())).epsilon(1e-12));

  const auto dir = test::scratch_dir("model");
  write_model(km, dir / "m.ckm");
  const auto back = read_model(dir / "m.ckm");
  CHECK(back.support_rows == km.support_rows);
  CHECK(back.model.alphas == km.model.alphas);
  CHECK(back.model.spec == km.model.spec);
  for (Eigen::Index i = 0; i < t.x.rows(); ++i)
    CHECK(back.decision(t.x.row(i).transpose()) == km.decision(t.x.row(i).transpose()));
  std::filesystem::resize_file(dir / "m.ckm", 30);
  CHECK_THROWS_AS(read_model(dir / "m.ckm"), Error);
}

TEST_CASE("stratified folds of equal size") {
  std::vector<Label> y(100);
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = i < 30 ? Label::Gesture : Label::NoGesture;
  const auto ids = iota_ids(100);
  const auto fold = assign_folds(y, ids, 10, 4);
  std::vector<int> size(10), pos(10);
  for (std::size_t i = 0; i < fold.size(); ++i) {
    ++size[static_cast<std::size_t>(fold[i])];
    if (y[i] == Label::Gesture) ++pos[static_cast<std::size_t>(fold[i])];
  }
  for (int f = 0; f < 10; ++f) {
    CHECK(size[static_cast<std::size_t>(f)] == 10);
    CHECK(pos[static_cast<std::size_t>(f)] == 3);
  }
  CHECK(assign_folds(y, ids, 10, 4) == fold);
  CHECK(assign_folds(y, ids, 10, 5) != fold);
}

TEST_CASE("nested cross-validation bookkeeping") {
  const auto t = blobs(11, 100, 1.5, 4);
  const auto grid = grid_for_samples(t.x, 32);
  const auto terms = pairwise_terms(t.x, sample_distributions(t.x, grid));
  const std::vector<KernelSpec> specs = {parse_kernel_spec("RBF-AM"), parse_kernel_spec("Scaled-CJSD-AM")};
  CvOptions opt;
  const auto rep = nested_cv(terms, t.y, specs, opt, 42);
  REQUIRE(rep.specs.size() == 2);
  for (const auto& sr : rep.specs) {
    REQUIRE(sr.folds.size() == 10);
    std::set<Eigen::Index> tested;
    for (const auto& f : sr.folds) {
      CHECK(f.test_ids.size() == 10);
      CHECK(f.test_decisions.size() == f.test_ids.size());
      for (auto id : f.test_ids) {
        CHECK(tested.insert(id).second);
        CHECK(std::find(f.selection_ids.begin(), f.selection_ids.end(), id) == f.selection_ids.end());
      }
      CHECK(f.train_ids.size() + f.test_ids.size() == 100);
      CHECK(std::find(opt.c_grid.begin(), opt.c_grid.end(), f.C) != opt.c_grid.end());
      CHECK(f.sigma > 0.0);
    }
    CHECK(tested.size() == 100);
    const auto acc = sr.fold_accuracies();
    const auto eb = error_bar(acc);
    CHECK(sr.mean == doctest::Approx(eb.mean).epsilon(1e-15));
    CHECK(sr.standard_error == doctest::Approx(eb.standard_error).epsilon(1e-12));
    CHECK(sr.mean > 0.8);
  }

  SUBCASE("identical inputs give an identical report") {
    const auto again = nested_cv(terms, t.y, specs, opt, 42);
    for (std::size_t s = 0; s < 2; ++s)
      for (std::size_t f = 0; f < 10; ++f) {
        CHECK(again.specs[s].folds[f].test_decisions == rep.specs[s].folds[f].test_decisions);
        CHECK(again.specs[s].folds[f].sigma == rep.specs[s].folds[f].sigma);
        CHECK(again.specs[s].folds[f].C == rep.specs[s].folds[f].C);
      }
  }

  SUBCASE("test rows cannot steer the hyperparameters of their fold") {
    Mat moved = t.x;
    for (auto id : rep.specs[0].folds[0].test_ids) moved.row(id) *= -3.0;
    const auto terms2 = pairwise_terms(moved, sample_distributions(moved, grid));
    const auto rep2 = nested_cv(terms2, t.y, specs, opt, 42);
    for (std::size_t s = 0; s < 2; ++s) {
      CHECK(rep2.specs[s].folds[0].sigma == rep.specs[s].folds[0].sigma);
      CHECK(rep2.specs[s].folds[0].C == rep.specs[s].folds[0].C);
    }
  }
}

TEST_CASE("per-class distribution mode runs end to end") {
  const auto t = blobs(13, 60, 2.0, 6);
  const auto grid = grid_for_samples(t.x, 32);
  CvOptions opt;
  opt.folds = 5;
  opt.c_grid = {1.0, 10.0};
  opt.sigma_multipliers = {0.5, 1.0, 2.0};
  const auto rep = nested_cv(t.x, t.y, grid, DistributionMode::PerClass,
                             {parse_kernel_spec("Amplified-MCJSD-HM"), parse_kernel_spec("RBF-HM")}, opt, 3);
  REQUIRE(rep.specs.size() == 2);
  for (const auto& sr : rep.specs) {
    CHECK(sr.folds.size() == 5);
    CHECK(sr.mean > 0.5);
  }
}

TEST_CASE("MLP gradient agrees with central differences") {
  Rng rng(8);
  Mat x(12, 5);
  std::vector<double> t(12);
  for (int i = 0; i < 12; ++i) {
    for (int c = 0; c < 5; ++c) x(i, c) = rng.normal();
    t[static_cast<std::size_t>(i)] = i % 2;
  }
  auto m = mlp_init(5, 6, 3);
  m.b1.setConstant(0.05);  // keep units away from the ReLU kink
  MlpGradient g;
  mlp_loss(m, x, t, &g);
  const double h = 1e-6;
  double worst = 0.0;
  auto check = [&](double& param, double analytic) {
    const double keep = param;
    param = keep + h;
    const double up = mlp_loss(m, x, t);
    param = keep - h;
    const double down = mlp_loss(m, x, t);
    param = keep;
    const double numeric = (up - down) / (2 * h);
    worst = std::max(worst, std::abs(numeric - analytic) / std::max(1e-3, std::abs(numeric) + std::abs(analytic)));
  };
  for (Eigen::Index r = 0; r < m.w1.rows(); ++r)
    for (Eigen::Index c = 0; c < m.w1.cols(); ++c) check(m.w1(r, c), g.w1(r, c));
  for (Eigen::Index r = 0; r < m.b1.size(); ++r) check(m.b1[r], g.b1[r]);
  for (Eigen::Index r = 0; r < m.w2.size(); ++r) check(m.w2[r], g.w2[r]);
  check(m.b2, g.b2);
  CHECK(worst < 1e-5);
}

TEST_CASE("MLP learns XOR with four hidden units") {
  Mat x(4, 2);
  x << 0, 0, 0, 1, 1, 0, 1, 1;
  const std::vector<Label> y = {Label::NoGesture, Label::Gesture, Label::Gesture, Label::NoGesture};
  MlpOptions opt;
  opt.hidden = 4;
  opt.epochs = 2000;
  opt.lr = 0.5;
  // Some initializations leave dead ReLU units and stall; seed 1 does not.
  opt.seed = 1;
  const auto m = mlp_train(x, y, opt);
  for (int i = 0; i < 4; ++i)
    CHECK((mlp_predict_proba(m, x.row(i).transpose()) >= 0.5) == (y[static_cast<std::size_t>(i)] == Label::Gesture));
}

TEST_CASE("zero epochs return the seeded initialization") {
  Mat x = Mat::Random(6, 3);
  const std::vector<Label> y = {Label::Gesture, Label::NoGesture, Label::Gesture,
                                Label::NoGesture, Label::Gesture, Label::NoGesture};
  MlpOptions opt;
  opt.epochs = 0;
  opt.seed = 9;
  const auto m = mlp_train(x, y, opt), init = mlp_init(3, opt.hidden, 9);
  CHECK(m.w1 == init.w1);
  CHECK(m.b1 == init.b1);
  CHECK(m.w2 == init.w2);
  CHECK(m.b2 == init.b2);
}

TEST_CASE("full-batch MLP loss does not increase with a small step") {
  const auto t = blobs(4, 40, 1.0, 3);
  MlpOptions opt;
  opt.batch_size = 0;
  opt.lr = 0.01;
  opt.epochs = 300;
  MlpTrace trace;
  mlp_train(t.x, t.y, opt, &trace);
  REQUIRE(trace.epoch_loss.size() == 300);
  for (std::size_t e = 1; e < trace.epoch_loss.size(); ++e) CHECK(trace.epoch_loss[e] <= trace.epoch_loss[e - 1] + 1e-12);
}

TEST_CASE("a diverging learning rate is reported") {
  const auto t = blobs(4, 40, 1.0, 3);
  Mat big = t.x * 1e150;
  MlpOptions opt;
  opt.lr = 1e150;
  opt.epochs = 5;
  CHECK_THROWS_AS(mlp_train(big, t.y, opt), Error);
}

TEST_CASE("standardizer uses the population spread and tolerates constant columns") {
  Mat x(4, 2);
  x << 1, 5, 2, 5, 3, 5, 4, 5;
  const auto s = Standardizer::fit(x);
  CHECK(s.mean[0] == 2.5);
  CHECK(s.scale[0] == doctest::Approx(std::sqrt(1.25)).epsilon(1e-15));
  CHECK(s.scale[1] == 1.0);
  const Mat z = s.apply(x);
  CHECK(z.col(0).mean() == doctest::Approx(0.0));
  CHECK(z.col(1).cwiseAbs().maxCoeff() == 0.0);
}
