#include <doctest.h>

#include <algorithm>
#include <numeric>

#include "camo/eval.hpp"
#include "test_util.hpp"

using namespace camo;

namespace {

constexpr Label G = Label::Gesture, N = Label::NoGesture;

// Builds (truth, predicted) with the requested counts for positive class G.
void counts(std::size_t tp, std::size_t fp, std::size_t tn, std::size_t fn, std::vector<Label>& truth,
            std::vector<Label>& pred) {
  auto add = [&](std::size_t k, Label t, Label p) {
    truth.insert(truth.end(), k, t);
    pred.insert(pred.end(), k, p);
  };
  add(tp, G, G);
  add(fp, N, G);
  add(tn, N, N);
  add(fn, G, N);
}

// Mann-Whitney count of (positive, negative) pairs ranked correctly, ties
// counted as one half; returned doubled so it stays an integer.
std::uint64_t twice_pair_wins(const std::vector<double>& s, const std::vector<Label>& y) {
  std::uint64_t w = 0;
  for (std::size_t i = 0; i < s.size(); ++i)
    for (std::size_t j = 0; j < s.size(); ++j)
      if (y[i] == G && y[j] == N) w += s[i] > s[j] ? 2 : (s[i] == s[j] ? 1 : 0);
  return w;
}

}  // namespace

TEST_CASE("confusion counts") {
  std::vector<Label> truth, pred;
  counts(90, 20, 80, 10, truth, pred);
  const auto cm = confusion(truth, pred);
  CHECK(cm.tp == 90);
  CHECK(cm.fp == 20);
  CHECK(cm.tn == 80);
  CHECK(cm.fn == 10);
  CHECK(cm.total() == 200);

  const auto perfect = confusion(truth, truth);
  CHECK(perfect.fp == 0);
  CHECK(perfect.fn == 0);

  const std::vector<Label> all_pos(truth.size(), G);
  const auto cp = confusion(truth, all_pos);
  CHECK(cp.fn == 0);
  CHECK(cp.tn == 0);

  // Swapping the positive class swaps the roles of the cells.
  const auto swapped = confusion(truth, pred, N);
  CHECK(swapped.tp == 80);
  CHECK(swapped.fp == 10);
  CHECK_THROWS_AS(confusion(truth, std::vector<Label>(3, G)), Error);
}

TEST_CASE("metrics of the worked confusion example") {
  ConfusionMatrix cm{90, 20, 80, 10, G};
  const auto m = metrics(cm);
  CHECK(m.accuracy == 0.85);
  CHECK(*m.precision == 90.0 / 110.0);
  CHECK(std::abs(*m.precision - 0.81818) < 5e-6);
  CHECK(*m.sensitivity == 0.9);
  CHECK(*m.specificity == 0.8);
}

TEST_CASE("undefined ratios stay empty") {
  const auto none_predicted = metrics({0, 0, 5, 5, G});
  CHECK(!none_predicted.precision);
  CHECK(*none_predicted.sensitivity == 0.0);
  const auto single_class = metrics({7, 0, 0, 0, G});
  CHECK(single_class.accuracy == 1.0);
  CHECK(!single_class.specificity);
  const auto j = to_json(single_class);
  CHECK(j["specificity"].is_null());
  CHECK(j["accuracy"] == 1.0);
}

TEST_CASE("metrics do not depend on instance order") {
  std::vector<Label> truth, pred;
  counts(13, 4, 21, 6, truth, pred);
  std::vector<std::size_t> idx(truth.size());
  std::iota(idx.begin(), idx.end(), 0);
  Rng rng(3);
  rng.shuffle(idx);
  std::vector<Label> t2, p2;
  for (auto i : idx) {
    t2.push_back(truth[i]);
    p2.push_back(pred[i]);
  }
  CHECK(confusion(t2, p2) == confusion(truth, pred));
}

TEST_CASE("ROC of separated, tied and reversed scores") {
  const std::vector<double> s = {0.9, 0.8, 0.7, 0.3, 0.2};
  const std::vector<Label> y = {G, G, G, N, N};
  const auto roc = roc_curve(s, y);
  CHECK(roc.auc == 1.0);
  CHECK(roc.points.front().x == 0.0);
  CHECK(roc.points.front().y == 0.0);
  CHECK(roc.points.front().threshold == std::numeric_limits<double>::infinity());
  CHECK(roc.points.back().x == 1.0);
  CHECK(roc.points.back().y == 1.0);

  const auto tied = roc_curve(std::vector<double>{1, 1, 1, 1}, std::vector<Label>{G, N, G, N});
  CHECK(tied.auc == 0.5);
  CHECK(tied.points.size() == 2);
  CHECK_THROWS_AS(roc_curve(std::vector<double>{1, 2}, std::vector<Label>{G, G}), Error);
}

TEST_CASE("AUC equals the pair-counting oracle and reflects exactly") {
  Rng rng(12);
  for (int t = 0; t < 100; ++t) {
    const std::size_t n = 5 + rng.index(60);
    std::vector<double> s(n);
    std::vector<Label> y(n);
    for (std::size_t i = 0; i < n; ++i) {
      y[i] = i < 2 ? (i == 0 ? G : N) : (rng.uniform() < 0.4 ? G : N);
      s[i] = std::round(rng.normal() * 4.0) / 4.0 + (y[i] == G ? 0.5 : 0.0);
    }
    const auto roc = roc_curve(s, y);
    const auto pos = static_cast<std::uint64_t>(std::count(y.begin(), y.end(), G));
    CHECK(roc.auc_denominator == 2 * pos * (n - pos));
    CHECK(roc.auc_numerator == twice_pair_wins(s, y));

    std::vector<double> neg(n);
    std::transform(s.begin(), s.end(), neg.begin(), [](double v) { return -v; });
    const auto r = roc_curve(neg, y);
    // Exact on the rational value; the doubles differ by at most rounding.
    CHECK(r.auc_numerator + roc.auc_numerator == roc.auc_denominator);
    CHECK(r.auc_denominator == roc.auc_denominator);
    CHECK(std::abs(r.auc - (1.0 - roc.auc)) <= 1e-15);

    // Reversing labels reflects the curve through (0.5, 0.5).
    std::vector<Label> flip(n);
    std::transform(y.begin(), y.end(), flip.begin(), [](Label l) { return l == G ? N : G; });
    const auto rf = roc_curve(s, flip);
    CHECK(rf.auc_numerator + roc.auc_numerator == roc.auc_denominator);
    REQUIRE(rf.points.size() == roc.points.size());
    for (std::size_t k = 0; k < rf.points.size(); ++k) {
      CHECK(rf.points[k].x == roc.points[k].y);
      CHECK(rf.points[k].y == roc.points[k].x);
    }
  }
}

TEST_CASE("AUC is invariant under strictly increasing transforms") {
  Rng rng(5);
  std::vector<double> s(300);
  std::vector<Label> y(300);
  for (std::size_t i = 0; i < s.size(); ++i) {
    y[i] = rng.uniform() < 0.3 ? G : N;
    s[i] = rng.normal() + (y[i] == G ? 0.7 : 0.0);
  }
  const double base = roc_curve(s, y).auc;
  std::vector<double> e(s.size()), a(s.size());
  std::transform(s.begin(), s.end(), e.begin(), [](double v) { return std::exp(v); });
  std::transform(s.begin(), s.end(), a.begin(), [](double v) { return 3.0 * v - 7.0; });
  CHECK(std::abs(roc_curve(e, y).auc - base) <= 1e-12);
  CHECK(std::abs(roc_curve(a, y).auc - base) <= 1e-12);
}

TEST_CASE("uninformative scores sit near one half") {
  Rng rng(8);
  const std::size_t n = 4000;
  std::vector<double> s(n);
  std::vector<Label> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    s[i] = rng.uniform();
    y[i] = rng.uniform() < 0.5 ? G : N;
  }
  CHECK(std::abs(roc_curve(s, y).auc - 0.5) < 3.0 / std::sqrt(static_cast<double>(n)));
}

TEST_CASE("precision-recall curve and average precision") {
  // Ranked: G N G N.
  const std::vector<double> s = {4, 3, 2, 1};
  const std::vector<Label> y = {G, N, G, N};
  const auto pr = pr_curve(s, y);
  REQUIRE(pr.points.size() == 4);
  CHECK(pr.points[0].x == 0.5);
  CHECK(pr.points[0].y == 1.0);
  CHECK(pr.points[2].x == 1.0);
  CHECK(pr.points[2].y == doctest::Approx(2.0 / 3.0));
  CHECK(pr.average_precision == doctest::Approx(0.5 * 1.0 + 0.5 * 2.0 / 3.0).epsilon(1e-15));
  CHECK(pr_curve(std::vector<double>{2, 1}, std::vector<Label>{G, N}).average_precision == 1.0);
}

TEST_CASE("error bars") {
  const std::vector<double> v = {80, 82, 84};
  const auto e = error_bar(v);
  CHECK(e.mean == 82.0);
  CHECK(e.standard_error == doctest::Approx(2.0 / std::sqrt(3.0)).epsilon(1e-15));
  CHECK(std::abs(e.standard_error - 1.1547) < 5e-5);
  CHECK(e.lo == doctest::Approx(82.0 - 1.96 * e.standard_error));
  CHECK(e.hi == doctest::Approx(82.0 + 1.96 * e.standard_error));
  CHECK(e.n == 3);

  CHECK(significant(error_bar(std::vector<double>{80, 82, 84}), error_bar(std::vector<double>{85, 87, 89})));
  CHECK(!significant(e, error_bar(v)));

  // Replicating each value m times keeps the spread and divides SE by about sqrt(m).
  std::vector<double> rep;
  for (int m = 0; m < 4; ++m) rep.insert(rep.end(), v.begin(), v.end());
  const auto r = error_bar(rep);
  const double sd_rep = std::sqrt(8.0 * 4.0 / 11.0);
  CHECK(r.standard_error == doctest::Approx(sd_rep / std::sqrt(12.0)).epsilon(1e-14));
  CHECK_THROWS_AS(error_bar(std::vector<double>{5.0}), Error);
  CHECK_THROWS_AS(error_bar(std::vector<double>{}), Error);
}

TEST_CASE("majority baseline and CSV export") {
  CHECK(majority_baseline(std::vector<Label>{G, N, N, N}) == 0.75);
  CHECK(majority_baseline(std::vector<Label>{G, G}) == 1.0);
  const auto roc = roc_curve(std::vector<double>{2, 1}, std::vector<Label>{G, N});
  const auto csv = curve_csv(roc.points, "fpr", "tpr");
  CHECK(csv.rfind("threshold,fpr,tpr\n", 0) == 0);
  CHECK(csv.find("inf,0,0") != std::string::npos);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == static_cast<long>(roc.points.size() + 1));
}
