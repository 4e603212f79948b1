// One PASS/FAIL line per acceptance criterion. Exit status is nonzero when
// any criterion fails.

#include <chrono>
#include <cstdio>
#include <functional>
#include <numbers>
#include <string>

#include "camo/anomaly.hpp"
#include "camo/classify.hpp"
#include "camo/divergence.hpp"
#include "camo/encode.hpp"
#include "camo/eval.hpp"
#include "camo/features.hpp"
#include "camo/kernels.hpp"
#include "camo/pipeline.hpp"
#include "svm_oracle.hpp"
#include "test_util.hpp"

using namespace camo;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

constexpr int kGrid = 64;
constexpr int kPairs = 10000;

// Criterion 1.
Outcome divergence_ordering() {
  Rng rng(1);
  const auto t0 = Clock::now();
  int violations = 0;
  double worst = 0.0;
  for (int t = 0; t < kPairs; ++t) {
    const Vec p = test::random_mass(rng, kGrid), q = test::random_mass(rng, kGrid);
    const double am = cjsd(p, q, ChisiniKind::AM), gm = cjsd(p, q, ChisiniKind::GM), hm = cjsd(p, q, ChisiniKind::HM);
    const double gap = std::max({gm - hm, am - gm, -am});
    worst = std::max(worst, gap);
    violations += gap > 1e-12;
  }
  const double secs = seconds_since(t0);
  return {violations == 0 && secs < 10.0,
          fmt("%d pairs, %d violations, worst gap %.3g, %.2f s", kPairs, violations, worst, secs)};
}

// Criterion 2.
Outcome hand_values() {
  Vec p(2), q(2);
  p << 0.6, 0.4;
  q << 0.4, 0.6;
  const double expected[] = {0.020136, 0.040547, 0.060957};
  double worst_spec = 0.0, worst_oracle = 0.0;
  for (auto k : kAllChisini) {
    const double v = cjsd(p, q, k);
    worst_spec = std::max(worst_spec, std::abs(v - expected[static_cast<int>(k)]));
    worst_oracle = std::max(worst_oracle, std::abs(v - test::oracle_cjsd({0.6, 0.4}, {0.4, 0.6}, k)));
  }
  return {worst_spec <= 1e-6 && worst_oracle <= 1e-15,
          fmt("max error %.3g vs stated values, %.3g vs direct sum", worst_spec, worst_oracle)};
}

// Criterion 3.
Outcome jsd_bound_and_triangle() {
  Rng rng(3);
  int bound_violations = 0;
  double top = 0.0;
  for (int t = 0; t < kPairs; ++t) {
    Vec p = test::random_mass(rng, kGrid), q = test::random_mass(rng, kGrid);
    // Every tenth pair has nearly disjoint supports, which pushes AM towards ln 2.
    if (t % 10 == 0) {
      for (int i = 0; i < kGrid; ++i) (i % 2 ? p : q)[i] = 0.0;
      p = floor_and_normalize(p);
      q = floor_and_normalize(q);
    }
    const double am = cjsd(p, q, ChisiniKind::AM);
    top = std::max(top, am);
    bound_violations += am > std::numbers::ln2 + 1e-12;
  }
  int tri_violations = 0;
  double worst = -1.0;
  for (int t = 0; t < kPairs; ++t) {
    const Vec a = test::random_mass(rng, kGrid), b = test::random_mass(rng, kGrid), c = test::random_mass(rng, kGrid);
    const double ab = mcjsd(a, b, ChisiniKind::AM), bc = mcjsd(b, c, ChisiniKind::AM), ac = mcjsd(a, c, ChisiniKind::AM);
    const double excess = std::max({ac - ab - bc, ab - ac - bc, bc - ab - ac});
    worst = std::max(worst, excess);
    tri_violations += excess > 1e-10;
  }
  return {bound_violations == 0 && tri_violations == 0,
          fmt("max AM %.6f (ln 2 = %.6f), %d bound and %d triangle violations, worst excess %.3g", top,
              std::numbers::ln2, bound_violations, tri_violations, worst)};
}

// Criterion 4.
Outcome kernel_grid() {
  const auto specs = enumerate_kernel_specs(1.3);
  Rng rng(4);
  Mat x(25, 6);
  for (Eigen::Index i = 0; i < x.size(); ++i) x(i) = rng.normal();
  const auto dists = sample_distributions(x, grid_for_samples(x, kGrid));
  int diagonal_failures = 0;
  double asym = 0.0;
  for (const auto& spec : specs) {
    const auto g = gram(x, dists, spec);
    const bool amplified = spec.family == KernelFamily::Amplified || spec.family == KernelFamily::AmplifiedScaled;
    for (Eigen::Index i = 0; i < g.size(); ++i) diagonal_failures += g.values(i, i) != (amplified ? 0.0 : 1.0);
    asym = std::max(asym, (g.values - g.values.transpose()).cwiseAbs().maxCoeff());
  }
  return {specs.size() == 21 && diagonal_failures == 0 && asym <= 1e-12,
          fmt("%zu kernels, %d diagonal mismatches, max asymmetry %.3g", specs.size(), diagonal_failures, asym)};
}

// Criterion 5.
Outcome encoding_round_trip() {
  Rng rng(5);
  int failures = 0;
  double worst_image = 0.0, worst_audio = 0.0;  // error as a fraction of the bound
  for (Eigen::Index dim : {14, 6, 8}) {
    for (int t = 0; t < 1000; ++t) {
      Vec s(dim);
      const double scale = std::exp(rng.uniform(-4.0, 6.0));
      for (auto& v : s) v = scale * rng.normal();
      const auto img = signal_to_image(s, 8);
      const double range = img.meta.v_max - img.meta.v_min;
      const double ei = (image_to_signal(img) - s).cwiseAbs().maxCoeff();
      const double ea = (audio_to_signal(signal_to_audio(s)) - s).cwiseAbs().maxCoeff();
      worst_image = std::max(worst_image, ei / (range / 510.0));
      worst_audio = std::max(worst_audio, ea / (range / 65534.0));
      failures += ei > range / 510.0;
      failures += ea > range / 65534.0;
    }
  }
  const bool padding = padded_length(14) == 16 && padded_length(6) == 9 && padded_length(8) == 9;
  return {failures == 0 && padding,
          fmt("3000 signals, %d bound violations, worst image/audio error %.3f/%.3f of bound, padding %s", failures,
              worst_image, worst_audio, padding ? "14->16 6->9 8->9" : "wrong")};
}

// Criterion 6.
Outcome descriptor_lengths() {
  Rng rng(6);
  GistParams p;
  p.resize_to = 32;
  Eigen::Index lengths[2] = {0, 0};
  double flat_norm = 0.0;
  int i = 0;
  for (Eigen::Index dim : {14, 6}) {
    Vec s(dim);
    for (auto& v : s) v = rng.normal();
    const auto img = signal_to_image(s, 8);
    p.grid = static_cast<int>(img.side());
    lengths[i++] = gist_descriptor(img, p).size();
    ImageGrid flat;
    flat.pixels = PixelGrid::Constant(img.side(), img.side(), 97);
    flat.meta.bit_depth = 8;
    flat_norm = std::max(flat_norm, gist_descriptor(flat, p).cwiseAbs().maxCoeff());
  }
  Vec s(14);
  for (auto& v : s) v = rng.normal();
  const auto mfcc_len = mfcc_descriptor(signal_to_audio(s)).size();
  return {lengths[0] == 512 && lengths[1] == 288 && mfcc_len == 20 && flat_norm < 1e-6,
          fmt("GIST %td (grid 4) and %td (grid 3), MFCC %td, uniform image inf-norm %.3g", lengths[0], lengths[1],
              mfcc_len, flat_norm)};
}

// Criterion 7.
Outcome svm_correctness() {
  const auto t0 = Clock::now();
  Rng rng(7);
  double worst_gap = 0.0, worst_kkt = 0.0;
  auto rbf_gram = [](const Mat& x, double sigma) {
    Mat k(x.rows(), x.rows());
    for (Eigen::Index i = 0; i < x.rows(); ++i)
      for (Eigen::Index j = 0; j < x.rows(); ++j) k(i, j) = rbf(x.row(i), x.row(j), sigma);
    return k;
  };
  for (int t = 0; t < 50; ++t) {
    const int n = 2 + static_cast<int>(rng.index(7));
    Mat x(n, 3);
    std::vector<int> y(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
      y[static_cast<std::size_t>(i)] = i == 0 ? 1 : (i == 1 ? -1 : (rng.uniform() < 0.5 ? 1 : -1));
      for (int c = 0; c < 3; ++c) x(i, c) = rng.normal() + 0.4 * y[static_cast<std::size_t>(i)];
    }
    const Mat k = rbf_gram(x, 0.3 + 1.5 * rng.uniform());
    SvmOptions opt;
    opt.C = std::array{0.1, 1.0, 10.0, 100.0}[rng.index(4)];
    opt.tol = 1e-6;
    const auto m = svm_train(k, y, opt);
    std::vector<double> ub;
    for (int i = 0; i < n; ++i) ub.push_back(m.upper_bound(i));
    worst_gap = std::max(worst_gap, std::abs(svm_dual_objective(k, y, m.alphas) - test::brute_force_dual(k, y, ub)));
    worst_kkt = std::max(worst_kkt, svm_kkt_residual(m, k));
  }
  // Larger problems at the default tolerance.
  for (int t = 0; t < 10; ++t) {
    Mat x(120, 4);
    std::vector<int> y(120);
    for (int i = 0; i < 120; ++i) {
      y[static_cast<std::size_t>(i)] = i % 3 ? -1 : 1;
      for (int c = 0; c < 4; ++c) x(i, c) = rng.normal() + (y[static_cast<std::size_t>(i)] > 0 ? 1.0 : 0.0);
    }
    const Mat k = rbf_gram(x, 1.0);
    SvmOptions opt;
    opt.C = t % 2 ? 1.0 : 100.0;
    worst_kkt = std::max(worst_kkt, svm_kkt_residual(svm_train(k, y, opt), k));
  }
  const auto two = svm_train(Mat::Identity(2, 2), std::vector<int>{1, -1}, SvmOptions{10.0});
  const bool exact = two.alphas[0] == 1.0 && two.alphas[1] == 1.0;
  const double secs = seconds_since(t0);
  return {worst_gap <= 1e-4 && worst_kkt <= 1e-3 && exact && secs < 60.0,
          fmt("max dual gap %.3g over 50 problems, max KKT residual %.3g, n=2 alpha=(%g,%g), %.2f s", worst_gap,
              worst_kkt, two.alphas[0], two.alphas[1], secs)};
}

// Criterion 8.
Outcome anomaly_detectors() {
  int bad_traces = 0;
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    Rng rng(seed);
    const auto d = static_cast<Eigen::Index>(1 + seed % 4);
    Mat x(120, d);
    for (Eigen::Index i = 0; i < x.rows(); ++i)
      for (Eigen::Index j = 0; j < d; ++j) x(i, j) = rng.normal() + 3.0 * static_cast<double>(i % (1 + seed % 3));
    GmmOptions opt;
    opt.k = 1 + static_cast<int>(seed % 5);
    opt.seed = seed;
    const auto m = gmm_fit(x, opt);
    for (std::size_t t = 1; t < m.trace.size(); ++t)
      if (m.trace[t] < m.trace[t - 1] - 1e-9 * std::max(1.0, std::abs(m.trace[t - 1]))) {
        ++bad_traces;
        break;
      }
  }

  int pav_mismatches = 0, sequences = 0;
  for (int n = 1; n <= 12; ++n)
    for (int bits = 0; bits < (1 << n); ++bits, ++sequences) {
      std::vector<double> y(static_cast<std::size_t>(n));
      for (int i = 0; i < n; ++i) y[static_cast<std::size_t>(i)] = (bits >> i) & 1;
      const auto fit = pav(y), oracle = test::minmax_isotonic(y);
      for (std::size_t i = 0; i < y.size(); ++i) pav_mismatches += std::abs(fit[i] - oracle[i]) > 1e-12;
    }

  const double c256 = average_path_length(256);

  int wins = 0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    Rng rng(seed);
    Mat x = test::gaussian_cloud(rng, 256, 2, 1.0);
    x.row(255).setConstant(8.0);
    const auto f = iforest_train(x, 100, 256, seed);
    Eigen::Index arg = 0;
    double top = -1.0;
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      const double s = iforest_score(f, x.row(i).transpose());
      if (s > top) top = s, arg = i;
    }
    wins += arg == 255;
  }
  return {bad_traces == 0 && pav_mismatches == 0 && std::abs(c256 - 10.2448) <= 5e-5 && wins >= 19,
          fmt("%d/100 EM fits non-monotone, %d PAV mismatches over %d sequences, c(256)=%.6f, outlier wins %d/20",
              bad_traces, pav_mismatches, sequences, c256, wins)};
}

// Criterion 9.
Outcome metrics_and_curves() {
  const auto m = metrics(ConfusionMatrix{90, 20, 80, 10, Label::Gesture});
  const bool exact = m.accuracy == 0.85 && *m.precision == 90.0 / 110.0 && *m.sensitivity == 0.9 &&
                     *m.specificity == 0.8 && std::abs(*m.precision - 0.81818) < 5e-6;

  Rng rng(9);
  int reflection_failures = 0;
  double reflection_double = 0.0, monotone = 0.0;
  for (int t = 0; t < 200; ++t) {
    const std::size_t n = 10 + rng.index(300);
    std::vector<double> s(n), neg(n), mono(n);
    std::vector<Label> y(n);
    for (std::size_t i = 0; i < n; ++i) {
      y[i] = i % 2 ? Label::Gesture : Label::NoGesture;
      // Coarse scores force ties.
      s[i] = std::round(rng.normal() * 4.0 + (y[i] == Label::Gesture ? 1.0 : 0.0)) / 4.0;
      neg[i] = -s[i];
      mono[i] = std::exp(3.0 * s[i]) + 2.0;
    }
    const auto a = roc_curve(s, y), b = roc_curve(neg, y), c = roc_curve(mono, y);
    reflection_failures += a.auc_numerator + b.auc_numerator != a.auc_denominator;
    reflection_double = std::max(reflection_double, std::abs(b.auc - (1.0 - a.auc)));
    monotone = std::max(monotone, std::abs(c.auc - a.auc));
  }
  return {exact && reflection_failures == 0 && reflection_double <= 1e-15 && monotone <= 1e-12,
          fmt("worked example %s, %d exact reflection failures (double gap %.3g), monotone deviation %.3g",
              exact ? "exact" : "wrong", reflection_failures, reflection_double, monotone)};
}

RunConfig end_to_end_config(const fs::path& out) {
  RunConfig cfg;
  cfg.synth.rows = 4000;
  cfg.output_dir = out;
  cfg.use_cache = false;
  return cfg;
}

std::string first_digest;

// Criterion 10.
Outcome end_to_end() {
  const auto dir = fs::current_path() / "acceptance-run";
  fs::remove_all(dir);
  const auto t0 = Clock::now();
  const auto res = run_pipeline(end_to_end_config(dir / "first"));
  const double secs = seconds_since(t0);
  const auto& r = res.report;
  first_digest = r["digest"].get<std::string>();

  bool shaped = r["summary"]["classification_cells"] == 189 && r["table"].size() == r["cells"].size();
  for (const auto& row : r["table"])
    for (const char* k : {"method", "data_type", "pairing", "accuracy", "precision", "sensitivity", "specificity"})
      shaped = shaped && row.contains(k);
  const auto& ds = r["datasets"][0];
  const double ratio = ds["gesture"].get<double>() / ds["no_gesture"].get<double>();
  const auto& cls = r["summary"]["best_classification"];
  const auto& det = r["summary"]["best_detector"];
  const bool beats = !cls.is_null() && !det.is_null() && cls["beats_baseline"] == true && det["beats_baseline"] == true;
  return {res.exit_code == 0 && shaped && beats && secs < 1800.0 && std::abs(ratio - 13662.0 / 24845.0) < 0.02,
          fmt("%.0f s, %zu cells (%d failed), class ratio %.3f, best kernel %s %.3f vs %.3f, best detector %s %.3f vs %.3f",
              secs, r["cells"].size(), static_cast<int>(res.failed_cells.size()), ratio,
              cls.value("key", std::string("-")).c_str(), cls.value("accuracy", 0.0), cls.value("majority_baseline", 0.0),
              det.value("key", std::string("-")).c_str(), det.value("accuracy", 0.0), det.value("majority_baseline", 0.0))};
}

// Criterion 11.
Outcome determinism() {
  const auto second = run_pipeline(end_to_end_config(fs::current_path() / "acceptance-run" / "second"));
  const auto digest = second.report["digest"].get<std::string>();
  return {!first_digest.empty() && digest == first_digest,
          fmt("first %.16s..., second %.16s...", first_digest.c_str(), digest.c_str())};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"divergence ordering", divergence_ordering},
      {"hand-derived CJSD values", hand_values},
      {"JSD bound and triangle inequality", jsd_bound_and_triangle},
      {"kernel grid", kernel_grid},
      {"encoding round trip", encoding_round_trip},
      {"descriptor lengths", descriptor_lengths},
      {"SVM correctness", svm_correctness},
      {"anomaly detectors", anomaly_detectors},
      {"metrics and curves", metrics_and_curves},
      {"end-to-end synthetic experiment", end_to_end},
      {"determinism", determinism},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    failed += !o.pass;
    std::printf("%s %2zu %s: %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first, o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
