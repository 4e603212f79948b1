#include "camo/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <thread>

#include <Eigen/Eigenvalues>
#include <openssl/evp.h>

#include "camo/eval.hpp"
#include "io_util.hpp"

namespace camo {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

constexpr const char* kModuleVersion = "1.0.0";

json module_versions() {
  json v;
  for (const char* m : {"ingest", "encode", "features", "divergence", "kernels", "classify", "anomaly", "eval", "cli"})
    v[m] = kModuleVersion;
  return v;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string sanitize(const std::string& key) {
  std::string out;
  for (char c : key) out += c == '|' ? std::string("__") : std::string(1, c);
  return out;
}

// Runs every job on a bounded pool. Jobs report their own failures.
void run_pool(const std::vector<std::function<void()>>& jobs, int workers) {
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (;;) {
      const auto i = next.fetch_add(1);
      if (i >= jobs.size()) return;
      jobs[i]();
    }
  };
  const auto count = std::min<std::size_t>(static_cast<std::size_t>(std::max(1, workers)), jobs.size());
  if (count <= 1) {
    work();
    return;
  }
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < count; ++t) pool.emplace_back(work);
  for (auto& t : pool) t.join();
}

std::string error_code_of(const std::exception& e) {
  if (const auto* ce = dynamic_cast<const Error*>(&e)) return std::string(to_string(ce->code()));
  return "internal";
}

std::string hex_of_matrix(const Mat& x, const std::string& salt) {
  std::string bytes = salt;
  for (Eigen::Index i = 0; i < x.rows(); ++i)
    for (Eigen::Index j = 0; j < x.cols(); ++j) detail::put_le<double>(bytes, x(i, j));
  return sha256_hex(bytes).substr(0, 24);
}

std::vector<Eigen::Index> stratified_subsample(std::span<const Label> y, int max_instances, std::uint64_t seed) {
  const auto n = static_cast<Eigen::Index>(y.size());
  if (max_instances <= 0 || max_instances >= n) {
    std::vector<Eigen::Index> all(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) all[static_cast<std::size_t>(i)] = i;
    return all;
  }
  return stratified_split_indices(y, static_cast<double>(max_instances) / static_cast<double>(n), seed).first;
}

struct CellOutput {
  std::string key;
  json body;
  double seconds = 0.0;
  bool failed = false;
};

struct JobResult {
  std::vector<CellOutput> cells;
  int cache_hits = 0;
  int cache_misses = 0;
};

json provenance(const std::string& config_hash, const json& seeds) {
  return {{"config_hash", config_hash}, {"seeds", seeds}, {"module_versions", module_versions()}};
}

void write_cell_files(const fs::path& dir, const ConfusionMatrix& cm, const Metrics& m,
                      std::span<const double> scores, std::span<const Label> labels, Label positive) {
  fs::create_directories(dir);
  json c = {{"confusion", to_json(cm)}, {"metrics", to_json(m)}};
  detail::atomic_write(dir / "confusion.json", c.dump(2) + "\n");
  const bool has_pos = std::find(labels.begin(), labels.end(), positive) != labels.end();
  const bool has_neg = std::find_if(labels.begin(), labels.end(), [&](Label l) { return l != positive; }) != labels.end();
  if (has_pos && has_neg) {
    detail::atomic_write(dir / "roc.csv", curve_csv(roc_curve(scores, labels, positive).points, "fpr", "tpr"));
    detail::atomic_write(dir / "pr.csv", curve_csv(pr_curve(scores, labels, positive).points, "recall", "precision"));
  }
}

std::optional<double> auc_of(std::span<const double> scores, std::span<const Label> labels, Label positive) {
  const bool has_pos = std::find(labels.begin(), labels.end(), positive) != labels.end();
  const bool has_neg = std::find_if(labels.begin(), labels.end(), [&](Label l) { return l != positive; }) != labels.end();
  if (!has_pos || !has_neg) return std::nullopt;
  return roc_curve(scores, labels, positive).auc;
}

json opt_json(const std::optional<double>& v) { return v ? json(*v) : json(); }

json failed_cell(const std::string& method, DataType t, Pairing p, const std::string& kind, const std::exception& e) {
  return {{"kind", kind},
          {"status", "failed"},
          {"method", method},
          {"data_type", std::string(to_string(t))},
          {"pairing", std::string(to_string(p))},
          {"error", e.what()},
          {"error_code", error_code_of(e)}};
}

// Kernel-grid cells for one randomized dataset (one Chisini family).
JobResult kernel_job(const FeatureSet& fs_, ChisiniKind family, const std::vector<KernelSpec>& specs, const RunConfig& cfg,
                     const std::string& config_hash) {
  JobResult out;
  const auto seed = cfg.family_seeds[static_cast<std::size_t>(family)];
  const auto t0 = std::chrono::steady_clock::now();
  try {
    const auto ids = stratified_subsample(fs_.y, cfg.max_instances, seed);
    const Mat x = fs_.x(ids, Eigen::all);
    std::vector<Label> y;
    for (auto i : ids) y.push_back(fs_.y[static_cast<std::size_t>(i)]);
    const auto grid = grid_for_samples(x, cfg.grid_points);
    const bool need_div = std::any_of(specs.begin(), specs.end(), [](const KernelSpec& s) { return !s.is_rbf(); });

    CvReport rep;
    PairwiseTerms terms;
    if (cfg.distribution_mode == DistributionMode::PerSample) {
      terms.sq_dist = pairwise_sq_dist(x, x);
      if (need_div) {
        const auto k = static_cast<std::size_t>(family);
        const fs::path cache = cfg.output_dir / "cache" /
                               ("div-" + hex_of_matrix(x, std::to_string(grid.points) + ":" + std::to_string(grid.lo) +
                                                              ":" + std::to_string(grid.hi) + ":" +
                                                              std::string(to_string(family))) +
                                ".ckg");
        bool hit = false;
        if (cfg.use_cache && fs::exists(cache)) {
          try {
            auto g = read_gram(cache);
            if (g.size() == x.rows()) {
              terms.cjsd[k] = std::move(g.values);
              hit = true;
            }
          } catch (const Error&) {
            hit = false;
          }
        }
        if (!hit) {
          const auto t = pairwise_terms(x, sample_distributions(x, grid), std::array{family});
          terms.cjsd[k] = t.cjsd[k];
          if (cfg.use_cache) {
            // Amplified CJSD with infinite sigma is the divergence itself.
            GramMatrix g;
            g.values = terms.cjsd[k];
            g.spec = {KernelFamily::Amplified, DivergenceKind::Cjsd, family, std::numeric_limits<double>::infinity()};
            g.instance_ids.assign(ids.begin(), ids.end());
            fs::create_directories(cache.parent_path());
            write_gram(g, cache);
          }
        }
        (hit ? out.cache_hits : out.cache_misses) += 1;
      }
      rep = nested_cv(terms, y, specs, cfg.cv, seed);
    } else {
      rep = nested_cv(x, y, grid, cfg.distribution_mode, specs, cfg.cv, seed);
    }
    const double shared = seconds_since(t0) / static_cast<double>(std::max<std::size_t>(1, specs.size()));

    const double baseline = majority_baseline(y);
    for (const auto& sr : rep.specs) {
      const auto key = cell_key(sr.spec.name(), fs_.data_type, fs_.pairing);
      // Every instance is tested exactly once across the outer folds.
      std::vector<Label> truth, pred;
      std::vector<double> decisions;
      json folds = json::array();
      for (const auto& f : sr.folds) {
        for (std::size_t r = 0; r < f.test_ids.size(); ++r) {
          truth.push_back(y[static_cast<std::size_t>(f.test_ids[r])]);
          pred.push_back(svm_predict(f.test_decisions[r]) > 0 ? Label::Gesture : Label::NoGesture);
          decisions.push_back(f.test_decisions[r]);
        }
        folds.push_back({{"sigma", f.sigma},
                         {"C", f.C},
                         {"accuracy", f.accuracy},
                         {"train", f.train_ids.size()},
                         {"test", f.test_ids.size()}});
      }
      const auto cm = confusion(truth, pred, Label::Gesture);
      const auto m = metrics(cm);
      const auto acc = sr.fold_accuracies();
      json cell = {{"kind", "classification"},
                   {"status", "ok"},
                   {"method", sr.spec.name()},
                   {"data_type", std::string(to_string(fs_.data_type))},
                   {"pairing", std::string(to_string(fs_.pairing))},
                   {"instances", x.rows()},
                   {"dim", x.cols()},
                   {"majority_baseline", baseline},
                   {"cv",
                    {{"fold_accuracies", acc},
                     {"mean", sr.mean},
                     {"standard_error", sr.standard_error},
                     {"error_bar", to_json(error_bar(acc))},
                     {"folds", folds}}},
                   {"confusion", to_json(cm)},
                   {"metrics", to_json(m)},
                   {"auc", opt_json(auc_of(decisions, truth, Label::Gesture))}};
      if (cfg.eigen_diagnostics && !sr.spec.is_rbf() && cfg.distribution_mode == DistributionMode::PerSample) {
        std::vector<Eigen::Index> all(static_cast<std::size_t>(x.rows()));
        for (std::size_t i = 0; i < all.size(); ++i) all[i] = static_cast<Eigen::Index>(i);
        KernelSpec s = sr.spec;
        s.sigma = median_distance(terms, all);
        const Mat K = gram_block(terms, s, all, all);
        Eigen::SelfAdjointEigenSolver<Mat> es(K, Eigen::EigenvaluesOnly);
        const Vec ev = es.eigenvalues();
        cell["eigen"] = {{"sigma", s.sigma},
                         {"min_eigenvalue", ev.minCoeff()},
                         {"max_eigenvalue", ev.maxCoeff()},
                         {"negative_count", (ev.array() < 0.0).count()},
                         {"clip_change_fro", (clip_negative_eigenvalues(K) - K).norm()}};
      }
      cell["provenance"] = provenance(config_hash, {{"family", std::string(to_string(family))}, {"cv_seed", seed}});
      write_cell_files(cfg.output_dir / "cells" / sanitize(key), cm, m, decisions, truth, Label::Gesture);
      out.cells.push_back({key, std::move(cell), shared, false});
    }
  } catch (const std::exception& e) {
    for (const auto& s : specs)
      out.cells.push_back({cell_key(s.name(), fs_.data_type, fs_.pairing),
                           failed_cell(s.name(), fs_.data_type, fs_.pairing, "classification", e), seconds_since(t0),
                           true});
  }
  return out;
}

JobResult benchmark_job(const FeatureSet& fs_, const RunConfig& cfg, const std::string& config_hash) {
  JobResult out;
  const auto key = cell_key("MLP", fs_.data_type, fs_.pairing);
  const auto t0 = std::chrono::steady_clock::now();
  try {
    std::vector<Label> y_train, truth, pred;
    for (auto i : fs_.train_ids) y_train.push_back(fs_.y[static_cast<std::size_t>(i)]);
    const auto model = mlp_train(fs_.x(fs_.train_ids, Eigen::all), y_train, cfg.mlp);
    std::vector<double> proba;
    for (auto i : fs_.validation_ids) {
      const double p = mlp_predict_proba(model, fs_.x.row(i).transpose());
      proba.push_back(p);
      truth.push_back(fs_.y[static_cast<std::size_t>(i)]);
      pred.push_back(p >= 0.5 ? Label::Gesture : Label::NoGesture);
    }
    const auto cm = confusion(truth, pred, Label::Gesture);
    const auto m = metrics(cm);
    json cell = {{"kind", "benchmark"},
                 {"status", "ok"},
                 {"method", "MLP"},
                 {"data_type", std::string(to_string(fs_.data_type))},
                 {"pairing", std::string(to_string(fs_.pairing))},
                 {"train", fs_.train_ids.size()},
                 {"validation", fs_.validation_ids.size()},
                 {"hidden", cfg.mlp.hidden},
                 {"epochs", cfg.mlp.epochs},
                 {"majority_baseline", majority_baseline(truth)},
                 {"confusion", to_json(cm)},
                 {"metrics", to_json(m)},
                 {"auc", opt_json(auc_of(proba, truth, Label::Gesture))},
                 {"provenance", provenance(config_hash, {{"mlp_seed", cfg.mlp.seed}, {"split_seed", cfg.split_seed}})}};
    write_cell_files(cfg.output_dir / "cells" / sanitize(key), cm, m, proba, truth, Label::Gesture);
    out.cells.push_back({key, std::move(cell), seconds_since(t0), false});
  } catch (const std::exception& e) {
    out.cells.push_back({key, failed_cell("MLP", fs_.data_type, fs_.pairing, "benchmark", e), seconds_since(t0), true});
  }
  return out;
}

JobResult detector_job(const FeatureSet& fs_, DetectorKind kind, const RunConfig& cfg, const std::string& config_hash) {
  JobResult out;
  const std::string method(to_string(kind));
  const auto key = cell_key(method, fs_.data_type, fs_.pairing);
  const auto t0 = std::chrono::steady_clock::now();
  try {
    std::vector<Eigen::Index> train;
    for (auto i : fs_.train_ids)
      if (fs_.y[static_cast<std::size_t>(i)] == cfg.train_class) train.push_back(i);
    const auto det = train_detector(kind, fs_.x(train, Eigen::all), cfg.detector);
    const auto eval_ids = detection_eval_ids(fs_.y, fs_.validation_ids, cfg.train_class);
    const auto res = detect(det, fs_.x(eval_ids, Eigen::all), cfg.train_class);
    std::vector<Label> truth;
    for (auto i : eval_ids) truth.push_back(fs_.y[static_cast<std::size_t>(i)]);
    const auto cm = confusion(truth, res.predicted, cfg.train_class);
    const auto m = metrics(cm);
    json cell = {{"kind", "detector"},
                 {"status", "ok"},
                 {"method", method},
                 {"data_type", std::string(to_string(fs_.data_type))},
                 {"pairing", std::string(to_string(fs_.pairing))},
                 {"train_class", std::string(to_string(cfg.train_class))},
                 {"train", train.size()},
                 {"evaluation", eval_ids.size()},
                 {"threshold", res.threshold},
                 {"majority_baseline", majority_baseline(truth)},
                 {"confusion", to_json(cm)},
                 {"metrics", to_json(m)},
                 {"auc", opt_json(auc_of(res.raw_scores, truth, cfg.train_class))},
                 {"provenance", provenance(config_hash, {{"detector_seed", cfg.detector.seed}, {"split_seed", cfg.split_seed}})}};
    const auto dir = cfg.output_dir / "cells" / sanitize(key);
    write_cell_files(dir, cm, m, res.raw_scores, truth, cfg.train_class);
    std::string csv = "id,score,raw_score,label,predicted,threshold\n";
    char buf[160];
    for (std::size_t r = 0; r < eval_ids.size(); ++r) {
      std::snprintf(buf, sizeof buf, "%lld,%.17g,%.17g,%d,%d,%.17g\n", static_cast<long long>(eval_ids[r]),
                    res.scores[r], res.raw_scores[r], static_cast<int>(truth[r]), static_cast<int>(res.predicted[r]),
                    res.threshold);
      csv += buf;
    }
    detail::atomic_write(dir / "scores.csv", csv);
    out.cells.push_back({key, std::move(cell), seconds_since(t0), false});
  } catch (const std::exception& e) {
    out.cells.push_back({key, failed_cell(method, fs_.data_type, fs_.pairing, "detector", e), seconds_since(t0), true});
  }
  return out;
}

json table_row(const json& cell) {
  json row = {{"method", cell["method"]}, {"data_type", cell["data_type"]}, {"pairing", cell["pairing"]},
              {"kind", cell["kind"]}};
  if (cell["status"] == "ok") {
    for (const char* k : {"accuracy", "precision", "sensitivity", "specificity"}) row[k] = cell["metrics"][k];
  } else {
    for (const char* k : {"accuracy", "precision", "sensitivity", "specificity"}) row[k] = nullptr;
  }
  row["status"] = cell["status"];
  return row;
}

}  // namespace

std::string sha256_hex(std::string_view bytes) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  require(EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr) == 1, ErrorCode::Io,
          "sha256: digest failed");
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[md[i] >> 4];
    out += hex[md[i] & 15];
  }
  return out;
}

std::string report_digest(const json& report) {
  json copy = report;
  copy.erase("timings");
  copy.erase("digest");
  return sha256_hex(copy.dump());
}

std::string cell_key(std::string_view method, DataType type, Pairing pairing) {
  return std::string(method) + "|" + std::string(to_string(type)) + "|" + std::string(to_string(pairing));
}

Mat raw_descriptors(const Mat& signals, DataType type, const RunConfig& cfg, const fs::path& artifact_dir) {
  const auto n = signals.rows();
  require(n > 0, ErrorCode::EmptyDataset, "features: no instances");
  if (type == DataType::Signal) return signals;
  if (!artifact_dir.empty()) fs::create_directories(artifact_dir);
  auto artifact = [&](Eigen::Index i, const char* ext) {
    char name[32];
    std::snprintf(name, sizeof name, "inst_%06lld.%s", static_cast<long long>(i), ext);
    return artifact_dir / name;
  };

  Mat out;
  if (type == DataType::Image) {
    std::optional<GistExtractor> extractor;
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto img = signal_to_image(signals.row(i).transpose(), cfg.bit_depth);
      if (!artifact_dir.empty()) write_pgm(img, artifact(i, "pgm"));
      Mat intensity = image_intensity(img);
      if (cfg.gist.resize_to > 0) intensity = resize_bilinear(intensity, cfg.gist.resize_to);
      if (!extractor) {
        GistParams p = cfg.gist;
        p.grid = static_cast<int>(img.side());
        extractor.emplace(intensity.rows(), p);
        out.resize(n, p.descriptor_len());
      }
      out.row(i) = (*extractor)(intensity).transpose();
    }
    return out;
  }

  MfccExtractor extractor(cfg.audio.sample_rate, cfg.mfcc);
  out.resize(n, cfg.mfcc.n_coeffs);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto clip = signal_to_audio(signals.row(i).transpose(), cfg.audio);
    if (!artifact_dir.empty()) write_wav(clip, artifact(i, "wav"));
    out.row(i) = extractor(clip.samples).transpose();
  }
  return out;
}

FeatureSet build_features(const Dataset& ds, DataType type, const RunConfig& cfg, const fs::path& artifact_dir) {
  FeatureSet f;
  f.pairing = ds.pairing;
  f.data_type = type;
  f.y = ds.y;
  std::tie(f.train_ids, f.validation_ids) = stratified_split_indices(ds.y, cfg.train_fraction, cfg.split_seed);
  Mat raw = raw_descriptors(ds.x, type, cfg, artifact_dir);
  f.raw_dim = raw.cols();
  if (raw.cols() > cfg.pca_components) {
    const auto pca = pca_fit(raw(f.train_ids, Eigen::all), cfg.pca_components);
    raw = pca_transform_rows(pca, raw);
  }
  if (cfg.standardize) raw = Standardizer::fit(raw(f.train_ids, Eigen::all)).apply(raw);
  f.x = std::move(raw);
  return f;
}

json report_table(const json& report) {
  json rows = json::array();
  for (const auto& [key, cell] : report.at("cells").items()) rows.push_back(table_row(cell));
  return rows;
}

RunResult run_pipeline(const RunConfig& cfg) {
  const auto t_start = std::chrono::steady_clock::now();
  fs::create_directories(cfg.output_dir);
  detail::atomic_write(cfg.output_dir / "config.ini", canonical_config(cfg));
  const auto config_hash = sha256_hex(canonical_config(cfg, false));

  const auto frame = cfg.input.empty() ? synthesize_recording(cfg.synth, cfg.data_seed) : parse_recording(cfg.input);

  // Feature stage, one job per (pairing, data type).
  struct Stage {
    Pairing pairing;
    DataType type;
    std::optional<FeatureSet> features;
    std::optional<Dataset> data;
    std::string error;
    std::string error_code;
    double seconds = 0.0;
  };
  std::vector<Stage> stages;
  std::map<Pairing, Dataset> datasets;
  std::map<Pairing, std::string> dataset_errors;
  for (auto p : cfg.pairings) {
    try {
      datasets.emplace(p, preprocess(fuse_channels(frame, p)));
    } catch (const std::exception& e) {
      dataset_errors[p] = e.what();
    }
    for (auto t : cfg.data_types) stages.push_back({p, t, std::nullopt, std::nullopt, {}, {}, 0.0});
  }
  {
    std::vector<std::function<void()>> jobs;
    for (auto& st : stages)
      jobs.push_back([&] {
        const auto t0 = std::chrono::steady_clock::now();
        try {
          const auto it = datasets.find(st.pairing);
          require(it != datasets.end(), ErrorCode::EmptyDataset,
                  "dataset for " + std::string(to_string(st.pairing)) + " unavailable: " + dataset_errors[st.pairing]);
          const fs::path dir = cfg.write_artifacts && st.type != DataType::Signal
                                   ? cfg.output_dir / "artifacts" / std::string(to_string(st.pairing)) /
                                         std::string(to_string(st.type))
                                   : fs::path{};
          st.features = build_features(it->second, st.type, cfg, dir);
        } catch (const std::exception& e) {
          st.error = e.what();
          st.error_code = error_code_of(e);
        }
        st.seconds = seconds_since(t0);
      });
    run_pool(jobs, cfg.workers);
  }

  // Cell stage.
  struct Planned {
    std::size_t stage;
    std::function<JobResult()> run;
    std::vector<std::string> keys;
    std::string kind;
    std::vector<std::string> methods;
  };
  std::vector<Planned> plan;
  for (std::size_t s = 0; s < stages.size(); ++s) {
    const auto& st = stages[s];
    for (auto family : kAllChisini) {
      std::vector<KernelSpec> specs;
      for (const auto& spec : kernel_specs_for_family(family))
        if (cfg.kernels.empty() || std::find(cfg.kernels.begin(), cfg.kernels.end(), spec.name()) != cfg.kernels.end())
          specs.push_back(spec);
      if (specs.empty()) continue;
      Planned p{s, {}, {}, "classification", {}};
      for (const auto& spec : specs) {
        p.keys.push_back(cell_key(spec.name(), st.type, st.pairing));
        p.methods.push_back(spec.name());
      }
      p.run = [&, s, family, specs] { return kernel_job(*stages[s].features, family, specs, cfg, config_hash); };
      plan.push_back(std::move(p));
    }
    if (cfg.benchmark)
      plan.push_back({s, [&, s] { return benchmark_job(*stages[s].features, cfg, config_hash); },
                      {cell_key("MLP", st.type, st.pairing)}, "benchmark", {"MLP"}});
    for (auto kind : cfg.detectors)
      plan.push_back({s, [&, s, kind] { return detector_job(*stages[s].features, kind, cfg, config_hash); },
                      {cell_key(to_string(kind), st.type, st.pairing)}, "detector", {std::string(to_string(kind))}});
  }

  std::vector<JobResult> results(plan.size());
  {
    std::vector<std::function<void()>> jobs;
    for (std::size_t j = 0; j < plan.size(); ++j)
      jobs.push_back([&, j] {
        const auto& st = stages[plan[j].stage];
        if (!st.features) {
          for (std::size_t c = 0; c < plan[j].keys.size(); ++c)
            results[j].cells.push_back({plan[j].keys[c],
                                        {{"kind", plan[j].kind},
                                         {"status", "failed"},
                                         {"method", plan[j].methods[c]},
                                         {"data_type", std::string(to_string(st.type))},
                                         {"pairing", std::string(to_string(st.pairing))},
                                         {"error", "feature stage failed: " + st.error},
                                         {"error_code", st.error_code}},
                                        0.0,
                                        true});
          return;
        }
        results[j] = plan[j].run();
      });
    run_pool(jobs, cfg.workers);
  }

  // Assembly, in plan order so the report is independent of scheduling.
  json report;
  report["format"] = "camo-report/1";
  report["provenance"] = {{"config_hash", config_hash},
                          {"seeds",
                           {{"data", cfg.data_seed},
                            {"split", cfg.split_seed},
                            {"AM", cfg.family_seeds[0]},
                            {"GM", cfg.family_seeds[1]},
                            {"HM", cfg.family_seeds[2]},
                            {"detectors", cfg.detector.seed},
                            {"mlp", cfg.mlp.seed}}},
                          {"module_versions", module_versions()},
                          {"input", cfg.input.empty() ? std::string("synthetic") : cfg.input.filename().string()}};
  json ds_json = json::array();
  for (const auto& st : stages) {
    json d = {{"pairing", std::string(to_string(st.pairing))}, {"data_type", std::string(to_string(st.type))}};
    if (st.features) {
      const auto& f = *st.features;
      d["status"] = "ok";
      d["instances"] = f.x.rows();
      d["descriptor_dim"] = f.raw_dim;
      d["feature_dim"] = f.x.cols();
      d["gesture"] = std::count(f.y.begin(), f.y.end(), Label::Gesture);
      d["no_gesture"] = std::count(f.y.begin(), f.y.end(), Label::NoGesture);
      d["train"] = f.train_ids.size();
      d["validation"] = f.validation_ids.size();
    } else {
      d["status"] = "failed";
      d["error"] = st.error;
    }
    ds_json.push_back(d);
  }
  report["datasets"] = ds_json;

  json cells = json::object();
  json cell_times = json::object();
  std::vector<std::string> failed;
  int hits = 0, misses = 0, classification_cells = 0;
  for (const auto& r : results) {
    hits += r.cache_hits;
    misses += r.cache_misses;
    for (const auto& c : r.cells) {
      cells[c.key] = c.body;
      cell_times[c.key] = c.seconds;
      if (c.failed) failed.push_back(c.key);
      if (c.body["kind"] == "classification") ++classification_cells;
    }
  }
  report["cells"] = cells;
  report["table"] = report_table(report);

  auto best_of = [&](const std::string& kind, const char* score_path) {
    json best;
    double top = -1.0;
    for (const auto& [key, cell] : cells.items()) {
      if (cell["kind"] != kind || cell["status"] != "ok") continue;
      const double acc = score_path[0] == 'c' ? cell["cv"]["mean"].get<double>() : cell["metrics"]["accuracy"].get<double>();
      if (acc > top) {
        top = acc;
        const double base = cell["majority_baseline"].get<double>();
        best = {{"key", key}, {"accuracy", acc}, {"majority_baseline", base}, {"beats_baseline", acc > base}};
      }
    }
    return best;
  };
  report["summary"] = {{"classification_cells", classification_cells},
                       {"cells", cells.size()},
                       {"failed", failed.size()},
                       {"best_classification", best_of("classification", "cv")},
                       {"best_benchmark", best_of("benchmark", "metrics")},
                       {"best_detector", best_of("detector", "metrics")}};
  report["failed_cells"] = failed;

  json feature_times = json::object();
  for (const auto& st : stages)
    feature_times[std::string(to_string(st.pairing)) + "|" + std::string(to_string(st.type))] = st.seconds;
  report["timings"] = {{"total_s", seconds_since(t_start)},
                       {"features_s", feature_times},
                       {"cells_s", cell_times},
                       {"gram_cache_hits", hits},
                       {"gram_cache_misses", misses}};
  report["digest"] = report_digest(report);
  detail::atomic_write(cfg.output_dir / "report.json", report.dump(2) + "\n");

  RunResult result;
  result.exit_code = failed.empty() ? 0 : 1;
  result.failed_cells = failed;
  result.report = std::move(report);
  return result;
}

}  // namespace camo
