#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "camo/anomaly.hpp"
#include "camo/classify.hpp"
#include "camo/encode.hpp"
#include "camo/eval.hpp"
#include "camo/features.hpp"
#include "camo/ingest.hpp"
#include "camo/pipeline.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace camo;

namespace {

constexpr int kUsageError = 2;

Label parse_class(const std::string& s) {
  if (s == "gesture") return Label::Gesture;
  if (s == "no-gesture") return Label::NoGesture;
  fail(ErrorCode::InvalidArgument, "class must be gesture or no-gesture");
}

void write_text(const fs::path& path, const std::string& text) {
  if (!path.parent_path().empty()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  require(static_cast<bool>(out), ErrorCode::Io, "cannot write " + path.string());
  out << text;
}

std::string scores_csv(const std::vector<double>& scores, const std::vector<double>& raw, std::span<const Label> truth,
                       std::span<const Label> predicted, double threshold) {
  std::string csv = "id,score,raw_score,label,predicted,threshold\n";
  char buf[160];
  for (std::size_t i = 0; i < scores.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g,%d,%d,%.17g\n", i, scores[i], raw[i], static_cast<int>(truth[i]),
                  static_cast<int>(predicted[i]), threshold);
    csv += buf;
  }
  return csv;
}

// Reads "manifest.csv" (file,label) written by the encode subcommand.
std::vector<std::pair<fs::path, Label>> read_manifest(const fs::path& dir) {
  std::ifstream in(dir / "manifest.csv");
  require(static_cast<bool>(in), ErrorCode::Io, "missing " + (dir / "manifest.csv").string());
  std::vector<std::pair<fs::path, Label>> out;
  std::string line;
  std::getline(in, line);
  require(line == "file,label", ErrorCode::Schema, "manifest header must be 'file,label'");
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto comma = line.find(',');
    require(comma != std::string::npos, ErrorCode::Schema, "bad manifest line '" + line + "'");
    const auto label = line.substr(comma + 1);
    require(label == "0" || label == "1", ErrorCode::Schema, "manifest label must be 0 or 1");
    out.emplace_back(dir / line.substr(0, comma), label == "1" ? Label::Gesture : Label::NoGesture);
  }
  return out;
}

// A recording CSV is fused and cleaned for `pairing`; a dataset CSV must
// already carry that pairing.
Dataset load_instances(const fs::path& path, const std::string& pairing) {
  std::ifstream in(path);
  require(static_cast<bool>(in), ErrorCode::Io, "cannot open " + path.string());
  std::string first;
  std::getline(in, first);
  if (first.rfind("emg1,", 0) == 0) {
    require(!pairing.empty(), ErrorCode::InvalidArgument, "a recording CSV needs --pairing");
    return preprocess(fuse_channels(parse_recording(path), parse_pairing(pairing)));
  }
  auto ds = read_dataset_csv(path);
  require(pairing.empty() || ds.pairing == parse_pairing(pairing), ErrorCode::InvalidArgument,
          "dataset pairing is " + std::string(to_string(ds.pairing)) + ", not " + pairing);
  return ds;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"camo: signal camouflage and divergence-kernel gesture detection toolkit"};
  app.require_subcommand(1);

  // synth
  auto* synth = app.add_subcommand("synth", "Generate a synthetic recording CSV");
  SynthConfig sc;
  std::uint64_t synth_seed = 7;
  fs::path synth_out;
  synth->add_option("--rows", sc.rows, "Row count")->capture_default_str();
  synth->add_option("--segments", sc.segments, "Gesture segments")->capture_default_str();
  synth->add_option("--gesture-fraction", sc.gesture_fraction, "Share of gesture rows")->capture_default_str();
  synth->add_option("--seed", synth_seed, "Generator seed")->capture_default_str();
  synth->add_option("-o,--out", synth_out, "Output CSV")->required();

  // ingest
  auto* ingest = app.add_subcommand("ingest", "Fuse and clean a recording into a dataset CSV");
  fs::path ingest_in, ingest_out, ingest_train, ingest_val;
  std::string ingest_pairing = "acc-gyro-emg";
  double ingest_fraction = 0.75;
  std::uint64_t ingest_seed = 1;
  ingest->add_option("-i,--input", ingest_in, "Recording CSV")->required();
  ingest->add_option("--pairing", ingest_pairing, "acc-gyro-emg | acc-gyro | emg")->capture_default_str();
  ingest->add_option("-o,--out", ingest_out, "Cleaned dataset CSV")->required();
  ingest->add_option("--train-out", ingest_train, "Optional training split CSV");
  ingest->add_option("--validation-out", ingest_val, "Optional validation split CSV");
  ingest->add_option("--train-fraction", ingest_fraction, "Training share of the split")->capture_default_str();
  ingest->add_option("--seed", ingest_seed, "Split seed")->capture_default_str();

  // encode
  auto* encode = app.add_subcommand("encode", "Encode dataset rows as images or audio clips");
  fs::path encode_in, encode_out;
  std::string encode_type = "image", encode_pairing;
  int encode_bits = 8;
  AudioConfig encode_audio;
  encode->add_option("-i,--input", encode_in, "Dataset CSV, or a recording CSV with --pairing")->required();
  encode->add_option("--pairing", encode_pairing, "acc-gyro-emg | acc-gyro | emg");
  encode->add_option("--type", encode_type, "image | audio")->check(CLI::IsMember({"image", "audio"}))->capture_default_str();
  encode->add_option("--bit-depth", encode_bits, "Image bit depth")->check(CLI::IsMember({8, 16}))->capture_default_str();
  encode->add_option("--sample-rate", encode_audio.sample_rate, "Audio sample rate")->capture_default_str();
  encode->add_option("--dwell-ms", encode_audio.dwell_ms, "Hold time per value")->capture_default_str();
  encode->add_option("-o,--out", encode_out, "Output directory")->required();

  // features
  auto* features = app.add_subcommand("features", "Extract descriptors into a feature CSV");
  fs::path feat_in, feat_out;
  std::string feat_type = "image";
  int feat_resize = 32, feat_pca = 0;
  MfccParams feat_mfcc;
  features->add_option("-i,--input", feat_in, "Artifact directory (image/audio) or dataset CSV (signal)")->required();
  features->add_option("--type", feat_type, "signal | image | audio")
      ->check(CLI::IsMember({"signal", "image", "audio"}))
      ->capture_default_str();
  features->add_option("--gist-resize", feat_resize, "Resize side before GIST; 0 keeps the native grid")
      ->capture_default_str();
  features->add_option("--pca", feat_pca, "Keep this many principal components; 0 disables")->capture_default_str();
  features->add_option("-o,--out", feat_out, "Feature CSV")->required();

  // train
  auto* train = app.add_subcommand("train", "Train a kernel SVM, or run nested cross-validation with --cv");
  fs::path train_in, train_out, train_eval, train_scores;
  std::vector<std::string> train_kernels = {"RBF-AM"};
  double train_sigma = 0.0, train_C = 1.0;
  int train_grid = 64;
  bool train_cv = false;
  std::uint64_t train_seed = 11;
  train->add_option("-i,--input", train_in, "Feature CSV")->required();
  train->add_option("--kernel", train_kernels, "Kernel name(s), e.g. Amplified-MCJSD-GM")->capture_default_str();
  train->add_option("--sigma", train_sigma, "Kernel width; 0 uses the median pairwise distance")->capture_default_str();
  train->add_option("--C", train_C, "Box constraint")->capture_default_str();
  train->add_option("--grid-points", train_grid, "Distribution grid size")->capture_default_str();
  train->add_flag("--cv", train_cv, "Run 10-fold nested cross-validation and emit the CvReport JSON");
  train->add_option("--seed", train_seed, "Cross-validation seed")->capture_default_str();
  train->add_option("--eval", train_eval, "Feature CSV to score with the trained model");
  train->add_option("--scores-out", train_scores, "Scores CSV for --eval");
  train->add_option("-o,--out", train_out, "Model file (CKM1) or CvReport JSON with --cv")->required();

  // detect
  auto* detectc = app.add_subcommand("detect", "Train a novelty detector on one class and score an evaluation set");
  fs::path det_train, det_eval, det_out;
  std::string det_method = "ocsvm", det_class = "gesture";
  DetectorOptions det_opt;
  detectc->add_option("--train", det_train, "Feature CSV; rows of the training class are used")->required();
  detectc->add_option("--eval", det_eval, "Feature CSV to score")->required();
  detectc->add_option("--method", det_method, "ocsvm | iforest | gmm")
      ->check(CLI::IsMember({"ocsvm", "iforest", "gmm"}))
      ->capture_default_str();
  detectc->add_option("--train-class", det_class, "gesture | no-gesture")
      ->check(CLI::IsMember({"gesture", "no-gesture"}))
      ->capture_default_str();
  detectc->add_option("--nu", det_opt.nu, "Outlier share for ocsvm and iforest")->capture_default_str();
  detectc->add_option("--trees", det_opt.n_trees, "Isolation Forest size")->capture_default_str();
  detectc->add_option("--seed", det_opt.seed, "Detector seed")->capture_default_str();
  detectc->add_option("-o,--out", det_out, "Scores CSV")->required();

  // evaluate
  auto* evaluate = app.add_subcommand("evaluate", "Metrics, confusion matrix and curves from a scores CSV");
  fs::path eval_in, eval_out;
  std::string eval_positive = "gesture";
  evaluate->add_option("-i,--input", eval_in, "Scores CSV (score,label,predicted columns)")->required();
  evaluate->add_option("--positive", eval_positive, "gesture | no-gesture")
      ->check(CLI::IsMember({"gesture", "no-gesture"}))
      ->capture_default_str();
  evaluate->add_option("-o,--out", eval_out, "Output directory")->required();

  // report
  auto* report = app.add_subcommand("report", "Per-cell results table of a finished run");
  fs::path report_run, report_out;
  report->add_option("--run", report_run, "Run output directory")->required();
  report->add_option("-o,--out", report_out, "Table JSON (defaults to <run>/table.json)");

  // run
  auto* run = app.add_subcommand("run", "Run the whole experiment matrix from a config file");
  fs::path run_config, run_output;
  int run_workers = 0;
  run->add_option("-c,--config", run_config, "INI config")->required();
  run->add_option("--output", run_output, "Override [output] dir");
  run->add_option("--workers", run_workers, "Override the worker count");

  // config
  auto* config = app.add_subcommand("config", "Print the default config");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kUsageError;
  }

  try {
    if (synth->parsed()) {
      const auto frame = synthesize_recording(sc, synth_seed);
      write_recording(frame, synth_out);
      std::cout << "wrote " << frame.size() << " rows (" << frame.count(Label::Gesture) << " gesture) to "
                << synth_out.string() << "\n";
    } else if (ingest->parsed()) {
      auto ds = preprocess(fuse_channels(parse_recording(ingest_in), parse_pairing(ingest_pairing)));
      write_dataset_csv(ds, ingest_out);
      if (!ingest_train.empty() || !ingest_val.empty()) {
        auto [tr, va] = split(ds, ingest_fraction, ingest_seed);
        if (!ingest_train.empty()) write_dataset_csv(tr, ingest_train);
        if (!ingest_val.empty()) write_dataset_csv(va, ingest_val);
      }
      std::cout << "wrote " << ds.size() << " instances of dim " << ds.dim() << "\n";
    } else if (encode->parsed()) {
      const auto ds = load_instances(encode_in, encode_pairing);
      fs::create_directories(encode_out);
      std::string manifest = "file,label\n";
      for (Eigen::Index i = 0; i < ds.size(); ++i) {
        char name[32];
        const Vec v = ds.x.row(i).transpose();
        if (encode_type == "image") {
          std::snprintf(name, sizeof name, "inst_%06lld.pgm", static_cast<long long>(i));
          write_pgm(signal_to_image(v, encode_bits), encode_out / name);
        } else {
          std::snprintf(name, sizeof name, "inst_%06lld.wav", static_cast<long long>(i));
          write_wav(signal_to_audio(v, encode_audio), encode_out / name);
        }
        manifest += std::string(name) + "," + std::to_string(static_cast<int>(ds.y[static_cast<std::size_t>(i)])) + "\n";
      }
      write_text(encode_out / "manifest.csv", manifest);
      std::cout << "encoded " << ds.size() << " instances as " << encode_type << " into " << encode_out.string() << "\n";
    } else if (features->parsed()) {
      Dataset out;
      if (feat_type == "signal") {
        out = read_dataset_csv(feat_in);
      } else {
        const auto items = read_manifest(feat_in);
        require(!items.empty(), ErrorCode::EmptyDataset, "no artifacts listed in the manifest");
        std::vector<Vec> rows;
        if (feat_type == "image") {
          std::optional<GistExtractor> ex;
          for (const auto& [path, label] : items) {
            const auto img = read_pgm(path);
            Mat intensity = image_intensity(img);
            if (feat_resize > 0) intensity = resize_bilinear(intensity, feat_resize);
            if (!ex) {
              GistParams p;
              p.grid = static_cast<int>(img.side());
              ex.emplace(intensity.rows(), p);
            }
            rows.push_back((*ex)(intensity));
            out.y.push_back(label);
          }
        } else {
          std::optional<MfccExtractor> ex;
          for (const auto& [path, label] : items) {
            const auto clip = read_wav(path);
            if (!ex) ex.emplace(clip.sample_rate, feat_mfcc);
            rows.push_back((*ex)(clip.samples));
            out.y.push_back(label);
          }
        }
        out.x.resize(static_cast<Eigen::Index>(rows.size()), rows.front().size());
        for (std::size_t i = 0; i < rows.size(); ++i) out.x.row(static_cast<Eigen::Index>(i)) = rows[i].transpose();
      }
      if (feat_pca > 0) out.x = pca_transform_rows(pca_fit(out.x, feat_pca), out.x);
      write_dataset_csv(out, feat_out);
      std::cout << "wrote " << out.size() << " descriptors of dim " << out.dim() << "\n";
    } else if (train->parsed()) {
      const auto ds = read_dataset_csv(train_in);
      const auto grid = grid_for_samples(ds.x, train_grid);
      if (train_cv) {
        std::vector<KernelSpec> specs;
        for (const auto& k : train_kernels) specs.push_back(parse_kernel_spec(k));
        const auto rep = nested_cv(ds.x, ds.y, grid, DistributionMode::PerSample, specs, CvOptions{}, train_seed);
        json j = {{"seed", rep.seed}, {"specs", json::array()}};
        for (const auto& sr : rep.specs) {
          json folds = json::array();
          for (const auto& f : sr.folds)
            folds.push_back({{"sigma", f.sigma}, {"C", f.C}, {"accuracy", f.accuracy}, {"test", f.test_ids.size()}});
          j["specs"].push_back({{"kernel", sr.spec.name()},
                                {"fold_accuracies", sr.fold_accuracies()},
                                {"mean", sr.mean},
                                {"standard_error", sr.standard_error},
                                {"folds", folds}});
        }
        write_text(train_out, j.dump(2) + "\n");
        std::cout << j.dump(2) << "\n";
      } else {
        require(train_kernels.size() == 1, ErrorCode::InvalidArgument, "train: give exactly one --kernel without --cv");
        auto spec = parse_kernel_spec(train_kernels.front());
        const auto dists = sample_distributions(ds.x, grid);
        const auto terms = pairwise_terms(ds.x, dists);
        std::vector<Eigen::Index> all(static_cast<std::size_t>(ds.size()));
        for (std::size_t i = 0; i < all.size(); ++i) all[i] = static_cast<Eigen::Index>(i);
        spec.sigma = train_sigma > 0.0 ? train_sigma : median_distance(terms, all);
        SvmOptions opt;
        opt.C = train_C;
        const auto model = svm_train(gram_from_terms(terms, spec), to_signs(ds.y), opt);
        const auto machine = make_kernel_machine(model, ds.x, grid);
        write_model(machine, train_out);
        std::cout << "trained " << spec.name() << " sigma=" << spec.sigma << " C=" << train_C << ": "
                  << model.support_ids.size() << " support vectors, " << model.iterations << " iterations\n";
        if (!train_eval.empty()) {
          require(!train_scores.empty(), ErrorCode::InvalidArgument, "train: --eval needs --scores-out");
          const auto ev = read_dataset_csv(train_eval);
          std::vector<double> s;
          std::vector<Label> pred;
          for (Eigen::Index i = 0; i < ev.size(); ++i) {
            s.push_back(machine.decision(ev.x.row(i).transpose()));
            pred.push_back(svm_predict(s.back()) > 0 ? Label::Gesture : Label::NoGesture);
          }
          write_text(train_scores, scores_csv(s, s, ev.y, pred, 0.0));
        }
      }
    } else if (detectc->parsed()) {
      const auto tr = read_dataset_csv(det_train);
      const auto ev = read_dataset_csv(det_eval);
      const Label cls = parse_class(det_class);
      std::vector<Eigen::Index> ids;
      for (Eigen::Index i = 0; i < tr.size(); ++i)
        if (tr.y[static_cast<std::size_t>(i)] == cls) ids.push_back(i);
      const auto det = train_detector(parse_detector(det_method), tr.x(ids, Eigen::all), det_opt);
      const auto res = detect(det, ev.x, cls);
      write_text(det_out, scores_csv(res.scores, res.raw_scores, ev.y, res.predicted, res.threshold));
      const auto m = metrics(confusion(ev.y, res.predicted, cls));
      std::cout << to_json(m).dump() << "\n";
    } else if (evaluate->parsed()) {
      std::ifstream in(eval_in);
      require(static_cast<bool>(in), ErrorCode::Io, "cannot open " + eval_in.string());
      std::string line;
      std::getline(in, line);
      require(line.rfind("id,score,raw_score,label,predicted", 0) == 0, ErrorCode::Schema,
              "scores CSV must start with id,score,raw_score,label,predicted");
      std::vector<double> raw;
      std::vector<Label> truth, pred;
      while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string c;
        while (std::getline(ss, c, ',')) cells.push_back(c);
        require(cells.size() >= 5, ErrorCode::Schema, "scores CSV row has too few columns");
        raw.push_back(parse_cell(cells[2]));
        truth.push_back(cells[3] == "1" ? Label::Gesture : Label::NoGesture);
        pred.push_back(cells[4] == "1" ? Label::Gesture : Label::NoGesture);
      }
      const Label pos = parse_class(eval_positive);
      const auto cm = confusion(truth, pred, pos);
      const auto m = metrics(cm);
      fs::create_directories(eval_out);
      json j = {{"confusion", to_json(cm)}, {"metrics", to_json(m)}};
      const bool both = std::count(truth.begin(), truth.end(), pos) > 0 &&
                        std::count(truth.begin(), truth.end(), pos) < static_cast<std::ptrdiff_t>(truth.size());
      if (both) {
        const auto roc = roc_curve(raw, truth, pos);
        j["auc"] = roc.auc;
        write_text(eval_out / "roc.csv", curve_csv(roc.points, "fpr", "tpr"));
        write_text(eval_out / "pr.csv", curve_csv(pr_curve(raw, truth, pos).points, "recall", "precision"));
      } else {
        j["auc"] = nullptr;
      }
      write_text(eval_out / "confusion.json", j.dump(2) + "\n");
      std::cout << j.dump(2) << "\n";
    } else if (report->parsed()) {
      std::ifstream in(report_run / "report.json");
      require(static_cast<bool>(in), ErrorCode::Io, "no report.json in " + report_run.string());
      json r;
      try {
        r = json::parse(in);
      } catch (const json::exception& e) {
        fail(ErrorCode::Corrupt, std::string("report.json: ") + e.what());
      }
      require(r.contains("digest") && r["digest"] == report_digest(r), ErrorCode::Corrupt,
              "report.json digest does not match its contents");
      json table = {{"digest", r["digest"]}, {"rows", report_table(r)}};
      const auto out = report_out.empty() ? report_run / "table.json" : report_out;
      write_text(out, table.dump(2) + "\n");
      std::cout << table.dump(2) << "\n";
    } else if (run->parsed()) {
      auto cfg = load_config(run_config);
      if (!run_output.empty()) cfg.output_dir = run_output;
      if (run_workers > 0) cfg.workers = run_workers;
      const auto result = run_pipeline(cfg);
      std::cout << result.report["summary"].dump(2) << "\n";
      std::cout << "digest " << result.report["digest"].get<std::string>() << "\n";
      for (const auto& k : result.failed_cells) std::cerr << "failed cell: " << k << "\n";
      return result.exit_code;
    } else if (config->parsed()) {
      std::cout << canonical_config(RunConfig{});
    }
  } catch (const Error& e) {
    std::cerr << "error[" << to_string(e.code()) << "]: " << e.what() << "\n";
    return e.code() == ErrorCode::InvalidArgument ? kUsageError : 1;
  } catch (const std::exception& e) {
    std::cerr << "error[internal]: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
