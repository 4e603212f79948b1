#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "camo/anomaly.hpp"
#include "camo/classify.hpp"
#include "camo/encode.hpp"
#include "camo/features.hpp"
#include "camo/ingest.hpp"

namespace camo {

enum class DataType { Signal, Image, Audio };

std::string_view to_string(DataType t);
DataType parse_data_type(std::string_view s);

struct RunConfig {
  // [data]
  std::filesystem::path input;  // empty means synthesize
  SynthConfig synth;
  std::uint64_t data_seed = 7;

  // [experiment]
  std::vector<Pairing> pairings = {Pairing::AccGyroEmg, Pairing::AccGyro, Pairing::Emg};
  std::vector<DataType> data_types = {DataType::Signal, DataType::Image, DataType::Audio};
  std::vector<std::string> kernels;  // kernel names; empty selects all 21
  std::array<std::uint64_t, 3> family_seeds = {11, 22, 33};  // AM, GM, HM
  double train_fraction = 0.75;
  std::uint64_t split_seed = 1;
  // Stratified subsample size per randomized dataset for the kernel grid;
  // 0 keeps every instance.
  int max_instances = 240;
  DistributionMode distribution_mode = DistributionMode::PerSample;
  int grid_points = 64;
  bool standardize = true;
  bool benchmark = true;
  MlpOptions mlp;
  int workers = 1;

  // [svm]
  CvOptions cv;
  bool eigen_diagnostics = false;

  // [detectors]
  std::vector<DetectorKind> detectors = {DetectorKind::OneClassSvm, DetectorKind::IsolationForest,
                                         DetectorKind::GmmIsotonic};
  Label train_class = Label::Gesture;
  DetectorOptions detector;

  // [features]
  int bit_depth = 8;
  GistParams gist{32, 4, 8, 4};  // grid follows the image side
  int pca_components = 30;
  AudioConfig audio;
  MfccParams mfcc;

  // [output]
  std::filesystem::path output_dir = "camo-run";
  bool write_artifacts = false;
  bool use_cache = true;
};

RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::filesystem::path& path);

// Canonical INI rendering. The [output] section and the worker count are
// left out when include_output is false, which is what the config hash covers.
std::string canonical_config(const RunConfig& cfg, bool include_output = true);

std::string sha256_hex(std::string_view bytes);

// SHA-256 of the report with the "timings" and "digest" members removed.
std::string report_digest(const nlohmann::ordered_json& report);

// Feature matrix for one (pairing, data type) with its split bookkeeping.
struct FeatureSet {
  Pairing pairing = Pairing::AccGyroEmg;
  DataType data_type = DataType::Signal;
  Mat x;  // post-processed features
  std::vector<Label> y;
  std::vector<Eigen::Index> train_ids;
  std::vector<Eigen::Index> validation_ids;
  Eigen::Index raw_dim = 0;  // descriptor length before PCA
};

// Encodes (if needed), extracts descriptors, then applies PCA and
// standardization fitted on the training split.
FeatureSet build_features(const Dataset& ds, DataType type, const RunConfig& cfg,
                          const std::filesystem::path& artifact_dir = {});

// Descriptor rows for one data type, before PCA and standardization.
Mat raw_descriptors(const Mat& signals, DataType type, const RunConfig& cfg,
                    const std::filesystem::path& artifact_dir = {});

struct RunResult {
  int exit_code = 0;
  nlohmann::ordered_json report;
  std::vector<std::string> failed_cells;
};

// Runs the whole matrix and writes report.json, config.ini and cells/<key>/
// under cfg.output_dir. A failing cell is recorded and the run continues.
RunResult run_pipeline(const RunConfig& cfg);

// One results row per cell: method, data type, pairing and the four metrics.
nlohmann::ordered_json report_table(const nlohmann::ordered_json& report);

// "method|data_type|pairing".
std::string cell_key(std::string_view method, DataType type, Pairing pairing);

}  // namespace camo
