#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "camo/core.hpp"

namespace camo {

// One row of the Myo-style recording: 8 EMG, 3 accelerometer, 3 gyroscope
// channels, the device pose code and the gesture label (16 data channels),
// plus a timestamp in seconds.
struct SensorRecord {
  std::array<double, 8> emg{};
  std::array<double, 3> acc{};
  std::array<double, 3> gyro{};
  double pose = 0.0;
  Label label = Label::NoGesture;
  double timestamp = 0.0;
};

struct SensorFrame {
  std::vector<SensorRecord> rows;

  std::size_t size() const { return rows.size(); }
  bool empty() const { return rows.empty(); }
  std::size_t count(Label l) const;
};

inline constexpr std::size_t kDataChannels = 16;

enum class Pairing { AccGyroEmg, AccGyro, Emg };

int pairing_dim(Pairing p);
std::string_view to_string(Pairing p);
Pairing parse_pairing(std::string_view s);

enum class SplitTag { All, Train, Validation };

std::string_view to_string(SplitTag t);

// Labeled instances stored as rows of `x`.
struct Dataset {
  Mat x;
  std::vector<Label> y;
  Pairing pairing = Pairing::AccGyroEmg;
  SplitTag split_tag = SplitTag::All;
  std::uint64_t seed = 0;

  Eigen::Index size() const { return x.rows(); }
  Eigen::Index dim() const { return x.cols(); }
  std::size_t count(Label l) const;

  // Rows selected by index, in the given order.
  Dataset subset(std::span<const Eigen::Index> ids) const;
};

// CSV header expected by parse_recording and written by write_recording.
const std::vector<std::string>& recording_header();

SensorFrame parse_recording(const std::filesystem::path& path);
SensorFrame parse_recording_text(const std::string& text);
void write_recording(const SensorFrame& frame, const std::filesystem::path& path);

// Parses one CSV cell. "nan", "inf" and "-inf" (any case) map to the IEEE
// sentinels and an empty cell reads as NaN; other non-numeric text throws.
double parse_cell(std::string_view cell);

struct SynthConfig {
  std::size_t rows = 1000;
  std::size_t segments = 5;
  // Share of rows inside gesture segments.
  double gesture_fraction = 13662.0 / 38507.0;
  double sample_rate_hz = 50.0;
  // Gaussian noise scale of the rest class, per channel group.
  double emg_rest_noise = 4.0;
  double acc_rest_noise = 0.05;
  double gyro_rest_noise = 4.0;
  // Gesture rows: mean shift in units of the rest noise, and a Student-t
  // tail with this many degrees of freedom scaled by gesture_noise_ratio.
  double gesture_shift = 2.5;
  double gesture_noise_ratio = 2.0;
  double gesture_dof = 3.0;
};

SensorFrame synthesize_recording(const SynthConfig& cfg, std::uint64_t seed);

Dataset fuse_channels(const SensorFrame& frame, Pairing pairing);

// Drops rows with NaN/inf and exact duplicate (vector, label) rows, keeping
// first occurrences in their original order.
Dataset preprocess(const Dataset& ds);

// Stratified split. The train side holds round(train_fraction * n) rows,
// apportioned across classes by largest remainder and drawn after a seeded
// shuffle. Both sides keep ascending row order.
std::pair<Dataset, Dataset> split(const Dataset& ds, double train_fraction,
                                  std::uint64_t seed);

// Index-level version of split used by the pipeline for bookkeeping.
std::pair<std::vector<Eigen::Index>, std::vector<Eigen::Index>> stratified_split_indices(
    std::span<const Label> labels, double train_fraction, std::uint64_t seed);

void write_dataset_csv(const Dataset& ds, const std::filesystem::path& path);
Dataset read_dataset_csv(const std::filesystem::path& path);

}  // namespace camo
