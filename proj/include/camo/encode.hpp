#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "camo/core.hpp"

namespace camo {

// Everything needed to invert an encoded artifact. Written next to each
// artifact as `<artifact>.meta.json`.
struct ScaleMeta {
  std::int64_t original_len = 0;
  std::int64_t padded_len = 0;
  double v_min = 0.0;
  double v_max = 0.0;
  bool degenerate = false;
  int bit_depth = 8;
  // Audio only; zero for images.
  double dwell_ms = 0.0;
  int sample_rate = 0;
};

using PixelGrid = Eigen::Matrix<std::uint16_t, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct ImageGrid {
  PixelGrid pixels;
  ScaleMeta meta;

  Eigen::Index side() const { return pixels.rows(); }
};

struct WavClip {
  int sample_rate = 8000;
  std::vector<std::int16_t> samples;
  ScaleMeta meta;

  double duration_s() const {
    return static_cast<double>(samples.size()) / static_cast<double>(sample_rate);
  }
};

struct AudioConfig {
  int sample_rate = 8000;
  double dwell_ms = 25.0;
  // <= 0 picks the default for the padded length: 9 s from 16 samples up,
  // 4 s below.
  double target_duration_s = 0.0;
};

double default_audio_duration(std::int64_t padded_len);

// Rounds half away from zero.
inline double quantize_round(double x) { return std::round(x); }

// Smallest perfect square >= n.
std::int64_t padded_length(std::int64_t n);

Vec pad_signal(const Eigen::Ref<const Vec>& v);

ImageGrid signal_to_image(const Eigen::Ref<const Vec>& v, int bit_depth = 8);
Vec image_to_signal(const ImageGrid& img);

WavClip signal_to_audio(const Eigen::Ref<const Vec>& v, const AudioConfig& cfg = {});
Vec audio_to_signal(const WavClip& clip);

// Artifact files. Images are binary PGM (P5), audio is 16-bit PCM mono WAV;
// both carry a JSON sidecar at `<path>.meta.json`.
void write_pgm(const ImageGrid& img, const std::filesystem::path& path);
ImageGrid read_pgm(const std::filesystem::path& path);
void write_wav(const WavClip& clip, const std::filesystem::path& path);
WavClip read_wav(const std::filesystem::path& path);

std::filesystem::path sidecar_path(const std::filesystem::path& artifact);
void write_sidecar(const ScaleMeta& meta, const std::filesystem::path& artifact);
ScaleMeta read_sidecar(const std::filesystem::path& artifact);

}  // namespace camo
