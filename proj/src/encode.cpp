#include "camo/encode.hpp"

#include <cmath>

namespace camo {

namespace {

struct Range {
  double lo;
  double hi;
  bool degenerate;
};

Range value_range(const Vec& padded) {
  require(padded.allFinite(), ErrorCode::InvalidArgument, "encode: signal has non-finite entries");
  const double lo = padded.minCoeff();
  const double hi = padded.maxCoeff();
  return {lo, hi, lo == hi};
}

}  // namespace

std::int64_t padded_length(std::int64_t n) {
  require(n >= 1, ErrorCode::InvalidArgument, "pad_signal: empty signal");
  auto k = static_cast<std::int64_t>(std::sqrt(static_cast<double>(n)));
  while (k * k < n) ++k;
  while (k > 1 && (k - 1) * (k - 1) >= n) --k;
  return k * k;
}

Vec pad_signal(const Eigen::Ref<const Vec>& v) {
  const auto len = padded_length(v.size());
  Vec out = Vec::Zero(len);
  out.head(v.size()) = v;
  return out;
}

double default_audio_duration(std::int64_t padded_len) { return padded_len >= 16 ? 9.0 : 4.0; }

ImageGrid signal_to_image(const Eigen::Ref<const Vec>& v, int bit_depth) {
  require(bit_depth == 8 || bit_depth == 16, ErrorCode::InvalidArgument,
          "signal_to_image: bit_depth must be 8 or 16");
  const Vec padded = pad_signal(v);
  const auto range = value_range(padded);
  const auto side = static_cast<Eigen::Index>(std::llround(std::sqrt(static_cast<double>(padded.size()))));
  const double top = std::ldexp(1.0, bit_depth) - 1.0;

  ImageGrid img;
  img.meta = {v.size(), padded.size(), range.lo, range.hi, range.degenerate, bit_depth, 0.0, 0};
  img.pixels = PixelGrid::Zero(side, side);
  if (range.degenerate) return img;
  const double span = range.hi - range.lo;
  for (Eigen::Index i = 0; i < padded.size(); ++i) {
    const double q = quantize_round(top * (padded[i] - range.lo) / span);
    img.pixels(i / side, i % side) = static_cast<std::uint16_t>(q);
  }
  return img;
}

Vec image_to_signal(const ImageGrid& img) {
  const auto& m = img.meta;
  require(img.side() * img.pixels.cols() == m.padded_len && img.pixels.rows() == img.pixels.cols(),
          ErrorCode::Corrupt, "image_to_signal: grid size does not match padded_len");
  require(m.original_len >= 1 && m.original_len <= m.padded_len, ErrorCode::Corrupt,
          "image_to_signal: original_len out of range");
  require(m.bit_depth == 8 || m.bit_depth == 16, ErrorCode::Corrupt, "image_to_signal: bad bit_depth");
  if (m.degenerate) return Vec::Constant(m.original_len, m.v_min);
  const double top = std::ldexp(1.0, m.bit_depth) - 1.0;
  const double span = m.v_max - m.v_min;
  const auto side = img.side();
  Vec out(m.original_len);
  for (Eigen::Index i = 0; i < out.size(); ++i)
    out[i] = m.v_min + span * static_cast<double>(img.pixels(i / side, i % side)) / top;
  return out;
}

WavClip signal_to_audio(const Eigen::Ref<const Vec>& v, const AudioConfig& cfg) {
  require(cfg.sample_rate >= 1000, ErrorCode::InvalidArgument, "signal_to_audio: sample_rate < 1000 Hz");
  require(cfg.dwell_ms > 0.0, ErrorCode::InvalidArgument, "signal_to_audio: dwell must be positive");
  const Vec padded = pad_signal(v);
  const double duration =
      cfg.target_duration_s > 0.0 ? cfg.target_duration_s : default_audio_duration(padded.size());
  const auto dwell = static_cast<std::int64_t>(std::llround(cfg.sample_rate * cfg.dwell_ms / 1000.0));
  const auto total = static_cast<std::int64_t>(std::llround(cfg.sample_rate * duration));
  require(dwell >= 1, ErrorCode::InvalidArgument, "signal_to_audio: dwell shorter than one sample");
  require(dwell * padded.size() <= total, ErrorCode::InvalidArgument,
          "signal_to_audio: burst longer than target duration");

  const auto range = value_range(padded);
  WavClip clip;
  clip.sample_rate = cfg.sample_rate;
  clip.meta = {v.size(), padded.size(), range.lo, range.hi, range.degenerate, 16, cfg.dwell_ms,
               cfg.sample_rate};
  clip.samples.assign(static_cast<std::size_t>(total), 0);
  if (range.degenerate) return clip;
  const double span = range.hi - range.lo;
  for (Eigen::Index i = 0; i < padded.size(); ++i) {
    const double s = quantize_round(-32767.0 + 65534.0 * (padded[i] - range.lo) / span);
    const auto begin = clip.samples.begin() + i * dwell;
    std::fill(begin, begin + dwell, static_cast<std::int16_t>(s));
  }
  return clip;
}

Vec audio_to_signal(const WavClip& clip) {
  const auto& m = clip.meta;
  require(m.original_len >= 1 && m.original_len <= m.padded_len, ErrorCode::Corrupt,
          "audio_to_signal: original_len out of range");
  require(m.dwell_ms > 0.0 && m.sample_rate > 0, ErrorCode::Corrupt,
          "audio_to_signal: sidecar lacks dwell/sample_rate");
  const auto dwell = static_cast<std::int64_t>(std::llround(m.sample_rate * m.dwell_ms / 1000.0));
  require(static_cast<std::int64_t>(clip.samples.size()) >= dwell * m.original_len, ErrorCode::Corrupt,
          "audio_to_signal: clip shorter than the encoded burst");
  if (m.degenerate) return Vec::Constant(m.original_len, m.v_min);
  const double span = m.v_max - m.v_min;
  Vec out(m.original_len);
  for (Eigen::Index i = 0; i < out.size(); ++i) {
    const double s = clip.samples[static_cast<std::size_t>(i * dwell)];
    out[i] = m.v_min + span * (s + 32767.0) / 65534.0;
  }
  return out;
}

}  // namespace camo
