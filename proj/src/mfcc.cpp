#include <cmath>
#include <numbers>

#include <unsupported/Eigen/FFT>

#include "camo/features.hpp"

namespace camo {

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

Mat dct2_matrix(int n_out, int n_in) {
  Mat d(n_out, n_in);
  for (int k = 0; k < n_out; ++k) {
    const double scale = std::sqrt((k == 0 ? 1.0 : 2.0) / n_in);
    for (int m = 0; m < n_in; ++m)
      d(k, m) = scale * std::cos(std::numbers::pi * k * (m + 0.5) / n_in);
  }
  return d;
}

MfccExtractor::MfccExtractor(int sample_rate, MfccParams params)
    : sample_rate_(sample_rate), params_(params) {
  require(sample_rate > 0, ErrorCode::InvalidArgument, "mfcc: sample rate must be positive");
  require(params.n_coeffs >= 1 && params.n_coeffs <= params.n_mels, ErrorCode::InvalidArgument,
          "mfcc: need 1 <= n_coeffs <= n_mels");
  frame_len_ = std::llround(sample_rate * params.frame_ms / 1000.0);
  hop_ = std::llround(sample_rate * params.hop_ms / 1000.0);
  require(frame_len_ >= 2 && hop_ >= 1, ErrorCode::InvalidArgument, "mfcc: frame or hop too short");
  fft_len_ = 1;
  while (fft_len_ < frame_len_) fft_len_ <<= 1;

  window_.resize(frame_len_);
  for (Eigen::Index n = 0; n < frame_len_; ++n)
    window_[n] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * n / static_cast<double>(frame_len_ - 1));

  // HTK-style triangles spaced evenly on the mel axis from 0 Hz to Nyquist.
  const Eigen::Index bins = fft_len_ / 2 + 1;
  const double mel_hi = hz_to_mel(sample_rate / 2.0);
  Vec edges_hz(params.n_mels + 2);
  for (int i = 0; i < params.n_mels + 2; ++i) edges_hz[i] = mel_to_hz(mel_hi * i / (params.n_mels + 1));
  mel_bank_ = Mat::Zero(params.n_mels, bins);
  for (int m = 0; m < params.n_mels; ++m) {
    const double lo = edges_hz[m], centre = edges_hz[m + 1], hi = edges_hz[m + 2];
    for (Eigen::Index k = 0; k < bins; ++k) {
      const double f = static_cast<double>(k) * sample_rate / static_cast<double>(fft_len_);
      if (f > lo && f <= centre) mel_bank_(m, k) = (f - lo) / (centre - lo);
      else if (f > centre && f < hi) mel_bank_(m, k) = (hi - f) / (hi - centre);
    }
  }
  dct_ = dct2_matrix(params.n_coeffs, params.n_mels);
  silent_ = dct_ * Vec::Constant(params.n_mels, std::log(params.log_floor));
}

Vec MfccExtractor::frame_coefficients(const std::vector<std::int16_t>& samples, Eigen::Index start) const {
  bool silent = true;
  for (Eigen::Index n = 0; n < frame_len_ && silent; ++n)
    silent = samples[static_cast<std::size_t>(start + n)] == 0;
  if (silent) return silent_;

  thread_local Eigen::FFT<double> fft;
  std::vector<double> buf(static_cast<std::size_t>(fft_len_), 0.0);
  for (Eigen::Index n = 0; n < frame_len_; ++n)
    buf[static_cast<std::size_t>(n)] =
        window_[n] * static_cast<double>(samples[static_cast<std::size_t>(start + n)]) / 32768.0;
  std::vector<std::complex<double>> spec;
  fft.fwd(spec, buf);

  const Eigen::Index bins = fft_len_ / 2 + 1;
  Vec magnitude(bins);
  for (Eigen::Index k = 0; k < bins; ++k) magnitude[k] = std::abs(spec[static_cast<std::size_t>(k)]);
  const Vec energies = mel_bank_ * magnitude;
  const Vec log_energies = energies.unaryExpr([this](double e) { return std::log(std::max(e, params_.log_floor)); });
  return dct_ * log_energies;
}

Mat MfccExtractor::frames(const std::vector<std::int16_t>& samples) const {
  const auto n = static_cast<Eigen::Index>(samples.size());
  require(n > 0, ErrorCode::InvalidArgument, "mfcc: empty clip");
  require(n >= frame_len_, ErrorCode::InvalidArgument, "mfcc: clip shorter than one frame");
  const Eigen::Index count = 1 + (n - frame_len_) / hop_;
  Mat out(count, params_.n_coeffs);
  for (Eigen::Index f = 0; f < count; ++f) out.row(f) = frame_coefficients(samples, f * hop_).transpose();
  return out;
}

Vec MfccExtractor::operator()(const std::vector<std::int16_t>& samples) const {
  return frames(samples).colwise().mean().transpose();
}

Vec mfcc_descriptor(const WavClip& clip, const MfccParams& p) {
  return MfccExtractor(clip.sample_rate, p)(clip.samples);
}

}  // namespace camo
