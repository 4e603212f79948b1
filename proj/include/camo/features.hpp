#pragma once

#include <complex>
#include <vector>

#include "camo/core.hpp"
#include "camo/encode.hpp"

namespace camo {

// ---------------------------------------------------------------------------
// Texture descriptor

struct GistParams {
  // 0 keeps the native grid; otherwise the image is bilinearly upsampled to
  // resize_to x resize_to before filtering.
  int resize_to = 0;
  int scales = 4;
  int orientations = 8;
  // Side of the spatial pooling grid.
  int grid = 4;

  int descriptor_len() const { return grid * grid * scales * orientations; }
};

// Bilinear upsampling with corner-aligned sampling on the unit square.
Mat resize_bilinear(const Eigen::Ref<const Mat>& image, Eigen::Index side);
ImageGrid resize_image(const ImageGrid& img, Eigen::Index side);

// Pixel intensities scaled to [0, 1].
Mat image_intensity(const ImageGrid& img);

// Frequency-domain Gabor bank for one image side. Scale s has radial centre
// frequency 0.25 / 2^s cycles per pixel; orientation o points at pi*o/O.
// The DC bin of every filter is zero, so flat regions carry no energy.
class GistExtractor {
 public:
  GistExtractor(Eigen::Index side, GistParams params);

  // Descriptor ordered scale-major, then orientation, then pooling cell
  // (row-major). Each entry is the mean response magnitude over its cell.
  Vec operator()(const Eigen::Ref<const Mat>& image) const;

  Eigen::Index side() const { return side_; }
  const GistParams& params() const { return params_; }

  // Smallest image side the bank supports for `scales`.
  static Eigen::Index min_side(int scales);

 private:
  Eigen::Index side_;
  GistParams params_;
  std::vector<Mat> filters_;
};

Vec gist_descriptor(const ImageGrid& img, const GistParams& p);

// Forward/inverse 2-D FFT on square or rectangular grids (row-then-column
// passes over Eigen's FFT).
Eigen::MatrixXcd fft2(const Eigen::Ref<const Eigen::MatrixXcd>& x);
Eigen::MatrixXcd ifft2(const Eigen::Ref<const Eigen::MatrixXcd>& x);

// ---------------------------------------------------------------------------
// Cepstral descriptor

struct MfccParams {
  double frame_ms = 25.0;
  double hop_ms = 10.0;
  int n_mels = 26;
  int n_coeffs = 20;
  double log_floor = 1e-10;
};

double hz_to_mel(double hz);
double mel_to_hz(double mel);

class MfccExtractor {
 public:
  MfccExtractor(int sample_rate, MfccParams params);

  // Per-frame coefficients, one row per frame.
  Mat frames(const std::vector<std::int16_t>& samples) const;

  // Mean of the per-frame coefficients.
  Vec operator()(const std::vector<std::int16_t>& samples) const;

  Eigen::Index frame_len() const { return frame_len_; }
  Eigen::Index hop() const { return hop_; }
  Eigen::Index fft_len() const { return fft_len_; }
  const Mat& mel_bank() const { return mel_bank_; }

 private:
  Vec frame_coefficients(const std::vector<std::int16_t>& samples, Eigen::Index start) const;

  int sample_rate_;
  MfccParams params_;
  Eigen::Index frame_len_;
  Eigen::Index hop_;
  Eigen::Index fft_len_;
  Vec window_;
  Mat mel_bank_;  // n_mels x (fft_len/2 + 1)
  Mat dct_;       // n_coeffs x n_mels
  Vec silent_;    // coefficients of an all-zero frame
};

Vec mfcc_descriptor(const WavClip& clip, const MfccParams& p = {});

// Orthonormal DCT-II matrix, rows are basis functions.
Mat dct2_matrix(int n_out, int n_in);

// ---------------------------------------------------------------------------
// Principal components

struct PcaModel {
  Vec mean;
  Mat components;  // k x d, orthonormal rows
  Vec explained_variance;
  Vec explained_variance_ratio;

  Eigen::Index k() const { return components.rows(); }
  Eigen::Index dim() const { return components.cols(); }
};

// Rows of `data` are observations.
PcaModel pca_fit(const Eigen::Ref<const Mat>& data, Eigen::Index k);
Vec pca_transform(const PcaModel& model, const Eigen::Ref<const Vec>& x);
Mat pca_transform_rows(const PcaModel& model, const Eigen::Ref<const Mat>& data);
Vec pca_reconstruct(const PcaModel& model, const Eigen::Ref<const Vec>& z);

}  // namespace camo
