#include <cmath>
#include <numbers>

#include <unsupported/Eigen/FFT>

#include "camo/features.hpp"

namespace camo {

namespace {

Eigen::FFT<double>& thread_fft() {
  // Eigen's FFT caches twiddle tables internally; one instance per thread.
  thread_local Eigen::FFT<double> fft;
  return fft;
}

template <bool Inverse>
Eigen::MatrixXcd transform2(const Eigen::Ref<const Eigen::MatrixXcd>& x) {
  auto& fft = thread_fft();
  Eigen::MatrixXcd out(x.rows(), x.cols());
  Eigen::VectorXcd in_buf, out_buf;
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    in_buf = x.row(r).transpose();
    if constexpr (Inverse) fft.inv(out_buf, in_buf);
    else fft.fwd(out_buf, in_buf);
    out.row(r) = out_buf.transpose();
  }
  for (Eigen::Index c = 0; c < x.cols(); ++c) {
    in_buf = out.col(c);
    if constexpr (Inverse) fft.inv(out_buf, in_buf);
    else fft.fwd(out_buf, in_buf);
    out.col(c) = out_buf;
  }
  return out;
}

// Signed frequency of DFT bin k on an n-point grid, in cycles per sample.
double bin_frequency(Eigen::Index k, Eigen::Index n) {
  const auto signed_k = k <= n / 2 ? k : k - n;
  return static_cast<double>(signed_k) / static_cast<double>(n);
}

}  // namespace

Eigen::MatrixXcd fft2(const Eigen::Ref<const Eigen::MatrixXcd>& x) { return transform2<false>(x); }
Eigen::MatrixXcd ifft2(const Eigen::Ref<const Eigen::MatrixXcd>& x) { return transform2<true>(x); }

Mat resize_bilinear(const Eigen::Ref<const Mat>& image, Eigen::Index side) {
  const auto rows = image.rows(), cols = image.cols();
  require(rows >= 1 && cols >= 1, ErrorCode::InvalidArgument, "resize: empty image");
  require(side >= rows && side >= cols, ErrorCode::InvalidArgument,
          "resize: downsizing is not supported");
  auto coord = [side](Eigen::Index i, Eigen::Index n) {
    return side == 1 ? 0.0 : static_cast<double>(i) * static_cast<double>(n - 1) / static_cast<double>(side - 1);
  };
  Mat out(side, side);
  for (Eigen::Index i = 0; i < side; ++i) {
    const double y = coord(i, rows);
    const auto y0 = std::min(static_cast<Eigen::Index>(std::floor(y)), rows - 1);
    const auto y1 = std::min(y0 + 1, rows - 1);
    const double wy = y - static_cast<double>(y0);
    for (Eigen::Index j = 0; j < side; ++j) {
      const double x = coord(j, cols);
      const auto x0 = std::min(static_cast<Eigen::Index>(std::floor(x)), cols - 1);
      const auto x1 = std::min(x0 + 1, cols - 1);
      const double wx = x - static_cast<double>(x0);
      const double top = image(y0, x0) * (1.0 - wx) + image(y0, x1) * wx;
      const double bottom = image(y1, x0) * (1.0 - wx) + image(y1, x1) * wx;
      out(i, j) = top * (1.0 - wy) + bottom * wy;
    }
  }
  return out;
}

ImageGrid resize_image(const ImageGrid& img, Eigen::Index side) {
  require(side >= img.side(), ErrorCode::InvalidArgument, "resize_image: downsizing requested");
  const Mat up = resize_bilinear(img.pixels.cast<double>(), side);
  ImageGrid out;
  out.pixels = up.unaryExpr([](double v) { return quantize_round(v); }).cast<std::uint16_t>();
  out.meta = img.meta;
  out.meta.original_len = out.meta.padded_len = side * side;
  return out;
}

Mat image_intensity(const ImageGrid& img) {
  const double top = std::ldexp(1.0, img.meta.bit_depth) - 1.0;
  return img.pixels.cast<double>() / top;
}

Eigen::Index GistExtractor::min_side(int scales) { return Eigen::Index{4} << (scales - 1); }

GistExtractor::GistExtractor(Eigen::Index side, GistParams params) : side_(side), params_(params) {
  require(params.scales >= 1 && params.orientations >= 1 && params.grid >= 1, ErrorCode::InvalidArgument,
          "gist: scales, orientations and grid must be positive");
  require(side >= params.grid, ErrorCode::InvalidArgument, "gist: image smaller than pooling grid");
  require(side >= min_side(params.scales), ErrorCode::InvalidArgument,
          "gist: a " + std::to_string(side) + "x" + std::to_string(side) + " image cannot support " +
              std::to_string(params.scales) + " scales (needs side >= " +
              std::to_string(min_side(params.scales)) + "); resize the image first");

  const double angular_width = std::numbers::pi / (2.0 * params.orientations);
  filters_.reserve(static_cast<std::size_t>(params.scales * params.orientations));
  for (int s = 0; s < params.scales; ++s) {
    const double f0 = 0.25 / std::ldexp(1.0, s);
    const double sigma_r = 0.5 * f0;
    const double sigma_t = f0 * angular_width;
    for (int o = 0; o < params.orientations; ++o) {
      const double theta = std::numbers::pi * o / params.orientations;
      const double ct = std::cos(theta), st = std::sin(theta);
      Mat h(side, side);
      for (Eigen::Index r = 0; r < side; ++r) {
        const double v = bin_frequency(r, side);
        for (Eigen::Index c = 0; c < side; ++c) {
          const double u = bin_frequency(c, side);
          const double along = u * ct + v * st - f0;
          const double across = -u * st + v * ct;
          h(r, c) = std::exp(-0.5 * (along * along / (sigma_r * sigma_r) +
                                     across * across / (sigma_t * sigma_t)));
        }
      }
      h(0, 0) = 0.0;
      filters_.push_back(std::move(h));
    }
  }
}

Vec GistExtractor::operator()(const Eigen::Ref<const Mat>& image) const {
  require(image.rows() == side_ && image.cols() == side_, ErrorCode::InvalidArgument,
          "gist: image side does not match the filter bank");
  const Eigen::MatrixXcd spectrum = fft2(image.cast<std::complex<double>>());
  const int g = params_.grid;
  std::vector<Eigen::Index> edges(static_cast<std::size_t>(g + 1));
  for (int i = 0; i <= g; ++i) edges[static_cast<std::size_t>(i)] = i * side_ / g;

  Vec out(params_.descriptor_len());
  Eigen::Index k = 0;
  for (const auto& h : filters_) {
    const Mat magnitude = ifft2(spectrum.cwiseProduct(h.cast<std::complex<double>>())).cwiseAbs();
    for (int gr = 0; gr < g; ++gr)
      for (int gc = 0; gc < g; ++gc) {
        const auto r0 = edges[static_cast<std::size_t>(gr)], r1 = edges[static_cast<std::size_t>(gr + 1)];
        const auto c0 = edges[static_cast<std::size_t>(gc)], c1 = edges[static_cast<std::size_t>(gc + 1)];
        out[k++] = magnitude.block(r0, c0, r1 - r0, c1 - c0).mean();
      }
  }
  return out;
}

Vec gist_descriptor(const ImageGrid& img, const GistParams& p) {
  Mat image = image_intensity(img);
  if (p.resize_to > 0) image = resize_bilinear(image, p.resize_to);
  return GistExtractor(image.rows(), p)(image);
}

}  // namespace camo
