#include <fstream>
#include <sstream>

#include <json.hpp>

#include "camo/encode.hpp"
#include "io_util.hpp"

namespace camo {

namespace detail {

void atomic_write(const std::filesystem::path& path, std::string_view bytes) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorCode::Io, "cannot write " + tmp.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) fail(ErrorCode::Io, "short write to " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) fail(ErrorCode::Io, "cannot rename " + tmp.string() + ": " + ec.message());
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::Io, "cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace detail

using detail::get_le;
using detail::put_le;

std::filesystem::path sidecar_path(const std::filesystem::path& artifact) {
  auto p = artifact;
  p += ".meta.json";
  return p;
}

void write_sidecar(const ScaleMeta& meta, const std::filesystem::path& artifact) {
  nlohmann::ordered_json j;
  j["original_len"] = meta.original_len;
  j["padded_len"] = meta.padded_len;
  j["v_min"] = meta.v_min;
  j["v_max"] = meta.v_max;
  j["degenerate"] = meta.degenerate;
  j["bit_depth"] = meta.bit_depth;
  j["dwell_ms"] = meta.dwell_ms;
  j["sample_rate"] = meta.sample_rate;
  detail::atomic_write(sidecar_path(artifact), j.dump(2) + "\n");
}

ScaleMeta read_sidecar(const std::filesystem::path& artifact) {
  const auto text = detail::read_file(sidecar_path(artifact));
  try {
    const auto j = nlohmann::json::parse(text);
    ScaleMeta m;
    m.original_len = j.at("original_len").get<std::int64_t>();
    m.padded_len = j.at("padded_len").get<std::int64_t>();
    m.v_min = j.at("v_min").get<double>();
    m.v_max = j.at("v_max").get<double>();
    m.degenerate = j.at("degenerate").get<bool>();
    m.bit_depth = j.at("bit_depth").get<int>();
    m.dwell_ms = j.at("dwell_ms").get<double>();
    m.sample_rate = j.at("sample_rate").get<int>();
    return m;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::Corrupt, "bad sidecar for " + artifact.string() + ": " + e.what());
  }
}

void write_pgm(const ImageGrid& img, const std::filesystem::path& path) {
  const bool wide = img.meta.bit_depth == 16;
  std::string out = "P5\n" + std::to_string(img.pixels.cols()) + " " + std::to_string(img.pixels.rows()) +
                    "\n" + (wide ? "65535" : "255") + "\n";
  for (Eigen::Index r = 0; r < img.pixels.rows(); ++r)
    for (Eigen::Index c = 0; c < img.pixels.cols(); ++c) {
      const auto v = img.pixels(r, c);
      // PGM stores 16-bit samples most significant byte first.
      if (wide) out.push_back(static_cast<char>(v >> 8));
      out.push_back(static_cast<char>(v & 0xff));
    }
  detail::atomic_write(path, out);
  write_sidecar(img.meta, path);
}

ImageGrid read_pgm(const std::filesystem::path& path) {
  const auto bytes = detail::read_file(path);
  std::size_t pos = 0;
  auto token = [&]() {
    while (pos < bytes.size()) {
      if (bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else if (std::isspace(static_cast<unsigned char>(bytes[pos]))) {
        ++pos;
      } else {
        break;
      }
    }
    const auto start = pos;
    while (pos < bytes.size() && !std::isspace(static_cast<unsigned char>(bytes[pos]))) ++pos;
    return bytes.substr(start, pos - start);
  };
  if (token() != "P5") fail(ErrorCode::Corrupt, path.string() + ": not a binary PGM");
  long width = 0, height = 0, maxval = 0;
  try {
    width = std::stol(token());
    height = std::stol(token());
    maxval = std::stol(token());
  } catch (const std::exception&) {
    fail(ErrorCode::Corrupt, path.string() + ": malformed PGM header");
  }
  ++pos;  // single whitespace before the raster
  require(width > 0 && height > 0 && (maxval == 255 || maxval == 65535), ErrorCode::Corrupt,
          path.string() + ": unsupported PGM geometry or maxval");
  const bool wide = maxval == 65535;
  const auto need = static_cast<std::size_t>(width * height) * (wide ? 2 : 1);
  require(bytes.size() >= pos + need, ErrorCode::Corrupt, path.string() + ": truncated raster");

  ImageGrid img;
  img.pixels.resize(height, width);
  for (long i = 0; i < width * height; ++i) {
    std::uint16_t v = static_cast<unsigned char>(bytes[pos++]);
    if (wide) v = static_cast<std::uint16_t>((v << 8) | static_cast<unsigned char>(bytes[pos++]));
    img.pixels(i / width, i % width) = v;
  }
  img.meta = read_sidecar(path);
  require(img.meta.bit_depth == (wide ? 16 : 8), ErrorCode::Corrupt,
          path.string() + ": sidecar bit_depth disagrees with PGM maxval");
  return img;
}

void write_wav(const WavClip& clip, const std::filesystem::path& path) {
  const auto data_bytes = static_cast<std::uint32_t>(clip.samples.size() * 2);
  std::string out;
  out.reserve(44 + data_bytes);
  out += "RIFF";
  put_le<std::uint32_t>(out, 36 + data_bytes);
  out += "WAVEfmt ";
  put_le<std::uint32_t>(out, 16);
  put_le<std::uint16_t>(out, 1);  // PCM
  put_le<std::uint16_t>(out, 1);  // mono
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(clip.sample_rate));
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(clip.sample_rate) * 2);
  put_le<std::uint16_t>(out, 2);
  put_le<std::uint16_t>(out, 16);
  out += "data";
  put_le<std::uint32_t>(out, data_bytes);
  for (auto s : clip.samples) put_le<std::int16_t>(out, s);
  detail::atomic_write(path, out);
  write_sidecar(clip.meta, path);
}

WavClip read_wav(const std::filesystem::path& path) {
  const auto bytes = detail::read_file(path);
  const std::string_view in(bytes);
  require(in.size() >= 12 && in.substr(0, 4) == "RIFF" && in.substr(8, 4) == "WAVE", ErrorCode::Corrupt,
          path.string() + ": not a RIFF/WAVE file");
  std::size_t pos = 12;
  bool have_fmt = false;
  WavClip clip;
  while (pos + 8 <= in.size()) {
    const auto id = in.substr(pos, 4);
    pos += 4;
    std::uint32_t size = 0;
    get_le(in, pos, size);
    require(pos + size <= in.size(), ErrorCode::Corrupt, path.string() + ": truncated chunk");
    if (id == "fmt ") {
      std::size_t p = pos;
      std::uint16_t format = 0, channels = 0, align = 0, bits = 0;
      std::uint32_t rate = 0, byte_rate = 0;
      get_le(in, p, format);
      get_le(in, p, channels);
      get_le(in, p, rate);
      get_le(in, p, byte_rate);
      get_le(in, p, align);
      get_le(in, p, bits);
      require(format == 1 && channels == 1 && bits == 16, ErrorCode::Corrupt,
              path.string() + ": only 16-bit PCM mono is supported");
      clip.sample_rate = static_cast<int>(rate);
      have_fmt = true;
    } else if (id == "data") {
      require(have_fmt, ErrorCode::Corrupt, path.string() + ": data chunk before fmt chunk");
      std::size_t p = pos;
      clip.samples.resize(size / 2);
      for (auto& s : clip.samples) get_le(in, p, s);
    }
    pos += size + (size & 1);
  }
  require(have_fmt, ErrorCode::Corrupt, path.string() + ": missing fmt chunk");
  clip.meta = read_sidecar(path);
  return clip;
}

}  // namespace camo
