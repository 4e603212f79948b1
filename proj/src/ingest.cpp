#include "camo/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

namespace camo {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "invalid_argument";
    case ErrorCode::Io: return "io";
    case ErrorCode::Parse: return "parse";
    case ErrorCode::Schema: return "schema";
    case ErrorCode::EmptyDataset: return "empty_dataset";
    case ErrorCode::Degenerate: return "degenerate";
    case ErrorCode::Numeric: return "numeric";
    case ErrorCode::Corrupt: return "corrupt";
  }
  return "unknown";
}

std::string_view to_string(Label l) {
  return l == Label::Gesture ? "Gesture" : "NoGesture";
}

std::size_t SensorFrame::count(Label l) const {
  return static_cast<std::size_t>(
      std::count_if(rows.begin(), rows.end(), [l](const SensorRecord& r) { return r.label == l; }));
}

int pairing_dim(Pairing p) {
  switch (p) {
    case Pairing::AccGyroEmg: return 14;
    case Pairing::AccGyro: return 6;
    case Pairing::Emg: return 8;
  }
  return 0;
}

std::string_view to_string(Pairing p) {
  switch (p) {
    case Pairing::AccGyroEmg: return "acc-gyro-emg";
    case Pairing::AccGyro: return "acc-gyro";
    case Pairing::Emg: return "emg";
  }
  return "?";
}

Pairing parse_pairing(std::string_view s) {
  if (s == "acc-gyro-emg") return Pairing::AccGyroEmg;
  if (s == "acc-gyro") return Pairing::AccGyro;
  if (s == "emg") return Pairing::Emg;
  fail(ErrorCode::InvalidArgument, "unknown pairing '" + std::string(s) + "'");
}

std::string_view to_string(SplitTag t) {
  switch (t) {
    case SplitTag::All: return "all";
    case SplitTag::Train: return "train";
    case SplitTag::Validation: return "validation";
  }
  return "?";
}

std::size_t Dataset::count(Label l) const {
  return static_cast<std::size_t>(std::count(y.begin(), y.end(), l));
}

Dataset Dataset::subset(std::span<const Eigen::Index> ids) const {
  Dataset out;
  out.x.resize(static_cast<Eigen::Index>(ids.size()), x.cols());
  out.y.reserve(ids.size());
  for (std::size_t r = 0; r < ids.size(); ++r) {
    out.x.row(static_cast<Eigen::Index>(r)) = x.row(ids[r]);
    out.y.push_back(y[static_cast<std::size_t>(ids[r])]);
  }
  out.pairing = pairing;
  out.split_tag = split_tag;
  out.seed = seed;
  return out;
}

const std::vector<std::string>& recording_header() {
  static const std::vector<std::string> header = {
      "emg1", "emg2", "emg3", "emg4", "emg5", "emg6",  "emg7",  "emg8",  "acc1",
      "acc2", "acc3", "gyro1", "gyro2", "gyro3", "pose", "label", "timestamp"};
  return header;
}

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

bool iequals(std::string_view a, std::string_view b) {
  return a.size() == b.size() &&
         std::equal(a.begin(), a.end(), b.begin(), [](char x, char y) {
           return std::tolower(static_cast<unsigned char>(x)) ==
                  std::tolower(static_cast<unsigned char>(y));
         });
}

std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> cells;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(',', start);
    if (pos == std::string_view::npos) {
      cells.push_back(line.substr(start));
      break;
    }
    cells.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return cells;
}

std::string fmt_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

}  // namespace

double parse_cell(std::string_view cell) {
  cell = trim(cell);
  if (cell.empty()) return std::numeric_limits<double>::quiet_NaN();
  if (iequals(cell, "nan")) return std::numeric_limits<double>::quiet_NaN();
  if (iequals(cell, "inf")) return std::numeric_limits<double>::infinity();
  if (iequals(cell, "-inf")) return -std::numeric_limits<double>::infinity();
  double v = 0.0;
  const char* first = cell.data();
  if (*first == '+') ++first;
  const auto res = std::from_chars(first, cell.data() + cell.size(), v);
  if (res.ec != std::errc() || res.ptr != cell.data() + cell.size())
    fail(ErrorCode::Parse, "non-numeric cell '" + std::string(cell) + "'");
  // from_chars accepts "infinity"/"nan(...)" spellings; only the three
  // sentinel tokens above are part of the format.
  if (!std::isfinite(v)) fail(ErrorCode::Parse, "non-numeric cell '" + std::string(cell) + "'");
  return v;
}

SensorFrame parse_recording_text(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) fail(ErrorCode::Schema, "recording has no header row");
  {
    const auto cells = split_commas(line);
    const auto& expected = recording_header();
    if (cells.size() != expected.size())
      fail(ErrorCode::Schema, "header has " + std::to_string(cells.size()) + " columns, expected " +
                                  std::to_string(expected.size()));
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (trim(cells[i]) != expected[i])
        fail(ErrorCode::Schema, "header column " + std::to_string(i + 1) + " is '" +
                                    std::string(trim(cells[i])) + "', expected '" + expected[i] + "'");
    }
  }

  SensorFrame frame;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto cells = split_commas(line);
    if (cells.size() != recording_header().size())
      fail(ErrorCode::Schema, "line " + std::to_string(line_no) + " has " +
                                  std::to_string(cells.size()) + " columns");
    SensorRecord r;
    try {
      for (int c = 0; c < 8; ++c) r.emg[c] = parse_cell(cells[c]);
      for (int c = 0; c < 3; ++c) r.acc[c] = parse_cell(cells[8 + c]);
      for (int c = 0; c < 3; ++c) r.gyro[c] = parse_cell(cells[11 + c]);
      r.pose = parse_cell(cells[14]);
      const double label = parse_cell(cells[15]);
      if (label != 0.0 && label != 1.0)
        fail(ErrorCode::Parse, "label must be 0 or 1, got '" + std::string(trim(cells[15])) + "'");
      r.label = label == 1.0 ? Label::Gesture : Label::NoGesture;
      r.timestamp = parse_cell(cells[16]);
    } catch (const Error& e) {
      fail(e.code(), "line " + std::to_string(line_no) + ": " + e.what());
    }
    if (!std::isfinite(r.timestamp))
      fail(ErrorCode::Parse, "line " + std::to_string(line_no) + ": timestamp is not finite");
    if (!frame.rows.empty() && !(r.timestamp > frame.rows.back().timestamp))
      fail(ErrorCode::Schema, "line " + std::to_string(line_no) + ": timestamps not strictly increasing");
    frame.rows.push_back(r);
  }
  return frame;
}

SensorFrame parse_recording(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::Io, "cannot open recording " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_recording_text(buf.str());
}

void write_recording(const SensorFrame& frame, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::Io, "cannot write " + path.string());
  const auto& header = recording_header();
  for (std::size_t i = 0; i < header.size(); ++i) out << (i ? "," : "") << header[i];
  out << '\n';
  for (const auto& r : frame.rows) {
    for (double v : r.emg) out << fmt_double(v) << ',';
    for (double v : r.acc) out << fmt_double(v) << ',';
    for (double v : r.gyro) out << fmt_double(v) << ',';
    out << fmt_double(r.pose) << ',' << static_cast<int>(r.label) << ',' << fmt_double(r.timestamp)
        << '\n';
  }
}

SensorFrame synthesize_recording(const SynthConfig& cfg, std::uint64_t seed) {
  require(cfg.rows > 0, ErrorCode::InvalidArgument, "synthesize_recording: zero rows requested");
  require(cfg.segments > 0, ErrorCode::InvalidArgument, "synthesize_recording: zero segments");
  require(cfg.gesture_fraction > 0.0 && cfg.gesture_fraction < 1.0, ErrorCode::InvalidArgument,
          "synthesize_recording: gesture_fraction must lie in (0, 1)");

  const std::size_t n = cfg.rows;
  const auto n_gesture =
      std::min(n - 1, static_cast<std::size_t>(std::llround(cfg.gesture_fraction * static_cast<double>(n))));
  require(n_gesture >= cfg.segments, ErrorCode::InvalidArgument,
          "synthesize_recording: fewer gesture rows than segments");
  const std::size_t n_rest = n - n_gesture;
  require(n_rest >= cfg.segments + 1, ErrorCode::InvalidArgument,
          "synthesize_recording: not enough rest rows to separate segments");

  // Square-wave layout: rest gap, gesture run, rest gap, ..., rest gap.
  // Run and gap lengths are as even as integer division allows.
  std::vector<Label> labels;
  labels.reserve(n);
  std::vector<int> segment_of(n, -1);
  const std::size_t gaps = cfg.segments + 1;
  for (std::size_t s = 0; s < gaps; ++s) {
    const std::size_t gap = n_rest / gaps + (s < n_rest % gaps ? 1 : 0);
    labels.insert(labels.end(), gap, Label::NoGesture);
    if (s == cfg.segments) break;
    const std::size_t run = n_gesture / cfg.segments + (s < n_gesture % cfg.segments ? 1 : 0);
    for (std::size_t k = 0; k < run; ++k) segment_of[labels.size() + k] = static_cast<int>(s);
    labels.insert(labels.end(), run, Label::Gesture);
  }

  Rng rng(seed);

  // Per-channel resting baselines and the direction each channel moves
  // during a gesture. Each segment scales the pattern by its own amplitude.
  std::array<double, 14> base{};
  std::array<double, 14> noise{};
  std::array<double, 14> direction{};
  for (int c = 0; c < 14; ++c) {
    if (c < 8) {
      base[c] = 0.0;
      noise[c] = cfg.emg_rest_noise;
    } else if (c < 11) {
      base[c] = c == 10 ? -1.0 : 0.0;
      noise[c] = cfg.acc_rest_noise;
    } else {
      base[c] = 0.0;
      noise[c] = cfg.gyro_rest_noise;
    }
    direction[c] = (c % 2 == 0 ? 1.0 : -1.0) * (0.6 + 0.4 * rng.uniform());
  }
  std::vector<double> amplitude(cfg.segments);
  for (auto& a : amplitude) a = 0.75 + 0.5 * rng.uniform();

  SensorFrame frame;
  frame.rows.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto& r = frame.rows[i];
    r.label = labels[i];
    r.timestamp = static_cast<double>(i) / cfg.sample_rate_hz;
    std::array<double, 14> v{};
    if (r.label == Label::Gesture) {
      const int s = segment_of[i];
      r.pose = static_cast<double>(1 + s % 5);
      for (int c = 0; c < 14; ++c) {
        const double shift = cfg.gesture_shift * noise[c] * direction[c] * amplitude[s];
        v[c] = base[c] + shift + cfg.gesture_noise_ratio * noise[c] * rng.student_t(cfg.gesture_dof) /
                                     std::sqrt(cfg.gesture_dof / (cfg.gesture_dof - 2.0));
      }
    } else {
      r.pose = 0.0;
      for (int c = 0; c < 14; ++c) v[c] = base[c] + noise[c] * rng.normal();
    }
    // Myo EMG is reported as signed 8-bit activation counts.
    for (int c = 0; c < 8; ++c) r.emg[c] = std::clamp(std::round(v[c]), -128.0, 127.0);
    for (int c = 0; c < 3; ++c) r.acc[c] = v[8 + c];
    for (int c = 0; c < 3; ++c) r.gyro[c] = v[11 + c];
  }
  return frame;
}

Dataset fuse_channels(const SensorFrame& frame, Pairing pairing) {
  require(!frame.empty(), ErrorCode::EmptyDataset, "fuse_channels: empty frame");
  Dataset ds;
  ds.pairing = pairing;
  ds.x.resize(static_cast<Eigen::Index>(frame.size()), pairing_dim(pairing));
  ds.y.reserve(frame.size());
  for (std::size_t i = 0; i < frame.size(); ++i) {
    const auto& r = frame.rows[i];
    const auto row = static_cast<Eigen::Index>(i);
    Eigen::Index c = 0;
    if (pairing != Pairing::AccGyro)
      for (double v : r.emg) ds.x(row, c++) = v;
    if (pairing != Pairing::Emg) {
      for (double v : r.acc) ds.x(row, c++) = v;
      for (double v : r.gyro) ds.x(row, c++) = v;
    }
    ds.y.push_back(r.label);
  }
  return ds;
}

Dataset preprocess(const Dataset& ds) {
  std::vector<Eigen::Index> keep;
  keep.reserve(static_cast<std::size_t>(ds.size()));
  // Keyed on the exact bit pattern of every component plus the label.
  std::map<std::pair<std::vector<double>, Label>, bool> seen;
  for (Eigen::Index i = 0; i < ds.size(); ++i) {
    if (!ds.x.row(i).allFinite()) continue;
    std::vector<double> key(ds.x.row(i).begin(), ds.x.row(i).end());
    // -0.0 and 0.0 compare equal; treat them as the same value.
    for (auto& v : key)
      if (v == 0.0) v = 0.0;
    if (!seen.emplace(std::make_pair(std::move(key), ds.y[static_cast<std::size_t>(i)]), true).second)
      continue;
    keep.push_back(i);
  }
  require(!keep.empty(), ErrorCode::EmptyDataset, "preprocess: every row was removed");
  return ds.subset(keep);
}

std::pair<std::vector<Eigen::Index>, std::vector<Eigen::Index>> stratified_split_indices(
    std::span<const Label> labels, double train_fraction, std::uint64_t seed) {
  require(train_fraction > 0.0 && train_fraction < 1.0, ErrorCode::InvalidArgument,
          "split: train_fraction must lie in (0, 1)");
  Rng rng(seed);
  std::array<std::vector<Eigen::Index>, 2> members;
  for (std::size_t i = 0; i < labels.size(); ++i)
    members[static_cast<std::size_t>(labels[i])].push_back(static_cast<Eigen::Index>(i));
  for (Label cls : {Label::NoGesture, Label::Gesture})
    require(members[static_cast<std::size_t>(cls)].size() >= 2, ErrorCode::Degenerate,
            "split: class " + std::string(to_string(cls)) + " has fewer than 2 members");

  // Overall train size is round(f * n); classes get their proportional share
  // by largest remainder (ties go to the lower class code).
  const auto n_total = static_cast<double>(labels.size());
  const auto target = static_cast<std::size_t>(std::llround(train_fraction * n_total));
  std::array<std::size_t, 2> quota{};
  std::array<double, 2> remainder{};
  std::size_t assigned = 0;
  for (std::size_t c = 0; c < 2; ++c) {
    const double exact = train_fraction * static_cast<double>(members[c].size());
    quota[c] = static_cast<std::size_t>(std::floor(exact));
    remainder[c] = exact - std::floor(exact);
    assigned += quota[c];
  }
  while (assigned < target) {
    const std::size_t c = remainder[1] > remainder[0] ? 1 : 0;
    ++quota[c];
    remainder[c] = -1.0;
    ++assigned;
  }

  std::vector<Eigen::Index> train, validation;
  for (std::size_t c = 0; c < 2; ++c) {
    rng.shuffle(members[c]);
    const auto n_train = std::clamp<std::size_t>(quota[c], 1, members[c].size() - 1);
    train.insert(train.end(), members[c].begin(), members[c].begin() + static_cast<std::ptrdiff_t>(n_train));
    validation.insert(validation.end(), members[c].begin() + static_cast<std::ptrdiff_t>(n_train),
                      members[c].end());
  }
  std::sort(train.begin(), train.end());
  std::sort(validation.begin(), validation.end());
  return {train, validation};
}

std::pair<Dataset, Dataset> split(const Dataset& ds, double train_fraction, std::uint64_t seed) {
  auto [tr, va] = stratified_split_indices(ds.y, train_fraction, seed);
  Dataset train = ds.subset(tr);
  Dataset validation = ds.subset(va);
  train.split_tag = SplitTag::Train;
  validation.split_tag = SplitTag::Validation;
  train.seed = validation.seed = seed;
  return {std::move(train), std::move(validation)};
}

void write_dataset_csv(const Dataset& ds, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::Io, "cannot write " + path.string());
  out << "# pairing=" << to_string(ds.pairing) << " split=" << to_string(ds.split_tag)
      << " seed=" << ds.seed << '\n';
  for (Eigen::Index c = 0; c < ds.dim(); ++c) out << 'f' << c << ',';
  out << "label\n";
  for (Eigen::Index i = 0; i < ds.size(); ++i) {
    for (Eigen::Index c = 0; c < ds.dim(); ++c) out << fmt_double(ds.x(i, c)) << ',';
    out << static_cast<int>(ds.y[static_cast<std::size_t>(i)]) << '\n';
  }
}

Dataset read_dataset_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::Io, "cannot open dataset " + path.string());
  Dataset ds;
  std::string line;
  std::vector<std::vector<double>> rows;
  Eigen::Index dim = -1;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto t = trim(line);
    if (t.empty()) continue;
    if (t.front() == '#') {
      std::istringstream meta{std::string(t.substr(1))};
      std::string kv;
      while (meta >> kv) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) continue;
        const auto key = kv.substr(0, eq), value = kv.substr(eq + 1);
        if (key == "pairing") ds.pairing = parse_pairing(value);
        if (key == "split")
          ds.split_tag = value == "train" ? SplitTag::Train
                         : value == "validation" ? SplitTag::Validation
                                                 : SplitTag::All;
        if (key == "seed") ds.seed = std::stoull(value);
      }
      continue;
    }
    const auto cells = split_commas(t);
    if (dim < 0) {
      require(cells.size() >= 2 && trim(cells.back()) == "label", ErrorCode::Schema,
              path.string() + ": header must end with 'label'");
      dim = static_cast<Eigen::Index>(cells.size()) - 1;
      continue;
    }
    require(static_cast<Eigen::Index>(cells.size()) == dim + 1, ErrorCode::Schema,
            path.string() + ": line " + std::to_string(line_no) + " has wrong column count");
    std::vector<double> row(cells.size());
    for (std::size_t c = 0; c < cells.size(); ++c) row[c] = parse_cell(cells[c]);
    require(row.back() == 0.0 || row.back() == 1.0, ErrorCode::Parse,
            path.string() + ": line " + std::to_string(line_no) + " label must be 0 or 1");
    rows.push_back(std::move(row));
  }
  require(dim > 0, ErrorCode::Schema, path.string() + ": missing header");
  ds.x.resize(static_cast<Eigen::Index>(rows.size()), dim);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (Eigen::Index c = 0; c < dim; ++c) ds.x(static_cast<Eigen::Index>(i), c) = rows[i][c];
    ds.y.push_back(rows[i].back() == 1.0 ? Label::Gesture : Label::NoGesture);
  }
  return ds;
}

}  // namespace camo
