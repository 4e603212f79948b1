#include <algorithm>
#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "camo/pipeline.hpp"
#include "io_util.hpp"

namespace camo {

std::string_view to_string(DataType t) {
  switch (t) {
    case DataType::Signal: return "signal";
    case DataType::Image: return "image";
    case DataType::Audio: return "audio";
  }
  return "?";
}

DataType parse_data_type(std::string_view s) {
  for (auto t : {DataType::Signal, DataType::Image, DataType::Audio})
    if (to_string(t) == s) return t;
  fail(ErrorCode::InvalidArgument, "unknown data type '" + std::string(s) + "'");
}

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    auto t = trim(item);
    if (!t.empty()) out.push_back(t);
  }
  return out;
}

template <typename T>
T parse_number(const std::string& key, const std::string& text) {
  T v{};
  const auto t = trim(text);
  const auto r = std::from_chars(t.data(), t.data() + t.size(), v);
  require(r.ec == std::errc() && r.ptr == t.data() + t.size(), ErrorCode::Schema,
          "config: '" + key + "' expects a number, got '" + t + "'");
  return v;
}

bool parse_bool(const std::string& key, const std::string& text) {
  const auto t = trim(text);
  if (t == "true" || t == "1" || t == "yes" || t == "on") return true;
  if (t == "false" || t == "0" || t == "no" || t == "off") return false;
  fail(ErrorCode::Schema, "config: '" + key + "' expects a boolean, got '" + t + "'");
}

Label parse_label(const std::string& key, const std::string& text) {
  const auto t = trim(text);
  if (t == "gesture" || t == "Gesture") return Label::Gesture;
  if (t == "no-gesture" || t == "NoGesture") return Label::NoGesture;
  fail(ErrorCode::Schema, "config: '" + key + "' expects gesture or no-gesture");
}

std::string num(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

template <typename T>
std::string join(const std::vector<T>& items, const std::function<std::string(const T&)>& f) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) out += (i ? "," : "") + f(items[i]);
  return out;
}

using Setter = std::function<void(RunConfig&, const std::string&)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = {
      {"data.input", [](RunConfig& c, const std::string& v) { c.input = trim(v); }},
      {"data.rows", [](RunConfig& c, const std::string& v) { c.synth.rows = parse_number<std::size_t>("data.rows", v); }},
      {"data.segments",
       [](RunConfig& c, const std::string& v) { c.synth.segments = parse_number<std::size_t>("data.segments", v); }},
      {"data.gesture_fraction",
       [](RunConfig& c, const std::string& v) { c.synth.gesture_fraction = parse_number<double>("data.gesture_fraction", v); }},
      {"data.gesture_shift",
       [](RunConfig& c, const std::string& v) { c.synth.gesture_shift = parse_number<double>("data.gesture_shift", v); }},
      {"data.gesture_noise_ratio",
       [](RunConfig& c, const std::string& v) {
         c.synth.gesture_noise_ratio = parse_number<double>("data.gesture_noise_ratio", v);
       }},
      {"data.seed", [](RunConfig& c, const std::string& v) { c.data_seed = parse_number<std::uint64_t>("data.seed", v); }},

      {"experiment.pairings",
       [](RunConfig& c, const std::string& v) {
         c.pairings.clear();
         for (const auto& s : split_list(v)) c.pairings.push_back(parse_pairing(s));
       }},
      {"experiment.data_types",
       [](RunConfig& c, const std::string& v) {
         c.data_types.clear();
         for (const auto& s : split_list(v)) c.data_types.push_back(parse_data_type(s));
       }},
      {"experiment.kernels",
       [](RunConfig& c, const std::string& v) {
         c.kernels.clear();
         if (trim(v) == "all") return;
         for (const auto& s : split_list(v)) {
           parse_kernel_spec(s);
           c.kernels.push_back(s);
         }
       }},
      {"experiment.seeds",
       [](RunConfig& c, const std::string& v) {
         const auto items = split_list(v);
         require(items.size() == 3, ErrorCode::Schema, "config: experiment.seeds needs three seeds (AM, GM, HM)");
         for (std::size_t i = 0; i < 3; ++i) c.family_seeds[i] = parse_number<std::uint64_t>("experiment.seeds", items[i]);
       }},
      {"experiment.train_fraction",
       [](RunConfig& c, const std::string& v) { c.train_fraction = parse_number<double>("experiment.train_fraction", v); }},
      {"experiment.split_seed",
       [](RunConfig& c, const std::string& v) { c.split_seed = parse_number<std::uint64_t>("experiment.split_seed", v); }},
      {"experiment.max_instances",
       [](RunConfig& c, const std::string& v) { c.max_instances = parse_number<int>("experiment.max_instances", v); }},
      {"experiment.distribution_mode",
       [](RunConfig& c, const std::string& v) { c.distribution_mode = parse_distribution_mode(trim(v)); }},
      {"experiment.grid_points",
       [](RunConfig& c, const std::string& v) { c.grid_points = parse_number<int>("experiment.grid_points", v); }},
      {"experiment.standardize",
       [](RunConfig& c, const std::string& v) { c.standardize = parse_bool("experiment.standardize", v); }},
      {"experiment.benchmark",
       [](RunConfig& c, const std::string& v) { c.benchmark = parse_bool("experiment.benchmark", v); }},
      {"experiment.mlp_hidden",
       [](RunConfig& c, const std::string& v) { c.mlp.hidden = parse_number<int>("experiment.mlp_hidden", v); }},
      {"experiment.mlp_epochs",
       [](RunConfig& c, const std::string& v) { c.mlp.epochs = parse_number<int>("experiment.mlp_epochs", v); }},
      {"experiment.mlp_lr", [](RunConfig& c, const std::string& v) { c.mlp.lr = parse_number<double>("experiment.mlp_lr", v); }},
      {"experiment.mlp_seed",
       [](RunConfig& c, const std::string& v) { c.mlp.seed = parse_number<std::uint64_t>("experiment.mlp_seed", v); }},
      {"experiment.workers",
       [](RunConfig& c, const std::string& v) { c.workers = parse_number<int>("experiment.workers", v); }},

      {"svm.folds", [](RunConfig& c, const std::string& v) { c.cv.folds = parse_number<int>("svm.folds", v); }},
      {"svm.inner_folds",
       [](RunConfig& c, const std::string& v) { c.cv.inner_folds = parse_number<int>("svm.inner_folds", v); }},
      {"svm.c_grid",
       [](RunConfig& c, const std::string& v) {
         c.cv.c_grid.clear();
         for (const auto& s : split_list(v)) c.cv.c_grid.push_back(parse_number<double>("svm.c_grid", s));
       }},
      {"svm.sigma_multipliers",
       [](RunConfig& c, const std::string& v) {
         c.cv.sigma_multipliers.clear();
         for (const auto& s : split_list(v)) c.cv.sigma_multipliers.push_back(parse_number<double>("svm.sigma_multipliers", s));
       }},
      {"svm.tol", [](RunConfig& c, const std::string& v) { c.cv.tol = parse_number<double>("svm.tol", v); }},
      {"svm.positive_weight",
       [](RunConfig& c, const std::string& v) { c.cv.positive_weight = parse_number<double>("svm.positive_weight", v); }},
      {"svm.eigen_diagnostics",
       [](RunConfig& c, const std::string& v) { c.eigen_diagnostics = parse_bool("svm.eigen_diagnostics", v); }},

      {"detectors.methods",
       [](RunConfig& c, const std::string& v) {
         c.detectors.clear();
         for (const auto& s : split_list(v)) c.detectors.push_back(parse_detector(s));
       }},
      {"detectors.train_class",
       [](RunConfig& c, const std::string& v) { c.train_class = parse_label("detectors.train_class", v); }},
      {"detectors.nu", [](RunConfig& c, const std::string& v) { c.detector.nu = parse_number<double>("detectors.nu", v); }},
      {"detectors.n_trees",
       [](RunConfig& c, const std::string& v) { c.detector.n_trees = parse_number<int>("detectors.n_trees", v); }},
      {"detectors.psi", [](RunConfig& c, const std::string& v) { c.detector.psi = parse_number<int>("detectors.psi", v); }},
      {"detectors.gmm_k_max",
       [](RunConfig& c, const std::string& v) { c.detector.gmm_k_max = parse_number<int>("detectors.gmm_k_max", v); }},
      {"detectors.ridge",
       [](RunConfig& c, const std::string& v) { c.detector.ridge = parse_number<double>("detectors.ridge", v); }},
      {"detectors.max_train",
       [](RunConfig& c, const std::string& v) { c.detector.max_train = parse_number<int>("detectors.max_train", v); }},
      {"detectors.seed",
       [](RunConfig& c, const std::string& v) { c.detector.seed = parse_number<std::uint64_t>("detectors.seed", v); }},

      {"features.bit_depth",
       [](RunConfig& c, const std::string& v) { c.bit_depth = parse_number<int>("features.bit_depth", v); }},
      {"features.gist_resize",
       [](RunConfig& c, const std::string& v) { c.gist.resize_to = parse_number<int>("features.gist_resize", v); }},
      {"features.gist_scales",
       [](RunConfig& c, const std::string& v) { c.gist.scales = parse_number<int>("features.gist_scales", v); }},
      {"features.gist_orientations",
       [](RunConfig& c, const std::string& v) { c.gist.orientations = parse_number<int>("features.gist_orientations", v); }},
      {"features.pca_components",
       [](RunConfig& c, const std::string& v) { c.pca_components = parse_number<int>("features.pca_components", v); }},
      {"features.sample_rate",
       [](RunConfig& c, const std::string& v) { c.audio.sample_rate = parse_number<int>("features.sample_rate", v); }},
      {"features.dwell_ms",
       [](RunConfig& c, const std::string& v) { c.audio.dwell_ms = parse_number<double>("features.dwell_ms", v); }},
      {"features.mfcc_coeffs",
       [](RunConfig& c, const std::string& v) { c.mfcc.n_coeffs = parse_number<int>("features.mfcc_coeffs", v); }},
      {"features.mfcc_mels",
       [](RunConfig& c, const std::string& v) { c.mfcc.n_mels = parse_number<int>("features.mfcc_mels", v); }},

      {"output.dir", [](RunConfig& c, const std::string& v) { c.output_dir = trim(v); }},
      {"output.write_artifacts",
       [](RunConfig& c, const std::string& v) { c.write_artifacts = parse_bool("output.write_artifacts", v); }},
      {"output.cache", [](RunConfig& c, const std::string& v) { c.use_cache = parse_bool("output.cache", v); }},
  };
  return table;
}

void validate(const RunConfig& c) {
  require(!c.pairings.empty() && !c.data_types.empty(), ErrorCode::Schema,
          "config: need at least one pairing and one data type");
  require(c.family_seeds[0] != c.family_seeds[1] && c.family_seeds[1] != c.family_seeds[2] &&
              c.family_seeds[0] != c.family_seeds[2],
          ErrorCode::Schema, "config: the three family seeds must be distinct");
  require(c.train_fraction > 0.0 && c.train_fraction < 1.0, ErrorCode::Schema,
          "config: train_fraction must lie in (0, 1)");
  require(c.input.empty() ? c.synth.rows > 0 : true, ErrorCode::Schema, "config: data.rows must be positive");
  require(c.bit_depth == 8 || c.bit_depth == 16, ErrorCode::Schema, "config: bit_depth must be 8 or 16");
  require(c.workers >= 1, ErrorCode::Schema, "config: workers must be at least 1");
  require(c.grid_points >= 2, ErrorCode::Schema, "config: grid_points must be at least 2");
  require(c.pca_components >= 1, ErrorCode::Schema, "config: pca_components must be at least 1");
}

}  // namespace

RunConfig parse_config(const std::string& text) {
  boost::property_tree::ptree tree;
  std::istringstream in(text);
  try {
    boost::property_tree::ini_parser::read_ini(in, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    fail(ErrorCode::Parse, std::string("config: ") + e.what());
  }
  RunConfig cfg;
  const auto& table = setters();
  for (const auto& [section, body] : tree) {
    require(!body.empty() || body.data().empty(), ErrorCode::Schema, "config: key '" + section + "' outside a section");
    for (const auto& [key, value] : body) {
      const auto full = section + "." + key;
      const auto it = table.find(full);
      require(it != table.end(), ErrorCode::Schema, "config: unknown key '" + full + "'");
      it->second(cfg, value.data());
    }
  }
  validate(cfg);
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) { return parse_config(detail::read_file(path)); }

std::string canonical_config(const RunConfig& c, bool include_output) {
  std::ostringstream o;
  o << "[data]\n";
  o << "input = " << c.input.string() << "\n";
  o << "rows = " << c.synth.rows << "\n";
  o << "segments = " << c.synth.segments << "\n";
  o << "gesture_fraction = " << num(c.synth.gesture_fraction) << "\n";
  o << "gesture_shift = " << num(c.synth.gesture_shift) << "\n";
  o << "gesture_noise_ratio = " << num(c.synth.gesture_noise_ratio) << "\n";
  o << "seed = " << c.data_seed << "\n\n";

  o << "[experiment]\n";
  o << "pairings = " << join<Pairing>(c.pairings, [](const Pairing& p) { return std::string(to_string(p)); }) << "\n";
  o << "data_types = " << join<DataType>(c.data_types, [](const DataType& t) { return std::string(to_string(t)); })
    << "\n";
  o << "kernels = " << (c.kernels.empty() ? std::string("all") : join<std::string>(c.kernels, [](const std::string& s) { return s; }))
    << "\n";
  o << "seeds = " << c.family_seeds[0] << "," << c.family_seeds[1] << "," << c.family_seeds[2] << "\n";
  o << "train_fraction = " << num(c.train_fraction) << "\n";
  o << "split_seed = " << c.split_seed << "\n";
  o << "max_instances = " << c.max_instances << "\n";
  o << "distribution_mode = " << to_string(c.distribution_mode) << "\n";
  o << "grid_points = " << c.grid_points << "\n";
  o << "standardize = " << (c.standardize ? "true" : "false") << "\n";
  o << "benchmark = " << (c.benchmark ? "true" : "false") << "\n";
  o << "mlp_hidden = " << c.mlp.hidden << "\n";
  o << "mlp_epochs = " << c.mlp.epochs << "\n";
  o << "mlp_lr = " << num(c.mlp.lr) << "\n";
  o << "mlp_seed = " << c.mlp.seed << "\n";
  if (include_output) o << "workers = " << c.workers << "\n";
  o << "\n";

  o << "[svm]\n";
  o << "folds = " << c.cv.folds << "\n";
  o << "inner_folds = " << c.cv.inner_folds << "\n";
  o << "c_grid = " << join<double>(c.cv.c_grid, [](const double& v) { return num(v); }) << "\n";
  o << "sigma_multipliers = " << join<double>(c.cv.sigma_multipliers, [](const double& v) { return num(v); }) << "\n";
  o << "tol = " << num(c.cv.tol) << "\n";
  o << "positive_weight = " << num(c.cv.positive_weight) << "\n";
  o << "eigen_diagnostics = " << (c.eigen_diagnostics ? "true" : "false") << "\n\n";

  o << "[detectors]\n";
  o << "methods = " << join<DetectorKind>(c.detectors, [](const DetectorKind& k) { return std::string(to_string(k)); })
    << "\n";
  o << "train_class = " << (c.train_class == Label::Gesture ? "gesture" : "no-gesture") << "\n";
  o << "nu = " << num(c.detector.nu) << "\n";
  o << "n_trees = " << c.detector.n_trees << "\n";
  o << "psi = " << c.detector.psi << "\n";
  o << "gmm_k_max = " << c.detector.gmm_k_max << "\n";
  o << "ridge = " << num(c.detector.ridge) << "\n";
  o << "max_train = " << c.detector.max_train << "\n";
  o << "seed = " << c.detector.seed << "\n\n";

  o << "[features]\n";
  o << "bit_depth = " << c.bit_depth << "\n";
  o << "gist_resize = " << c.gist.resize_to << "\n";
  o << "gist_scales = " << c.gist.scales << "\n";
  o << "gist_orientations = " << c.gist.orientations << "\n";
  o << "pca_components = " << c.pca_components << "\n";
  o << "sample_rate = " << c.audio.sample_rate << "\n";
  o << "dwell_ms = " << num(c.audio.dwell_ms) << "\n";
  o << "mfcc_coeffs = " << c.mfcc.n_coeffs << "\n";
  o << "mfcc_mels = " << c.mfcc.n_mels << "\n";

  if (include_output) {
    o << "\n[output]\n";
    o << "dir = " << c.output_dir.string() << "\n";
    o << "write_artifacts = " << (c.write_artifacts ? "true" : "false") << "\n";
    o << "cache = " << (c.use_cache ? "true" : "false") << "\n";
  }
  return o.str();
}

}  // namespace camo
