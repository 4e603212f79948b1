#include <algorithm>
#include <cmath>
#include <limits>

#include "camo/classify.hpp"
#include "io_util.hpp"

namespace camo {

std::vector<int> to_signs(std::span<const Label> labels) {
  std::vector<int> out;
  out.reserve(labels.size());
  for (auto l : labels) out.push_back(to_sign(l));
  return out;
}

SvmModel svm_train(const Eigen::Ref<const Mat>& K, std::span<const int> y, const SvmOptions& opt) {
  const auto n = K.rows();
  require(K.cols() == n && static_cast<Eigen::Index>(y.size()) == n, ErrorCode::InvalidArgument,
          "svm_train: Gram and label sizes disagree");
  require(n >= 2, ErrorCode::InvalidArgument, "svm_train: need at least two instances");
  require(opt.C > 0.0 && opt.positive_weight > 0.0, ErrorCode::InvalidArgument, "svm_train: C must be positive");
  require(K.allFinite(), ErrorCode::InvalidArgument, "svm_train: non-finite Gram entries");
  bool has_pos = false, has_neg = false;
  for (int v : y) {
    require(v == 1 || v == -1, ErrorCode::InvalidArgument, "svm_train: labels must be +1/-1");
    (v > 0 ? has_pos : has_neg) = true;
  }
  require(has_pos && has_neg, ErrorCode::Degenerate, "svm_train: both classes must be present");
  const double asym = (K - K.transpose()).cwiseAbs().maxCoeff();
  require(asym <= 1e-12 * std::max(1.0, K.cwiseAbs().maxCoeff()), ErrorCode::InvalidArgument,
          "svm_train: Gram matrix is not symmetric");

  SvmModel m;
  m.C = opt.C;
  m.positive_weight = opt.positive_weight;
  m.labels.assign(y.begin(), y.end());
  m.alphas = Vec::Zero(n);
  auto upper = [&](Eigen::Index i) { return m.upper_bound(i); };
  auto yi = [&](Eigen::Index i) { return static_cast<double>(y[static_cast<std::size_t>(i)]); };

  // Gradient of 1/2 a'Qa - e'a.
  Vec G = Vec::Constant(n, -1.0);
  auto in_up = [&](Eigen::Index t) { return yi(t) > 0 ? m.alphas[t] < upper(t) : m.alphas[t] > 0.0; };
  auto in_low = [&](Eigen::Index t) { return yi(t) > 0 ? m.alphas[t] > 0.0 : m.alphas[t] < upper(t); };

  const std::int64_t max_iter = opt.max_iter > 0 ? opt.max_iter : std::max<std::int64_t>(100000, 100 * n);
  double gap_up = 0.0, gap_low = 0.0;
  for (m.iterations = 0; m.iterations < max_iter; ++m.iterations) {
    Eigen::Index i = -1, j = -1;
    double best_up = -std::numeric_limits<double>::infinity();
    double best_low = std::numeric_limits<double>::infinity();
    for (Eigen::Index t = 0; t < n; ++t) {
      const double s = -yi(t) * G[t];
      if (in_up(t) && s > best_up) best_up = s, i = t;
      if (in_low(t) && s < best_low) best_low = s, j = t;
    }
    gap_up = best_up;
    gap_low = best_low;
    if (i < 0 || j < 0 || best_up - best_low < opt.tol) {
      m.converged = true;
      break;
    }

    // Move along a_i += y_i t, a_j -= y_j t, which keeps sum(a y) fixed.
    const double t_max = std::min(yi(i) > 0 ? upper(i) - m.alphas[i] : m.alphas[i],
                                  yi(j) > 0 ? m.alphas[j] : upper(j) - m.alphas[j]);
    const double eta = K(i, i) + K(j, j) - 2.0 * K(i, j);
    const double violation = best_up - best_low;
    double t = t_max;
    if (eta > 0.0) t = std::min(t_max, violation / eta);
    if (t <= 0.0) {
      m.converged = false;
      break;
    }

    auto step = [&](Eigen::Index k, double delta) {
      double a = m.alphas[k] + delta;
      if (a <= 0.0 || std::abs(a) <= 1e-14 * upper(k)) a = 0.0;
      if (a >= upper(k) || std::abs(a - upper(k)) <= 1e-14 * upper(k)) a = upper(k);
      return a;
    };
    const double new_i = step(i, yi(i) * t);
    const double new_j = step(j, -yi(j) * t);
    const double di = new_i - m.alphas[i], dj = new_j - m.alphas[j];
    m.alphas[i] = new_i;
    m.alphas[j] = new_j;
    for (Eigen::Index k = 0; k < n; ++k) G[k] += yi(k) * (K(k, i) * yi(i) * di + K(k, j) * yi(j) * dj);
  }

  // Bias from free vectors, else the midpoint of the feasible interval.
  double sum = 0.0;
  int free_count = 0;
  for (Eigen::Index t = 0; t < n; ++t)
    if (m.alphas[t] > 0.0 && m.alphas[t] < upper(t)) {
      sum += -yi(t) * G[t];
      ++free_count;
    }
  if (free_count > 0) {
    m.bias = sum / free_count;
  } else {
    double up = -std::numeric_limits<double>::infinity(), low = std::numeric_limits<double>::infinity();
    for (Eigen::Index t = 0; t < n; ++t) {
      const double s = -yi(t) * G[t];
      if (in_up(t)) up = std::max(up, s);
      if (in_low(t)) low = std::min(low, s);
    }
    if (std::isfinite(up) && std::isfinite(low)) m.bias = 0.5 * (up + low);
    else m.bias = std::isfinite(up) ? up : (std::isfinite(low) ? low : 0.0);
  }
  (void)gap_up;
  (void)gap_low;

  for (Eigen::Index t = 0; t < n; ++t)
    if (m.alphas[t] > 0.0) m.support_ids.push_back(t);
  return m;
}

SvmModel svm_train(const GramMatrix& gram, std::span<const int> labels, const SvmOptions& opt) {
  auto m = svm_train(gram.values, labels, opt);
  m.spec = gram.spec;
  return m;
}

double svm_decision(const SvmModel& model, const Eigen::Ref<const Vec>& kernel_row) {
  require(kernel_row.size() == model.size(), ErrorCode::InvalidArgument, "svm_decision: kernel row length mismatch");
  double f = model.bias;
  for (auto i : model.support_ids)
    f += model.alphas[i] * model.labels[static_cast<std::size_t>(i)] * kernel_row[i];
  return f;
}

double svm_dual_objective(const Eigen::Ref<const Mat>& K, std::span<const int> y, const Eigen::Ref<const Vec>& a) {
  Vec ya(a.size());
  for (Eigen::Index i = 0; i < a.size(); ++i) ya[i] = a[i] * y[static_cast<std::size_t>(i)];
  return a.sum() - 0.5 * ya.dot(K * ya);
}

double svm_kkt_residual(const SvmModel& model, const Eigen::Ref<const Mat>& K) {
  double worst = 0.0;
  for (Eigen::Index i = 0; i < model.size(); ++i) {
    const double margin = model.labels[static_cast<std::size_t>(i)] * svm_decision(model, K.row(i).transpose());
    const double a = model.alphas[i];
    double r = 0.0;
    if (a <= 0.0) r = std::max(0.0, 1.0 - margin);
    else if (a >= model.upper_bound(i)) r = std::max(0.0, margin - 1.0);
    else r = std::abs(margin - 1.0);
    worst = std::max(worst, r);
  }
  return worst;
}

KernelMachine make_kernel_machine(const SvmModel& model, const Eigen::Ref<const Mat>& train_rows,
                                  const GridConfig& grid) {
  require(train_rows.rows() == model.size(), ErrorCode::InvalidArgument,
          "make_kernel_machine: training rows do not match the model");
  KernelMachine km;
  km.grid = grid;
  km.model.alphas.resize(static_cast<Eigen::Index>(model.support_ids.size()));
  km.model.labels.clear();
  km.support_rows.resize(static_cast<Eigen::Index>(model.support_ids.size()), train_rows.cols());
  for (std::size_t s = 0; s < model.support_ids.size(); ++s) {
    const auto id = model.support_ids[s];
    km.model.alphas[static_cast<Eigen::Index>(s)] = model.alphas[id];
    km.model.labels.push_back(model.labels[static_cast<std::size_t>(id)]);
    km.model.support_ids.push_back(static_cast<Eigen::Index>(s));
    km.support_rows.row(static_cast<Eigen::Index>(s)) = train_rows.row(id);
  }
  km.model.bias = model.bias;
  km.model.C = model.C;
  km.model.positive_weight = model.positive_weight;
  km.model.spec = model.spec;
  km.model.iterations = model.iterations;
  km.model.converged = model.converged;
  return km;
}

double KernelMachine::decision(const Eigen::Ref<const Vec>& x) const {
  require(x.size() == support_rows.cols(), ErrorCode::InvalidArgument, "decision: dimension mismatch");
  const auto& spec = model.spec;
  Distribution px;
  if (!spec.is_rbf()) px = sample_to_distribution(x, grid);
  Vec row(support_rows.rows());
  for (Eigen::Index s = 0; s < support_rows.rows(); ++s) {
    const Vec sv = support_rows.row(s).transpose();
    if (spec.is_rbf()) {
      row[s] = rbf(x, sv, spec.sigma);
    } else {
      row[s] = divergence_kernel(x, sv, px, sample_to_distribution(sv, grid), spec);
    }
  }
  return svm_decision(model, row);
}

void write_model(const KernelMachine& km, const std::filesystem::path& path) {
  using detail::put_le;
  const auto& m = km.model;
  std::string out = "CKM1";
  put_le<std::uint32_t>(out, 1);
  put_le<std::uint8_t>(out, static_cast<std::uint8_t>(m.spec.family));
  put_le<std::uint8_t>(out, static_cast<std::uint8_t>(m.spec.divergence));
  put_le<std::uint8_t>(out, static_cast<std::uint8_t>(m.spec.mean));
  put_le<std::uint8_t>(out, 0);
  put_le<double>(out, m.spec.sigma);
  put_le<double>(out, m.C);
  put_le<double>(out, m.positive_weight);
  put_le<double>(out, m.bias);
  put_le<std::int32_t>(out, km.grid.points);
  put_le<double>(out, km.grid.lo);
  put_le<double>(out, km.grid.hi);
  put_le<std::uint64_t>(out, static_cast<std::uint64_t>(km.support_rows.rows()));
  put_le<std::uint64_t>(out, static_cast<std::uint64_t>(km.support_rows.cols()));
  for (Eigen::Index s = 0; s < km.support_rows.rows(); ++s) {
    put_le<std::int8_t>(out, static_cast<std::int8_t>(m.labels[static_cast<std::size_t>(s)]));
    put_le<double>(out, m.alphas[s]);
    for (Eigen::Index c = 0; c < km.support_rows.cols(); ++c) put_le<double>(out, km.support_rows(s, c));
  }
  detail::atomic_write(path, out);
}

KernelMachine read_model(const std::filesystem::path& path) {
  using detail::get_le;
  const auto bytes = detail::read_file(path);
  const std::string_view in(bytes);
  require(in.substr(0, 4) == "CKM1", ErrorCode::Corrupt, path.string() + ": bad model magic");
  std::size_t pos = 4;
  std::uint32_t version = 0;
  std::uint8_t family = 0, divergence = 0, mean = 0, reserved = 0;
  std::uint64_t count = 0, dim = 0;
  KernelMachine km;
  auto& m = km.model;
  bool ok = get_le(in, pos, version) && get_le(in, pos, family) && get_le(in, pos, divergence) &&
            get_le(in, pos, mean) && get_le(in, pos, reserved) && get_le(in, pos, m.spec.sigma) &&
            get_le(in, pos, m.C) && get_le(in, pos, m.positive_weight) && get_le(in, pos, m.bias) &&
            get_le(in, pos, km.grid.points) && get_le(in, pos, km.grid.lo) && get_le(in, pos, km.grid.hi) &&
            get_le(in, pos, count) && get_le(in, pos, dim);
  require(ok && version == 1 && family <= 3 && divergence <= 2 && mean <= 2, ErrorCode::Corrupt,
          path.string() + ": bad model header");
  require(in.size() == pos + count * (1 + 8 + 8 * dim), ErrorCode::Corrupt, path.string() + ": model size mismatch");
  m.spec.family = static_cast<KernelFamily>(family);
  m.spec.divergence = static_cast<DivergenceKind>(divergence);
  m.spec.mean = static_cast<ChisiniKind>(mean);
  const auto n = static_cast<Eigen::Index>(count), d = static_cast<Eigen::Index>(dim);
  m.alphas.resize(n);
  km.support_rows.resize(n, d);
  for (Eigen::Index s = 0; s < n; ++s) {
    std::int8_t label = 0;
    get_le(in, pos, label);
    m.labels.push_back(label);
    get_le(in, pos, m.alphas[s]);
    for (Eigen::Index c = 0; c < d; ++c) get_le(in, pos, km.support_rows(s, c));
    m.support_ids.push_back(s);
  }
  m.converged = true;
  return km;
}

}  // namespace camo
