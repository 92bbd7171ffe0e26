#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "mslkit/eigen.hpp"
#include "mslkit/errors.hpp"
#include "mslkit/parallel.hpp"
#include "mslkit/tensor.hpp"

namespace mslkit {

enum class Stage { Hosvd, Howsvd, Mda, Lda };

inline const char* stage_name(Stage s) {
  switch (s) {
    case Stage::Hosvd: return "hosvd";
    case Stage::Howsvd: return "howsvd";
    case Stage::Mda: return "mda";
    case Stage::Lda: return "lda";
  }
  return "?";
}

/// Per-mode projection matrices of one learning stage. matrices[k] is
/// input_dims[k] x output_dims[k]; projection multiplies mode k by its
/// transpose. `spectra[k]` keeps the eigenvalues the basis was cut from.
struct ModeBasis {
  Stage stage = Stage::Hosvd;
  std::vector<Matrix> matrices;
  std::vector<std::size_t> input_dims;
  std::vector<std::size_t> output_dims;
  std::vector<std::vector<double>> spectra;

  std::size_t order() const noexcept { return matrices.size(); }
};

/// Training tensors of identical shape with dense class ids 1..L.
class LabeledSamples {
 public:
  LabeledSamples(std::vector<Tensor> samples, std::vector<int> labels, int num_classes)
      : samples_(std::move(samples)), labels_(std::move(labels)), num_classes_(num_classes) {
    if (samples_.empty()) throw InvalidArgument("LabeledSamples: no samples");
    if (samples_.size() != labels_.size())
      throw InvalidArgument("LabeledSamples: " + std::to_string(samples_.size()) + " samples but " +
                            std::to_string(labels_.size()) + " labels");
    if (num_classes_ < 1) throw InvalidArgument("LabeledSamples: need at least one class");
    counts_.assign(static_cast<std::size_t>(num_classes_), 0);
    for (std::size_t i = 0; i < samples_.size(); ++i) {
      if (samples_[i].shape() != samples_[0].shape())
        throw InvalidArgument("LabeledSamples: sample " + std::to_string(i) + " has shape " +
                              detail::shape_string(samples_[i].shape()) + ", expected " +
                              detail::shape_string(samples_[0].shape()));
      if (labels_[i] < 1 || labels_[i] > num_classes_)
        throw InvalidArgument("LabeledSamples: label " + std::to_string(labels_[i]) + " outside 1.." +
                              std::to_string(num_classes_));
      ++counts_[static_cast<std::size_t>(labels_[i] - 1)];
    }
    for (int c = 0; c < num_classes_; ++c)
      if (counts_[static_cast<std::size_t>(c)] == 0)
        throw InvalidArgument("LabeledSamples: class " + std::to_string(c + 1) + " has no samples");
  }

  // Infers L as the largest label.
  LabeledSamples(std::vector<Tensor> samples, std::vector<int> labels)
      : LabeledSamples(std::move(samples), labels,
                       labels.empty() ? 0 : *std::max_element(labels.begin(), labels.end())) {}

  std::size_t size() const noexcept { return samples_.size(); }
  int num_classes() const noexcept { return num_classes_; }
  const std::vector<Tensor>& samples() const noexcept { return samples_; }
  const std::vector<int>& labels() const noexcept { return labels_; }
  const std::vector<std::size_t>& class_counts() const noexcept { return counts_; }
  const Shape& sample_shape() const noexcept { return samples_.front().shape(); }

  LabeledSamples with_samples(std::vector<Tensor> samples) const {
    return LabeledSamples(std::move(samples), labels_, num_classes_);
  }

 private:
  std::vector<Tensor> samples_;
  std::vector<int> labels_;
  int num_classes_;
  std::vector<std::size_t> counts_;
};

namespace detail {

// G diag(w) G^T for a row-major matrix (w = all ones when empty), one
// output row per task.
inline Matrix gram_rows(const Matrix& g, std::span<const double> col_weight = {}) {
  const std::size_t n = g.rows();
  Matrix c(n, n);
  parallel_for(n, [&](std::size_t a) {
    const auto ra = g.row(a);
    for (std::size_t b = a; b < n; ++b) {
      const auto rb = g.row(b);
      double s = 0.0;
      if (col_weight.empty())
        for (std::size_t j = 0; j < ra.size(); ++j) s += ra[j] * rb[j];
      else
        for (std::size_t j = 0; j < ra.size(); ++j) s += col_weight[j] * (ra[j] * rb[j]);
      c(a, b) = s;
    }
  });
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = 0; b < a; ++b) c(a, b) = c(b, a);
  return c;
}

// Horizontal concatenation of mode-k unfoldings, optionally with a
// per-sample offset tensor subtracted first.
template <typename OffsetFn>
Matrix concat_unfoldings(const std::vector<Tensor>& samples, std::size_t mode, OffsetFn&& offset) {
  const Matrix first = unfold(samples.front(), mode);
  const std::size_t width = first.cols();
  Matrix g(first.rows(), width * samples.size());
  parallel_for(samples.size(), [&](std::size_t i) {
    const Matrix u = unfold(samples[i], mode);
    const Tensor* off = offset(i);
    const Matrix uo = off ? unfold(*off, mode) : Matrix();
    for (std::size_t r = 0; r < u.rows(); ++r)
      for (std::size_t c = 0; c < width; ++c)
        g(r, i * width + c) = off ? u(r, c) - uo(r, c) : u(r, c);
  });
  return g;
}

inline Tensor mean_tensor(const std::vector<Tensor>& samples, const std::vector<std::size_t>& members) {
  Tensor m(samples.front().shape());
  auto acc = m.data();
  for (std::size_t idx : members) {
    const auto d = samples[idx].data();
    for (std::size_t e = 0; e < acc.size(); ++e) acc[e] += d[e];
  }
  const double inv = 1.0 / static_cast<double>(members.size());
  for (double& v : acc) v *= inv;
  return m;
}

}  // namespace detail

/// Mode-k covariance C = sum_i X_i^(k) X_i^(k)^T over the per-sample
/// tensors. Uncentered unless `centered` is set.
inline Matrix mode_covariance(const std::vector<Tensor>& samples, std::size_t mode, bool centered = false) {
  if (samples.empty()) throw InvalidArgument("mode_covariance: no samples");
  samples.front().check_mode(mode);
  std::optional<Tensor> mean;
  if (centered) {
    std::vector<std::size_t> all(samples.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    mean = detail::mean_tensor(samples, all);
  }
  const Matrix g = detail::concat_unfoldings(samples, mode, [&](std::size_t) -> const Tensor* {
    return mean ? &*mean : nullptr;
  });
  return detail::gram_rows(g);
}

struct HosvdOptions {
  double energy = 0.96;
  bool centered = false;
};

/// Per-mode HOSVD bases (top eigenvectors of each mode covariance, cut
/// at the energy fraction). The sample index is never a mode here.
inline ModeBasis hosvd_fit(const LabeledSamples& train, const HosvdOptions& opts = {}) {
  if (train.size() < 2) throw InvalidArgument("hosvd_fit: need at least 2 samples, got " + std::to_string(train.size()));
  if (!(opts.energy > 0.0 && opts.energy <= 1.0))
    throw InvalidArgument("hosvd_fit: energy must lie in (0, 1]");
  const Shape& shape = train.sample_shape();
  ModeBasis b;
  b.stage = Stage::Hosvd;
  for (std::size_t k = 1; k <= shape.size(); ++k) {
    const Matrix c = mode_covariance(train.samples(), k, opts.centered);
    EigenResult e = sym_eig(c);
    const std::size_t r = energy_rank(e.values, opts.energy);
    b.matrices.push_back(e.vectors.left_columns(r));
    b.input_dims.push_back(shape[k - 1]);
    b.output_dims.push_back(r);
    b.spectra.push_back(std::move(e.values));
  }
  return b;
}

/// HOSVD followed by per-mode whitening of the retained eigenvectors.
inline ModeBasis howsvd_fit(const LabeledSamples& train, const HosvdOptions& opts = {}) {
  if (train.size() < 2) throw InvalidArgument("howsvd_fit: need at least 2 samples, got " + std::to_string(train.size()));
  if (!(opts.energy > 0.0 && opts.energy <= 1.0))
    throw InvalidArgument("howsvd_fit: energy must lie in (0, 1]");
  const Shape& shape = train.sample_shape();
  ModeBasis b;
  b.stage = Stage::Howsvd;
  for (std::size_t k = 1; k <= shape.size(); ++k) {
    const Matrix c = mode_covariance(train.samples(), k, opts.centered);
    EigenResult e = sym_eig(c);
    const std::size_t r = energy_rank(e.values, opts.energy);
    b.matrices.push_back(whiten_basis(e, r));
    b.input_dims.push_back(shape[k - 1]);
    b.output_dims.push_back(r);
    b.spectra.push_back(std::move(e.values));
  }
  return b;
}

/// Y = X x_1 U1^T x_2 U2^T ... x_N UN^T.
inline Tensor project(const Tensor& x, const ModeBasis& b) {
  if (x.shape() != b.input_dims)
    throw InvalidArgument(std::string("project: ") + stage_name(b.stage) + " stage expects shape " +
                          detail::shape_string(b.input_dims) + ", got " + detail::shape_string(x.shape()));
  Tensor y = x;
  for (std::size_t k = 0; k < b.order(); ++k) y = mode_product(y, k + 1, b.matrices[k].transpose());
  return y;
}

inline std::vector<Tensor> project_all(const std::vector<Tensor>& xs, const ModeBasis& b) {
  std::vector<Tensor> out(xs.size());
  parallel_for(xs.size(), [&](std::size_t i) { out[i] = project(xs[i], b); });
  return out;
}

struct ScatterPair {
  Matrix between;
  Matrix within;
};

/// Between- and within-class scatter of the mode-k unfoldings.
inline ScatterPair scatter_matrices(const LabeledSamples& data, std::size_t mode) {
  data.samples().front().check_mode(mode);
  const auto& samples = data.samples();
  const auto L = static_cast<std::size_t>(data.num_classes());
  std::vector<std::vector<std::size_t>> members(L);
  for (std::size_t i = 0; i < samples.size(); ++i)
    members[static_cast<std::size_t>(data.labels()[i] - 1)].push_back(i);

  std::vector<std::size_t> all(samples.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  const Tensor grand = detail::mean_tensor(samples, all);
  std::vector<Tensor> class_means;
  class_means.reserve(L);
  for (const auto& m : members) class_means.push_back(detail::mean_tensor(samples, m));

  // S_b = sum_j n_j D_j D_j^T = G diag(n) G^T with G = [D_1 ... D_L].
  const Matrix grand_unf = unfold(grand, mode);
  const std::size_t width = grand_unf.cols();
  Matrix gb(grand_unf.rows(), width * L);
  std::vector<double> weight(width * L);
  for (std::size_t j = 0; j < L; ++j) {
    const Matrix mj = unfold(class_means[j], mode);
    for (std::size_t c = 0; c < width; ++c) weight[j * width + c] = static_cast<double>(members[j].size());
    for (std::size_t r = 0; r < mj.rows(); ++r)
      for (std::size_t c = 0; c < width; ++c) gb(r, j * width + c) = mj(r, c) - grand_unf(r, c);
  }

  const Matrix gw = detail::concat_unfoldings(samples, mode, [&](std::size_t i) -> const Tensor* {
    return &class_means[static_cast<std::size_t>(data.labels()[i] - 1)];
  });
  return {detail::gram_rows(gb, weight), detail::gram_rows(gw)};
}

/// trace(W^T S_b W) / trace(W^T S W), S the regularized within-class scatter.
inline double trace_ratio(const Matrix& w, const Matrix& s_b, const Matrix& s_w, double gamma) {
  Matrix reg = s_w;
  if (gamma > 0.0) {
    const double shift = regularizer_shift(s_b, s_w, gamma);
    for (std::size_t i = 0; i < reg.rows(); ++i) reg(i, i) += shift;
  }
  const Matrix wt = w.transpose();
  const double num = (wt * s_b * w).trace();
  const double den = (wt * reg * w).trace();
  return den > 0.0 ? num / den : 0.0;
}

struct MdaConfig {
  std::optional<std::vector<std::size_t>> output_dims;  // nullopt = AUTO
  int itr_max = 5;
  double epsilon = 1e-6;
  double gamma = 1e-6;
  double auto_energy = 0.96;
};

struct MdaReport {
  int iterations_used = 0;
  bool converged = false;
  // ||W_itr - W_{itr-1}||_F per mode for the final iteration (empty when
  // only one iteration ran) and the matching stop thresholds I''_k I'_k eps.
  std::vector<double> final_deltas;
  std::vector<double> thresholds;
  // trace ratio per mode after the final update, regularized S_w.
  std::vector<double> objective;
};

struct MdaFit {
  ModeBasis basis;
  MdaReport report;
};

namespace detail {

inline std::size_t positive_energy_rank(const std::vector<double>& values, double fraction, std::size_t mode) {
  if (values.empty() || !(values[0] > 0.0))
    throw InvalidArgument("no between-class scatter along mode " + std::to_string(mode) +
                          "; cannot choose discriminant dimensions");
  std::vector<double> positive;
  for (double v : values)
    if (v > 1e-10 * values[0]) positive.push_back(v);
  return energy_rank(positive, fraction);
}

}  // namespace detail

/// Alternating per-mode discriminant fit. Every W^(k) starts at the
/// identity; inside an iteration modes are updated in ascending order
/// using the already-updated bases of the other modes. Iteration stops
/// when every mode moved by less than I''_k I'_k eps (checked from the
/// second iteration on) or after itr_max iterations.
inline MdaFit mda_fit(const LabeledSamples& data, const MdaConfig& cfg = {}) {
  if (data.num_classes() < 2)
    throw InvalidArgument("mda_fit: need at least 2 classes, got " + std::to_string(data.num_classes()));
  if (cfg.itr_max < 1) throw InvalidArgument("mda_fit: itr_max must be >= 1");
  if (!(cfg.epsilon > 0.0)) throw InvalidArgument("mda_fit: epsilon must be > 0");
  const Shape& shape = data.sample_shape();
  const std::size_t n_modes = shape.size();
  if (cfg.output_dims) {
    if (cfg.output_dims->size() != n_modes)
      throw InvalidArgument("mda_fit: " + std::to_string(cfg.output_dims->size()) + " output dims given for " +
                            std::to_string(n_modes) + " modes");
    for (std::size_t k = 0; k < n_modes; ++k)
      if ((*cfg.output_dims)[k] < 1 || (*cfg.output_dims)[k] > shape[k])
        throw InvalidArgument("mda_fit: output dim " + std::to_string((*cfg.output_dims)[k]) + " for mode " +
                              std::to_string(k + 1) + " outside [1, " + std::to_string(shape[k]) + "]");
  }

  std::vector<Matrix> w(n_modes);
  for (std::size_t k = 0; k < n_modes; ++k) w[k] = Matrix::identity(shape[k]);
  std::vector<std::size_t> out_dims = cfg.output_dims.value_or(std::vector<std::size_t>(n_modes, 0));
  std::vector<std::vector<double>> spectra(n_modes);

  MdaReport report;
  report.objective.assign(n_modes, 0.0);
  for (int itr = 1; itr <= cfg.itr_max; ++itr) {
    const std::vector<Matrix> previous = w;
    for (std::size_t k = 0; k < n_modes; ++k) {
      std::vector<Tensor> z(data.size());
      parallel_for(data.size(), [&](std::size_t i) {
        Tensor t = data.samples()[i];
        for (std::size_t l = 0; l < n_modes; ++l)
          if (l != k) t = mode_product(t, l + 1, w[l].transpose());
        z[i] = std::move(t);
      });
      const ScatterPair s = scatter_matrices(data.with_samples(std::move(z)), k + 1);
      EigenResult e = solve_gen_eig(s.between, s.within, cfg.gamma);
      if (out_dims[k] == 0) out_dims[k] = detail::positive_energy_rank(e.values, cfg.auto_energy, k + 1);
      w[k] = e.vectors.left_columns(out_dims[k]);
      report.objective[k] = trace_ratio(w[k], s.between, s.within, cfg.gamma);
      spectra[k] = std::move(e.values);
    }
    report.iterations_used = itr;
    if (itr >= 2) {
      report.final_deltas.assign(n_modes, 0.0);
      report.thresholds.assign(n_modes, 0.0);
      bool all_small = true;
      for (std::size_t k = 0; k < n_modes; ++k) {
        report.final_deltas[k] = (w[k] - previous[k]).frobenius_norm();
        report.thresholds[k] = static_cast<double>(out_dims[k] * shape[k]) * cfg.epsilon;
        if (!(report.final_deltas[k] < report.thresholds[k])) all_small = false;
      }
      if (all_small) {
        report.converged = true;
        break;
      }
    }
  }

  MdaFit fit;
  fit.basis.stage = Stage::Mda;
  fit.basis.matrices = std::move(w);
  fit.basis.input_dims = shape;
  fit.basis.output_dims = out_dims;
  fit.basis.spectra = std::move(spectra);
  fit.report = std::move(report);
  return fit;
}

struct TwoStageFit {
  ModeBasis first;
  MdaFit second;
};

/// Unsupervised HOWSVD (or plain HOSVD when `whiten` is false) followed by
/// MDA on the projected training tensors.
inline TwoStageFit two_stage_fit(const LabeledSamples& train, const HosvdOptions& hopts, const MdaConfig& cfg,
                                 bool whiten) {
  TwoStageFit out;
  out.first = whiten ? howsvd_fit(train, hopts) : hosvd_fit(train, hopts);
  const LabeledSamples projected = train.with_samples(project_all(train.samples(), out.first));
  out.second = mda_fit(projected, cfg);
  return out;
}

inline TwoStageFit howsvd_mda_fit(const LabeledSamples& train, const HosvdOptions& hopts = {},
                                  const MdaConfig& cfg = {}) {
  return two_stage_fit(train, hopts, cfg, true);
}

inline TwoStageFit hosvd_mda_fit(const LabeledSamples& train, const HosvdOptions& hopts = {},
                                 const MdaConfig& cfg = {}) {
  return two_stage_fit(train, hopts, cfg, false);
}

/// Classical LDA on order-1 samples. out_dim nullopt = AUTO, which keeps
/// min(L - 1, rank(S_b)) directions.
inline ModeBasis lda_fit(const LabeledSamples& data, std::optional<std::size_t> out_dim = std::nullopt,
                         double gamma = 1e-6) {
  if (data.sample_shape().size() != 1)
    throw InvalidArgument("lda_fit: samples must be order-1 vectors, got shape " +
                          detail::shape_string(data.sample_shape()));
  if (data.num_classes() < 2)
    throw InvalidArgument("lda_fit: need at least 2 classes, got " + std::to_string(data.num_classes()));
  const std::size_t dim = data.sample_shape()[0];
  const ScatterPair s = scatter_matrices(data, 1);
  std::size_t keep = 0;
  if (out_dim) {
    keep = *out_dim;
    if (keep < 1 || keep > dim)
      throw InvalidArgument("lda_fit: out_dim " + std::to_string(keep) + " outside [1, " + std::to_string(dim) + "]");
  } else {
    const EigenResult sb = sym_eig(s.between);
    const double scale = s.between.trace() + s.within.trace();
    std::size_t rank = 0;
    for (double v : sb.values)
      if (v > 1e-10 * scale) ++rank;
    keep = std::min(static_cast<std::size_t>(data.num_classes() - 1), rank);
    if (keep == 0) throw InvalidArgument("lda_fit: between-class scatter is zero; no discriminant direction");
  }
  EigenResult e = solve_gen_eig(s.between, s.within, gamma);
  ModeBasis b;
  b.stage = Stage::Lda;
  b.matrices.push_back(e.vectors.left_columns(keep));
  b.input_dims = {dim};
  b.output_dims = {keep};
  b.spectra.push_back(std::move(e.values));
  return b;
}

}  // namespace mslkit
