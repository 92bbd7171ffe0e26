#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "mslkit/classify.hpp"
#include "mslkit/dataset.hpp"
#include "mslkit/errors.hpp"
#include "mslkit/msl.hpp"
#include "mslkit/parallel.hpp"
#include "mslkit/tensor.hpp"

namespace mslkit {

enum class Method {
  HowsvdMda,  // whitened HOSVD, then MDA
  HosvdMda,   // plain HOSVD, then MDA
  Lda,        // vectorized samples, classical LDA
  Raw,        // no learning: match the vectorized input tensors
};

inline const char* method_name(Method m) {
  switch (m) {
    case Method::HowsvdMda: return "howsvd-mda";
    case Method::HosvdMda: return "hosvd-mda";
    case Method::Lda: return "lda";
    case Method::Raw: return "raw";
  }
  return "?";
}

inline std::optional<Method> parse_method(const std::string& s) {
  for (Method m : {Method::HowsvdMda, Method::HosvdMda, Method::Lda, Method::Raw})
    if (s == method_name(m)) return m;
  return std::nullopt;
}

struct TrainOptions {
  Method method = Method::HowsvdMda;
  HosvdOptions hosvd;
  MdaConfig mda;
  bool unit_norm = false;
};

/// Everything needed to embed and classify a probe.
struct TrainedModel {
  Method method = Method::HowsvdMda;
  double energy = 0.96;
  bool centered = false;
  bool unit_norm = false;
  double gamma = 1e-6;
  std::vector<std::string> models;
  std::size_t feature_dim = 0;
  std::vector<ModeBasis> stages;  // applied in order
  Gallery gallery;
  std::optional<MdaReport> mda_report;

  Shape input_shape() const { return {feature_dim, models.size()}; }
};

/// Maps one (feature_dim x n_models) tensor through the model's stages
/// and flattens the result.
inline std::vector<double> embed(const TrainedModel& model, const Tensor& sample) {
  if (sample.shape() != model.input_shape())
    throw InvalidArgument("dimension chain mismatch at stage 'input': model expects " +
                          detail::shape_string(model.input_shape()) + ", probe is " +
                          detail::shape_string(sample.shape()));
  Tensor y = sample;
  if (model.method == Method::Lda) y = y.reshaped({y.size()});
  for (const ModeBasis& b : model.stages) {
    if (y.shape() != b.input_dims)
      throw InvalidArgument(std::string("dimension chain mismatch at stage '") + stage_name(b.stage) + "': expects " +
                            detail::shape_string(b.input_dims) + ", got " + detail::shape_string(y.shape()));
    y = project(y, b);
  }
  return {y.data().begin(), y.data().end()};
}

inline Matrix embed_all(const TrainedModel& model, const std::vector<Tensor>& samples) {
  if (samples.empty()) throw InvalidArgument("embed_all: no samples");
  std::vector<std::vector<double>> rows(samples.size());
  parallel_for(samples.size(), [&](std::size_t i) { rows[i] = embed(model, samples[i]); });
  Matrix out(rows.size(), rows.front().size());
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows[i].size(); ++j) out(i, j) = rows[i][j];
  return out;
}

/// Fits the requested method on an assembled training set and builds the
/// gallery from the embedded training samples.
inline TrainedModel train_model(const AssembledSet& train, const TrainOptions& opts) {
  TrainedModel model;
  model.method = opts.method;
  model.energy = opts.hosvd.energy;
  model.centered = opts.hosvd.centered;
  model.unit_norm = opts.unit_norm;
  model.gamma = opts.mda.gamma;
  model.models = train.models;
  model.feature_dim = train.feature_dim;

  const LabeledSamples samples = train.labeled();
  switch (opts.method) {
    case Method::HowsvdMda:
    case Method::HosvdMda: {
      TwoStageFit fit = two_stage_fit(samples, opts.hosvd, opts.mda, opts.method == Method::HowsvdMda);
      model.stages.push_back(std::move(fit.first));
      model.stages.push_back(std::move(fit.second.basis));
      model.mda_report = std::move(fit.second.report);
      break;
    }
    case Method::Lda: {
      std::vector<Tensor> vectors;
      vectors.reserve(samples.size());
      for (const auto& t : samples.samples()) vectors.push_back(t.reshaped({t.size()}));
      std::optional<std::size_t> dim;
      if (opts.mda.output_dims) {
        if (opts.mda.output_dims->size() != 1)
          throw InvalidArgument("lda: expects a single output dimension, got " +
                                std::to_string(opts.mda.output_dims->size()));
        dim = opts.mda.output_dims->front();
      }
      model.stages.push_back(lda_fit(samples.with_samples(std::move(vectors)), dim, opts.mda.gamma));
      break;
    }
    case Method::Raw:
      break;
  }
  model.gallery = Gallery(embed_all(model, train.tensors), train.labels, train.class_names);
  return model;
}

inline EvalReport evaluate_model(const TrainedModel& model, const AssembledSet& probes) {
  return evaluate(embed_all(model, probes.tensors), probes.labels, model.gallery);
}

}  // namespace mslkit
