#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <numbers>
#include <string>
#include <vector>

#include "mslkit/dataset.hpp"
#include "mslkit/errors.hpp"
#include "mslkit/feature_file.hpp"
#include "mslkit/tensor.hpp"

namespace mslkit {

struct SyntheticSpec {
  int classes = 6;
  int per_class = 100;
  std::size_t dim = 64;
  std::size_t models = 3;
  double delta = 5.0;  // class-mean separation
  double sigma = 1.0;  // noise standard deviation
  std::uint64_t seed = 42;
  // Share of the noise variance coming from one per-sample component seen by
  // every model column through a seeded per-model gain (0 = independent noise
  // per model, 1 = fully correlated across models).
  double noise_correlation = 0.0;

  void validate() const {
    if (classes < 1) throw InvalidArgument("synth: classes must be >= 1");
    if (per_class < 2) throw InvalidArgument("synth: per-class count must be >= 2 for an 80/20 split");
    if (dim < 1) throw InvalidArgument("synth: dim must be >= 1");
    if (models < 1) throw InvalidArgument("synth: models must be >= 1");
    if (!(delta >= 0.0) || !std::isfinite(delta)) throw InvalidArgument("synth: delta must be >= 0");
    if (!(sigma >= 0.0) || !std::isfinite(sigma)) throw InvalidArgument("synth: sigma must be >= 0");
    if (!(noise_correlation >= 0.0 && noise_correlation <= 1.0))
      throw InvalidArgument("synth: noise correlation must lie in [0, 1]");
  }

  int train_per_class() const { return (per_class * 4) / 5; }
};

/// Counter-based generator: every draw is a pure function of
/// (seed, stream, counter), so output never depends on call order.
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t seed) : seed_(seed) {}

  static std::uint64_t mix(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  std::uint64_t bits(std::uint64_t stream, std::uint64_t counter) const {
    return mix(mix(seed_ ^ mix(stream)) + counter);
  }

  // Uniform in (0, 1).
  double uniform(std::uint64_t stream, std::uint64_t counter) const {
    return (static_cast<double>(bits(stream, counter) >> 11) + 0.5) * 0x1.0p-53;
  }

  // Standard normal via Box-Muller on counters 2c and 2c+1.
  double normal(std::uint64_t stream, std::uint64_t counter) const {
    const double u1 = uniform(stream, 2 * counter);
    const double u2 = uniform(stream, 2 * counter + 1);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

 private:
  std::uint64_t seed_;
};

struct SyntheticData {
  std::vector<Tensor> train;
  std::vector<int> train_labels;
  std::vector<std::string> train_ids;
  std::vector<Tensor> test;
  std::vector<int> test_labels;
  std::vector<std::string> test_ids;
  std::vector<std::string> class_names;
  std::vector<std::string> model_names;
  std::vector<std::vector<double>> class_means;  // length dim each
};

namespace detail {

inline std::string zero_padded(std::size_t value, std::size_t count) {
  std::size_t width = 1;
  for (std::size_t c = count; c >= 10; c /= 10) ++width;
  std::string s = std::to_string(value);
  return std::string(width > s.size() ? width - s.size() : 0, '0') + s;
}

inline constexpr std::uint64_t kMeanStream = 0x6d65616e00000000ULL;
inline constexpr std::uint64_t kSharedStream = 0x7368617200000000ULL;
inline constexpr std::uint64_t kLoadStream = 0x6c6f616400000000ULL;

}  // namespace detail

/// Class c has mean delta * u_c (u_c a seeded random unit vector) in every
/// model column; samples add sigma-scaled Gaussian noise, optionally
/// correlated across model columns. The first
/// floor(0.8 n) samples of each class go to training, the rest to test.
inline SyntheticData generate_synthetic(const SyntheticSpec& spec) {
  spec.validate();
  const CounterRng rng(spec.seed);
  const auto L = static_cast<std::size_t>(spec.classes);
  const auto n = static_cast<std::size_t>(spec.per_class);
  SyntheticData out;
  for (std::size_t c = 0; c < L; ++c) out.class_names.push_back("class_" + detail::zero_padded(c, L));
  for (std::size_t m = 0; m < spec.models; ++m) out.model_names.push_back("model_" + detail::zero_padded(m, spec.models));

  for (std::size_t c = 0; c < L; ++c) {
    std::vector<double> u(spec.dim);
    double norm = 0.0;
    for (std::size_t f = 0; f < spec.dim; ++f) {
      u[f] = rng.normal(detail::kMeanStream + c, f);
      norm += u[f] * u[f];
    }
    norm = std::sqrt(norm);
    for (double& v : u) v = spec.delta * v / norm;
    out.class_means.push_back(std::move(u));
  }

  // Per-model loadings of the shared component, normalized to mean square 1.
  std::vector<double> load(spec.models);
  double ss = 0.0;
  for (std::size_t m = 0; m < spec.models; ++m) {
    load[m] = rng.normal(detail::kLoadStream, m);
    ss += load[m] * load[m];
  }
  for (double& g : load) g *= std::sqrt(static_cast<double>(spec.models) / ss);
  const double shared_w = std::sqrt(spec.noise_correlation);
  const double own_w = std::sqrt(1.0 - spec.noise_correlation);
  const std::size_t n_train = static_cast<std::size_t>(spec.train_per_class());
  for (std::size_t c = 0; c < L; ++c) {
    for (std::size_t s = 0; s < n; ++s) {
      const std::uint64_t stream = c * n + s;
      std::vector<double> data(spec.dim * spec.models);
      for (std::size_t f = 0; f < spec.dim; ++f) {
        const double shared = rng.normal(detail::kSharedStream + stream, f);
        for (std::size_t m = 0; m < spec.models; ++m) {
          const double own = rng.normal(stream, f * spec.models + m);
          data[f * spec.models + m] = out.class_means[c][f] + spec.sigma * (shared_w * load[m] * shared + own_w * own);
        }
      }
      Tensor t(Shape{spec.dim, spec.models}, std::move(data));
      const std::string id = "c" + detail::zero_padded(c, L) + "_s" + detail::zero_padded(s, n);
      if (s < n_train) {
        out.train.push_back(std::move(t));
        out.train_labels.push_back(static_cast<int>(c) + 1);
        out.train_ids.push_back(id);
      } else {
        out.test.push_back(std::move(t));
        out.test_labels.push_back(static_cast<int>(c) + 1);
        out.test_ids.push_back(id);
      }
    }
  }
  return out;
}

/// Writes features/<sample>__<model>.mslf (float64) plus train.csv and
/// test.csv under `dir`.
inline SyntheticData write_synthetic(const SyntheticSpec& spec, const std::filesystem::path& dir) {
  SyntheticData data = generate_synthetic(spec);
  std::filesystem::create_directories(dir / "features");
  auto emit = [&](const std::vector<Tensor>& tensors, const std::vector<int>& labels,
                  const std::vector<std::string>& ids, const std::string& manifest_name) {
    DatasetManifest manifest;
    for (std::size_t i = 0; i < tensors.size(); ++i) {
      const Matrix cols = unfold(tensors[i], 2);
      for (std::size_t m = 0; m < data.model_names.size(); ++m) {
        const std::string rel = "features/" + ids[i] + "__" + data.model_names[m] + ".mslf";
        const auto row = cols.row(m);
        write_feature(dir / rel, Tensor(Shape{row.size()}, std::vector<double>(row.begin(), row.end())));
        manifest.records.push_back(
            {ids[i], data.class_names[static_cast<std::size_t>(labels[i] - 1)], data.model_names[m], rel});
      }
    }
    write_manifest(dir / manifest_name, manifest);
  };
  emit(data.train, data.train_labels, data.train_ids, "train.csv");
  emit(data.test, data.test_labels, data.test_ids, "test.csv");
  return data;
}

}  // namespace mslkit
