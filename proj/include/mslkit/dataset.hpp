#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "mslkit/errors.hpp"
#include "mslkit/feature_file.hpp"
#include "mslkit/msl.hpp"
#include "mslkit/tensor.hpp"

namespace mslkit {

inline constexpr const char* kManifestHeader = "sample_id,label,model,path";

struct ManifestRecord {
  std::string sample_id;
  std::string label;
  std::string model;
  std::string path;  // relative paths resolve against the manifest's directory

  friend bool operator==(const ManifestRecord&, const ManifestRecord&) = default;
};

/// Dataset manifest: one record per (sample, model) feature file.
struct DatasetManifest {
  std::vector<ManifestRecord> records;
  std::filesystem::path base_dir;

  std::filesystem::path resolve(const ManifestRecord& r) const {
    const std::filesystem::path p(r.path);
    return p.is_absolute() ? p : base_dir / p;
  }

  // Distinct model names in lexicographic order.
  std::vector<std::string> model_names() const {
    std::set<std::string> s;
    for (const auto& r : records) s.insert(r.model);
    return {s.begin(), s.end()};
  }
};

inline DatasetManifest parse_manifest(const std::string& text, std::filesystem::path base_dir = {}) {
  DatasetManifest m;
  m.base_dir = std::move(base_dir);
  std::size_t pos = 0;
  std::size_t line_no = 0;
  while (pos < text.size()) {
    const std::size_t start = pos;
    std::size_t end = text.find('\n', pos);
    if (end == std::string::npos) end = text.size();
    const std::string line = text.substr(start, end - start);
    pos = end + 1;
    ++line_no;
    if (line.find('\r') != std::string::npos)
      throw FormatError("manifest line " + std::to_string(line_no) + ": CR line ending", start + line.find('\r'));
    if (line_no == 1) {
      if (line != kManifestHeader)
        throw FormatError("manifest: header must be exactly '" + std::string(kManifestHeader) + "'", start);
      continue;
    }
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::size_t f = 0;
    while (true) {
      const std::size_t comma = line.find(',', f);
      fields.push_back(line.substr(f, comma == std::string::npos ? std::string::npos : comma - f));
      if (comma == std::string::npos) break;
      f = comma + 1;
    }
    if (fields.size() != 4)
      throw FormatError("manifest line " + std::to_string(line_no) + ": expected 4 fields, got " +
                            std::to_string(fields.size()),
                        start);
    for (const auto& field : fields)
      if (field.empty()) throw FormatError("manifest line " + std::to_string(line_no) + ": empty field", start);
    m.records.push_back({fields[0], fields[1], fields[2], fields[3]});
  }
  if (line_no == 0) throw FormatError("manifest: empty file", 0);
  return m;
}

inline DatasetManifest read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IngestionError("cannot open manifest " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  try {
    return parse_manifest(ss.str(), path.parent_path());
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.message(), e.offset());
  }
}

inline std::string format_manifest(const DatasetManifest& m) {
  std::string out = std::string(kManifestHeader) + "\n";
  for (const auto& r : m.records) {
    for (const std::string* f : {&r.sample_id, &r.label, &r.model, &r.path})
      if (f->empty() || f->find_first_of(",\n\r") != std::string::npos)
        throw InvalidArgument("manifest field '" + *f + "' is empty or contains a separator");
    out += r.sample_id + "," + r.label + "," + r.model + "," + r.path + "\n";
  }
  return out;
}

inline void write_manifest(const std::filesystem::path& path, const DatasetManifest& m) {
  const std::string text = format_manifest(m);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

struct AssembleOptions {
  // Scale every feature vector to unit Euclidean norm before stacking.
  bool unit_norm = false;
  // Fixed class list (e.g. a trained model's); labels outside it are
  // rejected. When absent the sorted distinct labels are used.
  std::optional<std::vector<std::string>> class_names;
  // Pad every model column to this length instead of the largest
  // vector found.
  std::optional<std::size_t> feature_dim;
};

/// Per-sample order-2 tensors (feature_dim x n_models) with dense labels.
struct AssembledSet {
  std::vector<Tensor> tensors;
  std::vector<int> labels;  // 1..L, index into class_names + 1
  std::vector<std::string> sample_ids;
  std::vector<std::string> class_names;
  std::vector<std::string> models;
  std::size_t feature_dim = 0;
  std::vector<std::size_t> model_dims;  // raw vector length per model before padding

  bool padded() const {
    return std::any_of(model_dims.begin(), model_dims.end(), [&](std::size_t d) { return d != feature_dim; });
  }

  LabeledSamples labeled() const {
    return LabeledSamples(tensors, labels, static_cast<int>(class_names.size()));
  }
};

/// Builds one (feature_dim x n_models) tensor per sample: column m holds
/// the flattened feature vector of models[m], zero-padded to the common
/// length. Samples are ordered by sample_id, so manifest row order never
/// matters.
inline AssembledSet assemble(const DatasetManifest& manifest, std::vector<std::string> models,
                             const AssembleOptions& opts = {}) {
  if (models.empty()) models = manifest.model_names();
  if (models.empty()) throw IngestionError("assemble: manifest has no records");
  {
    std::set<std::string> seen;
    for (const auto& m : models)
      if (!seen.insert(m).second) throw InvalidArgument("assemble: model '" + m + "' requested twice");
  }
  std::map<std::string, std::size_t> model_index;
  for (std::size_t i = 0; i < models.size(); ++i) model_index[models[i]] = i;

  struct SampleEntry {
    std::string label;
    std::vector<const ManifestRecord*> files;
  };
  std::map<std::string, SampleEntry> samples;
  std::vector<std::string> problems;
  for (const auto& r : manifest.records) {
    auto [it, inserted] = samples.try_emplace(r.sample_id, SampleEntry{r.label, {}});
    auto& entry = it->second;
    if (inserted) entry.files.assign(models.size(), nullptr);
    if (entry.label != r.label)
      problems.push_back("sample '" + r.sample_id + "' has conflicting labels '" + entry.label + "' and '" + r.label + "'");
    const auto mi = model_index.find(r.model);
    if (mi == model_index.end()) continue;
    if (entry.files[mi->second])
      problems.push_back("sample '" + r.sample_id + "' lists model '" + r.model + "' twice");
    entry.files[mi->second] = &r;
  }
  for (const auto& [id, entry] : samples)
    for (std::size_t m = 0; m < models.size(); ++m)
      if (!entry.files[m]) problems.push_back("sample '" + id + "' is missing model '" + models[m] + "'");
  if (!problems.empty()) {
    std::string msg = "manifest is inconsistent:";
    const std::size_t shown = std::min<std::size_t>(problems.size(), 20);
    for (std::size_t i = 0; i < shown; ++i) msg += "\n  " + problems[i];
    if (problems.size() > shown) msg += "\n  ... and " + std::to_string(problems.size() - shown) + " more";
    throw IngestionError(msg);
  }

  AssembledSet out;
  out.models = models;
  if (opts.class_names) {
    out.class_names = *opts.class_names;
  } else {
    std::set<std::string> names;
    for (const auto& [id, entry] : samples) names.insert(entry.label);
    out.class_names.assign(names.begin(), names.end());
  }
  std::map<std::string, int> class_id;
  for (std::size_t i = 0; i < out.class_names.size(); ++i) class_id[out.class_names[i]] = static_cast<int>(i) + 1;

  // Load every vector first; dims must agree within a model column.
  std::vector<std::vector<std::vector<double>>> vectors;
  vectors.reserve(samples.size());
  out.model_dims.assign(models.size(), 0);
  for (const auto& [id, entry] : samples) {
    const auto cid = class_id.find(entry.label);
    if (cid == class_id.end())
      throw InvalidArgument("assemble: sample '" + id + "' has label '" + entry.label + "' unknown to the model");
    std::vector<std::vector<double>> per_model(models.size());
    for (std::size_t m = 0; m < models.size(); ++m) {
      const Tensor t = read_feature(manifest.resolve(*entry.files[m]));
      per_model[m].assign(t.data().begin(), t.data().end());
      if (out.model_dims[m] == 0) {
        out.model_dims[m] = t.size();
      } else if (out.model_dims[m] != t.size()) {
        throw IngestionError("assemble: model '" + models[m] + "' has vectors of length " +
                             std::to_string(out.model_dims[m]) + " and " + std::to_string(t.size()) + " (sample '" +
                             id + "')");
      }
      if (opts.unit_norm) {
        double norm = 0.0;
        for (double v : per_model[m]) norm += v * v;
        norm = std::sqrt(norm);
        if (norm > 0.0)
          for (double& v : per_model[m]) v /= norm;
      }
    }
    out.sample_ids.push_back(id);
    out.labels.push_back(cid->second);
    vectors.push_back(std::move(per_model));
  }

  out.feature_dim = *std::max_element(out.model_dims.begin(), out.model_dims.end());
  if (opts.feature_dim) {
    if (*opts.feature_dim < out.feature_dim)
      throw InvalidArgument("assemble: feature vectors of length " + std::to_string(out.feature_dim) +
                            " exceed the expected length " + std::to_string(*opts.feature_dim));
    out.feature_dim = *opts.feature_dim;
  }
  const std::size_t n_models = models.size();
  out.tensors.reserve(vectors.size());
  for (const auto& per_model : vectors) {
    std::vector<double> data(out.feature_dim * n_models, 0.0);
    for (std::size_t m = 0; m < n_models; ++m)
      for (std::size_t f = 0; f < per_model[m].size(); ++f) data[f * n_models + m] = per_model[m][f];
    out.tensors.emplace_back(Shape{out.feature_dim, n_models}, std::move(data));
  }
  return out;
}

}  // namespace mslkit
