#pragma once

// Trained model container (integers little-endian):
//
//   offset  size   field
//   0       4      magic "MSLM"
//   4       4      format version (u32, currently 1)
//   8       8      metadata length L (u64)
//   16      L      metadata, UTF-8 JSON (method, options, dims, labels,
//                  class names, spectra, MDA fit report)
//   16+L    ...    float64 payload: every stage matrix in stage/mode
//                  order (row-major, input_dims x output_dims), then the
//                  gallery (rows x cols, row-major)

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mslkit/errors.hpp"
#include "mslkit/feature_file.hpp"
#include "mslkit/model.hpp"

namespace mslkit {

inline constexpr std::uint32_t kModelFormatVersion = 1;

namespace detail {

inline nlohmann::json report_to_json(const MdaReport& r) {
  return {{"iterations_used", r.iterations_used}, {"converged", r.converged}, {"final_deltas", r.final_deltas},
          {"thresholds", r.thresholds},           {"objective", r.objective}};
}

inline MdaReport report_from_json(const nlohmann::json& j) {
  MdaReport r;
  r.iterations_used = j.at("iterations_used").get<int>();
  r.converged = j.at("converged").get<bool>();
  r.final_deltas = j.at("final_deltas").get<std::vector<double>>();
  r.thresholds = j.at("thresholds").get<std::vector<double>>();
  r.objective = j.at("objective").get<std::vector<double>>();
  return r;
}

inline Stage parse_stage(const std::string& s) {
  for (Stage st : {Stage::Hosvd, Stage::Howsvd, Stage::Mda, Stage::Lda})
    if (s == stage_name(st)) return st;
  throw InvalidArgument("unknown stage '" + s + "'");
}

}  // namespace detail

inline std::vector<std::uint8_t> encode_model(const TrainedModel& m) {
  nlohmann::json meta;
  meta["method"] = method_name(m.method);
  meta["energy"] = m.energy;
  meta["centered"] = m.centered;
  meta["unit_norm"] = m.unit_norm;
  meta["gamma"] = m.gamma;
  meta["mode_order"] = {"feature", "model"};
  meta["models"] = m.models;
  meta["feature_dim"] = m.feature_dim;
  meta["stages"] = nlohmann::json::array();
  for (const auto& s : m.stages)
    meta["stages"].push_back({{"stage", stage_name(s.stage)},
                              {"input_dims", s.input_dims},
                              {"output_dims", s.output_dims},
                              {"spectra", s.spectra}});
  meta["gallery"] = {{"rows", m.gallery.vectors().rows()},
                     {"cols", m.gallery.vectors().cols()},
                     {"labels", m.gallery.labels()},
                     {"class_names", m.gallery.class_names()}};
  meta["mda_report"] = m.mda_report ? detail::report_to_json(*m.mda_report) : nlohmann::json(nullptr);
  const std::string text = meta.dump();

  std::vector<std::uint8_t> out{'M', 'S', 'L', 'M'};
  detail::put_le(out, kModelFormatVersion, 4);
  detail::put_le(out, text.size(), 8);
  out.insert(out.end(), text.begin(), text.end());
  auto put_matrix = [&](const Matrix& x) {
    for (double v : x.data()) detail::put_le(out, std::bit_cast<std::uint64_t>(v), 8);
  };
  for (const auto& s : m.stages)
    for (const auto& mat : s.matrices) put_matrix(mat);
  put_matrix(m.gallery.vectors());
  return out;
}

inline TrainedModel decode_model(const std::vector<std::uint8_t>& bytes) {
  const std::uint8_t* p = bytes.data();
  const std::size_t n = bytes.size();
  if (n < 4 || std::memcmp(p, "MSLM", 4) != 0) throw FormatError("model file: bad magic", 0);
  if (n < 16) throw FormatError("model file: truncated header", n);
  const auto version = static_cast<std::uint32_t>(detail::get_le(p + 4, 4));
  if (version != kModelFormatVersion)
    throw UnsupportedVersion("model file: unsupported format version " + std::to_string(version) + " (expected " +
                             std::to_string(kModelFormatVersion) + ")");
  const std::uint64_t meta_len = detail::get_le(p + 8, 8);
  if (meta_len > n - 16) throw FormatError("model file: truncated metadata", n);

  TrainedModel m;
  std::size_t cursor = 16 + meta_len;
  try {
    const auto meta = nlohmann::json::parse(p + 16, p + 16 + meta_len);
    const auto method = parse_method(meta.at("method").get<std::string>());
    if (!method) throw InvalidArgument("unknown method");
    m.method = *method;
    m.energy = meta.at("energy").get<double>();
    m.centered = meta.at("centered").get<bool>();
    m.unit_norm = meta.at("unit_norm").get<bool>();
    m.gamma = meta.at("gamma").get<double>();
    m.models = meta.at("models").get<std::vector<std::string>>();
    m.feature_dim = meta.at("feature_dim").get<std::size_t>();

    auto take_matrix = [&](std::size_t rows, std::size_t cols) {
      if (rows > (std::size_t{1} << 32) || cols > (std::size_t{1} << 32) ||
          (n - cursor) / 8 < rows * cols)
        throw FormatError("model file: truncated payload", n);
      std::vector<double> data(rows * cols);
      for (double& v : data) {
        v = std::bit_cast<double>(detail::get_le(p + cursor, 8));
        if (!std::isfinite(v)) throw FormatError("model file: non-finite value", cursor);
        cursor += 8;
      }
      return Matrix(rows, cols, std::move(data));
    };

    for (const auto& js : meta.at("stages")) {
      ModeBasis b;
      b.stage = detail::parse_stage(js.at("stage").get<std::string>());
      b.input_dims = js.at("input_dims").get<std::vector<std::size_t>>();
      b.output_dims = js.at("output_dims").get<std::vector<std::size_t>>();
      b.spectra = js.at("spectra").get<std::vector<std::vector<double>>>();
      if (b.input_dims.size() != b.output_dims.size())
        throw InvalidArgument("stage dims disagree in order");
      for (std::size_t k = 0; k < b.input_dims.size(); ++k)
        b.matrices.push_back(take_matrix(b.input_dims[k], b.output_dims[k]));
      m.stages.push_back(std::move(b));
    }
    const auto& g = meta.at("gallery");
    Matrix vectors = take_matrix(g.at("rows").get<std::size_t>(), g.at("cols").get<std::size_t>());
    m.gallery = Gallery(std::move(vectors), g.at("labels").get<std::vector<int>>(),
                        g.at("class_names").get<std::vector<std::string>>());
    if (!meta.at("mda_report").is_null()) m.mda_report = detail::report_from_json(meta.at("mda_report"));
  } catch (const FormatError&) {
    throw;
  } catch (const std::exception& e) {
    throw FormatError(std::string("model file: malformed metadata: ") + e.what(), 16);
  }
  if (cursor != n) throw FormatError("model file: trailing bytes", cursor);
  return m;
}

inline void save_model(const std::filesystem::path& path, const TrainedModel& m) {
  detail::write_file_bytes(path, encode_model(m));
}

inline TrainedModel load_model(const std::filesystem::path& path) {
  try {
    return decode_model(detail::read_file_bytes(path));
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.message(), e.offset());
  }
}

}  // namespace mslkit
