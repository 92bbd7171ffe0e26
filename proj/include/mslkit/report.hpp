#pragma once

// Evaluation report text format, one "key: value" pair per line:
//
//   mslkit-eval-report 1
//   n_test: <int>
//   n_classes: <int>
//   accuracy: <real>
//   micro_auc: <real>
//   class.<c>.name: <string>          c = 1..n_classes
//   class.<c>.accuracy: <real>
//   class.<c>.auc: <real>
//   class.<c>.confusion: <int> ...    predicted counts for true class c
//
// Reals are printed with 17 significant digits.

#include <cstddef>
#include <iomanip>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "mslkit/classify.hpp"
#include "mslkit/errors.hpp"

namespace mslkit {

inline constexpr const char* kReportMagic = "mslkit-eval-report 1";

inline std::string format_report(const EvalReport& r) {
  std::ostringstream os;
  os << std::setprecision(17);
  os << kReportMagic << "\n";
  os << "n_test: " << r.n_test << "\n";
  os << "n_classes: " << r.class_names.size() << "\n";
  os << "accuracy: " << r.accuracy << "\n";
  os << "micro_auc: " << r.micro_auc << "\n";
  for (std::size_t c = 0; c < r.class_names.size(); ++c) {
    const std::string key = "class." + std::to_string(c + 1) + ".";
    os << key << "name: " << r.class_names[c] << "\n";
    os << key << "accuracy: " << r.per_class_accuracy[c] << "\n";
    os << key << "auc: " << r.auc_per_class[c] << "\n";
    os << key << "confusion:";
    for (std::size_t v : r.confusion[c]) os << ' ' << v;
    os << "\n";
  }
  return os.str();
}

inline EvalReport parse_report(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != kReportMagic) throw FormatError("report: missing header line", 0);
  std::map<std::string, std::string> kv;
  std::size_t offset = line.size() + 1;
  while (std::getline(in, line)) {
    const std::size_t colon = line.find(": ");
    if (colon == std::string::npos) {
      if (line.empty()) {
        offset += 1;
        continue;
      }
      throw FormatError("report: line without 'key: value'", offset);
    }
    kv[line.substr(0, colon)] = line.substr(colon + 2);
    offset += line.size() + 1;
  }
  auto get = [&](const std::string& key) -> const std::string& {
    const auto it = kv.find(key);
    if (it == kv.end()) throw FormatError("report: missing key '" + key + "'", 0);
    return it->second;
  };
  EvalReport r;
  r.n_test = std::stoull(get("n_test"));
  const std::size_t L = std::stoull(get("n_classes"));
  r.accuracy = std::stod(get("accuracy"));
  r.micro_auc = std::stod(get("micro_auc"));
  for (std::size_t c = 0; c < L; ++c) {
    const std::string key = "class." + std::to_string(c + 1) + ".";
    r.class_names.push_back(get(key + "name"));
    r.per_class_accuracy.push_back(std::stod(get(key + "accuracy")));
    r.auc_per_class.push_back(std::stod(get(key + "auc")));
    std::istringstream row(get(key + "confusion"));
    std::vector<std::size_t> counts;
    std::size_t v = 0;
    while (row >> v) counts.push_back(v);
    if (counts.size() != L) throw FormatError("report: confusion row " + std::to_string(c + 1) + " has wrong length", 0);
    r.confusion.push_back(std::move(counts));
  }
  return r;
}

}  // namespace mslkit
