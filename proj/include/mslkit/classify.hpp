#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mslkit/errors.hpp"
#include "mslkit/parallel.hpp"
#include "mslkit/tensor.hpp"

namespace mslkit {

inline double cosine(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size())
    throw InvalidArgument("cosine: vector lengths " + std::to_string(a.size()) + " and " + std::to_string(b.size()) +
                          " differ");
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) throw InvalidArgument("cosine: zero vector");
  return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), -1.0, 1.0);
}

/// Projected training vectors (one row per sample) with their class ids
/// in 1..L.
class Gallery {
 public:
  Gallery() = default;

  Gallery(Matrix vectors, std::vector<int> labels, std::vector<std::string> class_names)
      : vectors_(std::move(vectors)), labels_(std::move(labels)), class_names_(std::move(class_names)) {
    if (vectors_.rows() == 0) throw InvalidArgument("Gallery: no rows");
    if (labels_.size() != vectors_.rows())
      throw InvalidArgument("Gallery: " + std::to_string(vectors_.rows()) + " rows but " +
                            std::to_string(labels_.size()) + " labels");
    const int L = static_cast<int>(class_names_.size());
    for (std::size_t r = 0; r < vectors_.rows(); ++r) {
      if (labels_[r] < 1 || labels_[r] > L)
        throw InvalidArgument("Gallery: label " + std::to_string(labels_[r]) + " outside 1.." + std::to_string(L));
      const auto row = vectors_.row(r);
      if (std::all_of(row.begin(), row.end(), [](double v) { return v == 0.0; }))
        throw InvalidArgument("Gallery: row " + std::to_string(r) + " is the zero vector");
    }
  }

  const Matrix& vectors() const noexcept { return vectors_; }
  const std::vector<int>& labels() const noexcept { return labels_; }
  const std::vector<std::string>& class_names() const noexcept { return class_names_; }
  std::size_t width() const noexcept { return vectors_.cols(); }
  int num_classes() const noexcept { return static_cast<int>(class_names_.size()); }

 private:
  Matrix vectors_;
  std::vector<int> labels_;
  std::vector<std::string> class_names_;
};

struct Prediction {
  int label = 0;
  double score = 0.0;
  std::size_t row = 0;
  std::vector<double> scores;
};

/// 1-NN by cosine similarity; ties go to the lowest gallery row.
inline Prediction predict(std::span<const double> probe, const Gallery& g) {
  if (probe.size() != g.width())
    throw InvalidArgument("predict: probe has dimension " + std::to_string(probe.size()) + ", gallery width is " +
                          std::to_string(g.width()));
  Prediction p;
  p.scores.resize(g.vectors().rows());
  for (std::size_t r = 0; r < p.scores.size(); ++r) p.scores[r] = cosine(probe, g.vectors().row(r));
  p.row = static_cast<std::size_t>(std::max_element(p.scores.begin(), p.scores.end()) - p.scores.begin());
  p.score = p.scores[p.row];
  p.label = g.labels()[p.row];
  return p;
}

struct EvalReport {
  double accuracy = 0.0;
  std::vector<double> per_class_accuracy;
  std::vector<std::vector<std::size_t>> confusion;  // [true - 1][pred - 1]
  std::vector<double> auc_per_class;
  double micro_auc = 0.0;
  std::size_t n_test = 0;
  std::vector<std::string> class_names;
};

/// Area under the ROC curve by the trapezoid rule. Equal scores form one
/// step of the curve. Degenerate inputs (no positives or no negatives)
/// return 0.5.
inline double roc_auc(std::span<const double> scores, const std::vector<bool>& positive) {
  if (positive.size() != scores.size()) throw InvalidArgument("roc_auc: score and label counts differ");
  const std::size_t n = scores.size();
  std::size_t n_pos = 0;
  for (bool b : positive) n_pos += b;
  const std::size_t n_neg = n - n_pos;
  if (n_pos == 0 || n_neg == 0) return 0.5;
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  double area = 0.0;
  double tp = 0.0, fp = 0.0;
  std::size_t i = 0;
  while (i < n) {
    const double s = scores[order[i]];
    double dtp = 0.0, dfp = 0.0;
    while (i < n && scores[order[i]] == s) {
      if (positive[order[i]]) dtp += 1.0;
      else dfp += 1.0;
      ++i;
    }
    area += dfp * (tp + 0.5 * dtp);
    tp += dtp;
    fp += dfp;
  }
  return area / (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

/// Accuracy, confusion matrix and one-vs-rest AUCs. The ROC score of a
/// probe for class c is its best cosine over class c's gallery rows.
inline EvalReport evaluate(const Matrix& probes, std::span<const int> truth, const Gallery& g) {
  if (probes.rows() == 0) throw InvalidArgument("evaluate: no probes");
  if (truth.size() != probes.rows())
    throw InvalidArgument("evaluate: " + std::to_string(probes.rows()) + " probes but " +
                          std::to_string(truth.size()) + " labels");
  const int L = g.num_classes();
  for (int t : truth)
    if (t < 1 || t > L)
      throw InvalidArgument("evaluate: probe class id " + std::to_string(t) + " is not in the gallery's label set");

  const std::size_t n = probes.rows();
  std::vector<Prediction> preds(n);
  parallel_for(n, [&](std::size_t i) { preds[i] = predict(probes.row(i), g); });

  EvalReport rep;
  rep.n_test = n;
  rep.class_names = g.class_names();
  const auto Ls = static_cast<std::size_t>(L);
  rep.confusion.assign(Ls, std::vector<std::size_t>(Ls, 0));
  std::vector<double> class_score(n * Ls, -2.0);
  for (std::size_t i = 0; i < n; ++i) {
    ++rep.confusion[static_cast<std::size_t>(truth[i] - 1)][static_cast<std::size_t>(preds[i].label - 1)];
    for (std::size_t r = 0; r < preds[i].scores.size(); ++r) {
      double& s = class_score[i * Ls + static_cast<std::size_t>(g.labels()[r] - 1)];
      s = std::max(s, preds[i].scores[r]);
    }
  }

  std::size_t correct = 0;
  rep.per_class_accuracy.assign(Ls, 0.0);
  for (std::size_t c = 0; c < Ls; ++c) {
    correct += rep.confusion[c][c];
    std::size_t row_total = 0;
    for (std::size_t v : rep.confusion[c]) row_total += v;
    rep.per_class_accuracy[c] =
        row_total ? static_cast<double>(rep.confusion[c][c]) / static_cast<double>(row_total) : 0.0;
  }
  rep.accuracy = static_cast<double>(correct) / static_cast<double>(n);

  rep.auc_per_class.assign(Ls, 0.5);
  std::vector<double> pooled_scores;
  std::vector<bool> pooled_pos;
  pooled_scores.reserve(n * Ls);
  pooled_pos.reserve(n * Ls);
  for (std::size_t c = 0; c < Ls; ++c) {
    std::vector<double> s(n);
    std::vector<bool> pos(n);
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = class_score[i * Ls + c];
      pos[i] = static_cast<std::size_t>(truth[i] - 1) == c;
      pooled_scores.push_back(s[i]);
      pooled_pos.push_back(pos[i]);
    }
    rep.auc_per_class[c] = roc_auc(s, pos);
  }
  rep.micro_auc = roc_auc(pooled_scores, pooled_pos);
  return rep;
}

}  // namespace mslkit
