#pragma once

// 1-nearest-neighbour classification and the accuracy metrics built on a
// confusion matrix: overall accuracy, Cohen's kappa, per-class accuracy.

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <ostream>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "tpca/errors.hpp"
#include "tpca/parallel.hpp"

namespace tpca {

using ClassId = std::uint16_t;

/// Brute-force Euclidean 1-NN. Ties go to the lowest training index.
class NearestNeighbor {
 public:
  NearestNeighbor(Eigen::MatrixXd train, std::vector<ClassId> labels)
      : train_(std::move(train)), labels_(std::move(labels)) {
    if (train_.rows() == 0) throw ConfigError("1-NN: empty training set");
    if (static_cast<std::size_t>(train_.rows()) != labels_.size())
      throw ShapeError("1-NN: training features and labels differ in count");
    // Samples as columns so each distance scan reads contiguous memory.
    train_.transposeInPlace();
  }

  std::size_t dim() const { return static_cast<std::size_t>(train_.rows()); }
  std::size_t size() const { return labels_.size(); }

  /// Index of the nearest training sample.
  std::size_t nearest(const Eigen::Ref<const Eigen::VectorXd>& query) const {
    if (static_cast<std::size_t>(query.size()) != dim())
      throw ShapeError("1-NN: query has dimension " + std::to_string(query.size()) + ", training has " +
                       std::to_string(dim()));
    std::size_t best = 0;
    double best_d2 = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < train_.cols(); ++i) {
      const double d2 = (train_.col(i) - query).squaredNorm();
      if (d2 < best_d2) {
        best_d2 = d2;
        best = static_cast<std::size_t>(i);
      }
    }
    return best;
  }

  ClassId classify(const Eigen::Ref<const Eigen::VectorXd>& query) const { return labels_[nearest(query)]; }

  /// Classifies each row of `queries`.
  std::vector<ClassId> classify_rows(const Eigen::MatrixXd& queries) const {
    if (static_cast<std::size_t>(queries.cols()) != dim()) throw ShapeError("1-NN: query dimension mismatch");
    const Eigen::MatrixXd qt = queries.transpose();
    std::vector<ClassId> out(static_cast<std::size_t>(queries.rows()));
    parallel_for(out.size(), [&](std::size_t i) { out[i] = classify(qt.col(static_cast<Eigen::Index>(i))); });
    return out;
  }

 private:
  Eigen::MatrixXd train_;
  std::vector<ClassId> labels_;
};

/// Rows are truth, columns are prediction, both indexed by position in
/// `classes` (sorted class ids).
class ConfusionMatrix {
 public:
  explicit ConfusionMatrix(std::vector<ClassId> classes) : classes_(std::move(classes)) {
    std::ranges::sort(classes_);
    if (std::ranges::adjacent_find(classes_) != classes_.end()) throw ConfigError("confusion: duplicate class ids");
    counts_.assign(classes_.size() * classes_.size(), 0);
  }

  std::size_t size() const { return classes_.size(); }
  const std::vector<ClassId>& classes() const { return classes_; }

  std::uint64_t operator()(std::size_t truth, std::size_t pred) const { return counts_[truth * size() + pred]; }
  std::uint64_t& operator()(std::size_t truth, std::size_t pred) { return counts_[truth * size() + pred]; }

  std::size_t index_of(ClassId id) const {
    auto it = std::ranges::lower_bound(classes_, id);
    if (it == classes_.end() || *it != id) throw ConfigError("confusion: unknown class id " + std::to_string(id));
    return static_cast<std::size_t>(it - classes_.begin());
  }

  void add(ClassId truth, ClassId pred) { ++(*this)(index_of(truth), index_of(pred)); }

  std::uint64_t total() const {
    std::uint64_t t = 0;
    for (auto c : counts_) t += c;
    return t;
  }
  std::uint64_t trace() const {
    std::uint64_t t = 0;
    for (std::size_t k = 0; k < size(); ++k) t += (*this)(k, k);
    return t;
  }
  std::uint64_t row_sum(std::size_t r) const {
    std::uint64_t t = 0;
    for (std::size_t c = 0; c < size(); ++c) t += (*this)(r, c);
    return t;
  }
  std::uint64_t col_sum(std::size_t c) const {
    std::uint64_t t = 0;
    for (std::size_t r = 0; r < size(); ++r) t += (*this)(r, c);
    return t;
  }

  const std::vector<std::uint64_t>& counts() const { return counts_; }

  /// Builds a matrix from explicit counts, row-major.
  static ConfusionMatrix from_counts(std::vector<ClassId> classes, std::span<const std::uint64_t> counts) {
    ConfusionMatrix cm(std::move(classes));
    if (counts.size() != cm.counts_.size()) throw ShapeError("confusion: count table has the wrong size");
    std::ranges::copy(counts, cm.counts_.begin());
    return cm;
  }

 private:
  std::vector<ClassId> classes_;
  std::vector<std::uint64_t> counts_;
};

/// Tallies (truth, pred) pairs; the class set is the union of both lists
/// unless given explicitly.
inline ConfusionMatrix confusion(std::span<const ClassId> truth, std::span<const ClassId> pred,
                                 std::vector<ClassId> classes = {}) {
  if (truth.size() != pred.size()) throw ShapeError("confusion: truth and prediction lengths differ");
  if (truth.empty()) throw ConfigError("confusion: no samples, metrics undefined");
  if (classes.empty()) {
    classes.assign(truth.begin(), truth.end());
    classes.insert(classes.end(), pred.begin(), pred.end());
    std::ranges::sort(classes);
    classes.erase(std::unique(classes.begin(), classes.end()), classes.end());
  }
  ConfusionMatrix cm(std::move(classes));
  for (std::size_t i = 0; i < truth.size(); ++i) cm.add(truth[i], pred[i]);
  return cm;
}

inline double overall_accuracy(const ConfusionMatrix& cm) {
  const auto total = cm.total();
  if (total == 0) throw ConfigError("overall accuracy: empty confusion matrix");
  return static_cast<double>(cm.trace()) / static_cast<double>(total);
}

/// Expected chance agreement sum_k rowsum_k * colsum_k / total^2.
inline double chance_agreement(const ConfusionMatrix& cm) {
  const auto total = static_cast<double>(cm.total());
  if (total == 0) throw ConfigError("chance agreement: empty confusion matrix");
  double pe = 0.0;
  for (std::size_t k = 0; k < cm.size(); ++k)
    pe += static_cast<double>(cm.row_sum(k)) * static_cast<double>(cm.col_sum(k));
  return pe / (total * total);
}

/// Cohen's kappa: (p_o - p_e) / (1 - p_e).
inline double kappa(const ConfusionMatrix& cm) {
  const double po = overall_accuracy(cm);
  const double pe = chance_agreement(cm);
  if (pe >= 1.0) throw NumericalError("kappa undefined: chance agreement is 1");
  return (po - pe) / (1.0 - pe);
}

/// Diagonal over row sum per class; NaN for classes absent from the truth.
inline std::vector<double> per_class_accuracy(const ConfusionMatrix& cm) {
  std::vector<double> out(cm.size());
  for (std::size_t k = 0; k < cm.size(); ++k) {
    const auto row = cm.row_sum(k);
    out[k] = row == 0 ? std::numeric_limits<double>::quiet_NaN()
                      : static_cast<double>(cm(k, k)) / static_cast<double>(row);
  }
  return out;
}

struct EvalReport {
  double oa = 0.0;
  double kappa = 0.0;
  std::vector<double> per_class;
  ConfusionMatrix confusion{{}};
  std::uint64_t seed = 0;
  std::string extractor;
  std::size_t d = 0;
  std::string classifier = "1nn";
};

inline EvalReport make_report(ConfusionMatrix cm, std::uint64_t seed, std::string extractor, std::size_t d) {
  EvalReport r;
  r.oa = overall_accuracy(cm);
  r.kappa = kappa(cm);
  r.per_class = per_class_accuracy(cm);
  r.confusion = std::move(cm);
  r.seed = seed;
  r.extractor = std::move(extractor);
  r.d = d;
  return r;
}

inline nlohmann::json to_json(const EvalReport& r) {
  nlohmann::json per_class = nlohmann::json::array();
  for (double v : r.per_class) per_class.push_back(std::isnan(v) ? nlohmann::json(nullptr) : nlohmann::json(v));
  return {{"oa", r.oa},
          {"kappa", r.kappa},
          {"per_class", per_class},
          {"classes", r.confusion.classes()},
          {"confusion", r.confusion.counts()},
          {"seed", r.seed},
          {"extractor", r.extractor},
          {"d", r.d},
          {"classifier", r.classifier}};
}

// ---------------------------------------------------------------------------
// Dimension sweeps

struct SweepRow {
  std::string extractor;
  std::size_t d = 0;
  double oa = 0.0;
  double kappa = 0.0;

  friend bool operator<(const SweepRow& a, const SweepRow& b) {
    return std::tie(a.extractor, a.d) < std::tie(b.extractor, b.d);
  }
};

inline void write_sweep_csv(std::ostream& out, std::vector<SweepRow> rows) {
  std::ranges::stable_sort(rows, std::less<>{});
  out << "extractor,d,oa,kappa\n";
  out.precision(17);
  for (const auto& r : rows) out << r.extractor << ',' << r.d << ',' << r.oa << ',' << r.kappa << '\n';
}

}  // namespace tpca
