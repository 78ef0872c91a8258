#pragma once

// Extraction + classification glue shared by the CLI and the integration
// tests: fit an extractor on training pixels, featurize pixels, run 1-NN,
// and score the result.

#include <Eigen/Dense>

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tpca/eval.hpp"
#include "tpca/hsi_data.hpp"
#include "tpca/model_io.hpp"
#include "tpca/parallel.hpp"
#include "tpca/pca.hpp"
#include "tpca/tpca_model.hpp"

namespace tpca {

enum class ExtractorKind { raw, pca, tpca };

inline std::string_view to_string(ExtractorKind k) {
  switch (k) {
    case ExtractorKind::raw: return "raw";
    case ExtractorKind::pca: return "pca";
    case ExtractorKind::tpca: return "tpca";
  }
  return "?";
}

inline ExtractorKind parse_extractor(std::string_view s) {
  if (s == "raw") return ExtractorKind::raw;
  if (s == "pca") return ExtractorKind::pca;
  if (s == "tpca") return ExtractorKind::tpca;
  throw ConfigError("unknown extractor \"" + std::string(s) + "\" (expected raw, pca or tpca)");
}

inline std::vector<ClassId> labels_at(const LabelMap& labels, std::span<const Pixel> pixels) {
  std::vector<ClassId> out;
  out.reserve(pixels.size());
  for (const auto& p : pixels) out.push_back(labels.at(p.row, p.col));
  return out;
}

class FittedExtractor {
 public:
  static FittedExtractor raw(std::size_t bands) { return FittedExtractor(ExtractorKind::raw, bands); }

  static FittedExtractor from(PcaModel m) {
    FittedExtractor e(ExtractorKind::pca, m.dim());
    e.pca_ = std::move(m);
    return e;
  }

  static FittedExtractor from(TpcaModel m) {
    FittedExtractor e(ExtractorKind::tpca, m.dim());
    e.tpca_ = std::move(m);
    return e;
  }

  static FittedExtractor fit(ExtractorKind kind, const HsiCube& cube, std::span<const Pixel> train) {
    switch (kind) {
      case ExtractorKind::raw:
        return raw(cube.bands);
      case ExtractorKind::pca: {
        Eigen::MatrixXd x(static_cast<Eigen::Index>(train.size()), static_cast<Eigen::Index>(cube.bands));
        for (std::size_t i = 0; i < train.size(); ++i)
          x.row(static_cast<Eigen::Index>(i)) = spectrum_vector(cube, train[i].row, train[i].col).transpose();
        return from(fit_pca(x));
      }
      case ExtractorKind::tpca: {
        std::vector<CVector> samples(train.size());
        parallel_for(train.size(), [&](std::size_t i) { samples[i] = tensorize(cube, train[i].row, train[i].col); });
        return from(fit_tpca(samples));
      }
    }
    throw ConfigError("unknown extractor");
  }

  /// Reads a model file; shape (1,1) is loaded as PCA, anything else as TPCA.
  static FittedExtractor load(const fs::path& path) {
    TpcaModel t = load_tpca_model(path);
    if (t.shape() == TensorShape{1, 1}) return from(load_pca_model(path));
    return from(std::move(t));
  }

  ExtractorKind kind() const { return kind_; }
  std::size_t dim() const { return dim_; }
  const std::optional<PcaModel>& pca() const { return pca_; }
  const std::optional<TpcaModel>& tpca() const { return tpca_; }

  void save(const fs::path& path) const {
    if (pca_) save_model(*pca_, path);
    else if (tpca_) save_model(*tpca_, path);
    else throw ConfigError("the raw extractor has no model to save");
  }

  /// Feature width for a requested d (raw ignores d and keeps every band).
  std::size_t feature_width(std::size_t d) const {
    if (kind_ == ExtractorKind::raw) return dim_;
    check_feature_count(d, dim_);
    return d;
  }

  /// One feature row per pixel.
  Eigen::MatrixXd features(const HsiCube& cube, std::span<const Pixel> pixels, std::size_t d) const {
    if (cube.bands != dim_)
      throw ShapeError("cube has " + std::to_string(cube.bands) + " bands, extractor expects " + std::to_string(dim_));
    const std::size_t width = feature_width(d);
    Eigen::MatrixXd out(static_cast<Eigen::Index>(pixels.size()), static_cast<Eigen::Index>(width));
    parallel_for(pixels.size(), [&](std::size_t i) {
      const auto row = static_cast<Eigen::Index>(i);
      const Pixel p = pixels[i];
      switch (kind_) {
        case ExtractorKind::raw:
          out.row(row) = spectrum_vector(cube, p.row, p.col).transpose();
          break;
        case ExtractorKind::pca:
          out.row(row) = pca_->transform(spectrum_vector(cube, p.row, p.col), width).transpose();
          break;
        case ExtractorKind::tpca:
          out.row(row) = tpca_->transform(tensorize(cube, p.row, p.col), width).transpose();
          break;
      }
    });
    return out;
  }

 private:
  FittedExtractor(ExtractorKind kind, std::size_t dim) : kind_(kind), dim_(dim) {}

  ExtractorKind kind_;
  std::size_t dim_;
  std::optional<PcaModel> pca_;
  std::optional<TpcaModel> tpca_;
};

/// 1-NN predictions for `query` pixels given features of the train split.
inline std::vector<ClassId> classify_pixels(const Eigen::MatrixXd& train_features, std::vector<ClassId> train_labels,
                                            const Eigen::MatrixXd& query_features) {
  const NearestNeighbor nn(train_features, std::move(train_labels));
  return nn.classify_rows(query_features);
}

struct RunResult {
  EvalReport report;
  std::vector<ClassId> test_predictions;  // aligned with split.test
};

/// Featurizes both halves of the split, classifies the test half and scores it.
inline RunResult evaluate_split(const HsiCube& cube, const LabelMap& labels, const Split& split,
                                const FittedExtractor& extractor, std::size_t d, std::uint64_t seed) {
  const std::size_t width = extractor.feature_width(d);
  const Eigen::MatrixXd train = extractor.features(cube, split.train, width);
  const Eigen::MatrixXd test = extractor.features(cube, split.test, width);
  RunResult out;
  out.test_predictions = classify_pixels(train, labels_at(labels, split.train), test);
  const auto truth = labels_at(labels, split.test);
  out.report = make_report(confusion(truth, out.test_predictions, labels.classes()), seed,
                           std::string(to_string(extractor.kind())), width);
  return out;
}

/// Splits with `seed`, fits `kind` on the training pixels and evaluates.
inline RunResult run_once(const HsiCube& cube, const LabelMap& labels, ExtractorKind kind, std::size_t d,
                          const SplitSpec& spec) {
  const Split s = split(labels, spec);
  const FittedExtractor ex = FittedExtractor::fit(kind, cube, s.train);
  return evaluate_split(cube, labels, s, ex, d, spec.seed);
}

/// OA/kappa for PCA and TPCA at every d in `dims`, on one split. Each
/// extractor is fitted once; features are computed at the largest d and
/// truncated, which equals transforming at each d since every transform
/// keeps a prefix.
inline std::vector<SweepRow> sweep_split(const HsiCube& cube, const LabelMap& labels, const Split& split,
                                         std::span<const std::size_t> dims) {
  if (dims.empty()) throw ConfigError("sweep: empty dims list");
  std::size_t top = 0;
  for (auto d : dims) {
    check_feature_count(d, cube.bands);
    top = std::max(top, d);
  }
  const auto train_labels = labels_at(labels, split.train);
  const auto truth = labels_at(labels, split.test);
  std::vector<SweepRow> rows;
  for (ExtractorKind kind : {ExtractorKind::pca, ExtractorKind::tpca}) {
    const FittedExtractor ex = FittedExtractor::fit(kind, cube, split.train);
    const Eigen::MatrixXd train = ex.features(cube, split.train, top);
    const Eigen::MatrixXd test = ex.features(cube, split.test, top);
    for (auto d : dims) {
      const auto cols = static_cast<Eigen::Index>(d);
      const auto pred = classify_pixels(train.leftCols(cols), train_labels, test.leftCols(cols));
      const auto cm = confusion(truth, pred, labels.classes());
      rows.push_back({std::string(to_string(kind)), d, overall_accuracy(cm), kappa(cm)});
    }
  }
  std::ranges::stable_sort(rows, std::less<>{});
  return rows;
}

}  // namespace tpca
