#pragma once

// Command implementations behind the `tpca` executable. Each command reads
// a flat JSON config, validates all of it (including the cube sidecar)
// before touching payloads, and writes fixed file names into the output
// directory:
//
//   split.json  model.tpca  features.csv  predictions.labels  report.json
//   sweep.csv   map.ppm
//
// Errors surface as exceptions; exit_code() maps them to process codes.

#include <nlohmann/json.hpp>

#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "tpca/errors.hpp"
#include "tpca/eval.hpp"
#include "tpca/hsi_data.hpp"
#include "tpca/pipeline.hpp"
#include "tpca/synthetic.hpp"

namespace tpca::cli {

using Rgb = std::array<std::uint8_t, 3>;

enum ExitCode : int { kOk = 0, kFailure = 1, kConfigError = 2, kDataError = 3, kNumericalError = 4 };

enum class Command { fit, transform, classify, evaluate, sweep, render_map };

inline Command parse_command(std::string_view s) {
  if (s == "fit") return Command::fit;
  if (s == "transform") return Command::transform;
  if (s == "classify") return Command::classify;
  if (s == "evaluate") return Command::evaluate;
  if (s == "sweep") return Command::sweep;
  if (s == "render-map") return Command::render_map;
  throw ConfigError("unknown command \"" + std::string(s) + "\"");
}

struct PipelineConfig {
  fs::path cube;
  fs::path labels;
  ExtractorKind extractor = ExtractorKind::tpca;
  std::size_t d = 0;
  double train_fraction = 0.10;
  std::uint64_t seed = 0;
  std::size_t repetitions = 10;
  fs::path output_dir;
  std::vector<std::size_t> dims;
  std::map<ClassId, Rgb> palette;
};

struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::string> extractor;
  std::optional<std::size_t> d;
};

namespace detail {

template <typename T>
T field(const nlohmann::json& j, const char* key, const std::string& source) {
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError(source + ": field \"" + key + "\" is missing or has the wrong type");
  }
}

inline bool is_count(const nlohmann::json& v) {
  return v.is_number_unsigned() || (v.is_number_integer() && v.get<std::int64_t>() >= 0);
}

inline std::size_t positive(const nlohmann::json& j, const char* key, const std::string& source) {
  if (!j.contains(key) || !is_count(j[key]))
    throw ConfigError(source + ": field \"" + key + "\" must be a non-negative integer");
  const auto v = j[key].get<std::size_t>();
  if (v == 0) throw ConfigError(source + ": field \"" + key + "\" must be >= 1");
  return v;
}

inline Rgb parse_rgb(const nlohmann::json& v, const std::string& where) {
  if (!v.is_array() || v.size() != 3) throw ConfigError(where + ": palette colors are [r, g, b]");
  Rgb out{};
  for (std::size_t k = 0; k < 3; ++k) {
    if (!is_count(v[k]) || v[k].get<unsigned>() > 255)
      throw ConfigError(where + ": palette channels must be integers in [0, 255]");
    out[k] = static_cast<std::uint8_t>(v[k].get<unsigned>());
  }
  return out;
}

}  // namespace detail

/// Parses a config object. Relative paths resolve against `base_dir`.
/// Only train_fraction (0.10) and repetitions (10) have defaults; dims and
/// palette are needed only by the commands that use them.
inline PipelineConfig parse_config(const nlohmann::json& j, const fs::path& base_dir, const Overrides& ov = {},
                                   const std::string& source = "config") {
  if (!j.is_object()) throw ConfigError(source + ": expected a JSON object");
  static const std::set<std::string> known{"cube",        "labels",     "extractor", "d",    "train_fraction",
                                           "seed",        "repetitions", "output_dir", "dims", "palette"};
  for (const auto& [key, _] : j.items())
    if (!known.contains(key)) throw ConfigError(source + ": unknown field \"" + key + "\"");

  auto path = [&](const char* key) {
    fs::path p = detail::field<std::string>(j, key, source);
    return p.is_absolute() ? p : base_dir / p;
  };

  PipelineConfig c;
  c.cube = path("cube");
  c.labels = path("labels");
  c.output_dir = path("output_dir");
  c.extractor = parse_extractor(ov.extractor ? *ov.extractor : detail::field<std::string>(j, "extractor", source));
  if (ov.d) {
    if (*ov.d == 0) throw ConfigError("--d must be >= 1");
    c.d = *ov.d;
  } else {
    c.d = detail::positive(j, "d", source);
  }
  if (ov.seed) c.seed = *ov.seed;
  else if (!j.contains("seed") || !detail::is_count(j["seed"]))
    throw ConfigError(source + ": field \"seed\" must be a non-negative integer");
  else c.seed = j["seed"].get<std::uint64_t>();

  if (j.contains("train_fraction")) {
    if (!j["train_fraction"].is_number()) throw ConfigError(source + ": train_fraction must be a number");
    c.train_fraction = j["train_fraction"].get<double>();
  }
  if (!(c.train_fraction > 0.0 && c.train_fraction < 1.0)) throw ConfigError(source + ": train_fraction must lie in (0, 1)");
  if (j.contains("repetitions")) c.repetitions = detail::positive(j, "repetitions", source);

  if (j.contains("dims")) {
    if (!j["dims"].is_array() || j["dims"].empty()) throw ConfigError(source + ": dims must be a non-empty array");
    for (const auto& v : j["dims"]) {
      if (!detail::is_count(v) || v.get<std::size_t>() == 0)
        throw ConfigError(source + ": dims entries must be integers >= 1");
      c.dims.push_back(v.get<std::size_t>());
    }
  }
  if (j.contains("palette")) {
    if (!j["palette"].is_object()) throw ConfigError(source + ": palette must map class ids to [r, g, b]");
    for (const auto& [key, v] : j["palette"].items()) {
      std::size_t pos = 0;
      unsigned long id = 0;
      try {
        id = std::stoul(key, &pos);
      } catch (const std::exception&) {
        pos = 0;
      }
      if (pos != key.size() || id == 0 || id > 0xFFFF) throw ConfigError(source + ": bad palette class id \"" + key + "\"");
      c.palette[static_cast<ClassId>(id)] = detail::parse_rgb(v, source);
    }
  }
  return c;
}

inline PipelineConfig load_config(const fs::path& path, const Overrides& ov = {}) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return parse_config(j, path.parent_path(), ov, path.string());
}

/// Checks everything that can be checked without reading payloads: files
/// present, sidecar readable, d and dims within the band count, and the
/// per-command fields present.
inline CubeHeader validate(const PipelineConfig& c, Command cmd) {
  for (const auto& p : {c.cube, c.labels})
    if (!fs::exists(p)) throw ConfigError("input file not found: " + p.string());
  CubeHeader h;
  try {
    h = read_cube_header(c.cube);
  } catch (const FormatError& e) {
    throw ConfigError(std::string("cannot read cube sidecar: ") + e.what());
  }
  if (c.extractor != ExtractorKind::raw && c.d > h.bands)
    throw ConfigError("d=" + std::to_string(c.d) + " exceeds the cube's " + std::to_string(h.bands) + " bands");
  if (cmd == Command::sweep) {
    if (c.dims.empty()) throw ConfigError("sweep needs a dims list");
    for (auto d : c.dims)
      if (d > h.bands) throw ConfigError("dims entry " + std::to_string(d) + " exceeds the band count");
  }
  if (cmd == Command::render_map && c.palette.empty()) throw ConfigError("render-map needs a palette");
  return h;
}

struct Inputs {
  HsiCube cube;  // normalized
  LabelMap labels;
};

inline Inputs load_inputs(const PipelineConfig& c) {
  Inputs in{normalize(load_cube(c.cube)), load_labels(c.labels)};
  require_paired(in.cube, in.labels);
  return in;
}

// ---------------------------------------------------------------------------
// Split manifest

inline nlohmann::json split_to_json(const Split& s, const SplitSpec& spec) {
  auto list = [](const std::vector<Pixel>& ps) {
    nlohmann::json a = nlohmann::json::array();
    for (const auto& p : ps) a.push_back({p.row, p.col});
    return a;
  };
  return {{"seed", spec.seed}, {"train_fraction", spec.train_fraction}, {"train", list(s.train)}, {"test", list(s.test)}};
}

inline Split split_from_json(const nlohmann::json& j) {
  Split s;
  try {
    for (const auto& p : j.at("train")) s.train.push_back({p.at(0).get<std::size_t>(), p.at(1).get<std::size_t>()});
    for (const auto& p : j.at("test")) s.test.push_back({p.at(0).get<std::size_t>(), p.at(1).get<std::size_t>()});
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("split manifest: ") + e.what());
  }
  return s;
}

inline void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("cannot write " + path.string());
  out << text;
}

inline nlohmann::json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

inline fs::path out_path(const PipelineConfig& c, const char* name) { return c.output_dir / name; }

struct Fitted {
  Split split;
  FittedExtractor extractor;
};

/// Split + fitted extractor for the configured seed. Reuses split.json and
/// model.tpca from the output directory when they were produced with the
/// same seed, fraction and extractor; otherwise fits and writes them.
inline Fitted fit_or_load(const PipelineConfig& c, const Inputs& in) {
  const SplitSpec spec{c.seed, c.train_fraction};
  const fs::path split_file = out_path(c, "split.json");
  const fs::path model_file = out_path(c, "model.tpca");
  if (fs::exists(split_file)) {
    const auto j = read_json(split_file);
    const bool same = j.value("seed", std::uint64_t{0}) == spec.seed && j.value("train_fraction", -1.0) == spec.train_fraction;
    if (same) {
      Split s = split_from_json(j);
      if (c.extractor == ExtractorKind::raw) return {std::move(s), FittedExtractor::raw(in.cube.bands)};
      if (fs::exists(model_file)) {
        FittedExtractor ex = FittedExtractor::load(model_file);
        if (ex.kind() == c.extractor) {
          if (ex.dim() != in.cube.bands)
            throw ShapeError(model_file.string() + ": model has D=" + std::to_string(ex.dim()) + ", cube has " +
                             std::to_string(in.cube.bands) + " bands");
          return {std::move(s), std::move(ex)};
        }
      }
    }
  }
  Split s = split(in.labels, spec);
  FittedExtractor ex = FittedExtractor::fit(c.extractor, in.cube, s.train);
  fs::create_directories(c.output_dir);
  write_text(split_file, split_to_json(s, spec).dump() + "\n");
  if (c.extractor != ExtractorKind::raw) ex.save(model_file);
  return {std::move(s), std::move(ex)};
}

inline std::vector<Pixel> labeled_pixels(const LabelMap& l) {
  std::vector<Pixel> out;
  for (std::size_t r = 0; r < l.height; ++r)
    for (std::size_t c = 0; c < l.width; ++c)
      if (l.at(r, c) != 0) out.push_back({r, c});
  return out;
}

// ---------------------------------------------------------------------------
// Commands

/// Always refits: writes split.json and (for pca/tpca) model.tpca.
inline void cmd_fit(const PipelineConfig& c) {
  validate(c, Command::fit);
  const Inputs in = load_inputs(c);
  const SplitSpec spec{c.seed, c.train_fraction};
  const Split s = split(in.labels, spec);
  const FittedExtractor ex = FittedExtractor::fit(c.extractor, in.cube, s.train);
  fs::create_directories(c.output_dir);
  write_text(out_path(c, "split.json"), split_to_json(s, spec).dump() + "\n");
  if (c.extractor != ExtractorKind::raw) ex.save(out_path(c, "model.tpca"));
}

/// features.csv: row,col,label,f1..fd for every labeled pixel, row-major.
inline void cmd_transform(const PipelineConfig& c) {
  validate(c, Command::transform);
  const Inputs in = load_inputs(c);
  const Fitted f = fit_or_load(c, in);
  const auto pixels = labeled_pixels(in.labels);
  const std::size_t width = f.extractor.feature_width(c.d);
  const Eigen::MatrixXd feats = f.extractor.features(in.cube, pixels, width);
  std::ostringstream out;
  out.precision(17);
  out << "row,col,label";
  for (std::size_t k = 1; k <= width; ++k) out << ",f" << k;
  out << '\n';
  for (std::size_t i = 0; i < pixels.size(); ++i) {
    out << pixels[i].row << ',' << pixels[i].col << ',' << in.labels.at(pixels[i].row, pixels[i].col);
    for (Eigen::Index k = 0; k < feats.cols(); ++k) out << ',' << feats(static_cast<Eigen::Index>(i), k);
    out << '\n';
  }
  write_text(out_path(c, "features.csv"), out.str());
}

/// Predicts every labeled pixel with 1-NN on the training split, writes
/// predictions.labels (+ sidecar) and report.json for the test pixels.
inline void cmd_classify(const PipelineConfig& c) {
  validate(c, Command::classify);
  const Inputs in = load_inputs(c);
  const Fitted f = fit_or_load(c, in);
  const std::size_t width = f.extractor.feature_width(c.d);
  const RunResult run = evaluate_split(in.cube, in.labels, f.split, f.extractor, width, c.seed);

  const Eigen::MatrixXd train = f.extractor.features(in.cube, f.split.train, width);
  const auto all = labeled_pixels(in.labels);
  const auto pred = classify_pixels(train, labels_at(in.labels, f.split.train), f.extractor.features(in.cube, all, width));
  LabelMap map(in.labels.height, in.labels.width);
  for (std::size_t i = 0; i < all.size(); ++i) map.at(all[i].row, all[i].col) = pred[i];
  save_labels(map, out_path(c, "predictions.labels"));
  write_text(out_path(c, "report.json"), to_json(run.report).dump(2) + "\n");
}

/// Mean over runs; confusion counts are summed.
inline nlohmann::json mean_report(const std::vector<EvalReport>& runs, const PipelineConfig& c) {
  const std::size_t k = runs.front().per_class.size();
  double oa = 0.0, kap = 0.0;
  std::vector<double> pc_sum(k, 0.0);
  std::vector<std::size_t> pc_n(k, 0);
  std::vector<std::uint64_t> counts(runs.front().confusion.counts().size(), 0);
  nlohmann::json list = nlohmann::json::array();
  for (const auto& r : runs) {
    oa += r.oa;
    kap += r.kappa;
    for (std::size_t i = 0; i < k; ++i)
      if (!std::isnan(r.per_class[i])) {
        pc_sum[i] += r.per_class[i];
        ++pc_n[i];
      }
    for (std::size_t i = 0; i < counts.size(); ++i) counts[i] += r.confusion.counts()[i];
    list.push_back(to_json(r));
  }
  const double n = static_cast<double>(runs.size());
  nlohmann::json per_class = nlohmann::json::array();
  for (std::size_t i = 0; i < k; ++i)
    per_class.push_back(pc_n[i] ? nlohmann::json(pc_sum[i] / static_cast<double>(pc_n[i])) : nlohmann::json(nullptr));
  return {{"oa", oa / n},
          {"kappa", kap / n},
          {"per_class", per_class},
          {"classes", runs.front().confusion.classes()},
          {"confusion", counts},
          {"seed", c.seed},
          {"extractor", runs.front().extractor},
          {"d", runs.front().d},
          {"classifier", "1nn"},
          {"repetitions", runs.size()},
          {"runs", list}};
}

/// `repetitions` fresh splits with seeds seed, seed+1, ...; report.json
/// holds the mean plus every run.
inline nlohmann::json cmd_evaluate(const PipelineConfig& c) {
  validate(c, Command::evaluate);
  const Inputs in = load_inputs(c);
  std::vector<EvalReport> runs;
  for (std::size_t i = 0; i < c.repetitions; ++i)
    runs.push_back(run_once(in.cube, in.labels, c.extractor, c.d, {c.seed + i, c.train_fraction}).report);
  nlohmann::json report = mean_report(runs, c);
  fs::create_directories(c.output_dir);
  write_text(out_path(c, "report.json"), report.dump(2) + "\n");
  return report;
}

/// sweep.csv: PCA and TPCA at each d, OA/kappa averaged over repetitions.
inline std::vector<SweepRow> cmd_sweep(const PipelineConfig& c) {
  validate(c, Command::sweep);
  const Inputs in = load_inputs(c);
  std::vector<SweepRow> mean;
  for (std::size_t i = 0; i < c.repetitions; ++i) {
    const Split s = split(in.labels, {c.seed + i, c.train_fraction});
    const auto rows = sweep_split(in.cube, in.labels, s, c.dims);
    if (mean.empty()) {
      mean = rows;
      for (auto& r : mean) r.oa = r.kappa = 0.0;
    }
    for (std::size_t k = 0; k < rows.size(); ++k) {
      mean[k].oa += rows[k].oa;
      mean[k].kappa += rows[k].kappa;
    }
  }
  for (auto& r : mean) {
    r.oa /= static_cast<double>(c.repetitions);
    r.kappa /= static_cast<double>(c.repetitions);
  }
  fs::create_directories(c.output_dir);
  std::ofstream out(out_path(c, "sweep.csv"), std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("cannot write sweep.csv");
  write_sweep_csv(out, mean);
  return mean;
}

/// Binary PPM (P6), one image pixel per map pixel; class 0 is black.
inline std::string render_ppm(const LabelMap& map, const std::map<ClassId, Rgb>& palette) {
  std::string out = "P6\n" + std::to_string(map.width) + " " + std::to_string(map.height) + "\n255\n";
  out.reserve(out.size() + map.labels.size() * 3);
  for (auto l : map.labels) {
    Rgb rgb{0, 0, 0};
    if (l != 0) {
      auto it = palette.find(l);
      if (it == palette.end()) throw ConfigError("palette has no color for class " + std::to_string(l));
      rgb = it->second;
    }
    out.append(reinterpret_cast<const char*>(rgb.data()), 3);
  }
  return out;
}

/// Renders predictions.labels from the output directory into map.ppm.
inline void cmd_render_map(const PipelineConfig& c) {
  validate(c, Command::render_map);
  const fs::path pred = out_path(c, "predictions.labels");
  if (!fs::exists(pred)) throw FormatError(pred.string() + " not found; run `classify` first");
  const LabelMap map = load_labels(pred);
  const LabelMap truth = load_labels(c.labels);
  if (map.height != truth.height || map.width != truth.width)
    throw FormatError("predictions and label map differ in size");
  write_text(out_path(c, "map.ppm"), render_ppm(map, c.palette));
}

inline void run(Command cmd, const PipelineConfig& c) {
  switch (cmd) {
    case Command::fit: cmd_fit(c); break;
    case Command::transform: cmd_transform(c); break;
    case Command::classify: cmd_classify(c); break;
    case Command::evaluate: cmd_evaluate(c); break;
    case Command::sweep: cmd_sweep(c); break;
    case Command::render_map: cmd_render_map(c); break;
  }
}

/// Maps an in-flight exception to the documented exit code.
inline int exit_code(const std::exception& e) {
  if (dynamic_cast<const ConfigError*>(&e)) return kConfigError;
  if (dynamic_cast<const FormatError*>(&e) || dynamic_cast<const ShapeError*>(&e)) return kDataError;
  if (dynamic_cast<const NumericalError*>(&e)) return kNumericalError;
  return kFailure;
}

}  // namespace tpca::cli
