// tpca: fit / transform / classify / evaluate / sweep / render-map over a
// hyperspectral cube described by a JSON config, plus `synth` to write a
// small synthetic scene for trying things out.
//
// Exit codes: 0 ok, 2 config error, 3 data-format error, 4 numerical error.

#include <CLI11.hpp>

#include <iostream>

#include "tpca/cli.hpp"

namespace {

int guarded(const std::function<void()>& body) {
  try {
    body();
    return tpca::cli::kOk;
  } catch (const std::exception& e) {
    std::cerr << "tpca: " << e.what() << '\n';
    return tpca::cli::exit_code(e);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Tensor PCA feature extraction and 1-NN classification for hyperspectral images"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> extractor;
  std::optional<std::size_t> d;

  const std::vector<std::pair<const char*, const char*>> commands{
      {"fit", "Split labeled pixels and fit the extractor (writes split.json, model.tpca)"},
      {"transform", "Write features.csv for every labeled pixel"},
      {"classify", "1-NN on the split; writes predictions.labels and report.json"},
      {"evaluate", "Repeated random splits; writes report.json with the mean and every run"},
      {"sweep", "PCA and TPCA accuracy for each d in dims; writes sweep.csv"},
      {"render-map", "Color predictions.labels with the palette; writes map.ppm"}};
  for (const auto& [name, help] : commands) {
    auto* sub = app.add_subcommand(name, help);
    sub->add_option("--config", config_path, "JSON config file")->required()->check(CLI::ExistingFile);
    sub->add_option("--seed", seed, "Override the config seed");
    sub->add_option("--extractor", extractor, "Override the extractor (raw, pca, tpca)");
    sub->add_option("--d", d, "Override the feature count");
  }

  tpca::TextureSceneSpec synth_spec;
  std::string synth_out;
  auto* synth = app.add_subcommand("synth", "Write a two-class synthetic scene (<out>.cube, <out>.labels, <out>.json)");
  synth->add_option("--out", synth_out, "Output path prefix")->required();
  synth->add_option("--seed", synth_spec.seed, "Generator seed");
  synth->add_option("--height", synth_spec.height, "Rows")->check(CLI::PositiveNumber);
  synth->add_option("--width", synth_spec.width, "Columns")->check(CLI::PositiveNumber);
  synth->add_option("--bands", synth_spec.bands, "Bands")->check(CLI::PositiveNumber);
  synth->add_option("--block", synth_spec.block, "Checkerboard block edge")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : tpca::cli::kConfigError;
  }

  if (synth->parsed()) {
    return guarded([&] {
      const tpca::Scene s = tpca::make_texture_scene(synth_spec);
      const tpca::fs::path prefix(synth_out);
      if (prefix.has_parent_path()) tpca::fs::create_directories(prefix.parent_path());
      tpca::save_cube(s.cube, tpca::fs::path(synth_out + ".cube"));
      tpca::save_labels(s.labels, tpca::fs::path(synth_out + ".labels"));
    });
  }

  const auto* chosen = app.get_subcommands().front();
  return guarded([&] {
    const auto cmd = tpca::cli::parse_command(chosen->get_name());
    const auto cfg = tpca::cli::load_config(config_path, {seed, extractor, d});
    tpca::cli::run(cmd, cfg);
  });
}
