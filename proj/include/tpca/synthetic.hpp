#pragma once

// Two-class synthetic scene whose classes share the same mean spectrum and
// the same per-pixel value distribution, and differ only in spatial
// texture. Class 1 pixels carry a spatially smooth latent field, class 2
// pixels an uncorrelated one with equal variance. A per-pixel method sees
// identical marginals; a neighbourhood method can tell them apart.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <vector>

#include "tpca/hsi_data.hpp"

namespace tpca {

struct TextureSceneSpec {
  std::size_t height = 40;
  std::size_t width = 40;
  std::size_t bands = 8;
  std::size_t block = 10;        // checkerboard block edge, in pixels
  std::size_t smoothing = 2;     // class-1 box-blur radius
  std::size_t latent_fields = 2;
  double signal = 1.0;           // latent amplitude
  double noise = 0.15;           // independent per-band noise
  std::uint64_t seed = 0;
};

struct Scene {
  HsiCube cube;
  LabelMap labels;
};

namespace detail {

// Standard normal via Box-Muller on raw mt19937_64 output, so the scene is
// identical across standard libraries.
class GaussianSource {
 public:
  explicit GaussianSource(std::uint64_t seed) : rng_(seed) {}
  double operator()() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = (static_cast<double>(rng_() >> 11) + 1.0) * 0x1.0p-53;
    const double u2 = static_cast<double>(rng_() >> 11) * 0x1.0p-53;
    const double r = std::sqrt(-2.0 * std::log(u1));
    spare_ = r * std::sin(2.0 * std::numbers::pi * u2);
    has_spare_ = true;
    return r * std::cos(2.0 * std::numbers::pi * u2);
  }

 private:
  std::mt19937_64 rng_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace detail

inline Scene make_texture_scene(const TextureSceneSpec& spec) {
  detail::GaussianSource gauss(spec.seed);
  const std::size_t h = spec.height, w = spec.width;

  Scene scene{HsiCube(h, w, spec.bands), LabelMap(h, w)};
  for (std::size_t r = 0; r < h; ++r)
    for (std::size_t c = 0; c < w; ++c)
      scene.labels.at(r, c) = static_cast<std::uint16_t>(((r / spec.block + c / spec.block) % 2) + 1);

  // Shared mean spectrum and per-field spectral loadings.
  std::vector<double> mean(spec.bands);
  for (std::size_t b = 0; b < spec.bands; ++b) mean[b] = 1.0 + 0.3 * std::sin(0.7 * static_cast<double>(b));
  std::vector<std::vector<double>> loading(spec.latent_fields, std::vector<double>(spec.bands));
  for (auto& l : loading) {
    double norm = 0.0;
    for (auto& v : l) {
      v = gauss();
      norm += v * v;
    }
    for (auto& v : l) v /= std::sqrt(norm);
  }

  const auto rad = static_cast<std::ptrdiff_t>(spec.smoothing);
  const double window = static_cast<double>((2 * rad + 1) * (2 * rad + 1));
  for (std::size_t f = 0; f < spec.latent_fields; ++f) {
    std::vector<double> white(h * w), rough(h * w);
    for (auto& v : white) v = gauss();
    for (auto& v : rough) v = gauss();
    for (std::size_t r = 0; r < h; ++r)
      for (std::size_t c = 0; c < w; ++c) {
        double z;
        if (scene.labels.at(r, c) == 1) {
          // Box blur of white noise, rescaled to unit variance.
          double acc = 0.0;
          for (std::ptrdiff_t dr = -rad; dr <= rad; ++dr)
            for (std::ptrdiff_t dc = -rad; dc <= rad; ++dc)
              acc += white[reflect_index(static_cast<std::ptrdiff_t>(r) + dr, h) * w +
                           reflect_index(static_cast<std::ptrdiff_t>(c) + dc, w)];
          z = acc / std::sqrt(window);
        } else {
          z = rough[r * w + c];
        }
        for (std::size_t b = 0; b < spec.bands; ++b) scene.cube.at(r, c, b) += spec.signal * z * loading[f][b];
      }
  }
  for (std::size_t r = 0; r < h; ++r)
    for (std::size_t c = 0; c < w; ++c)
      for (std::size_t b = 0; b < spec.bands; ++b) scene.cube.at(r, c, b) += mean[b] + spec.noise * gauss();
  return scene;
}

}  // namespace tpca
