#pragma once

// Synthetic image-directory dataset laid out as root/category/instance/view.ppm.
// Category c is a shape (disk, square, bar, cross) in its own hue; instances
// change size and hue slightly, views shift the object.

#include <cmath>
#include <filesystem>
#include <random>
#include <string>

#include "spkn/data.hpp"
#include "spkn/tensor.hpp"

namespace fixture {

inline void hsv_to_rgb(double h, double s, double v, double& r, double& g, double& b) {
  const double i = std::floor(h * 6.0);
  const double f = h * 6.0 - i;
  const double p = v * (1 - s), q = v * (1 - s * f), t = v * (1 - s * (1 - f));
  switch (static_cast<int>(i) % 6) {
    case 0: r = v; g = t; b = p; break;
    case 1: r = q; g = v; b = p; break;
    case 2: r = p; g = v; b = t; break;
    case 3: r = p; g = q; b = v; break;
    case 4: r = t; g = p; b = v; break;
    default: r = v; g = p; b = q; break;
  }
}

inline void write_objects(const std::filesystem::path& root, int categories, int instances,
                          int views, std::size_t side, std::uint64_t seed) {
  namespace fs = std::filesystem;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> noise(0.0, 0.08);
  std::uniform_int_distribution<int> shift(-3, 3);
  const double mid = static_cast<double>(side) / 2.0;
  for (int c = 0; c < categories; ++c) {
    for (int i = 0; i < instances; ++i) {
      const fs::path dir = root / ("cat" + std::to_string(c)) / ("obj" + std::to_string(i));
      fs::create_directories(dir);
      const double size = static_cast<double>(side) * (0.22 + 0.015 * i);
      const double hue = std::fmod(c / static_cast<double>(categories) + 0.01 * (i % 3) + 1.0, 1.0);
      double r, g, b;
      hsv_to_rgb(hue, 0.85, 0.9, r, g, b);
      for (int v = 0; v < views; ++v) {
        const double cx = mid + shift(rng), cy = mid + shift(rng);
        spkn::Tensor img({3, side, side});
        for (std::size_t y = 0; y < side; ++y)
          for (std::size_t x = 0; x < side; ++x) {
            const double dx = static_cast<double>(x) - cx, dy = static_cast<double>(y) - cy;
            bool in = false;
            switch (c % 4) {
              case 0: in = dx * dx + dy * dy <= size * size; break;
              case 1: in = std::abs(dx) <= size && std::abs(dy) <= size; break;
              case 2: in = std::abs(dx) <= 1.4 * size && std::abs(dy) <= 0.4 * size; break;
              default:
                in = (std::abs(dx) <= size && std::abs(dy) <= 0.3 * size) ||
                     (std::abs(dy) <= size && std::abs(dx) <= 0.3 * size);
            }
            const double bg = 0.25;
            img.at(0, y, x) = std::min(1.0, (in ? r : bg) + noise(rng));
            img.at(1, y, x) = std::min(1.0, (in ? g : bg) + noise(rng));
            img.at(2, y, x) = std::min(1.0, (in ? b : bg) + noise(rng));
          }
        spkn::write_ppm(dir / ("view" + std::to_string(v) + ".ppm"), img);
      }
    }
  }
}

}  // namespace fixture
