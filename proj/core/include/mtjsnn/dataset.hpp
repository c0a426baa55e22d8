#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace mtjsnn {

/// Labeled grayscale images stored contiguously, pixels in [0, 1].
struct ImageDataset {
  int rows = 28;
  int cols = 28;
  std::vector<float> pixels; // size() * rows * cols, row-major per image
  std::vector<int> labels;

  std::size_t size() const { return labels.size(); }
  bool empty() const { return labels.empty(); }
  std::size_t pixels_per_image() const {
    return static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols);
  }
  std::span<const float> image(std::size_t k) const {
    return std::span<const float>(pixels).subspan(k * pixels_per_image(),
                                                  pixels_per_image());
  }
  /// Sorted distinct labels.
  std::vector<int> classes() const;
  /// Throws ConfigError on inconsistent sizes or out-of-range pixels.
  void validate() const;
};

} // namespace mtjsnn
