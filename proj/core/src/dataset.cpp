#include "mtjsnn/dataset.hpp"

#include <algorithm>

#include "mtjsnn/errors.hpp"

namespace mtjsnn {

std::vector<int> ImageDataset::classes() const {
  std::vector<int> out = labels;
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

void ImageDataset::validate() const {
  if (rows <= 0 || cols <= 0)
    throw ConfigError("dataset: image dimensions must be positive");
  if (pixels.size() != labels.size() * pixels_per_image())
    throw ConfigError("dataset: pixel buffer does not match image count");
  for (float p : pixels)
    if (!(p >= 0.0f && p <= 1.0f))
      throw ConfigError("dataset: pixel values must lie in [0, 1]");
}

} // namespace mtjsnn
