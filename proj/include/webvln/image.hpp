#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "webvln/tensor.hpp"

namespace webvln {

// 8-bit RGB raster, row-major, 3 bytes per pixel.
struct Image {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> rgb;

  Image() = default;
  Image(int w, int h, std::uint8_t fill = 0) : width(w), height(h), rgb(static_cast<std::size_t>(w) * h * 3, fill) {}

  std::uint8_t& at(int x, int y, int c) { return rgb[(static_cast<std::size_t>(y) * width + x) * 3 + c]; }
  std::uint8_t at(int x, int y, int c) const { return rgb[(static_cast<std::size_t>(y) * width + x) * 3 + c]; }
  bool empty() const { return width == 0 || height == 0; }
};

// Throws Error{kParse, "UndecodableImage"} on anything libpng rejects.
Image load_png(const std::string& path);
void save_png(const Image& image, const std::string& path);

// Box-filter (area) resampling. Exact block averaging for integer factors.
Image resize_area(const Image& src, int width, int height);

struct PatchGrid {
  int image_size = 224;  // resize target (square)
  int grid = 7;          // grid x grid patches
  int pool = 2;          // each patch mean-pooled to pool x pool cells per channel

  int patch_count() const { return grid * grid; }
  int raw_dim() const { return 3 * pool * pool; }
};

// Resizes to image_size, splits into grid x grid patches and mean-pools each
// patch to a raw feature row in [0,1]. Rows are in raster order of patches.
Matrix<float> patchify(const Image& image, const PatchGrid& grid);

}  // namespace webvln
