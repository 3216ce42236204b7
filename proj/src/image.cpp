#include "webvln/image.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>

#include "webvln/error.hpp"

namespace webvln {

Image load_png(const std::string& path) {
  png_image img{};
  img.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&img, path.c_str())) {
    fail(ErrorCode::kParse, "UndecodableImage", path + ": " + img.message);
  }
  img.format = PNG_FORMAT_RGB;
  Image out(static_cast<int>(img.width), static_cast<int>(img.height));
  if (!png_image_finish_read(&img, nullptr, out.rgb.data(), 0, nullptr)) {
    std::string msg = img.message;
    png_image_free(&img);
    fail(ErrorCode::kParse, "UndecodableImage", path + ": " + msg);
  }
  return out;
}

void save_png(const Image& image, const std::string& path) {
  png_image img{};
  img.version = PNG_IMAGE_VERSION;
  img.width = static_cast<png_uint_32>(image.width);
  img.height = static_cast<png_uint_32>(image.height);
  img.format = PNG_FORMAT_RGB;
  if (!png_image_write_to_file(&img, path.c_str(), 0, image.rgb.data(), 0, nullptr)) {
    fail(ErrorCode::kIo, "IoError", path + ": " + img.message);
  }
}

Image resize_area(const Image& src, int width, int height) {
  if (src.empty()) fail(ErrorCode::kInvalidArgument, "UndecodableImage", "empty image");
  if (src.width == width && src.height == height) return src;
  Image dst(width, height);
  const double sx = static_cast<double>(src.width) / width;
  const double sy = static_cast<double>(src.height) / height;
  for (int y = 0; y < height; ++y) {
    const double y0 = y * sy, y1 = (y + 1) * sy;
    for (int x = 0; x < width; ++x) {
      const double x0 = x * sx, x1 = (x + 1) * sx;
      double acc[3] = {0, 0, 0};
      double area = 0;
      for (int py = static_cast<int>(std::floor(y0)); py < std::min(src.height, static_cast<int>(std::ceil(y1))); ++py) {
        const double wy = std::min<double>(py + 1, y1) - std::max<double>(py, y0);
        if (wy <= 0) continue;
        for (int px = static_cast<int>(std::floor(x0)); px < std::min(src.width, static_cast<int>(std::ceil(x1))); ++px) {
          const double wx = std::min<double>(px + 1, x1) - std::max<double>(px, x0);
          if (wx <= 0) continue;
          const double w = wx * wy;
          for (int c = 0; c < 3; ++c) acc[c] += w * src.at(px, py, c);
          area += w;
        }
      }
      for (int c = 0; c < 3; ++c) dst.at(x, y, c) = static_cast<std::uint8_t>(std::lround(acc[c] / area));
    }
  }
  return dst;
}

Matrix<float> patchify(const Image& image, const PatchGrid& g) {
  const Image img = resize_area(image, g.image_size, g.image_size);
  Matrix<float> out(g.patch_count(), g.raw_dim());
  const int n = g.grid * g.pool;  // cells per side
  for (int py = 0; py < g.grid; ++py) {
    for (int px = 0; px < g.grid; ++px) {
      const int row = py * g.grid + px;
      for (int cy = 0; cy < g.pool; ++cy) {
        for (int cx = 0; cx < g.pool; ++cx) {
          const int gy = py * g.pool + cy, gx = px * g.pool + cx;
          const int y0 = gy * g.image_size / n, y1 = (gy + 1) * g.image_size / n;
          const int x0 = gx * g.image_size / n, x1 = (gx + 1) * g.image_size / n;
          double acc[3] = {0, 0, 0};
          for (int y = y0; y < y1; ++y)
            for (int x = x0; x < x1; ++x)
              for (int c = 0; c < 3; ++c) acc[c] += img.at(x, y, c);
          const double count = static_cast<double>((y1 - y0) * (x1 - x0)) * 255.0;
          for (int c = 0; c < 3; ++c) {
            out(row, (c * g.pool + cy) * g.pool + cx) = static_cast<float>(acc[c] / count);
          }
        }
      }
    }
  }
  return out;
}

}  // namespace webvln
