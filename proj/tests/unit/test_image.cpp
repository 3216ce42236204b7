#include <cmath>

#include <doctest.h>

#include "helpers.hpp"
#include "webvln/error.hpp"
#include "webvln/image.hpp"
#include "webvln/rng.hpp"

using namespace webvln;

namespace {

Image noise(int w, int h, std::uint64_t seed) {
  Rng rng(seed);
  Image img(w, h);
  for (auto& v : img.rgb) v = static_cast<std::uint8_t>(uniform_index(rng, 256));
  return img;
}

}  // namespace

TEST_SUITE("image") {
  TEST_CASE("png round trip is lossless") {
    const std::string dir = testutil::scratch("png");
    const Image img = noise(17, 9, 1);
    save_png(img, dir + "/a.png");
    const Image back = load_png(dir + "/a.png");
    CHECK(back.width == 17);
    CHECK(back.height == 9);
    CHECK(back.rgb == img.rgb);
  }

  TEST_CASE("garbage bytes are UndecodableImage") {
    const std::string dir = testutil::scratch("png-bad");
    write_file(dir + "/bad.png", "definitely not a png");
    try {
      (void)load_png(dir + "/bad.png");
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK(e.kind() == "UndecodableImage");
    }
  }

  TEST_CASE("a 224 image gives 49 patches of raw_dim features") {
    const PatchGrid g;
    const auto p = patchify(noise(224, 224, 2), g);
    CHECK(p.rows() == 49);
    CHECK(p.cols() == g.raw_dim());
    CHECK(p.minCoeff() >= 0.0f);
    CHECK(p.maxCoeff() <= 1.0f);
  }

  TEST_CASE("constant gray image gives identical patch rows") {
    const auto p = patchify(Image(224, 224, 128), PatchGrid{});
    for (Eigen::Index r = 0; r < p.rows(); ++r) {
      for (Eigen::Index c = 0; c < p.cols(); ++c) CHECK(p(r, c) == doctest::Approx(128.0 / 255.0));
    }
  }

  TEST_CASE("patch features equal a direct per-patch mean") {
    PatchGrid g;
    g.pool = 1;
    const Image img = noise(224, 224, 3);
    const auto p = patchify(img, g);
    for (int py = 0; py < 7; ++py) {
      for (int px = 0; px < 7; ++px) {
        for (int c = 0; c < 3; ++c) {
          double sum = 0;
          for (int y = py * 32; y < py * 32 + 32; ++y)
            for (int x = px * 32; x < px * 32 + 32; ++x) sum += img.at(x, y, c);
          CHECK(p(py * 7 + px, c) == doctest::Approx(sum / (32 * 32 * 255.0)).epsilon(1e-6));
        }
      }
    }
  }

  TEST_CASE("448 input matches a direct 2x2 block-average downsample") {
    const Image big = noise(448, 448, 4);
    Image small(224, 224);
    for (int y = 0; y < 224; ++y)
      for (int x = 0; x < 224; ++x)
        for (int c = 0; c < 3; ++c) {
          const int s = big.at(2 * x, 2 * y, c) + big.at(2 * x + 1, 2 * y, c) + big.at(2 * x, 2 * y + 1, c) +
                        big.at(2 * x + 1, 2 * y + 1, c);
          small.at(x, y, c) = static_cast<std::uint8_t>(std::lround(s / 4.0));
        }
    const PatchGrid g;
    const auto a = patchify(big, g);
    const auto b = patchify(small, g);
    CHECK(a.rows() == 49);
    CHECK(a == b);
  }

  TEST_CASE("non-square inputs still give 49 patches") {
    CHECK(patchify(noise(300, 120, 5), PatchGrid{}).rows() == 49);
  }

  TEST_CASE("left/right halves land in the matching patch columns") {
    Image img(224, 224);
    for (int y = 0; y < 224; ++y)
      for (int x = 0; x < 224; ++x) img.at(x, y, x < 112 ? 0 : 2) = 255;
    PatchGrid g;
    g.pool = 1;
    const auto p = patchify(img, g);
    CHECK(p(0, 0) == 1.0f);
    CHECK(p(0, 2) == 0.0f);
    CHECK(p(6, 0) == 0.0f);
    CHECK(p(6, 2) == 1.0f);
    CHECK(p(3, 0) == doctest::Approx(0.5));  // the middle column straddles the edge
  }

  TEST_CASE("empty images are rejected") { CHECK_THROWS_AS(resize_area(Image{}, 4, 4), Error); }
}
