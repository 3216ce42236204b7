#pragma once

#include <vector>

#include "webvln/model.hpp"
#include "webvln/rng.hpp"

namespace testutil {

inline webvln::ModelConfig small_config() {
  webvln::ModelConfig c;
  c.dim = 16;
  c.heads = 2;
  c.ff = 32;
  c.n_init = 1;
  c.n_nav = 2;
  c.n_ans = 2;
  c.max_text_len = 32;
  c.max_answer_len = 8;
  return c;
}

inline webvln::Matrix<float> random_patches(webvln::Rng& rng, const webvln::PatchGrid& g) {
  webvln::Matrix<float> m(g.patch_count(), g.raw_dim());
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = static_cast<float>(webvln::uniform01(rng));
  return m;
}

inline webvln::ButtonFeatures random_button(webvln::Rng& rng, const webvln::PatchGrid& g, int vocab, bool text,
                                            bool image) {
  webvln::ButtonFeatures b;
  if (text) {
    for (std::size_t k = 0, n = 1 + webvln::uniform_index(rng, 3); k < n; ++k) {
      b.description_ids.push_back(webvln::Vocab::kReserved +
                                  static_cast<int>(webvln::uniform_index(rng, vocab - webvln::Vocab::kReserved)));
    }
  }
  if (image) b.image_patches = random_patches(rng, g);
  return b;
}

// A synthetic three-page episode over a vocabulary of `vocab` ids.
inline webvln::EpisodeInputs random_episode(std::uint64_t seed, const webvln::PatchGrid& g, int vocab) {
  webvln::Rng rng(seed);
  webvln::EpisodeInputs in;
  auto word = [&] {
    return webvln::Vocab::kReserved + static_cast<int>(webvln::uniform_index(rng, vocab - webvln::Vocab::kReserved));
  };
  in.question_ids = {word(), word(), word()};
  in.description_ids = {word(), word()};
  in.answer_ids = {word(), word()};
  const int buttons[] = {3, 2, 1};
  for (int n : buttons) {
    webvln::PageFeatures p;
    p.screenshot_patches = random_patches(rng, g);
    for (int k = 0; k < n; ++k) p.buttons.push_back(random_button(rng, g, vocab, k != 1, k != 0));
    in.pages.push_back(std::move(p));
  }
  in.teacher = {1, 0, 1};  // last one is [EOA]
  return in;
}

}  // namespace testutil
