#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "webvln/autodiff.hpp"
#include "webvln/image.hpp"
#include "webvln/rng.hpp"
#include "webvln/simulator.hpp"

namespace webvln {

class Vocab {
 public:
  static constexpr int kPad = 0;
  static constexpr int kUnk = 1;
  static constexpr int kCls = 2;
  static constexpr int kSep = 3;
  static constexpr int kEoa = 4;
  static constexpr int kBos = 5;
  static constexpr int kEos = 6;
  static constexpr int kReserved = 7;

  Vocab();
  explicit Vocab(std::vector<std::string> tokens);  // must start with the reserved tokens

  // Reserved tokens followed by every token of `texts`, sorted.
  static Vocab build(const std::vector<std::string>& texts);
  static Vocab load(const std::string& path);
  void save(const std::string& path) const;

  std::size_t size() const { return tokens_.size(); }
  int id(const std::string& token) const;
  const std::string& token(int id) const { return tokens_.at(static_cast<std::size_t>(id)); }
  const std::vector<std::string>& tokens() const { return tokens_; }

  std::vector<int> encode(std::string_view text) const;
  // Stops at [EOS]; drops other reserved tokens.
  std::string decode(const std::vector<int>& ids) const;

 private:
  std::vector<std::string> tokens_;
  std::map<std::string, int> index_;
};

struct ModelConfig {
  int dim = 64;
  int heads = 4;
  int ff = 128;
  int n_init = 2;
  int n_nav = 2;
  int n_ans = 6;
  int max_text_len = 64;
  int max_answer_len = 40;
  PatchGrid patches;

  bool operator==(const ModelConfig&) const;
};

// Named tensors in a fixed order; `offsets` give each tensor's start in the
// flat parameter vector.
struct ParamLayout {
  struct Attention {
    std::size_t wq, bq, wk, bk, wv, bv, wo, bo;
  };
  struct Block {
    std::size_t ln1_g, ln1_b;
    Attention self;
    std::size_t lnc_g = 0, lnc_b = 0;  // decoder only
    Attention cross{};                  // decoder only
    std::size_t ln2_g, ln2_b, w1, b1, w2, b2;
  };

  std::vector<std::string> names;
  std::vector<std::pair<int, int>> shapes;
  std::vector<std::size_t> offsets;
  std::size_t total = 0;

  std::size_t tok_emb, pos_emb, type_emb;
  std::vector<Block> init_blocks, nav_blocks, ans_blocks;
  std::size_t init_ln_g, init_ln_b, nav_ln_g, nav_ln_b, ans_ln_g, ans_ln_b;
  std::size_t patch_w, patch_b, patch_pos;
  std::size_t button_w, button_b;
  std::size_t action_w;
  std::size_t out_w, out_b;

  static ParamLayout make(const ModelConfig& config, std::size_t vocab_size);
};

// Inputs of one button candidate, independent of parameters.
struct ButtonFeatures {
  std::vector<int> description_ids;  // empty = no description
  std::optional<Matrix<float>> image_patches;  // raw patch rows of the button image
};

struct PageFeatures {
  Matrix<float> screenshot_patches;
  std::vector<ButtonFeatures> buttons;  // page buttons only; [EOA] is appended by the model
};

// Everything needed to score one record under teacher forcing.
struct EpisodeInputs {
  std::vector<int> question_ids;
  std::vector<int> description_ids;
  std::vector<PageFeatures> pages;  // one per ground-truth page
  std::vector<int> teacher;         // per page: button index, [EOA] index on the last page
  std::vector<int> answer_ids;      // without [BOS]/[EOS]
};

struct LossWeights {
  double eta = 1.0;
  double lambda = 1.0;
};

// Source of the sampled actions a_t. Draws from `rng` unless `fixed` holds a
// value for the step; every used action is appended to `used`.
struct ActionSampler {
  Rng* rng = nullptr;
  std::vector<int> fixed;
  std::vector<int> used;
};

template <class T>
class Model {
 public:
  using Mat = Matrix<T>;
  using Tape = ad::Tape<T>;
  using Var = ad::Var;

  struct InitResult {
    Var state;
    Var language;
  };
  struct NavResult {
    Var state;
    Var logits;  // 1 x candidates
  };
  struct EpisodeLoss {
    Var total;
    T l_nav = 0;
    T l_ans = 0;
    Var final_state;
    std::vector<std::vector<T>> probabilities;
  };

  Model(const ModelConfig& config, std::size_t vocab_size, std::uint64_t seed);
  Model(const ModelConfig& config, std::size_t vocab_size, std::vector<Mat> tensors);

  const ModelConfig& config() const { return config_; }
  const ParamLayout& layout() const { return layout_; }
  std::size_t vocab_size() const { return vocab_size_; }
  std::vector<Mat>& tensors() { return tensors_; }
  const std::vector<Mat>& tensors() const { return tensors_; }
  std::size_t parameter_count() const { return layout_.total; }
  T& flat(std::size_t i);
  T flat(std::size_t i) const;
  // Tensor index and in-tensor offset of flat coordinate i.
  std::pair<std::size_t, std::size_t> locate(std::size_t i) const;

  template <class U>
  Model<U> cast() const {
    std::vector<Matrix<U>> t;
    t.reserve(tensors_.size());
    for (const auto& m : tensors_) t.push_back(m.template cast<U>());
    return Model<U>(config_, vocab_size_, std::move(t));
  }

  Var param(Tape& tape, std::size_t index) const { return tape.parameter(index, tensors_[index]); }

  // [CLS] Q [SEP] D through the initialisation encoder: state = [CLS] output,
  // language = outputs at every other position.
  InitResult init_state(Tape& tape, const std::vector<int>& question, const std::vector<int>& description) const;

  // Raw patch rows -> projected screenshot tokens with 2-D position embeddings.
  Var screenshot_tokens(Tape& tape, const Matrix<float>& patches) const;

  // One token per button plus the [EOA] token as the last row.
  Var button_tokens(Tape& tape, const std::vector<ButtonFeatures>& buttons) const;

  // Language tokens only act as keys/values. `valid` masks padding candidates
  // out of both attention and the action distribution.
  NavResult nav_step(Tape& tape, Var prev_state, Var language, Var screenshot, Var buttons,
                     const std::vector<bool>* valid = nullptr) const;

  // Teacher-forced decoder logits (rows = input positions) with the single
  // state token as memory.
  Var decoder_logits(Tape& tape, Var memory, const std::vector<int>& input_ids) const;

  // Greedy decoding from [BOS] until [EOS] or max_len tokens.
  std::vector<int> decode_greedy(const Mat& memory, int max_len) const;

  // Navigation (sampled + eta * teacher) plus lambda * answer loss along the
  // ground-truth trajectory.
  EpisodeLoss episode_loss(Tape& tape, const EpisodeInputs& inputs, const LossWeights& weights,
                           ActionSampler& sampler) const;

 private:
  Var attention(Tape& tape, const ParamLayout::Attention& a, Var queries, Var keys_values, const Mat* mask) const;
  Var feed_forward(Tape& tape, const ParamLayout::Block& b, Var x) const;
  Var layer_norm(Tape& tape, std::size_t gain, std::size_t bias, Var x) const;
  Var encoder_block(Tape& tape, const ParamLayout::Block& b, Var x, Var extra_kv, const Mat* mask) const;

  ModelConfig config_;
  std::size_t vocab_size_;
  ParamLayout layout_;
  std::vector<Mat> tensors_;
};

extern template class Model<float>;
extern template class Model<double>;
extern template class Model<long double>;

// Closed-form losses on plain probability vectors.
double nav_loss(const std::vector<std::vector<double>>& probabilities, const std::vector<int>& sampled,
                const std::vector<int>& teacher, double eta);
double ans_loss(const Matrix<double>& decoder_logits, const std::vector<int>& gold);
double total_loss(double l_nav, double l_ans, double lambda);

// Per-site cache of image patch features.
class FeatureCache {
 public:
  FeatureCache(const NavGraph& graph, PatchGrid grid) : graph_(graph), grid_(grid) {}

  const Matrix<float>& image(const std::string& site_relative_ref);
  PageFeatures page(const PageId& id, const Vocab& vocab);

 private:
  const NavGraph& graph_;
  PatchGrid grid_;
  std::map<std::string, Matrix<float>> images_;
};

EpisodeInputs make_episode_inputs(const NavGraph& graph, const EpisodeRecord& record, const Vocab& vocab,
                                  FeatureCache& cache);

// Checkpoint: "WVLNCKPT" magic, u64 little-endian header length, JSON header
// {config, vocab, tensors:[{name, rows, cols}]}, then float32 little-endian
// parameters in layout order.
void save_checkpoint(const std::string& path, const Model<float>& model, const Vocab& vocab);
std::pair<Model<float>, Vocab> load_checkpoint(const std::string& path);

}  // namespace webvln
