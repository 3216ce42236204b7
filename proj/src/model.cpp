#include "webvln/model.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include <json.hpp>

#include "webvln/error.hpp"
#include "webvln/text.hpp"

using nlohmann::json;

namespace webvln {

// ---------------------------------------------------------------- Vocab

namespace {
const std::vector<std::string>& reserved_tokens() {
  static const std::vector<std::string> kTokens = {"[PAD]", "[UNK]", "[CLS]", "[SEP]", "[EOA]", "[BOS]", "[EOS]"};
  return kTokens;
}
}  // namespace

Vocab::Vocab() : Vocab(reserved_tokens()) {}

Vocab::Vocab(std::vector<std::string> tokens) : tokens_(std::move(tokens)) {
  const auto& reserved = reserved_tokens();
  if (tokens_.size() < reserved.size() || !std::equal(reserved.begin(), reserved.end(), tokens_.begin())) {
    fail(ErrorCode::kInvalidArgument, "InvalidVocab", "vocabulary must start with the reserved tokens");
  }
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    if (!index_.emplace(tokens_[i], static_cast<int>(i)).second) {
      fail(ErrorCode::kInvalidArgument, "InvalidVocab", "duplicate token '" + tokens_[i] + "'");
    }
  }
}

Vocab Vocab::build(const std::vector<std::string>& texts) {
  std::set<std::string> words;
  for (const auto& t : texts) {
    for (auto& w : tokenize(t)) words.insert(std::move(w));
  }
  std::vector<std::string> tokens = reserved_tokens();
  for (const auto& w : words) {
    if (std::find(tokens.begin(), tokens.end(), w) == tokens.end()) tokens.push_back(w);
  }
  return Vocab(std::move(tokens));
}

Vocab Vocab::load(const std::string& path) {
  std::istringstream in(read_file(path));
  std::vector<std::string> tokens;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty()) tokens.push_back(line);
  }
  return Vocab(std::move(tokens));
}

void Vocab::save(const std::string& path) const { write_file(path, join(tokens_, "\n") + "\n"); }

int Vocab::id(const std::string& token) const {
  auto it = index_.find(token);
  return it == index_.end() ? kUnk : it->second;
}

std::vector<int> Vocab::encode(std::string_view text) const {
  std::vector<int> ids;
  for (const auto& w : tokenize(text)) ids.push_back(id(w));
  return ids;
}

std::string Vocab::decode(const std::vector<int>& ids) const {
  std::vector<std::string> words;
  for (int i : ids) {
    if (i == kEos) break;
    if (i < kReserved) continue;
    words.push_back(token(i));
  }
  return join(words, " ");
}

// ---------------------------------------------------------------- layout

bool ModelConfig::operator==(const ModelConfig& o) const {
  return dim == o.dim && heads == o.heads && ff == o.ff && n_init == o.n_init && n_nav == o.n_nav &&
         n_ans == o.n_ans && max_text_len == o.max_text_len && max_answer_len == o.max_answer_len &&
         patches.image_size == o.patches.image_size && patches.grid == o.patches.grid && patches.pool == o.patches.pool;
}

ParamLayout ParamLayout::make(const ModelConfig& c, std::size_t vocab_size) {
  if (c.dim <= 0 || c.heads <= 0 || c.dim % c.heads != 0) {
    fail(ErrorCode::kInvalidArgument, "InvalidConfig", "dim must be a positive multiple of heads");
  }
  ParamLayout L;
  auto add = [&](const std::string& name, int rows, int cols) {
    L.names.push_back(name);
    L.shapes.emplace_back(rows, cols);
    L.offsets.push_back(L.total);
    L.total += static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols);
    return L.names.size() - 1;
  };
  const int d = c.dim;
  auto attention = [&](const std::string& p) {
    Attention a{};
    a.wq = add(p + ".wq", d, d);
    a.bq = add(p + ".bq", 1, d);
    a.wk = add(p + ".wk", d, d);
    a.bk = add(p + ".bk", 1, d);
    a.wv = add(p + ".wv", d, d);
    a.bv = add(p + ".bv", 1, d);
    a.wo = add(p + ".wo", d, d);
    a.bo = add(p + ".bo", 1, d);
    return a;
  };
  auto block = [&](const std::string& p, bool decoder) {
    Block b{};
    b.ln1_g = add(p + ".ln1.g", 1, d);
    b.ln1_b = add(p + ".ln1.b", 1, d);
    b.self = attention(p + ".self");
    if (decoder) {
      b.lnc_g = add(p + ".lnc.g", 1, d);
      b.lnc_b = add(p + ".lnc.b", 1, d);
      b.cross = attention(p + ".cross");
    }
    b.ln2_g = add(p + ".ln2.g", 1, d);
    b.ln2_b = add(p + ".ln2.b", 1, d);
    b.w1 = add(p + ".ff.w1", d, c.ff);
    b.b1 = add(p + ".ff.b1", 1, c.ff);
    b.w2 = add(p + ".ff.w2", c.ff, d);
    b.b2 = add(p + ".ff.b2", 1, d);
    return b;
  };

  const int max_pos = std::max(c.max_text_len, c.max_answer_len + 1);
  L.tok_emb = add("embed.tokens", static_cast<int>(vocab_size), d);
  L.pos_emb = add("embed.positions", max_pos, d);
  L.type_emb = add("embed.types", 3, d);
  for (int i = 0; i < c.n_init; ++i) L.init_blocks.push_back(block("init." + std::to_string(i), false));
  L.init_ln_g = add("init.ln.g", 1, d);
  L.init_ln_b = add("init.ln.b", 1, d);
  L.patch_w = add("patch.w", c.patches.raw_dim(), d);
  L.patch_b = add("patch.b", 1, d);
  L.patch_pos = add("patch.pos", c.patches.patch_count(), d);
  L.button_w = add("button.w", 2 * d, d);
  L.button_b = add("button.b", 1, d);
  for (int i = 0; i < c.n_nav; ++i) L.nav_blocks.push_back(block("nav." + std::to_string(i), false));
  L.nav_ln_g = add("nav.ln.g", 1, d);
  L.nav_ln_b = add("nav.ln.b", 1, d);
  L.action_w = add("action.w", d, d);
  for (int i = 0; i < c.n_ans; ++i) L.ans_blocks.push_back(block("ans." + std::to_string(i), true));
  L.ans_ln_g = add("ans.ln.g", 1, d);
  L.ans_ln_b = add("ans.ln.b", 1, d);
  L.out_w = add("out.w", d, static_cast<int>(vocab_size));
  L.out_b = add("out.b", 1, static_cast<int>(vocab_size));
  return L;
}

// ---------------------------------------------------------------- Model

template <class T>
Model<T>::Model(const ModelConfig& config, std::size_t vocab_size, std::uint64_t seed)
    : config_(config), vocab_size_(vocab_size), layout_(ParamLayout::make(config, vocab_size)) {
  Rng rng(seed);
  // Box-Muller on uniform01 keeps seeded initialisation toolchain independent.
  auto normal = [](Rng& r) {
    const double u1 = 1.0 - uniform01(r);
    const double u2 = uniform01(r);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
  };
  tensors_.reserve(layout_.names.size());
  for (std::size_t i = 0; i < layout_.names.size(); ++i) {
    const auto [rows, cols] = layout_.shapes[i];
    const std::string& name = layout_.names[i];
    Mat m(rows, cols);
    const bool is_gain = name.size() > 2 && name.compare(name.size() - 2, 2, ".g") == 0;
    const bool is_bias = name.find(".b") != std::string::npos && rows == 1 && !is_gain;
    double stddev;
    if (is_gain) {
      m.setOnes();
      tensors_.push_back(std::move(m));
      continue;
    }
    if (is_bias) {
      m.setZero();
      tensors_.push_back(std::move(m));
      continue;
    }
    if (name == "embed.tokens") {
      stddev = 1.0;
    } else if (name == "embed.positions" || name == "embed.types" || name == "patch.pos") {
      stddev = 0.1;
    } else {
      stddev = 1.0 / std::sqrt(static_cast<double>(rows));
    }
    for (Eigen::Index k = 0; k < m.size(); ++k) m.data()[k] = static_cast<T>(stddev * normal(rng));
    tensors_.push_back(std::move(m));
  }
}

template <class T>
Model<T>::Model(const ModelConfig& config, std::size_t vocab_size, std::vector<Mat> tensors)
    : config_(config), vocab_size_(vocab_size), layout_(ParamLayout::make(config, vocab_size)),
      tensors_(std::move(tensors)) {
  if (tensors_.size() != layout_.names.size()) {
    fail(ErrorCode::kInvalidArgument, "InvalidCheckpoint", "tensor count does not match the configuration");
  }
  for (std::size_t i = 0; i < tensors_.size(); ++i) {
    if (tensors_[i].rows() != layout_.shapes[i].first || tensors_[i].cols() != layout_.shapes[i].second) {
      fail(ErrorCode::kInvalidArgument, "InvalidCheckpoint", "shape mismatch for " + layout_.names[i]);
    }
  }
}

template <class T>
std::pair<std::size_t, std::size_t> Model<T>::locate(std::size_t i) const {
  if (i >= layout_.total) fail(ErrorCode::kInvalidArgument, "IndexOutOfRange", "flat parameter index out of range");
  auto it = std::upper_bound(layout_.offsets.begin(), layout_.offsets.end(), i);
  const std::size_t t = static_cast<std::size_t>(it - layout_.offsets.begin()) - 1;
  return {t, i - layout_.offsets[t]};
}

template <class T>
T& Model<T>::flat(std::size_t i) {
  auto [t, k] = locate(i);
  return tensors_[t].data()[k];
}

template <class T>
T Model<T>::flat(std::size_t i) const {
  auto [t, k] = locate(i);
  return tensors_[t].data()[k];
}

template <class T>
ad::Var Model<T>::layer_norm(Tape& tape, std::size_t gain, std::size_t bias, Var x) const {
  return tape.layer_norm(x, param(tape, gain), param(tape, bias));
}

template <class T>
ad::Var Model<T>::attention(Tape& tape, const ParamLayout::Attention& a, Var queries, Var kv, const Mat* mask) const {
  const Var q = tape.add_row(tape.matmul(queries, param(tape, a.wq)), param(tape, a.bq));
  const Var k = tape.add_row(tape.matmul(kv, param(tape, a.wk)), param(tape, a.bk));
  const Var v = tape.add_row(tape.matmul(kv, param(tape, a.wv)), param(tape, a.bv));
  const int dh = config_.dim / config_.heads;
  const T scale = T(1) / std::sqrt(static_cast<T>(dh));
  std::vector<Var> heads;
  heads.reserve(static_cast<std::size_t>(config_.heads));
  for (int h = 0; h < config_.heads; ++h) {
    const Var qh = tape.cols(q, h * dh, dh);
    const Var kh = tape.cols(k, h * dh, dh);
    const Var vh = tape.cols(v, h * dh, dh);
    const Var weights = tape.softmax(tape.scale(tape.matmul_nt(qh, kh), scale), mask);
    heads.push_back(tape.matmul(weights, vh));
  }
  const Var merged = config_.heads == 1 ? heads.front() : tape.concat_cols(heads);
  return tape.add_row(tape.matmul(merged, param(tape, a.wo)), param(tape, a.bo));
}

template <class T>
ad::Var Model<T>::feed_forward(Tape& tape, const ParamLayout::Block& b, Var x) const {
  const Var h = tape.gelu(tape.add_row(tape.matmul(x, param(tape, b.w1)), param(tape, b.b1)));
  return tape.add_row(tape.matmul(h, param(tape, b.w2)), param(tape, b.b2));
}

template <class T>
ad::Var Model<T>::encoder_block(Tape& tape, const ParamLayout::Block& b, Var x, Var extra_kv, const Mat* mask) const {
  const Var h = layer_norm(tape, b.ln1_g, b.ln1_b, x);
  Var kv = h;
  if (extra_kv.valid()) {
    const Var parts[] = {h, extra_kv};
    kv = tape.concat_rows(parts);
  }
  x = tape.add(x, attention(tape, b.self, h, kv, mask));
  return tape.add(x, feed_forward(tape, b, layer_norm(tape, b.ln2_g, b.ln2_b, x)));
}

template <class T>
typename Model<T>::InitResult Model<T>::init_state(Tape& tape, const std::vector<int>& question,
                                                   const std::vector<int>& description) const {
  if (question.empty()) fail(ErrorCode::kInvalidArgument, "EmptyQuestion", "question has no tokens");
  std::vector<int> ids;
  ids.push_back(Vocab::kCls);
  ids.insert(ids.end(), question.begin(), question.end());
  ids.push_back(Vocab::kSep);
  ids.insert(ids.end(), description.begin(), description.end());
  if (static_cast<int>(ids.size()) > config_.max_text_len) ids.resize(static_cast<std::size_t>(config_.max_text_len));
  std::vector<int> positions(ids.size());
  for (std::size_t i = 0; i < positions.size(); ++i) positions[i] = static_cast<int>(i);

  Var x = tape.add(tape.gather(param(tape, layout_.tok_emb), ids), tape.gather(param(tape, layout_.pos_emb), positions));
  for (const auto& b : layout_.init_blocks) x = encoder_block(tape, b, x, Var{}, nullptr);
  x = layer_norm(tape, layout_.init_ln_g, layout_.init_ln_b, x);
  const auto n = static_cast<Eigen::Index>(ids.size());
  return {tape.rows(x, 0, 1), tape.rows(x, 1, n - 1)};
}

template <class T>
ad::Var Model<T>::screenshot_tokens(Tape& tape, const Matrix<float>& patches) const {
  const auto& g = config_.patches;
  if (patches.rows() != g.patch_count() || patches.cols() != g.raw_dim()) {
    fail(ErrorCode::kInvalidArgument, "InvalidArgument", "screenshot patch matrix has the wrong shape");
  }
  const Var raw = tape.constant(patches.template cast<T>());
  Var x = tape.add_row(tape.matmul(raw, param(tape, layout_.patch_w)), param(tape, layout_.patch_b));
  x = tape.add(x, param(tape, layout_.patch_pos));
  return tape.add_row(x, tape.rows(param(tape, layout_.type_emb), 1, 1));
}

template <class T>
ad::Var Model<T>::button_tokens(Tape& tape, const std::vector<ButtonFeatures>& buttons) const {
  const int d = config_.dim;
  const Var type_row = tape.rows(param(tape, layout_.type_emb), 2, 1);
  const Var eoa = tape.rows(param(tape, layout_.tok_emb), Vocab::kEoa, 1);
  if (buttons.empty()) return tape.add_row(eoa, type_row);

  std::vector<Var> rows;
  rows.reserve(buttons.size());
  for (const auto& b : buttons) {
    Var text = b.description_ids.empty() ? tape.constant(Mat::Zero(1, d))
                                         : tape.mean_rows(tape.gather(param(tape, layout_.tok_emb), b.description_ids));
    Var image = tape.constant(Mat::Zero(1, d));
    if (b.image_patches) {
      const Mat pooled = b.image_patches->template cast<T>().colwise().mean();
      image = tape.add_row(tape.matmul(tape.constant(pooled), param(tape, layout_.patch_w)), param(tape, layout_.patch_b));
    }
    const Var both[] = {text, image};
    rows.push_back(tape.concat_cols(both));
  }
  const Var stacked = tape.concat_rows(rows);
  const Var projected = tape.add_row(tape.matmul(stacked, param(tape, layout_.button_w)), param(tape, layout_.button_b));
  const Var all[] = {projected, eoa};
  return tape.add_row(tape.concat_rows(all), type_row);
}

template <class T>
typename Model<T>::NavResult Model<T>::nav_step(Tape& tape, Var prev_state, Var language, Var screenshot, Var buttons,
                                                const std::vector<bool>* valid) const {
  const auto n_shot = tape.value(screenshot).rows();
  const auto n_btn = tape.value(buttons).rows();
  if (n_btn == 0) fail(ErrorCode::kInvalidArgument, "NoCandidates", "navigation step without candidates");
  if (valid && static_cast<Eigen::Index>(valid->size()) != n_btn) {
    fail(ErrorCode::kInvalidArgument, "InvalidArgument", "candidate mask size mismatch");
  }
  const Var state = tape.add_row(prev_state, tape.rows(param(tape, layout_.type_emb), 0, 1));
  const Var parts[] = {state, screenshot, buttons};
  Var x = tape.concat_rows(parts);
  const auto n = tape.value(x).rows();
  const auto n_lang = tape.value(language).rows();

  Mat key_mask;
  Mat action_mask;
  if (valid) {
    key_mask = Mat::Zero(n, n + n_lang);
    action_mask = Mat::Zero(1, n_btn);
    const T blocked = -std::numeric_limits<T>::infinity();
    for (Eigen::Index j = 0; j < n_btn; ++j) {
      if ((*valid)[static_cast<std::size_t>(j)]) continue;
      key_mask.col(1 + n_shot + j).setConstant(blocked);
      action_mask(0, j) = blocked;
    }
  }
  for (const auto& b : layout_.nav_blocks) x = encoder_block(tape, b, x, language, valid ? &key_mask : nullptr);
  x = layer_norm(tape, layout_.nav_ln_g, layout_.nav_ln_b, x);

  NavResult r;
  r.state = tape.rows(x, 0, 1);
  const Var cand = tape.rows(x, 1 + n_shot, n_btn);
  const Var query = tape.matmul(r.state, param(tape, layout_.action_w));
  r.logits = tape.scale(tape.matmul_nt(query, cand), T(1) / std::sqrt(static_cast<T>(config_.dim)));
  if (valid) r.logits = tape.add(r.logits, tape.constant(action_mask));
  return r;
}

template <class T>
ad::Var Model<T>::decoder_logits(Tape& tape, Var memory, const std::vector<int>& input_ids) const {
  const auto n = static_cast<Eigen::Index>(input_ids.size());
  std::vector<int> positions(input_ids.size());
  for (std::size_t i = 0; i < positions.size(); ++i) positions[i] = static_cast<int>(i);
  Var x = tape.add(tape.gather(param(tape, layout_.tok_emb), input_ids),
                   tape.gather(param(tape, layout_.pos_emb), positions));
  Mat causal = Mat::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j) causal(i, j) = -std::numeric_limits<T>::infinity();

  for (const auto& b : layout_.ans_blocks) {
    Var h = layer_norm(tape, b.ln1_g, b.ln1_b, x);
    x = tape.add(x, attention(tape, b.self, h, h, &causal));
    h = layer_norm(tape, b.lnc_g, b.lnc_b, x);
    x = tape.add(x, attention(tape, b.cross, h, memory, nullptr));
    x = tape.add(x, feed_forward(tape, b, layer_norm(tape, b.ln2_g, b.ln2_b, x)));
  }
  x = layer_norm(tape, layout_.ans_ln_g, layout_.ans_ln_b, x);
  return tape.add_row(tape.matmul(x, param(tape, layout_.out_w)), param(tape, layout_.out_b));
}

template <class T>
std::vector<int> Model<T>::decode_greedy(const Mat& memory, int max_len) const {
  std::vector<int> ids{Vocab::kBos};
  std::vector<int> out;
  const int limit = std::min(max_len, config_.max_answer_len);
  while (static_cast<int>(out.size()) < limit) {
    Tape tape(tensors_.size());
    const Var logits = decoder_logits(tape, tape.constant(memory), ids);
    const auto& v = tape.value(logits);
    Eigen::Index best = 0;
    v.row(v.rows() - 1).maxCoeff(&best);
    if (best == Vocab::kEos) break;
    out.push_back(static_cast<int>(best));
    ids.push_back(static_cast<int>(best));
  }
  return out;
}

template <class T>
typename Model<T>::EpisodeLoss Model<T>::episode_loss(Tape& tape, const EpisodeInputs& in, const LossWeights& w,
                                                      ActionSampler& sampler) const {
  if (in.pages.size() != in.teacher.size() || in.pages.empty()) {
    fail(ErrorCode::kInvalidArgument, "InvalidArgument", "episode needs one teacher action per page");
  }
  EpisodeLoss out;
  const InitResult init = init_state(tape, in.question_ids, in.description_ids);
  Var state = init.state;
  std::vector<Var> nav_terms;
  for (std::size_t i = 0; i < in.pages.size(); ++i) {
    const PageFeatures& page = in.pages[i];
    const NavResult nav = nav_step(tape, state, init.language, screenshot_tokens(tape, page.screenshot_patches),
                                   button_tokens(tape, page.buttons));
    state = nav.state;
    const Mat p = Tape::softmax_rows(tape.value(nav.logits));
    out.probabilities.emplace_back(p.data(), p.data() + p.size());

    const int teacher = in.teacher[i];
    if (teacher < 0 || teacher >= p.cols()) {
      fail(ErrorCode::kInvalidArgument, "IndexOutOfRange", "teacher action out of range");
    }
    int sampled;
    if (i < sampler.fixed.size()) {
      sampled = sampler.fixed[i];
    } else if (sampler.rng) {
      const double u = uniform01(*sampler.rng);
      double c = 0;
      sampled = static_cast<int>(p.cols()) - 1;
      for (Eigen::Index k = 0; k < p.cols(); ++k) {
        c += static_cast<double>(p(0, k));
        if (u < c) {
          sampled = static_cast<int>(k);
          break;
        }
      }
    } else {
      fail(ErrorCode::kInvalidArgument, "InvalidArgument", "no sampled action available");
    }
    sampler.used.push_back(sampled);

    const int s_idx[] = {sampled};
    const int t_idx[] = {teacher};
    nav_terms.push_back(tape.nll(nav.logits, s_idx));
    nav_terms.push_back(tape.scale(tape.nll(nav.logits, t_idx), static_cast<T>(w.eta)));
  }
  const Var l_nav = tape.sum(nav_terms);

  std::vector<int> dec_in{Vocab::kBos};
  std::vector<int> gold;
  const std::size_t max_tokens = static_cast<std::size_t>(config_.max_answer_len);
  for (std::size_t i = 0; i < in.answer_ids.size() && i < max_tokens; ++i) {
    dec_in.push_back(in.answer_ids[i]);
    gold.push_back(in.answer_ids[i]);
  }
  gold.push_back(Vocab::kEos);
  const Var l_ans = tape.nll(decoder_logits(tape, state, dec_in), gold);

  out.l_nav = tape.scalar(l_nav);
  out.l_ans = tape.scalar(l_ans);
  out.final_state = state;
  out.total = tape.add(l_nav, tape.scale(l_ans, static_cast<T>(w.lambda)));
  return out;
}

template class Model<float>;
template class Model<double>;
template class Model<long double>;

// ---------------------------------------------------------------- losses

double nav_loss(const std::vector<std::vector<double>>& probabilities, const std::vector<int>& sampled,
                const std::vector<int>& teacher, double eta) {
  if (sampled.size() != probabilities.size() || teacher.size() != probabilities.size()) {
    fail(ErrorCode::kInvalidArgument, "IndexOutOfRange", "one sampled and one teacher action per step required");
  }
  double loss = 0;
  for (std::size_t t = 0; t < probabilities.size(); ++t) {
    const auto& p = probabilities[t];
    const auto in_range = [&](int a) { return a >= 0 && static_cast<std::size_t>(a) < p.size(); };
    if (!in_range(sampled[t]) || !in_range(teacher[t])) {
      fail(ErrorCode::kInvalidArgument, "IndexOutOfRange", "action index outside the candidate set");
    }
    loss -= std::log(p[static_cast<std::size_t>(sampled[t])]);
    loss -= eta * std::log(p[static_cast<std::size_t>(teacher[t])]);
  }
  return loss;
}

double ans_loss(const Matrix<double>& logits, const std::vector<int>& gold) {
  if (static_cast<Eigen::Index>(gold.size()) != logits.rows()) {
    fail(ErrorCode::kInvalidArgument, "IndexOutOfRange", "one gold token per decoder row required");
  }
  double loss = 0;
  for (Eigen::Index r = 0; r < logits.rows(); ++r) {
    const int g = gold[static_cast<std::size_t>(r)];
    if (g < 0 || g >= logits.cols()) fail(ErrorCode::kInvalidArgument, "IndexOutOfRange", "gold token out of range");
    const double m = logits.row(r).maxCoeff();
    loss += m + std::log((logits.row(r).array() - m).exp().sum()) - logits(r, g);
  }
  return loss;
}

double total_loss(double l_nav, double l_ans, double lambda) { return l_nav + lambda * l_ans; }

// ---------------------------------------------------------------- features

const Matrix<float>& FeatureCache::image(const std::string& ref) {
  auto it = images_.find(ref);
  if (it != images_.end()) return it->second;
  Matrix<float> patches;
  if (ref.empty()) {
    patches = Matrix<float>::Zero(grid_.patch_count(), grid_.raw_dim());
  } else {
    patches = patchify(load_png(graph_.resolve_path(ref)), grid_);
  }
  return images_.emplace(ref, std::move(patches)).first->second;
}

PageFeatures FeatureCache::page(const PageId& id, const Vocab& vocab) {
  const WebPage& page = graph_.page(id);
  PageFeatures f;
  f.screenshot_patches = image(page.screenshot_ref);
  for (const auto& b : page.buttons) {
    ButtonFeatures bf;
    bf.description_ids = vocab.encode(b.description);
    if (!b.image_ref.empty()) bf.image_patches = image(b.image_ref);
    f.buttons.push_back(std::move(bf));
  }
  return f;
}

EpisodeInputs make_episode_inputs(const NavGraph& graph, const EpisodeRecord& record, const Vocab& vocab,
                                  FeatureCache& cache) {
  validate_record(record, graph);
  EpisodeInputs in;
  in.question_ids = vocab.encode(record.question);
  in.description_ids = vocab.encode(record.description);
  in.answer_ids = vocab.encode(record.answer);
  for (std::size_t i = 0; i < record.path.size(); ++i) {
    in.pages.push_back(cache.page(record.path[i], vocab));
    if (i + 1 < record.path.size()) {
      in.teacher.push_back(static_cast<int>(*graph.button_index(record.path[i], record.path[i + 1])));
    } else {
      in.teacher.push_back(static_cast<int>(graph.page(record.path[i]).buttons.size()));
    }
  }
  return in;
}

// ---------------------------------------------------------------- checkpoints

namespace {

constexpr char kMagic[8] = {'W', 'V', 'L', 'N', 'C', 'K', 'P', 'T'};

json config_to_json(const ModelConfig& c) {
  return json{{"dim", c.dim},
              {"heads", c.heads},
              {"ff", c.ff},
              {"n_init", c.n_init},
              {"n_nav", c.n_nav},
              {"n_ans", c.n_ans},
              {"max_text_len", c.max_text_len},
              {"max_answer_len", c.max_answer_len},
              {"image_size", c.patches.image_size},
              {"patch_grid", c.patches.grid},
              {"patch_pool", c.patches.pool}};
}

ModelConfig config_from_json(const json& j) {
  ModelConfig c;
  c.dim = j.at("dim").get<int>();
  c.heads = j.at("heads").get<int>();
  c.ff = j.at("ff").get<int>();
  c.n_init = j.at("n_init").get<int>();
  c.n_nav = j.at("n_nav").get<int>();
  c.n_ans = j.at("n_ans").get<int>();
  c.max_text_len = j.at("max_text_len").get<int>();
  c.max_answer_len = j.at("max_answer_len").get<int>();
  c.patches.image_size = j.at("image_size").get<int>();
  c.patches.grid = j.at("patch_grid").get<int>();
  c.patches.pool = j.at("patch_pool").get<int>();
  return c;
}

void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out += static_cast<char>((v >> (8 * i)) & 0xFF);
}

std::uint64_t get_u64(const std::string& in, std::size_t at) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(in[at + i])) << (8 * i);
  return v;
}

}  // namespace

void save_checkpoint(const std::string& path, const Model<float>& model, const Vocab& vocab) {
  json header;
  header["format"] = 1;
  header["config"] = config_to_json(model.config());
  header["vocab"] = vocab.tokens();
  json tensors = json::array();
  for (std::size_t i = 0; i < model.layout().names.size(); ++i) {
    tensors.push_back({{"name", model.layout().names[i]},
                       {"rows", model.layout().shapes[i].first},
                       {"cols", model.layout().shapes[i].second}});
  }
  header["tensors"] = std::move(tensors);
  const std::string h = header.dump();

  std::string out(kMagic, sizeof kMagic);
  put_u64(out, h.size());
  out += h;
  out.reserve(out.size() + model.parameter_count() * 4);
  for (const auto& t : model.tensors()) {
    for (Eigen::Index k = 0; k < t.size(); ++k) {
      const auto bits = std::bit_cast<std::uint32_t>(t.data()[k]);
      for (int b = 0; b < 4; ++b) out += static_cast<char>((bits >> (8 * b)) & 0xFF);
    }
  }
  write_file(path, out);
}

std::pair<Model<float>, Vocab> load_checkpoint(const std::string& path) {
  const std::string in = read_file(path);
  if (in.size() < 16 || std::memcmp(in.data(), kMagic, sizeof kMagic) != 0) {
    fail(ErrorCode::kParse, "InvalidCheckpoint", path + ": bad magic");
  }
  const std::uint64_t hlen = get_u64(in, 8);
  if (16 + hlen > in.size()) fail(ErrorCode::kParse, "InvalidCheckpoint", path + ": truncated header");
  json header;
  try {
    header = json::parse(in.substr(16, hlen));
  } catch (const json::exception& e) {
    fail(ErrorCode::kParse, "InvalidCheckpoint", path + ": " + e.what());
  }
  const ModelConfig config = config_from_json(header.at("config"));
  Vocab vocab(header.at("vocab").get<std::vector<std::string>>());
  const ParamLayout layout = ParamLayout::make(config, vocab.size());
  std::size_t at = 16 + hlen;
  if (in.size() - at != layout.total * 4) fail(ErrorCode::kParse, "InvalidCheckpoint", path + ": parameter size mismatch");
  std::vector<Matrix<float>> tensors;
  for (const auto& [rows, cols] : layout.shapes) {
    Matrix<float> m(rows, cols);
    for (Eigen::Index k = 0; k < m.size(); ++k) {
      std::uint32_t bits = 0;
      for (int b = 0; b < 4; ++b) bits |= static_cast<std::uint32_t>(static_cast<unsigned char>(in[at + b])) << (8 * b);
      m.data()[k] = std::bit_cast<float>(bits);
      at += 4;
    }
    tensors.push_back(std::move(m));
  }
  return {Model<float>(config, vocab.size(), std::move(tensors)), std::move(vocab)};
}

}  // namespace webvln
