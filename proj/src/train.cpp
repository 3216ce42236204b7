#include "webvln/train.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>

#include <json.hpp>

#include "webvln/error.hpp"

namespace webvln {

void TrainConfig::validate() const {
  auto bad = [](const std::string& what) { fail(ErrorCode::kInvalidArgument, "InvalidConfig", what); };
  if (!(learning_rate > 0)) bad("learning_rate must be positive");
  if (iterations == 0) bad("iterations must be positive");
  if (batch_size == 0) bad("batch_size must be positive");
  if (eta < 0 || lambda < 0) bad("eta and lambda must be non-negative");
  if (weight_decay < 0) bad("weight_decay must be non-negative");
  if (!(lr_decay_factor > 0) || lr_decay_factor > 1) bad("lr_decay_factor must be in (0, 1]");
  if (!(lr_decay_fraction > 0)) bad("lr_decay_fraction must be positive");
  if (clip_norm < 0) bad("clip_norm must be non-negative");
}

double TrainConfig::lr_at(std::size_t iteration) const {
  const auto period = static_cast<std::size_t>(std::max(1.0, std::floor(lr_decay_fraction * iterations)));
  return learning_rate * std::pow(lr_decay_factor, static_cast<double>(iteration / period));
}

template <class T>
LossAndGradient<T> loss_and_gradient(const Model<T>& model, const EpisodeInputs& inputs, const LossWeights& weights,
                                     ActionSampler& sampler) {
  ad::Tape<T> tape(model.tensors().size());
  const std::size_t before = sampler.used.size();
  auto ep = model.episode_loss(tape, inputs, weights, sampler);
  tape.backward(ep.total);

  LossAndGradient<T> out;
  out.loss = tape.scalar(ep.total);
  out.l_nav = ep.l_nav;
  out.l_ans = ep.l_ans;
  out.sampled.assign(sampler.used.begin() + static_cast<std::ptrdiff_t>(before), sampler.used.end());
  out.grads.reserve(model.tensors().size());
  for (const auto& t : model.tensors()) out.grads.push_back(Matrix<T>::Zero(t.rows(), t.cols()));
  tape.for_each_param_grad([&](std::size_t p, const Matrix<T>& g) { out.grads[p] = g; });
  return out;
}

template LossAndGradient<float> loss_and_gradient(const Model<float>&, const EpisodeInputs&, const LossWeights&,
                                                  ActionSampler&);
template LossAndGradient<double> loss_and_gradient(const Model<double>&, const EpisodeInputs&, const LossWeights&,
                                                   ActionSampler&);
template LossAndGradient<GradReal> loss_and_gradient(const Model<GradReal>&, const EpisodeInputs&,
                                                     const LossWeights&, ActionSampler&);

Trainer::Trainer(Model<float>& model, TrainConfig config) : model_(model), config_(std::move(config)) {
  config_.validate();
  for (const auto& t : model_.tensors()) {
    m_.push_back(Matrix<float>::Zero(t.rows(), t.cols()));
    v_.push_back(Matrix<float>::Zero(t.rows(), t.cols()));
  }
}

StepResult Trainer::step(const std::vector<const EpisodeInputs*>& batch, Rng& rng) {
  if (batch.empty()) fail(ErrorCode::kInvalidArgument, "InvalidArgument", "empty batch");
  const LossWeights weights{config_.eta, config_.lambda};
  StepResult r;
  std::vector<Matrix<float>> sum;
  for (const EpisodeInputs* in : batch) {
    ActionSampler sampler;
    sampler.rng = &rng;
    auto lg = loss_and_gradient(model_, *in, weights, sampler);
    r.loss += lg.loss;
    r.l_nav += lg.l_nav;
    r.l_ans += lg.l_ans;
    if (sum.empty()) {
      sum = std::move(lg.grads);
    } else {
      for (std::size_t i = 0; i < sum.size(); ++i) sum[i] += lg.grads[i];
    }
  }
  const auto n = static_cast<float>(batch.size());
  for (auto& g : sum) g /= n;
  r.loss /= n;
  r.l_nav /= n;
  r.l_ans /= n;
  apply(sum);
  ++iteration_;
  return r;
}

void Trainer::apply(std::vector<Matrix<float>>& grads) {
  if (config_.clip_norm > 0) {
    double sq = 0;
    for (const auto& g : grads) sq += static_cast<double>(g.squaredNorm());
    const double norm = std::sqrt(sq);
    if (!std::isfinite(norm)) fail(ErrorCode::kNumeric, "NonFiniteGradient", "gradient norm is not finite");
    if (norm > config_.clip_norm) {
      const auto s = static_cast<float>(config_.clip_norm / norm);
      for (auto& g : grads) g *= s;
    }
  }
  const auto lr = static_cast<float>(config_.lr_at(iteration_));
  auto& params = model_.tensors();
  if (config_.optimizer == Optimizer::kSgd) {
    for (std::size_t i = 0; i < params.size(); ++i) params[i] -= lr * grads[i];
    return;
  }
  const auto b1 = static_cast<float>(config_.beta1);
  const auto b2 = static_cast<float>(config_.beta2);
  const auto t = static_cast<float>(iteration_ + 1);
  const float c1 = 1.0f - std::pow(b1, t);
  const float c2 = 1.0f - std::pow(b2, t);
  const auto eps = static_cast<float>(config_.adam_eps);
  const auto wd = static_cast<float>(config_.weight_decay);
  for (std::size_t i = 0; i < params.size(); ++i) {
    m_[i] = b1 * m_[i] + (1.0f - b1) * grads[i];
    v_[i] = b2 * v_[i] + (1.0f - b2) * grads[i].cwiseProduct(grads[i]);
    const Matrix<float> update =
        ((m_[i].array() / c1) / ((v_[i].array() / c2).sqrt() + eps)).matrix() + wd * params[i];
    params[i] -= lr * update;
  }
}

TrainSummary train(Model<float>& model, const std::vector<EpisodeInputs>& data, const TrainConfig& config,
                   const TrainHooks& hooks) {
  if (data.empty()) fail(ErrorCode::kInvalidArgument, "InvalidArgument", "no training records");
  Trainer trainer(model, config);
  Rng rng(config.seed);
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  shuffle_in_place(order, rng);
  std::size_t cursor = 0;

  std::ofstream log;
  if (!hooks.log_path.empty()) {
    log.open(hooks.log_path, std::ios::trunc);
    if (!log) fail(ErrorCode::kIo, "IoError", "cannot write " + hooks.log_path);
  }

  TrainSummary summary;
  for (std::size_t it = 0; it < config.iterations; ++it) {
    std::vector<const EpisodeInputs*> batch;
    for (std::size_t b = 0; b < config.batch_size; ++b) {
      if (cursor == order.size()) {
        shuffle_in_place(order, rng);
        cursor = 0;
      }
      batch.push_back(&data[order[cursor++]]);
    }
    const StepResult r = trainer.step(batch, rng);
    summary.history.push_back(r);
    summary.iterations = it + 1;
    if (log) {
      log << nlohmann::json{{"iter", it + 1}, {"loss", r.loss}, {"l_nav", r.l_nav}, {"l_ans", r.l_ans}}.dump() << '\n';
      log.flush();
    }
    if (hooks.on_checkpoint && config.checkpoint_every > 0 && (it + 1) % config.checkpoint_every == 0) {
      hooks.on_checkpoint(it + 1);
    }
    if (hooks.after_step && hooks.after_step(it + 1, r)) break;
  }
  if (hooks.on_checkpoint) hooks.on_checkpoint(summary.iterations);
  return summary;
}

Vocab build_vocab(const std::vector<EpisodeRecord>& train_records, const std::vector<const NavGraph*>& graphs) {
  std::vector<std::string> texts;
  for (const auto& r : train_records) {
    texts.push_back(r.question);
    texts.push_back(r.description);
    texts.push_back(r.answer);
  }
  for (const NavGraph* g : graphs) {
    for (const auto& [id, page] : g->pages()) {
      for (const auto& b : page.buttons) texts.push_back(b.description);
    }
  }
  return Vocab::build(texts);
}

GradCheckResult grad_check(const Model<GradReal>& model, const EpisodeInputs& inputs, const GradCheckOptions& opt) {
  if (!(opt.eps > 0)) fail(ErrorCode::kInvalidArgument, "InvalidArgument", "eps must be positive");
  Model<GradReal> work = model;
  Rng rng(opt.seed);
  ActionSampler sampler;
  sampler.rng = &rng;
  auto base = loss_and_gradient(work, inputs, opt.weights, sampler);
  if (opt.mutate_gradient) opt.mutate_gradient(base.grads, work.layout());

  // Stratified coordinate choice: every tensor contributes, then uniform fill.
  const ParamLayout& layout = work.layout();
  Rng pick(opt.seed ^ 0x9E3779B97F4A7C15ULL);
  std::set<std::size_t> coords;
  for (std::size_t t = 0; t < layout.names.size(); ++t) {
    const std::size_t n = static_cast<std::size_t>(layout.shapes[t].first) * static_cast<std::size_t>(layout.shapes[t].second);
    const std::size_t want = std::min(opt.per_tensor, n);
    std::set<std::size_t> local;
    while (local.size() < want) local.insert(uniform_index(pick, n));
    for (std::size_t k : local) coords.insert(layout.offsets[t] + k);
  }
  const std::size_t target = std::min(std::max(opt.min_coords, coords.size()), layout.total);
  while (coords.size() < target) coords.insert(uniform_index(pick, layout.total));

  auto loss_at = [&]() {
    ad::Tape<GradReal> tape(work.tensors().size());
    ActionSampler fixed;
    fixed.fixed = base.sampled;
    return tape.scalar(work.episode_loss(tape, inputs, opt.weights, fixed).total);
  };

  GradCheckResult res;
  const auto eps = static_cast<GradReal>(opt.eps);
  for (std::size_t i : coords) {
    GradReal& p = work.flat(i);
    const GradReal orig = p;
    const GradReal hi = orig + eps;
    const GradReal lo = orig - eps;
    p = hi;
    const GradReal f_hi = loss_at();
    p = lo;
    const GradReal f_lo = loss_at();
    p = orig;
    const GradReal numeric = (f_hi - f_lo) / (hi - lo);
    const auto [t, k] = work.locate(i);
    const GradReal analytic = base.grads[t].data()[k];
    if (!std::isfinite(static_cast<double>(numeric)) || !std::isfinite(static_cast<double>(analytic))) {
      fail(ErrorCode::kNumeric, "NonFiniteGradient", "non-finite gradient at " + layout.names[t]);
    }
    const GradReal denom = std::max({std::fabs(analytic), std::fabs(numeric), GradReal(1e-8)});
    const double rel = static_cast<double>(std::fabs(analytic - numeric) / denom);
    ++res.coords_checked;
    if (rel > res.max_relative_error || res.coords_checked == 1) {
      res.max_relative_error = rel;
      res.worst_tensor = layout.names[t];
      res.worst_offset = k;
      res.worst_analytic = static_cast<double>(analytic);
      res.worst_numeric = static_cast<double>(numeric);
    }
  }
  return res;
}

}  // namespace webvln
