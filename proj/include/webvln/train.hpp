#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "webvln/model.hpp"

namespace webvln {

enum class Optimizer { kAdamW, kSgd };

struct TrainConfig {
  double learning_rate = 1e-3;
  std::size_t iterations = 1000;
  std::size_t batch_size = 4;
  double eta = 1.0;
  double lambda = 1.0;
  std::uint64_t seed = 0;
  Optimizer optimizer = Optimizer::kAdamW;
  double weight_decay = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  double clip_norm = 1.0;  // global gradient norm clip, 0 = off
  // Step decay: lr *= lr_decay_factor every lr_decay_fraction * iterations.
  double lr_decay_factor = 0.5;
  double lr_decay_fraction = 0.25;
  std::size_t checkpoint_every = 0;  // 0 = only at the end

  // Throws Error{kInvalidArgument, "InvalidConfig"}.
  void validate() const;
  double lr_at(std::size_t iteration) const;
};

template <class T>
struct LossAndGradient {
  T loss = 0;
  T l_nav = 0;
  T l_ans = 0;
  std::vector<Matrix<T>> grads;  // one per tensor, zero where unreached
  std::vector<int> sampled;
};

// Forward and backward pass of the total loss for one record.
template <class T>
LossAndGradient<T> loss_and_gradient(const Model<T>& model, const EpisodeInputs& inputs, const LossWeights& weights,
                                     ActionSampler& sampler);

struct StepResult {
  double loss = 0;
  double l_nav = 0;
  double l_ans = 0;
};

// Holds optimiser state for one model.
class Trainer {
 public:
  Trainer(Model<float>& model, TrainConfig config);

  // One update on the mean loss of `batch`; records are reduced in order.
  StepResult step(const std::vector<const EpisodeInputs*>& batch, Rng& rng);

  std::size_t iteration() const { return iteration_; }
  const TrainConfig& config() const { return config_; }

 private:
  void apply(std::vector<Matrix<float>>& grads);

  Model<float>& model_;
  TrainConfig config_;
  std::size_t iteration_ = 0;
  std::vector<Matrix<float>> m_, v_;
};

struct TrainHooks {
  std::string log_path;  // JSONL {iter, loss, l_nav, l_ans}; empty = no log
  std::function<void(std::size_t iter)> on_checkpoint;
  // Called after every step; returning true ends training early.
  std::function<bool(std::size_t iter, const StepResult&)> after_step;
};

struct TrainSummary {
  std::size_t iterations = 0;
  std::vector<StepResult> history;
};

// Seeded epoch shuffling over `data` with batches of config.batch_size.
TrainSummary train(Model<float>& model, const std::vector<EpisodeInputs>& data, const TrainConfig& config,
                   const TrainHooks& hooks = {});

// Vocabulary from training-split text and every button description of the graphs.
Vocab build_vocab(const std::vector<EpisodeRecord>& train_records, const std::vector<const NavGraph*>& graphs);

// Gradient checks run in the widest floating type available.
using GradReal = long double;

struct GradCheckOptions {
  double eps = 1e-5;
  std::size_t min_coords = 500;
  std::size_t per_tensor = 8;  // at least this many coordinates from every tensor
  std::uint64_t seed = 0;
  LossWeights weights;
  // Applied to the analytic gradient before comparison (mutation testing).
  std::function<void(std::vector<Matrix<GradReal>>& grads, const ParamLayout& layout)> mutate_gradient;
};

struct GradCheckResult {
  double max_relative_error = 0;
  std::size_t coords_checked = 0;
  std::string worst_tensor;
  std::size_t worst_offset = 0;
  double worst_analytic = 0;
  double worst_numeric = 0;
};

// Central differences against backprop over a stratified seeded coordinate
// subset; |a - n| / max(|a|, |n|, 1e-8). Throws Error{kNumeric, "NonFiniteGradient"}.
GradCheckResult grad_check(const Model<GradReal>& model, const EpisodeInputs& inputs,
                           const GradCheckOptions& options = {});

}  // namespace webvln
