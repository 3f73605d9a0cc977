// Copyright 2026 The mimlm Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "mimlm/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include "mimlm/error.hpp"
#include "mimlm/losses.hpp"

namespace mimlm {
namespace {

std::vector<Tensor*> param_list(ModelParams& p) {
  std::vector<Tensor*> out;
  for (auto& [name, t] : p.named()) out.push_back(t);
  return out;
}

double beta_at(const TrainConfig& c, std::size_t step) {
  switch (c.objective) {
    case Objective::kVae: return 1.0;
    case Objective::kVaeAnnealed: return kl_anneal_schedule(step, c.kl_anneal_steps);
    default: return 0.0;
  }
}

std::vector<TokenSeq> gather(std::span<const TokenSeq> data,
                             std::span<const std::size_t> idx) {
  std::vector<TokenSeq> out;
  out.reserve(idx.size());
  for (std::size_t i : idx) out.push_back(data[i]);
  return out;
}

TrainResult run(Checkpoint state, const Corpus& corpus, std::size_t max_epochs,
                const TrainOptions& options) {
  const TrainConfig& cfg = state.config;
  if (corpus.train.empty()) throw IoError("training corpus is empty");
  std::span<const TokenSeq> valid =
      corpus.valid.empty() ? std::span<const TokenSeq>(corpus.train)
                           : std::span<const TokenSeq>(corpus.valid);
  const Rng root(cfg.seed);
  PlateauScheduler scheduler(cfg.plateau_patience, cfg.lr_decay);
  scheduler.restore(state.best_valid, state.plateau_bad_epochs);
  const double clip = cfg.effective_clip();

  TrainResult result;
  while (state.epoch < max_epochs) {
    Rng epoch_rng = root.split("epoch").split(state.epoch);
    auto batches = make_batches(corpus.train, cfg.batch_size, cfg.bucket_window,
                                epoch_rng);
    double loss_sum = 0;
    std::size_t loss_count = 0;
    double beta = beta_at(cfg, state.step);
    for (const auto& idx : batches) {
      std::vector<TokenSeq> batch = gather(corpus.train, idx);
      Rng step_rng = root.split("step").split(state.step);
      std::vector<TokenSeq> enc_inputs;
      if (cfg.unk_corrupt_rate > 0) {
        Rng unk_rng = step_rng.split("unk");
        for (const TokenSeq& x : batch)
          enc_inputs.push_back(corrupt_unk(x, cfg.unk_corrupt_rate, unk_rng));
      }
      beta = beta_at(cfg, state.step);
      ad::Graph g;
      BoundModel m = bind(g, state.params, cfg.dropout);
      LossResult loss = objective_loss(cfg.objective, m, batch, beta,
                                       ad::Mode::kTrain, step_rng, enc_inputs);
      if (!std::isfinite(loss.breakdown.total)) {
        throw NumericError("training diverged: non-finite loss at epoch " +
                           std::to_string(state.epoch + 1) + ", step " +
                           std::to_string(state.step) + " (recon " +
                           std::to_string(loss.breakdown.recon_term) +
                           ", latent " + std::to_string(loss.breakdown.latent_term) +
                           ")");
      }
      g.backward(loss.total);
      auto params = param_list(state.params);
      if (cfg.optimizer == OptimizerKind::kAdam) {
        if (clip > 0) clip_grad_norm(params, clip);
        adam_step(params, state.adam, state.lr);
      } else {
        sgd_clipped_step(params, state.lr, clip > 0 ? clip : std::numeric_limits<double>::max());
      }
      state.params.zero_grad();
      loss_sum += loss.breakdown.total * static_cast<double>(batch.size());
      loss_count += batch.size();
      ++state.step;
    }
    ++state.epoch;
    EpochRecord rec;
    rec.epoch = state.epoch;
    rec.train_loss = loss_sum / static_cast<double>(loss_count);
    rec.valid_loss = validation_loss(cfg, state.params, valid, root.split("valid"));
    rec.lr = state.lr;
    rec.beta = beta_at(cfg, state.step);
    if (!std::isfinite(rec.valid_loss)) {
      throw NumericError("validation loss is non-finite after epoch " +
                         std::to_string(state.epoch));
    }
    if (rec.valid_loss < scheduler.best()) state.best_params = state.params;
    if (scheduler.observe(rec.valid_loss)) state.lr *= cfg.lr_decay;
    state.best_valid = scheduler.best();
    state.plateau_bad_epochs = scheduler.bad_epochs();
    result.log.push_back(rec);
    if (options.on_epoch) options.on_epoch(rec);
  }
  result.checkpoint = std::move(state);
  return result;
}

}  // namespace

std::vector<std::vector<std::size_t>> make_batches(
    std::span<const TokenSeq> data, std::size_t batch_size,
    std::size_t bucket_window, Rng& rng) {
  if (batch_size == 0) throw ConfigError("batch_size must be >= 1");
  std::vector<std::size_t> order(data.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  rng.shuffle(order);
  if (bucket_window > 0) {
    const std::size_t window = batch_size * bucket_window;
    for (std::size_t start = 0; start < order.size(); start += window) {
      auto end = order.begin() + static_cast<std::ptrdiff_t>(
                                     std::min(order.size(), start + window));
      std::stable_sort(order.begin() + static_cast<std::ptrdiff_t>(start), end,
                       [&](std::size_t a, std::size_t b) {
                         return data[a].size() < data[b].size();
                       });
    }
  }
  std::vector<std::vector<std::size_t>> batches;
  for (std::size_t start = 0; start < order.size(); start += batch_size) {
    const std::size_t end = std::min(order.size(), start + batch_size);
    batches.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(start),
                         order.begin() + static_cast<std::ptrdiff_t>(end));
  }
  rng.shuffle(batches);
  return batches;
}

double validation_loss(const TrainConfig& config, const ModelParams& params,
                       std::span<const TokenSeq> data, Rng rng) {
  if (data.empty()) throw IoError("validation set is empty");
  const double beta = config.objective == Objective::kVae ||
                              config.objective == Objective::kVaeAnnealed
                          ? 1.0
                          : 0.0;
  double total = 0;
  for (std::size_t start = 0; start < data.size(); start += config.batch_size) {
    auto batch = data.subspan(start, std::min(config.batch_size, data.size() - start));
    ad::Graph g(false);
    BoundModel m = bind_const(g, params);
    LossResult r = objective_loss(config.objective, m, batch, beta,
                                  ad::Mode::kEval, rng);
    total += r.breakdown.total * static_cast<double>(batch.size());
  }
  return total / static_cast<double>(data.size());
}

TrainResult train(const TrainConfig& config, const Vocabulary& vocab,
                  const Corpus& corpus, const TrainOptions& options) {
  config.validate();
  Checkpoint state;
  state.config = config;
  state.vocab = vocab;
  Rng init_rng = Rng(config.seed).split("init");
  state.params = ModelParams::init(
      ModelDims{vocab.size(), config.embed_dim, config.hidden_dim, config.latent_dim,
                config.log_sigma_floor},
      init_rng, config.init_scale);
  state.lr = config.effective_lr();
  state.best_valid = std::numeric_limits<double>::infinity();
  return run(std::move(state), corpus, config.max_epochs, options);
}

TrainResult resume(Checkpoint checkpoint, const Corpus& corpus,
                   std::size_t max_epochs, const TrainOptions& options) {
  checkpoint.config.max_epochs = max_epochs;
  return run(std::move(checkpoint), corpus, max_epochs, options);
}

std::string epoch_log_csv(std::span<const EpochRecord> log) {
  std::string out = "epoch,train_loss,valid_loss,lr,beta\n";
  char buf[256];
  for (const EpochRecord& r : log) {
    std::snprintf(buf, sizeof(buf), "%zu,%.17g,%.17g,%.17g,%.17g\n", r.epoch,
                  r.train_loss, r.valid_loss, r.lr, r.beta);
    out += buf;
  }
  return out;
}

}  // namespace mimlm
