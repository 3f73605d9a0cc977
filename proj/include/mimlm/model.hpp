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

#pragma once

// GRU sentence auto-encoder: a reversed-input GRU encoder producing a
// diagonal Gaussian posterior, and a GRU decoder that sees the latent code
// concatenated to every input embedding.

#include <cstddef>
#include <functional>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "mimlm/autodiff.hpp"
#include "mimlm/rng.hpp"
#include "mimlm/tensor.hpp"
#include "mimlm/text.hpp"

namespace mimlm {

struct ModelDims {
  std::size_t vocab = 0;   // V
  std::size_t embed = 0;   // e
  std::size_t hidden = 0;  // h
  std::size_t latent = 0;  // d
  // When set, log sigma = floor + softplus(raw - floor). Off reproduces the
  // plain affine head.
  std::optional<double> log_sigma_floor;

  friend bool operator==(const ModelDims&, const ModelDims&) = default;
};

// Input weights are [in x h], recurrent weights [h x h], biases [h].
struct GruWeights {
  Tensor w_r, w_u, w_h;
  Tensor u_r, u_u, u_h;
  Tensor b_r, b_u, b_h;

  static GruWeights zeros(std::size_t in, std::size_t hidden);
};

struct ModelParams {
  ModelDims dims;
  Tensor embed;  // [V x e]
  GruWeights enc;  // in = e
  GruWeights dec;  // in = e + d
  Tensor mu_w, mu_b;  // [h x d], [d]
  Tensor log_sigma_w, log_sigma_b;
  Tensor out_w, out_b;  // [h x V], [V]

  static ModelParams zeros(const ModelDims& dims);
  // Matrices uniform in (-scale, scale), biases zero.
  static ModelParams init(const ModelDims& dims, Rng& rng, double scale = 0.1);

  // Stable (name, tensor) listing used by optimizers and checkpoints.
  std::vector<std::pair<std::string, Tensor*>> named();
  std::vector<std::pair<std::string, const Tensor*>> named() const;
  std::size_t param_count() const;
  void zero_grad();
};

// Closed form of param_count() from the dimensions.
std::size_t param_count_formula(const ModelDims& dims);

struct BoundGru {
  ad::Var w_r, w_u, w_h, u_r, u_u, u_h, b_r, b_u, b_h;
};

// Parameters registered in one graph.
struct BoundModel {
  const ModelParams* params = nullptr;
  ad::Graph* graph = nullptr;
  ad::Var embed;
  BoundGru enc, dec;
  ad::Var mu_w, mu_b, log_sigma_w, log_sigma_b, out_w, out_b;
  double dropout = 0.0;
};

// trainable=true binds as gradient-accumulating parameters.
BoundModel bind(ad::Graph& g, ModelParams& params, double dropout);
BoundModel bind_const(ad::Graph& g, const ModelParams& params);

// h' = (1-u)*h + u*tanh(W_h x + U_h(r*h) + b_h)
ad::Var gru_step(const BoundGru& w, ad::Var x, ad::Var h);

struct PosteriorVars {
  ad::Var mu;         // [B x d]
  ad::Var log_sigma;  // [B x d]
};

// Runs the encoder over the reversed sequences of a batch.
PosteriorVars encode_posterior(const BoundModel& m,
                               std::span<const TokenSeq> batch, ad::Mode mode,
                               Rng& rng);
// z = mu + exp(log_sigma) * eps
// noise, when given, receives the standard-normal draws.
ad::Var sample_latent(const PosteriorVars& q, Rng& rng, Tensor* noise = nullptr);
// Teacher-forced log p(x|z) per sequence, [B x 1].
ad::Var decode_logprob(const BoundModel& m, std::span<const TokenSeq> batch,
                       ad::Var z, ad::Mode mode, Rng& rng);

// Value-level posterior of one sentence.
struct GaussianPosterior {
  std::vector<Real> mu;
  std::vector<Real> log_sigma;

  std::size_t dim() const { return mu.size(); }
  std::vector<Real> sigma() const;
};

GaussianPosterior encode_posterior(const ModelParams& p, const TokenSeq& x);
std::vector<GaussianPosterior> encode_posteriors(const ModelParams& p,
                                                 std::span<const TokenSeq> xs);
std::vector<Real> sample_latent(const GaussianPosterior& q, Rng& rng,
                                double sigma_multiplier = 1.0);
double decode_logprob(const ModelParams& p, const TokenSeq& x,
                      std::span<const Real> z);

// Encoder passes performed on this thread; lets tests account for calls.
std::size_t encoder_pass_count();

enum class DecodeStrategy { kAncestral, kGreedy };

// Autoregressive generation from <BOT>.  Stops at <EOT> or after max_len
// tokens, in which case <EOT> is appended.
TokenSeq decode_sample(const ModelParams& p, std::span<const Real> z,
                       DecodeStrategy strategy,
                       const std::set<TokenId>& banned, std::size_t max_len,
                       Rng& rng);

// Log-probabilities of the first generated token given z; for tests of
// generation.
std::vector<Real> first_step_logprobs(const ModelParams& p,
                                      std::span<const Real> z);

}  // namespace mimlm
