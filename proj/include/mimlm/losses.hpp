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

// Training objectives: the A-MIM bound, the (annealed) ELBO and the
// deterministic auto-encoder cross-entropy, plus their Gaussian pieces.

#include <cstddef>
#include <span>
#include <string_view>

#include "mimlm/autodiff.hpp"
#include "mimlm/model.hpp"

namespace mimlm {

enum class Objective { kMim, kVae, kVaeAnnealed, kAe };

Objective parse_objective(std::string_view name);
std::string_view objective_name(Objective o);

inline constexpr double kHalfLog2Pi = 0.91893853320467274178;

struct LossBreakdown {
  double total = 0;
  double recon_term = 0;   // -(1/N) sum log p(x|z)
  double latent_term = 0;  // objective-specific, total = recon + latent
  double beta = 0;         // KL weight (VAE only)
  double recon_per_token = 0;
};

struct LossResult {
  ad::Var total;
  LossBreakdown breakdown;
};

// sum_d [-1/2 ln 2pi - log_sigma_d - (z_d - mu_d)^2 / (2 sigma_d^2)]
double diag_gaussian_logpdf(std::span<const Real> z, std::span<const Real> mu,
                            std::span<const Real> log_sigma);
double std_normal_logpdf(std::span<const Real> z);
// KL(N(mu, sigma^2) || N(0, I)) = sum_d (mu^2 + sigma^2 - 1 - 2 log sigma)/2
double kl_diag_gaussian_to_std(std::span<const Real> mu,
                               std::span<const Real> log_sigma);
double kl_diag_gaussian_to_std(const GaussianPosterior& q);

// Row-wise graph versions, [B x d] -> [B x 1].
ad::Var gaussian_logpdf_rows(ad::Var z, ad::Var mu, ad::Var log_sigma);
// log q(z|x) at z = mu + sigma * eps.  Equal to gaussian_logpdf_rows but
// stays finite when sigma underflows.
ad::Var reparam_logpdf_rows(ad::Var log_sigma, const Tensor& eps);
ad::Var std_normal_logpdf_rows(ad::Var z);
ad::Var kl_to_std_rows(ad::Var mu, ad::Var log_sigma);

// Combination of per-row terms ([B x 1]) into the batch objectives.
LossResult combine_amim(ad::Var log_px, ad::Var log_qz, ad::Var log_pz,
                        std::size_t tokens);
LossResult combine_elbo(ad::Var log_px, ad::Var kl, double beta,
                        std::size_t tokens);
LossResult combine_ae(ad::Var log_px, std::size_t tokens);

// Full objectives on a batch.  encoder_inputs, when non-empty, replaces the
// sequences fed to the encoder (e.g. <UNK>-corrupted copies); the decoder
// always reconstructs batch.
LossResult amim_loss(const BoundModel& m, std::span<const TokenSeq> batch,
                     ad::Mode mode, Rng& rng,
                     std::span<const TokenSeq> encoder_inputs = {});
LossResult elbo_loss(const BoundModel& m, std::span<const TokenSeq> batch,
                     double beta, ad::Mode mode, Rng& rng,
                     std::span<const TokenSeq> encoder_inputs = {});
LossResult ae_loss(const BoundModel& m, std::span<const TokenSeq> batch,
                   ad::Mode mode, Rng& rng,
                   std::span<const TokenSeq> encoder_inputs = {});

LossResult objective_loss(Objective o, const BoundModel& m,
                          std::span<const TokenSeq> batch, double beta,
                          ad::Mode mode, Rng& rng,
                          std::span<const TokenSeq> encoder_inputs = {});

// Linear warm-up min(1, step/total_steps).
double kl_anneal_schedule(std::size_t step, std::size_t total_steps = 10000);

}  // namespace mimlm
