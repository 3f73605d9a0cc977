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

#include "mimlm/losses.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "mimlm/error.hpp"

namespace mimlm {

Objective parse_objective(std::string_view name) {
  if (name == "mim") return Objective::kMim;
  if (name == "vae") return Objective::kVae;
  if (name == "vae+kl") return Objective::kVaeAnnealed;
  if (name == "ae") return Objective::kAe;
  throw ConfigError("objective must be one of mim, vae, vae+kl, ae; got '" +
                    std::string(name) + "'");
}

std::string_view objective_name(Objective o) {
  switch (o) {
    case Objective::kMim: return "mim";
    case Objective::kVae: return "vae";
    case Objective::kVaeAnnealed: return "vae+kl";
    case Objective::kAe: return "ae";
  }
  return "?";
}

double diag_gaussian_logpdf(std::span<const Real> z, std::span<const Real> mu,
                            std::span<const Real> log_sigma) {
  if (z.size() != mu.size() || z.size() != log_sigma.size()) {
    throw DimensionError("diag_gaussian_logpdf: operand sizes differ");
  }
  double acc = 0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    double t = (static_cast<double>(z[i]) - mu[i]) * std::exp(-static_cast<double>(log_sigma[i]));
    acc += -kHalfLog2Pi - log_sigma[i] - 0.5 * t * t;
  }
  return acc;
}

double std_normal_logpdf(std::span<const Real> z) {
  double acc = 0;
  for (Real v : z) acc += -kHalfLog2Pi - 0.5 * static_cast<double>(v) * v;
  return acc;
}

double kl_diag_gaussian_to_std(std::span<const Real> mu,
                               std::span<const Real> log_sigma) {
  if (mu.size() != log_sigma.size()) {
    throw DimensionError("kl_diag_gaussian_to_std: operand sizes differ");
  }
  double acc = 0;
  for (std::size_t i = 0; i < mu.size(); ++i) {
    double ls = log_sigma[i];
    acc += 0.5 * (static_cast<double>(mu[i]) * mu[i] + std::exp(2 * ls) - 1 - 2 * ls);
  }
  return acc;
}

double kl_diag_gaussian_to_std(const GaussianPosterior& q) {
  return kl_diag_gaussian_to_std(q.mu, q.log_sigma);
}

ad::Var gaussian_logpdf_rows(ad::Var z, ad::Var mu, ad::Var log_sigma) {
  using namespace ad;
  Var t = (z - mu) * ad::exp(-log_sigma);
  Var per_dim = add_scalar(neg(log_sigma) - scale(square(t), 0.5), -kHalfLog2Pi);
  return row_sum(per_dim);
}

ad::Var reparam_logpdf_rows(ad::Var log_sigma, const Tensor& eps) {
  using namespace ad;
  if (eps.shape() != log_sigma.shape()) {
    throw DimensionError("reparam_logpdf_rows: noise " + shape_string(eps.shape()) +
                         " vs " + shape_string(log_sigma.shape()));
  }
  const std::size_t b = eps.rows(), d = eps.cols();
  Tensor c({b, 1});
  for (std::size_t i = 0; i < b; ++i) {
    double acc = 0;
    for (std::size_t j = 0; j < d; ++j) acc += 0.5 * eps[i * d + j] * eps[i * d + j];
    c[i] = static_cast<Real>(-acc - static_cast<double>(d) * kHalfLog2Pi);
  }
  return row_sum(neg(log_sigma)) + log_sigma.graph()->constant(std::move(c));
}

ad::Var std_normal_logpdf_rows(ad::Var z) {
  using namespace ad;
  return row_sum(add_scalar(scale(square(z), -0.5), -kHalfLog2Pi));
}

ad::Var kl_to_std_rows(ad::Var mu, ad::Var log_sigma) {
  using namespace ad;
  Var per_dim = square(mu) + ad::exp(scale(log_sigma, 2)) - scale(log_sigma, 2);
  return row_sum(scale(add_scalar(per_dim, -1), 0.5));
}

namespace {

double per_token(double recon_sum, std::size_t tokens) {
  return tokens ? recon_sum / static_cast<double>(tokens) : 0.0;
}

}  // namespace

LossResult combine_amim(ad::Var log_px, ad::Var log_qz, ad::Var log_pz,
                        std::size_t tokens) {
  using namespace ad;
  const double n = static_cast<double>(log_px.value().rows());
  Var recon = neg(mean(log_px));
  Var latent = scale(mean(log_qz + log_pz), -0.5);
  LossResult r{recon + latent, {}};
  r.breakdown.recon_term = recon.item();
  r.breakdown.latent_term = latent.item();
  r.breakdown.total = r.total.item();
  r.breakdown.recon_per_token = per_token(r.breakdown.recon_term * n, tokens);
  return r;
}

LossResult combine_elbo(ad::Var log_px, ad::Var kl, double beta,
                        std::size_t tokens) {
  using namespace ad;
  if (!(beta >= 0)) throw ConfigError("KL weight must be non-negative");
  const double n = static_cast<double>(log_px.value().rows());
  Var recon = neg(mean(log_px));
  Var latent = scale(mean(kl), static_cast<Real>(beta));
  LossResult r{recon + latent, {}};
  r.breakdown.recon_term = recon.item();
  r.breakdown.latent_term = latent.item();
  r.breakdown.total = r.total.item();
  r.breakdown.beta = beta;
  r.breakdown.recon_per_token = per_token(r.breakdown.recon_term * n, tokens);
  return r;
}

LossResult combine_ae(ad::Var log_px, std::size_t tokens) {
  using namespace ad;
  const double n = static_cast<double>(log_px.value().rows());
  Var recon = neg(mean(log_px));
  LossResult r{recon, {}};
  r.breakdown.recon_term = recon.item();
  r.breakdown.latent_term = 0;
  r.breakdown.total = r.breakdown.recon_term;
  r.breakdown.recon_per_token = per_token(r.breakdown.recon_term * n, tokens);
  return r;
}

namespace {

std::size_t count_tokens(std::span<const TokenSeq> batch) {
  std::size_t n = 0;
  for (const TokenSeq& x : batch) n += x.size();
  return n;
}

std::span<const TokenSeq> encoder_side(std::span<const TokenSeq> batch,
                                       std::span<const TokenSeq> enc) {
  if (enc.empty()) return batch;
  if (enc.size() != batch.size()) {
    throw DimensionError("encoder inputs and batch differ in size");
  }
  return enc;
}

void require_nonempty(std::span<const TokenSeq> batch) {
  if (batch.empty()) throw DimensionError("loss of an empty batch");
}

}  // namespace

LossResult amim_loss(const BoundModel& m, std::span<const TokenSeq> batch,
                     ad::Mode mode, Rng& rng,
                     std::span<const TokenSeq> encoder_inputs) {
  require_nonempty(batch);
  PosteriorVars q =
      encode_posterior(m, encoder_side(batch, encoder_inputs), mode, rng);
  Tensor eps;
  ad::Var z = sample_latent(q, rng, &eps);
  ad::Var log_px = decode_logprob(m, batch, z, mode, rng);
  return combine_amim(log_px, reparam_logpdf_rows(q.log_sigma, eps),
                      std_normal_logpdf_rows(z), count_tokens(batch));
}

LossResult elbo_loss(const BoundModel& m, std::span<const TokenSeq> batch,
                     double beta, ad::Mode mode, Rng& rng,
                     std::span<const TokenSeq> encoder_inputs) {
  require_nonempty(batch);
  if (!(beta >= 0)) throw ConfigError("KL weight must be non-negative");
  PosteriorVars q =
      encode_posterior(m, encoder_side(batch, encoder_inputs), mode, rng);
  ad::Var z = sample_latent(q, rng);
  ad::Var log_px = decode_logprob(m, batch, z, mode, rng);
  return combine_elbo(log_px, kl_to_std_rows(q.mu, q.log_sigma), beta,
                      count_tokens(batch));
}

LossResult ae_loss(const BoundModel& m, std::span<const TokenSeq> batch,
                   ad::Mode mode, Rng& rng,
                   std::span<const TokenSeq> encoder_inputs) {
  require_nonempty(batch);
  PosteriorVars q =
      encode_posterior(m, encoder_side(batch, encoder_inputs), mode, rng);
  ad::Var log_px = decode_logprob(m, batch, q.mu, mode, rng);
  return combine_ae(log_px, count_tokens(batch));
}

LossResult objective_loss(Objective o, const BoundModel& m,
                          std::span<const TokenSeq> batch, double beta,
                          ad::Mode mode, Rng& rng,
                          std::span<const TokenSeq> encoder_inputs) {
  switch (o) {
    case Objective::kMim: return amim_loss(m, batch, mode, rng, encoder_inputs);
    case Objective::kVae:
    case Objective::kVaeAnnealed:
      return elbo_loss(m, batch, beta, mode, rng, encoder_inputs);
    case Objective::kAe: return ae_loss(m, batch, mode, rng, encoder_inputs);
  }
  throw ConfigError("unknown objective");
}

double kl_anneal_schedule(std::size_t step, std::size_t total_steps) {
  if (total_steps == 0) throw ConfigError("kl_anneal_steps must be positive");
  return std::min(1.0, static_cast<double>(step) / static_cast<double>(total_steps));
}

}  // namespace mimlm
