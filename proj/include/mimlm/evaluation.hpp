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

// Reconstruction, BLEU-1, KL and latent-entropy measurements of a trained
// auto-encoder, plus the paired same/cross likelihood data used to diagnose
// posterior collapse.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "mimlm/entropy.hpp"
#include "mimlm/losses.hpp"
#include "mimlm/model.hpp"
#include "mimlm/text.hpp"

namespace mimlm {

struct EvalOptions {
  std::size_t repeats = 10;
  std::size_t knn_k = 5;
  DecodeStrategy bleu_strategy = DecodeStrategy::kGreedy;
  std::size_t max_len = 128;
  std::uint64_t seed = 1;
  std::size_t threads = 1;
};

struct EvalReport {
  std::string label;
  std::string objective;
  std::size_t latent_dim = 0;
  std::size_t param_count = 0;
  double enc_recon = 0;
  double enc_recon_std = 0;
  double rand_recon = 0;
  double rand_recon_std = 0;
  double kl = 0;
  double bleu1 = 0;
  double knn_entropy = 0;
  double fitted_entropy = 0;
  double fitted_mean_sigma = 0;
  double fitted_rms_sigma = 0;
  double entropy_ratio = 0;
  std::size_t n_sentences = 0;
  std::size_t repeats = 0;
  std::uint64_t seed = 0;

  nlohmann::json to_json() const;
  static EvalReport from_json(const nlohmann::json& j);
};

// Clipped unigram precision of hyp against ref over content tokens.
double bleu1(const TokenSeq& reference, const TokenSeq& hypothesis);

// log p(x_i | z_i) for every pair, evaluated in chunks.
std::vector<double> batch_logprob(const ModelParams& p,
                                  std::span<const TokenSeq> xs,
                                  std::span<const std::vector<Real>> zs);

// Mean over sentences of -log p(x|z), z ~ q(z|x) (z = mu when use_mean).
double encoder_reconstruction(const ModelParams& p, std::span<const TokenSeq> test,
                              Rng rng, bool use_mean = false);
// Same with z ~ N(0, sigma_fit^2 I).
double random_reconstruction(const ModelParams& p, std::span<const TokenSeq> test,
                             double sigma_fit, Rng rng);

// Latent code of each sentence: one posterior sample, or the mean for
// deterministic models.
PointSet latent_codes(const ModelParams& p, std::span<const TokenSeq> xs,
                      Rng rng, bool use_mean);

EvalReport evaluate(const ModelParams& p, Objective objective,
                    std::span<const TokenSeq> test, const EvalOptions& options,
                    const WarningSink& warn = {});

struct CollapseHistograms {
  // log p(x_i|z_j) / |x_i| where |x_i| counts <EOT>.
  std::vector<double> p_same;   // i == j, m values
  std::vector<double> p_cross;  // i != j, m(m-1) values
  // log q(z_i|x_j), not length-normalised.
  std::vector<double> q_same;
  std::vector<double> q_cross;
  bool p_per_token = true;

  std::string to_csv() const;
};

CollapseHistograms collapse_histograms(const ModelParams& p,
                                       std::span<const TokenSeq> sample,
                                       Rng rng, bool use_mean = false);

// Histogram overlap sum_b min(p_b, q_b) on shared equal-width bins.
double overlap_coefficient(std::span<const double> a, std::span<const double> b,
                           std::size_t bins = 20);

}  // namespace mimlm
