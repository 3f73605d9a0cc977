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

// Latent-space probes: interpolation, mean/sample/perturbed reconstruction,
// and decoding from a narrow zero-mean prior.

#include <cstddef>
#include <vector>

#include "json.hpp"
#include "mimlm/model.hpp"
#include "mimlm/text.hpp"

namespace mimlm {

struct InterpolationStep {
  double alpha = 0;
  std::vector<Real> z;
  TokenSeq decoded;
};

struct InterpolationTrace {
  TokenSeq from, to;
  std::vector<Real> z_from, z_to;
  std::vector<InterpolationStep> steps;

  nlohmann::json to_json(const Vocabulary& vocab) const;
};

struct ProbeOptions {
  DecodeStrategy strategy = DecodeStrategy::kAncestral;
  std::size_t max_len = 128;
  // Use posterior means instead of samples for the endpoint codes.
  bool use_mean = false;
};

// alpha_t = t / (n_steps - 1), t = 0..n_steps-1.
std::vector<double> interpolation_alphas(std::size_t n_steps);

InterpolationTrace interpolate(const ModelParams& p, const TokenSeq& a,
                               const TokenSeq& b, std::size_t n_steps, Rng& rng,
                               const ProbeOptions& options = {});

struct Reconstructions {
  TokenSeq mean;       // z = mu
  TokenSeq sample;     // z ~ q(z|x)
  TokenSeq perturbed;  // z ~ N(mu, (multiplier * sigma)^2)
};

// One encoder pass serves all three modes.
Reconstructions reconstruct_modes(const ModelParams& p, const TokenSeq& x,
                                  Rng& rng, const ProbeOptions& options = {},
                                  double perturb_multiplier = 10.0);

inline constexpr double kPriorSampleSigma = 0.1;

std::vector<TokenSeq> sample_prior(const ModelParams& p, std::size_t n,
                                   Rng& rng, double sigma = kPriorSampleSigma,
                                   const ProbeOptions& options = {});

}  // namespace mimlm
