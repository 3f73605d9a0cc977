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

#include "mimlm/latent_ops.hpp"

#include "mimlm/error.hpp"

namespace mimlm {

nlohmann::json InterpolationTrace::to_json(const Vocabulary& vocab) const {
  nlohmann::json steps_j = nlohmann::json::array();
  for (const auto& s : steps) {
    steps_j.push_back({{"alpha", s.alpha}, {"z", s.z}, {"text", decode(s.decoded, vocab)}});
  }
  return {{"from", decode(from, vocab)},
          {"to", decode(to, vocab)},
          {"z_from", z_from},
          {"z_to", z_to},
          {"steps", steps_j}};
}

std::vector<double> interpolation_alphas(std::size_t n_steps) {
  if (n_steps < 2) throw ConfigError("interpolation needs at least 2 steps");
  std::vector<double> a(n_steps);
  const double last = static_cast<double>(n_steps - 1);
  for (std::size_t t = 0; t < n_steps; ++t) a[t] = static_cast<double>(t) / last;
  return a;
}

InterpolationTrace interpolate(const ModelParams& p, const TokenSeq& a,
                               const TokenSeq& b, std::size_t n_steps, Rng& rng,
                               const ProbeOptions& options) {
  const auto alphas = interpolation_alphas(n_steps);
  std::vector<TokenSeq> ends{a, b};
  const auto post = encode_posteriors(p, ends);
  InterpolationTrace tr;
  tr.from = a;
  tr.to = b;
  tr.z_from = options.use_mean ? post[0].mu : sample_latent(post[0], rng);
  tr.z_to = options.use_mean ? post[1].mu : sample_latent(post[1], rng);
  for (double alpha : alphas) {
    InterpolationStep s;
    s.alpha = alpha;
    s.z.resize(tr.z_from.size());
    for (std::size_t i = 0; i < s.z.size(); ++i) {
      s.z[i] = static_cast<Real>((1.0 - alpha) * tr.z_from[i] + alpha * tr.z_to[i]);
    }
    s.decoded = decode_sample(p, s.z, options.strategy, {}, options.max_len, rng);
    tr.steps.push_back(std::move(s));
  }
  return tr;
}

Reconstructions reconstruct_modes(const ModelParams& p, const TokenSeq& x,
                                  Rng& rng, const ProbeOptions& options,
                                  double perturb_multiplier) {
  const GaussianPosterior q = encode_posterior(p, x);
  Reconstructions r;
  Rng mean_rng = rng.split("mean");
  // Sample and perturbed modes share their noise draws, so they differ only
  // by the std multiplier.
  Rng sample_rng = rng.split("draw");
  Rng perturb_rng = rng.split("draw");
  r.mean = decode_sample(p, q.mu, options.strategy, {}, options.max_len, mean_rng);
  auto z = sample_latent(q, sample_rng);
  r.sample = decode_sample(p, z, options.strategy, {}, options.max_len, sample_rng);
  auto zp = sample_latent(q, perturb_rng, perturb_multiplier);
  r.perturbed = decode_sample(p, zp, options.strategy, {}, options.max_len, perturb_rng);
  return r;
}

std::vector<TokenSeq> sample_prior(const ModelParams& p, std::size_t n, Rng& rng,
                                   double sigma, const ProbeOptions& options) {
  if (!(sigma > 0)) throw ConfigError("prior sigma must be positive");
  std::vector<TokenSeq> out;
  out.reserve(n);
  std::vector<Real> z(p.dims.latent);
  for (std::size_t i = 0; i < n; ++i) {
    for (Real& v : z) v = static_cast<Real>(sigma * rng.normal());
    out.push_back(decode_sample(p, z, options.strategy, {}, options.max_len, rng));
  }
  return out;
}

}  // namespace mimlm
