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

#include "mimlm/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>
#include <thread>

#include "mimlm/error.hpp"

namespace mimlm {
namespace {

std::vector<std::vector<Real>> sample_codes(
    const std::vector<GaussianPosterior>& post, Rng rng, bool use_mean) {
  std::vector<std::vector<Real>> zs;
  zs.reserve(post.size());
  for (std::size_t i = 0; i < post.size(); ++i) {
    if (use_mean) {
      zs.push_back(post[i].mu);
    } else {
      Rng r = rng.split(i);
      zs.push_back(sample_latent(post[i], r));
    }
  }
  return zs;
}

double mean_of(std::span<const double> v) {
  double acc = 0;
  for (double x : v) acc += x;
  return v.empty() ? 0.0 : acc / static_cast<double>(v.size());
}

double stdev_of(std::span<const double> v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  double ss = 0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

// Runs fn(i) for i in [0, n) over `threads` workers; results land in index
// order so reductions stay deterministic.
template <typename Fn>
void parallel_for(std::size_t n, std::size_t threads, Fn fn) {
  if (threads <= 1 || n < 2) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  threads = std::min(threads, n);
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < threads; ++t) {
    pool.emplace_back([=, &fn] {
      for (std::size_t i = t; i < n; i += threads) fn(i);
    });
  }
  for (auto& th : pool) th.join();
}

}  // namespace

nlohmann::json EvalReport::to_json() const {
  return {{"label", label},
          {"objective", objective},
          {"latent_dim", latent_dim},
          {"param_count", param_count},
          {"enc_recon", enc_recon},
          {"enc_recon_std", enc_recon_std},
          {"rand_recon", rand_recon},
          {"rand_recon_std", rand_recon_std},
          {"kl", kl},
          {"bleu1", bleu1},
          {"knn_entropy", knn_entropy},
          {"fitted_entropy", fitted_entropy},
          {"fitted_mean_sigma", fitted_mean_sigma},
          {"fitted_rms_sigma", fitted_rms_sigma},
          {"entropy_ratio", entropy_ratio},
          {"n_sentences", n_sentences},
          {"repeats", repeats},
          {"seed", seed}};
}

EvalReport EvalReport::from_json(const nlohmann::json& j) {
  try {
    EvalReport r;
    r.label = j.value("label", std::string());
    r.objective = j.value("objective", std::string());
    r.latent_dim = j.at("latent_dim").get<std::size_t>();
    r.param_count = j.at("param_count").get<std::size_t>();
    r.enc_recon = j.at("enc_recon").get<double>();
    r.enc_recon_std = j.at("enc_recon_std").get<double>();
    r.rand_recon = j.at("rand_recon").get<double>();
    r.rand_recon_std = j.at("rand_recon_std").get<double>();
    r.kl = j.at("kl").get<double>();
    r.bleu1 = j.at("bleu1").get<double>();
    r.knn_entropy = j.at("knn_entropy").get<double>();
    r.fitted_entropy = j.at("fitted_entropy").get<double>();
    r.fitted_mean_sigma = j.at("fitted_mean_sigma").get<double>();
    r.fitted_rms_sigma = j.value("fitted_rms_sigma", 0.0);
    r.entropy_ratio = j.at("entropy_ratio").get<double>();
    r.n_sentences = j.at("n_sentences").get<std::size_t>();
    r.repeats = j.at("repeats").get<std::size_t>();
    r.seed = j.at("seed").get<std::uint64_t>();
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("eval report: ") + e.what());
  }
}

double bleu1(const TokenSeq& reference, const TokenSeq& hypothesis) {
  auto ref = reference.content();
  auto hyp = hypothesis.content();
  if (hyp.empty()) return 0.0;
  std::map<TokenId, std::size_t> ref_counts, hyp_counts;
  for (TokenId t : ref) ++ref_counts[t];
  for (TokenId t : hyp) ++hyp_counts[t];
  std::size_t matched = 0;
  for (const auto& [t, n] : hyp_counts) {
    auto it = ref_counts.find(t);
    if (it != ref_counts.end()) matched += std::min(n, it->second);
  }
  return static_cast<double>(matched) / static_cast<double>(hyp.size());
}

std::vector<double> batch_logprob(const ModelParams& p,
                                  std::span<const TokenSeq> xs,
                                  std::span<const std::vector<Real>> zs) {
  if (xs.size() != zs.size()) throw DimensionError("batch_logprob: size mismatch");
  std::vector<double> out;
  out.reserve(xs.size());
  constexpr std::size_t kChunk = 64;
  const std::size_t d = p.dims.latent;
  Rng unused;
  for (std::size_t start = 0; start < xs.size(); start += kChunk) {
    const std::size_t n = std::min(kChunk, xs.size() - start);
    Tensor z({n, d});
    for (std::size_t i = 0; i < n; ++i) {
      if (zs[start + i].size() != d) throw DimensionError("batch_logprob: latent size");
      std::copy(zs[start + i].begin(), zs[start + i].end(), &z[i * d]);
    }
    ad::Graph g(false);
    BoundModel m = bind_const(g, p);
    ad::Var lp = decode_logprob(m, xs.subspan(start, n), g.constant(std::move(z)),
                                ad::Mode::kEval, unused);
    for (std::size_t i = 0; i < n; ++i) out.push_back(lp.value()[i]);
  }
  return out;
}

double encoder_reconstruction(const ModelParams& p, std::span<const TokenSeq> test,
                              Rng rng, bool use_mean) {
  if (test.empty()) throw IoError("evaluation set is empty");
  auto post = encode_posteriors(p, test);
  auto zs = sample_codes(post, rng, use_mean);
  auto lp = batch_logprob(p, test, zs);
  double acc = 0;
  for (double v : lp) acc -= v;
  return acc / static_cast<double>(test.size());
}

double random_reconstruction(const ModelParams& p, std::span<const TokenSeq> test,
                             double sigma_fit, Rng rng) {
  if (!(sigma_fit > 0)) throw ConfigError("random_reconstruction: sigma_fit must be positive");
  if (test.empty()) throw IoError("evaluation set is empty");
  std::vector<std::vector<Real>> zs(test.size(), std::vector<Real>(p.dims.latent));
  for (std::size_t i = 0; i < test.size(); ++i) {
    Rng r = rng.split(i);
    for (Real& v : zs[i]) v = static_cast<Real>(sigma_fit * r.normal());
  }
  auto lp = batch_logprob(p, test, zs);
  double acc = 0;
  for (double v : lp) acc -= v;
  return acc / static_cast<double>(test.size());
}

PointSet latent_codes(const ModelParams& p, std::span<const TokenSeq> xs, Rng rng,
                      bool use_mean) {
  auto zs = sample_codes(encode_posteriors(p, xs), rng, use_mean);
  PointSet ps;
  ps.n = zs.size();
  ps.d = p.dims.latent;
  for (const auto& z : zs) ps.values.insert(ps.values.end(), z.begin(), z.end());
  return ps;
}

EvalReport evaluate(const ModelParams& p, Objective objective,
                    std::span<const TokenSeq> test, const EvalOptions& options,
                    const WarningSink& warn) {
  if (test.empty()) throw IoError("evaluation set is empty");
  if (options.repeats < 1) throw ConfigError("repeats must be >= 1");
  const bool use_mean = objective == Objective::kAe;
  const Rng root(options.seed);
  EvalReport r;
  r.objective = std::string(objective_name(objective));
  r.latent_dim = p.dims.latent;
  r.param_count = p.param_count();
  r.n_sentences = test.size();
  r.repeats = options.repeats;
  r.seed = options.seed;

  const auto post = encode_posteriors(p, test);
  const auto codes_z = sample_codes(post, root.split("codes"), use_mean);
  PointSet codes;
  codes.n = codes_z.size();
  codes.d = p.dims.latent;
  for (const auto& z : codes_z) codes.values.insert(codes.values.end(), z.begin(), z.end());
  GaussianFit fit = fit_diag_gaussian_entropy(codes, warn);
  r.fitted_entropy = fit.entropy;
  r.fitted_mean_sigma = fit.mean_sigma;
  r.fitted_rms_sigma = fit.rms_sigma;
  r.knn_entropy = codes.n > options.knn_k ? knn_entropy(codes, options.knn_k, warn)
                                          : std::nan("");
  r.entropy_ratio = r.knn_entropy / r.fitted_entropy;

  double kl = 0;
  for (const auto& q : post) kl += kl_diag_gaussian_to_std(q);
  r.kl = kl / static_cast<double>(post.size());

  std::vector<double> enc(options.repeats), rnd(options.repeats);
  for (std::size_t rep = 0; rep < options.repeats; ++rep) {
    auto zs = sample_codes(post, root.split("enc").split(rep), use_mean);
    auto lp = batch_logprob(p, test, zs);
    enc[rep] = -mean_of(lp);
    rnd[rep] = random_reconstruction(p, test, fit.rms_sigma,
                                     root.split("rand").split(rep));
  }
  r.enc_recon = mean_of(enc);
  r.enc_recon_std = stdev_of(enc);
  r.rand_recon = mean_of(rnd);
  r.rand_recon_std = stdev_of(rnd);

  std::vector<double> scores(test.size());
  const Rng bleu_rng = root.split("bleu");
  parallel_for(test.size(), options.threads, [&](std::size_t i) {
    Rng dr = bleu_rng.split(i);
    TokenSeq hyp = decode_sample(p, codes_z[i], options.bleu_strategy, {kUnk},
                                 options.max_len, dr);
    scores[i] = bleu1(test[i], hyp);
  });
  r.bleu1 = mean_of(scores);
  return r;
}

std::string CollapseHistograms::to_csv() const {
  std::ostringstream os;
  os.precision(17);
  os << "kind,value\n";
  for (double v : p_same) os << "p_same," << v << '\n';
  for (double v : p_cross) os << "p_cross," << v << '\n';
  for (double v : q_same) os << "q_same," << v << '\n';
  for (double v : q_cross) os << "q_cross," << v << '\n';
  return os.str();
}

CollapseHistograms collapse_histograms(const ModelParams& p,
                                       std::span<const TokenSeq> sample, Rng rng,
                                       bool use_mean) {
  const std::size_t m = sample.size();
  if (m < 2) throw ConfigError("collapse_histograms needs at least 2 sentences");
  const auto post = encode_posteriors(p, sample);
  const auto zs = sample_codes(post, rng, use_mean);
  CollapseHistograms h;
  for (std::size_t j = 0; j < m; ++j) {
    std::vector<std::vector<Real>> zj(m, zs[j]);
    auto lp = batch_logprob(p, sample, zj);
    for (std::size_t i = 0; i < m; ++i) {
      const double v = lp[i] / static_cast<double>(sample[i].size());
      (i == j ? h.p_same : h.p_cross).push_back(v);
    }
  }
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      const double v = diag_gaussian_logpdf(zs[i], post[j].mu, post[j].log_sigma);
      (i == j ? h.q_same : h.q_cross).push_back(v);
    }
  }
  return h;
}

double overlap_coefficient(std::span<const double> a, std::span<const double> b,
                           std::size_t bins) {
  if (a.empty() || b.empty() || bins == 0) {
    throw ConfigError("overlap_coefficient: empty sample or zero bins");
  }
  double lo = std::min(*std::min_element(a.begin(), a.end()),
                       *std::min_element(b.begin(), b.end()));
  double hi = std::max(*std::max_element(a.begin(), a.end()),
                       *std::max_element(b.begin(), b.end()));
  if (!(hi > lo)) return 1.0;
  auto hist = [&](std::span<const double> v) {
    std::vector<double> h(bins, 0.0);
    for (double x : v) {
      auto bin = static_cast<std::size_t>((x - lo) / (hi - lo) * static_cast<double>(bins));
      h[std::min(bin, bins - 1)] += 1.0 / static_cast<double>(v.size());
    }
    return h;
  };
  auto ha = hist(a), hb = hist(b);
  double acc = 0;
  for (std::size_t i = 0; i < bins; ++i) acc += std::min(ha[i], hb[i]);
  return acc;
}

}  // namespace mimlm
