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

#include "mimlm/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "mimlm/error.hpp"

namespace mimlm {
namespace {

thread_local std::size_t g_encoder_passes = 0;

void fill_uniform(Tensor& t, Rng& rng, double scale) {
  for (Real& v : t.values())
    v = static_cast<Real>((2.0 * rng.uniform() - 1.0) * scale);
}

void init_gru(GruWeights& w, Rng& rng, double scale) {
  for (Tensor* t : {&w.w_r, &w.w_u, &w.w_h, &w.u_r, &w.u_u, &w.u_h})
    fill_uniform(*t, rng, scale);
}

template <typename Self, typename Out>
void list_gru(Self& w, const std::string& prefix, Out& out) {
  out.emplace_back(prefix + ".w_r", &w.w_r);
  out.emplace_back(prefix + ".w_u", &w.w_u);
  out.emplace_back(prefix + ".w_h", &w.w_h);
  out.emplace_back(prefix + ".u_r", &w.u_r);
  out.emplace_back(prefix + ".u_u", &w.u_u);
  out.emplace_back(prefix + ".u_h", &w.u_h);
  out.emplace_back(prefix + ".b_r", &w.b_r);
  out.emplace_back(prefix + ".b_u", &w.b_u);
  out.emplace_back(prefix + ".b_h", &w.b_h);
}

template <typename Self, typename Out>
void list_params(Self& p, Out& out) {
  out.emplace_back("embed", &p.embed);
  list_gru(p.enc, "enc", out);
  list_gru(p.dec, "dec", out);
  out.emplace_back("mu.w", &p.mu_w);
  out.emplace_back("mu.b", &p.mu_b);
  out.emplace_back("log_sigma.w", &p.log_sigma_w);
  out.emplace_back("log_sigma.b", &p.log_sigma_b);
  out.emplace_back("out.w", &p.out_w);
  out.emplace_back("out.b", &p.out_b);
}

template <typename BindFn>
BoundGru bind_gru(BindFn&& b, auto& w) {
  return BoundGru{b(w.w_r), b(w.w_u), b(w.w_h), b(w.u_r), b(w.u_u),
                  b(w.u_h), b(w.b_r), b(w.b_u), b(w.b_h)};
}

template <typename BindFn, typename P>
BoundModel bind_with(ad::Graph& g, P& p, BindFn&& b, double dropout) {
  BoundModel m;
  m.params = &p;
  m.graph = &g;
  m.embed = b(p.embed);
  m.enc = bind_gru(b, p.enc);
  m.dec = bind_gru(b, p.dec);
  m.mu_w = b(p.mu_w);
  m.mu_b = b(p.mu_b);
  m.log_sigma_w = b(p.log_sigma_w);
  m.log_sigma_b = b(p.log_sigma_b);
  m.out_w = b(p.out_w);
  m.out_b = b(p.out_b);
  m.dropout = dropout;
  return m;
}

ad::Var zeros_var(ad::Graph& g, std::size_t rows, std::size_t cols) {
  return g.constant(Tensor({rows, cols}));
}

ad::Var embed_step(const BoundModel& m, std::span<const TokenId> ids,
                   ad::Mode mode, Rng& rng) {
  ad::Var e = ad::embedding_lookup(m.embed, ids);
  return ad::dropout(e, m.dropout, mode, rng);
}

}  // namespace

GruWeights GruWeights::zeros(std::size_t in, std::size_t hidden) {
  GruWeights w;
  w.w_r = w.w_u = w.w_h = Tensor({in, hidden});
  w.u_r = w.u_u = w.u_h = Tensor({hidden, hidden});
  w.b_r = w.b_u = w.b_h = Tensor({hidden});
  return w;
}

ModelParams ModelParams::zeros(const ModelDims& d) {
  if (d.vocab < kNumReserved || d.embed == 0 || d.hidden == 0 || d.latent == 0) {
    throw ConfigError("model dimensions must be positive and V >= 4");
  }
  ModelParams p;
  p.dims = d;
  p.embed = Tensor({d.vocab, d.embed});
  p.enc = GruWeights::zeros(d.embed, d.hidden);
  p.dec = GruWeights::zeros(d.embed + d.latent, d.hidden);
  p.mu_w = Tensor({d.hidden, d.latent});
  p.mu_b = Tensor({d.latent});
  p.log_sigma_w = Tensor({d.hidden, d.latent});
  p.log_sigma_b = Tensor({d.latent});
  p.out_w = Tensor({d.hidden, d.vocab});
  p.out_b = Tensor({d.vocab});
  return p;
}

ModelParams ModelParams::init(const ModelDims& dims, Rng& rng, double scale) {
  ModelParams p = zeros(dims);
  fill_uniform(p.embed, rng, scale);
  init_gru(p.enc, rng, scale);
  init_gru(p.dec, rng, scale);
  fill_uniform(p.mu_w, rng, scale);
  fill_uniform(p.log_sigma_w, rng, scale);
  fill_uniform(p.out_w, rng, scale);
  return p;
}

std::vector<std::pair<std::string, Tensor*>> ModelParams::named() {
  std::vector<std::pair<std::string, Tensor*>> out;
  list_params(*this, out);
  return out;
}

std::vector<std::pair<std::string, const Tensor*>> ModelParams::named() const {
  std::vector<std::pair<std::string, const Tensor*>> out;
  list_params(*this, out);
  return out;
}

std::size_t ModelParams::param_count() const {
  std::size_t n = 0;
  for (const auto& [name, t] : named()) n += t->size();
  return n;
}

void ModelParams::zero_grad() {
  for (auto& [name, t] : named()) t->zero_grad();
}

std::size_t param_count_formula(const ModelDims& d) {
  const std::size_t gru_enc = 3 * (d.embed * d.hidden + d.hidden * d.hidden + d.hidden);
  const std::size_t gru_dec =
      3 * ((d.embed + d.latent) * d.hidden + d.hidden * d.hidden + d.hidden);
  return d.vocab * d.embed + gru_enc + gru_dec + 2 * (d.hidden * d.latent + d.latent) +
         d.hidden * d.vocab + d.vocab;
}

BoundModel bind(ad::Graph& g, ModelParams& params, double dropout) {
  return bind_with(g, params, [&g](Tensor& t) { return g.parameter(t); },
                   dropout);
}

BoundModel bind_const(ad::Graph& g, const ModelParams& params) {
  return bind_with(g, params, [&g](const Tensor& t) { return g.input(t); },
                   0.0);
}

ad::Var gru_step(const BoundGru& w, ad::Var x, ad::Var h) {
  using namespace ad;
  Var r = sigmoid(add_row(matmul(x, w.w_r) + matmul(h, w.u_r), w.b_r));
  Var u = sigmoid(add_row(matmul(x, w.w_u) + matmul(h, w.u_u), w.b_u));
  Var cand = tanh(add_row(matmul(x, w.w_h) + matmul(r * h, w.u_h), w.b_h));
  return h + u * (cand - h);
}

PosteriorVars encode_posterior(const BoundModel& m,
                               std::span<const TokenSeq> batch, ad::Mode mode,
                               Rng& rng) {
  if (batch.empty()) throw DimensionError("encode_posterior: empty batch");
  ++g_encoder_passes;
  const std::size_t b = batch.size();
  std::vector<TokenSeq> rev;
  rev.reserve(b);
  std::size_t steps = 0;
  for (const TokenSeq& x : batch) {
    if (x.ids.empty()) throw DimensionError("encode_posterior: empty sequence");
    rev.push_back(reverse_for_encoder(x));
    steps = std::max(steps, x.size());
  }
  ad::Var h = zeros_var(*m.graph, b, m.params->dims.hidden);
  std::vector<TokenId> ids(b);
  std::vector<char> active(b);
  for (std::size_t t = 0; t < steps; ++t) {
    bool all = true;
    for (std::size_t i = 0; i < b; ++i) {
      active[i] = t < rev[i].size();
      ids[i] = active[i] ? rev[i].ids[t] : kPad;
      all = all && active[i];
    }
    ad::Var next = gru_step(m.enc, embed_step(m, ids, mode, rng), h);
    h = all ? next : ad::choose_rows(active, next, h);
  }
  ad::Var log_sigma = ad::linear(h, m.log_sigma_w, m.log_sigma_b);
  if (const auto& f = m.params->dims.log_sigma_floor) {
    const Real floor = static_cast<Real>(*f);
    log_sigma = ad::add_scalar(ad::softplus(ad::add_scalar(log_sigma, -floor)), floor);
  }
  return PosteriorVars{ad::linear(h, m.mu_w, m.mu_b), log_sigma};
}

ad::Var sample_latent(const PosteriorVars& q, Rng& rng, Tensor* noise) {
  ad::Graph& g = *q.mu.graph();
  Tensor eps(q.mu.shape());
  for (Real& v : eps.values()) v = static_cast<Real>(rng.normal());
  if (noise) *noise = eps;
  return q.mu + ad::exp(q.log_sigma) * g.constant(std::move(eps));
}

ad::Var decode_logprob(const BoundModel& m, std::span<const TokenSeq> batch,
                       ad::Var z, ad::Mode mode, Rng& rng) {
  if (batch.empty()) throw DimensionError("decode_logprob: empty batch");
  const std::size_t b = batch.size();
  if (z.value().rows() != b || z.value().cols() != m.params->dims.latent) {
    throw DimensionError("decode_logprob: latent " + shape_string(z.shape()) +
                         " for a batch of " + std::to_string(b));
  }
  std::size_t steps = 0;
  for (const TokenSeq& x : batch) steps = std::max(steps, x.size());
  ad::Graph& g = *m.graph;
  ad::Var h = zeros_var(g, b, m.params->dims.hidden);
  ad::Var total;
  std::vector<TokenId> inputs(b), targets(b);
  std::vector<char> active(b);
  for (std::size_t k = 0; k < steps; ++k) {
    bool all = true;
    for (std::size_t i = 0; i < b; ++i) {
      const auto& ids = batch[i].ids;
      active[i] = k < ids.size();
      all = all && active[i];
      inputs[i] = !active[i] ? kPad : (k == 0 ? kBot : ids[k - 1]);
      targets[i] = active[i] ? ids[k] : kPad;
    }
    ad::Var x = ad::concat_cols(embed_step(m, inputs, mode, rng), z);
    ad::Var next = gru_step(m.dec, x, h);
    h = all ? next : ad::choose_rows(active, next, h);
    ad::Var logp = ad::pick(ad::log_softmax(ad::linear(h, m.out_w, m.out_b)),
                            targets);
    if (!all) {
      Tensor mask({b, 1});
      for (std::size_t i = 0; i < b; ++i) mask[i] = active[i] ? 1 : 0;
      logp = logp * g.constant(std::move(mask));
    }
    total = total.valid() ? total + logp : logp;
  }
  return total;
}

std::vector<Real> GaussianPosterior::sigma() const {
  std::vector<Real> s(log_sigma.size());
  for (std::size_t i = 0; i < s.size(); ++i) s[i] = std::exp(log_sigma[i]);
  return s;
}

std::vector<GaussianPosterior> encode_posteriors(const ModelParams& p,
                                                 std::span<const TokenSeq> xs) {
  std::vector<GaussianPosterior> out;
  out.reserve(xs.size());
  constexpr std::size_t kChunk = 64;
  Rng unused;
  for (std::size_t start = 0; start < xs.size(); start += kChunk) {
    auto chunk = xs.subspan(start, std::min(kChunk, xs.size() - start));
    ad::Graph g(false);
    BoundModel m = bind_const(g, p);
    PosteriorVars q = encode_posterior(m, chunk, ad::Mode::kEval, unused);
    const Tensor& mu = q.mu.value();
    const Tensor& ls = q.log_sigma.value();
    const std::size_t d = p.dims.latent;
    for (std::size_t i = 0; i < chunk.size(); ++i) {
      GaussianPosterior gp;
      gp.mu.assign(mu.data().begin() + i * d, mu.data().begin() + (i + 1) * d);
      gp.log_sigma.assign(ls.data().begin() + i * d,
                          ls.data().begin() + (i + 1) * d);
      out.push_back(std::move(gp));
    }
  }
  return out;
}

GaussianPosterior encode_posterior(const ModelParams& p, const TokenSeq& x) {
  return encode_posteriors(p, std::span<const TokenSeq>(&x, 1)).front();
}

std::vector<Real> sample_latent(const GaussianPosterior& q, Rng& rng,
                                double sigma_multiplier) {
  std::vector<Real> z(q.dim());
  for (std::size_t i = 0; i < z.size(); ++i) {
    z[i] = q.mu[i] + static_cast<Real>(sigma_multiplier) *
                         std::exp(q.log_sigma[i]) * static_cast<Real>(rng.normal());
  }
  return z;
}

double decode_logprob(const ModelParams& p, const TokenSeq& x,
                      std::span<const Real> z) {
  if (z.size() != p.dims.latent) {
    throw DimensionError("decode_logprob: latent of size " +
                         std::to_string(z.size()) + ", model expects " +
                         std::to_string(p.dims.latent));
  }
  ad::Graph g(false);
  BoundModel m = bind_const(g, p);
  ad::Var zv = g.constant(
      Tensor({1, p.dims.latent}, std::vector<Real>(z.begin(), z.end())));
  Rng unused;
  return decode_logprob(m, std::span<const TokenSeq>(&x, 1), zv,
                        ad::Mode::kEval, unused)
      .item();
}

std::size_t encoder_pass_count() { return g_encoder_passes; }

namespace {

// One decoder step on plain values; returns the next hidden state and fills
// logits.
Tensor decoder_step(const ModelParams& p, const Tensor& h, TokenId input,
                    std::span<const Real> z, std::vector<Real>& logits) {
  ad::Graph g(false);
  BoundModel m = bind_const(g, p);
  std::vector<TokenId> ids{input};
  Rng unused;
  ad::Var e = embed_step(m, ids, ad::Mode::kEval, unused);
  ad::Var zv = g.constant(
      Tensor({1, p.dims.latent}, std::vector<Real>(z.begin(), z.end())));
  ad::Var next = gru_step(m.dec, ad::concat_cols(e, zv), g.constant(h));
  ad::Var out = ad::linear(next, m.out_w, m.out_b);
  logits.assign(out.value().data().begin(), out.value().data().end());
  return next.value();
}

}  // namespace

std::vector<Real> first_step_logprobs(const ModelParams& p,
                                      std::span<const Real> z) {
  std::vector<Real> logits;
  decoder_step(p, Tensor({1, p.dims.hidden}), kBot, z, logits);
  Real hi = *std::max_element(logits.begin(), logits.end());
  Real acc = 0;
  for (Real l : logits) acc += std::exp(l - hi);
  Real lse = hi + std::log(acc);
  for (Real& l : logits) l -= lse;
  return logits;
}

TokenSeq decode_sample(const ModelParams& p, std::span<const Real> z,
                       DecodeStrategy strategy,
                       const std::set<TokenId>& banned, std::size_t max_len,
                       Rng& rng) {
  if (max_len == 0) throw ConfigError("decode_sample: max_len must be >= 1");
  if (z.size() != p.dims.latent) {
    throw DimensionError("decode_sample: latent size mismatch");
  }
  const std::size_t vocab = p.dims.vocab;
  std::vector<char> allowed(vocab, 1);
  allowed[kBot] = 0;
  allowed[kPad] = 0;
  for (TokenId t : banned) {
    if (t >= 0 && static_cast<std::size_t>(t) < vocab) allowed[t] = 0;
  }
  TokenSeq out;
  Tensor h({1, p.dims.hidden});
  TokenId prev = kBot;
  std::vector<Real> logits;
  while (out.ids.size() < max_len) {
    h = decoder_step(p, h, prev, z, logits);
    TokenId next = kEot;
    if (strategy == DecodeStrategy::kGreedy) {
      Real best = -std::numeric_limits<Real>::infinity();
      for (std::size_t j = 0; j < vocab; ++j) {
        if (allowed[j] && logits[j] > best) {
          best = logits[j];
          next = static_cast<TokenId>(j);
        }
      }
    } else {
      Real hi = -std::numeric_limits<Real>::infinity();
      for (std::size_t j = 0; j < vocab; ++j)
        if (allowed[j]) hi = std::max(hi, logits[j]);
      double total = 0;
      std::vector<double> w(vocab, 0.0);
      for (std::size_t j = 0; j < vocab; ++j) {
        if (allowed[j]) {
          w[j] = std::exp(static_cast<double>(logits[j] - hi));
          total += w[j];
        }
      }
      double u = rng.uniform() * total;
      std::size_t chosen = vocab;
      for (std::size_t j = 0; j < vocab; ++j) {
        if (!allowed[j]) continue;
        chosen = j;
        if (u < w[j]) break;
        u -= w[j];
      }
      next = static_cast<TokenId>(chosen);
    }
    if (next == kEot) break;
    out.ids.push_back(next);
    prev = next;
  }
  out.ids.push_back(kEot);
  return out;
}

}  // namespace mimlm
