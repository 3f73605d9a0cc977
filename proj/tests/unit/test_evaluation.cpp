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

#include <cmath>
#include <sstream>

#include "doctest.h"
#include "mimlm/entropy.hpp"
#include "mimlm/error.hpp"
#include "mimlm/evaluation.hpp"
#include "support/oracles.hpp"

using namespace mimlm;

namespace {

TokenSeq seq(std::vector<TokenId> content) { return make_seq(content); }

PointSet gaussian_points(std::size_t n, std::size_t d, Rng rng, double scale = 1.0) {
  PointSet s{n, d, std::vector<double>(n * d)};
  for (double& v : s.values) v = scale * rng.normal();
  return s;
}

const double kLog2PiE = std::log(2 * M_PI * M_E);

}  // namespace

TEST_CASE("bleu1 examples") {
  // ids 4.. stand in for words a b c d
  CHECK(bleu1(seq({4, 5, 6}), seq({4, 5, 6})) == 1.0);
  CHECK(bleu1(seq({4, 5, 6}), seq({4, 5, 7})) == doctest::Approx(2.0 / 3.0));
  CHECK(bleu1(seq({4}), seq({4, 4, 4})) == doctest::Approx(1.0 / 3.0));
  CHECK(bleu1(seq({4, 5}), seq({})) == 0.0);
}

TEST_CASE("bleu1 matches a brute-force count") {
  Rng rng(3);
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<TokenId> r(1 + rng.below(8)), h(rng.below(8));
    for (auto& t : r) t = static_cast<TokenId>(4 + rng.below(5));
    for (auto& t : h) t = static_cast<TokenId>(4 + rng.below(5));
    std::vector<bool> used(r.size(), false);
    std::size_t hits = 0;
    for (TokenId w : h) {
      for (std::size_t j = 0; j < r.size(); ++j) {
        if (!used[j] && r[j] == w) {
          used[j] = true;
          ++hits;
          break;
        }
      }
    }
    const double expect = h.empty() ? 0.0 : static_cast<double>(hits) / h.size();
    CHECK(bleu1(seq(r), seq(h)) == doctest::Approx(expect));
  }
}

TEST_CASE("uniform decoder reconstruction") {
  const auto p = ModelParams::zeros({5, 3, 4, 2});
  std::vector<TokenSeq> test{seq({4, 4})};
  const double enc = encoder_reconstruction(p, test, Rng(1));
  CHECK(enc == doctest::Approx(3 * std::log(5.0)).epsilon(1e-12));
  CHECK(random_reconstruction(p, test, 1.0, Rng(2)) == doctest::Approx(enc).epsilon(1e-12));
  CHECK_THROWS_AS(random_reconstruction(p, test, 0.0, Rng(2)), ConfigError);
}

TEST_CASE("batch_logprob agrees with the single-sentence path") {
  Rng rng(4);
  const auto p = ModelParams::init({12, 3, 5, 2}, rng, 0.5);
  std::vector<TokenSeq> xs{seq({4, 5}), seq({6, 7, 8, 9}), seq({})};
  std::vector<std::vector<Real>> zs{{0.1, -0.3}, {1.0, 0.2}, {-0.5, 0.5}};
  const auto lp = batch_logprob(p, xs, zs);
  REQUIRE(lp.size() == 3);
  for (std::size_t i = 0; i < xs.size(); ++i)
    CHECK(lp[i] == doctest::Approx(decode_logprob(p, xs[i], zs[i])).epsilon(1e-10));
}

TEST_CASE("evaluate report fields") {
  Rng rng(5);
  const auto p = ModelParams::init({12, 3, 5, 2}, rng, 0.5);
  std::vector<TokenSeq> test;
  for (int i = 0; i < 12; ++i)
    test.push_back(seq({static_cast<TokenId>(4 + i % 8), static_cast<TokenId>(4 + (i * 3) % 8)}));
  EvalOptions o;
  o.repeats = 3;
  o.knn_k = 3;
  const auto r = evaluate(p, Objective::kMim, test, o);
  CHECK(r.n_sentences == 12);
  CHECK(r.repeats == 3);
  CHECK(r.enc_recon > 0);
  CHECK(r.enc_recon_std >= 0);
  CHECK(r.kl >= 0);
  CHECK(r.bleu1 >= 0);
  CHECK(r.bleu1 <= 1);
  CHECK(r.param_count == param_count_formula(p.dims));
  CHECK(r.entropy_ratio == doctest::Approx(r.knn_entropy / r.fitted_entropy));

  const auto back = EvalReport::from_json(r.to_json());
  CHECK(back.to_json() == r.to_json());

  const auto again = evaluate(p, Objective::kMim, test, o);
  CHECK(again.to_json() == r.to_json());

  o.repeats = 0;
  CHECK_THROWS_AS(evaluate(p, Objective::kMim, test, o), ConfigError);
}

TEST_CASE("threads do not change results") {
  Rng rng(6);
  const auto p = ModelParams::init({12, 3, 5, 2}, rng, 0.5);
  std::vector<TokenSeq> test;
  for (int i = 0; i < 10; ++i) test.push_back(seq({static_cast<TokenId>(4 + i % 8)}));
  EvalOptions o;
  o.repeats = 2;
  o.knn_k = 2;
  const auto a = evaluate(p, Objective::kVae, test, o);
  o.threads = 3;
  CHECK(evaluate(p, Objective::kVae, test, o).to_json() == a.to_json());
}

TEST_CASE("unit ball volume and digamma") {
  CHECK(std::exp(log_unit_ball_volume(1)) == doctest::Approx(2.0));
  CHECK(std::exp(log_unit_ball_volume(2)) == doctest::Approx(M_PI));
  CHECK(std::exp(log_unit_ball_volume(3)) == doctest::Approx(4.0 * M_PI / 3.0));
  CHECK(digamma_int(1) == doctest::Approx(-0.5772156649015329));
  // psi(n+1) = psi(n) + 1/n
  for (std::size_t n = 1; n < 200; ++n)
    CHECK(digamma_int(n + 1) == doctest::Approx(digamma_int(n) + 1.0 / n).epsilon(1e-12));
}

TEST_CASE("standard normal reference entropies") {
  CHECK(std_normal_entropy(16) == doctest::Approx(22.70).epsilon(1e-3));
  CHECK(std::round(std_normal_entropy(16) * 10) / 10 == doctest::Approx(22.7));
  CHECK(std::round(std_normal_entropy(32) * 10) / 10 == doctest::Approx(45.4));
}

TEST_CASE("knn entropy calibration") {
  const auto g = gaussian_points(10000, 2, Rng(7));
  CHECK(std::abs(knn_entropy(g, 5) / kLog2PiE - 1.0) < 0.03);

  Rng rng(8);
  PointSet u{10000, 2, std::vector<double>(20000)};
  for (double& v : u.values) v = rng.uniform();
  CHECK(std::abs(knn_entropy(u, 5)) < 0.05);
}

TEST_CASE("knn entropy shifts by d ln c under scaling") {
  const auto x = gaussian_points(800, 3, Rng(9));
  PointSet y = x;
  for (double& v : y.values) v *= 2.5;
  CHECK(knn_entropy(y) - knn_entropy(x) == doctest::Approx(3 * std::log(2.5)).epsilon(1e-9));
}

TEST_CASE("knn entropy is rotation invariant") {
  const auto x = gaussian_points(10000, 2, Rng(10));
  PointSet y = x;
  const double c = std::cos(0.7), s = std::sin(0.7);
  for (std::size_t i = 0; i < y.n; ++i) {
    const double a = x.values[2 * i], b = x.values[2 * i + 1];
    y.values[2 * i] = c * a - s * b;
    y.values[2 * i + 1] = s * a + c * b;
  }
  CHECK(std::abs(knn_entropy(y) / knn_entropy(x) - 1.0) < 0.02);
}

TEST_CASE("knn entropy jitters duplicates with a warning") {
  auto x = gaussian_points(50, 2, Rng(11));
  for (std::size_t i = 0; i < 10; ++i) {
    x.values[2 * i] = 0.25;
    x.values[2 * i + 1] = -0.5;
  }
  std::vector<std::string> warnings;
  const double h = knn_entropy(x, 5, [&](const std::string& w) { warnings.push_back(w); });
  CHECK(std::isfinite(h));
  CHECK(!warnings.empty());
}

TEST_CASE("knn entropy needs more points than neighbours") {
  const auto x = gaussian_points(5, 2, Rng(12));
  CHECK_THROWS_AS(knn_entropy(x, 5), ConfigError);
  CHECK_THROWS_AS(knn_entropy(x, 0), ConfigError);
}

TEST_CASE("fitted gaussian entropy") {
  // two points at +-a give an n-1 sample std of a*sqrt(2)
  auto two = [](std::size_t d, double sigma) {
    const double a = sigma / std::sqrt(2.0);
    PointSet s{2, d, std::vector<double>(2 * d)};
    for (std::size_t j = 0; j < d; ++j) {
      s.values[j] = a;
      s.values[d + j] = -a;
    }
    return s;
  };
  const auto f32 = fit_diag_gaussian_entropy(two(32, 1.0));
  CHECK(f32.entropy == doctest::Approx(16 * kLog2PiE).epsilon(1e-12));
  CHECK(std::round(f32.entropy * 100) / 100 == doctest::Approx(45.41));
  CHECK(f32.mean_sigma == doctest::Approx(1.0));

  const auto f16 = fit_diag_gaussian_entropy(two(16, 0.5));
  CHECK(f16.entropy == doctest::Approx(8 * kLog2PiE + 16 * std::log(0.5)).epsilon(1e-12));
  CHECK(f16.entropy == doctest::Approx(11.61).epsilon(1e-3));

  const auto g = gaussian_points(20000, 4, Rng(13), 2.0);
  const auto fit = fit_diag_gaussian_entropy(g);
  CHECK(fit.mean_sigma == doctest::Approx(2.0).epsilon(0.02));
  CHECK(fit.entropy == doctest::Approx(2 * kLog2PiE + 4 * std::log(2.0)).epsilon(0.01));

  PointSet one{1, 2, {0.0, 1.0}};
  CHECK_THROWS_AS(fit_diag_gaussian_entropy(one), ConfigError);
}

TEST_CASE("fitted gaussian floors zero-variance dimensions") {
  PointSet s{3, 2, {1.0, 0.0, 1.0, 1.0, 1.0, 2.0}};
  std::vector<std::string> warnings;
  const auto fit = fit_diag_gaussian_entropy(s, [&](const std::string& w) { warnings.push_back(w); });
  CHECK(fit.sigma[0] == 1e-12);
  CHECK(fit.sigma[1] == doctest::Approx(1.0));
  CHECK(!warnings.empty());
}

TEST_CASE("collapse histograms enumerate all pairs") {
  Rng rng(14);
  const auto p = ModelParams::init({12, 3, 5, 2}, rng, 0.5);
  std::vector<TokenSeq> xs{seq({4, 5}), seq({6}), seq({7, 8, 9}), seq({10, 11, 4, 5})};
  const auto h = collapse_histograms(p, xs, Rng(15));
  const std::size_t m = xs.size();
  CHECK(h.p_same.size() == m);
  CHECK(h.p_cross.size() == m * (m - 1));
  CHECK(h.q_same.size() == m);
  CHECK(h.q_cross.size() == m * (m - 1));
  for (double v : h.p_same) CHECK(v <= 0);

  std::istringstream csv(h.to_csv());
  std::string line;
  std::size_t rows = 0;
  std::getline(csv, line);
  CHECK(line == "kind,value");
  while (std::getline(csv, line)) ++rows;
  CHECK(rows == 2 * (m + m * (m - 1)));

  // a collapsed model produces identical same and cross values
  const auto flat = collapse_histograms(ModelParams::zeros({12, 3, 5, 2}), xs, Rng(15), true);
  const auto flat_cross = collapse_histograms(ModelParams::zeros({12, 3, 5, 2}),
                                              std::vector<TokenSeq>{xs[0], xs[0]}, Rng(1), true);
  CHECK(flat_cross.p_same[0] == flat_cross.p_cross[0]);
  CHECK(flat.p_same.size() == m);
}

TEST_CASE("overlap coefficient") {
  std::vector<double> a{0, 1, 2, 3}, b{10, 11, 12, 13};
  CHECK(overlap_coefficient(a, a) == doctest::Approx(1.0));
  CHECK(overlap_coefficient(a, b) == 0.0);

  Rng rng(16);
  std::vector<double> x(20000), y(20000);
  for (auto& v : x) v = rng.normal();
  for (auto& v : y) v = rng.normal();
  CHECK(overlap_coefficient(x, y) > 0.95);
  const double c = overlap_coefficient(x, y);
  CHECK(overlap_coefficient(y, x) == doctest::Approx(c));
}
