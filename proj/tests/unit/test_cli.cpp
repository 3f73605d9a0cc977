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

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "doctest.h"
#include "json.hpp"
#include "mimlm/checkpoint.hpp"
#include "mimlm/cli.hpp"
#include "mimlm/error.hpp"
#include "mimlm/manifest.hpp"
#include "mimlm/report.hpp"
#include "mimlm/synthetic.hpp"

using namespace mimlm;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out, err;
};

Run run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli::dispatch(args, out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
  auto dir = fs::temp_directory_path() / ("mimlm_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

fs::path tiny_corpus(const std::string& name) {
  auto dir = scratch(name);
  write_corpus(grammar_corpus(30, 6, 6, 2), dir / "data");
  std::ofstream(dir / "cfg.txt") << "# tiny\nobjective = mim\nlatent_dim = 2\nembed_dim = 4\n"
                                    "hidden_dim = 8\nbatch_size = 5\nmax_epochs = 2\n";
  return dir;
}

EvalReport report(double enc, std::size_t repeats) {
  EvalReport r;
  r.objective = "mim";
  r.latent_dim = 16;
  r.param_count = 1234;
  r.enc_recon = enc;
  r.enc_recon_std = 0.125;
  r.rand_recon = 40.5;
  r.rand_recon_std = 0.5;
  r.kl = 3.25;
  r.bleu1 = 0.6789;
  r.knn_entropy = 10;
  r.fitted_entropy = 20;
  r.entropy_ratio = 0.5;
  r.repeats = repeats;
  return r;
}

}  // namespace

TEST_CASE("help exits cleanly") {
  const auto r = run({"--help"});
  CHECK(r.code == cli::kOk);
  CHECK(r.out.find("train") != std::string::npos);
  CHECK(run({"train", "--help"}).code == cli::kOk);
}

TEST_CASE("usage errors") {
  CHECK(run({}).code == cli::kUsage);
  CHECK(run({"frobnicate"}).code == cli::kUsage);
  CHECK(run({"vocab", "--data", "x", "--out", "y", "--bogus"}).code == cli::kUsage);
  CHECK(run({"train", "--data", "x"}).code == cli::kUsage);
}

TEST_CASE("missing input is an I/O error") {
  auto dir = scratch("missing");
  const auto r = run({"vocab", "--data", (dir / "nope").string(), "--out", (dir / "v.json").string()});
  CHECK(r.code == cli::kIo);
  CHECK(!r.err.empty());
  CHECK(run({"eval", "--ckpt", (dir / "nope.ckpt").string(), "--data", dir.string(), "--out",
             (dir / "r.json").string()})
            .code == cli::kIo);
}

TEST_CASE("config violations exit 4 and name the field") {
  auto dir = tiny_corpus("config");
  const auto r = run({"train", "--config", (dir / "cfg.txt").string(), "--data",
                      (dir / "data").string(), "--out", (dir / "m.ckpt").string(), "--set",
                      "latent_dim=0", "--quiet"});
  CHECK(r.code == cli::kConfig);
  CHECK(r.err.find("latent_dim") != std::string::npos);
  CHECK(run({"train", "--config", (dir / "cfg.txt").string(), "--data", (dir / "data").string(),
             "--out", (dir / "m.ckpt").string(), "--set", "no_such_key=1", "--quiet"})
            .code == cli::kConfig);
}

TEST_CASE("vocab then train then eval pipeline") {
  auto dir = tiny_corpus("pipeline");
  const auto data = (dir / "data").string();
  const auto vocab = (dir / "v.json").string();
  const auto ckpt = (dir / "m.ckpt").string();
  REQUIRE(run({"vocab", "--data", data, "--out", vocab}).code == cli::kOk);
  CHECK(fs::exists(vocab + ".manifest.json"));
  const auto t = run({"train", "--config", (dir / "cfg.txt").string(), "--data", data, "--vocab",
                      vocab, "--out", ckpt, "--quiet"});
  REQUIRE(t.code == cli::kOk);
  CHECK(load_checkpoint(ckpt).vocab == Vocabulary::load(vocab));
  CHECK(fs::exists(ckpt + ".log.csv"));

  const auto m = nlohmann::json::parse(slurp(ckpt + ".manifest.json"));
  CHECK(m.at("command").get<std::string>().rfind("mimlm train ", 0) == 0);
  CHECK(m.at("config").at("latent_dim") == 2);
  CHECK(m.at("inputs").size() >= 2);
  for (const auto& [path, digest] : m.at("inputs").items())
    CHECK(digest == sha256_file(path));

  // the same command again gives a byte-identical checkpoint
  const auto ckpt2 = (dir / "m2.ckpt").string();
  REQUIRE(run({"train", "--config", (dir / "cfg.txt").string(), "--data", data, "--vocab", vocab,
               "--out", ckpt2, "--quiet"})
              .code == cli::kOk);
  CHECK(slurp(ckpt) == slurp(ckpt2));
  CHECK(slurp(ckpt + ".log.csv") == slurp(ckpt2 + ".log.csv"));

  const auto report_path = (dir / "r.json").string();
  const auto e = run({"eval", "--ckpt", ckpt, "--data", data, "--out", report_path, "--repeats",
                      "2", "--knn-k", "2", "--hist-out", (dir / "h.csv").string(), "--hist-n",
                      "4"});
  REQUIRE(e.code == cli::kOk);
  CHECK(e.out.find("enc_recon") != std::string::npos);
  CHECK(e.out.find("same/cross overlap") != std::string::npos);
  const auto rep = EvalReport::from_json(nlohmann::json::parse(slurp(report_path)));
  CHECK(rep.n_sentences == 6);
  CHECK(fs::exists(report_path + ".manifest.json"));
  CHECK(fs::exists(dir / "h.csv"));

  const auto table = (dir / "table.csv").string();
  CHECK(run({"eval", "--compare", report_path, report_path, "--out", table}).code == cli::kOk);
  CHECK(parse_csv(slurp(table)).size() == 3);

  CHECK(run({"sample", "--ckpt", ckpt, "--n", "3"}).code == cli::kOk);
  CHECK(run({"recon", "--ckpt", ckpt, "--sentence", "the cat saw a dog"}).code == cli::kOk);
  const auto line = grammar_corpus(30, 6, 6, 2).train[0];
  const auto trace = (dir / "interp.json").string();
  CHECK(run({"interp", "--ckpt", ckpt, "--a", line, "--b", line, "--steps", "3", "--json", trace})
            .code == cli::kOk);
  CHECK(nlohmann::json::parse(slurp(trace)).at("steps").size() == 3);
}

TEST_CASE("flags override the environment and the file") {
  auto dir = tiny_corpus("precedence");
  const auto data = (dir / "data").string();
  const auto ckpt = (dir / "m.ckpt").string();
  const auto r = run({"train", "--config", (dir / "cfg.txt").string(), "--data", data, "--out",
                      ckpt, "--set", "latent_dim=3", "--set", "seed=9", "--max-epochs", "1",
                      "--quiet"});
  REQUIRE(r.code == cli::kOk);
  const auto c = load_checkpoint(ckpt);
  CHECK(c.config.latent_dim == 3);
  CHECK(c.config.embed_dim == 4);
  CHECK(c.config.seed == 9);
  CHECK(c.config.max_epochs == 1);
  CHECK(r.err.find("latent_dim=3 (flag)") != std::string::npos);
  CHECK(r.err.find("embed_dim=4 (file)") != std::string::npos);
}

TEST_CASE("comparison table shape") {
  const auto one = emit_comparison_table({{"mim", report(12.5, 1)}});
  const auto rows = parse_csv(one.csv);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0] == std::vector<std::string>{"model", "latent_dim", "enc_recon", "kl",
                                            "rand_recon", "bleu1", "param_count", "knn_entropy",
                                            "fitted_entropy", "ratio"});
  CHECK(rows[1][0] == "mim");
  CHECK(rows[1][2] == "12.5000");
  std::size_t lines = 0;
  for (char ch : one.text) lines += ch == '\n';
  CHECK(lines == 2);

  const auto many = emit_comparison_table({{"a", report(1, 10)}, {"b", report(2, 1)}});
  const auto mrows = parse_csv(many.csv);
  CHECK(mrows[0][3] == "enc_recon_stdev");
  CHECK(mrows[0][6] == "rand_recon_stdev");
  CHECK(mrows[1][3] == "0.1250");
  CHECK(many.text.find("(0.1250)") != std::string::npos);

  CHECK_THROWS_AS(emit_comparison_table({}), ConfigError);
}

TEST_CASE("table csv round trip") {
  const auto t = emit_comparison_table({{"mim, \"tiny\"", report(3.14159, 3)}, {"ae", report(2, 3)}});
  const auto rows = parse_csv(t.csv);
  REQUIRE(rows.size() == 3);
  CHECK(rows[1][0] == "mim, \"tiny\"");
  CHECK(std::stod(rows[1][2]) == doctest::Approx(3.1416));
  CHECK(std::stoul(rows[1][8]) == 1234);
}

TEST_CASE("formatting helpers") {
  CHECK(format4(0.5) == "0.5000");
  CHECK(format4(-14.70301653) == "-14.7030");
  CHECK(format4(std::nan("")) == "nan");
  CHECK(csv_quote("plain") == "plain");
  CHECK(csv_quote("a,b") == "\"a,b\"");
  CHECK(csv_quote("say \"hi\"") == "\"say \"\"hi\"\"\"");
  CHECK(parse_csv("a,\"b,c\"\n\"x\"\"y\",z\n") ==
        std::vector<std::vector<std::string>>{{"a", "b,c"}, {"x\"y", "z"}});
  CHECK_THROWS_AS(parse_csv("\"open"), FormatError);
}

TEST_CASE("sha256 and manifests") {
  CHECK(sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  auto dir = scratch("manifest");
  std::ofstream(dir / "in.txt") << "abc";
  CHECK(sha256_file(dir / "in.txt") == sha256_hex("abc"));
  CHECK_THROWS_AS(sha256_file(dir / "none.txt"), IoError);

  RunManifest m;
  m.command = "mimlm eval";
  m.code_version = code_version();
  m.seed = 7;
  m.started_at = utc_timestamp();
  m.add_input(dir / "in.txt");
  m.finished_at = utc_timestamp();
  m.write(dir / "m.json");
  const auto j = nlohmann::json::parse(slurp(dir / "m.json"));
  CHECK(j.at("seed") == 7);
  CHECK(j.at("code_version") == std::string(code_version()));
  CHECK(j.at("started_at").get<std::string>().back() == 'Z');
  CHECK(j.at("inputs").begin().value() == sha256_hex("abc"));
}

TEST_CASE("grammar corpus") {
  const auto a = grammar_corpus(200, 20, 40, 5);
  CHECK(a.train.size() == 200);
  CHECK(a.valid.size() == 20);
  CHECK(a.test.size() == 40);
  std::set<std::string> all(a.train.begin(), a.train.end());
  all.insert(a.valid.begin(), a.valid.end());
  all.insert(a.test.begin(), a.test.end());
  CHECK(all.size() == 260);
  for (const auto& s : a.train) {
    std::istringstream in(s);
    std::size_t n = 0;
    for (std::string w; in >> w;) ++n;
    CHECK(n >= 5);
    CHECK(n <= 11);
  }
  CHECK(grammar_corpus(200, 20, 40, 5).train == a.train);
  CHECK(grammar_corpus(200, 20, 40, 6).train != a.train);
}
