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

#include "mimlm/cli.hpp"

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "mimlm/checkpoint.hpp"
#include "mimlm/config.hpp"
#include "mimlm/error.hpp"
#include "mimlm/evaluation.hpp"
#include "mimlm/latent_ops.hpp"
#include "mimlm/manifest.hpp"
#include "mimlm/qa.hpp"
#include "mimlm/report.hpp"
#include "mimlm/text.hpp"
#include "mimlm/trainer.hpp"

namespace mimlm::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

std::string joined(const std::vector<std::string>& args) {
  std::string s = "mimlm";
  for (const auto& a : args) s += " " + a;
  return s;
}

fs::path manifest_path(const fs::path& artifact) {
  return fs::path(artifact.string() + ".manifest.json");
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("write failed: " + path.string());
}

void require_file(const fs::path& path) {
  if (!fs::is_regular_file(path)) throw IoError("no such file: " + path.string());
}

void add_corpus_inputs(RunManifest& m, const fs::path& dir) {
  for (const char* name : {"train.txt", "valid.txt", "test.txt"}) {
    if (fs::is_regular_file(dir / name)) m.add_input(dir / name);
  }
}

bool deterministic(const Checkpoint& c) { return c.config.objective == Objective::kAe; }

struct Shared {
  std::vector<std::string> args;
  std::ostream& out;
  std::ostream& err;
};

// ---- vocab ----

struct VocabArgs {
  std::string data, out;
  std::optional<std::size_t> max_size;
  std::size_t min_freq = 1;
};

void run_vocab(const VocabArgs& a, Shared& s) {
  RunManifest m;
  m.command = joined(s.args);
  m.started_at = utc_timestamp();
  m.code_version = code_version();
  const fs::path train = fs::path(a.data) / "train.txt";
  require_file(train);
  const auto lines = read_lines(train);
  const auto vocab = Vocabulary::build(lines, a.max_size, a.min_freq);
  vocab.save(a.out);
  m.add_input(train);
  m.config = {{"max_size", a.max_size ? json(*a.max_size) : json(nullptr)},
              {"min_freq", a.min_freq}};
  m.finished_at = utc_timestamp();
  m.write(manifest_path(a.out));
  s.out << "vocabulary: " << vocab.size() << " tokens -> " << a.out << "\n";
}

// ---- train ----

struct TrainArgs {
  std::string config, data, out, vocab, resume, log;
  std::vector<std::string> overrides;
  std::optional<std::size_t> max_epochs;
  bool quiet = false;
};

void run_train(const TrainArgs& a, Shared& s) {
  RunManifest m;
  m.command = joined(s.args);
  m.started_at = utc_timestamp();
  m.code_version = code_version();

  const fs::path data_dir = a.data;
  const fs::path log_path = a.log.empty() ? fs::path(a.out + ".log.csv") : fs::path(a.log);
  TrainOptions options;
  if (!a.quiet) {
    options.on_epoch = [&](const EpochRecord& r) {
      s.err << "epoch " << r.epoch << " train " << format4(r.train_loss) << " valid "
            << format4(r.valid_loss) << " lr " << r.lr << "\n";
    };
  }

  TrainResult result;
  if (!a.resume.empty()) {
    require_file(a.resume);
    m.add_input(a.resume);
    Checkpoint ckpt = load_checkpoint(a.resume);
    const Corpus corpus = load_corpus(data_dir, ckpt.vocab, ckpt.config.max_len);
    add_corpus_inputs(m, data_dir);
    const std::size_t epochs = a.max_epochs.value_or(ckpt.config.max_epochs);
    result = resume(std::move(ckpt), corpus, epochs, options);
  } else {
    json j = json::object();
    std::map<std::string, std::string> source;
    if (!a.config.empty()) {
      require_file(a.config);
      j = read_config_file(a.config);
      m.add_input(a.config);
      for (const auto& [k, v] : j.items()) source[k] = "file";
    }
    // Precedence: --set flags > MIMLM_SEED > config file > defaults.
    if (const char* env = std::getenv("MIMLM_SEED"); env && *env) {
      j["seed"] = parse_scalar(env);
      source["seed"] = "MIMLM_SEED";
    }
    apply_overrides(j, a.overrides);
    for (const auto& o : a.overrides) source[o.substr(0, o.find('='))] = "flag";
    if (a.max_epochs) {
      j["max_epochs"] = *a.max_epochs;
      source["max_epochs"] = "flag";
    }
    const TrainConfig config = TrainConfig::from_json(j);
    config.validate();
    const json resolved = config.to_json();
    for (const auto& [k, v] : resolved.items()) {
      auto it = source.find(k);
      s.err << "config: " << k << "=" << (v.is_string() ? v.get<std::string>() : v.dump())
            << " (" << (it == source.end() ? "default" : it->second) << ")\n";
    }

    Vocabulary vocab;
    if (!a.vocab.empty()) {
      require_file(a.vocab);
      vocab = Vocabulary::load(a.vocab);
      m.add_input(a.vocab);
    } else {
      const fs::path train_path = data_dir / "train.txt";
      require_file(train_path);
      vocab = Vocabulary::build(read_lines(train_path), config.vocab_max_size,
                                config.vocab_min_freq);
    }
    const Corpus corpus = load_corpus(data_dir, vocab, config.max_len);
    add_corpus_inputs(m, data_dir);
    result = train(config, vocab, corpus, options);
  }

  save_checkpoint(result.checkpoint, a.out);
  write_text(log_path, epoch_log_csv(result.log));
  m.config = result.checkpoint.config.to_json();
  m.seed = result.checkpoint.config.seed;
  m.finished_at = utc_timestamp();
  m.write(manifest_path(a.out));
  s.out << "checkpoint -> " << a.out << " (epoch " << result.checkpoint.epoch
        << ", best valid " << format4(result.checkpoint.best_valid) << ")\n";
}

// ---- eval ----

struct EvalArgs {
  std::string ckpt, data, out, hist_out, label, split = "test", table_out;
  std::vector<std::string> compare;
  std::size_t repeats = 10, knn_k = 5, hist_n = 20, threads = 1;
  std::uint64_t seed = 1;
};

void run_compare(const EvalArgs& a, Shared& s) {
  RunManifest m;
  m.command = joined(s.args);
  m.started_at = utc_timestamp();
  m.code_version = code_version();
  std::vector<std::pair<std::string, EvalReport>> reports;
  for (const auto& path : a.compare) {
    require_file(path);
    std::ifstream in(path);
    json j;
    try {
      j = json::parse(in);
    } catch (const json::exception& e) {
      throw FormatError(path + ": " + e.what());
    }
    EvalReport r = EvalReport::from_json(j);
    reports.emplace_back(r.label.empty() ? fs::path(path).stem().string() : r.label, r);
    m.add_input(path);
  }
  const auto table = emit_comparison_table(reports);
  s.out << table.text;
  if (!a.out.empty()) {
    write_text(a.out, table.csv);
    m.finished_at = utc_timestamp();
    m.write(manifest_path(a.out));
  }
}

void run_eval(const EvalArgs& a, Shared& s) {
  if (!a.compare.empty()) return run_compare(a, s);
  if (a.ckpt.empty() || a.data.empty() || a.out.empty())
    throw ConfigError("eval needs --ckpt, --data and --out (or --compare)");
  RunManifest m;
  m.command = joined(s.args);
  m.started_at = utc_timestamp();
  m.code_version = code_version();
  require_file(a.ckpt);
  m.add_input(a.ckpt);
  const Checkpoint ckpt = load_checkpoint(a.ckpt);
  const Corpus corpus = load_corpus(a.data, ckpt.vocab, ckpt.config.max_len);
  add_corpus_inputs(m, a.data);

  std::span<const TokenSeq> split;
  if (a.split == "test") {
    split = corpus.test;
    if (split.empty()) {
      s.err << "warning: no test.txt, evaluating on valid.txt\n";
      split = corpus.valid;
    }
  } else if (a.split == "valid") {
    split = corpus.valid;
  } else {
    split = corpus.train;
  }
  if (split.empty()) throw IoError("evaluation split is empty");

  EvalOptions opt;
  opt.repeats = a.repeats;
  opt.knn_k = a.knn_k;
  opt.seed = a.seed;
  opt.threads = a.threads;
  opt.max_len = ckpt.config.max_len;
  const auto& params = ckpt.eval_params();
  EvalReport report = evaluate(params, ckpt.config.objective, split, opt,
                               [&](const std::string& w) { s.err << "warning: " << w << "\n"; });
  report.label = a.label.empty() ? std::string(objective_name(ckpt.config.objective)) + "(" +
                                       std::to_string(report.latent_dim) + ")"
                                 : a.label;
  write_text(a.out, report.to_json().dump(2) + "\n");

  json cfg = {{"split", a.split},   {"repeats", a.repeats}, {"knn_k", a.knn_k},
              {"threads", a.threads}, {"label", report.label}};
  if (!a.hist_out.empty()) {
    const std::size_t n = std::min(a.hist_n, split.size());
    const auto hist = collapse_histograms(params, split.first(n), Rng(a.seed).split("hist"),
                                          deterministic(ckpt));
    write_text(a.hist_out, hist.to_csv());
    cfg["hist_n"] = n;
    s.out << "same/cross overlap: " << format4(overlap_coefficient(hist.p_same, hist.p_cross))
          << "\n";
  }
  if (!a.table_out.empty()) {
    const auto table = emit_comparison_table({{report.label, report}});
    write_text(a.table_out, table.csv);
  }
  s.out << emit_comparison_table({{report.label, report}}).text;

  m.config = cfg;
  m.seed = a.seed;
  m.finished_at = utc_timestamp();
  m.write(manifest_path(a.out));
  if (!a.hist_out.empty()) m.write(manifest_path(a.hist_out));
  if (!a.table_out.empty()) m.write(manifest_path(a.table_out));
}

// ---- probes ----

struct ProbeArgs {
  std::string ckpt, a, b, json_out;
  std::vector<std::string> sentences;
  std::size_t steps = 10, n = 5;
  double sigma = kPriorSampleSigma, perturb = 10.0;
  bool greedy = false, mean = false;
  std::uint64_t seed = 1;
};

ProbeOptions probe_options(const ProbeArgs& a, const Checkpoint& c) {
  ProbeOptions o;
  o.strategy = a.greedy ? DecodeStrategy::kGreedy : DecodeStrategy::kAncestral;
  o.max_len = c.config.max_len;
  o.use_mean = a.mean || deterministic(c);
  return o;
}

Checkpoint open_checkpoint(const std::string& path) {
  require_file(path);
  return load_checkpoint(path);
}

void run_interp(const ProbeArgs& a, Shared& s) {
  RunManifest m;
  m.command = joined(s.args);
  m.started_at = utc_timestamp();
  m.code_version = code_version();
  const Checkpoint c = open_checkpoint(a.ckpt);
  const auto& vocab = c.vocab;
  Rng rng = Rng(a.seed).split("interp");
  const auto trace = interpolate(c.eval_params(), encode(a.a, vocab, c.config.max_len),
                                 encode(a.b, vocab, c.config.max_len), a.steps, rng,
                                 probe_options(a, c));
  for (const auto& step : trace.steps)
    s.out << format4(step.alpha) << "\t" << decode(step.decoded, vocab) << "\n";
  if (!a.json_out.empty()) {
    write_text(a.json_out, trace.to_json(vocab).dump(2) + "\n");
    m.add_input(a.ckpt);
    m.seed = a.seed;
    m.config = {{"steps", a.steps}, {"greedy", a.greedy}, {"mean", a.mean}};
    m.finished_at = utc_timestamp();
    m.write(manifest_path(a.json_out));
  }
}

void run_sample(const ProbeArgs& a, Shared& s) {
  const Checkpoint c = open_checkpoint(a.ckpt);
  Rng rng = Rng(a.seed).split("sample");
  const auto out = sample_prior(c.eval_params(), a.n, rng, a.sigma, probe_options(a, c));
  json lines = json::array();
  for (const auto& seq : out) {
    s.out << decode(seq, c.vocab) << "\n";
    lines.push_back(decode(seq, c.vocab));
  }
  if (!a.json_out.empty()) {
    RunManifest m;
    m.command = joined(s.args);
    m.started_at = utc_timestamp();
    m.code_version = code_version();
    write_text(a.json_out, json{{"sigma", a.sigma}, {"samples", lines}}.dump(2) + "\n");
    m.add_input(a.ckpt);
    m.seed = a.seed;
    m.config = {{"n", a.n}, {"sigma", a.sigma}, {"greedy", a.greedy}};
    m.finished_at = utc_timestamp();
    m.write(manifest_path(a.json_out));
  }
}

void run_recon(const ProbeArgs& a, Shared& s) {
  const Checkpoint c = open_checkpoint(a.ckpt);
  const auto options = probe_options(a, c);
  Rng root = Rng(a.seed).split("recon");
  json all = json::array();
  for (std::size_t i = 0; i < a.sentences.size(); ++i) {
    const TokenSeq x = encode(a.sentences[i], c.vocab, c.config.max_len);
    Rng rng = root.split(i);
    const auto r = reconstruct_modes(c.eval_params(), x, rng, options, a.perturb);
    s.out << "input:     " << decode(x, c.vocab) << "\n"
          << "mean:      " << decode(r.mean, c.vocab) << "\n"
          << "sample:    " << decode(r.sample, c.vocab) << "\n"
          << "perturbed: " << decode(r.perturbed, c.vocab) << "\n";
    all.push_back({{"input", decode(x, c.vocab)},
                   {"mean", decode(r.mean, c.vocab)},
                   {"sample", decode(r.sample, c.vocab)},
                   {"perturbed", decode(r.perturbed, c.vocab)}});
  }
  if (!a.json_out.empty()) {
    RunManifest m;
    m.command = joined(s.args);
    m.started_at = utc_timestamp();
    m.code_version = code_version();
    write_text(a.json_out, all.dump(2) + "\n");
    m.add_input(a.ckpt);
    m.seed = a.seed;
    m.config = {{"perturb", a.perturb}, {"greedy", a.greedy}};
    m.finished_at = utc_timestamp();
    m.write(manifest_path(a.json_out));
  }
}

// ---- qa ----

struct QaArgs {
  std::string ckpt, items, out, question, sigma_reduction = "l2";
  std::size_t len = 5;
  bool mean = false, unit_sigma = false, log_density = false;
  std::uint64_t seed = 1;
};

void run_qa_rank(const QaArgs& a, Shared& s) {
  RunManifest m;
  m.command = joined(s.args);
  m.started_at = utc_timestamp();
  m.code_version = code_version();
  const Checkpoint c = open_checkpoint(a.ckpt);
  require_file(a.items);
  const auto items = load_qa_items(a.items, c.vocab, c.config.max_len);
  QAOptions o;
  o.use_mean = a.mean || deterministic(c);
  o.unit_sigma = a.unit_sigma || deterministic(c);
  o.reduction = a.sigma_reduction == "mean" ? SigmaReduction::kMean : SigmaReduction::kL2Norm;
  o.log_density_score = a.log_density;
  const auto result = rank_and_metrics(c.eval_params(), items, question_mark_id(c.vocab),
                                       Rng(a.seed).split("qa"), o);
  write_text(a.out, result.to_json().dump(2) + "\n");
  s.out << "items " << items.size() << "  P@1 " << format4(result.p_at_1) << "  MRR "
        << format4(result.mrr) << "\n";
  m.add_input(a.ckpt);
  m.add_input(a.items);
  m.seed = a.seed;
  m.config = {{"mean", o.use_mean},
              {"unit_sigma", o.unit_sigma},
              {"sigma_reduction", a.sigma_reduction},
              {"log_density", a.log_density}};
  m.finished_at = utc_timestamp();
  m.write(manifest_path(a.out));
}

void run_qa_answer(const QaArgs& a, Shared& s) {
  const Checkpoint c = open_checkpoint(a.ckpt);
  Rng rng = Rng(a.seed).split("answer");
  const auto answer = generate_answer(c.eval_params(), encode(a.question, c.vocab, c.config.max_len),
                                      a.len, question_mark_id(c.vocab), rng, c.config.max_len);
  s.out << decode(answer, c.vocab) << "\n";
}

}  // namespace

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Sentence auto-encoders with mutual-information learning", "mimlm"};
  app.set_version_flag("--version", code_version());
  app.require_subcommand(1);
  Shared shared{args, out, err};

  VocabArgs va;
  auto* vocab = app.add_subcommand("vocab", "Build a vocabulary from <data>/train.txt");
  vocab->add_option("--data", va.data, "Corpus directory")->required();
  vocab->add_option("--out", va.out, "Output vocabulary JSON")->required();
  vocab->add_option("--max-size", va.max_size, "Keep the most frequent N words");
  vocab->add_option("--min-freq", va.min_freq, "Drop words seen fewer times")
      ->check(CLI::PositiveNumber);

  TrainArgs ta;
  auto* trainc = app.add_subcommand("train", "Train a model");
  trainc->add_option("--config", ta.config, "JSON or key=value config file");
  trainc->add_option("--data", ta.data, "Corpus directory")->required();
  trainc->add_option("--out", ta.out, "Output checkpoint")->required();
  trainc->add_option("--vocab", ta.vocab, "Vocabulary JSON from `vocab`");
  trainc->add_option("--set", ta.overrides, "key=value override (repeatable)");
  trainc->add_option("--resume", ta.resume, "Continue from this checkpoint");
  trainc->add_option("--max-epochs", ta.max_epochs, "Total epochs");
  trainc->add_option("--log", ta.log, "Epoch log CSV (default <out>.log.csv)");
  trainc->add_flag("--quiet", ta.quiet, "No per-epoch progress");

  EvalArgs ea;
  auto* evalc = app.add_subcommand("eval", "Evaluate a checkpoint or tabulate reports");
  evalc->add_option("--ckpt", ea.ckpt, "Checkpoint");
  evalc->add_option("--data", ea.data, "Corpus directory");
  evalc->add_option("--out", ea.out, "Report JSON (table CSV with --compare)");
  evalc->add_option("--hist-out", ea.hist_out, "Same/cross likelihood CSV");
  evalc->add_option("--hist-n", ea.hist_n, "Sentences used for --hist-out");
  evalc->add_option("--label", ea.label, "Model label in tables");
  evalc->add_option("--split", ea.split, "Sentences to evaluate")
      ->check(CLI::IsMember({"test", "valid", "train"}));
  evalc->add_option("--repeats", ea.repeats, "Sampling repeats")->check(CLI::PositiveNumber);
  evalc->add_option("--knn-k", ea.knn_k, "Neighbour rank for the entropy estimate")
      ->check(CLI::PositiveNumber);
  evalc->add_option("--seed", ea.seed, "Evaluation seed");
  evalc->add_option("--threads", ea.threads, "Worker threads")->check(CLI::PositiveNumber);
  evalc->add_option("--table-out", ea.table_out, "Single-row comparison CSV");
  evalc->add_option("--compare", ea.compare, "Report JSON files to tabulate");

  ProbeArgs pa;
  auto add_probe_common = [&](CLI::App* c) {
    c->add_option("--ckpt", pa.ckpt, "Checkpoint")->required();
    c->add_option("--json", pa.json_out, "JSON output");
    c->add_option("--seed", pa.seed, "Sampling seed");
    c->add_flag("--greedy", pa.greedy, "Greedy instead of ancestral decoding");
    c->add_flag("--mean", pa.mean, "Use posterior means");
  };
  auto* interp = app.add_subcommand("interp", "Decode along a line between two codes");
  add_probe_common(interp);
  interp->add_option("--a", pa.a, "First sentence")->required();
  interp->add_option("--b", pa.b, "Second sentence")->required();
  interp->add_option("--steps", pa.steps, "Number of points")->check(CLI::Range(2, 1000000));
  auto* sample = app.add_subcommand("sample", "Decode codes drawn from N(0, sigma^2 I)");
  add_probe_common(sample);
  sample->add_option("--n", pa.n, "Number of samples");
  sample->add_option("--sigma", pa.sigma, "Prior scale")->check(CLI::PositiveNumber);
  auto* recon = app.add_subcommand("recon", "Mean, sample and perturbed reconstructions");
  add_probe_common(recon);
  recon->add_option("--sentence", pa.sentences, "Input sentence (repeatable)")->required();
  recon->add_option("--perturb", pa.perturb, "Std multiplier for the perturbed mode")
      ->check(CLI::PositiveNumber);

  QaArgs qa_args;
  auto* qa = app.add_subcommand("qa", "Question answering");
  qa->require_subcommand(1);
  auto* rank = qa->add_subcommand("rank", "Rank candidate answers");
  rank->add_option("--ckpt", qa_args.ckpt, "Checkpoint")->required();
  rank->add_option("--items", qa_args.items, "JSONL items")->required();
  rank->add_option("--out", qa_args.out, "Result JSON")->required();
  rank->add_option("--seed", qa_args.seed, "Sampling seed");
  rank->add_flag("--mean", qa_args.mean, "Use posterior means");
  rank->add_flag("--unit-sigma", qa_args.unit_sigma, "Plain Euclidean distance");
  rank->add_flag("--log-density", qa_args.log_density, "Score by -log q(z_k | unk pair)");
  rank->add_option("--sigma-reduction", qa_args.sigma_reduction, "l2 or mean")
      ->check(CLI::IsMember({"l2", "mean"}));
  auto* answer = qa->add_subcommand("answer", "Generate an answer greedily");
  answer->add_option("--ckpt", qa_args.ckpt, "Checkpoint")->required();
  answer->add_option("--question", qa_args.question, "Question text")->required();
  answer->add_option("--len", qa_args.len, "Number of <UNK> answer slots (5, 10, 15)")
      ->check(CLI::PositiveNumber);
  answer->add_option("--seed", qa_args.seed, "Seed");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (vocab->parsed()) run_vocab(va, shared);
    else if (trainc->parsed()) run_train(ta, shared);
    else if (evalc->parsed()) run_eval(ea, shared);
    else if (interp->parsed()) run_interp(pa, shared);
    else if (sample->parsed()) run_sample(pa, shared);
    else if (recon->parsed()) run_recon(pa, shared);
    else if (rank->parsed()) run_qa_rank(qa_args, shared);
    else if (answer->parsed()) run_qa_answer(qa_args, shared);
  } catch (const IoError& e) {
    err << "I/O error: " << e.what() << "\n";
    return kIo;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kConfig;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kOther;
  }
  return kOk;
}

int dispatch(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return dispatch(args, std::cout, std::cerr);
}

}  // namespace mimlm::cli
