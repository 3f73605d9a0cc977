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

#include "mimlm/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "mimlm/error.hpp"

namespace mimlm {
namespace {

std::string trim(std::string_view s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return std::string(s.substr(a, b - a));
}

template <typename T>
T get_field(const nlohmann::json& j, const char* key) {
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError("config field '" + std::string(key) + "' has the wrong type");
  }
}

std::size_t get_count(const nlohmann::json& j, const char* key) {
  const auto& v = j.at(key);
  if (v.is_number_integer() && v.get<std::int64_t>() >= 0) {
    return v.get<std::size_t>();
  }
  if (v.is_number_float() && v.get<double>() >= 0 &&
      v.get<double>() == static_cast<double>(static_cast<std::size_t>(v.get<double>()))) {
    return static_cast<std::size_t>(v.get<double>());
  }
  throw ConfigError("config field '" + std::string(key) +
                    "' must be a non-negative integer");
}

}  // namespace

double TrainConfig::effective_lr() const {
  if (lr) return *lr;
  return optimizer == OptimizerKind::kAdam ? 1e-3 : 5.0;
}

double TrainConfig::effective_clip() const {
  if (clip_l2) return *clip_l2;
  return optimizer == OptimizerKind::kSgd ? 0.25 : 0.0;
}

void TrainConfig::validate() const {
  auto fail = [](const std::string& field, const std::string& why) {
    throw ConfigError("invalid " + field + ": " + why);
  };
  if (latent_dim < 1) fail("latent_dim", "must be >= 1");
  if (embed_dim < 1) fail("embed_dim", "must be >= 1");
  if (hidden_dim < 1) fail("hidden_dim", "must be >= 1");
  if (batch_size < 1) fail("batch_size", "must be >= 1");
  if (!(effective_lr() > 0)) fail("lr", "must be positive");
  if (effective_clip() < 0) fail("clip_l2", "must be non-negative");
  if (plateau_patience < 1) fail("plateau_patience", "must be >= 1");
  if (!(lr_decay > 0 && lr_decay <= 1)) fail("lr_decay", "must lie in (0, 1]");
  if (!(dropout >= 0 && dropout < 1)) fail("dropout", "must lie in [0, 1)");
  if (!(unk_corrupt_rate >= 0 && unk_corrupt_rate < 1)) {
    fail("unk_corrupt_rate", "must lie in [0, 1)");
  }
  if (max_len < 1) fail("max_len", "must be >= 1");
  if (kl_anneal_steps < 1) fail("kl_anneal_steps", "must be >= 1");
  if (!(init_scale > 0)) fail("init_scale", "must be positive");
  if (vocab_min_freq < 1) fail("vocab_min_freq", "must be >= 1");
  if (log_sigma_floor && !std::isfinite(*log_sigma_floor))
    fail("log_sigma_floor", "must be finite");
}

nlohmann::json TrainConfig::to_json() const {
  nlohmann::json j;
  j["objective"] = std::string(objective_name(objective));
  j["latent_dim"] = latent_dim;
  j["embed_dim"] = embed_dim;
  j["hidden_dim"] = hidden_dim;
  j["batch_size"] = batch_size;
  j["optimizer"] = optimizer == OptimizerKind::kAdam ? "adam" : "sgd";
  j["lr"] = effective_lr();
  j["clip_l2"] = effective_clip();
  j["plateau_patience"] = plateau_patience;
  j["lr_decay"] = lr_decay;
  j["max_epochs"] = max_epochs;
  j["seed"] = seed;
  j["dropout"] = dropout;
  j["unk_corrupt_rate"] = unk_corrupt_rate;
  j["max_len"] = max_len;
  j["kl_anneal_steps"] = kl_anneal_steps;
  j["bucket_window"] = bucket_window;
  j["init_scale"] = init_scale;
  j["log_sigma_floor"] =
      log_sigma_floor ? nlohmann::json(*log_sigma_floor) : nlohmann::json(nullptr);
  j["vocab_max_size"] =
      vocab_max_size ? nlohmann::json(*vocab_max_size) : nlohmann::json(nullptr);
  j["vocab_min_freq"] = vocab_min_freq;
  return j;
}

TrainConfig TrainConfig::from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("config must be an object");
  static const std::set<std::string> known = {
      "objective",     "latent_dim",     "embed_dim",        "hidden_dim",
      "batch_size",    "optimizer",      "lr",               "clip_l2",
      "plateau_patience", "lr_decay",    "max_epochs",       "seed",
      "dropout",       "unk_corrupt_rate", "max_len",        "kl_anneal_steps",
      "bucket_window", "init_scale",     "vocab_max_size",   "vocab_min_freq",
      "log_sigma_floor"};
  for (const auto& [key, value] : j.items()) {
    if (!known.count(key)) throw ConfigError("unknown config field '" + key + "'");
  }
  TrainConfig c;
  if (j.contains("objective"))
    c.objective = parse_objective(get_field<std::string>(j, "objective"));
  if (j.contains("latent_dim")) c.latent_dim = get_count(j, "latent_dim");
  if (j.contains("embed_dim")) c.embed_dim = get_count(j, "embed_dim");
  if (j.contains("hidden_dim")) c.hidden_dim = get_count(j, "hidden_dim");
  if (j.contains("batch_size")) c.batch_size = get_count(j, "batch_size");
  if (j.contains("optimizer")) {
    auto name = get_field<std::string>(j, "optimizer");
    if (name == "adam") c.optimizer = OptimizerKind::kAdam;
    else if (name == "sgd") c.optimizer = OptimizerKind::kSgd;
    else throw ConfigError("invalid optimizer: must be adam or sgd, got '" + name + "'");
  }
  if (j.contains("lr") && !j["lr"].is_null()) c.lr = get_field<double>(j, "lr");
  if (j.contains("clip_l2") && !j["clip_l2"].is_null())
    c.clip_l2 = get_field<double>(j, "clip_l2");
  if (j.contains("plateau_patience"))
    c.plateau_patience = get_count(j, "plateau_patience");
  if (j.contains("lr_decay")) c.lr_decay = get_field<double>(j, "lr_decay");
  if (j.contains("max_epochs")) c.max_epochs = get_count(j, "max_epochs");
  if (j.contains("seed")) c.seed = get_count(j, "seed");
  if (j.contains("dropout")) c.dropout = get_field<double>(j, "dropout");
  if (j.contains("unk_corrupt_rate"))
    c.unk_corrupt_rate = get_field<double>(j, "unk_corrupt_rate");
  if (j.contains("max_len")) c.max_len = get_count(j, "max_len");
  if (j.contains("kl_anneal_steps"))
    c.kl_anneal_steps = get_count(j, "kl_anneal_steps");
  if (j.contains("bucket_window")) c.bucket_window = get_count(j, "bucket_window");
  if (j.contains("init_scale")) c.init_scale = get_field<double>(j, "init_scale");
  if (j.contains("log_sigma_floor") && !j["log_sigma_floor"].is_null())
    c.log_sigma_floor = get_field<double>(j, "log_sigma_floor");
  if (j.contains("vocab_max_size") && !j["vocab_max_size"].is_null())
    c.vocab_max_size = get_count(j, "vocab_max_size");
  if (j.contains("vocab_min_freq"))
    c.vocab_min_freq = get_count(j, "vocab_min_freq");
  c.validate();
  return c;
}

nlohmann::json parse_scalar(std::string_view text) {
  std::string t = trim(text);
  if (t.empty()) return std::string();
  try {
    nlohmann::json v = nlohmann::json::parse(t);
    if (v.is_primitive()) return v;
  } catch (const nlohmann::json::exception&) {
  }
  return t;
}

nlohmann::json parse_config_text(std::string_view text) {
  std::string first = trim(text);
  if (!first.empty() && first.front() == '{') {
    try {
      return nlohmann::json::parse(first);
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError(std::string("config JSON: ") + e.what());
    }
  }
  nlohmann::json j = nlohmann::json::object();
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    std::string t = trim(line);
    if (t.empty()) continue;
    if (t.front() == '[') continue;  // section headers carry no meaning
    auto eq = t.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(lineno) +
                        ": expected key = value");
    }
    j[trim(std::string_view(t).substr(0, eq))] =
        parse_scalar(std::string_view(t).substr(eq + 1));
  }
  return j;
}

nlohmann::json read_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

void apply_overrides(nlohmann::json& j, std::span<const std::string> overrides) {
  for (const std::string& o : overrides) {
    auto eq = o.find('=');
    if (eq == std::string::npos || eq == 0) {
      throw ConfigError("override '" + o + "' must look like key=value");
    }
    j[trim(std::string_view(o).substr(0, eq))] =
        parse_scalar(std::string_view(o).substr(eq + 1));
  }
}

}  // namespace mimlm
