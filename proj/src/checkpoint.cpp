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

#include "mimlm/checkpoint.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "mimlm/error.hpp"

namespace mimlm {
namespace {

constexpr char kMagic[8] = {'M', 'I', 'M', 'L', 'M', 'C', 'K', 'P'};

using UInt = std::conditional_t<sizeof(Real) == 8, std::uint64_t, std::uint32_t>;

template <typename U>
void put_le(std::string& out, U v) {
  for (std::size_t i = 0; i < sizeof(U); ++i)
    out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

template <typename U>
U get_le(std::string_view in, std::size_t pos) {
  U v = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i)
    v |= static_cast<U>(static_cast<unsigned char>(in[pos + i])) << (8 * i);
  return v;
}

struct Entry {
  std::string name;
  Shape shape;
  std::vector<Real> data;
};

void add_params(std::vector<Entry>& out, const std::string& prefix,
                const ModelParams& p) {
  for (const auto& [name, t] : p.named())
    out.push_back({prefix + name, t->shape(), t->values()});
}

void read_params(const std::vector<Entry>& in, const std::string& prefix,
                 ModelParams& p) {
  for (auto& [name, t] : p.named()) {
    const std::string full = prefix + name;
    auto it = std::find_if(in.begin(), in.end(),
                           [&](const Entry& e) { return e.name == full; });
    if (it == in.end()) throw FormatError("checkpoint lacks tensor " + full);
    if (it->shape != t->shape()) {
      throw FormatError("checkpoint tensor " + full + " has shape " +
                        shape_string(it->shape) + ", expected " +
                        shape_string(t->shape()));
    }
    *t = Tensor(it->shape, it->data);
  }
}

nlohmann::json dims_json(const ModelDims& d) {
  nlohmann::json j = {{"vocab", d.vocab}, {"embed", d.embed}, {"hidden", d.hidden},
                      {"latent", d.latent}};
  if (d.log_sigma_floor) j["log_sigma_floor"] = *d.log_sigma_floor;
  return j;
}

}  // namespace

std::string serialize_checkpoint(const Checkpoint& c) {
  std::vector<Entry> entries;
  add_params(entries, "param/", c.params);
  if (c.best_params) add_params(entries, "best/", *c.best_params);
  const auto names = c.params.named();
  if (!c.adam.m.empty()) {
    for (std::size_t i = 0; i < names.size(); ++i) {
      entries.push_back({"adam_m/" + names[i].first, names[i].second->shape(),
                         c.adam.m.at(i)});
      entries.push_back({"adam_v/" + names[i].first, names[i].second->shape(),
                         c.adam.v.at(i)});
    }
  }
  entries.push_back({"scalars", {2},
                     {static_cast<Real>(c.best_valid), static_cast<Real>(c.lr)}});

  nlohmann::json header;
  header["format_version"] = kCheckpointVersion;
  header["real_bytes"] = sizeof(Real);
  header["config"] = c.config.to_json();
  header["vocab"] = c.vocab.tokens();
  header["dims"] = dims_json(c.params.dims);
  header["counters"] = {{"step", c.step},
                        {"epoch", c.epoch},
                        {"adam_t", c.adam.t},
                        {"plateau_bad_epochs", c.plateau_bad_epochs}};
  nlohmann::json table = nlohmann::json::array();
  std::size_t offset = 0;
  for (const Entry& e : entries) {
    table.push_back({{"name", e.name},
                     {"shape", e.shape},
                     {"offset", offset},
                     {"count", e.data.size()}});
    offset += e.data.size() * sizeof(Real);
  }
  header["tensors"] = table;
  const std::string head = header.dump();

  std::string out(kMagic, sizeof(kMagic));
  put_le<std::uint32_t>(out, kCheckpointVersion);
  put_le<std::uint64_t>(out, head.size());
  out += head;
  out.reserve(out.size() + offset);
  for (const Entry& e : entries) {
    for (Real v : e.data) put_le<UInt>(out, std::bit_cast<UInt>(v));
  }
  return out;
}

Checkpoint deserialize_checkpoint(std::string_view bytes) {
  constexpr std::size_t kPrefix = sizeof(kMagic) + 4 + 8;
  if (bytes.size() < kPrefix || std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) != 0) {
    throw FormatError("not a checkpoint (bad magic)");
  }
  const auto version = get_le<std::uint32_t>(bytes, sizeof(kMagic));
  if (version != kCheckpointVersion) {
    throw FormatError("unsupported checkpoint version " + std::to_string(version));
  }
  const auto head_len = get_le<std::uint64_t>(bytes, sizeof(kMagic) + 4);
  if (bytes.size() < kPrefix + head_len) throw FormatError("truncated checkpoint header");
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(bytes.substr(kPrefix, head_len));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("checkpoint header: ") + e.what());
  }
  if (header.at("real_bytes").get<std::size_t>() != sizeof(Real)) {
    throw FormatError("checkpoint precision differs from this build");
  }
  const std::string_view payload = bytes.substr(kPrefix + head_len);

  std::vector<Entry> entries;
  for (const auto& t : header.at("tensors")) {
    Entry e;
    e.name = t.at("name").get<std::string>();
    e.shape = t.at("shape").get<Shape>();
    const auto offset = t.at("offset").get<std::size_t>();
    const auto count = t.at("count").get<std::size_t>();
    if (count != shape_size(e.shape) || offset + count * sizeof(Real) > payload.size()) {
      throw FormatError("checkpoint tensor " + e.name + " is inconsistent");
    }
    e.data.resize(count);
    for (std::size_t i = 0; i < count; ++i)
      e.data[i] = std::bit_cast<Real>(get_le<UInt>(payload, offset + i * sizeof(Real)));
    entries.push_back(std::move(e));
  }
  auto has = [&](const std::string& name) {
    return std::any_of(entries.begin(), entries.end(),
                       [&](const Entry& e) { return e.name == name; });
  };
  auto find = [&](const std::string& name) -> const Entry& {
    for (const Entry& e : entries)
      if (e.name == name) return e;
    throw FormatError("checkpoint lacks tensor " + name);
  };

  Checkpoint c;
  c.config = TrainConfig::from_json(header.at("config"));
  c.vocab = Vocabulary::from_tokens(header.at("vocab").get<std::vector<std::string>>());
  const auto& dj = header.at("dims");
  ModelDims dims{dj.at("vocab").get<std::size_t>(), dj.at("embed").get<std::size_t>(),
                 dj.at("hidden").get<std::size_t>(), dj.at("latent").get<std::size_t>(), {}};
  if (dj.contains("log_sigma_floor"))
    dims.log_sigma_floor = dj.at("log_sigma_floor").get<double>();
  c.params = ModelParams::zeros(dims);
  read_params(entries, "param/", c.params);
  if (has("best/embed")) {
    c.best_params = ModelParams::zeros(dims);
    read_params(entries, "best/", *c.best_params);
  }
  const auto names = c.params.named();
  if (has("adam_m/embed")) {
    for (const auto& [name, t] : names) {
      c.adam.m.push_back(find("adam_m/" + name).data);
      c.adam.v.push_back(find("adam_v/" + name).data);
    }
  }
  const auto& counters = header.at("counters");
  c.step = counters.at("step").get<std::size_t>();
  c.epoch = counters.at("epoch").get<std::size_t>();
  c.adam.t = counters.at("adam_t").get<std::int64_t>();
  c.plateau_bad_epochs = counters.at("plateau_bad_epochs").get<std::size_t>();
  const Entry& scalars = find("scalars");
  if (scalars.data.size() != 2) throw FormatError("checkpoint scalars malformed");
  c.best_valid = scalars.data[0];
  c.lr = scalars.data[1];
  return c;
}

void save_checkpoint(const Checkpoint& c, const std::filesystem::path& path) {
  const std::string bytes = serialize_checkpoint(c);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write checkpoint " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("failed writing checkpoint " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return deserialize_checkpoint(ss.str());
}

}  // namespace mimlm
