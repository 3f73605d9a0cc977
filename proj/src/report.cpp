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

#include "mimlm/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "mimlm/error.hpp"

namespace mimlm {

std::string format4(double v) {
  if (std::isnan(v)) return "nan";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.4f", v);
  return buf;
}

std::string csv_quote(std::string_view field) {
  if (field.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

std::vector<std::vector<std::string>> parse_csv(std::string_view text) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string field;
  bool quoted = false, any = false;
  for (std::size_t i = 0; i < text.size(); ++i) {
    char c = text[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field += c;
      }
      continue;
    }
    if (c == '"') {
      quoted = true;
      any = true;
    } else if (c == ',') {
      row.push_back(std::move(field));
      field.clear();
      any = true;
    } else if (c == '\n' || c == '\r') {
      if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') ++i;
      if (any || !field.empty()) {
        row.push_back(std::move(field));
        rows.push_back(std::move(row));
      }
      field.clear();
      row.clear();
      any = false;
    } else {
      field += c;
      any = true;
    }
  }
  if (quoted) throw FormatError("unterminated quoted CSV field");
  if (any || !field.empty()) {
    row.push_back(std::move(field));
    rows.push_back(std::move(row));
  }
  return rows;
}

ComparisonTable emit_comparison_table(
    const std::vector<std::pair<std::string, EvalReport>>& reports) {
  if (reports.empty()) throw ConfigError("comparison table needs at least one report");
  const bool with_std = std::any_of(reports.begin(), reports.end(),
                                    [](const auto& r) { return r.second.repeats > 1; });
  std::vector<std::string> header{"model", "latent_dim", "enc_recon"};
  if (with_std) header.push_back("enc_recon_stdev");
  header.insert(header.end(), {"kl", "rand_recon"});
  if (with_std) header.push_back("rand_recon_stdev");
  header.insert(header.end(), {"bleu1", "param_count", "knn_entropy",
                               "fitted_entropy", "ratio"});

  std::vector<std::vector<std::string>> rows;
  std::vector<std::vector<std::string>> text_rows;
  text_rows.push_back({"model", "latent_dim", "enc_recon", "kl", "rand_recon", "bleu1",
                       "param_count", "knn_entropy", "fitted_entropy", "ratio"});
  for (const auto& [label, r] : reports) {
    std::vector<std::string> row{label, std::to_string(r.latent_dim), format4(r.enc_recon)};
    if (with_std) row.push_back(format4(r.enc_recon_std));
    row.push_back(format4(r.kl));
    row.push_back(format4(r.rand_recon));
    if (with_std) row.push_back(format4(r.rand_recon_std));
    row.insert(row.end(), {format4(r.bleu1), std::to_string(r.param_count),
                           format4(r.knn_entropy), format4(r.fitted_entropy),
                           format4(r.entropy_ratio)});
    rows.push_back(std::move(row));

    auto with_paren = [&](double v, double s) {
      return with_std ? format4(v) + " (" + format4(s) + ")" : format4(v);
    };
    text_rows.push_back({label, std::to_string(r.latent_dim),
                         with_paren(r.enc_recon, r.enc_recon_std), format4(r.kl),
                         with_paren(r.rand_recon, r.rand_recon_std), format4(r.bleu1),
                         std::to_string(r.param_count), format4(r.knn_entropy),
                         format4(r.fitted_entropy), format4(r.entropy_ratio)});
  }

  ComparisonTable t;
  auto csv_line = [](const std::vector<std::string>& fields) {
    std::string line;
    for (std::size_t i = 0; i < fields.size(); ++i) {
      if (i) line += ',';
      line += csv_quote(fields[i]);
    }
    return line + "\n";
  };
  t.csv = csv_line(header);
  for (const auto& row : rows) t.csv += csv_line(row);

  std::vector<std::size_t> width(text_rows.front().size(), 0);
  for (const auto& row : text_rows)
    for (std::size_t c = 0; c < row.size(); ++c) width[c] = std::max(width[c], row[c].size());
  for (const auto& row : text_rows) {
    std::string line;
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c) line += "  ";
      std::string cell = row[c];
      if (c == 0) {
        cell.resize(width[c], ' ');
      } else {
        cell.insert(0, width[c] - cell.size(), ' ');
      }
      line += cell;
    }
    while (!line.empty() && line.back() == ' ') line.pop_back();
    t.text += line + "\n";
  }
  return t;
}

}  // namespace mimlm
