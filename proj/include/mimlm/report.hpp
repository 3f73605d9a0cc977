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

#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "mimlm/evaluation.hpp"

namespace mimlm {

struct ComparisonTable {
  std::string csv;
  std::string text;
};

// One row per report.  Numbers carry 4 decimals; stdev columns appear only
// when some report averaged more than one repeat.
ComparisonTable emit_comparison_table(
    const std::vector<std::pair<std::string, EvalReport>>& reports);

// Four-decimal fixed formatting used by every table.
std::string format4(double v);

// RFC-4180 quoting and parsing.
std::string csv_quote(std::string_view field);
std::vector<std::vector<std::string>> parse_csv(std::string_view text);

}  // namespace mimlm
