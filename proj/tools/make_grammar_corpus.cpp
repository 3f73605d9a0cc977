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

// Writes a synthetic grammar corpus (train/valid/test) for quick experiments.
#include <iostream>

#include "CLI11.hpp"
#include "mimlm/synthetic.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Synthetic grammar corpus", "make_grammar_corpus"};
  std::string out;
  std::size_t n_train = 500, n_valid = 50, n_test = 100;
  std::uint64_t seed = 1;
  app.add_option("--out", out, "Output directory")->required();
  app.add_option("--train", n_train, "Training sentences");
  app.add_option("--valid", n_valid, "Validation sentences");
  app.add_option("--test", n_test, "Test sentences");
  app.add_option("--seed", seed, "Seed");
  CLI11_PARSE(app, argc, argv);
  try {
    mimlm::write_corpus(mimlm::grammar_corpus(n_train, n_valid, n_test, seed), out);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
